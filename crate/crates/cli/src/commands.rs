//! One function per subcommand. Each writes its tables before reporting a
//! fault, so partial results survive a nonzero exit.

use std::fs;
use std::path::{Path, PathBuf};

use cpe_core::analysis::EnergyReport;
use cpe_core::analysis::experiments::{continuous_dependence, epsilon_sweep};
use cpe_core::analysis::inequality::inequality_sample;
use cpe_core::analysis::mms::mms_run;
use cpe_core::integrators::{advance, choose_steps, picard_trajectory, rk4_trajectory, trajectory_distance, RunResult};
use cpe_core::io::{fmt_f64, load_config, read_snapshot, write_snapshot, Cell, CsvTable, RunConfig};
use cpe_core::{CpeError, Result};

pub struct Context {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub quiet: bool,
}

impl Context {
    pub fn new(config: Option<&Path>, out: &Path, seed: Option<u64>, quiet: bool) -> Result<Self> {
        let path = config.ok_or_else(|| CpeError::UsageFault("this subcommand needs --config PATH".into()))?;
        let mut cfg = load_config(path)?;
        if let Some(s) = seed {
            cfg = cfg.with_seed(s);
        }
        fs::create_dir_all(out)?;
        Ok(Self {
            cfg,
            out: out.to_path_buf(),
            quiet,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }
}

fn write_run_tables(ctx: &Context, res: &RunResult) -> Result<()> {
    let mut t = CsvTable::new(EnergyReport::CSV_HEADER);
    for r in &res.reports {
        t.push_raw(r.csv_row());
    }
    t.write(&ctx.path("run.csv"))?;
    if ctx.cfg.run.continuity {
        let mut c = CsvTable::new("t,continuity_residual");
        for &(time, r) in &res.continuity {
            c.push(&[Cell::F(time), Cell::F(r)]);
        }
        c.write(&ctx.path("continuity.csv"))?;
    }
    Ok(())
}

pub fn run(ctx: &Context) -> Result<()> {
    let cfg = &ctx.cfg;
    let (u0, t0) = cfg.initial_state()?;
    let res = match advance(&u0, &cfg.params, &cfg.run) {
        Ok(r) => r,
        Err(f) => {
            write_run_tables(ctx, &f.partial)?;
            return Err(f.error);
        }
    };
    write_run_tables(ctx, &res)?;
    let params = match cfg.run.epsilon {
        Some(e) => cfg.params.with_epsilon(e)?,
        None => cfg.params,
    };
    write_snapshot(&ctx.path("final.cpe"), &res.state, t0 + res.t, &params)?;
    for w in &res.warnings {
        log::warn!("{w}");
    }
    ctx.say(format!("steps = {}  dt = {}", res.steps, fmt_f64(res.dt)));
    if let (Some(first), Some(last)) = (res.reports.first(), res.reports.last()) {
        ctx.say(format!("E: {} -> {}", fmt_f64(first.energy), fmt_f64(last.energy)));
        ctx.say(format!("relative mass drift = {}", fmt_f64((last.mass - first.mass).abs() / first.mass)));
        let wall = res.reports.iter().map(|r| r.w_wall).fold(0.0, f64::max);
        let mean = res.reports.iter().map(|r| r.phi_mean).fold(0.0, f64::max);
        ctx.say(format!("max |w| at walls = {}  max |avg phi| = {}", fmt_f64(wall), fmt_f64(mean)));
        if wall > cfg.tol_bc || mean > cfg.tol_bc {
            log::warn!("boundary defects exceed tol_bc = {:e}", cfg.tol_bc);
        }
    }
    Ok(())
}

pub fn mms(ctx: &Context) -> Result<()> {
    let m = &ctx.cfg.mms;
    let table = mms_run(&m.case.to_string(), &m.resolutions, &m.dts, m.t_final, &ctx.cfg.params)?;
    let mut t = CsvTable::new("case,n,dt,steps,error");
    let case = table.case.to_string();
    for r in &table.rows {
        t.push(&[Cell::S(&case), Cell::I(r.n as u64), Cell::F(r.dt), Cell::I(r.steps as u64), Cell::F(r.error)]);
    }
    t.write(&ctx.path("mms.csv"))?;
    for &n in &m.resolutions {
        ctx.say(format!("n = {n}: temporal orders {:?}", table.temporal_orders(n, &m.dts)));
    }
    for &dt in &m.dts {
        ctx.say(format!("dt = {dt:e}: spatial error ratios {:?}", table.spatial_ratios(&m.resolutions, dt)));
    }
    Ok(())
}

pub fn eps_sweep(ctx: &Context) -> Result<()> {
    let cfg = &ctx.cfg;
    let (u0, _) = cfg.initial_state()?;
    let sweep = epsilon_sweep(&u0, &cfg.params, cfg.eps_sweep.t_final, &cfg.eps_sweep.eps_list)?;
    let mut t = CsvTable::new("epsilon,delta");
    for r in &sweep.rows {
        t.push(&[Cell::F(r.epsilon), Cell::F(r.delta)]);
    }
    t.write(&ctx.path("eps_sweep.csv"))?;
    ctx.say(format!("steps = {}  dt = {}", sweep.steps, fmt_f64(sweep.dt)));
    ctx.say(format!("strictly decreasing: {}", sweep.strictly_decreasing()));
    if let Ok(s) = sweep.slope() {
        ctx.say(format!("log-log slope = {s:.3}"));
    }
    Ok(())
}

pub fn perturb(ctx: &Context) -> Result<()> {
    let cfg = &ctx.cfg;
    let (u0, _) = cfg.initial_state()?;
    let dir = cfg.perturbation()?;
    let table = continuous_dependence(&u0, &dir, &cfg.perturb.deltas, cfg.perturb.t_final, &cfg.params, cfg.run.dt)?;
    let mut t = CsvTable::new("delta,distance,ratio,dissipation");
    for r in &table.rows {
        t.push(&[Cell::F(r.delta), Cell::F(r.distance), Cell::F(r.ratio), Cell::F(r.dissipation)]);
    }
    t.write(&ctx.path("perturb.csv"))?;
    ctx.say(format!("steps = {}  dt = {}", table.steps, fmt_f64(table.dt)));
    ctx.say(format!("ratio spread = {:.4}", table.ratio_spread()));
    if let Ok(s) = table.dissipation_slope() {
        ctx.say(format!("dissipation log-log slope = {s:.3}"));
    }
    Ok(())
}

fn picard_table(deltas: &[f64]) -> CsvTable {
    let mut t = CsvTable::new("sweep,delta,ratio");
    for (k, &d) in deltas.iter().enumerate() {
        let ratio = if k == 0 { String::new() } else { fmt_f64(d / deltas[k - 1]) };
        t.push_raw(format!("{},{},{}", k + 1, fmt_f64(d), ratio));
    }
    t
}

pub fn picard(ctx: &Context) -> Result<()> {
    let cfg = &ctx.cfg;
    let (u0, _) = cfg.initial_state()?;
    let pc = &cfg.picard;
    let (traj, report) = match picard_trajectory(&u0, &cfg.params, pc.t_final, &pc.options) {
        Ok(r) => r,
        Err(CpeError::NoContraction { deltas, ratios }) => {
            picard_table(&deltas).write(&ctx.path("picard.csv"))?;
            return Err(CpeError::NoContraction { deltas, ratios });
        }
        Err(e) => return Err(e),
    };
    picard_table(&report.deltas).write(&ctx.path("picard.csv"))?;
    ctx.say(format!("sweeps = {}  steps = {}  dt = {}", report.iterations, report.steps, fmt_f64(report.dt)));
    if !report.converged {
        return Err(CpeError::NoContraction {
            deltas: report.deltas,
            ratios: report.ratios,
        });
    }
    let (steps, dt) = choose_steps(&u0, &cfg.params, pc.t_final, pc.options.dt)?;
    let direct = rk4_trajectory(&u0, &cfg.params, steps, dt, pc.options.floors)?;
    ctx.say(format!("distance to direct RK4 = {}", fmt_f64(trajectory_distance(&traj, &direct)?)));
    Ok(())
}

pub fn ineq_lab(ctx: &Context) -> Result<()> {
    let cfg = &ctx.cfg;
    let q = &cfg.ineq;
    let mut summary = CsvTable::new("kind,band,trials,max_ratio,mean_ratio");
    let mut hist = CsvTable::new("band,bin_lo,bin_hi,count");
    let kind = q.kind.to_string();
    for &band in &q.bands {
        let st = inequality_sample(q.kind, &q.exponents, q.trials, band, cfg.seed)?;
        let mut t = CsvTable::new("trial,alpha,lhs,rhs,ratio");
        for s in &st.samples {
            let alpha = format!("{}{}{}", s.alpha[0], s.alpha[1], s.alpha[2]);
            t.push(&[Cell::I(s.trial as u64), Cell::S(&alpha), Cell::F(s.lhs), Cell::F(s.rhs), Cell::F(s.ratio)]);
        }
        t.write(&ctx.path(&format!("ineq_band{band}.csv")))?;
        summary.push(&[
            Cell::S(&kind),
            Cell::I(band as u64),
            Cell::I(q.trials as u64),
            Cell::F(st.max_ratio),
            Cell::F(st.mean_ratio),
        ]);
        for (i, &c) in st.histogram.counts.iter().enumerate() {
            hist.push(&[
                Cell::I(band as u64),
                Cell::F(st.histogram.edges[i]),
                Cell::F(st.histogram.edges[i + 1]),
                Cell::I(c as u64),
            ]);
        }
        ctx.say(format!("{kind} band {band}: max ratio {}  mean {}", fmt_f64(st.max_ratio), fmt_f64(st.mean_ratio)));
    }
    summary.write(&ctx.path("ineq_summary.csv"))?;
    hist.write(&ctx.path("ineq_histogram.csv"))?;
    Ok(())
}

pub fn inspect(path: &Path, quiet: bool) -> Result<()> {
    let (h, state) = read_snapshot(path)?;
    if quiet {
        return Ok(());
    }
    println!("magic = CPE1");
    println!("version = {}", h.version);
    println!("nx = {}", h.nx);
    println!("ny = {}", h.ny);
    println!("nz = {}", h.nz);
    println!("time = {}", fmt_f64(h.time));
    println!("gamma = {}", fmt_f64(h.gamma));
    println!("mu = {}", fmt_f64(h.mu));
    println!("lambda = {}", fmt_f64(h.lambda));
    println!("kappa = {}", fmt_f64(h.kappa));
    println!("R = {}", fmt_f64(h.gas_constant));
    println!("epsilon = {}", fmt_f64(h.epsilon));
    println!("min_sigma = {}", fmt_f64(state.sigma.min()));
    println!("min_p = {}", fmt_f64(state.p.min()));
    Ok(())
}
