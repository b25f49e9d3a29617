//! Time integration of the full system: the direct RK4 path and the Picard
//! iteration of the frozen-coefficient solution map.

use log::{debug, warn};

use crate::analysis::energy::{dissipation_rates, energy_report, EnergyReport, RunningSums};
use crate::analysis::norms::SobolevNorm;
use crate::diagnostics::{continuity_residual, vertical_velocity};
use crate::error::{CpeError, Result};
use crate::field::{State, VectorField3D2C};
use crate::parabolic::{
    advance_staged, advance_surface, even_extend, resolve_steps, restrict, Coefficient, DtPolicy, ExtendedField,
    StageTerms,
};
use crate::params::PhysParams;
use crate::tendencies::{appendix_sources_with, regularized_tendency_with, AppendixSources, FaultFloors, StateTendency};

/// Safety factor of [`stable_dt`].
pub const C_CFL: f64 = 1.0;

/// Largest growth of the nodal norm tolerated over one step.
pub const GROWTH_LIMIT: f64 = 10.0;

/// RK4 stage offsets as fractions of the step.
const STAGE_C: [f64; 4] = [0.0, 0.5, 0.5, 1.0];

/// Explicit step bound combining diffusion, regularization and advection.
pub fn stable_dt(state: &State, params: &PhysParams) -> Result<f64> {
    let smin = state.sigma.min();
    if !(smin > 0.0) {
        return Err(CpeError::SigmaPositivityLost { min: smin });
    }
    let g = state.grid();
    let smax = state.sigma.max();
    let w = vertical_velocity(&state.sigma, &state.v, &state.p, params)?;
    let kz = g.kz_max();
    let kh = g.kx_max().max(g.ky_max());
    let rate = params.mu() * smax * g.k2_max()
        + (params.mu() + params.lambda()) * smax * g.kh2_max()
        + params.nu() * smax * kz * kz
        + params.epsilon() * g.kh2_max()
        + state.v.max_abs() * kh
        + w.max_abs() * kz;
    Ok(C_CFL / rate)
}

/// Step selection for the nonlinear integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    /// `stable_dt` of the initial state, shrunk to divide `T` evenly.
    Auto,
    /// `stable_dt` rescaled to the given CFL number, shrunk to divide `T`.
    Cfl(f64),
    /// Largest uniform step not exceeding the value.
    Fixed(f64),
    /// Exactly this many uniform steps.
    Steps(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub t_final: f64,
    pub dt: TimeStep,
    /// Overrides the regularization of the parameter set when present.
    pub epsilon: Option<f64>,
    pub record_every: usize,
    pub floors: FaultFloors,
    /// Record an [`EnergyReport`] series.
    pub energy: bool,
    /// Record the continuity residual at every record step.
    pub continuity: bool,
}

impl RunOptions {
    pub fn new(t_final: f64) -> Self {
        Self {
            t_final,
            dt: TimeStep::Auto,
            epsilon: None,
            record_every: 1,
            floors: FaultFloors::default(),
            energy: true,
            continuity: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(CpeError::constraint("T_final", "must be positive and finite"));
        }
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(CpeError::constraint("dt", "must be positive"));
            }
        }
        if let TimeStep::Cfl(c) = self.dt {
            if !(c > 0.0 && c.is_finite()) {
                return Err(CpeError::constraint("C_cfl", "must be positive"));
            }
        }
        if self.record_every == 0 {
            return Err(CpeError::constraint("record_every", "must be at least 1"));
        }
        Ok(())
    }
}

/// Uniform `(steps, dt)` for a run from `state`.
pub fn choose_steps(state: &State, params: &PhysParams, t_final: f64, dt: TimeStep) -> Result<(usize, f64)> {
    match dt {
        TimeStep::Auto => {
            let h = stable_dt(state, params)?;
            resolve_steps(t_final, h, DtPolicy::Fixed(h))
        }
        TimeStep::Cfl(c) => {
            let h = c / C_CFL * stable_dt(state, params)?;
            resolve_steps(t_final, h, DtPolicy::Fixed(h))
        }
        TimeStep::Fixed(h) => resolve_steps(t_final, h, DtPolicy::Fixed(h)),
        TimeStep::Steps(n) => resolve_steps(t_final, f64::INFINITY, DtPolicy::Steps(n)),
    }
}

/// Outcome of a completed (or partially completed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub state: State,
    pub t: f64,
    /// Steps actually taken.
    pub steps_done: usize,
    /// Steps planned.
    pub steps: usize,
    pub dt: f64,
    pub reports: Vec<EnergyReport>,
    /// `(t, sup |continuity residual|)` at record steps.
    pub continuity: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

/// A run that stopped on a fault; `partial` holds everything up to the last
/// completed step.
#[derive(Debug)]
pub struct RunFailure {
    pub error: CpeError,
    pub partial: Box<RunResult>,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} steps, t = {:e})", self.error, self.partial.steps_done, self.partial.t)
    }
}

impl std::error::Error for RunFailure {}

impl From<RunFailure> for CpeError {
    fn from(f: RunFailure) -> Self {
        f.error
    }
}

/// `base + h k`.
pub fn state_axpy(base: &State, h: f64, k: &StateTendency) -> State {
    let mut out = base.clone();
    out.v.axpy(h, &k.dv);
    out.sigma.axpy(h, &k.dsigma);
    out.p.axpy(h, &k.dp);
    out
}

fn add_forcing(k: &mut StateTendency, f: &StateTendency) {
    k.dv.axpy(1.0, &f.dv);
    k.dsigma.axpy(1.0, &f.dsigma);
    k.dp.axpy(1.0, &f.dp);
}

/// External forcing evaluated at a stage time.
pub type Forcing<'a> = dyn FnMut(f64) -> Result<Option<StateTendency>> + 'a;

/// One classical RK4 step of the regularized system; `observe` sees the four
/// stage states in order.
pub fn rk4_step(
    state: &State,
    t: f64,
    dt: f64,
    params: &PhysParams,
    floors: FaultFloors,
    forcing: &mut Forcing<'_>,
    observe: &mut dyn FnMut(&State),
) -> Result<State> {
    let mut ks: Vec<StateTendency> = Vec::with_capacity(4);
    for (s, c) in STAGE_C.iter().enumerate() {
        let y = if s == 0 { state.clone() } else { state_axpy(state, c * dt, &ks[s - 1]) };
        observe(&y);
        let mut k = regularized_tendency_with(&y, params, floors)?;
        if let Some(f) = forcing(t + c * dt)? {
            add_forcing(&mut k, &f);
        }
        ks.push(k);
    }
    let mut out = state.clone();
    for (k, w) in ks.iter().zip([1.0, 2.0, 2.0, 1.0]) {
        out.v.axpy(w * dt / 6.0, &k.dv);
        out.sigma.axpy(w * dt / 6.0, &k.dsigma);
        out.p.axpy(w * dt / 6.0, &k.dp);
    }
    out.check_finite()?;
    Ok(out)
}

/// Advances the regularized system with RK4.
pub fn advance(state: &State, params: &PhysParams, opts: &RunOptions) -> std::result::Result<RunResult, RunFailure> {
    advance_forced(state, params, opts, &mut |_| Ok(None))
}

/// [`advance`] with an additive forcing evaluated at every stage time.
pub fn advance_forced(
    state: &State,
    params: &PhysParams,
    opts: &RunOptions,
    forcing: &mut Forcing<'_>,
) -> std::result::Result<RunResult, RunFailure> {
    let mut res = RunResult {
        state: state.clone(),
        t: 0.0,
        steps_done: 0,
        steps: 0,
        dt: 0.0,
        reports: Vec::new(),
        continuity: Vec::new(),
        warnings: Vec::new(),
    };
    match run_loop(&mut res, params, opts, forcing) {
        Ok(()) => Ok(res),
        Err(error) => Err(RunFailure {
            error,
            partial: Box::new(res),
        }),
    }
}

fn run_loop(res: &mut RunResult, params: &PhysParams, opts: &RunOptions, forcing: &mut Forcing<'_>) -> Result<()> {
    opts.validate()?;
    let params = match opts.epsilon {
        Some(e) => params.with_epsilon(e)?,
        None => *params,
    };
    res.state.check_finite()?;
    let (steps, dt) = choose_steps(&res.state, &params, opts.t_final, opts.dt)?;
    res.steps = steps;
    res.dt = dt;
    debug!("advance: {steps} steps of {dt:e}");
    let mut sums = RunningSums::default();
    let mut rates = if opts.energy { dissipation_rates(&res.state)? } else { (0.0, 0.0) };
    let record = |res: &mut RunResult, sums: RunningSums| -> Result<()> {
        if opts.energy {
            res.reports.push(energy_report(&res.state, &params, res.t, sums)?);
        }
        if opts.continuity {
            let k = regularized_tendency_with(&res.state, &params, opts.floors)?;
            res.continuity.push((res.t, continuity_residual(&res.state, &k.dsigma, &params)?));
        }
        Ok(())
    };
    record(res, sums)?;
    let (mut warned_sigma, mut warned_p) = (false, false);
    for n in 0..steps {
        let old = res.state.nodal_norm();
        let next = rk4_step(&res.state, res.t, dt, &params, opts.floors, forcing, &mut |_| {})?;
        let new = next.nodal_norm();
        if new > GROWTH_LIMIT * old && new > 1e-300 {
            return Err(CpeError::StabilityFault {
                step: n,
                growth: new / old,
            });
        }
        res.state = next;
        res.steps_done = n + 1;
        res.t = if n + 1 == steps { opts.t_final } else { (n + 1) as f64 * dt };
        let smin = res.state.sigma.min();
        if !warned_sigma && smin < 0.5 * params.sigma_floor() {
            warned_sigma = true;
            let msg = format!("min sigma {smin:e} fell below half its floor at t = {:e}", res.t);
            warn!("{msg}");
            res.warnings.push(msg);
        }
        let pmin = res.state.p.min();
        if !warned_p && pmin < 0.5 * params.p_floor() {
            warned_p = true;
            let msg = format!("min p {pmin:e} fell below half its floor at t = {:e}", res.t);
            warn!("{msg}");
            res.warnings.push(msg);
        }
        if opts.energy {
            let r = dissipation_rates(&res.state)?;
            sums.accumulate(dt, rates, r);
            rates = r;
        }
        if (n + 1) % opts.record_every == 0 || n + 1 == steps {
            record(res, sums)?;
        }
    }
    Ok(())
}

/// Every RK4 stage state of a direct run followed by the final state; entry
/// `4 n + s` is stage `s` of step `n`.
pub fn rk4_trajectory(state: &State, params: &PhysParams, steps: usize, dt: f64, floors: FaultFloors) -> Result<Vec<State>> {
    let mut traj = Vec::with_capacity(4 * steps + 1);
    let mut u = state.clone();
    for n in 0..steps {
        u = rk4_step(&u, n as f64 * dt, dt, params, floors, &mut |_| Ok(None), &mut |y| traj.push(y.clone()))?;
    }
    traj.push(u);
    Ok(traj)
}

/// `max_j (||dv_j||^2_{H^3} + ||dsigma_j||^2_{H^3} + ||dp_j||^2_{H^3})^(1/2)`
/// over paired trajectory entries.
pub fn trajectory_distance(a: &[State], b: &[State]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(CpeError::usage("trajectories have different lengths"));
    }
    let mut d: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        let dv = x.v.sub(&y.v).sobolev_norm_sq(3)?;
        let ds = x.sigma.sub(&y.sigma).sobolev_norm_sq(3)?;
        let dp = x.p.sub(&y.p).sobolev_norm_sq(3)?;
        d = d.max((dv + ds + dp).sqrt());
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub dt: TimeStep,
    pub floors: FaultFloors,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 30,
            dt: TimeStep::Auto,
            floors: FaultFloors::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardReport {
    /// `d_k` = distance between iterates `k + 1` and `k`.
    pub deltas: Vec<f64>,
    /// `d_{k+1} / d_k`.
    pub ratios: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub steps: usize,
    pub dt: f64,
}

/// Consecutive non-contracting sweeps that abort the iteration.
pub const NO_CONTRACTION_RUN: usize = 3;

fn extend_v(v: &VectorField3D2C) -> Result<Vec<ExtendedField>> {
    Ok(vec![even_extend(&v.x)?, even_extend(&v.y)?])
}

/// One application of the solution map to a stage trajectory.
fn picard_sweep(
    u0: &State,
    old: &[State],
    params: &PhysParams,
    t_final: f64,
    steps: usize,
    floors: FaultFloors,
) -> Result<Vec<State>> {
    let sources: Vec<AppendixSources> = old[..4 * steps]
        .iter()
        .map(|s| appendix_sources_with(s, params, floors))
        .collect::<Result<_>>()?;
    let (mu, lambda, nu, eps) = (params.mu(), params.lambda(), params.nu(), params.epsilon());
    let idx = |step: usize, stage: usize| 4 * step + stage;

    let mut v_stages: Vec<VectorField3D2C> = Vec::with_capacity(4 * steps + 1);
    let v_final = advance_staged(
        &extend_v(&u0.v)?,
        t_final,
        steps,
        mu * floors.sigma,
        &mut |n: usize, s: usize| -> Result<StageTerms> {
            let sig = &old[idx(n, s)].sigma;
            Ok(StageTerms {
                a: Coefficient::Field(even_extend(&sig.scaled(mu))?),
                b: Coefficient::Field(even_extend(&sig.scaled(mu + lambda))?),
                cz: Coefficient::Zero,
                eh: Coefficient::Zero,
                forcing: Some(extend_v(&sources[idx(n, s)].n1)?),
            })
        },
        &mut |_, _, u| {
            v_stages.push(VectorField3D2C::new(restrict(&u[0])?, restrict(&u[1])?));
            Ok(())
        },
    )?;
    v_stages.push(VectorField3D2C::new(restrict(&v_final.u[0])?, restrict(&v_final.u[1])?));

    let mut s_stages = Vec::with_capacity(4 * steps + 1);
    let s_final = advance_staged(
        &[even_extend(&u0.sigma)?],
        t_final,
        steps,
        0.0,
        &mut |n: usize, s: usize| -> Result<StageTerms> {
            Ok(StageTerms {
                a: Coefficient::Zero,
                b: Coefficient::Zero,
                cz: Coefficient::Field(even_extend(&old[idx(n, s)].sigma.scaled(nu))?),
                eh: Coefficient::Constant(eps),
                forcing: Some(vec![even_extend(&sources[idx(n, s)].n2)?]),
            })
        },
        &mut |_, _, u| {
            s_stages.push(restrict(&u[0])?);
            Ok(())
        },
    )?;
    s_stages.push(restrict(&s_final.u[0])?);

    let mut p_stages = Vec::with_capacity(4 * steps + 1);
    let p_final = advance_surface(
        &u0.p,
        eps,
        t_final,
        steps,
        &mut |n, s| Ok(Some(sources[idx(n, s)].n3.clone())),
        &mut |_, _, p| {
            p_stages.push(p.clone());
            Ok(())
        },
    )?;
    p_stages.push(p_final);

    v_stages
        .into_iter()
        .zip(s_stages)
        .zip(p_stages)
        .map(|((v, sigma), p)| State::new(v, sigma, p))
        .collect()
}

/// Iterates the frozen-coefficient solution map from the constant-in-time
/// trajectory of `u0` until successive trajectories agree to `tol`.
///
/// The inner linear problems use the same RK4 stages as [`advance`], so the
/// fixed point is the direct RK4 trajectory.
pub fn picard_solve(u0: &State, params: &PhysParams, t_final: f64, opts: &PicardOptions) -> Result<(State, PicardReport)> {
    let (traj, report) = picard_trajectory(u0, params, t_final, opts)?;
    Ok((traj.last().expect("nonempty trajectory").clone(), report))
}

/// [`picard_solve`] returning the whole stage trajectory of the last iterate.
pub fn picard_trajectory(
    u0: &State,
    params: &PhysParams,
    t_final: f64,
    opts: &PicardOptions,
) -> Result<(Vec<State>, PicardReport)> {
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(CpeError::constraint("picard", "tol must be > 0 and max_iter >= 1"));
    }
    u0.check_finite()?;
    let (steps, dt) = choose_steps(u0, params, t_final, opts.dt)?;
    let mut report = PicardReport {
        deltas: Vec::new(),
        ratios: Vec::new(),
        converged: false,
        iterations: 0,
        steps,
        dt,
    };
    let mut current = vec![u0.clone(); 4 * steps + 1];
    let mut stalled = 0;
    for k in 0..opts.max_iter {
        let next = picard_sweep(u0, &current, params, t_final, steps, opts.floors)?;
        let d = trajectory_distance(&next, &current)?;
        current = next;
        report.iterations = k + 1;
        if let Some(&prev) = report.deltas.last() {
            let r = d / prev;
            report.ratios.push(r);
            stalled = if r >= 1.0 { stalled + 1 } else { 0 };
        }
        report.deltas.push(d);
        debug!("picard sweep {}: d = {d:e}", k + 1);
        if d <= opts.tol {
            report.converged = true;
            break;
        }
        if stalled >= NO_CONTRACTION_RUN {
            return Err(CpeError::NoContraction {
                deltas: report.deltas.clone(),
                ratios: report.ratios.clone(),
            });
        }
    }
    Ok((current, report))
}
