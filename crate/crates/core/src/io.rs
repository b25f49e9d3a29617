//! Run configuration, binary snapshots, and CSV formatting.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::analysis::inequality::{Exponents, InequalityKind};
use crate::analysis::mms::MmsCase;
use crate::diagnostics::TOL_BC;
use crate::error::{CpeError, Result};
use crate::field::{Parity, ScalarField2D, ScalarField3D, State, VectorField3D2C};
use crate::grid::Grid;
use crate::initial::{smooth_random, InitialCondition};
use crate::integrators::{PicardOptions, RunOptions, TimeStep, C_CFL};
use crate::params::PhysParams;
use crate::tendencies::FaultFloors;

/// Where the initial state comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Family(InitialCondition),
    Snapshot(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsSweepConfig {
    pub t_final: f64,
    pub eps_list: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbConfig {
    pub t_final: f64,
    pub deltas: Vec<f64>,
    /// Band limit of the seeded perturbation direction.
    pub band: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmsConfig {
    pub case: MmsCase,
    pub resolutions: Vec<usize>,
    pub dts: Vec<f64>,
    pub t_final: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IneqConfig {
    pub kind: InequalityKind,
    pub exponents: Exponents,
    pub trials: usize,
    pub bands: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardConfig {
    pub t_final: f64,
    pub options: PicardOptions,
}

/// A validated configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub grid: Grid,
    pub params: PhysParams,
    pub initial: InitialSpec,
    pub run: RunOptions,
    pub tol_bc: f64,
    pub picard: PicardConfig,
    pub eps_sweep: EpsSweepConfig,
    pub perturb: PerturbConfig,
    pub mms: MmsConfig,
    pub ineq: IneqConfig,
}

/// Typed access to one TOML section that remembers which keys were read.
struct Section<'a> {
    name: &'static str,
    table: Option<&'a toml::Table>,
    used: BTreeSet<&'static str>,
}

impl<'a> Section<'a> {
    fn new(root: &'a toml::Table, name: &'static str) -> Result<Self> {
        let table = match root.get(name) {
            None => None,
            Some(toml::Value::Table(t)) => Some(t),
            Some(_) => return Err(CpeError::parse(name, "expected a section")),
        };
        Ok(Self {
            name,
            table,
            used: BTreeSet::new(),
        })
    }

    fn key(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn get(&mut self, key: &'static str) -> Option<&'a toml::Value> {
        self.used.insert(key);
        self.table.and_then(|t| t.get(key))
    }

    fn f64_value(&self, key: &str, v: &toml::Value) -> Result<f64> {
        match v {
            toml::Value::Float(x) => Ok(*x),
            toml::Value::Integer(i) => Ok(*i as f64),
            toml::Value::String(s) if s == "inf" => Ok(f64::INFINITY),
            _ => Err(CpeError::parse(&self.key(key), "expected a number")),
        }
    }

    fn f64(&mut self, key: &'static str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => self.f64_value(key, v),
        }
    }

    fn usize(&mut self, key: &'static str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(toml::Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
            Some(_) => Err(CpeError::parse(&self.key(key), "expected a non-negative integer")),
        }
    }

    fn bool(&mut self, key: &'static str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some(toml::Value::Boolean(b)) => Ok(*b),
            Some(_) => Err(CpeError::parse(&self.key(key), "expected true or false")),
        }
    }

    fn string(&mut self, key: &'static str) -> Result<Option<&'a str>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(CpeError::parse(&self.key(key), "expected a string")),
        }
    }

    fn list(&mut self, key: &'static str) -> Result<Option<&'a Vec<toml::Value>>> {
        match self.get(key) {
            None => Ok(None),
            Some(toml::Value::Array(a)) => Ok(Some(a)),
            Some(_) => Err(CpeError::parse(&self.key(key), "expected an array")),
        }
    }

    fn f64_list(&mut self, key: &'static str, default: &[f64]) -> Result<Vec<f64>> {
        match self.list(key)? {
            None => Ok(default.to_vec()),
            Some(a) => a.iter().map(|v| self.f64_value(key, v)).collect(),
        }
    }

    fn usize_list(&mut self, key: &'static str, default: &[usize]) -> Result<Vec<usize>> {
        match self.list(key)? {
            None => Ok(default.to_vec()),
            Some(a) => a
                .iter()
                .map(|v| match v {
                    toml::Value::Integer(i) if *i >= 0 => Ok(*i as usize),
                    _ => Err(CpeError::parse(&self.key(key), "expected non-negative integers")),
                })
                .collect(),
        }
    }

    /// Rejects keys that were never read.
    fn finish(self) -> Result<()> {
        if let Some(t) = self.table {
            if let Some(k) = t.keys().find(|k| !self.used.contains(k.as_str())) {
                return Err(CpeError::parse(&self.key(k), "unknown key"));
            }
        }
        Ok(())
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CpeError::constraint(key, format!("must be positive and finite (got {v})")))
    }
}

fn prefixed(prefix: &str, e: CpeError) -> CpeError {
    match e {
        CpeError::ConstraintFault { key, reason } => CpeError::ConstraintFault {
            key: format!("{prefix}.{key}"),
            reason,
        },
        other => other,
    }
}

const SECTIONS: [&str; 10] = [
    "grid", "physics", "initial", "run", "picard", "eps_sweep", "perturb", "mms", "ineq", "seed",
];

impl RunConfig {
    /// Parses configuration text; every field has a default.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let root: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            CpeError::parse("<file>", e.message().to_string())
        })?;
        if let Some(k) = root.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
            return Err(CpeError::parse(k, "unknown section or key"));
        }
        let seed = match root.get("seed") {
            None => 0,
            Some(toml::Value::Integer(i)) if *i >= 0 => *i as u64,
            Some(_) => return Err(CpeError::parse("seed", "expected a non-negative integer")),
        };

        let mut s = Section::new(&root, "grid")?;
        let n = s.usize("n", 16)?;
        let grid = Grid::new(s.usize("nx", n)?, s.usize("ny", n)?, s.usize("nz", n)?).map_err(|e| prefixed("grid", e))?;
        s.finish()?;

        let mut s = Section::new(&root, "physics")?;
        let params = PhysParams::new(
            s.f64("gamma", 1.4)?,
            s.f64("mu", 1.0)?,
            s.f64("lambda", 0.0)?,
            s.f64("kappa", 1.0)?,
            s.f64("R", 1.0)?,
            s.f64("epsilon", 0.0)?,
            s.f64("sigma_floor", 0.5)?,
            s.f64("p_floor", 0.5)?,
        )
        .map_err(|e| prefixed("physics", e))?;
        s.finish()?;

        let mut s = Section::new(&root, "initial")?;
        let family = s.string("family")?.unwrap_or("constant");
        let initial = match family {
            "constant" => {
                let v = s.f64_list("v", &[0.0, 0.0])?;
                if v.len() != 2 {
                    return Err(CpeError::constraint("initial.v", "needs two components"));
                }
                InitialSpec::Family(InitialCondition::Constant {
                    v: [v[0], v[1]],
                    sigma: positive("initial.sigma", s.f64("sigma", 1.0)?)?,
                    p: positive("initial.p", s.f64("p", 1.0)?)?,
                })
            }
            "example-A" => InitialSpec::Family(InitialCondition::ExampleA {
                amplitude: s.f64("amplitude", 1.0)?,
            }),
            "smooth-random" => InitialSpec::Family(InitialCondition::SmoothRandom {
                amplitude: s.f64("amplitude", 0.1)?,
                band: s.usize("band", 2)?,
                seed,
            }),
            "snapshot" => {
                let path = s
                    .string("path")?
                    .ok_or_else(|| CpeError::constraint("initial.path", "required for the snapshot family"))?;
                let path = base_dir.join(path);
                if !path.is_file() {
                    return Err(CpeError::constraint("initial.path", format!("{} does not exist", path.display())));
                }
                InitialSpec::Snapshot(path)
            }
            other => return Err(CpeError::parse("initial.family", format!("unknown family `{other}`"))),
        };
        s.finish()?;

        let mut s = Section::new(&root, "run")?;
        let mut run = RunOptions::new(positive("run.T_final", s.f64("T_final", 0.01)?)?);
        let c_cfl = positive("run.C_cfl", s.f64("C_cfl", C_CFL)?)?;
        run.dt = match (s.get("dt"), s.usize("steps", 0)?) {
            (Some(_), n) if n > 0 => return Err(CpeError::parse("run.steps", "give either dt or steps, not both")),
            (_, n) if n > 0 => TimeStep::Steps(n),
            (None, _) => TimeStep::Cfl(c_cfl),
            (Some(toml::Value::String(a)), _) if a == "auto" => TimeStep::Cfl(c_cfl),
            (Some(v), _) => TimeStep::Fixed(positive("run.dt", s.f64_value("dt", v)?)?),
        };
        if let Some(e) = s.get("epsilon") {
            run.epsilon = Some(s.f64_value("epsilon", e)?);
        }
        run.record_every = s.usize("record_every", 1)?;
        run.floors = FaultFloors {
            sigma: s.f64("sigma_fault", 1e-8)?,
            p: s.f64("p_fault", 1e-8)?,
        };
        run.continuity = s.bool("continuity", false)?;
        run.validate().map_err(|e| prefixed("run", e))?;
        let tol_bc = positive("run.tol_bc", s.f64("tol_bc", TOL_BC)?)?;
        s.finish()?;

        let mut s = Section::new(&root, "picard")?;
        let picard = PicardConfig {
            t_final: positive("picard.T_final", s.f64("T_final", 1e-3)?)?,
            options: PicardOptions {
                tol: positive("picard.tol", s.f64("tol", 1e-9)?)?,
                max_iter: s.usize("max_iter", 30)?,
                dt: TimeStep::Cfl(c_cfl),
                floors: run.floors,
            },
        };
        if picard.options.max_iter == 0 {
            return Err(CpeError::constraint("picard.max_iter", "must be at least 1"));
        }
        s.finish()?;

        let mut s = Section::new(&root, "eps_sweep")?;
        let eps_sweep = EpsSweepConfig {
            t_final: positive("eps_sweep.T_final", s.f64("T_final", 0.05)?)?,
            eps_list: s.f64_list("eps_list", &[1e-2, 1e-3, 1e-4])?,
        };
        for &e in &eps_sweep.eps_list {
            positive("eps_sweep.eps_list", e)?;
        }
        s.finish()?;

        let mut s = Section::new(&root, "perturb")?;
        let perturb = PerturbConfig {
            t_final: positive("perturb.T_final", s.f64("T_final", 0.01)?)?,
            deltas: s.f64_list("deltas", &[1e-3, 1e-4, 1e-5])?,
            band: s.usize("band", 2)?,
        };
        if perturb.deltas.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
            return Err(CpeError::constraint("perturb.deltas", "must be finite and >= 0"));
        }
        s.finish()?;

        let mut s = Section::new(&root, "mms")?;
        let mms = MmsConfig {
            case: s.string("case")?.unwrap_or("A-osc").parse()?,
            resolutions: s.usize_list("resolutions", &[16, 24, 32])?,
            dts: s.f64_list("dts", &[4e-4, 2e-4, 1e-4])?,
            t_final: positive("mms.T_final", s.f64("T_final", 0.01)?)?,
        };
        for &dt in &mms.dts {
            positive("mms.dts", dt)?;
        }
        s.finish()?;

        let mut s = Section::new(&root, "ineq")?;
        let kind: InequalityKind = s.string("kind")?.unwrap_or("CAL").parse()?;
        let exponents = Exponents::new(
            s.usize("m", 2)?,
            s.f64("q", 2.0)?,
            s.f64("r1", f64::INFINITY)?,
            s.f64("s1", 2.0)?,
            s.f64("r2", f64::INFINITY)?,
            s.f64("s2", 2.0)?,
        )?;
        let ineq = IneqConfig {
            kind,
            exponents,
            trials: s.usize("trials", 200)?,
            bands: s.usize_list("bands", &[8, 12])?,
        };
        if ineq.bands.contains(&0) {
            return Err(CpeError::constraint("ineq.bands", "band limits must be >= 1"));
        }
        s.finish()?;

        Ok(Self {
            seed,
            grid,
            params,
            initial,
            run,
            tol_bc,
            picard,
            eps_sweep,
            perturb,
            mms,
            ineq,
        })
    }

    /// Replaces the seed everywhere it is used.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        if let InitialSpec::Family(InitialCondition::SmoothRandom { seed: s, .. }) = &mut self.initial {
            *s = seed;
        }
        self
    }

    /// Initial state and its time.
    pub fn initial_state(&self) -> Result<(State, f64)> {
        match &self.initial {
            InitialSpec::Family(f) => Ok((f.build(self.grid, &self.params)?, 0.0)),
            InitialSpec::Snapshot(path) => {
                let (h, state) = read_snapshot(path)?;
                if *state.grid() != self.grid {
                    return Err(CpeError::constraint(
                        "initial.path",
                        format!("snapshot grid {}x{}x{} differs from [grid]", h.nx, h.ny, h.nz),
                    ));
                }
                Ok((state, h.time))
            }
        }
    }

    /// Seeded perturbation direction for `perturb`.
    pub fn perturbation(&self) -> Result<State> {
        crate::initial::random_direction(self.grid, self.perturb.band, self.seed.wrapping_add(1))
    }

    /// Smooth-random state with this configuration's floors and seed.
    pub fn smooth_random(&self, amplitude: f64, band: usize) -> Result<State> {
        smooth_random(self.grid, amplitude, band, self.seed, self.params.sigma_floor(), self.params.p_floor())
    }
}

/// Reads and validates a configuration file; relative paths inside it are
/// resolved against its directory.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    RunConfig::parse(&text, path.parent().unwrap_or(Path::new(".")))
}

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"CPE1";
pub const SNAPSHOT_VERSION: u32 = 1;
/// Magic, version, three sizes, time, six constants.
pub const SNAPSHOT_HEADER_LEN: usize = 4 + 4 + 12 + 8 + 48;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub version: u32,
    pub nx: u32,
    pub ny: u32,
    pub nz: u32,
    pub time: f64,
    pub gamma: f64,
    pub mu: f64,
    pub lambda: f64,
    pub kappa: f64,
    pub gas_constant: f64,
    pub epsilon: f64,
}

impl SnapshotHeader {
    /// Total file length implied by the sizes.
    pub fn file_len(&self) -> usize {
        let plen = self.nx as usize * self.ny as usize;
        SNAPSHOT_HEADER_LEN + 8 * (3 * plen * (self.nz as usize + 1) + plen)
    }
}

/// Serialized snapshot bytes.
pub fn encode_snapshot(state: &State, time: f64, params: &PhysParams) -> Vec<u8> {
    let g = state.grid();
    let mut out = Vec::with_capacity(SNAPSHOT_HEADER_LEN + 8 * (3 * g.len3() + g.plane_len()));
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    for n in [g.nx, g.ny, g.nz] {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for x in [
        time,
        params.gamma(),
        params.mu(),
        params.lambda(),
        params.kappa(),
        params.gas_constant(),
        params.epsilon(),
    ] {
        out.extend_from_slice(&x.to_le_bytes());
    }
    for data in [state.v.x.data(), state.v.y.data(), state.sigma.data(), state.p.data()] {
        for x in data {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.at + N;
        let slice = self
            .bytes
            .get(self.at..end)
            .ok_or_else(|| CpeError::format(Some(self.bytes.len() as u64), format!("truncated file: needed {N} bytes at offset {}", self.at)))?;
        self.at = end;
        Ok(slice.try_into().expect("slice has length N"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

/// Parses snapshot bytes.
pub fn decode_snapshot(bytes: &[u8]) -> Result<(SnapshotHeader, State)> {
    let mut r = Reader { bytes, at: 0 };
    if &r.take::<4>()? != SNAPSHOT_MAGIC {
        return Err(CpeError::format(Some(0), "bad magic"));
    }
    let version = r.u32()?;
    if version != SNAPSHOT_VERSION {
        return Err(CpeError::format(Some(4), format!("unsupported version {version}")));
    }
    let (nx, ny, nz) = (r.u32()?, r.u32()?, r.u32()?);
    let h = SnapshotHeader {
        version,
        nx,
        ny,
        nz,
        time: r.f64()?,
        gamma: r.f64()?,
        mu: r.f64()?,
        lambda: r.f64()?,
        kappa: r.f64()?,
        gas_constant: r.f64()?,
        epsilon: r.f64()?,
    };
    let grid = Grid::new(nx as usize, ny as usize, nz as usize)
        .map_err(|e| CpeError::format(Some(8), format!("invalid grid in header: {e}")))?;
    if bytes.len() > h.file_len() {
        return Err(CpeError::format(Some(h.file_len() as u64), "trailing bytes after the last array"));
    }
    let n3 = grid.len3();
    let v1 = r.f64s(n3)?;
    let v2 = r.f64s(n3)?;
    let sigma = r.f64s(n3)?;
    let p = r.f64s(grid.plane_len())?;
    let state = State {
        v: VectorField3D2C::new(
            ScalarField3D::from_vec(grid, Parity::Even, v1)?,
            ScalarField3D::from_vec(grid, Parity::Even, v2)?,
        ),
        sigma: ScalarField3D::from_vec(grid, Parity::Even, sigma)?,
        p: ScalarField2D::from_vec(grid, p)?,
    };
    Ok((h, state))
}

pub fn write_snapshot(path: &Path, state: &State, time: f64, params: &PhysParams) -> Result<()> {
    fs::write(path, encode_snapshot(state, time, params))?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, State)> {
    decode_snapshot(&fs::read(path)?)
}

/// Fixed 17-significant-digit rendering; parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table built in memory and written in one piece.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    header: String,
    rows: Vec<String>,
}

/// One CSV cell.
pub enum Cell<'a> {
    F(f64),
    I(u64),
    S(&'a str),
}

impl CsvTable {
    pub fn new(header: &str) -> Self {
        Self {
            header: header.to_string(),
            rows: Vec::new(),
        }
    }

    /// Appends a pre-rendered row.
    pub fn push_raw(&mut self, row: String) {
        self.rows.push(row);
    }

    pub fn push(&mut self, cells: &[Cell<'_>]) {
        let row: Vec<String> = cells
            .iter()
            .map(|c| match c {
                Cell::F(x) => fmt_f64(*x),
                Cell::I(i) => i.to_string(),
                Cell::S(s) => s.to_string(),
            })
            .collect();
        self.rows.push(row.join(","));
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = String::with_capacity(self.header.len() + 1 + self.rows.iter().map(|r| r.len() + 1).sum::<usize>());
        s.push_str(&self.header);
        s.push('\n');
        for r in &self.rows {
            s.push_str(r);
            s.push('\n');
        }
        s
    }

    /// Writes and flushes the table.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(self.render().as_bytes())?;
        f.flush()?;
        Ok(())
    }
}
