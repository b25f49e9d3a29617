//! Manufactured solutions: closed-form states, their exact tendencies, and
//! a convergence driver.

use std::f64::consts::PI;
use std::str::FromStr;

use crate::error::{CpeError, Result};
use crate::field::{Parity, ScalarField2D, ScalarField3D, State, VectorField3D2C};
use crate::grid::Grid;
use crate::integrators::{advance_forced, RunOptions, TimeStep};
use crate::params::PhysParams;
use crate::tendencies::StateTendency;

/// A manufactured solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmsCase {
    /// `v = 0`, `sigma = 1`, `p = 1`.
    Constant,
    /// `v = (a cos(pi z) cos x, 0)`, `sigma = 1 + b cos(pi z)`,
    /// `p = 1 + b cos x`, with `a = e^-t`, `b = e^-t / 10`.
    AOsc,
}

impl FromStr for MmsCase {
    type Err = CpeError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(MmsCase::Constant),
            "A-osc" => Ok(MmsCase::AOsc),
            other => Err(CpeError::usage(format!("unknown manufactured case `{other}`"))),
        }
    }
}

impl std::fmt::Display for MmsCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MmsCase::Constant => "constant",
            MmsCase::AOsc => "A-osc",
        })
    }
}

/// Pointwise values of the A-osc terms at `(x, z, t)`.
struct AOscPoint {
    v1: f64,
    sigma: f64,
    p: f64,
    /// Tendency of the unforced system.
    t1: f64,
    ts: f64,
    tp: f64,
}

fn a_osc_point(x: f64, z: f64, t: f64, params: &PhysParams) -> AOscPoint {
    let (g, mu, lam, nu, eps) = (params.gamma(), params.mu(), params.lambda(), params.nu(), params.epsilon());
    let a = (-t).exp();
    let b = 0.1 * a;
    let (c, zs) = ((PI * z).cos(), (PI * z).sin());
    let (cx, sx) = (x.cos(), x.sin());
    let (c2, s2) = ((2.0 * PI * z).cos(), (2.0 * PI * z).sin());
    let v1 = a * c * cx;
    let sigma = 1.0 + b * c;
    let p = 1.0 + b * cx;
    let shear = (2.0 * mu + lam) * sx * sx - mu * PI * PI * cx * cx;
    // vertical mean of the heating
    let q_bar = 0.5 * a * a * ((2.0 * mu + lam) * sx * sx + mu * PI * PI * cx * cx);
    // phi and its integral from 0 to z
    let phi = -a * c * sx + (-a * b * c * cx * sx - (g - 1.0) * 0.5 * a * a * c2 * shear) / (g * p);
    let int_phi =
        -a * sx * zs / PI + (-a * b * cx * sx * zs / PI - (g - 1.0) * 0.5 * a * a * s2 / (2.0 * PI) * shear) / (g * p);
    let w = -nu * b * PI * zs - int_phi;
    let t1 = a * a * c * c * cx * sx + a * PI * zs * cx * w + sigma * b * sx
        - sigma * (mu * (1.0 + PI * PI) + (mu + lam)) * a * c * cx;
    let ts = b * PI * zs * w - sigma * (phi + a * c * sx) - nu * PI * PI * b * sigma * c;
    let tp = (g - 1.0) * q_bar - eps * b * cx;
    AOscPoint { v1, sigma, p, t1, ts, tp }
}

/// Exact A-osc state and unforced tendency, each evaluated once per `(x, z)`
/// node pair and repeated along `y`.
fn a_osc_fields(grid: Grid, t: f64, params: &PhysParams) -> (State, StateTendency) {
    let (nx, ny, nz) = (grid.nx, grid.ny, grid.nz);
    let plen = grid.plane_len();
    let mut f3 = vec![vec![0.0; grid.len3()]; 4];
    let mut f2 = vec![vec![0.0; plen]; 2];
    for k in 0..=nz {
        for i in 0..nx {
            let pt = a_osc_point(grid.x(i), grid.z(k), t, params);
            for j in 0..ny {
                let n = k * plen + j * nx + i;
                f3[0][n] = pt.v1;
                f3[1][n] = pt.sigma;
                f3[2][n] = pt.t1;
                f3[3][n] = pt.ts;
                if k == 0 {
                    f2[0][j * nx + i] = pt.p;
                    f2[1][j * nx + i] = pt.tp;
                }
            }
        }
    }
    let mut f3 = f3.into_iter().map(|d| ScalarField3D::from_vec(grid, Parity::Even, d).expect("sizes match"));
    let mut f2 = f2.into_iter().map(|d| ScalarField2D::from_vec(grid, d).expect("sizes match"));
    let mut next3 = || f3.next().expect("four fields");
    let state = State {
        v: VectorField3D2C::new(next3(), ScalarField3D::zeros(grid, Parity::Even)),
        sigma: next3(),
        p: f2.next().expect("two fields"),
    };
    let tend = StateTendency {
        dv: VectorField3D2C::new(next3(), ScalarField3D::zeros(grid, Parity::Even)),
        dsigma: next3(),
        dp: f2.next().expect("two fields"),
    };
    (state, tend)
}

impl MmsCase {
    /// The manufactured state at time `t`.
    pub fn exact(&self, grid: Grid, t: f64, params: &PhysParams) -> State {
        match self {
            MmsCase::Constant => State::constant(grid, 1.0, 1.0),
            MmsCase::AOsc => a_osc_fields(grid, t, params).0,
        }
    }

    /// Closed-form tendency of the unforced system at the manufactured state.
    pub fn exact_tendency(&self, grid: Grid, t: f64, params: &PhysParams) -> StateTendency {
        match self {
            MmsCase::Constant => StateTendency {
                dv: VectorField3D2C::zeros(grid),
                dsigma: ScalarField3D::zeros(grid, Parity::Even),
                dp: ScalarField2D::zeros(grid),
            },
            MmsCase::AOsc => a_osc_fields(grid, t, params).1,
        }
    }

    /// `d/dt exact - exact_tendency`, the forcing that makes the state exact.
    pub fn forcing(&self, grid: Grid, t: f64, params: &PhysParams) -> StateTendency {
        match self {
            MmsCase::Constant => self.exact_tendency(grid, t, params),
            MmsCase::AOsc => {
                let (e, mut f) = a_osc_fields(grid, t, params);
                // every component decays like e^-t: d/dt exact = rest - exact
                f.dv.x = e.v.x.scaled(-1.0).sub(&f.dv.x);
                f.dsigma = ScalarField3D::constant(grid, 1.0).sub(&e.sigma).sub(&f.dsigma);
                f.dp = ScalarField2D::constant(grid, 1.0).sub(&e.p).sub(&f.dp);
                f
            }
        }
    }
}

/// One run of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct MmsRow {
    pub n: usize,
    pub dt: f64,
    pub steps: usize,
    /// Largest nodal error over all components at `t_final`.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmsTable {
    pub case: MmsCase,
    pub t_final: f64,
    pub rows: Vec<MmsRow>,
}

impl MmsTable {
    pub fn error(&self, n: usize, dt: f64) -> Option<f64> {
        self.rows.iter().find(|r| r.n == n && r.dt == dt).map(|r| r.error)
    }

    /// `log2(e(dt_i) / e(dt_{i+1}))` at resolution `n` for successive step
    /// sizes in the order given.
    pub fn temporal_orders(&self, n: usize, dts: &[f64]) -> Vec<f64> {
        dts.windows(2)
            .filter_map(|w| {
                let (a, b) = (self.error(n, w[0])?, self.error(n, w[1])?);
                Some((a / b).ln() / (w[0] / w[1]).ln())
            })
            .collect()
    }

    /// `e(n_i) / e(n_{i+1})` at step `dt` for successive resolutions.
    pub fn spatial_ratios(&self, ns: &[usize], dt: f64) -> Vec<f64> {
        ns.windows(2)
            .filter_map(|w| Some(self.error(w[0], dt)? / self.error(w[1], dt)?))
            .collect()
    }
}

/// Runs `case` on every `n^3` grid with every step size and tabulates the
/// error at `t_final`.
pub fn mms_run(case: &str, resolutions: &[usize], dts: &[f64], t_final: f64, params: &PhysParams) -> Result<MmsTable> {
    let case: MmsCase = case.parse()?;
    let mut rows = Vec::new();
    for &n in resolutions {
        let grid = Grid::cube(n)?;
        let u0 = case.exact(grid, 0.0, params);
        for &dt in dts {
            let mut opts = RunOptions::new(t_final);
            opts.dt = TimeStep::Fixed(dt);
            opts.energy = false;
            let res = advance_forced(&u0, params, &opts, &mut |t| Ok(Some(case.forcing(grid, t, params))))?;
            let exact = case.exact(grid, t_final, params);
            rows.push(MmsRow {
                n,
                dt: res.dt,
                steps: res.steps,
                error: res.state.max_diff(&exact),
            });
            log::info!("mms {case} n={n} dt={dt:e}: error {:e}", rows.last().map_or(0.0, |r| r.error));
        }
    }
    Ok(MmsTable { case, t_final, rows })
}
