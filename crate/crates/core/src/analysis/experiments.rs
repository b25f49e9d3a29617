//! Regularization sweeps, continuous dependence, and trend fits.

use super::norms::SobolevNorm;
use crate::error::{CpeError, Result};
use crate::field::State;
use crate::integrators::{choose_steps, rk4_step, stable_dt, RunOptions, TimeStep};
use crate::par;
use crate::params::PhysParams;
use crate::spectral::{d2dz2, ddz, laplacian_h};

/// `(||dv||^2_{H^1} + ||dsigma||^2_2 + ||dp||^2_{H^1})^(1/2)`.
pub fn difference_norm(a: &State, b: &State) -> Result<f64> {
    let dv = a.v.sub(&b.v).sobolev_norm_sq(1)?;
    let ds = a.sigma.sub(&b.sigma).sobolev_norm_sq(0)?;
    let dp = a.p.sub(&b.p).sobolev_norm_sq(1)?;
    Ok((dv + ds + dp).sqrt())
}

/// `||Lap dv||^2_2 + ||d_z dsigma||^2_2`.
fn dissipation_rate(a: &State, b: &State) -> Result<f64> {
    let mut total = 0.0;
    for (x, y) in a.v.components().into_iter().zip(b.v.components()) {
        let d = x.sub(y);
        let lap = laplacian_h(&d)?.add(&d2dz2(&d)?);
        total += lap.sobolev_norm_sq(0)?;
    }
    total += ddz(&a.sigma.sub(&b.sigma))?.sobolev_norm_sq(0)?;
    Ok(total)
}

/// Least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination.
    pub r2: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(CpeError::usage("a line fit needs at least two paired points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(CpeError::usage("a line fit needs distinct abscissae"));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
        r2,
    })
}

/// Slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(CpeError::usage("log-log fit needs positive data"));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    Ok(fit_line(&lx, &ly)?.slope)
}

/// Linear trend of `log E(t)` along a trajectory.
pub fn log_energy_fit(t: &[f64], energy: &[f64]) -> Result<LineFit> {
    if energy.iter().any(|e| !(*e > 0.0)) {
        return Err(CpeError::usage("energy must be positive"));
    }
    let le: Vec<f64> = energy.iter().map(|e| e.ln()).collect();
    fit_line(t, &le)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsRow {
    pub epsilon: f64,
    /// Distance to the `eps = 0` run at `t_final`.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsSweep {
    pub t_final: f64,
    pub steps: usize,
    pub dt: f64,
    pub rows: Vec<EpsRow>,
}

impl EpsSweep {
    /// Whether `delta` decreases strictly as `epsilon` decreases.
    pub fn strictly_decreasing(&self) -> bool {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
        rows.windows(2).all(|w| w[1].delta < w[0].delta)
    }

    /// Log-log slope of `delta` against `epsilon`; recorded, not a gate.
    pub fn slope(&self) -> Result<f64> {
        let e: Vec<f64> = self.rows.iter().map(|r| r.epsilon).collect();
        let d: Vec<f64> = self.rows.iter().map(|r| r.delta).collect();
        log_log_slope(&e, &d)
    }
}

/// Runs the unregularized system and one run per `eps`, all with the same
/// uniform step (the stable step of the largest `eps`), and reports the
/// difference norms at `t_final`.
pub fn epsilon_sweep(u0: &State, params: &PhysParams, t_final: f64, eps: &[f64]) -> Result<EpsSweep> {
    if eps.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(CpeError::constraint("eps_list", "every epsilon must be positive"));
    }
    let emax = eps.iter().cloned().fold(0.0, f64::max);
    let (steps, dt) = choose_steps(u0, &params.with_epsilon(emax)?, t_final, TimeStep::Auto)?;
    let run = |e: f64| -> Result<State> {
        let mut opts = RunOptions::new(t_final);
        opts.dt = TimeStep::Steps(steps);
        opts.epsilon = Some(e);
        opts.energy = false;
        Ok(crate::integrators::advance(u0, params, &opts)?.state)
    };
    let mut all = vec![0.0];
    all.extend_from_slice(eps);
    let finals = par::map_indexed(all.len(), |i| run(all[i]));
    let mut finals = finals.into_iter().collect::<Result<Vec<_>>>()?;
    let reference = finals.remove(0);
    let rows = eps
        .iter()
        .zip(&finals)
        .map(|(&e, s)| Ok(EpsRow {
            epsilon: e,
            delta: difference_norm(s, &reference)?,
        }))
        .collect::<Result<_>>()?;
    Ok(EpsSweep {
        t_final,
        steps,
        dt,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbRow {
    pub delta: f64,
    /// Difference norm at `t_final`.
    pub distance: f64,
    /// `distance / delta`.
    pub ratio: f64,
    /// `int (||Lap dv||^2_2 + ||d_z dsigma||^2_2) dt`.
    pub dissipation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbTable {
    pub t_final: f64,
    pub steps: usize,
    pub dt: f64,
    pub rows: Vec<PerturbRow>,
}

impl PerturbTable {
    /// `max ratio / min ratio` over the positive deltas.
    pub fn ratio_spread(&self) -> f64 {
        let r: Vec<f64> = self.rows.iter().filter(|r| r.delta > 0.0).map(|r| r.ratio).collect();
        let max = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = r.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    }

    pub fn dissipation_slope(&self) -> Result<f64> {
        let rows: Vec<&PerturbRow> = self.rows.iter().filter(|r| r.delta > 0.0).collect();
        let d: Vec<f64> = rows.iter().map(|r| r.delta).collect();
        let q: Vec<f64> = rows.iter().map(|r| r.dissipation).collect();
        log_log_slope(&d, &q)
    }
}

/// Integrates `u0` and `u0 + delta * direction` in lockstep for each delta
/// and compares them.
pub fn continuous_dependence(
    u0: &State,
    direction: &State,
    deltas: &[f64],
    t_final: f64,
    params: &PhysParams,
    dt: TimeStep,
) -> Result<PerturbTable> {
    if deltas.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
        return Err(CpeError::constraint("deltas", "every delta must be finite and >= 0"));
    }
    if direction.grid() != u0.grid() {
        return Err(CpeError::usage("perturbation lives on a different grid"));
    }
    let perturbed = |d: f64| -> State {
        let mut s = u0.clone();
        s.v.axpy(d, &direction.v);
        s.sigma.axpy(d, &direction.sigma);
        s.p.axpy(d, &direction.p);
        s
    };
    // one step size for every run: the most restrictive initial bound
    let cfl = match dt {
        TimeStep::Auto => Some(1.0),
        TimeStep::Cfl(c) => Some(c / crate::integrators::C_CFL),
        _ => None,
    };
    let mut h = match dt {
        TimeStep::Fixed(h) => h,
        TimeStep::Steps(n) => t_final / n as f64,
        _ => f64::INFINITY,
    };
    if let Some(c) = cfl {
        h = h.min(c * stable_dt(u0, params)?);
        for &d in deltas {
            h = h.min(c * stable_dt(&perturbed(d), params)?);
        }
    }
    let (steps, h) = match dt {
        TimeStep::Steps(n) => choose_steps(u0, params, t_final, TimeStep::Steps(n))?,
        _ => choose_steps(u0, params, t_final, TimeStep::Fixed(h))?,
    };
    let floors = RunOptions::new(t_final).floors;
    let step = |s: &State, n: usize| rk4_step(s, n as f64 * h, h, params, floors, &mut |_| Ok(None), &mut |_| {});
    let mut base = vec![u0.clone()];
    for n in 0..steps {
        let next = step(&base[n], n)?;
        base.push(next);
    }
    let rows = par::map_indexed(deltas.len(), |i| -> Result<PerturbRow> {
        let delta = deltas[i];
        let mut u = perturbed(delta);
        let mut rate = dissipation_rate(&u, &base[0])?;
        let mut dissipation = 0.0;
        for n in 0..steps {
            u = step(&u, n)?;
            let r = dissipation_rate(&u, &base[n + 1])?;
            dissipation += 0.5 * h * (rate + r);
            rate = r;
        }
        let distance = difference_norm(&u, &base[steps])?;
        Ok(PerturbRow {
            delta,
            distance,
            ratio: if delta > 0.0 { distance / delta } else { 0.0 },
            dissipation,
        })
    });
    Ok(PerturbTable {
        t_final,
        steps,
        dt: h,
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}
