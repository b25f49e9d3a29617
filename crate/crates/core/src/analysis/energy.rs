//! The energy monitor.

use super::norms::{dz_sobolev_norm_sq, SobolevNorm};
use crate::diagnostics::{diagnose, total_mass};
use crate::error::Result;
use crate::field::State;
use crate::params::PhysParams;
use crate::spectral::vertical_average;

/// Time integrals of the dissipation rates, accumulated by the trapezoid rule.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningSums {
    /// `int ||v||^2_{H^4} dt`.
    pub v_h4: f64,
    /// `int ||d_z sigma||^2_{H^2} dt`.
    pub dz_sigma_h2: f64,
}

impl RunningSums {
    /// Adds one trapezoid panel between rates `a` and `b`.
    pub fn accumulate(&mut self, dt: f64, a: (f64, f64), b: (f64, f64)) {
        self.v_h4 += 0.5 * dt * (a.0 + b.0);
        self.dz_sigma_h2 += 0.5 * dt * (a.1 + b.1);
    }
}

/// Monitored quantities at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub t: f64,
    /// `||v||^2_{H^3} + ||sigma||^2_{H^2} + ||p||^2_{H^3}`.
    pub energy: f64,
    pub sums: RunningSums,
    pub min_sigma: f64,
    pub min_p: f64,
    pub mass: f64,
    /// `max |w|` on the two walls.
    pub w_wall: f64,
    /// `max |vertical average of phi|`.
    pub phi_mean: f64,
}

impl EnergyReport {
    pub const CSV_HEADER: &'static str = "t,E,int_v_H4,int_dzsigma_H2,min_sigma,min_p,mass,w_wall,phi_mean";

    pub fn csv_row(&self) -> String {
        [
            self.t,
            self.energy,
            self.sums.v_h4,
            self.sums.dz_sigma_h2,
            self.min_sigma,
            self.min_p,
            self.mass,
            self.w_wall,
            self.phi_mean,
        ]
        .iter()
        .map(|v| format!("{v:.16e}"))
        .collect::<Vec<_>>()
        .join(",")
    }
}

/// `(||v||^2_{H^4}, ||d_z sigma||^2_{H^2})`.
pub fn dissipation_rates(state: &State) -> Result<(f64, f64)> {
    Ok((state.v.sobolev_norm_sq(4)?, dz_sobolev_norm_sq(&state.sigma, 2)?))
}

/// `||v||^2_{H^3} + ||sigma||^2_{H^2} + ||p||^2_{H^3}`.
pub fn energy(state: &State) -> Result<f64> {
    Ok(state.v.sobolev_norm_sq(3)? + state.sigma.sobolev_norm_sq(2)? + state.p.sobolev_norm_sq(3)?)
}

pub fn energy_report(state: &State, params: &PhysParams, t: f64, sums: RunningSums) -> Result<EnergyReport> {
    let d = diagnose(state, params)?;
    let nz = state.grid().nz;
    let w_wall = d.w.level(0).iter().chain(d.w.level(nz)).fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(EnergyReport {
        t,
        energy: energy(state)?,
        sums,
        min_sigma: state.sigma.min(),
        min_p: state.p.min(),
        mass: total_mass(&state.sigma)?,
        w_wall,
        phi_mean: vertical_average(&d.phi)?.max_abs(),
    })
}
