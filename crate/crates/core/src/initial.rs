//! Named families of Neumann-compatible initial data.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CpeError, Result};
use crate::field::{Parity, ScalarField2D, ScalarField3D, State, VectorField3D2C};
use crate::grid::Grid;
use crate::params::PhysParams;

/// A named initial-condition family.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// Uniform velocity, specific volume and pressure.
    Constant { v: [f64; 2], sigma: f64, p: f64 },
    /// `sigma = 1`, `v = (a cos(pi z), 0)`, `p = 1`.
    ExampleA { amplitude: f64 },
    /// Seeded band-limited cosine-in-z data around `sigma = p = 1`, lifted
    /// where needed so that `sigma >= sigma_floor` and `p >= p_floor`.
    SmoothRandom { amplitude: f64, band: usize, seed: u64 },
}

impl InitialCondition {
    pub fn build(&self, grid: Grid, params: &PhysParams) -> Result<State> {
        match *self {
            InitialCondition::Constant { v, sigma, p } => {
                if !(sigma > 0.0 && p > 0.0) {
                    return Err(CpeError::constraint("initial", "constant sigma and p must be positive"));
                }
                let mut s = State::constant(grid, sigma, p);
                s.v = VectorField3D2C::new(
                    ScalarField3D::constant(grid, v[0]),
                    ScalarField3D::constant(grid, v[1]),
                );
                Ok(s)
            }
            InitialCondition::ExampleA { amplitude } => State::new(
                VectorField3D2C::new(
                    ScalarField3D::from_fn(grid, Parity::Even, |_, _, z| amplitude * (PI * z).cos()),
                    ScalarField3D::zeros(grid, Parity::Even),
                ),
                ScalarField3D::constant(grid, 1.0),
                ScalarField2D::constant(grid, 1.0),
            ),
            InitialCondition::SmoothRandom { amplitude, band, seed } => {
                smooth_random(grid, amplitude, band, seed, params.sigma_floor(), params.p_floor())
            }
        }
    }
}

/// Random trigonometric sum with `|kx|, |ky|, m <= band`, spectral weights
/// `1 / (1 + kx^2 + ky^2 + m^2)`, and sup-norm `amplitude`.
fn random_field(grid: Grid, band: usize, amplitude: f64, rng: &mut ChaCha8Rng, vertical: bool) -> Vec<f64> {
    let b = band as i64;
    let mzmax = if vertical { band } else { 0 };
    let mut modes = Vec::new();
    for m in 0..=mzmax {
        for kx in -b..=b {
            for ky in 0..=b {
                // one representative of each +-k pair
                if ky == 0 && kx < 0 {
                    continue;
                }
                let k2 = (kx * kx + ky * ky) as f64 + (m * m) as f64;
                let wgt = 1.0 / (1.0 + k2);
                let c: f64 = StandardNormal.sample(rng);
                let s: f64 = StandardNormal.sample(rng);
                modes.push((kx as f64, ky as f64, m as f64, wgt * c, wgt * s));
            }
        }
    }
    let nz = if vertical { grid.nz } else { 0 };
    let mut data = Vec::with_capacity(grid.plane_len() * (nz + 1));
    for k in 0..=nz {
        let z = grid.z(k);
        for j in 0..grid.ny {
            let y = grid.y(j);
            for i in 0..grid.nx {
                let x = grid.x(i);
                let v: f64 = modes
                    .iter()
                    .map(|&(kx, ky, m, c, s)| {
                        let ph = kx * x + ky * y;
                        (c * ph.cos() + s * ph.sin()) * (m * PI * z).cos()
                    })
                    .sum();
                data.push(v);
            }
        }
    }
    let peak = data.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if peak > 0.0 {
        data.iter_mut().for_each(|v| *v *= amplitude / peak);
    }
    data
}

/// Smooth seeded state; see [`InitialCondition::SmoothRandom`].
pub fn smooth_random(grid: Grid, amplitude: f64, band: usize, seed: u64, sigma_floor: f64, p_floor: f64) -> Result<State> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(CpeError::constraint("amplitude", "must be finite and >= 0"));
    }
    if band == 0 || band >= grid.nx.min(grid.ny) / 2 || band >= grid.nz {
        return Err(CpeError::constraint("band", "must be >= 1 and below the grid Nyquist limit"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v1 = random_field(grid, band, amplitude, &mut rng, true);
    let v2 = random_field(grid, band, amplitude, &mut rng, true);
    let mut s = random_field(grid, band, amplitude, &mut rng, true);
    let mut p = random_field(grid, band, amplitude, &mut rng, false);
    lift(&mut s, 1.0, sigma_floor);
    lift(&mut p, 1.0, p_floor);
    State::new(
        VectorField3D2C::new(
            ScalarField3D::from_vec(grid, Parity::Even, v1)?,
            ScalarField3D::from_vec(grid, Parity::Even, v2)?,
        ),
        ScalarField3D::from_vec(grid, Parity::Even, s)?,
        ScalarField2D::from_vec(grid, p)?,
    )
}

/// Adds `base`, then shifts up so the minimum is at least `floor`.
fn lift(data: &mut [f64], base: f64, floor: f64) {
    data.iter_mut().for_each(|v| *v += base);
    let min = data.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < floor {
        let shift = floor - min;
        data.iter_mut().for_each(|v| *v += shift);
    }
}

/// Seeded Neumann-compatible perturbation direction with unit sup-norm in
/// every component.
pub fn random_direction(grid: Grid, band: usize, seed: u64) -> Result<State> {
    let mut s = smooth_random(grid, 1.0, band, seed, f64::NEG_INFINITY, f64::NEG_INFINITY)?;
    s.sigma.data_mut().iter_mut().for_each(|v| *v -= 1.0);
    s.p.data_mut().iter_mut().for_each(|v| *v -= 1.0);
    Ok(s)
}
