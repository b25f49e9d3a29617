//! Nodal field storage.
//!
//! Fields live in physical space between operations. Three-dimensional fields
//! carry a vertical [`Parity`] tag that selects the z-basis used whenever the
//! field is transformed: cosine series for `Even` (Neumann-compatible) fields,
//! sine series plus an affine boundary part for `Odd` fields such as `dz v`
//! or `w`.

use crate::error::{CpeError, Result};
use crate::grid::Grid;

/// Vertical symmetry class of a 3D field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    /// Cosine series in z; `dz f = 0` at `z = 0, 1`.
    Even,
    /// Sine series in z plus the affine interpolant of the boundary values.
    Odd,
}

impl Parity {
    /// Parity of a pointwise product.
    pub fn product(self, other: Parity) -> Parity {
        if self == other {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// Parity after one z-derivative.
    pub fn flip(self) -> Parity {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField3D {
    grid: Grid,
    parity: Parity,
    data: Vec<f64>,
}

impl ScalarField3D {
    pub fn zeros(grid: Grid, parity: Parity) -> Self {
        Self {
            grid,
            parity,
            data: vec![0.0; grid.len3()],
        }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            parity: Parity::Even,
            data: vec![value; grid.len3()],
        }
    }

    /// Samples `f(x, y, z)` at every node.
    pub fn from_fn(grid: Grid, parity: Parity, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len3());
        for k in 0..grid.nlevels() {
            let z = grid.z(k);
            for j in 0..grid.ny {
                let y = grid.y(j);
                for i in 0..grid.nx {
                    data.push(f(grid.x(i), y, z));
                }
            }
        }
        Self { grid, parity, data }
    }

    pub fn from_vec(grid: Grid, parity: Parity, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len3() {
            return Err(CpeError::usage(format!(
                "3D field needs {} values, got {}",
                grid.len3(),
                data.len()
            )));
        }
        Ok(Self { grid, parity, data })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn with_parity(mut self, parity: Parity) -> Self {
        self.parity = parity;
        self
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.grid.idx(i, j, k)]
    }

    /// Nodal values on level `k`.
    pub fn level(&self, k: usize) -> &[f64] {
        let n = self.grid.plane_len();
        &self.data[k * n..(k + 1) * n]
    }

    pub fn check_finite(&self, what: &str) -> Result<()> {
        check_finite(&self.data, what)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// True when every node holds the same value.
    pub fn is_uniform(&self) -> bool {
        let first = self.data[0];
        self.data.iter().all(|&v| v == first)
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            parity: self.parity,
            data: self.data.iter().map(|v| a * v).collect(),
        }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &ScalarField3D) {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s += a * o;
        }
    }

    pub fn add(&self, other: &ScalarField3D) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &ScalarField3D) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Largest nodal difference to `other`.
    pub fn max_diff(&self, other: &ScalarField3D) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Adds a z-independent field to every level.
    pub fn add_broadcast(&mut self, a: f64, plane: &ScalarField2D) {
        let n = self.grid.plane_len();
        for level in self.data.chunks_mut(n) {
            for (s, p) in level.iter_mut().zip(plane.data()) {
                *s += a * p;
            }
        }
    }
}

/// Field on the horizontal torus only (pressure, vertical averages).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    grid: Grid,
    data: Vec<f64>,
}

impl ScalarField2D {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            data: vec![0.0; grid.plane_len()],
        }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            data: vec![value; grid.plane_len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.plane_len());
        for j in 0..grid.ny {
            let y = grid.y(j);
            for i in 0..grid.nx {
                data.push(f(grid.x(i), y));
            }
        }
        Self { grid, data }
    }

    pub fn from_vec(grid: Grid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.plane_len() {
            return Err(CpeError::usage(format!(
                "2D field needs {} values, got {}",
                grid.plane_len(),
                data.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i + self.grid.nx * j]
    }

    pub fn check_finite(&self, what: &str) -> Result<()> {
        check_finite(&self.data, what)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_uniform(&self) -> bool {
        let first = self.data[0];
        self.data.iter().all(|&v| v == first)
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            data: self.data.iter().map(|v| a * v).collect(),
        }
    }

    pub fn axpy(&mut self, a: f64, other: &ScalarField2D) {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s += a * o;
        }
    }

    pub fn add(&self, other: &ScalarField2D) -> Self {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &ScalarField2D) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn max_diff(&self, other: &ScalarField2D) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// The z-independent 3D field with this value on every level.
    pub fn broadcast(&self) -> ScalarField3D {
        let mut data = Vec::with_capacity(self.grid.len3());
        for _ in 0..self.grid.nlevels() {
            data.extend_from_slice(&self.data);
        }
        ScalarField3D {
            grid: self.grid,
            parity: Parity::Even,
            data,
        }
    }
}

/// Horizontal velocity: two scalar components on the channel.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField3D2C {
    pub x: ScalarField3D,
    pub y: ScalarField3D,
}

impl VectorField3D2C {
    pub fn new(x: ScalarField3D, y: ScalarField3D) -> Self {
        assert_eq!(x.grid(), y.grid(), "component grids differ");
        Self { x, y }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            x: ScalarField3D::zeros(grid, Parity::Even),
            y: ScalarField3D::zeros(grid, Parity::Even),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.x.grid()
    }

    pub fn components(&self) -> [&ScalarField3D; 2] {
        [&self.x, &self.y]
    }

    pub fn check_finite(&self, what: &str) -> Result<()> {
        self.x.check_finite(what)?;
        self.y.check_finite(what)
    }

    pub fn max_abs(&self) -> f64 {
        self.x.max_abs().max(self.y.max_abs())
    }

    pub fn axpy(&mut self, a: f64, other: &VectorField3D2C) {
        self.x.axpy(a, &other.x);
        self.y.axpy(a, &other.y);
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            x: self.x.scaled(a),
            y: self.y.scaled(a),
        }
    }

    pub fn sub(&self, other: &VectorField3D2C) -> Self {
        Self {
            x: self.x.sub(&other.x),
            y: self.y.sub(&other.y),
        }
    }

    pub fn max_diff(&self, other: &VectorField3D2C) -> f64 {
        self.x.max_diff(&other.x).max(self.y.max_diff(&other.y))
    }
}

/// The prognostic unknowns `(v, sigma, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub v: VectorField3D2C,
    pub sigma: ScalarField3D,
    pub p: ScalarField2D,
}

impl State {
    pub fn new(v: VectorField3D2C, sigma: ScalarField3D, p: ScalarField2D) -> Result<Self> {
        if v.grid() != sigma.grid() || sigma.grid() != p.grid() {
            return Err(CpeError::usage("state components live on different grids"));
        }
        Ok(Self { v, sigma, p })
    }

    /// Rest state with uniform specific volume and pressure.
    pub fn constant(grid: Grid, sigma: f64, p: f64) -> Self {
        Self {
            v: VectorField3D2C::zeros(grid),
            sigma: ScalarField3D::constant(grid, sigma),
            p: ScalarField2D::constant(grid, p),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.sigma.grid()
    }

    pub fn check_finite(&self) -> Result<()> {
        self.v.check_finite("v")?;
        self.sigma.check_finite("sigma")?;
        self.p.check_finite("p")
    }

    /// Largest nodal difference over all components.
    pub fn max_diff(&self, other: &State) -> f64 {
        self.v
            .max_diff(&other.v)
            .max(self.sigma.max_diff(&other.sigma))
            .max(self.p.max_diff(&other.p))
    }

    /// Root-sum-square of all nodal values, used by the instability detector.
    pub fn nodal_norm(&self) -> f64 {
        let sq = |d: &[f64]| d.iter().map(|v| v * v).sum::<f64>();
        (sq(self.v.x.data()) + sq(self.v.y.data()) + sq(self.sigma.data()) + sq(self.p.data())).sqrt()
    }
}

pub(crate) fn check_finite(data: &[f64], what: &str) -> Result<()> {
    if data.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(CpeError::NumericalFault(what.to_string()))
    }
}
