//! Collocation grid on the channel `T^2 x (0, 1)`.

use std::f64::consts::PI;

use crate::error::{CpeError, Result};

/// Horizontal period in both x and y.
pub const PERIOD: f64 = 2.0 * PI;

/// Spectral collocation descriptor.
///
/// Fourier in x and y on `nx` / `ny` equispaced points over `[0, 2 pi)`,
/// cosine/sine series in z on the endpoint-inclusive nodes `z_j = j / nz`,
/// `j = 0..=nz`. Products are dealiased on a padded grid whose sizes are
/// stored alongside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub dealias: Dealias,
}

/// Padding rule used for pointwise products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dealias {
    /// Zero-pad every direction by 3/2 before multiplying.
    ThreeHalves,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        if nx < 8 || nx % 2 != 0 {
            return Err(CpeError::constraint("nx", format!("nx must be even and >= 8 (got {nx})")));
        }
        if ny < 8 || ny % 2 != 0 {
            return Err(CpeError::constraint("ny", format!("ny must be even and >= 8 (got {ny})")));
        }
        if nz < 8 {
            return Err(CpeError::constraint("nz", format!("nz must be >= 8 (got {nz})")));
        }
        Ok(Self {
            nx,
            ny,
            nz,
            dealias: Dealias::ThreeHalves,
        })
    }

    pub fn cube(n: usize) -> Result<Self> {
        Self::new(n, n, n)
    }

    /// Number of horizontal points per z-level.
    pub fn plane_len(&self) -> usize {
        self.nx * self.ny
    }

    /// Number of z-levels including both boundaries.
    pub fn nlevels(&self) -> usize {
        self.nz + 1
    }

    pub fn len3(&self) -> usize {
        self.plane_len() * self.nlevels()
    }

    pub fn x(&self, i: usize) -> f64 {
        PERIOD * i as f64 / self.nx as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        PERIOD * j as f64 / self.ny as f64
    }

    pub fn z(&self, k: usize) -> f64 {
        k as f64 / self.nz as f64
    }

    /// Flat index of node `(i, j, k)`, x fastest.
    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.nx * (j + self.ny * k)
    }

    /// Padded sizes `(nx, ny, nz)` used for dealiased products.
    pub fn fine(&self) -> (usize, usize, usize) {
        (pad_even(self.nx), pad_even(self.ny), (3 * self.nz).div_ceil(2))
    }

    /// Largest retained horizontal wavenumber in x (Nyquist is discarded).
    pub fn kx_max(&self) -> f64 {
        (self.nx / 2 - 1) as f64
    }

    pub fn ky_max(&self) -> f64 {
        (self.ny / 2 - 1) as f64
    }

    /// Squared magnitude of the largest horizontal wavevector.
    pub fn kh2_max(&self) -> f64 {
        self.kx_max().powi(2) + self.ky_max().powi(2)
    }

    /// Largest vertical wavenumber scale, `pi nz`.
    pub fn kz_max(&self) -> f64 {
        PI * self.nz as f64
    }

    /// Squared magnitude of the largest wavevector on the grid.
    pub fn k2_max(&self) -> f64 {
        self.kh2_max() + self.kz_max().powi(2)
    }
}

/// Smallest even size that dealiases quadratic products of an `n`-point
/// Fourier grid.
pub(crate) fn pad_even(n: usize) -> usize {
    let m = (3 * n).div_ceil(2);
    m + (m % 2)
}

/// Signed wavenumber of FFT bin `i` on an `n`-point grid.
#[inline]
pub(crate) fn wavenumber(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}
