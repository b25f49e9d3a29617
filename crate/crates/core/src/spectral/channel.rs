//! Spectral engine on the channel `T^2 x [0, 1]`.
//!
//! Horizontal directions are Fourier; the vertical direction uses the basis
//! selected by the field's [`Parity`]. A [`Spec3`] stores `nz + 1` complex
//! horizontal spectra, one per vertical coefficient slot:
//!
//! * `Even`: slot `m < nz` holds the cosine coefficient `a_m`; slot `nz` is
//!   the vertical Nyquist mode and is always zero.
//! * `Odd`: slots `0` and `nz` hold the boundary values `f(0)` and `f(1)`,
//!   slots `1..nz` the sine coefficients of `f` minus its affine interpolant.
//!
//! Products are formed on a grid padded by 3/2 in every direction and
//! truncated back, which removes quadratic aliasing.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;

use super::fft2::{pad, truncate, Fft2};
use super::zmat::{self, Mat};
use crate::field::{Parity, ScalarField2D, ScalarField3D};
use crate::grid::{wavenumber, Grid};
use crate::par;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Spectral coefficients of a 3D channel field.
#[derive(Debug, Clone, PartialEq)]
pub struct Spec3 {
    pub(crate) parity: Parity,
    pub(crate) data: Vec<Complex64>,
}

/// Horizontal spectrum of a 2D field.
#[derive(Debug, Clone, PartialEq)]
pub struct Spec2 {
    pub(crate) data: Vec<Complex64>,
}

impl Spec3 {
    pub(crate) fn zeros(grid: &Grid, parity: Parity) -> Self {
        Self {
            parity,
            data: vec![ZERO; grid.len3()],
        }
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// `self += a * other`; parities must agree.
    pub(crate) fn axpy(&mut self, a: f64, other: &Spec3) {
        debug_assert_eq!(self.parity, other.parity);
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s += o * a;
        }
    }

    pub(crate) fn scale(&mut self, a: f64) {
        for s in &mut self.data {
            *s *= a;
        }
    }

    pub(crate) fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }
}

impl Spec2 {
    pub(crate) fn zeros(grid: &Grid) -> Self {
        Self {
            data: vec![ZERO; grid.plane_len()],
        }
    }

    pub(crate) fn axpy(&mut self, a: f64, other: &Spec2) {
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s += o * a;
        }
    }

    pub(crate) fn scaled(&self, a: f64) -> Self {
        Self {
            data: self.data.iter().map(|c| c * a).collect(),
        }
    }
}

/// Transform plans and vertical matrices for one grid.
pub struct Channel {
    grid: Grid,
    fine: (usize, usize, usize),
    h: Fft2,
    hf: Fft2,
    kx: Vec<f64>,
    ky: Vec<f64>,
    even_fwd: Mat,
    even_inv: Mat,
    odd_fwd: Mat,
    odd_inv: Mat,
    even_fwd_f: Mat,
    even_inv_f: Mat,
    odd_fwd_f: Mat,
    odd_inv_f: Mat,
}

/// Retained wavenumbers of an `n`-point axis; the Nyquist bin maps to zero.
fn axis_wavenumbers(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if 2 * i == n { 0.0 } else { wavenumber(i, n) as f64 })
        .collect()
}

impl Channel {
    fn new(grid: Grid) -> Self {
        let (nxf, nyf, nzf) = grid.fine();
        let nz = grid.nz;
        Self {
            grid,
            fine: (nxf, nyf, nzf),
            h: Fft2::new(grid.nx, grid.ny),
            hf: Fft2::new(nxf, nyf),
            kx: axis_wavenumbers(grid.nx),
            ky: axis_wavenumbers(grid.ny),
            even_fwd: zmat::even_forward(nz, nz),
            even_inv: zmat::even_inverse(nz, nz),
            odd_fwd: zmat::odd_forward(nz, nz),
            odd_inv: zmat::odd_inverse(nz, nz),
            even_fwd_f: zmat::even_forward(nz, nzf),
            even_inv_f: zmat::even_inverse(nz, nzf),
            odd_fwd_f: zmat::odd_forward(nz, nzf),
            odd_inv_f: zmat::odd_inverse(nz, nzf),
        }
    }

    /// Shared engine for `grid`; plans are built once per grid.
    pub fn get(grid: &Grid) -> Arc<Channel> {
        static CACHE: OnceLock<Mutex<HashMap<Grid, Arc<Channel>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
        map.entry(*grid).or_insert_with(|| Arc::new(Channel::new(*grid))).clone()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Padded grid sizes `(nx, ny, nz)`.
    pub fn fine_dims(&self) -> (usize, usize, usize) {
        self.fine
    }

    pub(crate) fn fine_plane_len(&self) -> usize {
        self.fine.0 * self.fine.1
    }

    pub(crate) fn fine_len3(&self) -> usize {
        self.fine_plane_len() * (self.fine.2 + 1)
    }

    pub(crate) fn kx(&self) -> &[f64] {
        &self.kx
    }

    pub(crate) fn ky(&self) -> &[f64] {
        &self.ky
    }

    fn mats(&self, parity: Parity) -> (&Mat, &Mat, &Mat, &Mat) {
        match parity {
            Parity::Even => (&self.even_fwd, &self.even_inv, &self.even_fwd_f, &self.even_inv_f),
            Parity::Odd => (&self.odd_fwd, &self.odd_inv, &self.odd_fwd_f, &self.odd_inv_f),
        }
    }

    // ---- horizontal plane batches --------------------------------------

    fn planes_forward(fft: &Fft2, real: &[f64], out: &mut [Complex64]) {
        let plen = fft.len();
        par::for_each_chunk(out, 2 * plen, |p, chunk| {
            let mut w = fft.work();
            let a = &real[2 * p * plen..(2 * p + 1) * plen];
            if chunk.len() == 2 * plen {
                let b = &real[(2 * p + 1) * plen..(2 * p + 2) * plen];
                let (oa, ob) = chunk.split_at_mut(plen);
                fft.forward_pair(a, Some(b), oa, Some(ob), &mut w);
            } else {
                fft.forward_pair(a, None, chunk, None, &mut w);
            }
        });
    }

    fn planes_inverse(fft: &Fft2, spec: &[Complex64], out: &mut [f64]) {
        let plen = fft.len();
        par::for_each_chunk(out, 2 * plen, |p, chunk| {
            let mut w = fft.work();
            let sa = &spec[2 * p * plen..(2 * p + 1) * plen];
            if chunk.len() == 2 * plen {
                let sb = &spec[(2 * p + 1) * plen..(2 * p + 2) * plen];
                let (a, b) = chunk.split_at_mut(plen);
                fft.inverse_pair(sa, Some(sb), a, Some(b), &mut w);
            } else {
                fft.inverse_pair(sa, None, chunk, None, &mut w);
            }
        });
    }

    /// Coarse spectra to fine nodal planes (horizontal only).
    fn planes_to_fine(&self, spec: &[Complex64], out: &mut [f64]) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let (nxf, nyf) = (self.fine.0, self.fine.1);
        let plen = nx * ny;
        let plenf = nxf * nyf;
        par::for_each_chunk(out, 2 * plenf, |p, chunk| {
            let mut w = self.hf.work();
            let mut fa = vec![ZERO; plenf];
            pad(&spec[2 * p * plen..(2 * p + 1) * plen], (nx, ny), &mut fa, (nxf, nyf));
            if chunk.len() == 2 * plenf {
                let mut fb = vec![ZERO; plenf];
                pad(&spec[(2 * p + 1) * plen..(2 * p + 2) * plen], (nx, ny), &mut fb, (nxf, nyf));
                let (a, b) = chunk.split_at_mut(plenf);
                self.hf.inverse_pair(&fa, Some(&fb), a, Some(b), &mut w);
            } else {
                self.hf.inverse_pair(&fa, None, chunk, None, &mut w);
            }
        });
    }

    /// Fine nodal planes to coarse spectra (horizontal only).
    fn planes_from_fine(&self, real: &[f64], out: &mut [Complex64]) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let (nxf, nyf) = (self.fine.0, self.fine.1);
        let plen = nx * ny;
        let plenf = nxf * nyf;
        par::for_each_chunk(out, 2 * plen, |p, chunk| {
            let mut w = self.hf.work();
            let mut fa = vec![ZERO; plenf];
            let a = &real[2 * p * plenf..(2 * p + 1) * plenf];
            if chunk.len() == 2 * plen {
                let mut fb = vec![ZERO; plenf];
                let b = &real[(2 * p + 1) * plenf..(2 * p + 2) * plenf];
                self.hf.forward_pair(a, Some(b), &mut fa, Some(&mut fb), &mut w);
                let (oa, ob) = chunk.split_at_mut(plen);
                truncate(&fa, (nxf, nyf), oa, (nx, ny));
                truncate(&fb, (nxf, nyf), ob, (nx, ny));
            } else {
                self.hf.forward_pair(a, None, &mut fa, None, &mut w);
                truncate(&fa, (nxf, nyf), chunk, (nx, ny));
            }
        });
    }

    // ---- transforms ----------------------------------------------------

    pub fn forward(&self, f: &ScalarField3D) -> Spec3 {
        self.forward_raw(f.data(), f.parity())
    }

    pub(crate) fn forward_raw(&self, data: &[f64], parity: Parity) -> Spec3 {
        let plen = self.grid.plane_len();
        let mut zc = vec![0.0; self.grid.len3()];
        self.mats(parity).0.apply(data, plen, &mut zc);
        let mut out = Spec3::zeros(&self.grid, parity);
        Self::planes_forward(&self.h, &zc, &mut out.data);
        // A uniform cosine field is exactly the mean mode; round-off in the
        // other modes would be amplified by derivatives.
        if parity == Parity::Even && data.iter().all(|&v| v == data[0]) {
            out.data[1..].fill(ZERO);
        }
        out
    }

    pub fn inverse(&self, s: &Spec3) -> ScalarField3D {
        let data = self.inverse_raw(s);
        ScalarField3D::from_vec(self.grid, s.parity, data).expect("sizes match")
    }

    pub(crate) fn inverse_raw(&self, s: &Spec3) -> Vec<f64> {
        let plen = self.grid.plane_len();
        let mut zc = vec![0.0; self.grid.len3()];
        Self::planes_inverse(&self.h, &s.data, &mut zc);
        let mut out = vec![0.0; self.grid.len3()];
        self.mats(s.parity).1.apply(&zc, plen, &mut out);
        out
    }

    pub fn forward2(&self, f: &ScalarField2D) -> Spec2 {
        self.forward2_raw(f.data())
    }

    pub(crate) fn forward2_raw(&self, data: &[f64]) -> Spec2 {
        let mut out = Spec2::zeros(&self.grid);
        Self::planes_forward(&self.h, data, &mut out.data);
        out
    }

    pub fn inverse2(&self, s: &Spec2) -> ScalarField2D {
        let mut data = vec![0.0; self.grid.plane_len()];
        Self::planes_inverse(&self.h, &s.data, &mut data);
        ScalarField2D::from_vec(self.grid, data).expect("sizes match")
    }

    /// Values on the padded grid (`(nzf + 1)` planes of `nxf * nyf`).
    pub(crate) fn to_fine(&self, s: &Spec3) -> Vec<f64> {
        let plenf = self.fine_plane_len();
        let mut h = vec![0.0; plenf * (self.grid.nz + 1)];
        self.planes_to_fine(&s.data, &mut h);
        let mut out = vec![0.0; self.fine_len3()];
        self.mats(s.parity).3.apply(&h, plenf, &mut out);
        out
    }

    /// Coarse spectrum of fine nodal values, dropping modes the coarse grid
    /// does not retain.
    pub(crate) fn from_fine(&self, fine: &[f64], parity: Parity) -> Spec3 {
        let plenf = self.fine_plane_len();
        let mut h = vec![0.0; plenf * (self.grid.nz + 1)];
        self.mats(parity).2.apply(fine, plenf, &mut h);
        let mut out = Spec3::zeros(&self.grid, parity);
        self.planes_from_fine(&h, &mut out.data);
        out
    }

    pub(crate) fn to_fine2(&self, s: &Spec2) -> Vec<f64> {
        let mut out = vec![0.0; self.fine_plane_len()];
        self.planes_to_fine(&s.data, &mut out);
        out
    }

    pub(crate) fn from_fine2(&self, fine: &[f64]) -> Spec2 {
        let mut out = Spec2::zeros(&self.grid);
        self.planes_from_fine(fine, &mut out.data);
        out
    }

    // ---- spectral operators --------------------------------------------

    fn horizontal_multiplier(&self, s: &[Complex64], mult: impl Fn(f64, f64) -> Complex64) -> Vec<Complex64> {
        let nx = self.grid.nx;
        let plen = self.grid.plane_len();
        s.iter()
            .enumerate()
            .map(|(n, c)| {
                let q = n % plen;
                c * mult(self.kx[q % nx], self.ky[q / nx])
            })
            .collect()
    }

    pub(crate) fn dx(&self, s: &Spec3) -> Spec3 {
        Spec3 {
            parity: s.parity,
            data: self.horizontal_multiplier(&s.data, |kx, _| I * kx),
        }
    }

    pub(crate) fn dy(&self, s: &Spec3) -> Spec3 {
        Spec3 {
            parity: s.parity,
            data: self.horizontal_multiplier(&s.data, |_, ky| I * ky),
        }
    }

    pub(crate) fn lap_h(&self, s: &Spec3) -> Spec3 {
        Spec3 {
            parity: s.parity,
            data: self.horizontal_multiplier(&s.data, |kx, ky| Complex64::from(-(kx * kx + ky * ky))),
        }
    }

    pub(crate) fn dx2(&self, s: &Spec2) -> Spec2 {
        Spec2 {
            data: self.horizontal_multiplier(&s.data, |kx, _| I * kx),
        }
    }

    pub(crate) fn dy2(&self, s: &Spec2) -> Spec2 {
        Spec2 {
            data: self.horizontal_multiplier(&s.data, |_, ky| I * ky),
        }
    }

    pub(crate) fn lap2(&self, s: &Spec2) -> Spec2 {
        Spec2 {
            data: self.horizontal_multiplier(&s.data, |kx, ky| Complex64::from(-(kx * kx + ky * ky))),
        }
    }

    /// First z-derivative; flips the parity.
    pub(crate) fn dz(&self, s: &Spec3) -> Spec3 {
        let nz = self.grid.nz;
        let plen = self.grid.plane_len();
        let mut out = Spec3::zeros(&self.grid, s.parity.flip());
        match s.parity {
            Parity::Even => {
                // boundary values of a sine series are zero
                for m in 1..nz {
                    let f = -(m as f64) * PI;
                    for q in 0..plen {
                        out.data[m * plen + q] = s.data[m * plen + q] * f;
                    }
                }
            }
            Parity::Odd => {
                for q in 0..plen {
                    out.data[q] = s.data[nz * plen + q] - s.data[q];
                }
                for m in 1..nz {
                    let f = m as f64 * PI;
                    for q in 0..plen {
                        out.data[m * plen + q] = s.data[m * plen + q] * f;
                    }
                }
            }
        }
        out
    }

    /// Second z-derivative; keeps the parity.
    pub(crate) fn d2z(&self, s: &Spec3) -> Spec3 {
        let nz = self.grid.nz;
        let plen = self.grid.plane_len();
        let mut out = Spec3::zeros(&self.grid, s.parity);
        for m in 1..nz {
            let f = -(m as f64 * PI).powi(2);
            for q in 0..plen {
                out.data[m * plen + q] = s.data[m * plen + q] * f;
            }
        }
        out
    }

    /// Vertical mean.
    pub(crate) fn average(&self, s: &Spec3) -> Spec2 {
        let nz = self.grid.nz;
        let plen = self.grid.plane_len();
        match s.parity {
            Parity::Even => Spec2 {
                data: s.data[..plen].to_vec(),
            },
            Parity::Odd => {
                let mut data: Vec<Complex64> = (0..plen)
                    .map(|q| (s.data[q] + s.data[nz * plen + q]) * 0.5)
                    .collect();
                for m in (1..nz).step_by(2) {
                    let f = 2.0 / (m as f64 * PI);
                    for q in 0..plen {
                        data[q] += s.data[m * plen + q] * f;
                    }
                }
                Spec2 { data }
            }
        }
    }

    /// `f - mean(f)`.
    pub(crate) fn fluctuation(&self, s: &Spec3) -> Spec3 {
        let nz = self.grid.nz;
        let plen = self.grid.plane_len();
        let mut out = s.clone();
        match s.parity {
            Parity::Even => out.data[..plen].iter_mut().for_each(|c| *c = ZERO),
            Parity::Odd => {
                let avg = self.average(s);
                for q in 0..plen {
                    out.data[q] -= avg.data[q];
                    out.data[nz * plen + q] -= avg.data[q];
                }
            }
        }
        out
    }

    /// `F(z) = int_0^z f`; defined for cosine series only.
    pub(crate) fn cumulative_integral(&self, s: &Spec3) -> Option<Spec3> {
        if s.parity != Parity::Even {
            return None;
        }
        let nz = self.grid.nz;
        let plen = self.grid.plane_len();
        let mut out = Spec3::zeros(&self.grid, Parity::Odd);
        out.data[nz * plen..].copy_from_slice(&s.data[..plen]);
        for m in 1..nz {
            let f = 1.0 / (m as f64 * PI);
            for q in 0..plen {
                out.data[m * plen + q] = s.data[m * plen + q] * f;
            }
        }
        Some(out)
    }
}
