//! Fully periodic spectral engine on `T^3`.
//!
//! Used for the evenly extended channel (z-period 2) and for the inequality
//! lab (period `2 pi` in every direction). Spectra are in full FFT order,
//! x fastest, normalized so that `f = sum_k f_k exp(i k.x)`. Two real fields
//! share one complex transform as `a + i b` wherever possible.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::fft2::Fft2;
use crate::grid::{pad_even, wavenumber};
use crate::par;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Clone)]
struct Plan3 {
    dims: (usize, usize, usize),
    h: Fft2,
    fz: Arc<dyn Fft<f64>>,
    iz: Arc<dyn Fft<f64>>,
}

impl Plan3 {
    fn new(dims: (usize, usize, usize)) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            dims,
            h: Fft2::new(dims.0, dims.1),
            fz: planner.plan_fft_forward(dims.2),
            iz: planner.plan_fft_inverse(dims.2),
        }
    }

    fn len(&self) -> usize {
        self.dims.0 * self.dims.1 * self.dims.2
    }

    /// Unnormalized in-place 3D transform.
    fn process(&self, data: &mut [Complex64], forward: bool) {
        let (nx, ny, nz) = self.dims;
        let plen = nx * ny;
        par::for_each_chunk(data, plen, |_, plane| {
            let mut w = self.h.work();
            if forward {
                self.h.forward_complex(plane, &mut w);
            } else {
                self.h.inverse_complex(plane, &mut w);
            }
        });
        let mut lines = vec![ZERO; data.len()];
        for k in 0..nz {
            for q in 0..plen {
                lines[q * nz + k] = data[k * plen + q];
            }
        }
        let f = if forward { &self.fz } else { &self.iz };
        par::for_each_chunk(&mut lines, nz, |_, line| f.process(line));
        for k in 0..nz {
            for q in 0..plen {
                data[k * plen + q] = lines[q * nz + k];
            }
        }
    }
}

/// Periodic box with `x, y` period `2 pi` and a configurable z-period.
#[derive(Clone)]
pub struct Torus {
    coarse: Plan3,
    fine: Plan3,
    kx: Vec<f64>,
    ky: Vec<f64>,
    kz: Vec<f64>,
}

fn axis(n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|i| if 2 * i == n { 0.0 } else { scale * wavenumber(i, n) as f64 })
        .collect()
}

impl Torus {
    /// `nx, ny, nz` must be even; the z wavenumbers are `2 pi k / z_period`.
    pub fn new(nx: usize, ny: usize, nz: usize, z_period: f64) -> Self {
        let fine = (pad_even(nx), pad_even(ny), pad_even(nz));
        Self {
            coarse: Plan3::new((nx, ny, nz)),
            fine: Plan3::new(fine),
            kx: axis(nx, 1.0),
            ky: axis(ny, 1.0),
            kz: axis(nz, 2.0 * std::f64::consts::PI / z_period),
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.coarse.dims
    }

    pub fn fine_dims(&self) -> (usize, usize, usize) {
        self.fine.dims
    }

    pub fn len(&self) -> usize {
        self.coarse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn fine_len(&self) -> usize {
        self.fine.len()
    }

    pub fn kx(&self) -> &[f64] {
        &self.kx
    }

    pub fn ky(&self) -> &[f64] {
        &self.ky
    }

    pub fn kz(&self) -> &[f64] {
        &self.kz
    }

    /// Wavevector of flat spectral index `n`.
    #[inline]
    pub fn k(&self, n: usize) -> (f64, f64, f64) {
        let (nx, ny, _) = self.coarse.dims;
        let i = n % nx;
        let j = (n / nx) % ny;
        let l = n / (nx * ny);
        (self.kx[i], self.ky[j], self.kz[l])
    }

    fn is_nyquist(dims: (usize, usize, usize), n: usize) -> bool {
        let (nx, ny, nz) = dims;
        let i = n % nx;
        let j = (n / nx) % ny;
        let l = n / (nx * ny);
        2 * i == nx || 2 * j == ny || 2 * l == nz
    }

    fn split(dims: (usize, usize, usize), buf: &[Complex64], scale: f64) -> (Vec<Complex64>, Vec<Complex64>) {
        let (nx, ny, nz) = dims;
        let mut a = vec![ZERO; buf.len()];
        let mut b = vec![ZERO; buf.len()];
        for l in 0..nz {
            let ln = (nz - l) % nz;
            for j in 0..ny {
                let jn = (ny - j) % ny;
                for i in 0..nx {
                    let inn = (nx - i) % nx;
                    let n = i + nx * (j + ny * l);
                    let c = buf[n];
                    let cm = buf[inn + nx * (jn + ny * ln)].conj();
                    a[n] = (c + cm) * (0.5 * scale);
                    let d = (c - cm) * (0.5 * scale);
                    b[n] = Complex64::new(d.im, -d.re);
                }
            }
        }
        (a, b)
    }

    fn zero_nyquist(dims: (usize, usize, usize), s: &mut [Complex64]) {
        for (n, c) in s.iter_mut().enumerate() {
            if Self::is_nyquist(dims, n) {
                *c = ZERO;
            }
        }
    }

    /// Normalized spectrum of one real field.
    pub fn forward(&self, a: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = a.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.coarse.process(&mut buf, true);
        let scale = 1.0 / self.len() as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        Self::zero_nyquist(self.coarse.dims, &mut buf);
        buf
    }

    /// Normalized spectra of two real fields.
    pub fn forward_pair(&self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
        self.coarse.process(&mut buf, true);
        let (mut sa, mut sb) = Self::split(self.coarse.dims, &buf, 1.0 / self.len() as f64);
        Self::zero_nyquist(self.coarse.dims, &mut sa);
        Self::zero_nyquist(self.coarse.dims, &mut sb);
        (sa, sb)
    }

    /// Nodal values of a Hermitian spectrum.
    pub fn inverse(&self, s: &[Complex64]) -> Vec<f64> {
        let mut buf = s.to_vec();
        self.coarse.process(&mut buf, false);
        buf.iter().map(|c| c.re).collect()
    }

    pub fn inverse_pair(&self, sa: &[Complex64], sb: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let mut buf: Vec<Complex64> = sa.iter().zip(sb).map(|(x, y)| x + Complex64::new(-y.im, y.re)).collect();
        self.coarse.process(&mut buf, false);
        (buf.iter().map(|c| c.re).collect(), buf.iter().map(|c| c.im).collect())
    }

    fn pad_into(&self, s: &[Complex64], fine: &mut [Complex64], weight: Complex64) {
        let (nx, ny, nz) = self.coarse.dims;
        let (fx, fy, fz) = self.fine.dims;
        for l in 0..nz {
            if 2 * l == nz {
                continue;
            }
            let lf = wavenumber(l, nz).rem_euclid(fz as i64) as usize;
            for j in 0..ny {
                if 2 * j == ny {
                    continue;
                }
                let jf = wavenumber(j, ny).rem_euclid(fy as i64) as usize;
                for i in 0..nx {
                    if 2 * i == nx {
                        continue;
                    }
                    let if_ = wavenumber(i, nx).rem_euclid(fx as i64) as usize;
                    fine[if_ + fx * (jf + fy * lf)] += s[i + nx * (j + ny * l)] * weight;
                }
            }
        }
    }

    fn truncate(&self, fine: &[Complex64]) -> Vec<Complex64> {
        let (nx, ny, nz) = self.coarse.dims;
        let (fx, fy, fz) = self.fine.dims;
        let mut out = vec![ZERO; self.len()];
        for l in 0..nz {
            let lf = wavenumber(l, nz).rem_euclid(fz as i64) as usize;
            for j in 0..ny {
                let jf = wavenumber(j, ny).rem_euclid(fy as i64) as usize;
                for i in 0..nx {
                    let if_ = wavenumber(i, nx).rem_euclid(fx as i64) as usize;
                    out[i + nx * (j + ny * l)] = fine[if_ + fx * (jf + fy * lf)];
                }
            }
        }
        Self::zero_nyquist(self.coarse.dims, &mut out);
        out
    }

    /// Nodal values of a real field on the padded grid.
    pub fn to_fine(&self, s: &[Complex64]) -> Vec<f64> {
        let mut buf = vec![ZERO; self.fine_len()];
        self.pad_into(s, &mut buf, Complex64::new(1.0, 0.0));
        self.fine.process(&mut buf, false);
        buf.iter().map(|c| c.re).collect()
    }

    /// Dealiased products `coef * a` and `coef * b` for spectra `a`, `b` and
    /// a coefficient given by its padded-grid values.
    pub fn multiply_pair(&self, coef_fine: &[f64], sa: &[Complex64], sb: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut buf = vec![ZERO; self.fine_len()];
        self.pad_into(sa, &mut buf, Complex64::new(1.0, 0.0));
        self.pad_into(sb, &mut buf, Complex64::new(0.0, 1.0));
        self.fine.process(&mut buf, false);
        for (c, &m) in buf.iter_mut().zip(coef_fine) {
            *c *= m;
        }
        self.fine.process(&mut buf, true);
        let (fa, fb) = Self::split(self.fine.dims, &buf, 1.0 / self.fine_len() as f64);
        (self.truncate(&fa), self.truncate(&fb))
    }

    /// Dealiased product of a padded-grid coefficient with one spectrum.
    pub fn multiply(&self, coef_fine: &[f64], s: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![ZERO; self.fine_len()];
        self.pad_into(s, &mut buf, Complex64::new(1.0, 0.0));
        self.fine.process(&mut buf, false);
        for (c, &m) in buf.iter_mut().zip(coef_fine) {
            *c = Complex64::new(c.re * m, 0.0);
        }
        self.fine.process(&mut buf, true);
        let scale = 1.0 / self.fine_len() as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        self.truncate(&buf)
    }
}
