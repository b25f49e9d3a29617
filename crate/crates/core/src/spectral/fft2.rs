//! Two-dimensional FFTs of real planes.
//!
//! Real planes are transformed two at a time packed as `a + i b`; the
//! Hermitian symmetry of each spectrum separates them again. Spectra are
//! stored in full FFT order (`nx * ny` complex values, x fastest) and are
//! normalized so that `f(x, y) = sum_k f_k exp(i k.x)`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::wavenumber;

#[derive(Clone)]
pub(crate) struct Fft2 {
    pub nx: usize,
    pub ny: usize,
    fx: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

/// Per-task working memory.
pub(crate) struct Work {
    buf: Vec<Complex64>,
    tmp: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fx = planner.plan_fft_forward(nx);
        let ix = planner.plan_fft_inverse(nx);
        let fy = planner.plan_fft_forward(ny);
        let iy = planner.plan_fft_inverse(ny);
        let scratch_len = [&fx, &ix, &fy, &iy]
            .iter()
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Self {
            nx,
            ny,
            fx,
            ix,
            fy,
            iy,
            scratch_len,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn work(&self) -> Work {
        Work {
            buf: vec![Complex64::default(); self.len()],
            tmp: vec![Complex64::default(); self.len()],
            scratch: vec![Complex64::default(); self.scratch_len],
        }
    }

    fn transform(&self, forward: bool, buf: &mut [Complex64], tmp: &mut [Complex64], scratch: &mut [Complex64]) {
        let (nx, ny) = (self.nx, self.ny);
        let (rx, ry) = if forward { (&self.fx, &self.fy) } else { (&self.ix, &self.iy) };
        rx.process_with_scratch(buf, scratch);
        for j in 0..ny {
            for i in 0..nx {
                tmp[j + ny * i] = buf[i + nx * j];
            }
        }
        ry.process_with_scratch(tmp, scratch);
        for i in 0..nx {
            for j in 0..ny {
                buf[i + nx * j] = tmp[j + ny * i];
            }
        }
    }

    /// Spectra of one or two real planes.
    pub fn forward_pair(
        &self,
        a: &[f64],
        b: Option<&[f64]>,
        out_a: &mut [Complex64],
        out_b: Option<&mut [Complex64]>,
        w: &mut Work,
    ) {
        let Work { buf, tmp, scratch } = w;
        match b {
            Some(b) => {
                for ((c, &re), &im) in buf.iter_mut().zip(a).zip(b) {
                    *c = Complex64::new(re, im);
                }
            }
            None => {
                for (c, &re) in buf.iter_mut().zip(a) {
                    *c = Complex64::new(re, 0.0);
                }
            }
        }
        self.transform(true, buf, tmp, scratch);
        let scale = 1.0 / self.len() as f64;
        let (nx, ny) = (self.nx, self.ny);
        match out_b {
            Some(out_b) => {
                for j in 0..ny {
                    let jn = (ny - j) % ny;
                    for i in 0..nx {
                        let inn = (nx - i) % nx;
                        let c = buf[i + nx * j];
                        let cm = buf[inn + nx * jn].conj();
                        out_a[i + nx * j] = (c + cm) * (0.5 * scale);
                        let d = (c - cm) * (0.5 * scale);
                        // (c - conj(c_-k)) / (2i)
                        out_b[i + nx * j] = Complex64::new(d.im, -d.re);
                    }
                }
                zero_nyquist(out_b, nx, ny);
            }
            None => {
                for (o, c) in out_a.iter_mut().zip(buf.iter()) {
                    *o = c * scale;
                }
            }
        }
        zero_nyquist(out_a, nx, ny);
    }

    /// Nodal values of one or two Hermitian spectra.
    pub fn inverse_pair(
        &self,
        sa: &[Complex64],
        sb: Option<&[Complex64]>,
        a: &mut [f64],
        b: Option<&mut [f64]>,
        w: &mut Work,
    ) {
        let Work { buf, tmp, scratch } = w;
        match sb {
            Some(sb) => {
                for ((c, x), y) in buf.iter_mut().zip(sa).zip(sb) {
                    *c = x + Complex64::new(-y.im, y.re);
                }
            }
            None => buf.copy_from_slice(sa),
        }
        self.transform(false, buf, tmp, scratch);
        for (o, c) in a.iter_mut().zip(buf.iter()) {
            *o = c.re;
        }
        if let Some(b) = b {
            for (o, c) in b.iter_mut().zip(buf.iter()) {
                *o = c.im;
            }
        }
    }

    /// Transforms a complex buffer in place (unnormalized).
    pub fn forward_complex(&self, data: &mut [Complex64], w: &mut Work) {
        let Work { tmp, scratch, .. } = w;
        self.transform(true, data, tmp, scratch);
    }

    pub fn inverse_complex(&self, data: &mut [Complex64], w: &mut Work) {
        let Work { tmp, scratch, .. } = w;
        self.transform(false, data, tmp, scratch);
    }
}

/// Clears the Nyquist row and column of an even-sized spectrum.
pub(crate) fn zero_nyquist(s: &mut [Complex64], nx: usize, ny: usize) {
    if nx % 2 == 0 {
        for j in 0..ny {
            s[nx / 2 + nx * j] = Complex64::default();
        }
    }
    if ny % 2 == 0 {
        for i in 0..nx {
            s[i + nx * (ny / 2)] = Complex64::default();
        }
    }
}

/// Copies the retained modes of a coarse spectrum into a zeroed fine one.
pub(crate) fn pad(coarse: &[Complex64], (nx, ny): (usize, usize), fine: &mut [Complex64], (nxf, nyf): (usize, usize)) {
    fine.iter_mut().for_each(|c| *c = Complex64::default());
    for j in 0..ny {
        let ky = wavenumber(j, ny);
        if 2 * ky.unsigned_abs() as usize >= ny {
            continue;
        }
        let jf = ky.rem_euclid(nyf as i64) as usize;
        for i in 0..nx {
            let kx = wavenumber(i, nx);
            if 2 * kx.unsigned_abs() as usize >= nx {
                continue;
            }
            let if_ = kx.rem_euclid(nxf as i64) as usize;
            fine[if_ + nxf * jf] = coarse[i + nx * j];
        }
    }
}

/// Keeps the modes of a fine spectrum that the coarse grid retains.
pub(crate) fn truncate(fine: &[Complex64], (nxf, nyf): (usize, usize), coarse: &mut [Complex64], (nx, ny): (usize, usize)) {
    for j in 0..ny {
        let ky = wavenumber(j, ny);
        let jf = ky.rem_euclid(nyf as i64) as usize;
        for i in 0..nx {
            let kx = wavenumber(i, nx);
            let if_ = kx.rem_euclid(nxf as i64) as usize;
            coarse[i + nx * j] = fine[if_ + nxf * jf];
        }
    }
    zero_nyquist(coarse, nx, ny);
}
