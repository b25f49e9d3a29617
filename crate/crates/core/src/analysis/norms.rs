//! Derivative-sum Sobolev norms evaluated exactly from spectral coefficients.

use crate::error::{CpeError, Result};
use crate::field::{Parity, ScalarField2D, ScalarField3D, VectorField3D2C};
use crate::grid::PERIOD;
use crate::spectral::{Channel, Spec3};

/// Highest supported derivative order.
pub const MAX_ORDER: usize = 4;

/// `sum_{|alpha| <= k} kx^(2 a1) ky^(2 a2) kz^(2 a3)`.
fn weight(kx: f64, ky: f64, kz: f64, k: usize) -> f64 {
    let (x2, y2, z2) = (kx * kx, ky * ky, kz * kz);
    let mut total = 0.0;
    let mut px = 1.0;
    for a in 0..=k {
        let mut py = 1.0;
        for b in 0..=k - a {
            let mut pz = 1.0;
            for _ in 0..=k - a - b {
                total += px * py * pz;
                pz *= z2;
            }
            py *= y2;
        }
        px *= x2;
    }
    total
}

fn check_order(k: usize) -> Result<()> {
    if k > MAX_ORDER {
        return Err(CpeError::usage(format!("Sobolev order {k} exceeds {MAX_ORDER}")));
    }
    Ok(())
}

/// Squared `H^k` norm of a channel spectrum after `dz_extra` further
/// z-derivatives; odd spectra must vanish on both walls.
pub(crate) fn spec3_norm_sq(c: &Channel, s: &Spec3, k: usize, dz_extra: u32) -> Result<f64> {
    let g = c.grid();
    let plen = g.plane_len();
    let nz = g.nz;
    if s.parity() == Parity::Odd {
        let wall = s.data[..plen].iter().chain(&s.data[nz * plen..]).map(|z| z.norm()).fold(0.0, f64::max);
        let scale = s.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if wall > 1e-12 * scale.max(1.0) {
            return Err(CpeError::usage("Sobolev norm of an odd field needs zero wall values"));
        }
    }
    let kx = c.kx();
    let ky = c.ky();
    let mut total = 0.0;
    for m in 0..nz {
        // the odd slot 0 holds a wall value, not a sine mode
        if s.parity() == Parity::Odd && m == 0 {
            continue;
        }
        let kz = m as f64 * std::f64::consts::PI;
        let zw = if m == 0 { 1.0 } else { 0.5 } * kz.powi(2 * dz_extra as i32);
        if zw == 0.0 {
            continue;
        }
        let plane = &s.data[m * plen..(m + 1) * plen];
        for (q, z) in plane.iter().enumerate() {
            let a = z.norm_sqr();
            if a != 0.0 {
                total += zw * weight(kx[q % g.nx], ky[q / g.nx], kz, k) * a;
            }
        }
    }
    Ok(total * PERIOD * PERIOD)
}

/// Fields with a Sobolev norm.
pub trait SobolevNorm {
    /// `sum_{|alpha| <= k} ||D^alpha f||_2^2`.
    fn sobolev_norm_sq(&self, k: usize) -> Result<f64>;
}

impl SobolevNorm for ScalarField3D {
    fn sobolev_norm_sq(&self, k: usize) -> Result<f64> {
        check_order(k)?;
        self.check_finite("norm input")?;
        let c = Channel::get(self.grid());
        spec3_norm_sq(&c, &c.forward(self), k, 0)
    }
}

impl SobolevNorm for ScalarField2D {
    fn sobolev_norm_sq(&self, k: usize) -> Result<f64> {
        check_order(k)?;
        self.check_finite("norm input")?;
        let c = Channel::get(self.grid());
        let g = c.grid();
        let s = c.forward2(self);
        let total: f64 = s
            .data
            .iter()
            .enumerate()
            .map(|(q, z)| weight(c.kx()[q % g.nx], c.ky()[q / g.nx], 0.0, k) * z.norm_sqr())
            .sum();
        Ok(total * PERIOD * PERIOD)
    }
}

impl SobolevNorm for VectorField3D2C {
    fn sobolev_norm_sq(&self, k: usize) -> Result<f64> {
        Ok(self.x.sobolev_norm_sq(k)? + self.y.sobolev_norm_sq(k)?)
    }
}

/// `||f||_{H^k}`.
pub fn sobolev_norm<F: SobolevNorm + ?Sized>(f: &F, k: usize) -> Result<f64> {
    Ok(f.sobolev_norm_sq(k)?.sqrt())
}

/// `||d_z f||^2_{H^k}` of a Neumann field.
pub fn dz_sobolev_norm_sq(f: &ScalarField3D, k: usize) -> Result<f64> {
    check_order(k)?;
    if f.parity() != Parity::Even {
        return Err(CpeError::usage("expected an even field"));
    }
    let c = Channel::get(f.grid());
    spec3_norm_sq(&c, &c.forward(f), k, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    #[test]
    fn weight_counts_multi_indices() {
        // number of alpha with |alpha| <= k in 3D is C(k + 3, 3)
        for (k, n) in [(0, 1.0), (1, 4.0), (2, 10.0), (4, 35.0)] {
            assert_eq!(weight(1.0, 1.0, 1.0, k), n);
        }
        assert_eq!(weight(2.0, 0.0, 0.0, 2), 1.0 + 4.0 + 16.0);
    }

    #[test]
    fn constants_and_cosines() {
        let g = Grid::cube(8).unwrap();
        let area = (2.0 * PI).powi(2);
        for k in 0..=4 {
            let c = ScalarField2D::constant(g, -3.0);
            assert!((sobolev_norm(&c, k).unwrap() - 3.0 * 2.0 * PI).abs() < 1e-12);
        }
        let f = ScalarField2D::from_fn(g, |x, _| x.cos());
        // oracle: midpoint quadrature of cos^2 + sin^2 over the torus
        let n = 400;
        let h = 2.0 * PI / n as f64;
        let quad: f64 = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                x.cos().powi(2) + x.sin().powi(2)
            })
            .sum::<f64>()
            * h
            * 2.0
            * PI;
        assert!((f.sobolev_norm_sq(1).unwrap() - quad).abs() < 1e-10);
        assert!((quad - area).abs() < 1e-10);
        let s = ScalarField3D::constant(g, 1.0);
        assert!((s.sobolev_norm_sq(2).unwrap() - area).abs() < 1e-11);
    }

    #[test]
    fn vertical_modes() {
        let g = Grid::cube(12).unwrap();
        let f = ScalarField3D::from_fn(g, Parity::Even, |_, _, z| (PI * z).cos());
        let area = (2.0 * PI).powi(2);
        let l2 = area * 0.5;
        assert!((f.sobolev_norm_sq(0).unwrap() - l2).abs() < 1e-12);
        assert!((f.sobolev_norm_sq(1).unwrap() - l2 * (1.0 + PI * PI)).abs() < 1e-10);
        assert!((dz_sobolev_norm_sq(&f, 0).unwrap() - l2 * PI * PI).abs() < 1e-10);
        let sine = crate::spectral::ddz(&f).unwrap();
        assert!((sine.sobolev_norm_sq(1).unwrap() - dz_sobolev_norm_sq(&f, 1).unwrap()).abs() < 1e-9);
        let ramp = ScalarField3D::from_fn(g, Parity::Odd, |_, _, z| z);
        assert!(matches!(ramp.sobolev_norm_sq(0), Err(CpeError::UsageFault(_))));
        assert!(f.sobolev_norm_sq(5).is_err());
    }
}
