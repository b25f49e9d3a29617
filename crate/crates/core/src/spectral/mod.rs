//! Spectral differentiation, vertical operators and dealiased products.
//!
//! Every function here takes nodal fields and returns fresh nodal fields;
//! spectral data only lives inside the call.

mod channel;
mod fft2;
mod torus;
mod zmat;

pub use channel::{Channel, Spec2, Spec3};
pub use torus::Torus;

use crate::error::{CpeError, Result};
use crate::field::{ScalarField2D, ScalarField3D};

fn checked(f: &ScalarField3D) -> Result<std::sync::Arc<Channel>> {
    f.check_finite("input field")?;
    Ok(Channel::get(f.grid()))
}

fn checked2(f: &ScalarField2D) -> Result<std::sync::Arc<Channel>> {
    f.check_finite("input field")?;
    Ok(Channel::get(f.grid()))
}

/// `df/dx`.
pub fn ddx(f: &ScalarField3D) -> Result<ScalarField3D> {
    let c = checked(f)?;
    if f.is_uniform() {
        return Ok(ScalarField3D::zeros(*f.grid(), f.parity()));
    }
    Ok(c.inverse(&c.dx(&c.forward(f))))
}

/// `df/dy`.
pub fn ddy(f: &ScalarField3D) -> Result<ScalarField3D> {
    let c = checked(f)?;
    if f.is_uniform() {
        return Ok(ScalarField3D::zeros(*f.grid(), f.parity()));
    }
    Ok(c.inverse(&c.dy(&c.forward(f))))
}

/// `df/dz`; the result carries the flipped parity.
pub fn ddz(f: &ScalarField3D) -> Result<ScalarField3D> {
    let c = checked(f)?;
    if f.is_uniform() {
        return Ok(ScalarField3D::zeros(*f.grid(), f.parity().flip()));
    }
    Ok(c.inverse(&c.dz(&c.forward(f))))
}

/// `d2f/dz2`.
pub fn d2dz2(f: &ScalarField3D) -> Result<ScalarField3D> {
    let c = checked(f)?;
    if f.is_uniform() {
        return Ok(ScalarField3D::zeros(*f.grid(), f.parity()));
    }
    Ok(c.inverse(&c.d2z(&c.forward(f))))
}

/// Horizontal Laplacian.
pub fn laplacian_h(f: &ScalarField3D) -> Result<ScalarField3D> {
    let c = checked(f)?;
    if f.is_uniform() {
        return Ok(ScalarField3D::zeros(*f.grid(), f.parity()));
    }
    Ok(c.inverse(&c.lap_h(&c.forward(f))))
}

pub fn ddx_2d(f: &ScalarField2D) -> Result<ScalarField2D> {
    let c = checked2(f)?;
    Ok(c.inverse2(&c.dx2(&c.forward2(f))))
}

pub fn ddy_2d(f: &ScalarField2D) -> Result<ScalarField2D> {
    let c = checked2(f)?;
    Ok(c.inverse2(&c.dy2(&c.forward2(f))))
}

pub fn laplacian_2d(f: &ScalarField2D) -> Result<ScalarField2D> {
    let c = checked2(f)?;
    Ok(c.inverse2(&c.lap2(&c.forward2(f))))
}

/// `int_0^1 f dz`.
pub fn vertical_average(f: &ScalarField3D) -> Result<ScalarField2D> {
    let c = checked(f)?;
    if f.is_uniform() {
        return Ok(ScalarField2D::constant(*f.grid(), f.data()[0]));
    }
    Ok(c.inverse2(&c.average(&c.forward(f))))
}

/// `f - int_0^1 f dz`.
pub fn fluctuation(f: &ScalarField3D) -> Result<ScalarField3D> {
    let c = checked(f)?;
    if f.is_uniform() {
        return Ok(ScalarField3D::zeros(*f.grid(), f.parity()));
    }
    Ok(c.inverse(&c.fluctuation(&c.forward(f))))
}

/// `F(z) = int_0^z f dz'` for an even (cosine) field; `F(0) = 0` exactly.
pub fn vertical_cumulative_integral(f: &ScalarField3D) -> Result<ScalarField3D> {
    let c = checked(f)?;
    let s = c
        .cumulative_integral(&c.forward(f))
        .ok_or_else(|| CpeError::usage("cumulative integral needs an even (cosine) field"))?;
    let mut out = c.inverse(&s);
    // the affine part makes z = 0 exact up to rounding; pin it
    let plen = f.grid().plane_len();
    out.data_mut()[..plen].iter_mut().for_each(|v| *v = 0.0);
    Ok(out)
}

/// Pointwise product on the 3/2-padded grid, truncated back to the grid.
pub trait DealiasedProduct<Rhs> {
    type Output;
    fn multiply_dealiased(&self, rhs: &Rhs) -> Result<Self::Output>;
}

/// `f * g` computed on the padded grid. A spatially uniform factor scales
/// the other operand exactly.
pub fn multiply_dealiased<A, B>(f: &A, g: &B) -> Result<A::Output>
where
    A: DealiasedProduct<B>,
{
    f.multiply_dealiased(g)
}

fn same_grid(a: &crate::grid::Grid, b: &crate::grid::Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(CpeError::usage(format!(
            "shape mismatch: {}x{}x{} vs {}x{}x{}",
            a.nx, a.ny, a.nz, b.nx, b.ny, b.nz
        )))
    }
}

impl DealiasedProduct<ScalarField3D> for ScalarField3D {
    type Output = ScalarField3D;
    fn multiply_dealiased(&self, g: &ScalarField3D) -> Result<ScalarField3D> {
        same_grid(self.grid(), g.grid())?;
        self.check_finite("input field")?;
        g.check_finite("input field")?;
        let parity = self.parity().product(g.parity());
        if self.is_uniform() {
            return Ok(g.scaled(self.data()[0]).with_parity(parity));
        }
        if g.is_uniform() {
            return Ok(self.scaled(g.data()[0]).with_parity(parity));
        }
        let c = Channel::get(self.grid());
        let mut a = c.to_fine(&c.forward(self));
        let b = c.to_fine(&c.forward(g));
        a.iter_mut().zip(&b).for_each(|(x, y)| *x *= y);
        Ok(c.inverse(&c.from_fine(&a, parity)))
    }
}

impl DealiasedProduct<ScalarField2D> for ScalarField2D {
    type Output = ScalarField2D;
    fn multiply_dealiased(&self, g: &ScalarField2D) -> Result<ScalarField2D> {
        same_grid(self.grid(), g.grid())?;
        self.check_finite("input field")?;
        g.check_finite("input field")?;
        if self.is_uniform() {
            return Ok(g.scaled(self.data()[0]));
        }
        if g.is_uniform() {
            return Ok(self.scaled(g.data()[0]));
        }
        let c = Channel::get(self.grid());
        let mut a = c.to_fine2(&c.forward2(self));
        let b = c.to_fine2(&c.forward2(g));
        a.iter_mut().zip(&b).for_each(|(x, y)| *x *= y);
        Ok(c.inverse2(&c.from_fine2(&a)))
    }
}

impl DealiasedProduct<ScalarField2D> for ScalarField3D {
    type Output = ScalarField3D;
    fn multiply_dealiased(&self, g: &ScalarField2D) -> Result<ScalarField3D> {
        same_grid(self.grid(), g.grid())?;
        self.check_finite("input field")?;
        g.check_finite("input field")?;
        if g.is_uniform() {
            return Ok(self.scaled(g.data()[0]));
        }
        if self.is_uniform() {
            return Ok(g.broadcast().scaled(self.data()[0]));
        }
        let c = Channel::get(self.grid());
        let mut a = c.to_fine(&c.forward(self));
        let b = c.to_fine2(&c.forward2(g));
        for level in a.chunks_mut(b.len()) {
            level.iter_mut().zip(&b).for_each(|(x, y)| *x *= y);
        }
        Ok(c.inverse(&c.from_fine(&a, self.parity())))
    }
}

impl DealiasedProduct<ScalarField3D> for ScalarField2D {
    type Output = ScalarField3D;
    fn multiply_dealiased(&self, g: &ScalarField3D) -> Result<ScalarField3D> {
        g.multiply_dealiased(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Parity;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn g(n: usize) -> Grid {
        Grid::cube(n).unwrap()
    }

    #[test]
    fn ddx_of_cosine() {
        let grid = g(16);
        let f = ScalarField3D::from_fn(grid, Parity::Even, |x, _, _| x.cos());
        let d = ddx(&f).unwrap();
        let e = ScalarField3D::from_fn(grid, Parity::Even, |x, _, _| -x.sin());
        assert!(d.max_diff(&e) <= 1e-12);
    }

    #[test]
    fn ddz_of_constant_is_zero() {
        let f = ScalarField3D::constant(g(8), 4.5);
        assert!(ddz(&f).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn ddz_of_cos_2piz() {
        let grid = g(16);
        let f = ScalarField3D::from_fn(grid, Parity::Even, |_, _, z| (2.0 * PI * z).cos());
        let d = ddz(&f).unwrap();
        assert_eq!(d.parity(), Parity::Odd);
        // oracle: central difference with a tiny step on the closed form
        let h = 1e-6;
        let oracle = ScalarField3D::from_fn(grid, Parity::Odd, |_, _, z| {
            ((2.0 * PI * (z + h)).cos() - (2.0 * PI * (z - h)).cos()) / (2.0 * h)
        });
        assert!(d.max_diff(&oracle) <= 1e-8);
        let exact = ScalarField3D::from_fn(grid, Parity::Odd, |_, _, z| -2.0 * PI * (2.0 * PI * z).sin());
        assert!(d.max_diff(&exact) <= 1e-10);
    }

    #[test]
    fn averages_and_fluctuations() {
        let grid = g(16);
        let c2 = ScalarField3D::from_fn(grid, Parity::Even, |_, _, z| (2.0 * PI * z).cos());
        assert!(vertical_average(&c2).unwrap().max_abs() < 1e-14);
        let three = ScalarField3D::constant(grid, 3.0);
        assert!(vertical_average(&three).unwrap().data().iter().all(|v| (v - 3.0).abs() < 1e-15));
        let s2 = ScalarField3D::from_fn(grid, Parity::Even, |_, _, z| (PI * z).sin().powi(2));
        // trapezoid oracle on a much finer mesh
        let n = 20000;
        let quad: f64 = (0..=n)
            .map(|j| {
                let w = if j == 0 || j == n { 0.5 } else { 1.0 };
                w * (PI * j as f64 / n as f64).sin().powi(2)
            })
            .sum::<f64>()
            / n as f64;
        let avg = vertical_average(&s2).unwrap();
        assert!(avg.data().iter().all(|v| (v - quad).abs() < 1e-12));
        let fl = fluctuation(&s2).unwrap();
        let expect = ScalarField3D::from_fn(grid, Parity::Even, |_, _, z| -(2.0 * PI * z).cos() / 2.0);
        assert!(fl.max_diff(&expect) < 1e-13);
        assert!(fluctuation(&fl).unwrap().max_diff(&fl) <= 1e-13);
        assert!(fluctuation(&three).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn cumulative_integral() {
        let grid = g(16);
        let one = ScalarField3D::constant(grid, 1.0);
        let z = ScalarField3D::from_fn(grid, Parity::Odd, |_, _, z| z);
        let f1 = vertical_cumulative_integral(&one).unwrap();
        assert!(f1.max_diff(&z) < 1e-14);
        let c = ScalarField3D::from_fn(grid, Parity::Even, |x, _, z| (2.0 * PI * z).cos() * (1.0 + x.sin()));
        let f = vertical_cumulative_integral(&c).unwrap();
        let e = ScalarField3D::from_fn(grid, Parity::Odd, |x, _, z| (2.0 * PI * z).sin() / (2.0 * PI) * (1.0 + x.sin()));
        assert!(f.max_diff(&e) <= 1e-10);
        assert!(f.level(0).iter().all(|&v| v == 0.0));
        assert!(ddz(&f).unwrap().max_diff(&c) <= 1e-10);
        let odd = ScalarField3D::zeros(grid, Parity::Odd);
        assert!(matches!(vertical_cumulative_integral(&odd), Err(CpeError::UsageFault(_))));
    }

    #[test]
    fn products() {
        let grid = g(16);
        let f = ScalarField3D::from_fn(grid, Parity::Even, |x, y, z| x.sin() * y.cos() + (PI * z).cos());
        let two = ScalarField3D::constant(grid, 2.0);
        assert_eq!(multiply_dealiased(&two, &f).unwrap(), f.scaled(2.0));
        let c = ScalarField3D::from_fn(grid, Parity::Even, |x, _, _| x.cos());
        let sq = multiply_dealiased(&c, &c).unwrap();
        let e = ScalarField3D::from_fn(grid, Parity::Even, |x, _, _| 0.5 * (1.0 + (2.0 * x).cos()));
        assert!(sq.max_diff(&e) <= 1e-12);
        let other = ScalarField3D::zeros(Grid::new(16, 16, 8).unwrap(), Parity::Even);
        assert!(matches!(multiply_dealiased(&f, &other), Err(CpeError::UsageFault(_))));
        let p = ScalarField2D::from_fn(grid, |x, _| 1.0 + 0.5 * x.cos());
        let m = multiply_dealiased(&c, &p).unwrap();
        let e = ScalarField3D::from_fn(grid, Parity::Even, |x, _, _| x.cos() * (1.0 + 0.5 * x.cos()));
        assert!(m.max_diff(&e) <= 1e-12);
        let nan = ScalarField3D::constant(grid, f64::NAN);
        assert!(matches!(ddx(&nan), Err(CpeError::NumericalFault(_))));
    }

    #[test]
    fn odd_times_odd_is_even() {
        let grid = g(16);
        let s = ScalarField3D::from_fn(grid, Parity::Odd, |_, _, z| (PI * z).sin());
        let sq = multiply_dealiased(&s, &s).unwrap();
        assert_eq!(sq.parity(), Parity::Even);
        let e = ScalarField3D::from_fn(grid, Parity::Even, |_, _, z| 0.5 * (1.0 - (2.0 * PI * z).cos()));
        assert!(sq.max_diff(&e) <= 1e-12);
    }
}
