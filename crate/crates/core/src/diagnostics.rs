//! Derived fields: strain and heating, the divergence correction `phi`, the
//! diagnostic vertical velocity `w`, thermodynamic reconstruction, mass, and
//! the continuity residual of the original mass equation.
//!
//! The `*_spec` helpers work on spectra and are shared with the tendency
//! assembly so that one call computes each diagnostic once.

use crate::error::{CpeError, Result};
use crate::field::{Parity, ScalarField2D, ScalarField3D, State, VectorField3D2C};
use crate::grid::PERIOD;
use crate::params::PhysParams;
use crate::spectral::{Channel, Spec2, Spec3};

/// Default tolerance for boundary and sign checks.
pub const TOL_BC: f64 = 1e-11;

/// Symmetric horizontal stress `S_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrainTensor {
    pub xx: ScalarField3D,
    pub xy: ScalarField3D,
    pub yy: ScalarField3D,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticFields {
    pub w: ScalarField3D,
    pub phi: ScalarField3D,
    pub q: ScalarField3D,
    pub sh: StrainTensor,
    pub rho: ScalarField3D,
    pub theta: ScalarField3D,
}

/// Velocity spectra, their horizontal derivatives, and the padded-grid values
/// of the full gradient (`v1x, v1y, v2x, v2y, v1z, v2z`).
pub(crate) struct VelocityParts {
    pub v1: Spec3,
    pub v2: Spec3,
    pub v1x: Spec3,
    pub v1y: Spec3,
    pub v2x: Spec3,
    pub v2y: Spec3,
    pub div: Spec3,
    pub grad_fine: [Vec<f64>; 6],
}

impl VelocityParts {
    pub fn new(c: &Channel, v: &VectorField3D2C) -> Self {
        let v1 = c.forward(&v.x);
        let v2 = c.forward(&v.y);
        let v1x = c.dx(&v1);
        let v1y = c.dy(&v1);
        let v2x = c.dx(&v2);
        let v2y = c.dy(&v2);
        let v1z = c.dz(&v1);
        let v2z = c.dz(&v2);
        let mut div = v1x.clone();
        div.axpy(1.0, &v2y);
        let grad_fine = [
            c.to_fine(&v1x),
            c.to_fine(&v1y),
            c.to_fine(&v2x),
            c.to_fine(&v2y),
            c.to_fine(&v1z),
            c.to_fine(&v2z),
        ];
        Self {
            v1,
            v2,
            v1x,
            v1y,
            v2x,
            v2y,
            div,
            grad_fine,
        }
    }
}

/// `Q = S_h : grad_h v + mu |dz v|^2`, formed in one padded pass.
pub(crate) fn heating_spec(c: &Channel, parts: &VelocityParts, params: &PhysParams) -> Spec3 {
    let (mu, lambda) = (params.mu(), params.lambda());
    let [a, b, cc, d, e, f] = &parts.grad_fine;
    let q: Vec<f64> = (0..a.len())
        .map(|n| {
            let (ux, uy, vx, vy) = (a[n], b[n], cc[n], d[n]);
            let div = ux + vy;
            let shear = uy + vx;
            mu * (2.0 * ux * ux + 2.0 * vy * vy + shear * shear)
                + lambda * div * div
                + mu * (e[n] * e[n] + f[n] * f[n])
        })
        .collect();
    c.from_fine(&q, Parity::Even)
}

fn check_pressure(p: &ScalarField2D) -> Result<()> {
    p.check_finite("p")?;
    let min = p.min();
    if min <= 0.0 {
        return Err(CpeError::PressurePositivityLost { min });
    }
    Ok(())
}

fn check_sigma(sigma: &ScalarField3D) -> Result<()> {
    sigma.check_finite("sigma")?;
    let min = sigma.min();
    if min <= 0.0 {
        return Err(CpeError::SigmaPositivityLost { min });
    }
    Ok(())
}

/// `phi = div_h v~ + (v~ . grad_h p - (gamma - 1) Q~) / (gamma p)`.
///
/// The quotient is a second dealiased product with the nodal reciprocal of
/// `gamma p`.
pub(crate) fn phi_spec(
    c: &Channel,
    parts: &VelocityParts,
    q: &Spec3,
    p_spec: &Spec2,
    p: &ScalarField2D,
    params: &PhysParams,
) -> Result<Spec3> {
    check_pressure(p)?;
    let gamma = params.gamma();
    let vt1 = c.to_fine(&c.fluctuation(&parts.v1));
    let vt2 = c.to_fine(&c.fluctuation(&parts.v2));
    let px = c.to_fine2(&c.dx2(p_spec));
    let py = c.to_fine2(&c.dy2(p_spec));
    let plenf = px.len();
    let mut adv = vec![0.0; vt1.len()];
    for (lvl, out) in adv.chunks_mut(plenf).enumerate() {
        let off = lvl * plenf;
        for q in 0..plenf {
            out[q] = vt1[off + q] * px[q] + vt2[off + q] * py[q];
        }
    }
    let mut g = c.from_fine(&adv, parts.v1.parity());
    g.axpy(-(gamma - 1.0), &c.fluctuation(q));
    let quotient = if p.is_uniform() {
        g.scaled(1.0 / (gamma * p.data()[0]))
    } else {
        let recip: Vec<f64> = p.data().iter().map(|v| 1.0 / (gamma * v)).collect();
        let rf = c.to_fine2(&c.forward2_raw(&recip));
        let mut gf = c.to_fine(&g);
        for level in gf.chunks_mut(plenf) {
            level.iter_mut().zip(&rf).for_each(|(x, r)| *x *= r);
        }
        c.from_fine(&gf, g.parity())
    };
    let mut phi = c.fluctuation(&parts.div);
    phi.axpy(1.0, &quotient);
    Ok(phi)
}

/// `w = nu dz sigma - int_0^z phi`.
pub(crate) fn w_spec(c: &Channel, sigma: &Spec3, phi: &Spec3, params: &PhysParams) -> Result<Spec3> {
    if sigma.parity() != Parity::Even {
        return Err(CpeError::usage("vertical velocity needs a Neumann (even) sigma"));
    }
    let integral = c
        .cumulative_integral(phi)
        .ok_or_else(|| CpeError::usage("phi must be an even field"))?;
    let mut w = c.dz(sigma).scaled(params.nu());
    w.axpy(-1.0, &integral);
    Ok(w)
}

/// Nodal values of `w`, with the bottom level pinned to zero.
pub(crate) fn w_nodal(c: &Channel, w: &Spec3) -> ScalarField3D {
    let mut out = c.inverse(w);
    let plen = c.grid().plane_len();
    out.data_mut()[..plen].iter_mut().for_each(|v| *v = 0.0);
    out
}

fn warn_negative_heating(q: &ScalarField3D, tol_bc: f64) {
    let min = q.min();
    if min < -tol_bc {
        log::warn!("heating is negative somewhere: min Q = {min:e}");
    }
}

/// Heating `Q` and the stress `S_h`.
pub fn heating(v: &VectorField3D2C, params: &PhysParams) -> Result<(ScalarField3D, StrainTensor)> {
    v.check_finite("v")?;
    let c = Channel::get(v.grid());
    let parts = VelocityParts::new(&c, v);
    let q = c.inverse(&heating_spec(&c, &parts, params));
    warn_negative_heating(&q, TOL_BC);
    let (mu, lambda) = (params.mu(), params.lambda());
    let mut xx = parts.v1x.scaled(2.0 * mu);
    xx.axpy(lambda, &parts.div);
    let mut yy = parts.v2y.scaled(2.0 * mu);
    yy.axpy(lambda, &parts.div);
    let mut xy = parts.v1y.scaled(mu);
    xy.axpy(mu, &parts.v2x);
    let sh = StrainTensor {
        xx: c.inverse(&xx),
        xy: c.inverse(&xy),
        yy: c.inverse(&yy),
    };
    Ok((q, sh))
}

/// The divergence correction `phi(v, p)`; its vertical mean vanishes.
pub fn phi(v: &VectorField3D2C, p: &ScalarField2D, params: &PhysParams) -> Result<ScalarField3D> {
    v.check_finite("v")?;
    check_pressure(p)?;
    let c = Channel::get(v.grid());
    let parts = VelocityParts::new(&c, v);
    let q = heating_spec(&c, &parts, params);
    let phi = phi_spec(&c, &parts, &q, &c.forward2(p), p, params)?;
    Ok(c.inverse(&phi))
}

/// Diagnostic vertical velocity; zero at `z = 0` exactly.
pub fn vertical_velocity(
    sigma: &ScalarField3D,
    v: &VectorField3D2C,
    p: &ScalarField2D,
    params: &PhysParams,
) -> Result<ScalarField3D> {
    sigma.check_finite("sigma")?;
    v.check_finite("v")?;
    check_pressure(p)?;
    let c = Channel::get(sigma.grid());
    let parts = VelocityParts::new(&c, v);
    let q = heating_spec(&c, &parts, params);
    let phi = phi_spec(&c, &parts, &q, &c.forward2(p), p, params)?;
    let w = w_spec(&c, &c.forward(sigma), &phi, params)?;
    Ok(w_nodal(&c, &w))
}

/// `rho = 1 / sigma`, `theta = sigma p / R`, nodally.
pub fn reconstruct_thermo(
    sigma: &ScalarField3D,
    p: &ScalarField2D,
    params: &PhysParams,
) -> Result<(ScalarField3D, ScalarField3D)> {
    check_sigma(sigma)?;
    check_pressure(p)?;
    let grid = *sigma.grid();
    let plen = grid.plane_len();
    let rho: Vec<f64> = sigma.data().iter().map(|s| 1.0 / s).collect();
    let r = params.gas_constant();
    let theta: Vec<f64> = sigma
        .data()
        .iter()
        .enumerate()
        .map(|(n, s)| s * p.data()[n % plen] / r)
        .collect();
    Ok((
        ScalarField3D::from_vec(grid, sigma.parity(), rho)?,
        ScalarField3D::from_vec(grid, sigma.parity(), theta)?,
    ))
}

/// Every diagnostic field of a state.
pub fn diagnose(state: &State, params: &PhysParams) -> Result<DiagnosticFields> {
    let (q, sh) = heating(&state.v, params)?;
    let c = Channel::get(state.grid());
    let parts = VelocityParts::new(&c, &state.v);
    let qs = c.forward(&q);
    let phi = phi_spec(&c, &parts, &qs, &c.forward2(&state.p), &state.p, params)?;
    let w = w_spec(&c, &c.forward(&state.sigma), &phi, params)?;
    let (rho, theta) = reconstruct_thermo(&state.sigma, &state.p, params)?;
    Ok(DiagnosticFields {
        w: w_nodal(&c, &w),
        phi: c.inverse(&phi),
        q,
        sh,
        rho,
        theta,
    })
}

/// `int 1/sigma` over the channel (area `(2 pi)^2`, unit depth).
pub fn total_mass(sigma: &ScalarField3D) -> Result<f64> {
    check_sigma(sigma)?;
    let c = Channel::get(sigma.grid());
    let recip: Vec<f64> = sigma.data().iter().map(|s| 1.0 / s).collect();
    let s = c.forward_raw(&recip, Parity::Even);
    let mean = c.average(&s).data[0].re;
    Ok(mean * PERIOD * PERIOD)
}

/// Sup-norm of `d_t rho + div_h(rho v) + d_z(rho w)` with
/// `d_t rho = -rho^2 d_t sigma`.
pub fn continuity_residual(state: &State, sigma_tendency: &ScalarField3D, params: &PhysParams) -> Result<f64> {
    check_sigma(&state.sigma)?;
    state.check_finite()?;
    sigma_tendency.check_finite("sigma tendency")?;
    let c = Channel::get(state.grid());
    let w = vertical_velocity(&state.sigma, &state.v, &state.p, params)?;
    let rho_nodal: Vec<f64> = state.sigma.data().iter().map(|s| 1.0 / s).collect();
    let rho = c.forward_raw(&rho_nodal, Parity::Even);
    let rho_f = c.to_fine(&rho);
    let product = |g: &ScalarField3D| {
        let s = c.forward(g);
        let mut f = c.to_fine(&s);
        f.iter_mut().zip(&rho_f).for_each(|(x, r)| *x *= r);
        c.from_fine(&f, g.parity())
    };
    let rv1 = product(&state.v.x);
    let rv2 = product(&state.v.y);
    let rw = product(&w);
    let rho_dsigma = product(sigma_tendency);
    let rho2_dsigma = {
        let mut f = c.to_fine(&rho_dsigma);
        f.iter_mut().zip(&rho_f).for_each(|(x, r)| *x *= r);
        c.from_fine(&f, sigma_tendency.parity())
    };
    let mut total = c.dx(&rv1);
    total.axpy(1.0, &c.dy(&rv2));
    total.axpy(1.0, &c.dz(&rw));
    total.axpy(-1.0, &rho2_dsigma);
    Ok(c.inverse(&total).max_abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn example_a(n: usize) -> (State, PhysParams) {
        let grid = Grid::cube(n).unwrap();
        let v = VectorField3D2C::new(
            ScalarField3D::from_fn(grid, Parity::Even, |_, _, z| (PI * z).cos()),
            ScalarField3D::zeros(grid, Parity::Even),
        );
        let state = State::new(v, ScalarField3D::constant(grid, 1.0), ScalarField2D::constant(grid, 1.0)).unwrap();
        (state, PhysParams::standard())
    }

    /// Closed form of a single-mode z-profile integral by composite Simpson.
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn heating_zero_and_shear_profiles() {
        let grid = Grid::cube(16).unwrap();
        let p = PhysParams::standard();
        let (q, sh) = heating(&VectorField3D2C::zeros(grid), &p).unwrap();
        assert_eq!(q.max_abs(), 0.0);
        assert_eq!(sh.xx.max_abs() + sh.xy.max_abs() + sh.yy.max_abs(), 0.0);
        let (state, _) = example_a(16);
        let (q, _) = heating(&state.v, &p).unwrap();
        let e = ScalarField3D::from_fn(grid, Parity::Even, |_, _, z| PI * PI * (PI * z).sin().powi(2));
        assert!(q.max_diff(&e) < 1e-11);
        // brute-force contraction: S_h : grad v with grad v = [[0, cos y], [0, 0]]
        let v = VectorField3D2C::new(
            ScalarField3D::from_fn(grid, Parity::Even, |_, y, _| y.sin()),
            ScalarField3D::zeros(grid, Parity::Even),
        );
        let (q, _) = heating(&v, &p).unwrap();
        let e = ScalarField3D::from_fn(grid, Parity::Even, |_, y, _| {
            let gv = [[0.0, y.cos()], [0.0, 0.0]];
            let mut sum = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    sum += (gv[i][j] + gv[j][i]) * gv[i][j];
                }
            }
            sum
        });
        assert!(q.max_diff(&e) < 1e-12);
    }

    #[test]
    fn phi_and_w_for_example_a() {
        let (state, params) = example_a(16);
        let phi = phi(&state.v, &state.p, &params).unwrap();
        // oracle: evaluate the defining formula with quadrature for Q-bar
        let qbar = simpson(|z| PI * PI * (PI * z).sin().powi(2), 0.0, 1.0, 2000);
        let e = ScalarField3D::from_fn(*state.grid(), Parity::Even, |_, _, z| {
            let q = PI * PI * (PI * z).sin().powi(2);
            -(0.4 / 1.4) * (q - qbar)
        });
        assert!(phi.max_diff(&e) < 1e-10);
        let w = vertical_velocity(&state.sigma, &state.v, &state.p, &params).unwrap();
        let e = ScalarField3D::from_fn(*state.grid(), Parity::Odd, |_, _, z| -(PI / 14.0) * (2.0 * PI * z).sin());
        assert!(w.max_diff(&e) < 1e-12);
        assert!(w.level(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn w_from_sigma_stratification() {
        let grid = Grid::cube(16).unwrap();
        let params = PhysParams::standard();
        let sigma = ScalarField3D::from_fn(grid, Parity::Even, |_, _, z| 1.0 + 0.1 * (PI * z).cos());
        let w = vertical_velocity(&sigma, &VectorField3D2C::zeros(grid), &ScalarField2D::constant(grid, 1.0), &params)
            .unwrap();
        let nu = params.nu();
        let e = ScalarField3D::from_fn(grid, Parity::Odd, |_, _, z| -0.1 * nu * PI * (PI * z).sin());
        assert!(w.max_diff(&e) < 1e-13);
    }

    #[test]
    fn phi_vanishes_for_z_independent_velocity() {
        let grid = Grid::cube(12).unwrap();
        let params = PhysParams::standard();
        let v = VectorField3D2C::new(
            ScalarField3D::from_fn(grid, Parity::Even, |x, y, _| x.sin() + 0.3 * y.cos()),
            ScalarField3D::from_fn(grid, Parity::Even, |x, _, _| (2.0 * x).cos()),
        );
        let p = ScalarField2D::from_fn(grid, |x, y| 2.0 + 0.5 * (x - y).sin());
        assert!(phi(&v, &p, &params).unwrap().max_abs() < 1e-12);
        let bad = ScalarField2D::from_fn(grid, |x, _| x.cos());
        assert!(matches!(phi(&v, &bad, &params), Err(CpeError::PressurePositivityLost { .. })));
    }

    #[test]
    fn thermo_and_mass() {
        let grid = Grid::cube(16).unwrap();
        let params = PhysParams::standard();
        let (rho, theta) = reconstruct_thermo(
            &ScalarField3D::constant(grid, 2.0),
            &ScalarField2D::constant(grid, 1.0),
            &params,
        )
        .unwrap();
        assert_eq!(rho.data()[0], 0.5);
        assert_eq!(theta.data()[0], 2.0);
        let area = (2.0 * PI).powi(2);
        assert!((total_mass(&ScalarField3D::constant(grid, 2.0)).unwrap() - area / 2.0).abs() < 1e-12);
        assert!((total_mass(&ScalarField3D::constant(grid, 1.0)).unwrap() - area).abs() < 1e-12);
        // oracle: 1D integral of 1 / (1 + 0.5 cos x)
        let line = simpson(|x| 1.0 / (1.0 + 0.5 * x.cos()), 0.0, 2.0 * PI, 4000);
        let s = ScalarField3D::from_fn(grid, Parity::Even, |x, _, _| 1.0 + 0.5 * x.cos());
        let m = total_mass(&s).unwrap();
        assert!((m - line * 2.0 * PI).abs() < 1e-6, "{m}");
        assert!(matches!(
            total_mass(&ScalarField3D::constant(grid, -1.0)),
            Err(CpeError::SigmaPositivityLost { .. })
        ));
    }
}
