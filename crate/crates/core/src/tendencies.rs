//! Right-hand sides of the regularized system.
//!
//! `Phi1`, `Phi2`, `Phi3` are the split nonlinear parts; the full tendency
//! adds the viscous, vertical-diffusion and `eps`-regularization terms, and
//! the linear-system sources `N1 = Phi1`, `N2 = Phi2 - v.grad sigma`,
//! `N3 = Phi3 - vbar.grad p` drive the Picard map.
//!
//! Diagnostics (`Q`, `phi`, `w`) are evaluated once per call. Every
//! quadratic term is formed in one fused pass on the padded grid.

use std::sync::Arc;

use crate::diagnostics::{heating_spec, phi_spec, w_spec, VelocityParts};
use crate::error::{CpeError, Result};
use crate::field::{Parity, ScalarField2D, ScalarField3D, State, VectorField3D2C};
use crate::params::PhysParams;
use crate::spectral::{Channel, Spec2, Spec3};

/// Time derivative of every unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTendency {
    pub dv: VectorField3D2C,
    pub dsigma: ScalarField3D,
    pub dp: ScalarField2D,
}

impl StateTendency {
    pub fn max_abs(&self) -> f64 {
        self.dv.max_abs().max(self.dsigma.max_abs()).max(self.dp.max_abs())
    }

    pub fn max_diff(&self, other: &StateTendency) -> f64 {
        self.dv
            .max_diff(&other.dv)
            .max(self.dsigma.max_diff(&other.dsigma))
            .max(self.dp.max_diff(&other.dp))
    }
}

/// Sources of the frozen-coefficient linear systems.
#[derive(Debug, Clone, PartialEq)]
pub struct AppendixSources {
    pub n1: VectorField3D2C,
    pub n2: ScalarField3D,
    pub n3: ScalarField2D,
}

/// Positivity thresholds below which a tendency evaluation aborts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultFloors {
    pub sigma: f64,
    pub p: f64,
}

impl Default for FaultFloors {
    fn default() -> Self {
        Self { sigma: 1e-8, p: 1e-8 }
    }
}

/// Spectra shared by every term.
pub(crate) struct Pieces {
    pub c: Arc<Channel>,
    pub parts: VelocityParts,
    pub q: Spec3,
    pub phi: Spec3,
    pub w: Spec3,
    pub sigma: Spec3,
    pub p: Spec2,
}

fn check_state(state: &State, floors: FaultFloors) -> Result<()> {
    state.check_finite()?;
    if state.v.x.parity() != Parity::Even || state.v.y.parity() != Parity::Even || state.sigma.parity() != Parity::Even
    {
        return Err(CpeError::usage("v and sigma must be Neumann (even) fields"));
    }
    let smin = state.sigma.min();
    if smin <= floors.sigma {
        return Err(CpeError::SigmaPositivityLost { min: smin });
    }
    let pmin = state.p.min();
    if pmin <= floors.p {
        return Err(CpeError::PressurePositivityLost { min: pmin });
    }
    Ok(())
}

impl Pieces {
    pub fn new(state: &State, params: &PhysParams, floors: FaultFloors) -> Result<Self> {
        check_state(state, floors)?;
        let c = Channel::get(state.grid());
        let parts = VelocityParts::new(&c, &state.v);
        let q = heating_spec(&c, &parts, params);
        let p = c.forward2(&state.p);
        let phi = phi_spec(&c, &parts, &q, &p, &state.p, params)?;
        let sigma = c.forward(&state.sigma);
        let w = w_spec(&c, &sigma, &phi, params)?;
        Ok(Self {
            c,
            parts,
            q,
            phi,
            w,
            sigma,
            p,
        })
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// `[dv1, dv2, dsigma]` without the `eps` terms.
    Tendency,
    /// `[Phi1_x, Phi1_y, Phi2, v.grad sigma]`.
    Split,
}

/// The fused padded-grid pass for the 3D equations.
fn fused(pc: &Pieces, params: &PhysParams, mode: Mode) -> Vec<Spec3> {
    let c = &pc.c;
    let parts = &pc.parts;
    let plenf = c.fine_plane_len();
    let [v1x, v1y, v2x, v2y, v1z, v2z] = &parts.grad_fine;
    let v1 = c.to_fine(&parts.v1);
    let v2 = c.to_fine(&parts.v2);
    let w = c.to_fine(&pc.w);
    let sig = c.to_fine(&pc.sigma);
    let sx = c.to_fine(&c.dx(&pc.sigma));
    let sy = c.to_fine(&c.dy(&pc.sigma));
    let sz = c.to_fine(&c.dz(&pc.sigma));
    let phi = c.to_fine(&pc.phi);
    let px = c.to_fine2(&c.dx2(&pc.p));
    let py = c.to_fine2(&c.dy2(&pc.p));
    let n = v1.len();

    // common nonlinear parts
    let mut phi1x = vec![0.0; n];
    let mut phi1y = vec![0.0; n];
    let mut phi2 = vec![0.0; n];
    let mut adv_s = vec![0.0; n];
    for i in 0..n {
        let h = i % plenf;
        let s = sig[i];
        let div = v1x[i] + v2y[i];
        phi1x[i] = -(v1[i] * v1x[i] + v2[i] * v1y[i]) - w[i] * v1z[i] - s * px[h];
        phi1y[i] = -(v1[i] * v2x[i] + v2[i] * v2y[i]) - w[i] * v2z[i] - s * py[h];
        phi2[i] = -w[i] * sz[i] + s * (div - phi[i]);
        adv_s[i] = v1[i] * sx[i] + v2[i] * sy[i];
    }

    match mode {
        Mode::Split => vec![
            c.from_fine(&phi1x, Parity::Even),
            c.from_fine(&phi1y, Parity::Even),
            c.from_fine(&phi2, Parity::Even),
            c.from_fine(&adv_s, Parity::Even),
        ],
        Mode::Tendency => {
            let (mu, lambda, nu) = (params.mu(), params.lambda(), params.nu());
            let lap = |s: &Spec3| {
                let mut l = c.lap_h(s);
                l.axpy(1.0, &c.d2z(s));
                c.to_fine(&l)
            };
            let lv1 = lap(&parts.v1);
            let lv2 = lap(&parts.v2);
            let gdx = c.to_fine(&c.dx(&parts.div));
            let gdy = c.to_fine(&c.dy(&parts.div));
            let szz = c.to_fine(&c.d2z(&pc.sigma));
            for i in 0..n {
                let s = sig[i];
                phi1x[i] += s * (mu * lv1[i] + (mu + lambda) * gdx[i]);
                phi1y[i] += s * (mu * lv2[i] + (mu + lambda) * gdy[i]);
                phi2[i] += nu * s * szz[i] - adv_s[i];
            }
            vec![
                c.from_fine(&phi1x, Parity::Even),
                c.from_fine(&phi1y, Parity::Even),
                c.from_fine(&phi2, Parity::Even),
            ]
        }
    }
}

/// `[vbar.grad p, p div vbar]` on the torus.
fn pressure_terms(pc: &Pieces) -> (Spec2, Spec2) {
    let c = &pc.c;
    let vb1 = c.average(&pc.parts.v1);
    let vb2 = c.average(&pc.parts.v2);
    let divb = c.average(&pc.parts.div);
    let f1 = c.to_fine2(&vb1);
    let f2 = c.to_fine2(&vb2);
    let fd = c.to_fine2(&divb);
    let px = c.to_fine2(&c.dx2(&pc.p));
    let py = c.to_fine2(&c.dy2(&pc.p));
    let p = c.to_fine2(&pc.p);
    let adv: Vec<f64> = (0..p.len()).map(|i| f1[i] * px[i] + f2[i] * py[i]).collect();
    let pdiv: Vec<f64> = (0..p.len()).map(|i| p[i] * fd[i]).collect();
    (c.from_fine2(&adv), c.from_fine2(&pdiv))
}

/// `Phi3 = (gamma - 1) Qbar - gamma p div_h vbar`.
fn phi3_spec(pc: &Pieces, pdiv: &Spec2, params: &PhysParams) -> Spec2 {
    let gamma = params.gamma();
    let mut out = pc.c.average(&pc.q).scaled(gamma - 1.0);
    out.axpy(-gamma, pdiv);
    out
}

/// `Phi1 = -(v.grad_h) v - w dz v - sigma grad_h p`.
pub fn phi1(v: &VectorField3D2C, sigma: &ScalarField3D, p: &ScalarField2D, params: &PhysParams) -> Result<VectorField3D2C> {
    let state = State::new(v.clone(), sigma.clone(), p.clone())?;
    let pc = Pieces::new(&state, params, FaultFloors::default())?;
    let out = fused(&pc, params, Mode::Split);
    Ok(VectorField3D2C::new(pc.c.inverse(&out[0]), pc.c.inverse(&out[1])))
}

/// `Phi2 = -w dz sigma + sigma (div_h v - phi)`.
pub fn phi2(v: &VectorField3D2C, sigma: &ScalarField3D, p: &ScalarField2D, params: &PhysParams) -> Result<ScalarField3D> {
    let state = State::new(v.clone(), sigma.clone(), p.clone())?;
    let pc = Pieces::new(&state, params, FaultFloors::default())?;
    let out = fused(&pc, params, Mode::Split);
    Ok(pc.c.inverse(&out[2]))
}

/// `Phi3 = (gamma - 1) Qbar - gamma p div_h vbar`.
pub fn phi3(v: &VectorField3D2C, p: &ScalarField2D, params: &PhysParams) -> Result<ScalarField2D> {
    let grid = *v.grid();
    let state = State::new(v.clone(), ScalarField3D::constant(grid, 1.0), p.clone())?;
    let pc = Pieces::new(&state, params, FaultFloors::default())?;
    let (_, pdiv) = pressure_terms(&pc);
    Ok(pc.c.inverse2(&phi3_spec(&pc, &pdiv, params)))
}

/// Full tendency with the default fault floors.
pub fn regularized_tendency(state: &State, params: &PhysParams) -> Result<StateTendency> {
    regularized_tendency_with(state, params, FaultFloors::default())
}

pub fn regularized_tendency_with(state: &State, params: &PhysParams, floors: FaultFloors) -> Result<StateTendency> {
    let pc = Pieces::new(state, params, floors)?;
    let c = &pc.c;
    let eps = params.epsilon();
    let mut out = fused(&pc, params, Mode::Tendency);
    if eps != 0.0 {
        out[2].axpy(eps, &c.lap_h(&pc.sigma));
    }
    let (adv_p, pdiv) = pressure_terms(&pc);
    let mut dp = phi3_spec(&pc, &pdiv, params);
    dp.axpy(-1.0, &adv_p);
    if eps != 0.0 {
        dp.axpy(eps, &c.lap2(&pc.p));
    }
    let t = StateTendency {
        dv: VectorField3D2C::new(c.inverse(&out[0]), c.inverse(&out[1])),
        dsigma: c.inverse(&out[2]),
        dp: c.inverse2(&dp),
    };
    t.dv.check_finite("v tendency")?;
    t.dsigma.check_finite("sigma tendency")?;
    t.dp.check_finite("p tendency")?;
    Ok(t)
}

/// `N1`, `N2`, `N3` evaluated on a state.
pub fn appendix_sources(state: &State, params: &PhysParams) -> Result<AppendixSources> {
    appendix_sources_with(state, params, FaultFloors::default())
}

pub fn appendix_sources_with(state: &State, params: &PhysParams, floors: FaultFloors) -> Result<AppendixSources> {
    let pc = Pieces::new(state, params, floors)?;
    let c = &pc.c;
    let split = fused(&pc, params, Mode::Split);
    let (adv_p, pdiv) = pressure_terms(&pc);
    let phi3 = phi3_spec(&pc, &pdiv, params);
    let mut n2 = split[2].clone();
    n2.axpy(-1.0, &split[3]);
    let mut n3 = phi3.clone();
    n3.axpy(-1.0, &adv_p);
    let out = AppendixSources {
        n1: VectorField3D2C::new(c.inverse(&split[0]), c.inverse(&split[1])),
        n2: c.inverse(&n2),
        n3: c.inverse2(&n3),
    };
    debug_assert!({
        let phi2 = c.inverse(&split[2]);
        let adv = c.inverse(&split[3]);
        let scale = 1.0 + phi2.max_abs() + adv.max_abs();
        out.n2.add(&adv).max_diff(&phi2) <= 1e-13 * scale
    });
    debug_assert!({
        let phi3 = c.inverse2(&phi3);
        let adv = c.inverse2(&adv_p);
        let scale = 1.0 + phi3.max_abs() + adv.max_abs();
        out.n3.add(&adv).max_diff(&phi3) <= 1e-13 * scale
    });
    Ok(out)
}
