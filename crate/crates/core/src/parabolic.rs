//! Linear parabolic problems
//! `du/dt = a Lap u + b grad_h div_h u + cz d2z u + eh Lap_h u + f`
//! advanced with classical RK4.
//!
//! Channel problems are solved by reflecting the data evenly across `z = 0`
//! onto the torus with z-period 2, evolving there, and restricting back.
//! Variable coefficients multiply on the 3/2-padded torus grid.

use rustfft::num_complex::Complex64;

use crate::error::{CpeError, Result};
use crate::field::{Parity, ScalarField2D, ScalarField3D};
use crate::grid::Grid;
use crate::spectral::{Channel, Torus};

/// Largest tolerated asymmetry when restricting an extended field.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Default diffusive safety factor of the linear solver.
pub const PARABOLIC_CFL: f64 = 2.0;

/// A channel field reflected evenly onto `T^2 x [0, 2)`; level `l` sits at
/// `z = l / nz` and level `2 nz - l` mirrors it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedField {
    grid: Grid,
    data: Vec<f64>,
}

impl ExtendedField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn levels(&self) -> usize {
        2 * self.grid.nz
    }

    /// Largest `|u(z) - u(-z)|` over the grid.
    pub fn symmetry_defect(&self) -> f64 {
        let plen = self.grid.plane_len();
        let nz = self.grid.nz;
        let mut d: f64 = 0.0;
        for l in 1..nz {
            let a = &self.data[l * plen..(l + 1) * plen];
            let b = &self.data[(2 * nz - l) * plen..(2 * nz - l + 1) * plen];
            for (x, y) in a.iter().zip(b) {
                d = d.max((x - y).abs());
            }
        }
        d
    }

    fn torus(&self) -> Torus {
        Torus::new(self.grid.nx, self.grid.ny, 2 * self.grid.nz, 2.0)
    }
}

/// Even reflection of a Neumann-compatible (cosine-tagged) channel field.
pub fn even_extend(f: &ScalarField3D) -> Result<ExtendedField> {
    if f.parity() != Parity::Even {
        return Err(CpeError::usage(
            "even extension needs a Neumann-compatible (even) field",
        ));
    }
    f.check_finite("extension input")?;
    let grid = *f.grid();
    let plen = grid.plane_len();
    let nz = grid.nz;
    let mut data = Vec::with_capacity(2 * nz * plen);
    data.extend_from_slice(&f.data()[..(nz + 1) * plen]);
    for l in nz + 1..2 * nz {
        data.extend_from_slice(f.level(2 * nz - l));
    }
    Ok(ExtendedField { grid, data })
}

/// Channel levels of an extended field; fails if the reflection symmetry has
/// drifted beyond [`SYMMETRY_TOL`].
pub fn restrict(e: &ExtendedField) -> Result<ScalarField3D> {
    let defect = e.symmetry_defect();
    if !(defect <= SYMMETRY_TOL) {
        return Err(CpeError::SymmetryFault { defect });
    }
    let plen = e.grid.plane_len();
    ScalarField3D::from_vec(e.grid, Parity::Even, e.data[..(e.grid.nz + 1) * plen].to_vec())
}

/// One coefficient of the operator.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Zero,
    Constant(f64),
    Field(ExtendedField),
}

impl Coefficient {
    fn min_max(&self) -> Option<(f64, f64)> {
        match self {
            Coefficient::Zero => None,
            Coefficient::Constant(c) => Some((*c, *c)),
            Coefficient::Field(f) => Some(f.data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })),
        }
    }

    fn max(&self) -> f64 {
        self.min_max().map_or(0.0, |m| m.1.max(0.0))
    }
}

/// Operator coefficients and forcing used by one RK stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageTerms {
    /// Coefficient of the full Laplacian.
    pub a: Coefficient,
    /// Coefficient of `grad_h div_h` (vector problems only).
    pub b: Coefficient,
    /// Coefficient of `d2z`.
    pub cz: Coefficient,
    /// Coefficient of the horizontal Laplacian.
    pub eh: Coefficient,
    /// One field per component, or `None` for `f = 0`.
    pub forcing: Option<Vec<ExtendedField>>,
}

impl StageTerms {
    pub fn diffusion(a: Coefficient) -> Self {
        Self {
            a,
            b: Coefficient::Zero,
            cz: Coefficient::Zero,
            eh: Coefficient::Zero,
            forcing: None,
        }
    }

    fn validate(&self, ncomp: usize, a_floor: f64) -> Result<()> {
        if let Some((lo, _)) = self.a.min_max() {
            if !(lo >= a_floor) {
                return Err(CpeError::constraint("a", format!("min a = {lo:e} is below the floor {a_floor:e}")));
            }
        }
        for (key, c) in [("b", &self.b), ("cz", &self.cz), ("eh", &self.eh)] {
            if let Some((lo, _)) = c.min_max() {
                if !(lo >= 0.0) {
                    return Err(CpeError::constraint(key, format!("coefficient must be >= 0 (min {lo:e})")));
                }
            }
        }
        if ncomp != 2 && self.b != Coefficient::Zero {
            return Err(CpeError::usage("grad div term needs a two-component unknown"));
        }
        if let Some(f) = &self.forcing {
            if f.len() != ncomp {
                return Err(CpeError::usage("forcing must have one field per component"));
            }
        }
        Ok(())
    }
}

/// A constant-in-time problem on the extended domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicProblem {
    pub terms: StageTerms,
    /// One field (scalar) or two (horizontal vector).
    pub u0: Vec<ExtendedField>,
    pub t_final: f64,
    pub a_floor: f64,
}

/// How the step is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtPolicy {
    /// Largest uniform step below `c_cfl / (diffusive eigenvalue bound)`.
    Auto { c_cfl: f64 },
    /// Uniform step no larger than the given one.
    Fixed(f64),
    /// Exactly this many uniform steps.
    Steps(usize),
}

impl Default for DtPolicy {
    fn default() -> Self {
        DtPolicy::Auto { c_cfl: PARABOLIC_CFL }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicSolution {
    pub u: Vec<ExtendedField>,
    pub steps: usize,
    pub dt: f64,
}

/// Coefficient ready for use: padded-grid values when variable.
enum Prepared {
    Zero,
    Constant(f64),
    Fine(Vec<f64>),
}

struct Engine {
    torus: Torus,
    grid: Grid,
    ncomp: usize,
}

type Spec = Vec<Complex64>;

impl Engine {
    fn prepare(&self, c: &Coefficient) -> Prepared {
        match c {
            Coefficient::Zero => Prepared::Zero,
            Coefficient::Constant(v) if *v == 0.0 => Prepared::Zero,
            Coefficient::Constant(v) => Prepared::Constant(*v),
            Coefficient::Field(f) => Prepared::Fine(self.torus.to_fine(&self.torus.forward(&f.data))),
        }
    }

    fn multiplier(&self, f: impl Fn(f64, f64, f64) -> f64, s: &[Complex64]) -> Spec {
        s.iter()
            .enumerate()
            .map(|(n, c)| {
                let (kx, ky, kz) = self.torus.k(n);
                c * f(kx, ky, kz)
            })
            .collect()
    }

    /// `coef * s` for each component, accumulated into `out`.
    fn apply(&self, coef: &Prepared, s: &[Spec], out: &mut [Spec]) {
        match coef {
            Prepared::Zero => {}
            Prepared::Constant(c) => {
                for (o, x) in out.iter_mut().zip(s) {
                    o.iter_mut().zip(x).for_each(|(a, b)| *a += b * c);
                }
            }
            Prepared::Fine(fine) => {
                if s.len() == 2 {
                    let (p, q) = self.torus.multiply_pair(fine, &s[0], &s[1]);
                    out[0].iter_mut().zip(&p).for_each(|(a, b)| *a += b);
                    out[1].iter_mut().zip(&q).for_each(|(a, b)| *a += b);
                } else {
                    let p = self.torus.multiply(fine, &s[0]);
                    out[0].iter_mut().zip(&p).for_each(|(a, b)| *a += b);
                }
            }
        }
    }

    fn rhs(&self, u: &[Spec], terms: &[Prepared; 4], forcing: &Option<Vec<Spec>>) -> Vec<Spec> {
        let mut out: Vec<Spec> = match forcing {
            Some(f) => f.clone(),
            None => vec![vec![Complex64::default(); self.torus.len()]; self.ncomp],
        };
        let [a, b, cz, eh] = terms;
        if !matches!(a, Prepared::Zero) {
            let lap: Vec<Spec> = u
                .iter()
                .map(|s| self.multiplier(|kx, ky, kz| -(kx * kx + ky * ky + kz * kz), s))
                .collect();
            self.apply(a, &lap, &mut out);
        }
        if !matches!(b, Prepared::Zero) {
            let div: Spec = u[0]
                .iter()
                .zip(&u[1])
                .enumerate()
                .map(|(n, (x, y))| {
                    let (kx, ky, _) = self.torus.k(n);
                    Complex64::new(0.0, 1.0) * (x * kx + y * ky)
                })
                .collect();
            let grad = |axis: usize| -> Spec {
                div.iter()
                    .enumerate()
                    .map(|(n, c)| {
                        let (kx, ky, _) = self.torus.k(n);
                        c * Complex64::new(0.0, if axis == 0 { kx } else { ky })
                    })
                    .collect()
            };
            let gd = vec![grad(0), grad(1)];
            self.apply(b, &gd, &mut out);
        }
        if !matches!(cz, Prepared::Zero) {
            let d2: Vec<Spec> = u.iter().map(|s| self.multiplier(|_, _, kz| -(kz * kz), s)).collect();
            self.apply(cz, &d2, &mut out);
        }
        if !matches!(eh, Prepared::Zero) {
            let lh: Vec<Spec> = u
                .iter()
                .map(|s| self.multiplier(|kx, ky, _| -(kx * kx + ky * ky), s))
                .collect();
            self.apply(eh, &lh, &mut out);
        }
        out
    }

    fn to_fields(&self, u: &[Spec], remainder: &[Vec<f64>]) -> Vec<ExtendedField> {
        u.iter()
            .zip(remainder)
            .map(|(s, r)| {
                let mut data = self.torus.inverse(s);
                data.iter_mut().zip(r).for_each(|(x, y)| *x += y);
                ExtendedField { grid: self.grid, data }
            })
            .collect()
    }
}

fn spectral_norm(u: &[Spec]) -> f64 {
    u.iter().flat_map(|s| s.iter()).map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Diffusive step bound for coefficients bounded by the given maxima.
pub fn parabolic_dt(grid: &Grid, a_max: f64, b_max: f64, cz_max: f64, eh_max: f64, c_cfl: f64) -> f64 {
    let kh2 = grid.kh2_max();
    let kz2 = grid.kz_max().powi(2);
    let rate = a_max * (kh2 + kz2) + b_max * kh2 + cz_max * kz2 + eh_max * kh2;
    if rate > 0.0 {
        c_cfl / rate
    } else {
        f64::INFINITY
    }
}

/// Resolves a policy into a uniform `(steps, dt)` covering `t_final`.
pub fn resolve_steps(t_final: f64, bound: f64, policy: DtPolicy) -> Result<(usize, f64)> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(CpeError::constraint("T_final", "must be positive and finite"));
    }
    let max_dt = match policy {
        DtPolicy::Auto { c_cfl } => bound * c_cfl,
        DtPolicy::Fixed(dt) => {
            if !(dt > 0.0) {
                return Err(CpeError::constraint("dt", "must be positive"));
            }
            dt
        }
        DtPolicy::Steps(n) => {
            if n == 0 {
                return Err(CpeError::constraint("steps", "must be at least 1"));
            }
            return Ok((n, t_final / n as f64));
        }
    };
    let steps = if max_dt.is_finite() {
        ((t_final / max_dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
    } else {
        1
    };
    Ok((steps, t_final / steps as f64))
}

/// Source of per-stage operator data; stage `s` of step `n` is evaluated at
/// `t_n + c_s dt` with `c = (0, 1/2, 1/2, 1)`.
pub trait StageProvider {
    fn terms(&mut self, step: usize, stage: usize) -> Result<StageTerms>;
}

impl<F: FnMut(usize, usize) -> Result<StageTerms>> StageProvider for F {
    fn terms(&mut self, step: usize, stage: usize) -> Result<StageTerms> {
        self(step, stage)
    }
}

/// Advances `u0` through `steps` uniform steps, calling `observe` with every
/// RK stage state before its slope is evaluated.
pub fn advance_staged(
    u0: &[ExtendedField],
    t_final: f64,
    steps: usize,
    a_floor: f64,
    provider: &mut dyn StageProvider,
    observe: &mut dyn FnMut(usize, usize, &[ExtendedField]) -> Result<()>,
) -> Result<ParabolicSolution> {
    if u0.is_empty() || u0.len() > 2 {
        return Err(CpeError::usage("parabolic unknown must have one or two components"));
    }
    let grid = *u0[0].grid();
    if u0.iter().any(|f| f.grid != grid) {
        return Err(CpeError::usage("components live on different grids"));
    }
    let (steps, dt) = resolve_steps(t_final, f64::INFINITY, DtPolicy::Steps(steps))?;
    let engine = Engine {
        torus: u0[0].torus(),
        grid,
        ncomp: u0.len(),
    };
    let mut u: Vec<Spec> = u0.iter().map(|f| engine.torus.forward(&f.data)).collect();
    // unresolved content (Nyquist, aliasing) is carried unchanged
    let remainder: Vec<Vec<f64>> = u0
        .iter()
        .zip(&u)
        .map(|(f, s)| {
            let back = engine.torus.inverse(s);
            f.data.iter().zip(&back).map(|(a, b)| a - b).collect()
        })
        .collect();
    let axpy = |base: &[Spec], k: &[Spec], h: f64| -> Vec<Spec> {
        base.iter()
            .zip(k)
            .map(|(b, k)| b.iter().zip(k).map(|(x, y)| x + y * h).collect())
            .collect()
    };
    for step in 0..steps {
        let mut ks: Vec<Vec<Spec>> = Vec::with_capacity(4);
        let mut fnorm: f64 = 0.0;
        for stage in 0..4 {
            let y = match stage {
                0 => u.clone(),
                1 => axpy(&u, &ks[0], 0.5 * dt),
                2 => axpy(&u, &ks[1], 0.5 * dt),
                _ => axpy(&u, &ks[2], dt),
            };
            observe(step, stage, &engine.to_fields(&y, &remainder))?;
            let terms = provider.terms(step, stage)?;
            terms.validate(engine.ncomp, a_floor)?;
            let prepared = [
                engine.prepare(&terms.a),
                engine.prepare(&terms.b),
                engine.prepare(&terms.cz),
                engine.prepare(&terms.eh),
            ];
            let forcing = terms.forcing.as_ref().map(|f| {
                f.iter().map(|g| engine.torus.forward(&g.data)).collect::<Vec<_>>()
            });
            if let Some(f) = &forcing {
                fnorm = fnorm.max(spectral_norm(f));
            }
            ks.push(engine.rhs(&y, &prepared, &forcing));
        }
        let old = spectral_norm(&u);
        for c in 0..engine.ncomp {
            for n in 0..u[c].len() {
                u[c][n] += (ks[0][c][n] + (ks[1][c][n] + ks[2][c][n]) * 2.0 + ks[3][c][n]) * (dt / 6.0);
            }
        }
        let new = spectral_norm(&u);
        if !new.is_finite() {
            return Err(CpeError::NumericalFault("parabolic state".into()));
        }
        let reference = old + dt * fnorm;
        if new > 10.0 * reference && new > 1e-300 {
            return Err(CpeError::StabilityFault {
                step,
                growth: new / reference,
            });
        }
    }
    Ok(ParabolicSolution {
        u: engine.to_fields(&u, &remainder),
        steps,
        dt,
    })
}

struct Fixed<'a>(&'a StageTerms);

impl StageProvider for Fixed<'_> {
    fn terms(&mut self, _: usize, _: usize) -> Result<StageTerms> {
        Ok(self.0.clone())
    }
}

/// Advances a constant-in-time problem to `t_final`.
pub fn advance_parabolic(problem: &ParabolicProblem, policy: DtPolicy) -> Result<ParabolicSolution> {
    if problem.u0.is_empty() {
        return Err(CpeError::usage("parabolic unknown must have one or two components"));
    }
    problem.terms.validate(problem.u0.len(), problem.a_floor)?;
    let grid = *problem.u0[0].grid();
    let t = &problem.terms;
    let bound = parabolic_dt(&grid, t.a.max(), t.b.max(), t.cz.max(), t.eh.max(), 1.0);
    let (steps, _) = resolve_steps(problem.t_final, bound, policy)?;
    advance_staged(
        &problem.u0,
        problem.t_final,
        steps,
        problem.a_floor,
        &mut Fixed(&problem.terms),
        &mut |_, _, _| Ok(()),
    )
}

/// Channel coefficient; fields must be Neumann-compatible.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelCoefficient {
    Zero,
    Constant(f64),
    Field(ScalarField3D),
}

impl ChannelCoefficient {
    fn extend(&self) -> Result<Coefficient> {
        Ok(match self {
            ChannelCoefficient::Zero => Coefficient::Zero,
            ChannelCoefficient::Constant(c) => Coefficient::Constant(*c),
            ChannelCoefficient::Field(f) => Coefficient::Field(even_extend(f)?),
        })
    }
}

/// A constant-in-time channel problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelProblem {
    pub a: ChannelCoefficient,
    pub b: ChannelCoefficient,
    pub cz: ChannelCoefficient,
    pub eh: ChannelCoefficient,
    pub forcing: Option<Vec<ScalarField3D>>,
    pub u0: Vec<ScalarField3D>,
    pub t_final: f64,
}

impl ChannelProblem {
    /// `dV/dt = mu sigma Lap V + (mu + lambda) sigma grad div V + f`.
    pub fn velocity_type(mu: f64, lambda: f64, sigma: ScalarField3D, u0: [ScalarField3D; 2], t_final: f64) -> Self {
        Self {
            a: ChannelCoefficient::Field(sigma.scaled(mu)),
            b: ChannelCoefficient::Field(sigma.scaled(mu + lambda)),
            cz: ChannelCoefficient::Zero,
            eh: ChannelCoefficient::Zero,
            forcing: None,
            u0: u0.to_vec(),
            t_final,
        }
    }

    /// `dS/dt = nu sigma d2z S + eps Lap_h S + g`.
    pub fn sigma_type(nu: f64, eps: f64, sigma: ScalarField3D, u0: ScalarField3D, t_final: f64) -> Self {
        Self {
            a: ChannelCoefficient::Zero,
            b: ChannelCoefficient::Zero,
            cz: ChannelCoefficient::Field(sigma.scaled(nu)),
            eh: ChannelCoefficient::Constant(eps),
            forcing: None,
            u0: vec![u0],
            t_final,
        }
    }
}

/// Extends the data evenly, advances on the torus, and restricts back.
pub fn solve_channel_parabolic(problem: &ChannelProblem, policy: DtPolicy) -> Result<Vec<ScalarField3D>> {
    let u0 = problem.u0.iter().map(even_extend).collect::<Result<Vec<_>>>()?;
    let forcing = match &problem.forcing {
        Some(f) => Some(f.iter().map(even_extend).collect::<Result<Vec<_>>>()?),
        None => None,
    };
    let extended = ParabolicProblem {
        terms: StageTerms {
            a: problem.a.extend()?,
            b: problem.b.extend()?,
            cz: problem.cz.extend()?,
            eh: problem.eh.extend()?,
            forcing,
        },
        u0,
        t_final: problem.t_final,
        a_floor: 0.0,
    };
    let sol = advance_parabolic(&extended, policy)?;
    sol.u.iter().map(restrict).collect()
}

/// Advances `dP/dt = eps Lap_h P + g(t)` on the horizontal torus through
/// `steps` RK4 steps; `forcing(step, stage)` supplies `g`, and `observe`
/// sees every stage state.
pub fn advance_surface(
    p0: &ScalarField2D,
    eps: f64,
    t_final: f64,
    steps: usize,
    forcing: &mut dyn FnMut(usize, usize) -> Result<Option<ScalarField2D>>,
    observe: &mut dyn FnMut(usize, usize, &ScalarField2D) -> Result<()>,
) -> Result<ScalarField2D> {
    if !(eps >= 0.0) {
        return Err(CpeError::constraint("epsilon", "must be >= 0"));
    }
    let (steps, dt) = resolve_steps(t_final, f64::INFINITY, DtPolicy::Steps(steps))?;
    let c = Channel::get(p0.grid());
    let mut u = c.forward2(p0);
    let remainder = p0.sub(&c.inverse2(&u));
    let nodal = |s: &crate::spectral::Spec2| c.inverse2(s).add(&remainder);
    for step in 0..steps {
        let mut ks: Vec<crate::spectral::Spec2> = Vec::with_capacity(4);
        for stage in 0..4 {
            let y = match stage {
                0 => u.clone(),
                s => {
                    let h = if s == 3 { dt } else { 0.5 * dt };
                    let mut y = u.clone();
                    y.axpy(h, &ks[s - 1]);
                    y
                }
            };
            observe(step, stage, &nodal(&y))?;
            let mut k = c.lap2(&y).scaled(eps);
            if let Some(g) = forcing(step, stage)? {
                k.axpy(1.0, &c.forward2(&g));
            }
            ks.push(k);
        }
        u.axpy(dt / 6.0, &ks[0]);
        u.axpy(dt / 3.0, &ks[1]);
        u.axpy(dt / 3.0, &ks[2]);
        u.axpy(dt / 6.0, &ks[3]);
    }
    let out = nodal(&u);
    out.check_finite("surface solution")?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(8, 8, 8).unwrap()
    }

    #[test]
    fn extension_round_trip_and_rejection() {
        let g = grid();
        let f = ScalarField3D::from_fn(g, Parity::Even, |x, _, z| x.sin() + (PI * z).cos());
        let e = even_extend(&f).unwrap();
        assert_eq!(e.levels(), 16);
        assert_eq!(e.symmetry_defect(), 0.0);
        assert_eq!(restrict(&e).unwrap(), f);
        // cos(pi z) on [0, 2) is its own periodic extension
        for l in 0..16 {
            let z = l as f64 / 8.0;
            assert!((e.data()[l * 64] - (0.0f64.sin() + (PI * z).cos())).abs() < 1e-13);
        }
        let s = ScalarField3D::from_fn(g, Parity::Odd, |_, _, z| (PI * z).sin());
        assert!(matches!(even_extend(&s), Err(CpeError::UsageFault(_))));
    }

    #[test]
    fn asymmetric_data_is_a_fault() {
        let g = grid();
        let mut e = even_extend(&ScalarField3D::constant(g, 1.0)).unwrap();
        e.data[3 * 64] += 1e-6;
        assert!(matches!(restrict(&e), Err(CpeError::SymmetryFault { .. })));
    }

    #[test]
    fn scalar_mode_decay() {
        let g = grid();
        let u0 = even_extend(&ScalarField3D::from_fn(g, Parity::Even, |x, _, _| x.cos())).unwrap();
        let problem = ParabolicProblem {
            terms: StageTerms::diffusion(Coefficient::Constant(1.0)),
            u0: vec![u0],
            t_final: 0.1,
            a_floor: 0.5,
        };
        let sol = advance_parabolic(&problem, DtPolicy::Fixed(1e-4)).unwrap();
        assert_eq!(sol.steps, 1000);
        let u = restrict(&sol.u[0]).unwrap();
        let e = ScalarField3D::from_fn(g, Parity::Even, |x, _, _| (-0.1f64).exp() * x.cos());
        assert!(u.max_diff(&e) / e.max_abs() < 1e-6);
    }

    #[test]
    fn constant_forcing_grows_mean_linearly() {
        let g = grid();
        let zero = even_extend(&ScalarField3D::zeros(g, Parity::Even)).unwrap();
        let f = even_extend(&ScalarField3D::constant(g, 0.7)).unwrap();
        let mut terms = StageTerms::diffusion(Coefficient::Constant(2.0));
        terms.forcing = Some(vec![f]);
        let problem = ParabolicProblem {
            terms,
            u0: vec![zero],
            t_final: 0.3,
            a_floor: 0.0,
        };
        let sol = advance_parabolic(&problem, DtPolicy::default()).unwrap();
        assert!(sol.u[0].data().iter().all(|v| (v - 0.21).abs() < 1e-13));
    }

    #[test]
    fn grad_div_mode_decay() {
        let g = grid();
        let (a, b, t) = (0.5, 0.25, 0.2);
        let u1 = ScalarField3D::from_fn(g, Parity::Even, |x, _, _| x.cos());
        let u2 = ScalarField3D::zeros(g, Parity::Even);
        let mut terms = StageTerms::diffusion(Coefficient::Constant(a));
        terms.b = Coefficient::Constant(b);
        let problem = ParabolicProblem {
            terms,
            u0: vec![even_extend(&u1).unwrap(), even_extend(&u2).unwrap()],
            t_final: t,
            a_floor: 0.1,
        };
        let sol = advance_parabolic(&problem, DtPolicy::Fixed(1e-3)).unwrap();
        let e = u1.scaled((-(a + b) * t).exp());
        assert!(restrict(&sol.u[0]).unwrap().max_diff(&e) < 1e-9);
        assert!(restrict(&sol.u[1]).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn channel_single_mode_decays() {
        let g = grid();
        let nu = 2.0 / 7.0;
        let t = 0.05;
        let s0 = ScalarField3D::from_fn(g, Parity::Even, |_, _, z| (PI * z).cos());
        let problem = ChannelProblem::sigma_type(nu, 0.0, ScalarField3D::constant(g, 1.0), s0.clone(), t);
        let out = solve_channel_parabolic(&problem, DtPolicy::Fixed(2e-4)).unwrap();
        let e = s0.scaled((-nu * PI * PI * t).exp());
        assert!(out[0].max_diff(&e) / e.max_abs() < 1e-6);
        let problem = ChannelProblem::velocity_type(
            1.0,
            0.0,
            ScalarField3D::constant(g, 1.0),
            [s0.clone(), ScalarField3D::zeros(g, Parity::Even)],
            t,
        );
        let out = solve_channel_parabolic(&problem, DtPolicy::Fixed(2e-4)).unwrap();
        let e = s0.scaled((-PI * PI * t).exp());
        assert!(out[0].max_diff(&e) / e.max_abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_coefficients() {
        let g = grid();
        let u0 = even_extend(&ScalarField3D::constant(g, 1.0)).unwrap();
        let problem = ParabolicProblem {
            terms: StageTerms::diffusion(Coefficient::Constant(0.01)),
            u0: vec![u0],
            t_final: 0.1,
            a_floor: 0.1,
        };
        assert!(matches!(
            advance_parabolic(&problem, DtPolicy::default()),
            Err(CpeError::ConstraintFault { .. })
        ));
    }
}
