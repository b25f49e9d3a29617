//! Sampling of product and commutator estimates on the periodic cube.
//!
//! Random fields have independent unit-normal coefficients for
//! `|k_i| <= band`, symmetrized so the field is real. The grid has
//! `4 band + 4` points per direction, so every pairwise product is resolved
//! without aliasing and `L^2` norms are exact through Parseval. Other
//! Lebesgue norms are quadratures on the 3/2-padded grid (exact for `L^4`
//! and `L^6`, high order for `L^3`, sampled for `L^inf`).

use std::f64::consts::PI;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;

use crate::error::{CpeError, Result};
use crate::par;
use crate::spectral::Torus;

/// Which estimate is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InequalityKind {
    /// `||D^a (fg)||_q` against `||f||_r1 ||g||_{W^{m,s1}} + ||g||_r2 ||f||_{W^{m,s2}}`.
    Calculus,
    /// `||[D^a, f] g||_q` against `||grad f||_r1 ||g||_{W^{m-1,s1}} + ||g||_r2 ||f||_{W^{m,s2}}`.
    Commutator,
    /// `||fg||_{W^{m,q}}` against `||f||_{W^{m,q}} ||g||_{W^{m,q}}`.
    Algebra,
}

impl FromStr for InequalityKind {
    type Err = CpeError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "CAL" => Ok(InequalityKind::Calculus),
            "COME" => Ok(InequalityKind::Commutator),
            "ALG" => Ok(InequalityKind::Algebra),
            other => Err(CpeError::usage(format!("unknown inequality kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for InequalityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InequalityKind::Calculus => "CAL",
            InequalityKind::Commutator => "COME",
            InequalityKind::Algebra => "ALG",
        })
    }
}

/// Lebesgue exponents with a supported quadrature.
const SUPPORTED: [f64; 5] = [2.0, 3.0, 4.0, 6.0, f64::INFINITY];
const MAX_ORDER: usize = 4;

/// `(m, q, r1, s1, r2, s2)` with `1/q = 1/r1 + 1/s1 = 1/r2 + 1/s2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponents {
    pub m: usize,
    pub q: f64,
    pub r1: f64,
    pub s1: f64,
    pub r2: f64,
    pub s2: f64,
}

impl Exponents {
    pub fn new(m: usize, q: f64, r1: f64, s1: f64, r2: f64, s2: f64) -> Result<Self> {
        if m == 0 || m > MAX_ORDER {
            return Err(CpeError::usage(format!("derivative order must be in 1..={MAX_ORDER}")));
        }
        for e in [q, r1, s1, r2, s2] {
            if !SUPPORTED.contains(&e) {
                return Err(CpeError::usage(format!("Lebesgue exponent {e} is not in {{2, 3, 4, 6, inf}}")));
            }
        }
        let inv = |x: f64| 1.0 / x;
        let gap1 = (inv(q) - inv(r1) - inv(s1)).abs();
        let gap2 = (inv(q) - inv(r2) - inv(s2)).abs();
        if gap1 > 1e-12 || gap2 > 1e-12 {
            return Err(CpeError::usage(format!(
                "exponents violate 1/q = 1/r1 + 1/s1 = 1/r2 + 1/s2 (q={q}, r1={r1}, s1={s1}, r2={r2}, s2={s2})"
            )));
        }
        Ok(Self { m, q, r1, s1, r2, s2 })
    }

    /// `m = 2`, `q = 2`, `r = inf`, `s = 2` on both sides.
    pub fn standard() -> Self {
        Self {
            m: 2,
            q: 2.0,
            r1: f64::INFINITY,
            s1: 2.0,
            r2: f64::INFINITY,
            s2: 2.0,
        }
    }
}

/// One evaluated instance of an estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalitySample {
    pub trial: usize,
    /// Derivative multi-index; zero for the algebra estimate.
    pub alpha: [usize; 3],
    pub exponents: Exponents,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Ten equal bins on `[0, max ratio]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InequalityStats {
    pub kind: InequalityKind,
    pub band: usize,
    pub trials: usize,
    pub seed: u64,
    pub samples: Vec<InequalitySample>,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub histogram: Histogram,
}

/// Field statistics on a lab torus.
struct Lab {
    torus: Torus,
    band: usize,
    volume: f64,
}

/// Multi-indices of total order exactly `order`.
fn multi_indices(order: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in (0..=order).rev() {
        for b in (0..=order - a).rev() {
            out.push([a, b, order - a - b]);
        }
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl Lab {
    fn new(band: usize) -> Result<Self> {
        if band == 0 {
            return Err(CpeError::usage("band limit must be >= 1"));
        }
        let n = 4 * band + 4;
        Ok(Self {
            torus: Torus::new(n, n, n, 2.0 * PI),
            band,
            volume: (2.0 * PI).powi(3),
        })
    }

    /// Symmetrized unit-normal spectrum with `|k_i| <= band`.
    fn random_spectrum(&self, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        let (nx, ny, nz) = self.torus.dims();
        let b = self.band as i64;
        let idx = |k: i64, n: usize| k.rem_euclid(n as i64) as usize;
        let mut raw = vec![Complex64::new(0.0, 0.0); self.torus.len()];
        for kz in -b..=b {
            for ky in -b..=b {
                for kx in -b..=b {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    raw[idx(kx, nx) + nx * (idx(ky, ny) + ny * idx(kz, nz))] = Complex64::new(re, im);
                }
            }
        }
        let mut s = raw.clone();
        for kz in -b..=b {
            for ky in -b..=b {
                for kx in -b..=b {
                    let n = idx(kx, nx) + nx * (idx(ky, ny) + ny * idx(kz, nz));
                    let m = idx(-kx, nx) + nx * (idx(-ky, ny) + ny * idx(-kz, nz));
                    s[n] = (raw[n] + raw[m].conj()) * 0.5;
                }
            }
        }
        s
    }

    fn derivative(&self, s: &[Complex64], alpha: [usize; 3]) -> Vec<Complex64> {
        if alpha == [0, 0, 0] {
            return s.to_vec();
        }
        let i = Complex64::new(0.0, 1.0);
        s.iter()
            .enumerate()
            .map(|(n, &c)| {
                if c == Complex64::new(0.0, 0.0) {
                    return c;
                }
                let (kx, ky, kz) = self.torus.k(n);
                c * (i * kx).powu(alpha[0] as u32) * (i * ky).powu(alpha[1] as u32) * (i * kz).powu(alpha[2] as u32)
            })
            .collect()
    }

    /// `L^p` norm of the pointwise Euclidean length of the given fields.
    fn lp(&self, specs: &[Vec<Complex64>], p: f64) -> f64 {
        if p == 2.0 {
            let sum: f64 = specs.iter().flat_map(|s| s.iter()).map(|c| c.norm_sqr()).sum();
            return (self.volume * sum).sqrt();
        }
        let fine: Vec<Vec<f64>> = specs.iter().map(|s| self.torus.to_fine(s)).collect();
        let len = self.torus.fine_len();
        let modulus = (0..len).map(|n| fine.iter().map(|f| f[n] * f[n]).sum::<f64>().sqrt());
        if p.is_infinite() {
            modulus.fold(0.0, f64::max)
        } else {
            let mean = modulus.map(|v| v.powf(p)).sum::<f64>() / len as f64;
            (self.volume * mean).powf(1.0 / p)
        }
    }

    /// `(sum_{|b| <= m} ||D^b f||_s^s)^(1/s)`, or the maximum for `s = inf`.
    fn sobolev(&self, s: &[Complex64], m: usize, p: f64) -> f64 {
        let norms = (0..=m).flat_map(multi_indices).map(|b| self.lp(&[self.derivative(s, b)], p));
        if p.is_infinite() {
            norms.fold(0.0, f64::max)
        } else {
            norms.map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }

    /// Spectrum of the product of two band-limited fields given by nodes.
    fn product(&self, a: &[f64], b: &[f64]) -> Vec<Complex64> {
        let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
        self.torus.forward(&ab)
    }

    fn samples(&self, kind: InequalityKind, e: &Exponents, trial: usize, f: &[Complex64], g: &[Complex64]) -> Vec<InequalitySample> {
        let fx = self.torus.inverse(f);
        let gx = self.torus.inverse(g);
        let sample = |alpha, lhs: f64, rhs: f64| InequalitySample {
            trial,
            alpha,
            exponents: *e,
            lhs,
            rhs,
            ratio: if lhs == 0.0 { 0.0 } else { lhs / rhs },
        };
        match kind {
            InequalityKind::Algebra => {
                let fg = self.product(&fx, &gx);
                let lhs = self.sobolev(&fg, e.m, e.q);
                let rhs = self.sobolev(f, e.m, e.q) * self.sobolev(g, e.m, e.q);
                vec![sample([0; 3], lhs, rhs)]
            }
            InequalityKind::Calculus => {
                let fg = self.product(&fx, &gx);
                let rhs = self.lp(&[f.to_vec()], e.r1) * self.sobolev(g, e.m, e.s1)
                    + self.lp(&[g.to_vec()], e.r2) * self.sobolev(f, e.m, e.s2);
                multi_indices(e.m)
                    .into_iter()
                    .map(|alpha| sample(alpha, self.lp(&[self.derivative(&fg, alpha)], e.q), rhs))
                    .collect()
            }
            InequalityKind::Commutator => {
                let grad: Vec<Vec<Complex64>> = multi_indices(1).into_iter().map(|b| self.derivative(f, b)).collect();
                let rhs = self.lp(&grad, e.r1) * self.sobolev(g, e.m - 1, e.s1)
                    + self.lp(&[g.to_vec()], e.r2) * self.sobolev(f, e.m, e.s2);
                multi_indices(e.m)
                    .into_iter()
                    .map(|alpha| {
                        // Leibniz terms with at least one derivative on f
                        let mut acc = vec![0.0; fx.len()];
                        for b0 in 0..=alpha[0] {
                            for b1 in 0..=alpha[1] {
                                for b2 in 0..=alpha[2] {
                                    let beta = [b0, b1, b2];
                                    if beta == [0; 3] {
                                        continue;
                                    }
                                    let c = binomial(alpha[0], b0) * binomial(alpha[1], b1) * binomial(alpha[2], b2);
                                    let df = self.torus.inverse(&self.derivative(f, beta));
                                    let dg = self.torus.inverse(&self.derivative(g, [alpha[0] - b0, alpha[1] - b1, alpha[2] - b2]));
                                    for ((a, x), y) in acc.iter_mut().zip(&df).zip(&dg) {
                                        *a += c * x * y;
                                    }
                                }
                            }
                        }
                        let lhs = self.lp(&[self.torus.forward(&acc)], e.q);
                        sample(alpha, lhs, rhs)
                    })
                    .collect()
            }
        }
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn summarize(kind: InequalityKind, band: usize, trials: usize, seed: u64, samples: Vec<InequalitySample>) -> Result<InequalityStats> {
    if let Some(bad) = samples.iter().find(|s| !s.ratio.is_finite()) {
        return Err(CpeError::NumericalFault(format!("{kind} ratio of trial {}", bad.trial)));
    }
    let max_ratio = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
    let mean_ratio = if samples.is_empty() {
        0.0
    } else {
        samples.iter().map(|s| s.ratio).sum::<f64>() / samples.len() as f64
    };
    let bins = 10;
    let edges: Vec<f64> = (0..=bins).map(|i| max_ratio * i as f64 / bins as f64).collect();
    let mut counts = vec![0; bins];
    for s in &samples {
        let b = if max_ratio > 0.0 {
            ((s.ratio / max_ratio * bins as f64) as usize).min(bins - 1)
        } else {
            0
        };
        counts[b] += 1;
    }
    Ok(InequalityStats {
        kind,
        band,
        trials,
        seed,
        samples,
        max_ratio,
        mean_ratio,
        histogram: Histogram { edges, counts },
    })
}

/// Draws `trials` seeded pairs `(f, g)` and evaluates the estimate for every
/// `|alpha| = m`.
pub fn inequality_sample(kind: InequalityKind, exponents: &Exponents, trials: usize, band: usize, seed: u64) -> Result<InequalityStats> {
    let e = Exponents::new(exponents.m, exponents.q, exponents.r1, exponents.s1, exponents.r2, exponents.s2)?;
    let lab = Lab::new(band)?;
    let per_trial = par::map_indexed(trials, |t| {
        let mut rng = trial_rng(seed, t);
        let f = lab.random_spectrum(&mut rng);
        let g = lab.random_spectrum(&mut rng);
        lab.samples(kind, &e, t, &f, &g)
    });
    summarize(kind, band, trials, seed, per_trial.into_iter().flatten().collect())
}

/// As [`inequality_sample`] with `f` replaced by a nonzero constant.
pub fn constant_f_sample(kind: InequalityKind, exponents: &Exponents, trials: usize, band: usize, seed: u64) -> Result<InequalityStats> {
    let e = Exponents::new(exponents.m, exponents.q, exponents.r1, exponents.s1, exponents.r2, exponents.s2)?;
    let lab = Lab::new(band)?;
    let per_trial = par::map_indexed(trials, |t| {
        let mut rng = trial_rng(seed, t);
        let level: f64 = StandardNormal.sample(&mut rng);
        let mut f = vec![Complex64::new(0.0, 0.0); lab.torus.len()];
        f[0] = Complex64::new(1.0 + level.abs(), 0.0);
        let g = lab.random_spectrum(&mut rng);
        lab.samples(kind, &e, t, &f, &g)
    });
    summarize(kind, band, trials, seed, per_trial.into_iter().flatten().collect())
}

/// `lhs` of the calculus estimate for explicit nodal fields on a lab grid of
/// the given band limit; used to check closed forms.
pub fn calculus_lhs(band: usize, f: impl Fn(f64, f64, f64) -> f64, g: impl Fn(f64, f64, f64) -> f64, alpha: [usize; 3], q: f64) -> Result<f64> {
    let e = Exponents::new(alpha.iter().sum(), q, f64::INFINITY, q, f64::INFINITY, q)?;
    let lab = Lab::new(band)?;
    let (nx, ny, nz) = lab.torus.dims();
    let h = 2.0 * PI / nx as f64;
    let mut fx = Vec::with_capacity(lab.torus.len());
    let mut gx = Vec::with_capacity(lab.torus.len());
    for l in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let (x, y, z) = (i as f64 * h, j as f64 * h, l as f64 * h);
                fx.push(f(x, y, z));
                gx.push(g(x, y, z));
            }
        }
    }
    let fg = lab.product(&fx, &gx);
    Ok(lab.lp(&[lab.derivative(&fg, alpha)], e.q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_constraint() {
        assert!(Exponents::new(2, 2.0, f64::INFINITY, 2.0, 4.0, 4.0).is_ok());
        assert!(Exponents::new(2, 2.0, 3.0, 6.0, 6.0, 3.0).is_ok());
        assert!(matches!(Exponents::new(2, 2.0, 2.0, 2.0, f64::INFINITY, 2.0), Err(CpeError::UsageFault(_))));
        assert!(matches!(Exponents::new(2, 2.0, 5.0, 2.0, f64::INFINITY, 2.0), Err(CpeError::UsageFault(_))));
        assert!(Exponents::new(0, 2.0, f64::INFINITY, 2.0, f64::INFINITY, 2.0).is_err());
        assert!("XYZ".parse::<InequalityKind>().is_err());
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(1).len(), 3);
        assert_eq!(multi_indices(2).len(), 6);
        assert_eq!(multi_indices(3).len(), 10);
        assert!(multi_indices(2).iter().all(|a| a.iter().sum::<usize>() == 2));
    }

    #[test]
    fn closed_form_product_derivative() {
        let v = calculus_lhs(2, |x, _, _| x.cos(), |x, _, _| x.cos(), [1, 0, 0], 2.0).unwrap();
        let exact = ((2.0 * PI).powi(3) / 2.0).sqrt();
        assert!((v - exact).abs() < 1e-10 * exact, "{v} vs {exact}");
        // ||sin 2x||_4 = (3/8 (2 pi)^3)^(1/4)
        let v4 = calculus_lhs(2, |x, _, _| x.cos(), |x, _, _| x.cos(), [1, 0, 0], 4.0).unwrap();
        assert!((v4 - (0.375 * (2.0 * PI).powi(3)).powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn lebesgue_quadratures() {
        let lab = Lab::new(2).unwrap();
        let (nx, _, _) = lab.torus.dims();
        let h = 2.0 * PI / nx as f64;
        let nodes: Vec<f64> = (0..lab.torus.len()).map(|n| ((n % nx) as f64 * h).sin()).collect();
        let s = lab.torus.forward(&nodes);
        let vol = (2.0 * PI).powi(3);
        assert!((lab.lp(&[s.clone()], 4.0) - (0.375 * vol).powf(0.25)).abs() < 1e-12);
        assert!((lab.lp(&[s.clone()], 6.0) - (0.3125 * vol).powf(1.0 / 6.0)).abs() < 1e-12);
        // sampled maximum: within one fine cell of the peak
        let sup = lab.lp(&[s.clone()], f64::INFINITY);
        let cell = PI / lab.torus.fine_dims().0 as f64;
        assert!(sup <= 1.0 + 1e-14 && sup >= cell.cos());
        // H^1 of sin x: ||sin||^2 + ||cos||^2
        assert!((lab.sobolev(&s, 1, 2.0) - vol.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_f_commutator_is_zero() {
        let st = constant_f_sample(InequalityKind::Commutator, &Exponents::standard(), 3, 2, 5).unwrap();
        assert!(st.samples.iter().all(|s| s.lhs == 0.0 && s.ratio == 0.0));
        assert!(st.samples.iter().all(|s| s.rhs > 0.0));
    }

    #[test]
    fn seeded_and_reproducible() {
        let a = inequality_sample(InequalityKind::Calculus, &Exponents::standard(), 4, 2, 9).unwrap();
        let b = inequality_sample(InequalityKind::Calculus, &Exponents::standard(), 4, 2, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples.len(), 4 * 6);
        assert!(a.max_ratio > 0.0 && a.max_ratio.is_finite());
        assert_eq!(a.histogram.counts.iter().sum::<usize>(), 24);
        let c = inequality_sample(InequalityKind::Algebra, &Exponents::standard(), 4, 2, 9).unwrap();
        assert_eq!(c.samples.len(), 4);
    }
}
