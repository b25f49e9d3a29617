//! Randomized invariants of the public API.

use proptest::prelude::*;

use cpe_core::analysis::inequality::{inequality_sample, Exponents, InequalityKind};
use cpe_core::analysis::{sobolev_norm, SobolevNorm};
use cpe_core::diagnostics::diagnose;
use cpe_core::initial::smooth_random;
use cpe_core::integrators::{advance, RunOptions, TimeStep};
use cpe_core::io::{decode_snapshot, encode_snapshot, fmt_f64};
use cpe_core::spectral::{ddz, vertical_average, Channel};
use cpe_core::tendencies::regularized_tendency;
use cpe_core::{Grid, PhysParams, State};

fn state(seed: u64, amplitude: f64, band: usize) -> State {
    smooth_random(Grid::cube(8).unwrap(), amplitude, band, seed, 0.5, 0.5).unwrap()
}

fn wall_max(f: &cpe_core::ScalarField3D) -> f64 {
    let nz = f.grid().nz;
    f.level(0).iter().chain(f.level(nz)).fold(0.0, |a, v| a.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sobolev_norm_is_monotone_in_k(seed in any::<u64>(), amp in 0.01f64..2.0, band in 1usize..4) {
        let s = state(seed, amp, band);
        for k in 0..4 {
            let a = sobolev_norm(&s.sigma, k).unwrap();
            let b = sobolev_norm(&s.sigma, k + 1).unwrap();
            prop_assert!(a <= b * (1.0 + 1e-14));
            prop_assert!(sobolev_norm(&s.p, k).unwrap() <= sobolev_norm(&s.p, k + 1).unwrap() * (1.0 + 1e-14));
        }
    }

    #[test]
    fn sobolev_norm_is_a_norm(seed in any::<u64>(), k in 0usize..5, c in -3.0f64..3.0) {
        let a = state(seed, 0.7, 2);
        let b = state(seed.wrapping_add(1), 0.7, 2);
        let na = sobolev_norm(&a.v.x, k).unwrap();
        let nb = sobolev_norm(&b.v.x, k).unwrap();
        let sum = sobolev_norm(&a.v.x.add(&b.v.x), k).unwrap();
        prop_assert!(sum <= (na + nb) * (1.0 + 1e-12));
        let scaled = sobolev_norm(&a.v.x.scaled(c), k).unwrap();
        prop_assert!((scaled - c.abs() * na).abs() <= 1e-12 * na.max(1.0));
        let sq = a.v.sobolev_norm_sq(k).unwrap();
        prop_assert!((sq - na * na - sobolev_norm(&a.v.y, k).unwrap().powi(2)).abs() <= 1e-10 * sq.max(1.0));
    }

    #[test]
    fn transforms_round_trip(seed in any::<u64>(), band in 1usize..4) {
        let s = state(seed, 1.0, band);
        let c = Channel::get(s.grid());
        let back = c.inverse(&c.forward(&s.sigma));
        prop_assert!(back.max_diff(&s.sigma) <= 1e-12 * s.sigma.max_abs());
        let back2 = c.inverse2(&c.forward2(&s.p));
        prop_assert!(back2.max_diff(&s.p) <= 1e-12 * s.p.max_abs());
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact(seed in any::<u64>(), t in -1e6f64..1e6, eps in 0.0f64..10.0) {
        let s = state(seed, 0.4, 2);
        let params = PhysParams::standard().with_epsilon(eps).unwrap();
        let bytes = encode_snapshot(&s, t, &params);
        let (h, back) = decode_snapshot(&bytes).unwrap();
        prop_assert_eq!(h.time.to_bits(), t.to_bits());
        prop_assert_eq!(h.epsilon.to_bits(), eps.to_bits());
        prop_assert!(back.sigma.data().iter().zip(s.sigma.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
        prop_assert!(back.p.data().iter().zip(s.p.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
        prop_assert!(back.v.x.data().iter().zip(s.v.x.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn csv_numbers_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn exponents_accepted_iff_reciprocals_balance(
        q in prop::sample::select(vec![2.0, 3.0, 4.0, 6.0, f64::INFINITY]),
        r in prop::sample::select(vec![2.0, 3.0, 4.0, 6.0, f64::INFINITY]),
        s in prop::sample::select(vec![2.0, 3.0, 4.0, 6.0, f64::INFINITY]),
    ) {
        let balanced = (1.0 / q - 1.0 / r - 1.0 / s).abs() < 1e-12;
        prop_assert_eq!(Exponents::new(2, q, r, s, r, s).is_ok(), balanced);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn diagnostics_respect_the_walls(seed in any::<u64>(), amp in 0.05f64..0.5) {
        let s = state(seed, amp, 2);
        let d = diagnose(&s, &PhysParams::standard()).unwrap();
        prop_assert!(vertical_average(&d.phi).unwrap().max_abs() <= 1e-11);
        prop_assert!(d.w.level(0).iter().all(|&v| v == 0.0));
        prop_assert!(d.w.level(8).iter().all(|v| v.abs() <= 1e-11));
    }

    #[test]
    fn tendencies_keep_neumann_compatibility(seed in any::<u64>(), eps in 0.0f64..0.1) {
        let s = state(seed, 0.3, 2);
        let k = regularized_tendency(&s, &PhysParams::standard().with_epsilon(eps).unwrap()).unwrap();
        prop_assert!(wall_max(&ddz(&k.dv.x).unwrap()) <= 1e-9);
        prop_assert!(wall_max(&ddz(&k.dv.y).unwrap()) <= 1e-9);
        prop_assert!(wall_max(&ddz(&k.dsigma).unwrap()) <= 1e-9);
    }

    #[test]
    fn records_and_running_sums(seed in any::<u64>(), every in 1usize..6, steps in 1usize..9) {
        let s = state(seed, 0.2, 2);
        let mut opts = RunOptions::new(1e-4 * steps as f64);
        opts.dt = TimeStep::Steps(steps);
        opts.record_every = every;
        let r = advance(&s, &PhysParams::standard(), &opts).unwrap();
        prop_assert_eq!(r.reports.len(), steps.div_ceil(every) + 1);
        for w in r.reports.windows(2) {
            prop_assert!(w[1].sums.v_h4 >= w[0].sums.v_h4);
            prop_assert!(w[1].sums.dz_sigma_h2 >= w[0].sums.dz_sigma_h2);
        }
    }

    #[test]
    fn inequality_sampling_is_reproducible(seed in any::<u64>()) {
        let e = Exponents::standard();
        let a = inequality_sample(InequalityKind::Commutator, &e, 3, 2, seed).unwrap();
        let b = inequality_sample(InequalityKind::Commutator, &e, 3, 2, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
