use bbmlab_core::breakout::delta_shift;
use bbmlab_core::engine::{bridge_hit_prob, EngineConfig, LogLevel, PopulationState};
use bbmlab_core::levy::{LevySampler, LevySpec};
use bbmlab_core::nbbm::{simulate_nbbm, NbbmConfig};
use bbmlab_core::numerics::{integrate, theta_dt, theta_fourier, theta_gaussian, IntervalKernel, QuadOptions};
use bbmlab_core::params::{a_from_n, n_from_a, ModelParams, ReproductionLaw};
use bbmlab_core::rng::stream_rng;
use bbmlab_core::stats::{k_statistics, wilson};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn theta_series_agree(x in -3.0f64..3.0, t in 0.02f64..6.0, order in 0u32..3) {
        let f = theta_fourier(x, t, order).unwrap().value;
        let g = theta_gaussian(x, t, order).unwrap().value;
        let scale = 1.0 + f.abs();
        prop_assert!((f - g).abs() <= 1e-10 * scale, "{f} vs {g}");
    }

    #[test]
    fn theta_solves_heat_equation(x in 0.0f64..2.0, t in 0.05f64..3.0) {
        let dt = theta_dt(x, t).unwrap();
        let dxx = theta_fourier(x, t, 2).unwrap().value;
        prop_assert!((dt - 0.5 * dxx).abs() <= 1e-9 * (1.0 + dxx.abs()));
    }

    #[test]
    fn chapman_kolmogorov(x in 0.05f64..0.95, y in 0.05f64..0.95, s in 0.02f64..0.5, t in 0.02f64..0.5) {
        let k = IntervalKernel::new(1.0f64).unwrap();
        let lhs = integrate(|z| k.p(x, z, s).unwrap() * k.p(z, y, t).unwrap(), 0.0, 1.0, QuadOptions::tol(1e-12, 1e-10)).unwrap().value;
        let rhs = k.p(x, y, s + t).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-7 * (1.0 + rhs));
    }

    #[test]
    fn width_is_increasing_in_population(ln_n in 3.0f64..40.0, d in 0.1f64..5.0, big_a in 0.0f64..2.0) {
        let c0 = 2f64.sqrt();
        let a1 = a_from_n(ln_n.exp(), big_a, c0).unwrap();
        let a2 = a_from_n((ln_n + d).exp(), big_a, c0).unwrap();
        prop_assert!(a2 > a1);
        let back = n_from_a(a1, big_a, c0).unwrap().ln();
        prop_assert!((back - ln_n).abs() < 1e-8 * ln_n);
    }

    #[test]
    fn delta_is_monotone_and_clamped(z1 in 0.0f64..1e4, z2 in 0.0f64..1e4) {
        let p = ModelParams::desk_preset();
        let (lo, hi) = if z1 <= z2 { (z1, z2) } else { (z2, z1) };
        let (dl, dh) = (delta_shift(lo, &p).unwrap(), delta_shift(hi, &p).unwrap());
        prop_assert!(dl >= 0.0 && dl <= dh);
        prop_assert_eq!(dl == 0.0, lo <= p.target_z());
    }

    #[test]
    fn delta_of_z_ignores_labels(xs in prop::collection::vec(0.01f64..7.99, 1..40), seed in any::<u64>()) {
        let p = ModelParams::desk_preset();
        let cfg = EngineConfig { log_level: LogLevel::None, ..EngineConfig::killed(&p) };
        let z = |pos: &[f64]| PopulationState::new(cfg.clone(), &p.law, pos, stream_rng(0, 0)).unwrap().functional_z();
        let mut shuffled = xs.clone();
        let mut r = stream_rng(seed, 1);
        use rand::seq::SliceRandom;
        shuffled.shuffle(&mut r);
        let (z1, z2) = (z(&xs), z(&shuffled));
        prop_assert!((z1 - z2).abs() <= 1e-12 * z1.abs().max(1e-300));
        let scale = p.target_z() / z1.max(1e-300) * 3.0;
        let d1 = delta_shift(z1 * scale, &p).unwrap();
        let d2 = delta_shift(z2 * scale, &p).unwrap();
        prop_assert!((d1 - d2).abs() <= 1e-12);
    }

    #[test]
    fn kstats_ignore_order(mut xs in prop::collection::vec(-10.0f64..10.0, 10..60)) {
        let a = k_statistics(&xs).unwrap();
        xs.reverse();
        xs.rotate_left(3);
        let b = k_statistics(&xs).unwrap();
        for (u, v) in [(a.k2, b.k2), (a.k3, b.k3), (a.k4, b.k4)] {
            prop_assert!((u - v).abs() <= 1e-9 * (1.0 + u.abs()));
        }
        prop_assert!(a.k2 >= 0.0);
    }

    #[test]
    fn wilson_contains_estimate(n in 1u64..5000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).floor() as u64;
        let ci = wilson(k, n, 1.96).unwrap();
        prop_assert!(0.0 <= ci.lo && ci.lo <= ci.estimate && ci.estimate <= ci.hi && ci.hi <= 1.0);
    }

    #[test]
    fn bridge_probability_is_a_probability(x0 in 0.0f64..1.0, x1 in 0.0f64..1.0, dt in 1e-4f64..1.0) {
        let p = bridge_hit_prob(x0, x1, dt, 1.0).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        let q = bridge_hit_prob(x0, x1, dt, 1.5).unwrap();
        prop_assert!(q <= p);
    }

    #[test]
    fn levy_jump_cdf_is_a_cdf(x in 0.0f64..5.0, y in 0.0f64..5.0) {
        let s = LevySampler::new(LevySpec::new(2f64.sqrt(), 1.0).unwrap(), 1e-2).unwrap();
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        let (a, b) = (s.jump_cdf(lo), s.jump_cdf(hi));
        prop_assert!((0.0..=1.0).contains(&a) && a <= b && b <= 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn nbbm_never_exceeds_capacity(n in 1usize..40, seed in any::<u64>(), ternary in any::<bool>()) {
        let law = if ternary { ReproductionLaw::new(vec![(0, 0.2), (3, 0.8)]).unwrap() } else { ReproductionLaw::binary() };
        let mut cfg = NbbmConfig::new(n, 5.0);
        cfg.record_every = 0.5;
        match simulate_nbbm(&cfg, &law, &mut stream_rng(seed, 0)) {
            Ok(s) => prop_assert!(s.counts.iter().all(|&c| c >= 1 && c <= n)),
            Err(bbmlab_core::Error::Extinction { .. }) => prop_assert!(ternary),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}
