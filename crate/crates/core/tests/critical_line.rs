use bbmlab_core::critical_line::*;
use bbmlab_core::params::ReproductionLaw;
use bbmlab_core::rng::stream_rng;
use bbmlab_core::stats::linear_fit;

fn binary_wave() -> TravelingWave<f64> {
    solve_traveling_wave(&ReproductionLaw::<f64>::binary(), -15.0, 25.0, 1e-12).unwrap()
}

// The absorbed counts form a Galton–Watson process in y whose generating function is read off
// the wave: E[ψ(x)^{Z_y}] = ψ(x + y).
#[test]
fn absorbed_counts_match_wave_generating_function() {
    let law = ReproductionLaw::binary();
    let wave = binary_wave();
    for (k, &y) in [0.5, 1.0, 2.0].iter().enumerate() {
        let mut rng = stream_rng(11, k as u64);
        let zs: Vec<u64> = (0..20_000).map(|_| simulate_absorbed(y, &law, &mut rng).unwrap().z_y).collect();
        for x in [-1.0, 0.0, 1.0] {
            let s = wave.eval(x);
            let v: Vec<f64> = zs.iter().map(|&z| s.powi(z as i32)).collect();
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let se = (v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
            let expect = wave.eval(x + y);
            assert!((mean - expect).abs() < 4.0 * se + 1e-3, "y={y} x={x}: {mean} vs {expect} (se {se})");
        }
    }
}

#[test]
fn wave_tail_exponent() {
    let wave = binary_wave();
    let c0 = wave.c0;
    let xs: Vec<f64> = (0..=50).map(|i| 5.0 + 0.1 * i as f64).collect();
    let logs: Vec<f64> = xs.iter().map(|&x| ((1.0 - wave.eval(-x)) / x).ln()).collect();
    let fit = linear_fit(&xs, &logs).unwrap();
    assert!((-fit.slope / c0 - 1.0).abs() < 0.05, "fitted exponent {} vs {c0}", -fit.slope);
    // 1 − ψ(−x) = (Kx + B) e^{−c₀x} up to faster-decaying terms
    let scaled: Vec<f64> = xs.iter().map(|&x| (1.0 - wave.eval(-x)) * (c0 * x).exp()).collect();
    let lin = linear_fit(&xs, &scaled).unwrap();
    for (x, s) in xs.iter().zip(&scaled) {
        let model = lin.intercept + lin.slope * x;
        assert!((s / model - 1.0).abs() < 0.02, "x={x}: {s} vs {model}");
    }
    assert!(lin.slope > 0.0);
}

#[test]
fn wave_generator_fixed_points() {
    let wave = binary_wave();
    // u(s) = ψ′(ψ⁻¹(s)) vanishes at s = 1 and s = q
    assert!(wave.dpsi[0].abs() < 1e-5, "{}", wave.dpsi[0]);
    assert!(wave.dpsi.last().unwrap().abs() < 1e-5);
    assert!(wave.dpsi[1..wave.dpsi.len() - 1].iter().all(|&d| d < 0.0));
}

#[test]
fn laplace_limits() {
    let wave = binary_wave();
    let zeros = vec![0.0; 10_000];
    let (dev, _) = laplace_crosscheck(&zeros, &wave, &[-40.0]).unwrap();
    assert!(dev < 1e-6);
    let big = vec![1e6; 10_000];
    let (dev, _) = laplace_crosscheck(&big, &wave, &[20.0]).unwrap();
    assert!(dev < 1e-3);
    assert!(laplace_crosscheck(&zeros[..100], &wave, &[0.0]).is_err());
}

#[test]
fn laplace_shift_is_optimal() {
    // a point mass at 1 has transform exp(−e^{c₀x}), close to the wave up to a shift
    let wave = binary_wave();
    let c0 = wave.c0;
    let w = vec![1.0; 20_000];
    let grid: Vec<f64> = (0..=40).map(|i| -2.0 + 0.1 * i as f64).collect();
    let (dev, s) = laplace_crosscheck(&w, &wave, &grid).unwrap();
    let at = |s: f64| grid.iter().map(|&x| ((-(c0 * x).exp()).exp() - wave.eval(x + s)).abs()).fold(0.0, f64::max);
    assert!((dev - at(s)).abs() < 1e-12);
    for ds in [-0.5, -0.05, 0.05, 0.5] {
        assert!(at(s + ds) >= dev);
    }
}

#[test]
fn small_depth_statistics_need_samples() {
    let mut rng = stream_rng(12, 0);
    let law = ReproductionLaw::binary();
    let w: Vec<f64> = (0..200).map(|_| simulate_absorbed(1.0, &law, &mut rng).unwrap().w_y).collect();
    assert!(tail_statistic(&w, 1.0, 0).is_err());
    assert!(truncated_mean_statistic(&w, 1.0).is_err());
}
