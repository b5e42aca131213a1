//! Estimators and goodness-of-fit tests shared by the experiments.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MIN_KSTAT_SAMPLES: usize = 10;
pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Unbiased cumulant estimators up to order 4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KStats {
    pub n: usize,
    pub mean: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
}

impl KStats {
    /// The `order`-th k-statistic (`1..=4`).
    pub fn get(&self, order: usize) -> f64 {
        match order {
            1 => self.mean,
            2 => self.k2,
            3 => self.k3,
            4 => self.k4,
            _ => panic!("k-statistics are available up to order 4"),
        }
    }
}

/// k-statistics `k₁..k₄`, computed from central moments for stability.
pub fn k_statistics(samples: &[f64]) -> Result<KStats> {
    let n = samples.len();
    if n < MIN_KSTAT_SAMPLES {
        return Err(Error::InsufficientSamples { needed: MIN_KSTAT_SAMPLES, got: n });
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in samples {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let k2 = nf / (nf - 1.0) * m2;
    let k3 = nf * nf / ((nf - 1.0) * (nf - 2.0)) * m3;
    let k4 = nf * nf * ((nf + 1.0) * m4 - 3.0 * (nf - 1.0) * m2 * m2) / ((nf - 1.0) * (nf - 2.0) * (nf - 3.0));
    Ok(KStats { n, mean, k2, k3, k4 })
}

/// Sample mean and its standard error.
pub fn mean_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    if samples.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Percentile bootstrap of `stat` with an explicit seed.
pub fn bootstrap<S: Fn(&[f64]) -> f64>(samples: &[f64], stat: S, resamples: usize, level: f64, seed: u64) -> Interval {
    let estimate = stat(samples);
    let n = samples.len();
    if n == 0 || resamples == 0 {
        return Interval { estimate, lo: f64::NAN, hi: f64::NAN };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf = vec![0.0; n];
    let mut reps: Vec<f64> = (0..resamples)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = samples[rng.random_range(0..n)];
            }
            stat(&buf)
        })
        .collect();
    reps.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let idx = |q: f64| ((q * (resamples - 1) as f64).round() as usize).min(resamples - 1);
    Interval { estimate, lo: reps[idx(alpha)], hi: reps[idx(1.0 - alpha)] }
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson(successes: u64, n: u64, z: f64) -> Result<Interval> {
    if n == 0 {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    Ok(Interval { estimate: p, lo: (centre - half).max(0.0), hi: (centre + half).min(1.0) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov distribution tail `Q(λ) = 2Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p(d: f64, n_eff: f64) -> f64 {
    let s = n_eff.sqrt();
    kolmogorov_q((s + 0.12 + 0.11 / s) * d)
}

/// One-sample Kolmogorov–Smirnov test against a continuous `cdf`.
pub fn ks_test<C: Fn(f64) -> f64>(samples: &[f64], cdf: C) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(KsResult { statistic: d, p_value: ks_p(d, n) })
}

/// Two-sample Kolmogorov–Smirnov test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: a.len().min(b.len()) });
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(KsResult { statistic: d, p_value: ks_p(d, n * m / (n + m)) })
}

/// Empirical distribution function.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(samples: &[f64]) -> Self {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self { sorted }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// `P̂(X ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// `P̂(X > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcfPoint {
    pub lambda: f64,
    pub value: Complex64,
    /// Conservative confidence radius `3/√n`.
    pub radius: f64,
}

/// Empirical characteristic function `n⁻¹ Σ e^{iλx}` on a grid.
pub fn ecf(samples: &[f64], lambdas: &[f64]) -> Result<Vec<EcfPoint>> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let n = samples.len() as f64;
    Ok(lambdas
        .iter()
        .map(|&lambda| {
            let (mut re, mut im) = (0.0, 0.0);
            for &x in samples {
                let (s, c) = (lambda * x).sin_cos();
                re += c;
                im += s;
            }
            EcfPoint { lambda, value: Complex64::new(re / n, im / n), radius: 3.0 / n.sqrt() }
        })
        .collect())
}

/// Replica-aggregated summary with bootstrap intervals on `k₂..k₄`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    pub kstats: KStats,
    pub k2_ci: Interval,
    pub k3_ci: Interval,
    pub k4_ci: Interval,
    pub ecdf: Ecdf,
}

pub fn summarize(samples: &[f64], seed: u64) -> Result<SampleSummary> {
    let kstats = k_statistics(samples)?;
    let ci = |order: usize, s: u64| {
        bootstrap(
            samples,
            |xs| k_statistics(xs).map(|k| k.get(order)).unwrap_or(f64::NAN),
            BOOTSTRAP_RESAMPLES,
            0.95,
            s,
        )
    };
    Ok(SampleSummary {
        n: samples.len(),
        mean: kstats.mean,
        kstats,
        k2_ci: ci(2, seed),
        k3_ci: ci(3, seed.wrapping_add(1)),
        k4_ci: ci(4, seed.wrapping_add(2)),
        ecdf: Ecdf::new(samples),
    })
}

/// Ordinary least squares `y ≈ α + βx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len().min(y.len());
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let nf = n as f64;
    let mx = x[..n].iter().sum::<f64>() / nf;
    let my = y[..n].iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for i in 0..n {
        sxx += (x[i] - mx).powi(2);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if n > 2 {
        let rss: f64 = (0..n).map(|i| (y[i] - intercept - slope * x[i]).powi(2)).sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(LinearFit { slope, intercept, slope_se })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Exp, Normal, Poisson};

    #[test]
    fn constant_sample_has_no_spread() {
        let k = k_statistics(&[3.5; 40]).unwrap();
        assert_eq!((k.k2, k.k3, k.k4), (0.0, 0.0, 0.0));
        assert!(k_statistics(&[1.0; 9]).is_err());
    }

    #[test]
    fn normal_cumulants() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = Normal::new(0.0, 1.0).unwrap().sample_iter(&mut rng).take(100_000).collect();
        let k = k_statistics(&xs).unwrap();
        // SE(k2) = √(2/n), SE(k3) = √(6/n), SE(k4) = √(24/n) for a standard normal
        let n = xs.len() as f64;
        assert!((k.k2 - 1.0).abs() < 3.0 * (2.0 / n).sqrt());
        assert!(k.k3.abs() < 3.0 * (6.0 / n).sqrt());
        assert!(k.k4.abs() < 3.0 * (24.0 / n).sqrt());
    }

    #[test]
    fn poisson_cumulants() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<f64> = Poisson::new(4.0).unwrap().sample_iter(&mut rng).take(200_000).collect();
        let k = k_statistics(&xs).unwrap();
        assert!((k.k2 - 4.0).abs() < 0.1);
        assert!((k.k3 - 4.0).abs() < 0.3);
    }

    #[test]
    fn k_statistics_match_power_sum_formulas() {
        let xs: [f64; 11] = [0.3, 1.7, -2.2, 4.0, 0.1, 0.9, 3.3, -1.0, 2.5, 0.0, 7.1];
        let n = xs.len() as f64;
        let s = |p: i32| xs.iter().map(|x| x.powi(p)).sum::<f64>();
        let (s1, s2, s3, s4) = (s(1), s(2), s(3), s(4));
        let k2 = (n * s2 - s1 * s1) / (n * (n - 1.0));
        let k3 = (2.0 * s1.powi(3) - 3.0 * n * s1 * s2 + n * n * s3) / (n * (n - 1.0) * (n - 2.0));
        let k4 = (-6.0 * s1.powi(4) + 12.0 * n * s1 * s1 * s2 - 3.0 * n * (n - 1.0) * s2 * s2
            - 4.0 * n * (n + 1.0) * s1 * s3
            + n * n * (n + 1.0) * s4)
            / (n * (n - 1.0) * (n - 2.0) * (n - 3.0));
        let k = k_statistics(&xs).unwrap();
        assert!((k.k2 - k2).abs() < 1e-12 && (k.k3 - k3).abs() < 1e-11 && (k.k4 - k4).abs() < 1e-10);
    }

    #[test]
    fn ks_calibration_and_power() {
        let exp = Exp::new(1.0).unwrap();
        let cdf = |x: f64| if x <= 0.0 { 0.0 } else { 1.0 - (-x).exp() };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut rejections = 0;
        for _ in 0..200 {
            let xs: Vec<f64> = exp.sample_iter(&mut rng).take(500).collect();
            if ks_test(&xs, cdf).unwrap().p_value < 0.05 {
                rejections += 1;
            }
        }
        // Binomial(200, 0.05): mean 10, sd ≈ 3.1
        assert!((1..=20).contains(&rejections), "{rejections}");
        let shifted: Vec<f64> = exp.sample_iter(&mut rng).take(10_000).map(|x| x + 0.1).collect();
        assert!(ks_test(&shifted, cdf).unwrap().p_value < 0.001);
        assert!(ks_test(&[], cdf).is_err());
    }

    #[test]
    fn two_sample_ks() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = Normal::new(0.0, 1.0).unwrap();
        let a: Vec<f64> = n.sample_iter(&mut rng).take(3000).collect();
        let b: Vec<f64> = n.sample_iter(&mut rng).take(2000).collect();
        assert!(ks_two_sample(&a, &b).unwrap().p_value > 0.001);
        let c: Vec<f64> = b.iter().map(|x| x + 0.3).collect();
        assert!(ks_two_sample(&a, &c).unwrap().p_value < 1e-6);
        assert_eq!(ks_two_sample(&a, &a).unwrap().statistic, 0.0);
    }

    #[test]
    fn ecf_properties() {
        let pts = ecf(&[0.0; 20], &[-2.0, 0.5, 3.0]).unwrap();
        assert!(pts.iter().all(|p| p.value == Complex64::new(1.0, 0.0)));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = Normal::new(0.0, 1.0).unwrap().sample_iter(&mut rng).take(20_000).collect();
        let grid: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.4).collect();
        let pts = ecf(&xs, &grid).unwrap();
        for p in &pts {
            assert!((p.value - Complex64::new((-p.lambda * p.lambda / 2.0).exp(), 0.0)).norm() < p.radius);
        }
        for (p, q) in pts.iter().zip(pts.iter().rev()) {
            assert_eq!(p.value, q.value.conj());
        }
    }

    #[test]
    fn wilson_interval() {
        let w = wilson(0, 100, 1.96).unwrap();
        assert_eq!(w.lo, 0.0);
        assert!(w.hi > 0.0 && w.hi < 0.05);
        let w = wilson(50, 100, 1.96).unwrap();
        assert!(w.contains(0.5) && (w.hi - w.lo - 0.19).abs() < 0.01);
    }

    #[test]
    fn estimators_are_permutation_invariant_and_seeded() {
        let xs: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64 * 0.3).collect();
        let mut ys = xs.clone();
        ys.reverse();
        let (a, b) = (k_statistics(&xs).unwrap(), k_statistics(&ys).unwrap());
        assert!((a.k2 - b.k2).abs() < 1e-12 && (a.k4 - b.k4).abs() < 1e-10);
        let s1 = summarize(&xs, 9).unwrap();
        let s2 = summarize(&xs, 9).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn least_squares_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12 && (f.intercept - 2.0).abs() < 1e-12);
    }
}
