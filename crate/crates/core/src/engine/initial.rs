//! Initial configurations drawn from the quasi-stationary profile `e^{−μx} sin(πx/a)`.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::params::ModelParams;

/// One draw from the density `∝ e^{−μx} sin(πx/a)` on `(0, a)`.
pub fn sample_profile_point<R: Rng + ?Sized>(a: f64, mu: f64, rng: &mut R) -> f64 {
    loop {
        // truncated exponential proposal, accepted with probability sin(πx/a)
        let u: f64 = rng.random();
        let x = if mu * a > 1e-12 { -(1.0 - u * (1.0 - (-mu * a).exp())).ln() / mu } else { u * a };
        if x > 0.0 && x < a && rng.random::<f64>() < (PI * x / a).sin() {
            return x;
        }
    }
}

pub fn sample_profile<R: Rng + ?Sized>(a: f64, mu: f64, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| sample_profile_point(a, mu, rng)).collect()
}

/// `E[w(X)]` and `E[e^{μ(X−a)}]` for `X` drawn from the profile.
pub fn profile_means(a: f64, mu: f64) -> (f64, f64) {
    let k = PI / a;
    let norm = k * (1.0 + (-mu * a).exp()) / (mu * mu + k * k);
    let ew = a * (-mu * a).exp() * (a / 2.0) / norm;
    let ey = (-mu * a).exp() * (2.0 / k) / norm;
    (ew, ey)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialPopulation {
    pub positions: Vec<f64>,
    pub z: f64,
    pub y: f64,
    pub attempts: usize,
}

/// Draws `n = round(κe^A / E[w])` particles from the profile, redrawing the whole sample until
/// `|e^{−A}Z₀ − κ| ≤ band`.
pub fn sample_initial_population<R: Rng + ?Sized>(p: &ModelParams<f64>, band: f64, max_attempts: usize, rng: &mut R) -> Result<InitialPopulation> {
    if !(band > 0.0) {
        return domain(format!("band must be positive, got {band}"));
    }
    let (ew, _) = profile_means(p.a, p.mu);
    let n = (p.target_z() / ew).round().max(1.0) as usize;
    let scale = (-p.big_a).exp();
    for attempt in 1..=max_attempts {
        let positions = sample_profile(p.a, p.mu, n, rng);
        let z: f64 = positions.iter().map(|&x| p.weight(x)).sum();
        if (scale * z - p.kappa).abs() <= band {
            let y = positions.iter().map(|&x| (p.mu * (x - p.a)).exp()).sum();
            return Ok(InitialPopulation { positions, z, y, attempts: attempt });
        }
    }
    Err(Error::NoConvergence(format!("no initial population within band {band} after {max_attempts} attempts")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;
    use crate::numerics::QuadOptions;
    use crate::rng::stream_rng;

    #[test]
    fn means_match_quadrature() {
        let (a, mu) = (8.0, 1.3586);
        let dens = |x: f64| (-mu * x).exp() * (PI * x / a).sin();
        let norm = integrate(dens, 0.0, a, QuadOptions::default()).unwrap().value;
        let ew = integrate(|x| dens(x) * a * (mu * (x - a)).exp() * (PI * x / a).sin(), 0.0, a, QuadOptions::default()).unwrap().value / norm;
        let ey = integrate(|x| dens(x) * (mu * (x - a)).exp(), 0.0, a, QuadOptions::default()).unwrap().value / norm;
        let (w, y) = profile_means(a, mu);
        assert!((w / ew - 1.0).abs() < 1e-9);
        assert!((y / ey - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sample_mean_matches_profile() {
        let (a, mu) = (5.0, 1.0);
        let mut rng = stream_rng(3, 0);
        let xs = sample_profile(a, mu, 50_000, &mut rng);
        let k = PI / a;
        // E[X] from the Laplace transform of sin on (0, a)
        let num = integrate(|x| x * (-mu * x).exp() * (k * x).sin(), 0.0, a, QuadOptions::default()).unwrap().value;
        let den = integrate(|x| (-mu * x).exp() * (k * x).sin(), 0.0, a, QuadOptions::default()).unwrap().value;
        let (m, se) = crate::stats::mean_se(&xs);
        assert!((m - num / den).abs() < 4.0 * se);
        assert!(xs.iter().all(|&x| x > 0.0 && x < a));
    }

    #[test]
    fn population_lands_in_band() {
        let p = ModelParams::desk_preset();
        let mut rng = stream_rng(5, 0);
        let init = sample_initial_population(&p, 0.1, 100, &mut rng).unwrap();
        assert!(((-p.big_a).exp() * init.z - p.kappa).abs() <= 0.1);
        assert!(init.positions.len() > 1000);
        assert!(sample_initial_population(&p, 0.0, 1, &mut rng).is_err());
    }
}
