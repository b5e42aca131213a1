//! Crossing probabilities of Brownian bridges.

use crate::error::{domain, Result};

/// Probability that a Brownian bridge from `x0` to `x1` over time `dt` touches the level `b`
/// lying above both endpoints: `exp(−2(b−x0)(b−x1)/dt)`; 1 if either endpoint is at or above `b`.
pub fn bridge_hit_prob(x0: f64, x1: f64, dt: f64, b: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return domain(format!("bridge length must be positive, got {dt}"));
    }
    Ok(upper_crossing(x0, x1, dt, b))
}

/// The same probability for a level below both endpoints.
pub fn bridge_hit_prob_below(x0: f64, x1: f64, dt: f64, b: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return domain(format!("bridge length must be positive, got {dt}"));
    }
    Ok(upper_crossing(-x0, -x1, dt, -b))
}

#[inline]
pub(crate) fn upper_crossing(x0: f64, x1: f64, dt: f64, b: f64) -> f64 {
    if x0 >= b || x1 >= b {
        return 1.0;
    }
    (-2.0 * (b - x0) * (b - x1) / dt).exp()
}

/// Crossing-time estimate for a level `b` crossed between `(t0, x0)` and `(t0 + dt, x1)`:
/// linear interpolation when the endpoint lies beyond the level, else the midpoint.
#[inline]
pub(crate) fn crossing_time(t0: f64, dt: f64, x0: f64, x1: f64, b: f64, upward: bool) -> f64 {
    let beyond = if upward { x1 >= b } else { x1 <= b };
    if beyond && x1 != x0 {
        let frac = ((b - x0) / (x1 - x0)).clamp(0.0, 1.0);
        t0 + dt * frac
    } else if beyond {
        t0
    } else {
        t0 + 0.5 * dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn limits() {
        assert_eq!(bridge_hit_prob(1.0, 0.2, 0.5, 1.0).unwrap(), 1.0);
        assert_eq!(bridge_hit_prob(0.2, 1.3, 0.5, 1.0).unwrap(), 1.0);
        assert!(bridge_hit_prob(-40.0, -40.0, 1.0, 0.0).unwrap() < 1e-300);
        assert!(bridge_hit_prob(0.0, 0.0, 0.0, 1.0).is_err());
        assert_eq!(bridge_hit_prob_below(0.5, 0.3, 1.0, 0.0).unwrap(), bridge_hit_prob(-0.5, -0.3, 1.0, 0.0).unwrap());
    }

    #[test]
    fn half_unit_gap() {
        let p = bridge_hit_prob(-0.5, -0.5, 1.0, 0.0).unwrap();
        assert!((p - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn matches_fine_grid_bridges() {
        // Bridges from −0.5 to −0.5 over unit time, built on a fine grid; the grid misses
        // excursions between points, so the estimate is biased low by O(√h).
        let mut rng = stream_rng(11, 0);
        let steps = 2000;
        let h = 1.0 / steps as f64;
        let paths = 20_000;
        let mut hits = 0usize;
        let mut w = vec![0.0; steps + 1];
        for _ in 0..paths {
            for k in 1..=steps {
                let z: f64 = StandardNormal.sample(&mut rng);
                w[k] = w[k - 1] + h.sqrt() * z;
            }
            let wend = w[steps];
            let hit = (0..=steps).any(|k| {
                let s = k as f64 * h;
                -0.5 + w[k] - s * wend >= 0.0
            });
            if hit {
                hits += 1;
            }
        }
        let p = hits as f64 / paths as f64;
        let se = (p * (1.0 - p) / paths as f64).sqrt();
        // discrete monitoring shifts the level by ≈ 0.5826·√h (Broadie–Glasserman–Kou)
        let shifted = (-2.0 * (0.5 + 0.5826 * h.sqrt()).powi(2)).exp();
        assert!((p - shifted).abs() < 3.0 * se + 2e-3, "{p} vs {shifted} ± {se}");
        assert!((p - (-0.5f64).exp()).abs() < 0.05);
    }
}
