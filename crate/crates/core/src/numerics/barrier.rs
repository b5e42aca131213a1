//! The default barrier shape `f_Δ(t) = c₀⁻¹ log(1 + (e^{c₀Δ}−1) g(t))` with
//! `g(t) = π⁻² e^{π²t/2} ∂_tθ(1,t)`.

use crate::error::{domain, Result};
use crate::scalar::Real;

use super::theta::{theta_eval, MAX_TERMS, T_SWITCH};

/// `g`, `g′`, `g″` at `t > 0`. `g` rises from 0 at `t = 0` to 1 at `t = ∞`.
pub fn relaxation_profile<F: Real>(t: F) -> (F, F, F) {
    if !(t > F::zero()) {
        return (F::zero(), F::zero(), F::zero());
    }
    let c = F::pi2() * F::half();
    if t >= F::lit(T_SWITCH) {
        // g = Σ (−1)^{n+1} n² e^{−c(n²−1)t}
        let (mut g0, mut g1, mut g2) = (F::zero(), F::zero(), F::zero());
        for n in 1..=MAX_TERMS {
            let nf = F::from_count(n);
            let rate = c * (nf * nf - F::one());
            let sign = if n % 2 == 1 { F::one() } else { -F::one() };
            let term = sign * nf * nf * (-rate * t).exp();
            g0 += term;
            g1 -= rate * term;
            g2 += rate * rate * term;
            if n > 1 && (rate * rate * term).abs() < F::lit(1e-17) && term.abs() < F::lit(1e-17) {
                break;
            }
        }
        return (g0, g1, g2);
    }
    // ∂_t^k θ = 2^{-k} ∂_x^{2k} θ
    let th = |k: u32| theta_eval(F::one(), t, 2 * k).map(|e| e.value).unwrap_or(F::zero()) * F::half().powi(k as i32);
    let (t1, t2, t3) = (th(1), th(2), th(3));
    let e = (c * t).exp() / F::pi2();
    (e * t1, e * (c * t1 + t2), e * (c * c * t1 + F::two() * c * t2 + t3))
}

/// The barrier ramp for a given shift `Δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierShape<F> {
    c0: F,
    delta: F,
    k: F,
}

impl<F: Real> BarrierShape<F> {
    pub fn new(c0: F, delta: F) -> Result<Self> {
        if !(delta >= F::zero()) {
            return domain(format!("barrier shift must be non-negative, got {delta}"));
        }
        if !(c0 > F::zero()) {
            return domain(format!("c0 must be positive, got {c0}"));
        }
        Ok(Self { c0, delta, k: (c0 * delta).exp_m1() })
    }

    pub fn delta(&self) -> F {
        self.delta
    }

    /// `f_Δ(t)`; zero for `t ≤ 0`.
    pub fn value(&self, t: F) -> F {
        if self.k == F::zero() || !(t > F::zero()) {
            return F::zero();
        }
        let (g, _, _) = relaxation_profile(t);
        (self.k * g).ln_1p() / self.c0
    }

    /// `(f, f′, f″)` at `t`.
    pub fn derivatives(&self, t: F) -> (F, F, F) {
        if self.k == F::zero() || !(t > F::zero()) {
            return (F::zero(), F::zero(), F::zero());
        }
        let (g, g1, g2) = relaxation_profile(t);
        let h = F::one() + self.k * g;
        let f = (self.k * g).ln_1p() / self.c0;
        let f1 = self.k * g1 / (self.c0 * h);
        let f2 = (self.k * g2 / h - (self.k * g1 / h).powi(2)) / self.c0;
        (f, f1, f2)
    }

    /// `‖f‖ = max(‖f‖∞, ‖f′‖∞, ‖f′‖∞², ‖f″‖∞)` estimated on a grid of `[0, t_max]`.
    pub fn norm(&self, t_max: F, points: usize) -> F {
        let (mut s0, mut s1, mut s2) = (F::zero(), F::zero(), F::zero());
        for i in 0..=points {
            let t = t_max * F::from_count(i) / F::from_count(points);
            let (f, f1, f2) = self.derivatives(t);
            s0 = s0.max(f.abs());
            s1 = s1.max(f1.abs());
            s2 = s2.max(f2.abs());
        }
        s0.max(s1).max(s1 * s1).max(s2)
    }
}

/// `f_Δ(t)` for the default shape.
pub fn barrier_shape_default<F: Real>(c0: F, delta: F, t: F) -> Result<F> {
    Ok(BarrierShape::new(c0, delta)?.value(t))
}
