//! Densities of Brownian motion killed on leaving `(0, a)`.

use crate::error::{domain, Result};
use crate::scalar::Real;

use super::theta::{theta_dt, theta_dx, MAX_TERMS, TRUNCATION, T_SWITCH};

/// Kernels of Brownian motion killed at `0` and `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalKernel<F> {
    a: F,
}

impl<F: Real> IntervalKernel<F> {
    pub fn new(a: F) -> Result<Self> {
        if !(a > F::zero()) || !a.is_finite() {
            return domain(format!("interval width must be positive, got {a}"));
        }
        Ok(Self { a })
    }

    pub fn width(&self) -> F {
        self.a
    }

    fn check_point(&self, x: F) -> Result<()> {
        if !(x >= F::zero() && x <= self.a) {
            return domain(format!("position {x} outside [0, {}]", self.a));
        }
        Ok(())
    }

    /// Transition density `p_t^a(x,y)`.
    pub fn p(&self, x: F, y: F, t: F) -> Result<F> {
        self.check_point(x)?;
        self.check_point(y)?;
        if !(t > F::zero()) {
            return domain(format!("time must be positive, got {t}"));
        }
        let a = self.a;
        if x == F::zero() || y == F::zero() || x == a || y == a {
            return Ok(F::zero());
        }
        let s = t / (a * a);
        let (u, v) = (x / a, y / a);
        let v = if s >= F::lit(T_SWITCH) { sine_series(u, v, s) } else { image_sum(u, v, s) };
        Ok(v / a)
    }

    /// Density of the exit time through `a`, `r_t^a(x) = (1/2a²) θ′(x/a − 1, t/a²)`.
    pub fn r(&self, x: F, t: F) -> Result<F> {
        self.check_point(x)?;
        if !(t > F::zero()) {
            return domain(format!("time must be positive, got {t}"));
        }
        if x == F::zero() {
            return Ok(F::zero());
        }
        let a2 = self.a * self.a;
        let v = theta_dx(x / self.a - F::one(), t / a2)?;
        Ok((v / (F::two() * a2)).max(F::zero()))
    }

    /// Green function `∫₀^∞ p_t^a(x,y) dt = 2a⁻¹ (x∧y)(a − x∨y)`.
    pub fn potential(&self, x: F, y: F) -> Result<F> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(F::two() / self.a * x.min(y) * (self.a - x.max(y)))
    }

    /// Transition density of the taboo process on `(0, a)`.
    pub fn taboo(&self, x: F, y: F, t: F) -> Result<F> {
        if !(x > F::zero() && x < self.a && y > F::zero() && y < self.a) {
            return domain(format!("taboo density needs x, y in (0, {})", self.a));
        }
        let a = self.a;
        let pi = F::PI();
        let s = t / (a * a);
        if s >= F::lit(T_SWITCH) {
            // e^{π²s/2} p is the sine series with the decay of the first mode removed
            let (u, v) = (x / a, y / a);
            let mut sum = F::zero();
            for n in 1..=MAX_TERMS {
                let nf = F::from_count(n);
                let env = (-F::pi2() * (nf * nf - F::one()) * s * F::half()).exp();
                let term = env * (pi * nf * u).sin() * (pi * nf * v).sin();
                sum += term;
                if n > 1 && env * nf * nf < F::lit(TRUNCATION) * (sum.abs() + F::one()) {
                    break;
                }
            }
            return Ok(F::two() / a * sum * (pi * y / a).sin() / (pi * x / a).sin());
        }
        let p = self.p(x, y, t)?;
        Ok((pi * y / a).sin() / (pi * x / a).sin() * (F::pi2() * s * F::half()).exp() * p)
    }

    /// The theta-difference form `(2a)⁻¹(θ((x−y)/a, t/a²) − θ((x+y)/a, t/a²))` of [`Self::p`].
    pub fn p_theta_difference(&self, x: F, y: F, t: F) -> Result<F> {
        let a = self.a;
        let s = t / (a * a);
        let d = super::theta::theta((x - y) / a, s)? - super::theta::theta((x + y) / a, s)?;
        Ok(d / (F::two() * a))
    }
}

/// `a·p_t^a` on the unit interval from the sine series, `s = t/a² ≥ T_SWITCH`.
fn sine_series<F: Real>(u: F, v: F, s: F) -> F {
    let pi = F::PI();
    let mut sum = F::zero();
    for n in 1..=MAX_TERMS {
        let nf = F::from_count(n);
        let env = (-F::pi2() * nf * nf * s * F::half()).exp();
        sum += env * (pi * nf * u).sin() * (pi * nf * v).sin();
        if env < F::lit(TRUNCATION) * sum.abs() {
            break;
        }
    }
    F::two() * sum
}

/// `a·p_t^a` on the unit interval from the method of images, small `s`.
fn image_sum<F: Real>(u: F, v: F, s: F) -> F {
    // reflect so that u + v ≤ 1; only the n = 0 pair can then cancel
    let (u, v) = if u + v > F::one() { (F::one() - u, F::one() - v) } else { (u, v) };
    let (u, v) = (u.min(v), u.max(v));
    let norm = (F::two() * F::PI() * s).sqrt().recip();
    let g = |d: F| norm * (-d * d / (F::two() * s)).exp();
    let d0 = u - v;
    let mut sum = -g(d0) * (-F::two() * u * v / s).exp_m1();
    for k in 1..=MAX_TERMS {
        let two_k = F::two() * F::from_count(k);
        let term = g(d0 + two_k) + g(d0 - two_k) - g(u + v + two_k) - g(u + v - two_k);
        sum += term;
        let nearest = (two_k - F::two()).max(F::zero());
        if g(nearest) * F::lit(4.0) < F::lit(TRUNCATION) * sum.abs() || g(nearest) == F::zero() {
            break;
        }
    }
    sum.max(F::zero())
}

/// `E_t = Σ_{n≥2} n² e^{−π²(n²−1)t/2}`.
pub fn series_tail_e<F: Real>(t: F) -> Result<F> {
    if !(t > F::zero()) {
        return domain(format!("E_t needs t > 0, got {t}"));
    }
    if t >= F::lit(T_SWITCH) {
        let mut sum = F::zero();
        for n in 2..=MAX_TERMS {
            let nf = F::from_count(n);
            let term = nf * nf * (-F::pi2() * (nf * nf - F::one()) * t * F::half()).exp();
            sum += term;
            // terms fall faster than geometrically with ratio below e^{-π²(2n+1)t/2}
            if term < F::lit(1e-17) * sum {
                break;
            }
        }
        return Ok(sum);
    }
    // Σ_{n≥1} n² e^{−π²n²t/2} = −θ_t(0,t)/π²
    let s1 = -theta_dt(F::zero(), t)? / F::pi2();
    Ok((F::pi2() * t * F::half()).exp() * s1 - F::one())
}
