//! The theta function `θ(x,t)`, the density of Brownian motion on the circle `ℝ/2ℤ`.
//!
//! Two series are available: the Fourier series `1 + 2Σ e^{-π²n²t/2} cos(πnx)`, fast for large
//! `t`, and the image sum `Σ 2(2πt)^{-1/2} e^{-(x-2n)²/2t}`, fast for small `t`. By Poisson
//! summation each image carries the factor 2, so `θ` integrates to 2 over a period.

use crate::error::{domain, Result};
use crate::scalar::Real;

/// Time at which [`theta`] switches from the image sum to the Fourier series.
pub const T_SWITCH: f64 = 2.0 / std::f64::consts::PI;
/// Relative size of the first neglected term.
pub const TRUNCATION: f64 = 1e-16;
pub const MAX_TERMS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Fourier,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaEval<F> {
    pub x: F,
    pub t: F,
    pub value: F,
    pub terms_used: usize,
    pub representation: Representation,
}

/// Reduces `x` to `[-1, 1]` using the period 2.
fn reduce<F: Real>(x: F) -> F {
    x - F::two() * (x * F::half()).round()
}

fn check_t<F: Real>(t: F) -> Result<()> {
    if !(t > F::zero()) || !t.is_finite() {
        return domain(format!("theta needs t > 0, got {t}"));
    }
    Ok(())
}

/// Probabilists' Hermite polynomial `He_j(z)`.
fn hermite<F: Real>(j: u32, z: F) -> F {
    let (mut h0, mut h1) = (F::one(), z);
    if j == 0 {
        return h0;
    }
    for k in 1..j {
        let h2 = z * h1 - F::from_count(k as usize) * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// `order`-th `x`-derivative from the Fourier series.
pub fn theta_fourier<F: Real>(x: F, t: F, order: u32) -> Result<ThetaEval<F>> {
    check_t(t)?;
    let xr = reduce(x);
    let pi = F::PI();
    let half_pi2_t = F::pi2() * t * F::half();
    let shift = F::from_count(order as usize) * pi * F::half();
    let mut sum = if order == 0 { F::one() } else { F::zero() };
    let mut scale = F::one();
    let mut terms = 1;
    // Envelope 2(πn)^j e^{-π²n²t/2} peaks at n² = j/(π²t); stop after the peak once it is small.
    let n_peak = (F::from_count(order as usize) / (F::pi2() * t)).sqrt();
    for n in 1..=MAX_TERMS {
        let nf = F::from_count(n);
        let env = F::two() * (pi * nf).powi(order as i32) * (-half_pi2_t * nf * nf).exp();
        let term = env * (pi * nf * xr + shift).cos();
        sum += term;
        scale = scale.max(env);
        terms = n + 1;
        if nf >= n_peak && env < F::lit(TRUNCATION) * (sum.abs() + scale) {
            break;
        }
    }
    Ok(ThetaEval { x, t, value: sum, terms_used: terms, representation: Representation::Fourier })
}

/// `order`-th `x`-derivative from the image (Gaussian) series.
pub fn theta_gaussian<F: Real>(x: F, t: F, order: u32) -> Result<ThetaEval<F>> {
    check_t(t)?;
    let xr = reduce(x);
    let st = t.sqrt();
    let norm = F::two() * (F::two() * F::PI() * t).sqrt().recip() * st.powi(-(order as i32));
    let sign = if order % 2 == 0 { F::one() } else { -F::one() };
    let jf = F::from_count(order as usize);
    let term = |d: F| {
        let z = d / st;
        sign * norm * hermite(order, z) * (-z * z * F::half()).exp()
    };
    let mut sum = term(xr);
    let mut scale = F::one().max(sum.abs());
    let mut terms = 1;
    for k in 1..=MAX_TERMS {
        let two_k = F::two() * F::from_count(k);
        let (d1, d2) = (xr - two_k, xr + two_k);
        sum += term(d1) + term(d2);
        terms += 2;
        // bound |He_j(z)| ≤ (|z| + j)^j at the nearer image
        let z = d1.abs().min(d2.abs()) / st;
        let env = F::two() * norm * (z + jf).powi(order as i32) * (-z * z * F::half()).exp();
        scale = scale.max(sum.abs());
        if k >= 1 && z > jf.sqrt() && env < F::lit(TRUNCATION) * (sum.abs() + scale) {
            break;
        }
        if terms >= MAX_TERMS {
            break;
        }
    }
    Ok(ThetaEval { x, t, value: sum, terms_used: terms, representation: Representation::Gaussian })
}

/// `order`-th `x`-derivative of `θ`, choosing the series by `t`.
pub fn theta_eval<F: Real>(x: F, t: F, order: u32) -> Result<ThetaEval<F>> {
    check_t(t)?;
    if t >= F::lit(T_SWITCH) {
        theta_fourier(x, t, order)
    } else {
        theta_gaussian(x, t, order)
    }
}

/// `θ(x,t)`.
pub fn theta<F: Real>(x: F, t: F) -> Result<F> {
    theta_eval(x, t, 0).map(|e| e.value)
}

/// `∂θ/∂x`.
pub fn theta_dx<F: Real>(x: F, t: F) -> Result<F> {
    theta_eval(x, t, 1).map(|e| e.value)
}

/// `∂ᵏθ/∂tᵏ`, using `∂_t = ½∂_x²`.
pub fn theta_dt_k<F: Real>(x: F, t: F, k: u32) -> Result<F> {
    let v = theta_eval(x, t, 2 * k)?.value;
    Ok(v * F::half().powi(k as i32))
}

/// `∂θ/∂t`.
pub fn theta_dt<F: Real>(x: F, t: F) -> Result<F> {
    theta_dt_k(x, t, 1)
}
