//! The integrals `I(x,S)` and `J(x,y,S)` of the killed kernels against `e^{π²s/2}`.

use crate::error::{domain, Result};
use crate::scalar::Real;

use super::kernel::{series_tail_e, IntervalKernel};
use super::quad::{integrate, integrate_sqrt, QuadOptions};
use super::theta::{theta_dx, MAX_TERMS, TRUNCATION, T_SWITCH};

/// A finite union of bounded intervals in `[0, ∞)`, kept sorted and disjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalSet<F> {
    pieces: Vec<(F, F)>,
}

impl<F: Real> IntervalSet<F> {
    /// Builds the union of `pieces`. Negative parts are clipped; unbounded pieces are rejected.
    pub fn new(pieces: impl IntoIterator<Item = (F, F)>) -> Result<Self> {
        let mut v: Vec<(F, F)> = Vec::new();
        for (lo, hi) in pieces {
            if !(lo.is_finite() && hi.is_finite()) {
                return domain("interval set must be bounded");
            }
            if hi < lo {
                return domain(format!("interval [{lo}, {hi}] is reversed"));
            }
            let lo = lo.max(F::zero());
            if hi > lo {
                v.push((lo, hi));
            }
        }
        v.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
        let mut merged: Vec<(F, F)> = Vec::with_capacity(v.len());
        for (lo, hi) in v {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        Ok(Self { pieces: merged })
    }

    pub fn interval(lo: F, hi: F) -> Result<Self> {
        Self::new([(lo, hi)])
    }

    pub fn pieces(&self) -> &[(F, F)] {
        &self.pieces
    }

    /// Lebesgue measure `λ(S)`.
    pub fn measure(&self) -> F {
        self.pieces.iter().fold(F::zero(), |acc, &(lo, hi)| acc + (hi - lo))
    }

    /// `inf S`, or `None` for the empty set.
    pub fn inf(&self) -> Option<F> {
        self.pieces.first().map(|p| p.0)
    }

    /// `S / c`.
    pub fn scaled_down(&self, c: F) -> Self {
        Self { pieces: self.pieces.iter().map(|&(lo, hi)| (lo / c, hi / c)).collect() }
    }
}

fn opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-10, rel_tol: 1e-12, max_intervals: 4000 }
}

fn check_unit<F: Real>(x: F) -> Result<()> {
    if !(x >= F::zero() && x <= F::one()) {
        return domain(format!("{x} outside [0, 1]"));
    }
    Ok(())
}

/// `e^{π²s/2} r_s¹(x)`, evaluated without overflow for large `s`.
pub fn exit_weight<F: Real>(x: F, s: F) -> F {
    let pi = F::PI();
    if x <= F::zero() || x >= F::one() {
        return F::zero();
    }
    if s >= F::lit(T_SWITCH) {
        let mut sum = F::zero();
        for n in 1..=MAX_TERMS {
            let nf = F::from_count(n);
            let env = nf * (-F::pi2() * (nf * nf - F::one()) * s * F::half()).exp();
            let sign = if n % 2 == 1 { F::one() } else { -F::one() };
            sum += sign * env * (pi * nf * x).sin();
            if n > 1 && env < F::lit(TRUNCATION) * (sum.abs() + F::one()) {
                break;
            }
        }
        return (pi * sum).max(F::zero());
    }
    let d = theta_dx(x - F::one(), s).unwrap_or(F::zero());
    ((F::pi2() * s * F::half()).exp() * d * F::half()).max(F::zero())
}

/// `e^{π²s/2} p_s¹(x,y)`, evaluated without overflow for large `s`.
pub fn transition_weight<F: Real>(x: F, y: F, s: F) -> F {
    let pi = F::PI();
    if s >= F::lit(T_SWITCH) {
        let mut sum = F::zero();
        for n in 1..=MAX_TERMS {
            let nf = F::from_count(n);
            let env = (-F::pi2() * (nf * nf - F::one()) * s * F::half()).exp();
            sum += env * (pi * nf * x).sin() * (pi * nf * y).sin();
            if n > 1 && env < F::lit(TRUNCATION) * (sum.abs() + F::one()) {
                break;
            }
        }
        return F::two() * sum;
    }
    let k = IntervalKernel::new(F::one()).expect("unit width");
    (F::pi2() * s * F::half()).exp() * k.p(x, y, s).unwrap_or(F::zero())
}

/// Integrates `w` over `S`, using `s = lo + u²` on the part below 1 where the kernels are
/// sharply peaked.
fn integrate_over<F: Real, W: Fn(F) -> F>(w: W, set: &IntervalSet<F>) -> Result<F> {
    let mut total = F::zero();
    for &(lo, hi) in set.pieces() {
        let one = F::one();
        if lo < one {
            total += integrate_sqrt(&w, lo, hi.min(one), opts())?.value;
        }
        if hi > one {
            total += integrate(&w, lo.max(one), hi, opts())?.value;
        }
    }
    Ok(total)
}

/// `I(x,S) = ∫_S e^{π²s/2} r_s¹(x) ds`.
pub fn integral_i<F: Real>(x: F, set: &IntervalSet<F>) -> Result<F> {
    check_unit(x)?;
    if x == F::zero() || x == F::one() {
        return Ok(F::zero());
    }
    integrate_over(|s| exit_weight(x, s), set)
}

/// `J(x,y,S) = ∫_S e^{π²s/2} p_s¹(x,y) ds`.
pub fn integral_j<F: Real>(x: F, y: F, set: &IntervalSet<F>) -> Result<F> {
    check_unit(x)?;
    check_unit(y)?;
    if x == F::zero() || y == F::zero() || x == F::one() || y == F::one() {
        return Ok(F::zero());
    }
    // order the arguments so the result is exactly symmetric
    let (x, y) = (x.min(y), x.max(y));
    integrate_over(|s| transition_weight(x, y, s), set)
}

/// `I^a(x,S) = I(x/a, S/a²)`.
pub fn integral_i_width<F: Real>(a: F, x: F, set: &IntervalSet<F>) -> Result<F> {
    integral_i(x / a, &set.scaled_down(a * a))
}

/// `J^a(x,y,S) = a·J(x/a, y/a, S/a²)`.
pub fn integral_j_width<F: Real>(a: F, x: F, y: F, set: &IntervalSet<F>) -> Result<F> {
    Ok(a * integral_j(x / a, y / a, &set.scaled_down(a * a))?)
}

fn tail_at<F: Real>(set: &IntervalSet<F>) -> F {
    match set.inf() {
        Some(s) if s > F::zero() => series_tail_e(s).unwrap_or(F::infinity()),
        _ => F::infinity(),
    }
}

/// `|I(x,S) − πλ(S) sin(πx)|` and the bound shape `1 ∧ E_{inf S}(1∧λ(S)) sin(πx)`.
pub fn lemma_i_terms<F: Real>(x: F, set: &IntervalSet<F>) -> Result<(F, F)> {
    let i = integral_i(x, set)?;
    let sin = (F::PI() * x).sin();
    let lam = set.measure();
    let dev = (i - F::PI() * lam * sin).abs();
    let e = tail_at(set);
    let shape = if e.is_infinite() { F::one() } else { F::one().min(e * F::one().min(lam) * sin) };
    Ok((dev, shape))
}

/// `|J(x,y,S) − 2λ(S) sin(πx) sin(πy)|` and the bound shape
/// `(x∧y)(1−x∨y) ∧ E_{inf S} sin(πx) sin(πy)`.
pub fn lemma_j_terms<F: Real>(x: F, y: F, set: &IntervalSet<F>) -> Result<(F, F)> {
    let j = integral_j(x, y, set)?;
    let ss = (F::PI() * x).sin() * (F::PI() * y).sin();
    let dev = (j - F::two() * set.measure() * ss).abs();
    let green = x.min(y) * (F::one() - x.max(y));
    let e = tail_at(set);
    let shape = if e.is_infinite() { green } else { green.min(e * ss) };
    Ok((dev, shape))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Term-wise integration of the sine series; valid when `inf S > 0`.
    fn i_series(x: f64, lo: f64, hi: f64) -> f64 {
        let mut s = PI * (hi - lo) * (PI * x).sin();
        for n in 2..400 {
            let c = PI * PI * ((n * n - 1) as f64) / 2.0;
            let int = ((-c * lo).exp() - (-c * hi).exp()) / c;
            let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
            s += PI * int * n as f64 * sign * (PI * n as f64 * x).sin();
        }
        s
    }

    #[test]
    fn interval_set_normalises() {
        let s = IntervalSet::new([(2.0, 3.0), (-1.0, 0.5), (0.25, 1.0), (2.5, 2.6)]).unwrap();
        assert_eq!(s.pieces(), &[(0.0, 1.0), (2.0, 3.0)]);
        assert_eq!(s.measure(), 2.0);
        assert_eq!(s.inf(), Some(0.0));
        assert!(IntervalSet::new([(0.0, f64::INFINITY)]).is_err());
    }

    #[test]
    fn zero_at_left_end() {
        let s = IntervalSet::interval(0.0, 2.0).unwrap();
        assert_eq!(integral_i(0.0, &s).unwrap(), 0.0);
        assert_eq!(integral_j(0.0, 0.4, &s).unwrap(), 0.0);
    }

    #[test]
    fn i_matches_series_oracle() {
        for &(x, lo, hi) in &[(0.5, 0.2, 1.0), (0.9, 0.05, 3.0), (0.3, 1.0, 1.5), (0.7, 2.0, 40.0)] {
            let s = IntervalSet::interval(lo, hi).unwrap();
            let got = integral_i(x, &s).unwrap();
            let want = i_series(x, lo, hi);
            assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0), "{x} [{lo},{hi}]: {got} vs {want}");
        }
    }

    #[test]
    fn i_matches_fine_grid() {
        let s = IntervalSet::interval(0.0, 1.0).unwrap();
        let got = integral_i(0.5, &s).unwrap();
        // composite Simpson on u with s = u², 20000 panels
        let n = 20_000;
        let h = 1.0 / n as f64;
        let f = |u: f64| if u == 0.0 { 0.0 } else { 2.0 * u * exit_weight(0.5, u * u) };
        let mut acc = f(0.0) + f(1.0);
        for k in 1..n {
            acc += f(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        let want = acc * h / 3.0;
        assert!((got - want).abs() / want < 1e-6);
    }

    #[test]
    fn j_symmetric_and_bounded() {
        let s = IntervalSet::interval(0.0, 1.0).unwrap();
        assert_eq!(integral_j(0.2, 0.7, &s).unwrap(), integral_j(0.7, 0.2, &s).unwrap());
        let j = integral_j(0.5, 0.5, &s).unwrap();
        assert!(j > 0.0 && j <= (PI * PI / 2.0).exp() * 0.25);
    }

    #[test]
    fn small_window_far_out() {
        let d = 1e-3;
        let s = IntervalSet::interval(1.0, 1.0 + d).unwrap();
        for &x in &[0.1, 0.5, 0.8] {
            let (dev, shape) = lemma_i_terms(x, &s).unwrap();
            assert!(dev <= PI * shape, "{x}: {dev} vs {shape}");
            assert!((integral_i(x, &s).unwrap() - PI * d * (PI * x).sin()).abs() < 1e-5);
        }
    }

    #[test]
    fn width_scaling() {
        let a = 3.0;
        let s = IntervalSet::new([(0.5, 4.0), (9.0, 12.0)]).unwrap();
        let direct = |x: f64| -> f64 {
            let k = IntervalKernel::new(a).unwrap();
            s.pieces()
                .iter()
                .map(|&(lo, hi)| {
                    integrate(
                        |t| (PI * PI * t / (2.0 * a * a)).exp() * k.r(x, t).unwrap(),
                        lo,
                        hi,
                        QuadOptions::tol(1e-12, 1e-12),
                    )
                    .unwrap()
                    .value
                })
                .sum()
        };
        let got = integral_i_width(a, 1.7, &s).unwrap();
        assert!((got - direct(1.7)).abs() < 1e-8);
    }
}
