//! The limiting Lévy process: Lévy measure `Λ`, the image of `x⁻²dx` under `x ↦ c₀⁻¹ log(1+x)`,
//! cumulant `K_κ(λ)` and a sampler.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Error, Result};
use crate::numerics::{integrate, QuadOptions};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevySpec<F> {
    pub c0: F,
    pub kappa: F,
    /// The law-dependent constant `c` in the linear term; unknown, 0 by default.
    pub drift_const: F,
}

impl<F: Real> LevySpec<F> {
    pub fn new(c0: F, kappa: F) -> Result<Self> {
        if !(c0 > F::zero() && kappa > F::zero()) {
            return domain(format!("Lévy spec needs c0, kappa > 0, got {c0}, {kappa}"));
        }
        Ok(Self { c0, kappa, drift_const: F::zero() })
    }

    /// `Λ((y, ∞)) = 1/(e^{c₀y} − 1)`.
    pub fn tail(&self, y: F) -> F {
        (self.c0 * y).exp_m1().recip()
    }

    /// Density of `Λ`: `c₀e^{c₀x}/(e^{c₀x} − 1)²`, written to avoid overflow.
    pub fn density(&self, x: F) -> F {
        let e = (-self.c0 * x).exp();
        let d = -(-self.c0 * x).exp_m1();
        self.c0 * e / (d * d)
    }

    fn cutoff(&self) -> F {
        F::lit(50.0) / self.c0
    }

    /// `c₀∫_δ^1 xΛ(dx)` in closed form, for `0 < δ ≤ 1`.
    pub fn compensator(&self, delta: F) -> F {
        let c = self.c0;
        let prim = |x: F| -x / (c * x).exp_m1() + (-(-c * x).exp_m1()).ln() / c;
        c * (prim(F::one()) - prim(delta))
    }

    /// `c₀∫_0^δ x²Λ(dx)`, the variance of the compensated jumps below `δ`.
    pub fn small_jump_variance(&self, delta: F) -> Result<F> {
        // x²Λ(dx) = c₀⁻¹ h(c₀x) dx with h(u) = (u/2)²/sinh²(u/2)
        let h = |u: F| {
            let v = u * F::half();
            if v.abs() < F::lit(1e-8) {
                F::one()
            } else {
                (v / v.sinh()).powi(2)
            }
        };
        let r = integrate(h, F::zero(), self.c0 * delta, QuadOptions::tol(1e-15, 1e-13))?;
        Ok(r.value / self.c0)
    }

    /// `K_κ(λ) = iλ(log κ + c) + c₀∫(e^{iλx} − 1 − iλx1_{x≤1}) Λ(dx)`.
    pub fn cumulant_fn(&self, lambda: F) -> Result<Complex<F>> {
        let opts = QuadOptions { abs_tol: 1e-13, rel_tol: 1e-11, max_intervals: 4000 };
        let rho = |x: F| self.density(x);
        // 1 − cos θ = 2 sin²(θ/2); θ − sin θ by its series for small θ
        let one_minus_cos = |t: F| F::two() * (t * F::half()).sin().powi(2);
        let t_minus_sin = |t: F| {
            if t.abs() < F::lit(1e-2) {
                let t2 = t * t;
                t * t2 / F::lit(6.0) * (F::one() - t2 / F::lit(20.0) * (F::one() - t2 / F::lit(42.0)))
            } else {
                t - t.sin()
            }
        };
        let re_lo = integrate(|x| -one_minus_cos(lambda * x) * rho(x), F::zero(), F::one(), opts)?;
        let im_lo = integrate(|x| -t_minus_sin(lambda * x) * rho(x), F::zero(), F::one(), opts)?;
        let hi = self.cutoff().max(F::one());
        let re_hi = integrate(|x| -one_minus_cos(lambda * x) * rho(x), F::one(), hi, opts)?;
        let im_hi = integrate(|x| (lambda * x).sin() * rho(x), F::one(), hi, opts)?;
        let re = self.c0 * (re_lo.value + re_hi.value);
        let im = self.c0 * (im_lo.value + im_hi.value) + lambda * (self.kappa.ln() + self.drift_const);
        Ok(Complex::new(re, im))
    }

    /// `n`-th cumulant of `L₁` by quadrature of `c₀∫xⁿΛ(dx)`.
    pub fn cumulant_quadrature(&self, n: u32) -> Result<F> {
        if n < 2 {
            return domain("cumulants are defined here for n ≥ 2");
        }
        let opts = QuadOptions { abs_tol: 1e-14, rel_tol: 1e-12, max_intervals: 4000 };
        let f = |x: F| {
            if x == F::zero() {
                if n == 2 {
                    self.c0.recip()
                } else {
                    F::zero()
                }
            } else {
                x.powi(n as i32) * self.density(x)
            }
        };
        let hi = self.cutoff() * F::lit(2.0);
        Ok(self.c0 * integrate(f, F::zero(), hi, opts)?.value)
    }
}

/// `ζ(n)` for integer `n ≥ 2`, by Euler–Maclaurin summation.
pub fn zeta<F: Real>(n: u32) -> F {
    let nn = 20usize;
    let s = F::from_count(n as usize);
    let mut sum = F::zero();
    for k in 1..nn {
        sum += F::from_count(k).powi(-(n as i32));
    }
    let nf = F::from_count(nn);
    let mut tail = nf.powi(1 - n as i32) / (s - F::one()) + F::half() * nf.powi(-(n as i32));
    // Bernoulli corrections B_{2j}/(2j)! · s(s+1)…(s+2j−2) N^{−s−2j+1}
    let bern = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0];
    let mut rising = s;
    let mut fact = F::two();
    for (j, &b) in bern.iter().enumerate() {
        let j2 = 2 * (j + 1);
        tail += F::lit(b) / fact * rising * nf.powi(-(n as i32) - j2 as i32 + 1);
        rising = rising * (s + F::from_count(j2 - 1)) * (s + F::from_count(j2));
        fact = fact * F::from_count(j2 + 1) * F::from_count(j2 + 2);
    }
    sum + tail
}

/// `c₀^{1−n} n! ζ(n)`.
pub fn cumulant_closed_form<F: Real>(c0: F, n: u32) -> F {
    let fact = (1..=n).fold(F::one(), |acc, k| acc * F::from_count(k as usize));
    c0.powi(1 - n as i32) * fact * zeta::<F>(n)
}

/// The `n`-th cumulant, by quadrature, after checking it against the closed form.
pub fn analytic_cumulant<F: Real>(spec: &LevySpec<F>, n: u32) -> Result<F> {
    let q = spec.cumulant_quadrature(n)?;
    let c = cumulant_closed_form(spec.c0, n);
    if ((q - c) / c).abs() > F::lit(1e-8) {
        return Err(Error::QuadratureFailure { estimate: q.to_f64().unwrap_or(f64::NAN), error: (q - c).to_f64().unwrap_or(f64::NAN) });
    }
    Ok(q)
}

/// Compound Poisson part above `δ`, Gaussian substitute below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevySampler {
    pub spec: LevySpec<f64>,
    pub delta: f64,
    pub jump_rate: f64,
    pub drift: f64,
    pub small_sd: f64,
    k_delta: f64,
}

impl LevySampler {
    pub fn new(spec: LevySpec<f64>, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return domain(format!("small-jump cutoff must be in (0, 1], got {delta}"));
        }
        let k_delta = (spec.c0 * delta).exp_m1();
        Ok(Self {
            spec,
            delta,
            jump_rate: spec.c0 / k_delta,
            drift: spec.kappa.ln() + spec.drift_const - spec.compensator(delta),
            small_sd: spec.small_jump_variance(delta)?.sqrt(),
            k_delta,
        })
    }

    /// A jump above `δ`, by inverting the normalised tail `(e^{c₀δ}−1)/(e^{c₀x}−1)`.
    pub fn jump<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = 1.0 - rng.random::<f64>();
        (self.k_delta / u).ln_1p() / self.spec.c0
    }

    /// CDF of [`Self::jump`].
    pub fn jump_cdf(&self, x: f64) -> f64 {
        if x <= self.delta {
            0.0
        } else {
            1.0 - self.k_delta / (self.spec.c0 * x).exp_m1()
        }
    }

    /// `L_t`.
    pub fn sample<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> f64 {
        let mut s = self.drift * t;
        let g: f64 = StandardNormal.sample(rng);
        s += self.small_sd * t.sqrt() * g;
        let mut clock = 0.0;
        loop {
            let e: f64 = rand_distr::Exp1.sample(rng);
            clock += e / self.jump_rate;
            if clock > t {
                break;
            }
            s += self.jump(rng);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// A path of `L` on `points + 1` equally spaced times in `[0, horizon]`.
pub fn simulate_levy<R: Rng + ?Sized>(spec: &LevySpec<f64>, horizon: f64, delta: f64, points: usize, rng: &mut R) -> Result<LevyPath> {
    if !(delta > 0.0) {
        return domain(format!("small-jump cutoff must be positive, got {delta}"));
    }
    if !(horizon >= 0.0) || points == 0 {
        return domain("horizon must be non-negative with at least one step");
    }
    let s = LevySampler::new(*spec, delta.min(1.0))?;
    let h = horizon / points as f64;
    let mut times = vec![0.0];
    let mut values = vec![0.0];
    let mut x = 0.0;
    for i in 1..=points {
        x += s.sample(h, rng);
        times.push(h * i as f64);
        values.push(x);
    }
    Ok(LevyPath { times, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate_to_inf;
    use crate::rng::stream_rng;
    use std::f64::consts::PI;

    fn spec() -> LevySpec<f64> {
        LevySpec::new(2f64.sqrt(), 1.0).unwrap()
    }

    #[test]
    fn zeta_values() {
        assert!((zeta::<f64>(2) - PI * PI / 6.0).abs() < 1e-14);
        assert!((zeta::<f64>(3) - 1.202_056_903_159_594_3).abs() < 1e-14);
        assert!((zeta::<f64>(4) - PI.powi(4) / 90.0).abs() < 1e-14);
    }

    #[test]
    fn tail_is_integral_of_density() {
        let s = spec();
        for y in [0.1, 0.5, 1.0, 2.0] {
            let q = integrate_to_inf(|x| s.density(x), y, QuadOptions::tol(1e-14, 1e-12)).unwrap().value;
            assert!((q - s.tail(y)).abs() < 1e-8 * s.tail(y).max(1.0));
        }
    }

    #[test]
    fn log_moment_integrals() {
        // ∫ logⁿ(1+u)/u² du = n! ζ(n), through the substitution x = log(1+u)
        for (n, expect) in [(2, PI * PI / 3.0), (3, 7.212_341_418_957_565)] {
            let f = |u: f64| if u == 0.0 { if n == 2 { 1.0 } else { 0.0 } } else { u.ln_1p().powi(n) / (u * u) };
            let q = integrate_to_inf(f, 0.0, QuadOptions::tol(1e-12, 1e-11)).unwrap().value;
            assert!((q - expect).abs() < 1e-7, "{n}: {q}");
        }
    }

    #[test]
    fn quadrature_matches_closed_form() {
        for c0 in [1.0, 2f64.sqrt(), 2.0] {
            let s = LevySpec::new(c0, 1.0).unwrap();
            for n in 2..=6 {
                let q = s.cumulant_quadrature(n).unwrap();
                let c = cumulant_closed_form(c0, n);
                assert!(((q - c) / c).abs() < 1e-8, "c0 {c0} n {n}: {q} vs {c}");
            }
        }
        assert!((analytic_cumulant(&spec(), 2).unwrap() - PI * PI / (3.0 * 2f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn cumulant_fn_properties() {
        let s = spec();
        assert_eq!(s.cumulant_fn(0.0).unwrap(), Complex::new(0.0, 0.0));
        for l in [0.3, 1.7, 4.2] {
            let p = s.cumulant_fn(l).unwrap();
            let m = s.cumulant_fn(-l).unwrap();
            assert!((p - m.conj()).norm() < 1e-12);
            assert!(p.re <= 0.0);
        }
        // −K″(0) is the second cumulant
        let h = 1e-3;
        let k2 = -(s.cumulant_fn(h).unwrap() + s.cumulant_fn(-h).unwrap()).re / (h * h);
        assert!((k2 - PI * PI / (3.0 * s.c0)).abs() < 1e-4);
    }

    #[test]
    fn compensator_and_small_variance_by_quadrature() {
        let s = spec();
        for d in [1e-4, 0.1, 0.7] {
            let q = s.c0 * integrate(|x| x * s.density(x), d, 1.0, QuadOptions::tol(1e-13, 1e-12)).unwrap().value;
            assert!((q - s.compensator(d)).abs() < 1e-9 * q.abs().max(1.0));
            let v = s.c0 * integrate(|x| if x == 0.0 { 1.0 / s.c0 } else { x * x * s.density(x) }, 0.0, d, QuadOptions::tol(1e-15, 1e-12)).unwrap().value;
            assert!((v - s.small_jump_variance(d).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn jumps_follow_the_tail() {
        let s = LevySampler::new(spec(), 0.05).unwrap();
        let mut rng = stream_rng(4, 0);
        let xs: Vec<f64> = (0..20_000).map(|_| s.jump(&mut rng)).collect();
        let r = crate::stats::ks_test(&xs, |x| s.jump_cdf(x)).unwrap();
        assert!(r.p_value > 0.01, "{r:?}");
        assert!((s.jump_rate - s.spec.c0 * s.spec.tail(0.05)).abs() < 1e-12);
    }

    #[test]
    fn short_horizon_is_mostly_drift() {
        let s = LevySampler::new(spec(), 1e-3).unwrap();
        let mut rng = stream_rng(5, 0);
        let t = 1e-6;
        let l = s.sample(t, &mut rng);
        assert!((l - s.drift * t).abs() < 6.0 * s.small_sd * t.sqrt() + 1e-12);
        assert!(simulate_levy(&spec(), 1.0, 0.0, 10, &mut rng).is_err());
        let p = simulate_levy(&spec(), 2.0, 0.01, 4, &mut rng).unwrap();
        assert_eq!(p.times, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(p.values[0], 0.0);
    }
}
