//! Reproduction law, model parameters and the constants derived from them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::scalar::Real;

/// Offspring distribution `q(k)` with finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct ReproductionLaw<F> {
    probs: Vec<(u32, F)>,
}

impl<F: Real> ReproductionLaw<F> {
    /// Builds a law from `(k, q_k)` pairs. Probabilities must be non-negative and sum to one
    /// within `1e-12`; each `k` may appear at most once.
    pub fn new(mut probs: Vec<(u32, F)>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidLaw("empty law".into()));
        }
        probs.sort_by_key(|&(k, _)| k);
        let mut total = F::zero();
        for w in probs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidLaw(format!("offspring count {} listed twice", w[0].0)));
            }
        }
        for &(k, q) in &probs {
            if !(q >= F::zero()) || !q.is_finite() {
                return Err(Error::InvalidLaw(format!("q({k}) = {q} is not a probability")));
            }
            total += q;
        }
        let tol = F::lit(1e-12).max(F::epsilon() * F::lit(8.0));
        if (total - F::one()).abs() > tol {
            return Err(Error::InvalidLaw(format!("probabilities sum to {total}")));
        }
        probs.retain(|&(_, q)| q > F::zero());
        Ok(Self { probs })
    }

    /// Dyadic branching, `q(2) = 1`.
    pub fn binary() -> Self {
        Self::point_mass(2)
    }

    pub fn point_mass(k: u32) -> Self {
        Self { probs: vec![(k, F::one())] }
    }

    /// Support points with positive probability, sorted by offspring count.
    pub fn probs(&self) -> &[(u32, F)] {
        &self.probs
    }

    /// `m = Σ (k-1) q(k)`.
    pub fn mean_offset(&self) -> F {
        self.probs
            .iter()
            .fold(F::zero(), |acc, &(k, q)| acc + (F::from_count(k as usize) - F::one()) * q)
    }

    /// `m₂ = Σ k(k-1) q(k)`.
    pub fn factorial_moment2(&self) -> F {
        self.probs.iter().fold(F::zero(), |acc, &(k, q)| {
            let k = F::from_count(k as usize);
            acc + k * (k - F::one()) * q
        })
    }

    /// Generating function `f(s) = Σ s^k q(k)`.
    pub fn pgf(&self, s: F) -> F {
        self.probs.iter().fold(F::zero(), |acc, &(k, q)| acc + q * s.powi(k as i32))
    }

    pub fn pgf_prime(&self, s: F) -> F {
        self.probs.iter().fold(F::zero(), |acc, &(k, q)| {
            if k == 0 {
                acc
            } else {
                acc + q * F::from_count(k as usize) * s.powi(k as i32 - 1)
            }
        })
    }

    /// Smallest root of `f(s) = s` in `[0, 1]`.
    pub fn extinction_probability(&self) -> F {
        if self.probs[0].0 > 0 {
            return F::zero();
        }
        // f(s) - s is convex, positive at 0; bisect on [0, s*) where s* is the first sign change
        // or fall back to fixed-point iteration which converges monotonically from 0.
        let mut s = F::zero();
        for _ in 0..10_000 {
            let next = self.pgf(s);
            if (next - s).abs() <= F::epsilon() {
                return next;
            }
            s = next;
        }
        s
    }

    /// Conversion to the `f64` law used by the simulators.
    pub fn to_f64(&self) -> ReproductionLaw<f64> {
        ReproductionLaw {
            probs: self.probs.iter().map(|&(k, q)| (k, q.to_f64().unwrap_or(f64::NAN))).collect(),
        }
    }
}

impl<F: Real> fmt::Display for ReproductionLaw<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.probs.iter().map(|(k, q)| format!("{k}:{q}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl std::str::FromStr for ReproductionLaw<f64> {
    type Err = Error;

    /// Parses `"k:prob, k:prob, ..."`.
    fn from_str(s: &str) -> Result<Self> {
        let mut probs = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, q) = part
                .split_once(':')
                .ok_or_else(|| Error::InvalidLaw(format!("expected k:prob, got {part:?}")))?;
            let k: u32 = k.trim().parse().map_err(|_| Error::InvalidLaw(format!("bad offspring count {k:?}")))?;
            let q: f64 = q.trim().parse().map_err(|_| Error::InvalidLaw(format!("bad probability {q:?}")))?;
            probs.push((k, q));
        }
        ReproductionLaw::new(probs)
    }
}

/// `(m, m₂, c₀)` derived from a reproduction law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants<F> {
    pub m: F,
    pub m2: F,
    pub c0: F,
}

/// Derives `m`, `m₂` and the critical speed `c₀ = √(2m)`.
pub fn derive_constants<F: Real>(law: &ReproductionLaw<F>) -> Result<DerivedConstants<F>> {
    let m = law.mean_offset();
    if !(m > F::zero()) {
        return Err(Error::NonSupercritical { m: m.to_f64().unwrap_or(f64::NAN) });
    }
    let m2 = law.factorial_moment2();
    Ok(DerivedConstants { m, m2, c0: (F::two() * m).sqrt() })
}

/// Drift `μ = √(2m − π²/a²)` of the particles in an interval of width `a`.
pub fn drift_mu<F: Real>(a: F, m: F) -> Result<F> {
    let disc = F::two() * m - F::pi2() / (a * a);
    // tolerate the rounding at the boundary a = π/c₀
    let slack = F::epsilon() * F::lit(16.0) * F::two() * m;
    if !(a > F::zero()) || disc < -slack {
        return domain(format!("width a = {a} is below π/c₀ for m = {m}"));
    }
    Ok(disc.max(F::zero()).sqrt())
}

/// Interval width from the population scale: `a = c₀⁻¹(log N + 3 log log N − A)`.
pub fn a_from_n<F: Real>(n: F, big_a: F, c0: F) -> Result<F> {
    if !(n > F::E()) {
        return domain(format!("N = {n} must exceed e"));
    }
    let ln = n.ln();
    let a = (ln + F::lit(3.0) * ln.ln() - big_a) / c0;
    if !(a > F::zero()) {
        return domain(format!("a = {a} is not positive"));
    }
    Ok(a)
}

/// Inverse of [`a_from_n`], solved for `ℓ = log N` by safeguarded Newton iteration.
pub fn n_from_a<F: Real>(a: F, big_a: F, c0: F) -> Result<F> {
    let target = c0 * a + big_a;
    // g(ℓ) = ℓ + 3 log ℓ − target is increasing on ℓ > 1 (N > e), with g(1) = 1 − target.
    if !(target > F::one()) {
        return domain(format!("c₀a + A = {target} leaves no N > e"));
    }
    let g = |l: F| l + F::lit(3.0) * l.ln() - target;
    let (mut lo, mut hi) = (F::one(), target.max(F::two()));
    while g(hi) < F::zero() {
        hi = hi * F::two();
    }
    let mut l = (lo + hi) * F::half();
    for _ in 0..200 {
        let v = g(l);
        if v > F::zero() {
            hi = l;
        } else {
            lo = l;
        }
        let step = v / (F::one() + F::lit(3.0) / l);
        let mut next = l - step;
        if !(next > lo && next < hi) {
            next = (lo + hi) * F::half();
        }
        if (next - l).abs() <= F::epsilon() * next.abs() * F::lit(4.0) {
            return Ok(next.exp());
        }
        l = next;
    }
    Ok(l.exp())
}

/// An asymptotic assumption that does not hold for the chosen parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeWarning {
    /// `ε ≤ C A^{-17}` fails.
    EpsUpper,
    /// `ε ≥ C e^{-A/6}` fails.
    EpsLower,
    /// `η ≤ e^{-2A}` fails.
    Eta,
    /// `μ ≥ c₀/2` fails.
    MuBelowHalfC0,
}

impl fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegimeWarning::EpsUpper => "eps_upper violated",
            RegimeWarning::EpsLower => "eps_lower violated",
            RegimeWarning::Eta => "eta violated",
            RegimeWarning::MuBelowHalfC0 => "mu below c0/2",
        })
    }
}

/// Constant in front of the two ε constraints; the asymptotic statements leave it unspecified.
pub const REGIME_CONSTANT: f64 = 1.0;

/// Constraint checks on `(A, ε, η)` evaluated in log space so tiny values do not underflow.
pub fn regime_warnings(big_a: f64, epsilon: f64, eta: f64) -> Vec<RegimeWarning> {
    let mut out = Vec::new();
    let ln_c = REGIME_CONSTANT.ln();
    let ln_eps = epsilon.ln();
    if ln_eps > ln_c - 17.0 * big_a.ln() {
        out.push(RegimeWarning::EpsUpper);
    }
    if ln_eps < ln_c - big_a / 6.0 {
        out.push(RegimeWarning::EpsLower);
    }
    if eta.ln() > -2.0 * big_a {
        out.push(RegimeWarning::Eta);
    }
    out
}

/// How the interval width is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Width<F> {
    /// Width `a` given directly.
    A(F),
    /// Population scale `N`; `a` follows from `N` and `A`.
    N(F),
}

/// The full parameter bundle of the moving-barrier model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<F> {
    pub law: ReproductionLaw<F>,
    pub a: F,
    /// Intensity exponent `A`.
    pub big_a: F,
    pub epsilon: F,
    pub eta: F,
    /// Depth of the critical line below `a`.
    pub y: F,
    /// Cap on the duration of a breakout excursion.
    pub zeta: F,
    pub kappa: F,
    pub m: F,
    pub m2: F,
    pub c0: F,
    pub mu: F,
    /// Population scale `N` implied by `a` and `A`.
    pub n: F,
}

pub const DEFAULT_Y: f64 = 8.0;
pub const DEFAULT_ZETA: f64 = 25.0;

impl<F: Real> ModelParams<F> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        law: ReproductionLaw<F>,
        width: Width<F>,
        big_a: F,
        epsilon: F,
        eta: F,
        y: F,
        zeta: F,
        kappa: F,
    ) -> Result<Self> {
        let DerivedConstants { m, m2, c0 } = derive_constants(&law)?;
        for (name, v) in [("epsilon", epsilon), ("eta", eta), ("y", y), ("zeta", zeta), ("kappa", kappa)] {
            if !(v > F::zero()) || !v.is_finite() {
                return domain(format!("{name} = {v} must be positive"));
            }
        }
        let (a, n) = match width {
            Width::A(a) => {
                let n = n_from_a(a, big_a, c0).unwrap_or_else(|_| F::nan());
                (a, n)
            }
            Width::N(n) => (a_from_n(n, big_a, c0)?, n),
        };
        let mu = drift_mu(a, m)?;
        Ok(Self { law, a, big_a, epsilon, eta, y, zeta, kappa, m, m2, c0, mu, n })
    }

    /// Breakout threshold `ε e^A`.
    pub fn breakout_threshold(&self) -> F {
        self.epsilon * self.big_a.exp()
    }

    /// Target value `κ e^A` of the `Z` functional.
    pub fn target_z(&self) -> F {
        self.kappa * self.big_a.exp()
    }

    /// Weight `w(x) = a e^{μ(x−a)} sin(πx/a)`.
    pub fn weight(&self, x: F) -> F {
        self.a * (self.mu * (x - self.a)).exp() * (F::PI() * x / self.a).sin()
    }

    pub fn with_width(&self, width: Width<F>) -> Result<Self> {
        Self::new(
            self.law.clone(),
            width,
            self.big_a,
            self.epsilon,
            self.eta,
            self.y,
            self.zeta,
            self.kappa,
        )
    }
}

impl ModelParams<f64> {
    /// Desk-scale preset: `a = 8, A = 3, ε = 0.2, κ = 1, η = 0.05, y = 6, ζ = 20`, binary branching.
    pub fn desk_preset() -> Self {
        Self::new(ReproductionLaw::binary(), Width::A(8.0), 3.0, 0.2, 0.05, 6.0, 20.0, 1.0)
            .expect("preset is valid")
    }
}

/// Regime check for a parameter bundle; warns, never rejects.
pub fn validate_regime<F: Real>(p: &ModelParams<F>) -> Vec<RegimeWarning> {
    let f = |v: F| v.to_f64().unwrap_or(f64::NAN);
    let mut out = regime_warnings(f(p.big_a), f(p.epsilon), f(p.eta));
    if p.mu < p.c0 * F::half() {
        out.push(RegimeWarning::MuBelowHalfC0);
    }
    out
}

/// Model section of a key/value config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Offspring law as `"k:prob, k:prob"`.
    pub reproduction_law: Option<String>,
    pub a: Option<f64>,
    #[serde(rename = "N")]
    pub n: Option<f64>,
    #[serde(rename = "A")]
    pub big_a: Option<f64>,
    pub epsilon: Option<f64>,
    pub eta: Option<f64>,
    pub y: Option<f64>,
    pub zeta: Option<f64>,
    pub kappa: Option<f64>,
    pub seed: Option<u64>,
}

impl ModelConfig {
    /// Builds the parameters. Missing keys fall back to the desk preset, except that exactly one
    /// of `a` and `N` may be given.
    pub fn to_params(&self) -> Result<ModelParams<f64>> {
        let preset = ModelParams::desk_preset();
        let width = match (self.a, self.n) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("ambiguous width: both `a` and `N` are set".into()));
            }
            (Some(a), None) => Width::A(a),
            (None, Some(n)) => Width::N(n),
            (None, None) => Width::A(preset.a),
        };
        let law = match &self.reproduction_law {
            Some(s) => s.parse()?,
            None => ReproductionLaw::binary(),
        };
        ModelParams::new(
            law,
            width,
            self.big_a.unwrap_or(preset.big_a),
            self.epsilon.unwrap_or(preset.epsilon),
            self.eta.unwrap_or(preset.eta),
            self.y.unwrap_or(preset.y),
            self.zeta.unwrap_or(preset.zeta),
            self.kappa.unwrap_or(preset.kappa),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn binary_law_constants() {
        let c = derive_constants(&ReproductionLaw::<f64>::binary()).unwrap();
        assert_eq!(c.m, 1.0);
        assert_eq!(c.m2, 2.0);
        assert_relative_eq!(c.c0, 1.414_213_562_373_095, max_relative = 1e-15);
    }

    #[test]
    fn critical_law_is_rejected() {
        let law = ReproductionLaw::new(vec![(0, 0.5), (2, 0.5)]).unwrap();
        assert!(matches!(derive_constants(&law), Err(Error::NonSupercritical { .. })));
    }

    #[test]
    fn ternary_law_constants() {
        let c = derive_constants(&ReproductionLaw::<f64>::point_mass(3)).unwrap();
        assert_eq!((c.m, c.m2, c.c0), (2.0, 6.0, 2.0));
    }

    #[test]
    fn law_validation() {
        assert!(ReproductionLaw::new(vec![(2, 0.6f64)]).is_err());
        assert!(ReproductionLaw::new(vec![(2, 1.2f64), (0, -0.2)]).is_err());
        assert!(ReproductionLaw::new(vec![(2, 0.5f64), (2, 0.5)]).is_err());
        assert!(ReproductionLaw::<f64>::new(vec![]).is_err());
        let l: ReproductionLaw<f64> = "0:0.25, 2:0.75".parse().unwrap();
        assert_eq!(l.probs(), &[(0, 0.25), (2, 0.75)]);
    }

    #[test]
    fn extinction_probability_roots() {
        assert_eq!(ReproductionLaw::<f64>::binary().extinction_probability(), 0.0);
        // f(s) = 1/4 + 3/4 s² = s  =>  s = 1/3
        let l = ReproductionLaw::new(vec![(0, 0.25f64), (2, 0.75)]).unwrap();
        assert_relative_eq!(l.extinction_probability(), 1.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn drift_mu_values() {
        let c0 = 2f64.sqrt();
        assert_eq!(drift_mu(std::f64::consts::PI / c0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(drift_mu(10.0, 1.0).unwrap(), 1.378_877_788_634_332, max_relative = 1e-12);
        assert_relative_eq!(drift_mu(1e8, 1.0).unwrap(), c0, max_relative = 1e-12);
        assert!(drift_mu(1.0, 1.0).is_err());
        let grid: Vec<f64> = (0..200).map(|i| std::f64::consts::PI / c0 + 0.1 * i as f64).collect();
        let mus: Vec<f64> = grid.iter().map(|&a| drift_mu(a, 1.0).unwrap()).collect();
        assert!(mus.windows(2).all(|w| w[1] > w[0]));
        assert!(mus.iter().all(|&m| (0.0..=c0).contains(&m)));
    }

    #[test]
    fn width_from_population_scale() {
        let a = a_from_n(10f64.exp(), 0.0, 1.0).unwrap();
        assert_relative_eq!(a, 10.0 + 3.0 * 10f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(a, 16.907_755_278_982_137, max_relative = 1e-14);
        let c0 = 2f64.sqrt();
        let a1 = a_from_n(1e4, 2.0, c0).unwrap();
        let a2 = a_from_n(1e4, 2.5, c0).unwrap();
        assert_relative_eq!(a1 - a2, 0.5 / c0, max_relative = 1e-12);
        assert!(a_from_n(2.0, 0.0, 1.0).is_err());
        assert!(a_from_n(10.0, 50.0, 1.0).is_err());
        for &n in &[50.0, 1e4, 1e9, 1e30] {
            let a = a_from_n(n, 1.5, c0).unwrap();
            let back = n_from_a(a, 1.5, c0).unwrap();
            assert_relative_eq!(back, n, max_relative = 1e-9);
        }
    }

    #[test]
    fn regime_checks() {
        let w = regime_warnings(5.0, 0.05, 1e-9);
        assert!(w.contains(&RegimeWarning::EpsUpper));
        assert!(regime_warnings(1.0, 0.5, 1.0).contains(&RegimeWarning::Eta));
        // ε = e^{-114} sits between e^{-A/6} and A^{-17} for A = 700, η = e^{-1500} in log space
        // is not representable, so check the ε pair alone.
        let w = regime_warnings(700.0, (-114.0f64).exp(), 1e-300);
        assert!(!w.contains(&RegimeWarning::EpsUpper) && !w.contains(&RegimeWarning::EpsLower));
        let w = regime_warnings(30.0, 1e-23, 1e-27);
        assert!(!w.contains(&RegimeWarning::Eta));
        assert!(w.contains(&RegimeWarning::EpsUpper) && w.contains(&RegimeWarning::EpsLower));
    }

    #[test]
    fn config_rejects_ambiguous_width() {
        let cfg = ModelConfig { a: Some(8.0), n: Some(1e4), ..Default::default() };
        assert!(matches!(cfg.to_params(), Err(Error::Config(_))));
        let cfg = ModelConfig { n: Some(1e4), ..Default::default() };
        let p = cfg.to_params().unwrap();
        assert_relative_eq!(p.n, 1e4, max_relative = 1e-9);
    }

    #[test]
    fn preset_warns_at_desk_scale() {
        let p = ModelParams::desk_preset();
        let w = validate_regime(&p);
        assert!(w.contains(&RegimeWarning::EpsUpper));
        assert!(!w.contains(&RegimeWarning::MuBelowHalfC0));
    }
}
