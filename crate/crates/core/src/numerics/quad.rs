//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_3,
    0.949_107_912_342_758_524_526_189_684_047_9,
    0.864_864_423_359_769_072_789_712_788_640_9,
    0.741_531_185_599_394_439_863_864_773_280_8,
    0.586_087_235_467_691_130_294_144_845_693_0,
    0.405_845_151_377_397_166_906_606_412_076_96,
    0.207_784_955_007_898_467_600_689_403_773_2,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_2,
    0.104_790_010_322_250_183_839_876_322_541_5,
    0.140_653_259_715_525_918_745_189_590_510_2,
    0.169_004_726_639_267_902_826_583_426_598_6,
    0.190_350_578_064_785_409_913_256_402_421_0,
    0.204_432_940_075_298_892_414_161_999_234_6,
    0.209_482_141_084_727_828_012_999_174_891_7,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_1,
    0.279_705_391_489_276_667_901_467_771_423_8,
    0.381_830_050_505_118_944_950_369_775_488_98,
    0.417_959_183_673_469_387_755_102_040_816_3,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-12, max_intervals: 4000 }
    }
}

impl QuadOptions {
    pub fn tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<F> {
    pub value: F,
    pub error: F,
    pub evaluations: usize,
}

struct Piece<F> {
    lo: F,
    hi: F,
    value: F,
    error: F,
}

impl<F: Real> PartialEq for Piece<F> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<F: Real> Eq for Piece<F> {}
impl<F: Real> PartialOrd for Piece<F> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<F: Real> Ord for Piece<F> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

fn gk15<F: Real, G: FnMut(F) -> F>(f: &mut G, lo: F, hi: F) -> (F, F) {
    let c = (lo + hi) * F::half();
    let h = (hi - lo) * F::half();
    let fc = f(c);
    let mut k = fc * F::lit(WGK[7]);
    let mut g = fc * F::lit(WG[3]);
    for i in 0..7 {
        let dx = h * F::lit(XGK[i]);
        let s = f(c - dx) + f(c + dx);
        k += s * F::lit(WGK[i]);
        if i % 2 == 1 {
            g += s * F::lit(WG[i / 2]);
        }
    }
    let value = k * h;
    let err = ((k - g) * h).abs();
    (value, err)
}

/// Integrates `f` over `[lo, hi]`, bisecting the piece with the largest error estimate until
/// the total error is below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: Real, G: FnMut(F) -> F>(mut f: G, lo: F, hi: F, opts: QuadOptions) -> Result<QuadResult<F>> {
    if lo == hi {
        return Ok(QuadResult { value: F::zero(), error: F::zero(), evaluations: 0 });
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Domain("integration limits must be finite".into()));
    }
    let (lo, hi, sign) = if lo < hi { (lo, hi, F::one()) } else { (hi, lo, -F::one()) };
    let (v, e) = gk15(&mut f, lo, hi);
    let mut evals = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Piece { lo, hi, value: v, error: e });
    let (mut total, mut total_err) = (v, e);
    let abs_tol = F::lit(opts.abs_tol);
    let rel_tol = F::lit(opts.rel_tol);
    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= opts.max_intervals {
            return Err(Error::QuadratureFailure {
                estimate: total.to_f64().unwrap_or(f64::NAN),
                error: total_err.to_f64().unwrap_or(f64::NAN),
            });
        }
        let p = heap.pop().expect("heap is never empty");
        let mid = (p.lo + p.hi) * F::half();
        if !(mid > p.lo && mid < p.hi) {
            // interval cannot be split further in this precision
            heap.push(p);
            break;
        }
        let (v1, e1) = gk15(&mut f, p.lo, mid);
        let (v2, e2) = gk15(&mut f, mid, p.hi);
        evals += 30;
        total += v1 + v2 - p.value;
        total_err += e1 + e2 - p.error;
        heap.push(Piece { lo: p.lo, hi: mid, value: v1, error: e1 });
        heap.push(Piece { lo: mid, hi: p.hi, value: v2, error: e2 });
    }
    // re-sum to shed the drift of the running updates
    let (mut value, mut error) = (F::zero(), F::zero());
    for p in heap.iter() {
        value += p.value;
        error += p.error;
    }
    if !value.is_finite() {
        return Err(Error::QuadratureFailure { estimate: f64::NAN, error: f64::NAN });
    }
    Ok(QuadResult { value: value * sign, error, evaluations: evals })
}

/// Integrates over `[lo, hi]` after the substitution `s = lo + u²`, which removes
/// `1/√(s−lo)` endpoint singularities.
pub fn integrate_sqrt<F: Real, G: FnMut(F) -> F>(mut f: G, lo: F, hi: F, opts: QuadOptions) -> Result<QuadResult<F>> {
    let ub = (hi - lo).sqrt();
    integrate(|u| F::two() * u * f(lo + u * u), F::zero(), ub, opts)
}

/// Integrates over `[lo, ∞)` via `s = lo + (1−u)/u`.
pub fn integrate_to_inf<F: Real, G: FnMut(F) -> F>(mut f: G, lo: F, opts: QuadOptions) -> Result<QuadResult<F>> {
    integrate(
        |u: F| {
            if u <= F::zero() {
                return F::zero();
            }
            let s = lo + (F::one() - u) / u;
            let v = f(s) / (u * u);
            if v.is_finite() {
                v
            } else {
                F::zero()
            }
        },
        F::zero(),
        F::one(),
        opts,
    )
}
