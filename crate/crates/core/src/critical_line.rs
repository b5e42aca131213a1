//! BBM with drift `−c₀` absorbed at a fixed level, and the traveling wave of the FKPP equation.

use rand::Rng;
use rand_distr::{Distribution, Exp1, InverseGaussian, StandardNormal};

use crate::engine::OffspringSampler;
use crate::error::{Error, Result};
use crate::params::{derive_constants, ReproductionLaw};
use crate::scalar::Real;
use crate::stats::{bootstrap, Interval, BOOTSTRAP_RESAMPLES};

/// Default cap on branch and absorption events in one run.
pub const DEFAULT_EVENT_CAP: u64 = 100_000_000;
/// Minimum sample size for the tail statistics.
pub const MIN_TAIL_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsorptionRun {
    pub y: f64,
    pub z_y: u64,
    /// `c₀ y e^{−c₀y} Z_y`.
    pub w_y: f64,
    /// Time of the last absorption or death.
    pub extinction_time: f64,
    /// The event cap was hit; the sample should be discarded.
    pub discarded: bool,
}

/// `W_y` for an absorbed count.
pub fn w_from_z(c0: f64, y: f64, z: u64) -> f64 {
    c0 * y * (-c0 * y).exp() * z as f64
}

/// One run from a single particle at 0, drift `−c₀`, absorbed at `−y`. Exact: each lifetime is
/// an exponential clock raced against the inverse-Gaussian first passage to the barrier.
pub fn simulate_absorbed<R: Rng + ?Sized>(y: f64, law: &ReproductionLaw<f64>, rng: &mut R) -> Result<AbsorptionRun> {
    simulate_absorbed_capped(y, law, DEFAULT_EVENT_CAP, rng)
}

pub fn simulate_absorbed_capped<R: Rng + ?Sized>(y: f64, law: &ReproductionLaw<f64>, cap: u64, rng: &mut R) -> Result<AbsorptionRun> {
    if !(y > 0.0) {
        return Err(Error::Domain(format!("absorption depth must be positive, got {y}")));
    }
    // laws with m ≤ 0 are allowed here; the drift is then 0
    let c0 = (2.0 * law.mean_offset()).max(0.0).sqrt();
    let sampler = OffspringSampler::new(law);
    // stack of (distance above the barrier, time)
    let mut stack = vec![(y, 0.0f64)];
    let (mut z, mut events, mut last) = (0u64, 0u64, 0.0f64);
    while let Some((d, t)) = stack.pop() {
        events += 1;
        if events > cap {
            return Ok(AbsorptionRun { y, z_y: z, w_y: w_from_z(c0, y, z), extinction_time: last, discarded: true });
        }
        let life: f64 = Exp1.sample(rng);
        let hit = if c0 > 0.0 {
            InverseGaussian::new(d / c0, d * d).map_err(|e| Error::Domain(e.to_string()))?.sample(rng)
        } else {
            let g: f64 = StandardNormal.sample(rng);
            d * d / (g * g)
        };
        if hit <= life {
            z += 1;
            last = last.max(t + hit);
            continue;
        }
        // position at the branching time, conditioned on not having hit the barrier
        let end = loop {
            let g: f64 = StandardNormal.sample(rng);
            let x = d - c0 * life + life.sqrt() * g;
            if x > 0.0 && rng.random::<f64>() >= (-2.0 * d * x / life).exp() {
                break x;
            }
        };
        let k = sampler.sample(rng);
        if k == 0 {
            last = last.max(t + life);
        }
        for _ in 0..k {
            stack.push((end, t + life));
        }
    }
    Ok(AbsorptionRun { y, z_y: z, w_y: w_from_z(c0, y, z), extinction_time: last, discarded: false })
}

fn check_samples(samples: &[f64]) -> Result<()> {
    if samples.len() < MIN_TAIL_SAMPLES {
        return Err(Error::InsufficientSamples { needed: MIN_TAIL_SAMPLES, got: samples.len() });
    }
    Ok(())
}

/// `x·P̂(W > x)` with a bootstrap interval.
pub fn tail_statistic(samples: &[f64], x: f64, seed: u64) -> Result<Interval> {
    check_samples(samples)?;
    let stat = |s: &[f64]| x * s.iter().filter(|&&w| w > x).count() as f64 / s.len() as f64;
    let mut ci = bootstrap(samples, stat, BOOTSTRAP_RESAMPLES, 0.95, seed);
    ci.estimate = stat(samples);
    Ok(ci)
}

/// `Ê[W 1(W ≤ x)] − log x`.
pub fn truncated_mean_statistic(samples: &[f64], x: f64) -> Result<f64> {
    check_samples(samples)?;
    let s: f64 = samples.iter().filter(|&&w| w <= x).sum();
    Ok(s / samples.len() as f64 - x.ln())
}

/// Solution of `½ψ″ − c₀ψ′ = ψ − f(ψ)` on a uniform grid, with `ψ(0) = (1 + q)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelingWave<F> {
    pub grid: Vec<F>,
    pub psi: Vec<F>,
    pub dpsi: Vec<F>,
    pub c0: F,
    pub q_ext: F,
    law: ReproductionLaw<F>,
}

impl<F: Real> TravelingWave<F> {
    /// `ψ(x)` by cubic Hermite interpolation; 1 left of the grid and `q` right of it.
    pub fn eval(&self, x: F) -> F {
        let n = self.grid.len();
        if x <= self.grid[0] {
            return F::one();
        }
        if x >= self.grid[n - 1] {
            return self.q_ext;
        }
        let h = self.grid[1] - self.grid[0];
        let i = (((x - self.grid[0]) / h).floor().to_usize().unwrap_or(0)).min(n - 2);
        let s = (x - self.grid[i]) / h;
        let (p0, p1, m0, m1) = (self.psi[i], self.psi[i + 1], self.dpsi[i] * h, self.dpsi[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let two = F::two();
        let three = F::lit(3.0);
        (two * s3 - three * s2 + F::one()) * p0 + (s3 - two * s2 + s) * m0 + (-two * s3 + three * s2) * p1 + (s3 - s2) * m1
    }

    /// Largest ODE residual on interior grid points, with `ψ″` from a five-point stencil on `ψ′`.
    pub fn max_residual(&self) -> F {
        let h = self.grid[1] - self.grid[0];
        let twelve = F::lit(12.0);
        let eight = F::lit(8.0);
        let mut worst = F::zero();
        for i in 2..self.grid.len() - 2 {
            let d2 = (-self.dpsi[i + 2] + eight * self.dpsi[i + 1] - eight * self.dpsi[i - 1] + self.dpsi[i - 2]) / (twelve * h);
            let r = F::half() * d2 - self.c0 * self.dpsi[i] - self.psi[i] + self.law.pgf(self.psi[i]);
            worst = worst.max(r.abs());
        }
        worst
    }
}

fn wave_rhs<F: Real>(law: &ReproductionLaw<F>, c0: F, psi: F, dpsi: F) -> (F, F) {
    (dpsi, F::two() * (c0 * dpsi + psi - law.pgf(psi)))
}

/// Integrates backwards from `x_hi`, starting on the decaying mode at `q`, with initial offset
/// `eps`; returns grid values in increasing `x`.
fn integrate_wave<F: Real>(law: &ReproductionLaw<F>, c0: F, q: F, rate: F, eps: F, x_lo: F, x_hi: F, steps: usize) -> (Vec<F>, Vec<F>, Vec<F>) {
    let h = (x_hi - x_lo) / F::from_count(steps);
    let mut psi = vec![F::zero(); steps + 1];
    let mut dpsi = vec![F::zero(); steps + 1];
    let (mut p, mut d) = (q + eps, rate * eps);
    psi[steps] = p;
    dpsi[steps] = d;
    let nh = -h;
    for i in (0..steps).rev() {
        let (k1p, k1d) = wave_rhs(law, c0, p, d);
        let (k2p, k2d) = wave_rhs(law, c0, p + F::half() * nh * k1p, d + F::half() * nh * k1d);
        let (k3p, k3d) = wave_rhs(law, c0, p + F::half() * nh * k2p, d + F::half() * nh * k2d);
        let (k4p, k4d) = wave_rhs(law, c0, p + nh * k3p, d + nh * k3d);
        let six = F::lit(6.0);
        p += nh * (k1p + F::two() * (k2p + k3p) + k4p) / six;
        d += nh * (k1d + F::two() * (k2d + k3d) + k4d) / six;
        psi[i] = p;
        dpsi[i] = d;
    }
    let grid = (0..=steps).map(|i| x_lo + h * F::from_count(i)).collect();
    (grid, psi, dpsi)
}

/// Shoots from the tail at `x_hi` towards `x_lo`, adjusting the tail amplitude until
/// `|ψ(0) − (1+q)/2| ≤ bc_tolerance`. `0` must be a grid point, so `x_lo/(x_hi − x_lo)·steps`
/// should be an integer; the grid step is `0.002`.
pub fn solve_traveling_wave<F: Real>(law: &ReproductionLaw<F>, x_lo: F, x_hi: F, bc_tolerance: F) -> Result<TravelingWave<F>> {
    if !(x_lo < F::zero() && x_hi > F::zero()) {
        return Err(Error::Domain(format!("wave domain [{x_lo}, {x_hi}] must contain 0")));
    }
    let c0 = derive_constants(law)?.c0;
    let q = law.extinction_probability();
    let fq = law.pgf_prime(q);
    let rate = c0 - (c0 * c0 + F::two() * (F::one() - fq)).sqrt();
    let steps_per_unit = F::lit(500.0);
    let steps = ((x_hi - x_lo) * steps_per_unit).round().to_usize().unwrap_or(0);
    let zero_index = (-x_lo * steps_per_unit).round().to_usize().unwrap_or(0);
    let x_hi = x_lo + F::from_count(steps) / steps_per_unit;
    let target = (F::one() + q) * F::half();
    // tail amplitude on a log scale; ψ(0) increases with it
    let mut log_eps = rate * x_hi;
    let mut best = None;
    for _ in 0..60 {
        let (grid, psi, dpsi) = integrate_wave(law, c0, q, rate, log_eps.exp(), x_lo, x_hi, steps);
        let miss = psi[zero_index] - target;
        let slope = dpsi[zero_index];
        best = Some((grid, psi, dpsi, miss));
        if miss.abs() <= bc_tolerance {
            break;
        }
        // ψ(· + s) moves ψ(0) by ψ′(0)·s and its tail amplitude by e^{rate·s}
        let s = -miss / slope;
        if !s.is_finite() {
            break;
        }
        log_eps = log_eps + rate * s;
    }
    let (grid, psi, dpsi, miss) = best.expect("at least one pass");
    if !(miss.abs() <= bc_tolerance) || psi.iter().any(|p| !p.is_finite()) {
        return Err(Error::NoConvergence(format!("traveling wave shooting missed ψ(0) by {miss}")));
    }
    Ok(TravelingWave { grid, psi, dpsi, c0, q_ext: q, law: law.clone() })
}

/// Sup over `x_grid` of `|Ê[exp(−e^{c₀x} W)] − ψ(x + s)|`, minimised over the shift `s`.
/// Returns the deviation and the optimal shift.
pub fn laplace_crosscheck(samples: &[f64], wave: &TravelingWave<f64>, x_grid: &[f64]) -> Result<(f64, f64)> {
    check_samples(samples)?;
    let c0 = wave.c0;
    let emp: Vec<f64> = x_grid
        .iter()
        .map(|&x| {
            let s = x.mul_add(c0, 0.0).exp();
            samples.iter().map(|&w| (-s * w).exp()).sum::<f64>() / samples.len() as f64
        })
        .collect();
    let dev = |s: f64| x_grid.iter().zip(&emp).map(|(&x, &e)| (e - wave.eval(x + s)).abs()).fold(0.0, f64::max);
    // coarse scan, then golden-section refinement
    let (lo, hi, n) = (-10.0, 10.0, 401);
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..n {
        let s = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let d = dev(s);
        if d < best.0 {
            best = (d, s);
        }
    }
    let step = (hi - lo) / (n - 1) as f64;
    let (mut a, mut b) = (best.1 - step, best.1 + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if dev(c) < dev(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let s = 0.5 * (a + b);
    let d = dev(s);
    Ok(if d < best.0 { (d, s) } else { best })
}
