//! N-BBM: branching Brownian motion where the leftmost particles are removed whenever more
//! than `N` are alive.
//!
//! Branching times and Brownian displacements are exact; the population is trimmed back to
//! `N` at the end of each step of length `dt`.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::engine::OffspringSampler;
use crate::error::{domain, Error, Result};
use crate::params::ReproductionLaw;
use crate::stats::{k_statistics, linear_fit, LinearFit, MIN_KSTAT_SAMPLES};

pub const DEFAULT_DT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrontStatistic {
    #[default]
    Barycenter,
    Median,
    Rightmost,
}

impl std::str::FromStr for FrontStatistic {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "barycenter" => Ok(Self::Barycenter),
            "median" => Ok(Self::Median),
            "rightmost" => Ok(Self::Rightmost),
            _ => Err(Error::Config(format!("unknown front statistic {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NbbmConfig {
    pub n: usize,
    pub horizon: f64,
    pub dt: f64,
    /// Spacing of the recorded front.
    pub record_every: f64,
    pub statistic: FrontStatistic,
}

impl NbbmConfig {
    pub fn new(n: usize, horizon: f64) -> Self {
        Self { n, horizon, dt: DEFAULT_DT, record_every: 1.0, statistic: FrontStatistic::Barycenter }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontSeries {
    pub n: usize,
    pub times: Vec<f64>,
    pub front: Vec<f64>,
    pub counts: Vec<usize>,
}

fn front_of(pos: &mut [f64], stat: FrontStatistic) -> f64 {
    match stat {
        FrontStatistic::Barycenter => pos.iter().sum::<f64>() / pos.len() as f64,
        FrontStatistic::Rightmost => pos.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        FrontStatistic::Median => {
            let k = pos.len() / 2;
            *pos.select_nth_unstable_by(k, |a, b| a.total_cmp(b)).1
        }
    }
}

/// Simulates from `N` particles at 0 and records the front every `record_every` time units.
pub fn simulate_nbbm<R: Rng + ?Sized>(cfg: &NbbmConfig, law: &ReproductionLaw<f64>, rng: &mut R) -> Result<FrontSeries> {
    if cfg.n < 1 {
        return domain("N-BBM needs N ≥ 1");
    }
    if !(cfg.dt > 0.0 && cfg.record_every >= cfg.dt && cfg.horizon >= 0.0) {
        return domain(format!("bad N-BBM time grid: {cfg:?}"));
    }
    let sampler = OffspringSampler::new(law);
    let mut pos = vec![0.0f64; cfg.n];
    let mut ids: Vec<u64> = (0..cfg.n as u64).collect();
    let mut next: Vec<f64> = (0..cfg.n).map(|_| Exp1.sample(rng)).collect();
    let mut next_id = cfg.n as u64;
    let steps = (cfg.horizon / cfg.dt).round() as usize;
    let per_record = (cfg.record_every / cfg.dt).round().max(1.0) as usize;
    let mut out = FrontSeries { n: cfg.n, times: vec![0.0], front: vec![0.0], counts: vec![cfg.n] };
    // start of the unsimulated part of each particle's path within the current step
    let mut clock = vec![0.0f64; cfg.n];
    for step in 0..steps {
        let t0 = step as f64 * cfg.dt;
        let t1 = (step + 1) as f64 * cfg.dt;
        clock.clear();
        clock.resize(pos.len(), t0);
        // children are appended and simulated from their birth time when the loop reaches them
        let mut i = 0;
        while i < pos.len() {
            loop {
                let seg_end = next[i].min(t1);
                let h = seg_end - clock[i];
                if h > 0.0 {
                    let z: f64 = StandardNormal.sample(rng);
                    pos[i] += h.sqrt() * z;
                }
                clock[i] = seg_end;
                if next[i] > t1 {
                    break;
                }
                let k = sampler.sample(rng);
                let wait: f64 = Exp1.sample(rng);
                next[i] = seg_end + wait;
                if k == 0 {
                    pos[i] = f64::NEG_INFINITY;
                    break;
                }
                for _ in 1..k {
                    let w: f64 = Exp1.sample(rng);
                    pos.push(pos[i]);
                    ids.push(next_id);
                    next_id += 1;
                    next.push(seg_end + w);
                    clock.push(seg_end);
                }
            }
            i += 1;
        }
        trim(&mut pos, &mut ids, &mut next, cfg.n);
        if pos.is_empty() {
            return Err(Error::Extinction { time: t1 });
        }
        if (step + 1) % per_record == 0 {
            record(&mut out, &pos, t1, cfg.statistic);
        }
    }
    Ok(out)
}

fn record(out: &mut FrontSeries, pos: &[f64], t: f64, stat: FrontStatistic) {
    let mut tmp = pos.to_vec();
    out.times.push(t);
    out.front.push(front_of(&mut tmp, stat));
    out.counts.push(pos.len());
}

/// Drops dead particles, then keeps the `n` rightmost; ties in position are broken by id.
fn trim(pos: &mut Vec<f64>, ids: &mut Vec<u64>, next: &mut Vec<f64>, n: usize) {
    let mut order: Vec<usize> = (0..pos.len()).filter(|&i| pos[i] > f64::NEG_INFINITY).collect();
    if order.len() > n {
        let cut = order.len() - n;
        // the `cut` smallest by (position, id); larger id survives a tie
        order.select_nth_unstable_by(cut, |&a, &b| pos[a].total_cmp(&pos[b]).then(ids[a].cmp(&ids[b])));
        order.drain(..cut);
        order.sort_unstable();
    } else if order.len() == pos.len() {
        return;
    }
    *pos = order.iter().map(|&i| pos[i]).collect();
    *ids = order.iter().map(|&i| ids[i]).collect();
    *next = order.iter().map(|&i| next[i]).collect();
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontEstimates {
    pub v: f64,
    pub v_se: f64,
    /// Cumulants of the increments over a window, divided by its length.
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub window: f64,
    pub windows: usize,
}

/// Window length `max(10 log³N, 100)`.
pub fn cumulant_window(n: usize) -> f64 {
    (10.0 * (n as f64).ln().powi(3)).max(100.0)
}

/// Least-squares speed of the front after `burn_in`.
pub fn front_speed(series: &FrontSeries, burn_in: f64) -> Result<LinearFit> {
    let (t, x): (Vec<f64>, Vec<f64>) = series.times.iter().zip(&series.front).filter(|(&t, _)| t >= burn_in).map(|(&t, &x)| (t, x)).unzip();
    if t.len() < 3 {
        return Err(Error::InsufficientHorizon(format!("{} points after burn-in {burn_in}", t.len())));
    }
    linear_fit(&t, &x)
}

pub fn speed_and_cumulants(series: &FrontSeries, burn_in: f64) -> Result<FrontEstimates> {
    speed_and_cumulants_with_window(series, burn_in, cumulant_window(series.n))
}

pub fn speed_and_cumulants_with_window(series: &FrontSeries, burn_in: f64, window: f64) -> Result<FrontEstimates> {
    let fit = front_speed(series, burn_in)?;
    let start = series.times.iter().position(|&t| t >= burn_in).unwrap_or(series.times.len());
    let mut incs = Vec::new();
    let mut j = start;
    while j < series.times.len() {
        let target = series.times[j] + window;
        let Some(k) = series.times[j..].iter().position(|&t| t >= target - 1e-9).map(|k| k + j) else { break };
        incs.push(series.front[k] - series.front[j]);
        j = k;
    }
    if incs.len() < MIN_KSTAT_SAMPLES {
        return Err(Error::InsufficientHorizon(format!(
            "{} windows of length {window} after burn-in, need {MIN_KSTAT_SAMPLES}",
            incs.len()
        )));
    }
    let ks = k_statistics(&incs)?;
    Ok(FrontEstimates {
        v: fit.slope,
        v_se: fit.slope_se,
        k2: ks.k2 / window,
        k3: ks.k3 / window,
        k4: ks.k4 / window,
        window,
        windows: incs.len(),
    })
}
