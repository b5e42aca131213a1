//! Breakouts, the shift `Δ` and the epoch loop that moves the barrier.

use crate::engine::{EngineConfig, Excursion, LogLevel, PopulationState, Trigger};
use crate::error::{domain, Error, Result};
use crate::numerics::BarrierShape;
use crate::params::ModelParams;
use crate::rng::{RngStream, ReplicaMap, SimRng};
use crate::stats::{wilson, Interval};

pub const MIN_PB_REPLICAS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct BreakoutRecord {
    /// Hitting time of `a` by the fugitive.
    pub time: f64,
    pub fugitive_id: u64,
    pub z_prime: f64,
    pub tau_max: f64,
    pub triggered_by: Trigger,
    pub tier: u32,
    pub truncated: bool,
}

/// The record of an excursion whose breakout condition holds, resolved or not.
pub fn detect_breakout(e: &Excursion) -> Option<BreakoutRecord> {
    e.breakout.map(|triggered_by| BreakoutRecord {
        time: e.start,
        fugitive_id: e.particle,
        z_prime: e.z,
        tau_max: e.tau_max,
        triggered_by,
        tier: e.tier,
        truncated: e.truncated,
    })
}

/// Index of the first breakout, once no earlier excursion can still produce one.
pub fn first_breakout(state: &PopulationState) -> Option<usize> {
    let ex = state.excursions();
    let k = ex
        .iter()
        .enumerate()
        .filter(|(_, e)| e.breakout.is_some())
        .min_by(|a, b| a.1.start.total_cmp(&b.1.start).then(a.0.cmp(&b.0)))?
        .0;
    let t = ex[k].start;
    ex.iter().all(|e| e.resolved || e.start > t || (e.start == t && e.breakout.is_some())).then_some(k)
}

/// `Δ = c₀⁻¹ log(Z_T / κe^A ∨ 1)`.
pub fn delta_shift(z_t: f64, p: &ModelParams<f64>) -> Result<f64> {
    if !(z_t >= 0.0) {
        return domain(format!("Z_T = {z_t} must be nonnegative"));
    }
    Ok((z_t / p.target_z()).max(1.0).ln() / p.c0)
}

/// Outcome of one excursion started by a single particle at `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcursionOutcome {
    pub breakout: Option<Trigger>,
    pub z_prime: f64,
    pub tau_max: f64,
    pub truncated: bool,
}

/// Follows the descendants of one particle at `a` until they are back on the critical line.
/// With `early_stop` the run ends as soon as `Z′` exceeds the threshold, so `z_prime` is then
/// only a lower bound.
pub fn single_excursion(p: &ModelParams<f64>, threshold: f64, early_stop: bool, rng: SimRng) -> Result<ExcursionOutcome> {
    let cfg = EngineConfig {
        kill_on_return: true,
        log_level: LogLevel::None,
        breakout_threshold: threshold,
        ..EngineConfig::from_params(p)
    };
    let mut state = PopulationState::new(cfg, &p.law.to_f64(), &[p.a], rng)?;
    let until = p.zeta + 2.0 * state.config().dt;
    state.advance_until(until, |s| {
        let e = &s.excursions()[0];
        e.resolved || (early_stop && e.breakout == Some(Trigger::ZThreshold))
    })?;
    let e = &state.excursions()[0];
    Ok(ExcursionOutcome { breakout: e.breakout, z_prime: e.z, tau_max: e.tau_max, truncated: e.truncated })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PbEstimate {
    pub successes: u64,
    pub replicas: u64,
    pub p: Interval,
    pub tau_cap: u64,
}

/// Replica `i` uses stream `i` of `seed`.
pub fn excursion_replicas<M: ReplicaMap>(
    p: &ModelParams<f64>,
    threshold: f64,
    replicas: usize,
    seed: u64,
    early_stop: bool,
    map: &M,
) -> Result<Vec<ExcursionOutcome>> {
    map.map(replicas, |i| single_excursion(p, threshold, early_stop, RngStream::new(seed, i as u64).rng()))
        .into_iter()
        .collect()
}

pub fn summarize_pb(outcomes: &[ExcursionOutcome]) -> Result<PbEstimate> {
    let successes = outcomes.iter().filter(|o| o.breakout.is_some()).count() as u64;
    let tau_cap = outcomes.iter().filter(|o| o.breakout == Some(Trigger::TauCap)).count() as u64;
    let replicas = outcomes.len() as u64;
    Ok(PbEstimate { successes, replicas, p: wilson(successes, replicas, 1.96)?, tau_cap })
}

/// `P(B)` for one particle started at `a`, with a 95% Wilson interval.
pub fn estimate_pb<M: ReplicaMap>(p: &ModelParams<f64>, replicas: usize, seed: u64, map: &M) -> Result<PbEstimate> {
    if replicas < MIN_PB_REPLICAS {
        return Err(Error::InsufficientSamples { needed: MIN_PB_REPLICAS, got: replicas });
    }
    summarize_pb(&excursion_replicas(p, p.breakout_threshold(), replicas, seed, true, map)?)
}

/// The first breakout of a population started at `positions`, with the barrier held still.
pub fn first_breakout_from(p: &ModelParams<f64>, positions: &[f64], max_wait: f64, rng: SimRng) -> Result<BreakoutRecord> {
    let cfg = EngineConfig { log_level: LogLevel::None, ..EngineConfig::from_params(p) };
    let mut state = PopulationState::new(cfg, &p.law.to_f64(), positions, rng)?;
    state.advance_until(max_wait, |s| s.is_empty() || first_breakout(s).is_some())?;
    let k = first_breakout(&state).ok_or(Error::DegenerateEpoch { time: state.time() })?;
    Ok(detect_breakout(&state.excursions()[k]).expect("first breakout has a trigger"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GoodFlags {
    pub support_ok: bool,
    pub relaxed_ok: bool,
    pub z_band_ok: bool,
    pub y_band_ok: bool,
}

impl GoodFlags {
    pub fn all(&self) -> bool {
        self.support_ok && self.relaxed_ok && self.z_band_ok && self.y_band_ok
    }

    /// Four 0/1 digits in field order.
    pub fn code(&self) -> String {
        [self.support_ok, self.relaxed_ok, self.z_band_ok, self.y_band_ok].iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochResult {
    pub n: usize,
    pub breakout: BreakoutRecord,
    /// `Z` over the stopping line at the breakout.
    pub z_t: f64,
    /// Applied shift: `Δ(Z_T)` less what earlier ramps had still to cover at `T`.
    pub delta: f64,
    /// Start of the ramp, `T + τ_max`.
    pub t_prime: f64,
    /// End of the epoch.
    pub t_n: f64,
    /// Displacement applied at once because the ramp start was already past.
    pub catch_up: f64,
    pub x_end: f64,
    pub z_end: f64,
    pub y_end: f64,
    pub good_flags: GoodFlags,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierPath {
    pub a: f64,
    pub c0: f64,
    /// `(time, X)` at the start and at each breakout, ramp start and epoch end.
    pub breakpoints: Vec<(f64, f64)>,
    /// `(start, Δ)` of each ramp.
    pub ramps: Vec<(f64, f64)>,
    pub epochs: Vec<EpochResult>,
}

impl BarrierPath {
    pub fn new(a: f64, c0: f64) -> Self {
        Self { a, c0, breakpoints: vec![(0.0, 0.0)], ramps: Vec::new(), epochs: Vec::new() }
    }

    /// `X` at raw time `t`.
    pub fn position(&self, t: f64) -> f64 {
        let a2 = self.a * self.a;
        self.ramps
            .iter()
            .map(|&(s, d)| BarrierShape::new(self.c0, d).map(|f| f.value((t - s) / a2)).unwrap_or(0.0))
            .sum()
    }

    pub fn end_time(&self) -> f64 {
        self.epochs.last().map_or(0.0, |e| e.t_n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochOptions {
    /// Half-width of the band for `e^{−A}Z` at epoch ends; `None` means `ε^{3/2}`.
    pub z_band: Option<f64>,
    /// Longest wait for a breakout within one epoch.
    pub max_wait: f64,
}

impl Default for EpochOptions {
    fn default() -> Self {
        Self { z_band: None, max_wait: 1e7 }
    }
}

/// Steps the population through epochs: wait for a breakout, shift the barrier, relax.
#[derive(Debug, Clone)]
pub struct EpochRunner {
    params: ModelParams<f64>,
    opts: EpochOptions,
    state: PopulationState,
    path: BarrierPath,
}

impl EpochRunner {
    pub fn new(p: &ModelParams<f64>, positions: &[f64], opts: EpochOptions, rng: SimRng) -> Result<Self> {
        let cfg = EngineConfig { log_level: LogLevel::None, ..EngineConfig::from_params(p) };
        let state = PopulationState::new(cfg, &p.law.to_f64(), positions, rng)?;
        Ok(Self { params: p.clone(), opts, state, path: BarrierPath::new(p.a, p.c0) })
    }

    pub fn state(&self) -> &PopulationState {
        &self.state
    }

    pub fn path(&self) -> &BarrierPath {
        &self.path
    }

    pub fn into_path(self) -> BarrierPath {
        self.path
    }

    fn z_band(&self) -> f64 {
        self.opts.z_band.unwrap_or(self.params.epsilon.powf(1.5))
    }

    /// Runs to the next breakout, shifts the barrier and relaxes until `(T + a^{5/2}) ∨ T′`.
    /// Hits of `a` stay tracked after `T`; a breakout confirmed during the relaxation ends the
    /// epoch there with `relaxed_ok` unset.
    pub fn next_epoch(&mut self) -> Result<EpochResult> {
        let band = self.z_band();
        let p = &self.params;
        let state = &mut self.state;
        let deadline = state.time() + self.opts.max_wait;
        state.advance_until(deadline, |s| s.is_empty() || first_breakout(s).is_some())?;
        if state.is_empty() {
            return Err(Error::DegenerateEpoch { time: state.time() });
        }
        let Some(k) = first_breakout(state) else {
            return Err(Error::DegenerateEpoch { time: state.time() });
        };
        let t = state.excursions()[k].start;
        state.advance_until(f64::INFINITY, |s| s.excursions().iter().all(|e| e.resolved || e.start > t))?;
        let record = detect_breakout(&state.excursions()[k]).expect("first breakout has a trigger");
        let z_t = stopping_line_z(state.excursions(), k);
        // shift still to come from earlier ramps, already priced into Z_T
        let pending = self.path.ramps.iter().map(|r| r.1).sum::<f64>() - self.path.position(t);
        let delta = (delta_shift(z_t, p)? - pending).max(0.0);
        let t_prime = t + record.tau_max;
        let x_breakout = self.path.position(t);
        let catch_up = state.install_ramp(t_prime, delta)?;
        if delta > 0.0 {
            self.path.ramps.push((t_prime, delta));
        }
        state.restart_tiers(t);
        let target = (t + p.a.powf(2.5)).max(t_prime).max(state.time());
        let interrupted = state.advance_until(target, |s| s.is_empty() || first_breakout(s).is_some())?;
        if state.is_empty() {
            return Err(Error::DegenerateEpoch { time: state.time() });
        }
        let t_n = state.time();
        let z_end = state.functional_z();
        let y_end = state.functional_y();
        let good_flags = GoodFlags {
            support_ok: state.particles().iter().all(|u| u.position > 0.0 && u.position < p.a),
            relaxed_ok: !interrupted && t_n > t_prime && state.excursions().iter().all(|e| e.resolved),
            z_band_ok: ((-p.big_a).exp() * z_end - p.kappa).abs() <= band,
            y_band_ok: y_end <= p.eta * z_end,
        };
        let x_end = self.path.position(t_n);
        self.path.breakpoints.extend([(t, x_breakout), (t_prime, self.path.position(t_prime)), (t_n, x_end)]);
        let n = self.path.epochs.len() + 1;
        self.path.epochs.push(EpochResult {
            n,
            breakout: record,
            z_t,
            delta,
            t_prime,
            t_n,
            catch_up,
            x_end,
            z_end,
            y_end,
            good_flags,
        });
        Ok(self.path.epochs.last().expect("just pushed").clone())
    }
}

/// `Z_T`: the snapshot of normal particles, less the excursion starters it contains, plus the
/// returns of every excursion started by `T`.
fn stopping_line_z(ex: &[Excursion], k: usize) -> f64 {
    let f = &ex[k];
    let (t, t0) = (f.start, f.snapshot_time);
    let mut z = f.z_normal_snapshot;
    for e in ex.iter().filter(|e| e.start <= t) {
        if e.start >= t0 {
            z -= e.w_self;
        }
        z += e.returns.iter().filter(|r| r.0 >= t0).map(|r| r.1).sum::<f64>();
    }
    z.max(0.0)
}

/// Runs `n_epochs` epochs from the given positions.
pub fn run_epochs(p: &ModelParams<f64>, positions: &[f64], n_epochs: usize, opts: EpochOptions, rng: SimRng) -> Result<BarrierPath> {
    let mut runner = EpochRunner::new(p, positions, opts, rng)?;
    for _ in 0..n_epochs {
        runner.next_epoch()?;
    }
    Ok(runner.into_path())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RescaledPath {
    pub t: Vec<f64>,
    pub raw_t: Vec<f64>,
    pub x_raw: Vec<f64>,
    /// `X(t a³c₀²/π²) − A t`.
    pub x: Vec<f64>,
    /// Same with `X` frozen at its value at the last epoch end.
    pub j: Vec<f64>,
}

/// Raw time per unit of rescaled time, `a³c₀²/π²`.
pub fn time_scale(p: &ModelParams<f64>) -> f64 {
    p.a.powi(3) * p.c0 * p.c0 / (std::f64::consts::PI * std::f64::consts::PI)
}

/// Samples the rescaled path at `points + 1` equally spaced rescaled times in `[0, horizon]`.
pub fn rescale_path(path: &BarrierPath, p: &ModelParams<f64>, horizon: f64, points: usize) -> Result<RescaledPath> {
    if points == 0 || !(horizon >= 0.0) {
        return domain("rescale_path needs points ≥ 1 and horizon ≥ 0");
    }
    let scale = time_scale(p);
    let ends: Vec<(f64, f64)> = path.epochs.iter().map(|e| (e.t_n, path.position(e.t_n))).collect();
    let mut out = RescaledPath { t: vec![], raw_t: vec![], x_raw: vec![], x: vec![], j: vec![] };
    for i in 0..=points {
        let t = horizon * i as f64 / points as f64;
        let raw = t * scale;
        let x_raw = path.position(raw);
        let j_raw = ends.iter().take_while(|e| e.0 <= raw).last().map_or(0.0, |e| e.1);
        out.t.push(t);
        out.raw_t.push(raw);
        out.x_raw.push(x_raw);
        out.x.push(x_raw - p.big_a * t);
        out.j.push(j_raw - p.big_a * t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Sequential};

    fn small() -> ModelParams<f64> {
        let mut p = ModelParams::desk_preset();
        p.zeta = 10.0;
        p
    }

    #[test]
    fn delta_examples() {
        let p = small();
        let t = p.target_z();
        assert_eq!(delta_shift(t, &p).unwrap(), 0.0);
        assert!((delta_shift(t * p.c0.exp(), &p).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(delta_shift(t / 2.0, &p).unwrap(), 0.0);
        assert!(delta_shift(-1.0, &p).is_err());
    }

    #[test]
    fn pb_needs_replicas() {
        let p = small();
        assert!(matches!(estimate_pb(&p, 10, 1, &Sequential), Err(Error::InsufficientSamples { .. })));
    }

    #[test]
    fn zero_threshold_breaks_out_unless_all_die() {
        let p = small();
        let out = excursion_replicas(&p, 0.0, 50, 7, false, &Sequential).unwrap();
        for o in &out {
            assert_eq!(o.breakout.is_some(), o.z_prime > 0.0 || o.truncated, "{o:?}");
        }
    }

    #[test]
    fn no_epochs() {
        let p = small();
        let path = run_epochs(&p, &[1.0, 2.0], 0, EpochOptions::default(), stream_rng(1, 0)).unwrap();
        assert_eq!(path.breakpoints, vec![(0.0, 0.0)]);
        assert!(path.epochs.is_empty());
        let r = rescale_path(&path, &p, 2.0, 4).unwrap();
        for (t, x) in r.t.iter().zip(&r.x) {
            assert_eq!(*x, -p.big_a * t);
        }
        assert_eq!(r.raw_t[4], 2.0 * time_scale(&p));
    }

    #[test]
    fn barrier_path_sums_ramps() {
        let mut path = BarrierPath::new(8.0, 2f64.sqrt());
        path.ramps = vec![(10.0, 0.5), (500.0, 1.0)];
        assert_eq!(path.position(0.0), 0.0);
        assert!((path.position(1e6) - 1.5).abs() < 1e-9);
        let mut prev = 0.0;
        for i in 0..2000 {
            let x = path.position(i as f64 * 2.0);
            assert!(x >= prev);
            prev = x;
        }
    }
}
