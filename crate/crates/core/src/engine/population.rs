//! The population and its time stepping.
//!
//! Branching clocks are exact exponentials. Between branchings a particle moves by Gaussian
//! increments over substeps of length `dt`, plus the exact barrier displacement. Crossings of
//! the boundaries between grid points are caught with the Brownian bridge probability.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use super::barrier::MovingBarrier;
use super::bridge::crossing_time;
use super::offspring::OffspringSampler;
use super::particle::{Counters, Event, EventKind, LogLevel, Particle, ParticleState};
use crate::error::{domain, Error, Result};
use crate::numerics::BarrierShape;
use crate::params::{ModelParams, ReproductionLaw};
use crate::rng::SimRng;

pub const DEFAULT_CAP: usize = 10_000_000;
/// Default substep as a fraction of `a²`.
pub const DEFAULT_DT_FRACTION: f64 = 1.0 / 400.0;

/// Treatment of level `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpperMode {
    /// `a` is not a boundary.
    Free,
    /// Particles hitting `a` are removed.
    Kill,
    /// Hitting `a` advances the tier and starts an excursion that lasts until the critical line.
    Tiers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub a: f64,
    pub mu: f64,
    pub c0: f64,
    pub y: f64,
    pub zeta: f64,
    pub dt: f64,
    pub cap: usize,
    pub upper: UpperMode,
    pub log_level: LogLevel,
    /// Remove particles at their return to the critical line (single-excursion runs).
    pub kill_on_return: bool,
    /// Breakout threshold `ε e^A` on the excursion's `Z′`.
    pub breakout_threshold: f64,
}

impl EngineConfig {
    /// Tier bookkeeping with the model's `a, μ, c₀, y, ζ` and threshold `ε e^A`.
    pub fn from_params(p: &ModelParams<f64>) -> Self {
        Self {
            a: p.a,
            mu: p.mu,
            c0: p.c0,
            y: p.y,
            zeta: p.zeta,
            dt: p.a * p.a * DEFAULT_DT_FRACTION,
            cap: DEFAULT_CAP,
            upper: UpperMode::Tiers,
            log_level: LogLevel::Boundary,
            kill_on_return: false,
            breakout_threshold: p.breakout_threshold(),
        }
    }

    /// Drift `−μ`, killing at 0 and at `a`.
    pub fn killed(p: &ModelParams<f64>) -> Self {
        Self { upper: UpperMode::Kill, ..Self::from_params(p) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.dt > 0.0 && self.y > 0.0 && self.zeta > 0.0) {
            return domain(format!("engine config needs a, dt, y, zeta > 0: {self:?}"));
        }
        Ok(())
    }

    fn weight(&self, x: f64) -> f64 {
        if x > 0.0 && x < self.a {
            self.a * (self.mu * (x - self.a)).exp() * (std::f64::consts::PI * x / self.a).sin()
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trigger {
    ZThreshold,
    TauCap,
}

/// The descendants of a particle that hit `a`, followed until they come back to the critical line.
#[derive(Debug, Clone, PartialEq)]
pub struct Excursion {
    pub particle: u64,
    pub start: f64,
    pub barrier_at_start: f64,
    /// Tier of the particle before the hit.
    pub tier: u32,
    /// `Z′`: sum of `w` over the returns.
    pub z: f64,
    pub y: f64,
    /// `(time, w)` at each return.
    pub returns: Vec<(f64, f64)>,
    pub tau_max: f64,
    pub pending: usize,
    pub resolved: bool,
    pub breakout: Option<Trigger>,
    /// Sum of `w` over normal particles at `snapshot_time`, the start of the substep containing `start`.
    pub z_normal_snapshot: f64,
    pub snapshot_time: f64,
    /// Part of the snapshot carried by the particle that opened the excursion.
    pub w_self: f64,
    /// The cap `ζ` was reached with particles still pending.
    pub truncated: bool,
}

/// Called after every substep.
pub trait Observer {
    fn on_substep(&mut self, state: &PopulationState);
}

impl Observer for () {
    fn on_substep(&mut self, _: &PopulationState) {}
}

impl<F: FnMut(&PopulationState)> Observer for F {
    fn on_substep(&mut self, state: &PopulationState) {
        self(state)
    }
}

#[derive(Debug, Clone)]
pub struct PopulationState {
    cfg: EngineConfig,
    sampler: OffspringSampler,
    particles: Vec<Particle>,
    time: f64,
    next_id: u64,
    barrier: MovingBarrier,
    excursions: Vec<Excursion>,
    tracking: bool,
    events: Vec<Event>,
    pending_events: Vec<Event>,
    counters: Counters,
    rng: SimRng,
}

enum Crossing {
    Lower(f64),
    Upper(f64),
    Line(f64, f64),
}

impl PopulationState {
    /// Roots at the given distances from the barrier, at time 0.
    pub fn new(cfg: EngineConfig, law: &ReproductionLaw<f64>, positions: &[f64], mut rng: SimRng) -> Result<Self> {
        cfg.validate()?;
        let mut particles = Vec::with_capacity(positions.len());
        for (i, &x) in positions.iter().enumerate() {
            if !(x > 0.0) || !x.is_finite() {
                return domain(format!("initial position {x} must be positive"));
            }
            let next_branch: f64 = Exp1.sample(&mut rng);
            particles.push(Particle {
                id: i as u64,
                parent: None,
                position: x,
                tier: 0,
                last_tau: f64::NEG_INFINITY,
                birth_time: 0.0,
                alive: true,
                state: ParticleState::Normal,
                next_branch,
                clock: 0.0,
                w_start: 0.0,
            });
        }
        let barrier = MovingBarrier::new(cfg.a);
        let mut s = Self {
            sampler: OffspringSampler::new(law),
            next_id: positions.len() as u64,
            counters: Counters { roots: positions.len() as u64, ..Counters::default() },
            tracking: cfg.upper == UpperMode::Tiers,
            cfg,
            particles,
            time: 0.0,
            barrier,
            excursions: Vec::new(),
            events: Vec::new(),
            pending_events: Vec::new(),
            rng,
        };
        s.start_excursions_at_or_above_a();
        Ok(s)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Empties the event log, returning its contents.
    pub fn take_events(&mut self) -> Vec<Event> {
        std::mem::take(&mut self.events)
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn excursions(&self) -> &[Excursion] {
        &self.excursions
    }

    pub fn barrier(&self) -> &MovingBarrier {
        &self.barrier
    }

    /// Current position `X` of the left barrier.
    pub fn barrier_offset(&self) -> f64 {
        self.barrier.position(self.time)
    }

    /// Drift of a particle in the barrier frame at time `t`: `−μ − Ẋ_t`.
    pub fn drift_at(&self, t: f64) -> f64 {
        -self.cfg.mu - self.barrier.velocity(t)
    }

    pub fn is_tracking(&self) -> bool {
        self.tracking
    }

    /// Stops opening new excursions; particles hitting `a` stay normal.
    pub fn stop_tracking(&mut self) {
        self.tracking = false;
    }

    /// Clears tiers and excursions and resumes tracking, as at the start of an epoch.
    /// Pending excursion particles become normal.
    pub fn reset_tiers(&mut self) {
        for p in &mut self.particles {
            p.tier = 0;
            p.state = ParticleState::Normal;
            p.last_tau = f64::NEG_INFINITY;
        }
        self.excursions.clear();
        self.tracking = self.cfg.upper == UpperMode::Tiers;
        self.start_excursions_at_or_above_a();
    }

    /// Drops resolved excursions started at or before `t` and restarts the tier count of
    /// normal particles; excursions still open are kept.
    pub fn restart_tiers(&mut self, t: f64) {
        let mut index = Vec::with_capacity(self.excursions.len());
        let mut kept = 0u32;
        for e in &self.excursions {
            if e.resolved && e.start <= t {
                index.push(u32::MAX);
            } else {
                index.push(kept);
                kept += 1;
            }
        }
        let mut k = 0;
        self.excursions.retain(|_| {
            k += 1;
            index[k - 1] != u32::MAX
        });
        for p in &mut self.particles {
            match p.state {
                ParticleState::Excursion(j) => p.state = ParticleState::Excursion(index[j as usize]),
                ParticleState::Normal => {
                    p.tier = 0;
                    p.last_tau = f64::NEG_INFINITY;
                }
            }
        }
        self.tracking = self.cfg.upper == UpperMode::Tiers;
    }

    /// Starts a ramp of shift `delta` at `start`. If `start` is already past, particles are
    /// displaced at once by the part of the ramp already elapsed, which is returned.
    pub fn install_ramp(&mut self, start: f64, delta: f64) -> Result<f64> {
        let shape = BarrierShape::new(self.cfg.c0, delta)?;
        let before = self.barrier.position(self.time);
        self.barrier.add_ramp(start, shape);
        let jump = self.barrier.position(self.time) - before;
        if jump > 0.0 {
            let now = self.time;
            for i in 0..self.particles.len() {
                self.particles[i].position -= jump;
                if self.particles[i].position <= 0.0 {
                    self.absorb(i, now);
                }
            }
            self.flush_events();
            self.particles.retain(|p| p.alive);
        }
        Ok(jump)
    }

    /// `Z = Σ w(X_u)` over particles in `(0, a)`.
    pub fn functional_z(&self) -> f64 {
        self.particles.iter().map(|p| self.cfg.weight(p.position)).sum()
    }

    /// `Y = Σ e^{μ(X_u − a)}` over particles in `(0, a]`.
    pub fn functional_y(&self) -> f64 {
        let (a, mu) = (self.cfg.a, self.cfg.mu);
        self.particles.iter().filter(|p| p.position > 0.0 && p.position <= a).map(|p| (mu * (p.position - a)).exp()).sum()
    }

    /// Hits of `a` by tier-0 particles in `[s, t]`, read from the event log.
    pub fn exit_count(&self, s: f64, t: f64) -> usize {
        exit_count(&self.events, s, t)
    }

    /// Advances to `until` without observers.
    pub fn advance(&mut self, until: f64) -> Result<()> {
        self.advance_with(until, &mut ())
    }

    /// Advances to `until` along the grid `k·dt`, calling the observer after each substep.
    pub fn advance_with<O: Observer + ?Sized>(&mut self, until: f64, obs: &mut O) -> Result<()> {
        if !(until >= self.time) {
            return domain(format!("cannot advance from {} back to {until}", self.time));
        }
        let dt = self.cfg.dt;
        while self.time < until {
            let k = (self.time / dt + 1e-9).floor() + 1.0;
            let t1 = (k * dt).min(until);
            self.substep(t1)?;
            obs.on_substep(self);
        }
        Ok(())
    }

    /// Advances until `stop` returns true after a substep, or `until` is reached.
    pub fn advance_until<P: FnMut(&PopulationState) -> bool>(&mut self, until: f64, mut stop: P) -> Result<bool> {
        let dt = self.cfg.dt;
        while self.time < until {
            let k = (self.time / dt + 1e-9).floor() + 1.0;
            let t1 = (k * dt).min(until);
            self.substep(t1)?;
            if stop(self) {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn substep(&mut self, t1: f64) -> Result<()> {
        let t0 = self.time;
        let n0 = self.particles.len();
        let first_new_excursion = self.excursions.len();
        let mut z_normal = 0.0;
        let mut i = 0;
        while i < self.particles.len() {
            if i < n0 {
                let p = &mut self.particles[i];
                p.w_start = if p.state == ParticleState::Normal { self.cfg.weight(p.position) } else { 0.0 };
                z_normal += p.w_start;
            }
            self.step_particle(i, t1);
            i += 1;
            if self.particles.len() > self.cfg.cap {
                return Err(Error::ExplosionGuard { count: self.particles.len(), cap: self.cfg.cap });
            }
        }
        self.time = t1;
        for e in &mut self.excursions[first_new_excursion..] {
            e.z_normal_snapshot = z_normal;
            e.snapshot_time = t0;
        }
        self.close_excursions();
        self.flush_events();
        self.particles.retain(|p| p.alive);
        if !self.barrier.is_static() {
            self.barrier.settle(t1);
        }
        debug_assert!(t0 <= t1);
        Ok(())
    }

    fn flush_events(&mut self) {
        if self.pending_events.is_empty() {
            return;
        }
        self.pending_events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.particle.cmp(&b.particle)));
        self.events.append(&mut self.pending_events);
    }

    fn log(&mut self, kind: EventKind, i: usize, time: f64, parent: Option<u64>) {
        if self.cfg.log_level.keeps(kind) {
            let p = &self.particles[i];
            self.pending_events.push(Event { time, kind, particle: p.id, parent, position: p.position, tier: p.tier });
        }
    }

    fn barrier_shift(&self, s0: f64, s1: f64) -> f64 {
        if self.barrier.is_static() {
            0.0
        } else {
            self.barrier.position(s1) - self.barrier.position(s0)
        }
    }

    /// Critical line of an excursion at time `s`, in the barrier frame.
    fn line(&self, e: &Excursion, s: f64) -> f64 {
        let shift = if self.barrier.is_static() { 0.0 } else { self.barrier.position(s) - e.barrier_at_start };
        self.cfg.a - self.cfg.y + (self.cfg.c0 - self.cfg.mu) * (s - e.start) - shift
    }

    fn uniform_below(&mut self, p: f64) -> bool {
        p > 1e-18 && self.rng.random::<f64>() < p
    }

    fn step_particle(&mut self, i: usize, t1: f64) {
        loop {
            let (alive, s0, next_branch) = {
                let p = &self.particles[i];
                (p.alive, p.clock, p.next_branch)
            };
            if !alive || s0 >= t1 {
                return;
            }
            let seg_end = next_branch.min(t1);
            let h = seg_end - s0;
            if h > 0.0 {
                let x0 = self.particles[i].position;
                let z: f64 = StandardNormal.sample(&mut self.rng);
                let x1 = x0 - self.cfg.mu * h - self.barrier_shift(s0, seg_end) + h.sqrt() * z;
                match self.detect_crossing(i, s0, seg_end, x0, x1) {
                    Some(c) => {
                        self.apply_crossing(i, c);
                        continue;
                    }
                    None => {
                        let p = &mut self.particles[i];
                        p.position = x1;
                        p.clock = seg_end;
                    }
                }
            }
            if next_branch <= t1 {
                self.branch(i, next_branch);
            } else {
                self.particles[i].clock = t1;
            }
        }
    }

    fn detect_crossing(&mut self, i: usize, s0: f64, s1: f64, x0: f64, x1: f64) -> Option<Crossing> {
        let h = s1 - s0;
        let state = self.particles[i].state;
        if let ParticleState::Excursion(k) = state {
            let e = &self.excursions[k as usize];
            let (l0, l1) = (self.line(e, s0), self.line(e, s1));
            if l0 > 0.0 && l1 > 0.0 {
                let (d0, d1) = (x0 - l0, x1 - l1);
                let hit = d1 <= 0.0 || d0 <= 0.0 || self.uniform_below((-2.0 * d0 * d1 / h).exp());
                if hit {
                    let t = crossing_time(s0, h, d0, d1, 0.0, false);
                    let l = self.line(&self.excursions[k as usize], t);
                    return Some(Crossing::Line(t, l));
                }
                return None;
            }
        }
        let lower = x1 <= 0.0 || self.uniform_below((-2.0 * x0 * x1 / h).exp());
        let check_upper = state == ParticleState::Normal
            && match self.cfg.upper {
                UpperMode::Free => false,
                UpperMode::Kill => true,
                UpperMode::Tiers => self.tracking,
            };
        let a = self.cfg.a;
        let upper = check_upper && (x0 >= a || x1 >= a || self.uniform_below((-2.0 * (a - x0) * (a - x1) / h).exp()));
        match (lower, upper) {
            (false, false) => None,
            (true, false) => Some(Crossing::Lower(crossing_time(s0, h, x0, x1, 0.0, false))),
            (false, true) => Some(Crossing::Upper(if x0 >= a { s0 } else { crossing_time(s0, h, x0, x1, a, true) })),
            (true, true) => {
                let tl = crossing_time(s0, h, x0, x1, 0.0, false);
                let tu = if x0 >= a { s0 } else { crossing_time(s0, h, x0, x1, a, true) };
                if tl < tu || (tl == tu && x0 < a - x0) {
                    Some(Crossing::Lower(tl))
                } else {
                    Some(Crossing::Upper(tu))
                }
            }
        }
    }

    fn apply_crossing(&mut self, i: usize, c: Crossing) {
        match c {
            Crossing::Lower(t) => {
                self.particles[i].position = 0.0;
                self.absorb(i, t);
            }
            Crossing::Upper(t) => {
                self.particles[i].position = self.cfg.a;
                self.log(EventKind::HitA, i, t, self.particles[i].parent);
                self.counters.hits_a += 1;
                if self.cfg.upper == UpperMode::Kill {
                    self.counters.killed_at_a += 1;
                    let p = &mut self.particles[i];
                    p.alive = false;
                    p.clock = t;
                } else {
                    self.open_excursion(i, t);
                }
            }
            Crossing::Line(t, l) => {
                self.log_return(i, t, l);
            }
        }
    }

    fn absorb(&mut self, i: usize, t: f64) {
        self.log(EventKind::AbsorbLeft, i, t, self.particles[i].parent);
        self.counters.absorbed_left += 1;
        self.leave_excursion(i);
        let p = &mut self.particles[i];
        p.alive = false;
        p.clock = t;
    }

    fn leave_excursion(&mut self, i: usize) {
        if let ParticleState::Excursion(k) = self.particles[i].state {
            let e = &mut self.excursions[k as usize];
            e.pending -= 1;
            self.particles[i].state = ParticleState::Normal;
        }
    }

    fn log_return(&mut self, i: usize, t: f64, l: f64) {
        let ParticleState::Excursion(k) = self.particles[i].state else { return };
        self.particles[i].position = l;
        self.log(EventKind::ReturnToLine, i, t, self.particles[i].parent);
        self.counters.returns += 1;
        let w = self.cfg.weight(l);
        let ey = if l > 0.0 { (self.cfg.mu * (l - self.cfg.a)).exp() } else { 0.0 };
        let threshold = self.cfg.breakout_threshold;
        let e = &mut self.excursions[k as usize];
        e.returns.push((t, w));
        e.z += w;
        e.y += ey;
        e.tau_max = e.tau_max.max(t - e.start);
        e.pending -= 1;
        if e.breakout.is_none() && e.z > threshold {
            e.breakout = Some(Trigger::ZThreshold);
        }
        let p = &mut self.particles[i];
        p.state = ParticleState::Normal;
        p.clock = t;
        if self.cfg.kill_on_return {
            p.alive = false;
            self.counters.removed += 1;
        }
    }

    fn open_excursion(&mut self, i: usize, t: f64) {
        let barrier_at_start = self.barrier.position(t);
        let k = self.excursions.len() as u32;
        let p = &mut self.particles[i];
        self.excursions.push(Excursion {
            particle: p.id,
            start: t,
            barrier_at_start,
            tier: p.tier,
            z: 0.0,
            y: 0.0,
            returns: Vec::new(),
            tau_max: 0.0,
            pending: 1,
            resolved: false,
            breakout: None,
            z_normal_snapshot: 0.0,
            snapshot_time: t,
            w_self: p.w_start,
            truncated: false,
        });
        p.w_start = 0.0;
        p.tier += 1;
        p.last_tau = t;
        p.state = ParticleState::Excursion(k);
        p.clock = t;
    }

    fn start_excursions_at_or_above_a(&mut self) {
        if !self.tracking {
            return;
        }
        let t = self.time;
        let first = self.excursions.len();
        for i in 0..self.particles.len() {
            if self.particles[i].alive && self.particles[i].position >= self.cfg.a {
                self.particles[i].w_start = 0.0;
                self.log(EventKind::HitA, i, t, self.particles[i].parent);
                self.counters.hits_a += 1;
                self.open_excursion(i, t);
            }
        }
        let z = self.functional_z();
        for e in &mut self.excursions[first..] {
            e.z_normal_snapshot = z;
            e.snapshot_time = t;
        }
        self.flush_events();
    }

    fn branch(&mut self, i: usize, t: f64) {
        let k = self.sampler.sample(&mut self.rng);
        self.counters.branchings += 1;
        self.counters.total_offspring += k as u64;
        if k == 0 {
            self.log(EventKind::Death, i, t, self.particles[i].parent);
            self.leave_excursion(i);
            let p = &mut self.particles[i];
            p.alive = false;
            p.clock = t;
            return;
        }
        if let ParticleState::Excursion(e) = self.particles[i].state {
            self.excursions[e as usize].pending += k as usize - 1;
        }
        let parent_id = self.particles[i].id;
        for j in 0..k {
            let id = self.next_id;
            self.next_id += 1;
            let wait: f64 = Exp1.sample(&mut self.rng);
            let next_branch = t + wait;
            let idx = if j == 0 {
                let p = &mut self.particles[i];
                p.id = id;
                p.parent = Some(parent_id);
                p.birth_time = t;
                p.next_branch = next_branch;
                p.clock = t;
                i
            } else {
                let mut child = self.particles[i].clone();
                child.id = id;
                child.w_start = 0.0;
                child.next_branch = next_branch;
                self.particles.push(child);
                self.particles.len() - 1
            };
            self.log(EventKind::Branch, idx, t, Some(parent_id));
        }
    }

    /// Resolves finished excursions and truncates those older than `ζ`.
    fn close_excursions(&mut self) {
        let now = self.time;
        let zeta = self.cfg.zeta;
        let mut truncate = Vec::new();
        for (k, e) in self.excursions.iter_mut().enumerate() {
            if e.resolved {
                continue;
            }
            if e.pending == 0 {
                e.resolved = true;
            } else if now >= e.start + zeta {
                e.truncated = true;
                e.tau_max = zeta;
                e.breakout.get_or_insert(Trigger::TauCap);
                e.resolved = true;
                truncate.push(k as u32);
            }
        }
        if truncate.is_empty() {
            return;
        }
        for i in 0..self.particles.len() {
            let p = &self.particles[i];
            if let ParticleState::Excursion(k) = p.state {
                if p.alive && truncate.contains(&k) {
                    let x = p.position;
                    let w = self.cfg.weight(x);
                    let e = &mut self.excursions[k as usize];
                    e.returns.push((now, w));
                    e.z += w;
                    e.pending -= 1;
                    let p = &mut self.particles[i];
                    p.state = ParticleState::Normal;
                    if self.cfg.kill_on_return {
                        p.alive = false;
                        self.counters.removed += 1;
                    }
                }
            }
        }
    }
}

/// Hits of `a` by tier-0 particles with time in `[s, t]`.
pub fn exit_count(events: &[Event], s: f64, t: f64) -> usize {
    events.iter().filter(|e| e.kind == EventKind::HitA && e.tier == 0 && e.time >= s && e.time <= t).count()
}
