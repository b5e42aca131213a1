//! Particles, events and counters.

use std::fmt;

/// Whether a particle is free or part of an excursion started by a hit of `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParticleState {
    Normal,
    /// Index into the excursion list; the particle has not yet come back to the critical line.
    Excursion(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub id: u64,
    pub parent: Option<u64>,
    /// Distance from the barrier.
    pub position: f64,
    pub tier: u32,
    /// Time of the last hit of `a`.
    pub last_tau: f64,
    pub birth_time: f64,
    pub alive: bool,
    pub state: ParticleState,
    pub(crate) next_branch: f64,
    /// Time up to which the particle has been simulated.
    pub(crate) clock: f64,
    /// `w` at the start of the current substep if the particle was then normal, else 0.
    pub(crate) w_start: f64,
}

impl Particle {
    /// Time elapsed since the last hit of `a`.
    pub fn tier_clock(&self, now: f64) -> f64 {
        now - self.last_tau
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    /// One offspring; `parent` is the particle that branched.
    Branch,
    /// Branching into zero offspring.
    Death,
    AbsorbLeft,
    HitA,
    ReturnToLine,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Branch => "branch",
            EventKind::Death => "death",
            EventKind::AbsorbLeft => "absorb_left",
            EventKind::HitA => "hit_a",
            EventKind::ReturnToLine => "return_to_line",
        }
    }

    fn is_boundary(&self) -> bool {
        matches!(self, EventKind::AbsorbLeft | EventKind::HitA | EventKind::ReturnToLine)
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub particle: u64,
    pub parent: Option<u64>,
    pub position: f64,
    /// Tier before the event.
    pub tier: u32,
}

/// Which events are kept in the log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogLevel {
    None,
    /// Absorptions, hits of `a` and returns to the critical line.
    #[default]
    Boundary,
    Full,
}

impl LogLevel {
    pub(crate) fn keeps(&self, kind: EventKind) -> bool {
        match self {
            LogLevel::None => false,
            LogLevel::Boundary => kind.is_boundary(),
            LogLevel::Full => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counters {
    pub roots: u64,
    pub branchings: u64,
    pub total_offspring: u64,
    pub absorbed_left: u64,
    pub hits_a: u64,
    pub killed_at_a: u64,
    pub returns: u64,
    /// Particles removed for other reasons (returns in single-excursion runs).
    pub removed: u64,
}

impl Counters {
    /// Particles that should be alive: roots plus net births minus removals.
    pub fn expected_alive(&self) -> i64 {
        self.roots as i64 + self.total_offspring as i64 - self.branchings as i64
            - self.absorbed_left as i64
            - self.killed_at_a as i64
            - self.removed as i64
    }
}
