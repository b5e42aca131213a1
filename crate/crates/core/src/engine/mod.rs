//! Branching Brownian motion with drift, absorption at the moving barrier and tier bookkeeping.

pub mod barrier;
pub mod bridge;
pub mod initial;
pub mod offspring;
pub mod particle;
pub mod population;

pub use barrier::{MovingBarrier, Ramp};
pub use bridge::{bridge_hit_prob, bridge_hit_prob_below};
pub use initial::{profile_means, sample_initial_population, sample_profile, InitialPopulation};
pub use offspring::{sample_offspring, OffspringSampler};
pub use particle::{Counters, Event, EventKind, LogLevel, Particle, ParticleState};
pub use population::{exit_count, EngineConfig, Excursion, Observer, PopulationState, Trigger, UpperMode, DEFAULT_CAP};
