//! Branching Brownian motion with selection: theta-function kernels, an exact-clock particle
//! engine with the moving barrier, and the reference models it is compared against.
//!
//! The deterministic parts are generic over [`Real`]; the simulators work in `f64`.

pub mod breakout;
pub mod critical_line;
pub mod engine;
pub mod error;
pub mod levy;
pub mod nbbm;
pub mod numerics;
pub mod params;
pub mod rng;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Law = params::ReproductionLaw<f64>;
pub type Params = params::ModelParams<f64>;
pub type Kernel = numerics::IntervalKernel<f64>;
pub type Population = engine::PopulationState;
pub type LevySpec = levy::LevySpec<f64>;
pub type TravelingWave = critical_line::TravelingWave<f64>;
