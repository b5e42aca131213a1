//! Deterministic special-function kernels.

pub mod barrier;
pub mod integrals;
pub mod kernel;
pub mod quad;
pub mod theta;

pub use barrier::{barrier_shape_default, relaxation_profile, BarrierShape};
pub use integrals::{integral_i, integral_i_width, integral_j, integral_j_width, lemma_i_terms, lemma_j_terms, IntervalSet};
pub use kernel::{series_tail_e, IntervalKernel};
pub use quad::{integrate, integrate_sqrt, integrate_to_inf, QuadOptions, QuadResult};
pub use theta::{theta, theta_dt, theta_dx, theta_eval, theta_fourier, theta_gaussian, Representation, ThetaEval};
