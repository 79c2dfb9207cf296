//! Numerical building blocks shared by the simulation modules.

pub mod invgamma;
pub mod ks;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod stats;

pub use invgamma::InverseGammaParams;
pub use ks::{ks_one_sample, ks_two_sample};
pub use rng::{rng_stream, RandomStream};
pub use special::{ln_gamma, lower_reg_gamma, upper_reg_gamma};
pub use stats::{summarize, EstimateResult, NeumaierSum};
