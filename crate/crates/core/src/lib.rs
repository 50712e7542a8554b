//! Simulation and verification toolkit for purely discontinuous additive
//! functionals of subordinate Brownian motions `X_t = W_{S_t}`.

pub mod bernstein;
pub mod error;
pub mod functionals;
pub mod girsanov;
pub mod green;
pub mod levy_kernel;
pub mod point;
pub mod quadrature;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod stats;

pub use bernstein::{BernsteinSpec, Family, MixtureTerm};
pub use error::{Error, Result};
pub use point::Point;
pub use report::{EstimateReport, Finiteness, Verdict};
