//! Simulation and numerical verification toolkit for diffusion approximations
//! of the M/M/1 and M/M/∞ queues.
//!
//! The crate is organised by the objects it manipulates:
//!
//! * [`ppp`]: marked Poisson point processes, deterministic kernels, the
//!   compensated-integral divergence and Campbell–Mecke checks.
//! * [`paths`]: exact piecewise path representations, affine interpolation
//!   and the sup, Hölder, fractional Sobolev and Skorohod-type distances.
//! * [`queues`]: exact simulators for the two queues, fluid limits and the
//!   rescaled fluctuation processes.
//! * [`stein`]: the orthogonal kernel families, their Gram matrices, triple
//!   absolute moments and the functional Stein bound.
//! * [`theta`]: the Θ integral transform and exact Gaussian samplers for the
//!   Ornstein–Uhlenbeck limit and time-changed Brownian motion.
//! * [`bounds`]: Lambert W, max-of-Poisson, interpolation-gap, Chebyshev and
//!   Brownian interpolation bounds.
//! * [`harness`]: test-functional panels, experiment orchestration, rate
//!   fitting and the verification suites behind the CLI.

pub mod bounds;
pub mod error;
pub mod harness;
pub mod paths;
pub mod ppp;
pub mod quad;
pub mod queues;
pub mod rng;
pub mod stats;
pub mod stein;
pub mod theta;

pub use error::{Error, Result};
pub use paths::Path;
pub use rng::{RandomStream, StreamFactory};
