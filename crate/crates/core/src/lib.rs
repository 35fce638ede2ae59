//! Simulation library for decentralized stochastic optimization.
//!
//! The crate implements exact diffusion with momentum (EDM) together with the
//! usual decentralized baselines (DSGD, DmSGD, ED/D², DSGT, DSGT-HB) on
//! synthetic heterogeneous problems, and the numerical machinery used to check
//! the convergence theory against simulated trajectories: shadow sequences,
//! per-step lemma monitors, Monte Carlo noise estimates and closed-form bound
//! evaluators.
//!
//! Modules map onto the pieces of a run:
//!
//! - [`topology`]: mixing matrices, validation and spectral profiles.
//! - [`problems`]: objective families with gradient oracles and constants.
//! - [`algorithms`]: synchronous-round optimizers sharing one stepping API.
//! - [`analysis`]: metrics, shadow sequences, monitors and bounds.
//! - [`harness`]: configuration, repeated experiments, sweeps and CSV output.

pub mod algorithms;
pub mod analysis;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod problems;
pub mod rng;
pub mod topology;
pub mod trace;

pub use algorithms::{AlgorithmKind, AlgorithmSpec, OptimizerState, Regime};
pub use analysis::{BoundInputs, MetricRow, MonitorSet};
pub use error::{Error, Result};
pub use problems::{Problem, ProblemConstants};
pub use rng::{Purpose, RngStream};
pub use topology::{MixingMatrix, SpectralProfile, ValidationReport};
pub use trace::Trace;

/// Version string written next to experiment outputs.
pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
