//! Design and evaluation of vector quantizers for Neyman-Pearson detection of
//! correlated stationary processes.
//!
//! The crate is organised bottom-up:
//!
//! - [`processes`]: two-hypothesis stationary models (i.i.d., finite-state HMM,
//!   Gauss AR(1)/MA plus noise), path sampling, densities and the gradient of
//!   the log-likelihood ratio with respect to one sample.
//! - [`likelihood`]: joint densities, LLR paths for raw and quantized
//!   observations and Monte-Carlo error-exponent estimators.
//! - [`highrate`]: grid fields, the score field `F̄`, the loss constant `D_e`
//!   and the optimal point densities.
//! - [`quantizers`]: Voronoi and compander quantizers, LBG training, rejection
//!   sampling, per-cell statistics and the detection-oriented design pipeline.
//! - [`evaluation`]: ROC curves, `D_e` comparison tables and the high-rate
//!   convergence diagnostic.
//! - [`scenarios`]: the three built-in numerical scenarios.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default); every result is bit-identical to the sequential path.

pub mod error;
pub mod evaluation;
pub mod exec;
pub mod highrate;
pub mod likelihood;
pub mod processes;
pub mod quadrature;
pub mod quantizers;
pub mod rng;
pub mod scenarios;

pub use error::{Error, Result};
pub use exec::Execution;
pub use processes::{DomainBox, Hypothesis, ObservationWindow, ProcessModel};

/// Library version, echoed into every emitted report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
