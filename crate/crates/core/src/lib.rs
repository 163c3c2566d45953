//! Numerical laboratory for concentration of measure on random matrices
//! with bounded independent entries.
//!
//! The crate is split along the objects it computes:
//!
//! * [`vecnorms`]: ℓp, Lorentz and Orlicz norms and the modulus `K_E`.
//! * [`matstat`]: matrix functionals (p→q operator norms, eigenvalues,
//!   singular values, Schatten / Ky Fan norms, partial eigenvalue sums).
//! * [`ensembles`]: bounded-entry random matrix samplers and their
//!   support diameters.
//! * [`talagrand`]: the convex-hull distance and exhaustive checks of the
//!   isoperimetric inequality on small product spaces.
//! * [`harness`]: Monte Carlo tail experiments against bound envelopes.
//! * [`config`] / [`report`]: experiment files and report emission used by
//!   the `concmat` binary.

pub mod config;
pub mod ensembles;
pub mod error;
pub mod harness;
pub mod matrix;
pub mod matstat;
pub mod report;
pub mod rng;
pub mod stats;
pub mod talagrand;
pub mod vecnorms;

pub use error::{Error, Result};
pub use matrix::Matrix;

/// Version string embedded in emitted reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
