//! Mesh-agnostic dimensionality reduction of parametric spatio-temporal
//! point-cloud data.
//!
//! The crate is organized around a hypernetwork model (a conditioning
//! network that produces the weights of a coordinate network) together with
//! the classical linear-reduction toolbox it is benchmarked against:
//!
//! * [`numerics`] — dense linear algebra (SVD, pivoted QR, least squares,
//!   small eigenproblems) and a seeded deterministic RNG.
//! * [`datagen`] — spectral Kuramoto–Sivashinsky solver, synthetic wave and
//!   linear-series generators, point-cloud tables with normalization and
//!   CSV/JSON round-tripping.
//! * [`nets`] — network definitions, initialization, forward evaluation and
//!   hand-rolled reverse-mode gradients for the hypernetwork and baselines.
//! * [`train`] — mini-batch Adam training with loss/metric reporting and
//!   finite-difference gradient verification.
//! * [`reduce`] — POD, QDEIM sensor selection, DEIM reconstruction, latent
//!   mode normalization and dynamic mode decomposition.
//! * [`query`] — compile-once/evaluate-many spatial queries with
//!   deterministic flop accounting and wall-clock benchmarking.

pub mod datagen;
pub mod error;
pub mod nets;
pub mod numerics;
pub mod query;
pub mod reduce;
pub mod train;

pub use error::{Error, Result};
pub use numerics::{CMatrix, Matrix, RngState};
