//! Dataset generation and serialization.
//!
//! Produces point-cloud tables — one row per sample `(mu, t, x, u[, dx])` —
//! from a spectral Kuramoto–Sivashinsky solver, a closed-form modulated
//! traveling wave, and synthetic linear latent series, together with
//! per-column normalization and a CSV + JSON-sidecar file format.

mod dataset;
mod io;
mod ks;
mod normalize;
mod series;
mod wave;

pub use dataset::{PointCloudDataset, PointCloudSchema};
pub use io::{read_pointcloud, write_pointcloud};
pub use ks::{make_ks_dataset, solve_ks, uniform_mus, KsConfig, KsSolution};
pub use normalize::{normalize_fit, NormalizationKind, NormalizationSpec};
pub use series::make_linear_series;
pub use wave::{make_wave_dataset, wave_field, WAVE_C, WAVE_OMEGA, WAVE_X0};
