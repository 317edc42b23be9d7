//! Dense linear algebra and seeded random sampling.
//!
//! Everything operates on small-to-moderate dense matrices in 64-bit floats.
//! All routines are pure given their inputs; [`RngState`] is single-owner.

mod eig;
mod lstsq;
mod matrix;
mod qr;
mod rng;
mod svd;

pub use eig::{eig_small, Eig, EIG_SIZE_CAP};
pub(crate) use eig::solve_complex;
pub use lstsq::{least_squares, Lstsq};
pub use matrix::{CMatrix, Matrix};
pub use qr::{qr_column_pivot, PivotedQr};
pub use rng::{sample, Distribution, RngState};
pub use svd::{svd_thin, Svd};
