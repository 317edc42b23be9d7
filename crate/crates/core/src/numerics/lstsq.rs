//! Minimum-norm least squares through the SVD pseudoinverse.

use super::matrix::Matrix;
use super::svd::svd_thin;
use crate::error::Result;

/// Relative cutoff below which singular directions are dropped.
pub const LSTSQ_RCOND: f64 = 1e-12;

/// Least-squares solution with rank metadata.
#[derive(Debug, Clone)]
pub struct Lstsq {
    pub x: Matrix,
    /// Number of singular directions actually used.
    pub rank: usize,
    /// True when rank deficiency forced truncation of small singular values.
    pub truncated: bool,
}

/// Minimizes `||A x - b||_2` (minimum-norm solution when `A` is rank
/// deficient). Singular values below `1e-12 * sigma_max` are truncated and
/// reported through [`Lstsq::truncated`].
pub fn least_squares(a: &Matrix, b: &Matrix) -> Result<Lstsq> {
    a.ensure_finite("least-squares matrix")?;
    b.ensure_finite("least-squares rhs")?;
    let svd = svd_thin(a)?;
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let cutoff = smax * LSTSQ_RCOND;

    // x = V diag(1/s) U^T b over the retained directions.
    let utb = svd.u.matmul_tn(b);
    let mut rank = 0;
    let mut scaled = Matrix::zeros(utb.rows(), utb.cols());
    for i in 0..svd.s.len() {
        if svd.s[i] > cutoff && svd.s[i] > 0.0 {
            rank += 1;
            let inv = 1.0 / svd.s[i];
            for j in 0..utb.cols() {
                scaled[(i, j)] = utb[(i, j)] * inv;
            }
        }
    }
    let x = svd.v.matmul(&scaled);
    Ok(Lstsq {
        x,
        rank,
        truncated: rank < svd.s.len(),
    })
}
