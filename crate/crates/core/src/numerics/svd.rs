//! Thin singular value decomposition via one-sided Jacobi rotations.

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Thin SVD `A = U diag(s) V^T` with `U: m x t`, `V: n x t`, `t = min(m, n)`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

const MAX_SWEEPS: usize = 60;
const ORTH_TOL: f64 = 1e-15;

/// Computes the thin SVD of `a`. Singular values are returned non-increasing
/// and non-negative; `u` and `v` have orthonormal columns.
///
/// One-sided Jacobiorthogonalizes the columns of a working copy and is
/// accurate for the moderate sizes this crate works with.
pub fn svd_thin(a: &Matrix) -> Result<Svd> {
    a.ensure_finite("svd input")?;
    if a.rows() == 0 || a.cols() == 0 {
        return Err(Error::invalid("svd requires at least a 1x1 matrix"));
    }
    if a.rows() < a.cols() {
        // Factor the transpose and swap the roles of U and V.
        let t = svd_thin(&a.transpose())?;
        return Ok(Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        });
    }

    let m = a.rows();
    let n = a.cols();
    let mut b = a.clone();
    let mut v = Matrix::identity(n);

    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..m {
                    let bp = b[(i, p)];
                    let bq = b[(i, q)];
                    alpha += bp * bp;
                    beta += bq * bq;
                    gamma += bp * bq;
                }
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if gamma.abs() <= ORTH_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let bp = b[(i, p)];
                    let bq = b[(i, q)];
                    b[(i, p)] = c * bp - s * bq;
                    b[(i, q)] = s * bp + c * bq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric {
            msg: "one-sided Jacobi SVD did not converge".into(),
            iterations: sweeps,
        });
    }

    // Column norms are the singular values; sort non-increasing.
    let mut sigma: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| b[(i, j)] * b[(i, j)]).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| sigma[y].partial_cmp(&sigma[x]).unwrap().then(x.cmp(&y)));

    let mut u = Matrix::zeros(m, n);
    let mut v_sorted = Matrix::zeros(n, n);
    let smax = sigma[order[0]];
    let zero_tol = smax * (m as f64) * f64::EPSILON;
    let mut zero_cols = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            v_sorted[(i, dst)] = v[(i, src)];
        }
        if sigma[src] > zero_tol {
            let inv = 1.0 / sigma[src];
            for i in 0..m {
                u[(i, dst)] = b[(i, src)] * inv;
            }
        } else {
            sigma[src] = 0.0;
            zero_cols.push(dst);
        }
    }
    // Complete U with orthonormal columns for exactly singular directions.
    for &dst in &zero_cols {
        let mut filled = false;
        for k in 0..m {
            let mut cand = vec![0.0; m];
            cand[k] = 1.0;
            for j in 0..n {
                if zero_cols.contains(&j) && j >= dst {
                    continue;
                }
                let dot: f64 = (0..m).map(|i| cand[i] * u[(i, j)]).sum();
                for i in 0..m {
                    cand[i] -= dot * u[(i, j)];
                }
            }
            let norm = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.5 {
                for i in 0..m {
                    u[(i, dst)] = cand[i] / norm;
                }
                filled = true;
                break;
            }
        }
        if !filled {
            return Err(Error::Numeric {
                msg: "failed to complete orthonormal basis for null singular directions".into(),
                iterations: sweeps,
            });
        }
    }

    let s: Vec<f64> = order.iter().map(|&j| sigma[j]).collect();
    Ok(Svd { u, s, v: v_sorted })
}

impl Svd {
    /// `U diag(s) V^T`.
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for j in 0..self.s.len() {
            for i in 0..us.rows() {
                us[(i, j)] *= self.s[j];
            }
        }
        us.matmul_nt(&self.v)
    }
}
