//! Householder QR with column pivoting.

use super::matrix::Matrix;
use crate::error::Result;

/// Thin pivoted factorization `A P = Q R` with `Q: m x t`, `R: t x n`,
/// `t = min(m, n)`. `perm[j]` is the original index of the column that ends
/// up at position `j`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    pub q: Matrix,
    pub r: Matrix,
    pub perm: Vec<usize>,
}

/// Column-pivoted Householder QR. At each step the pivot is the remaining
/// column of largest trailing norm, ties broken by lowest column index, so
/// the permutation is deterministic and `|R[k,k]|` is non-increasing.
pub fn qr_column_pivot(a: &Matrix) -> Result<PivotedQr> {
    a.ensure_finite("qr input")?;
    let m = a.rows();
    let n = a.cols();
    let t = m.min(n);
    let mut work = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    // Householder vectors stored per step for forming Q afterwards.
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(t);

    for k in 0..t {
        // Recompute trailing column norms; strict `>` keeps the lowest index
        // on ties.
        let mut best_j = k;
        let mut best_norm = -1.0;
        for j in k..n {
            let norm2: f64 = (k..m).map(|i| work[(i, j)] * work[(i, j)]).sum();
            if norm2 > best_norm {
                best_norm = norm2;
                best_j = j;
            }
        }
        if best_j != k {
            work.swap_cols(k, best_j);
            perm.swap(k, best_j);
        }

        // Householder reflector zeroing work[k+1.., k].
        let norm = (k..m).map(|i| work[(i, k)] * work[(i, k)]).sum::<f64>().sqrt();
        let mut v = vec![0.0; m - k];
        if norm > 0.0 {
            let x0 = work[(k, k)];
            let alpha = if x0 >= 0.0 { -norm } else { norm };
            for (idx, i) in (k..m).enumerate() {
                v[idx] = work[(i, k)];
            }
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|x| x * x).sum();
            if vnorm2 > 0.0 {
                // Apply H = I - 2 v v^T / (v^T v) to the trailing block.
                for j in k..n {
                    let dot: f64 = (k..m).map(|i| v[i - k] * work[(i, j)]).sum();
                    let scale = 2.0 * dot / vnorm2;
                    for i in k..m {
                        work[(i, j)] -= scale * v[i - k];
                    }
                }
                work[(k, k)] = alpha;
                for i in k + 1..m {
                    work[(i, k)] = 0.0;
                }
            }
        }
        reflectors.push(v);
    }

    // R is the upper-trapezoidal part of the worked matrix.
    let mut r = Matrix::zeros(t, n);
    for i in 0..t {
        for j in i..n {
            r[(i, j)] = work[(i, j)];
        }
    }

    // Q = H_0 H_1 ... H_{t-1} applied to the first t columns of I.
    let mut q = Matrix::zeros(m, t);
    for j in 0..t {
        q[(j, j)] = 1.0;
    }
    for k in (0..t).rev() {
        let v = &reflectors[k];
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in 0..t {
            let dot: f64 = (k..m).map(|i| v[i - k] * q[(i, j)]).sum();
            let scale = 2.0 * dot / vnorm2;
            for i in k..m {
                q[(i, j)] -= scale * v[i - k];
            }
        }
    }

    Ok(PivotedQr { q, r, perm })
}

impl PivotedQr {
    /// Applies the stored permutation to the columns of `a`, i.e. `A P`.
    pub fn permute_cols(&self, a: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(a.rows(), self.perm.len());
        for (dst, &src) in self.perm.iter().enumerate() {
            for i in 0..a.rows() {
                out[(i, dst)] = a[(i, src)];
            }
        }
        out
    }
}
