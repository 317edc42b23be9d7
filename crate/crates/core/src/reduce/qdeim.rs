//! Sensor selection by column-pivoted QR of the transposed basis and
//! least-squares field reconstruction from the selected rows.

use crate::error::{Error, Result};
use crate::numerics::{least_squares, qr_column_pivot, svd_thin, Matrix};

const COND_LIMIT: f64 = 1e12;

/// Selected measurement rows, best first, with the canonical sparse
/// measurement matrix.
#[derive(Debug, Clone)]
pub struct QdeimSelection {
    pub indices: Vec<usize>,
    /// `p x M_x`, one unit entry per row.
    pub c: Matrix,
}

/// Picks `p` sensor rows as the first `p` pivots of the column-pivoted QR
/// of `Psi_r^T`. The paper's experiments tie the sensor count to the basis
/// rank, so `p != r` is rejected with a pointer to refit at rank `p`.
pub fn qdeim_select(psi_r: &Matrix, p: usize) -> Result<QdeimSelection> {
    let r = psi_r.cols();
    if p != r {
        return Err(Error::UnsupportedConfiguration(format!(
            "p = {p} sensors requested for a rank-{r} basis; refit the decomposition at rank {p} instead"
        )));
    }
    // The basis must have orthonormal columns.
    let gram = psi_r.matmul_tn(psi_r);
    for i in 0..r {
        for j in 0..r {
            let expect = if i == j { 1.0 } else { 0.0 };
            if (gram[(i, j)] - expect).abs() > 1e-8 {
                return Err(Error::invalid("basis columns are not orthonormal"));
            }
        }
    }
    let qr = qr_column_pivot(&psi_r.transpose())?;
    let indices: Vec<usize> = qr.perm[..p].to_vec();
    let mut c = Matrix::zeros(p, psi_r.rows());
    for (row, &idx) in indices.iter().enumerate() {
        c[(row, idx)] = 1.0;
    }
    Ok(QdeimSelection { indices, c })
}

/// Reconstructs the full field from sensor values:
/// `u_hat = Psi_r (C Psi_r)^+ y`.
pub fn deim_reconstruct(sel: &QdeimSelection, psi_r: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != sel.indices.len() {
        return Err(Error::invalid(format!(
            "{} sensor values for {} sensors",
            y.len(),
            sel.indices.len()
        )));
    }
    // C Psi_r is just the selected rows of the basis.
    let cpsi = Matrix::from_fn(sel.indices.len(), psi_r.cols(), |i, j| psi_r[(sel.indices[i], j)]);
    let sv = svd_thin(&cpsi)?;
    let smin = sv.s.last().copied().unwrap_or(0.0);
    let cond = if smin > 0.0 { sv.s[0] / smin } else { f64::INFINITY };
    if !(cond < COND_LIMIT) {
        return Err(Error::Conditioning { cond });
    }
    let rhs = Matrix::column(y);
    let sol = least_squares(&cpsi, &rhs)?;
    let full = psi_r.matmul(&sol.x);
    Ok(full.col_vec(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngState;

    /// Orthonormal basis from the left factor of a random matrix.
    fn random_orthonormal(rng: &mut RngState, m: usize, r: usize) -> Matrix {
        let a = Matrix::from_fn(m, r, |_, _| rng.uniform(-1.0, 1.0));
        let svd = svd_thin(&a).unwrap();
        Matrix::from_fn(m, r, |i, j| svd.u[(i, j)])
    }

    #[test]
    fn canonical_basis_selects_its_own_rows() {
        let mut psi = Matrix::zeros(8, 3);
        psi[(5, 0)] = 1.0;
        psi[(2, 1)] = 1.0;
        psi[(7, 2)] = 1.0;
        let sel = qdeim_select(&psi, 3).unwrap();
        let mut sorted = sel.indices.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![2, 5, 7]);
        // C has exactly one unit entry per row.
        for i in 0..3 {
            let row = sel.c.row(i);
            assert_eq!(row.iter().filter(|&&v| v != 0.0).count(), 1);
            assert_eq!(row[sel.indices[i]], 1.0);
        }
    }

    #[test]
    fn selection_matches_qr_pivot_prefix() {
        let mut rng = RngState::new(9);
        let psi = random_orthonormal(&mut rng, 20, 4);
        let sel = qdeim_select(&psi, 4).unwrap();
        let qr = qr_column_pivot(&psi.transpose()).unwrap();
        assert_eq!(sel.indices, qr.perm[..4]);
    }

    #[test]
    fn selection_is_deterministic() {
        let mut rng = RngState::new(10);
        let psi = random_orthonormal(&mut rng, 40, 5);
        let a = qdeim_select(&psi, 5).unwrap();
        let b = qdeim_select(&psi, 5).unwrap();
        assert_eq!(a.indices, b.indices);
    }

    #[test]
    fn mismatched_sensor_count_names_the_remedy() {
        let mut rng = RngState::new(11);
        let psi = random_orthonormal(&mut rng, 10, 3);
        let err = qdeim_select(&psi, 2).unwrap_err();
        assert!(err.to_string().contains("refit"), "{err}");
    }

    #[test]
    fn beats_median_of_random_selections() {
        // The pivoted choice should be no worse than the median random
        // 3-sensor subset as measured by ||(C Psi)^-1||_2.
        let mut rng = RngState::new(12);
        let psi = random_orthonormal(&mut rng, 30, 3);
        let inv_norm = |rows: &[usize]| -> f64 {
            let sub = Matrix::from_fn(3, 3, |i, j| psi[(rows[i], j)]);
            let sv = svd_thin(&sub).unwrap();
            let smin = sv.s[2];
            if smin > 0.0 {
                1.0 / smin
            } else {
                f64::INFINITY
            }
        };
        let sel = qdeim_select(&psi, 3).unwrap();
        let chosen = inv_norm(&sel.indices);
        let mut samples: Vec<f64> = Vec::with_capacity(1000);
        for _ in 0..1000 {
            let mut rows = [0usize; 3];
            loop {
                for r in rows.iter_mut() {
                    *r = (rng.next_u64() % 30) as usize;
                }
                if rows[0] != rows[1] && rows[0] != rows[2] && rows[1] != rows[2] {
                    break;
                }
            }
            samples.push(inv_norm(&rows));
        }
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = samples[500];
        assert!(chosen <= median, "chosen {chosen} vs median {median}");
    }

    #[test]
    fn planted_subspace_reconstructs_exactly() {
        let mut rng = RngState::new(13);
        let psi = random_orthonormal(&mut rng, 25, 4);
        let sel = qdeim_select(&psi, 4).unwrap();
        // A field exactly inside the span.
        let coeff = Matrix::from_fn(4, 1, |i, _| 0.5 + i as f64);
        let truth = psi.matmul(&coeff).col_vec(0);
        let y: Vec<f64> = sel.indices.iter().map(|&i| truth[i]).collect();
        let recon = deim_reconstruct(&sel, &psi, &y).unwrap();
        let scale = truth.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in recon.iter().zip(&truth) {
            assert!((a - b).abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn zero_measurements_give_zero_field() {
        let mut rng = RngState::new(14);
        let psi = random_orthonormal(&mut rng, 12, 3);
        let sel = qdeim_select(&psi, 3).unwrap();
        let recon = deim_reconstruct(&sel, &psi, &[0.0, 0.0, 0.0]).unwrap();
        assert!(recon.iter().all(|&v| v.abs() < 1e-14));
    }

    #[test]
    fn all_sensors_is_the_orthogonal_projection() {
        // p = r = M_x: reconstruction equals Psi Psi^T u for any u.
        let mut rng = RngState::new(15);
        let psi = random_orthonormal(&mut rng, 4, 4);
        let sel = qdeim_select(&psi, 4).unwrap();
        let u: Vec<f64> = (0..4).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let y: Vec<f64> = sel.indices.iter().map(|&i| u[i]).collect();
        let recon = deim_reconstruct(&sel, &psi, &y).unwrap();
        let proj = psi.matmul(&psi.matmul_tn(&Matrix::column(&u)));
        for i in 0..4 {
            assert!((recon[i] - proj[(i, 0)]).abs() < 1e-10);
        }
    }
}
