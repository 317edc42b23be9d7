//! Eigen decomposition of small square real matrices.
//!
//! Intended for reduced operators only (the cap is [`EIG_SIZE_CAP`]).
//! The matrix is reduced to Hessenberg form, eigenvalues come from a
//! complex single-shift QR iteration, and eigenvectors from shifted inverse
//! iteration on the original matrix.

use super::matrix::{CMatrix, Matrix};
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Largest matrix size accepted by [`eig_small`].
pub const EIG_SIZE_CAP: usize = 128;

/// Eigen pairs, ordered by non-increasing eigenvalue modulus.
#[derive(Debug, Clone)]
pub struct Eig {
    pub values: Vec<Complex64>,
    /// Column `j` is the (unit 2-norm) eigenvector for `values[j]`.
    pub vectors: CMatrix,
}

/// Computes all eigenpairs of a real square matrix of size at most
/// [`EIG_SIZE_CAP`]. Each returned pair satisfies
/// `||A v - lambda v|| <= ~1e-8 ||A||`.
pub fn eig_small(a: &Matrix) -> Result<Eig> {
    if a.rows() != a.cols() {
        return Err(Error::invalid(format!(
            "eig_small requires a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n == 0 {
        return Err(Error::invalid("eig_small requires a non-empty matrix"));
    }
    if n > EIG_SIZE_CAP {
        return Err(Error::invalid(format!(
            "eig_small size {n} exceeds the cap {EIG_SIZE_CAP}; only reduced operators are eigendecomposed"
        )));
    }
    a.ensure_finite("eig input")?;

    let scale = a.frobenius_norm().max(1e-300);
    let values = if n == 1 {
        vec![Complex64::new(a[(0, 0)], 0.0)]
    } else {
        let h = hessenberg(a);
        qr_eigenvalues(&h, scale)?
    };

    // Sort by non-increasing modulus; ties keep discovery order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].norm().partial_cmp(&values[i].norm()).unwrap().then(i.cmp(&j)));
    let values: Vec<Complex64> = order.iter().map(|&i| values[i]).collect();

    let ac = CMatrix::from_real(a);
    let mut vectors = CMatrix::zeros(n, n);
    for (idx, &lambda) in values.iter().enumerate() {
        let v = inverse_iteration(&ac, lambda, scale, idx)?;
        for i in 0..n {
            vectors[(i, idx)] = v[i];
        }
    }

    Ok(Eig { values, vectors })
}

/// Householder reduction to upper Hessenberg form (eigenvalues preserved).
fn hessenberg(a: &Matrix) -> CMatrix {
    let n = a.rows();
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        let norm: f64 = (k + 1..n).map(|i| h[(i, k)] * h[(i, k)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; n - k - 1];
        for (idx, i) in (k + 1..n).enumerate() {
            v[idx] = h[(i, k)];
        }
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // H <- P H P with P = I - 2 v v^T / v^T v acting on rows/cols k+1..
        for j in 0..n {
            let dot: f64 = (k + 1..n).map(|i| v[i - k - 1] * h[(i, j)]).sum();
            let s = 2.0 * dot / vnorm2;
            for i in k + 1..n {
                h[(i, j)] -= s * v[i - k - 1];
            }
        }
        for i in 0..n {
            let dot: f64 = (k + 1..n).map(|j| h[(i, j)] * v[j - k - 1]).sum();
            let s = 2.0 * dot / vnorm2;
            for j in k + 1..n {
                h[(i, j)] -= s * v[j - k - 1];
            }
        }
    }
    CMatrix::from_real(&h)
}

/// Complex single-shift QR iteration on a Hessenberg matrix.
fn qr_eigenvalues(h0: &CMatrix, scale: f64) -> Result<Vec<Complex64>> {
    let n = h0.rows();
    let mut h = h0.clone();
    let mut values = vec![Complex64::new(0.0, 0.0); n];
    let mut m = n;
    let eps = f64::EPSILON * 8.0;
    let mut total_iters = 0usize;
    let max_iters = 60 * n;

    while m > 0 {
        if m == 1 {
            values[0] = h[(0, 0)];
            break;
        }
        // Deflate converged subdiagonal entries at the bottom of the block.
        let sub = h[(m - 1, m - 2)].norm();
        let local = h[(m - 1, m - 1)].norm() + h[(m - 2, m - 2)].norm();
        if sub <= eps * local.max(scale * f64::EPSILON) {
            values[m - 1] = h[(m - 1, m - 1)];
            m -= 1;
            continue;
        }
        total_iters += 1;
        if total_iters > max_iters {
            return Err(Error::Numeric {
                msg: "QR eigenvalue iteration did not converge".into(),
                iterations: total_iters,
            });
        }

        // Wilkinson shift from the trailing 2x2 block.
        let a11 = h[(m - 2, m - 2)];
        let a12 = h[(m - 2, m - 1)];
        let a21 = h[(m - 1, m - 2)];
        let a22 = h[(m - 1, m - 1)];
        let tr = a11 + a22;
        let det = a11 * a22 - a12 * a21;
        let disc = (tr * tr - det * 4.0).sqrt();
        let l1 = (tr + disc) * 0.5;
        let l2 = (tr - disc) * 0.5;
        let mut mu = if (l1 - a22).norm() <= (l2 - a22).norm() { l1 } else { l2 };
        // Exceptional shift every 12 stalls to break symmetry cycles.
        if total_iters % 13 == 12 {
            mu += Complex64::new(sub, 0.0);
        }

        // Explicit shifted QR step on the active block via Givens rotations.
        for i in 0..m {
            h[(i, i)] -= mu;
        }
        let mut rotations: Vec<(Complex64, Complex64)> = Vec::with_capacity(m - 1);
        for k in 0..m - 1 {
            let x = h[(k, k)];
            let y = h[(k + 1, k)];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (c, s) = if r == 0.0 {
                (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
            } else {
                (x.conj() / r, y.conj() / r)
            };
            // Apply G to rows k, k+1 over the active columns.
            for j in k..m {
                let hk = h[(k, j)];
                let hk1 = h[(k + 1, j)];
                h[(k, j)] = c * hk + s * hk1;
                h[(k + 1, j)] = -s.conj() * hk + c.conj() * hk1;
            }
            rotations.push((c, s));
        }
        // Form R Q by applying the conjugated rotations on the right.
        for (k, &(c, s)) in rotations.iter().enumerate() {
            for i in 0..(k + 2).min(m) {
                let hik = h[(i, k)];
                let hik1 = h[(i, k + 1)];
                h[(i, k)] = hik * c.conj() + hik1 * s.conj();
                h[(i, k + 1)] = -hik * s + hik1 * c;
            }
        }
        for i in 0..m {
            h[(i, i)] += mu;
        }
    }
    Ok(values)
}

/// Shifted inverse iteration for one eigenvector. `idx` varies the shift
/// perturbation and the starting vector so repeated eigenvalues still yield
/// usable vectors.
fn inverse_iteration(a: &CMatrix, lambda: Complex64, scale: f64, idx: usize) -> Result<Vec<Complex64>> {
    let n = a.rows();
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    for attempt in 0..n.min(8) {
        let delta = scale * 1e-11 * (1.0 + 0.37 * (idx + attempt) as f64);
        let shift = lambda + Complex64::new(delta, delta * 0.5);
        let mut m = a.clone();
        for i in 0..n {
            m[(i, i)] -= shift;
        }
        let lu = match complex_lu(&mut m) {
            Ok(lu) => lu,
            Err(_) => continue,
        };
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[(idx + attempt) % n] = Complex64::new(1.0, 0.0);
        for _ in 0..3 {
            lu_solve_in_place(&m, &lu, &mut v);
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                break;
            }
            for z in &mut v {
                *z /= norm;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.5) {
            continue;
        }
        // Residual ||A v - lambda v||.
        let mut res = 0.0f64;
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                acc += a[(i, j)] * v[j];
            }
            res += (acc - lambda * v[i]).norm_sqr();
        }
        let res = res.sqrt();
        if best.as_ref().map_or(true, |(r, _)| res < *r) {
            best = Some((res, v));
        }
        if best.as_ref().unwrap().0 <= 1e-10 * scale {
            break;
        }
    }
    match best {
        Some((res, v)) if res <= 1e-8 * scale => Ok(v),
        Some((res, _)) => Err(Error::Numeric {
            msg: format!("inverse iteration residual {res:.3e} exceeds tolerance"),
            iterations: 3,
        }),
        None => Err(Error::Numeric {
            msg: "inverse iteration failed to produce a vector".into(),
            iterations: 3,
        }),
    }
}

/// In-place complex LU with partial pivoting; returns the pivot order.
fn complex_lu(m: &mut CMatrix) -> Result<Vec<usize>> {
    let n = m.rows();
    let mut piv: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut pmax = m[(k, k)].norm();
        for i in k + 1..n {
            let v = m[(i, k)].norm();
            if v > pmax {
                pmax = v;
                p = i;
            }
        }
        if pmax == 0.0 {
            return Err(Error::Numeric {
                msg: "singular matrix in complex LU".into(),
                iterations: k,
            });
        }
        if p != k {
            for j in 0..n {
                let tmp = m[(k, j)];
                m[(k, j)] = m[(p, j)];
                m[(p, j)] = tmp;
            }
            piv.swap(k, p);
        }
        let inv = Complex64::new(1.0, 0.0) / m[(k, k)];
        for i in k + 1..n {
            let f = m[(i, k)] * inv;
            m[(i, k)] = f;
            for j in k + 1..n {
                let sub = f * m[(k, j)];
                m[(i, j)] -= sub;
            }
        }
    }
    Ok(piv)
}

fn lu_solve_in_place(m: &CMatrix, piv: &[usize], b: &mut [Complex64]) {
    let n = m.rows();
    let permuted: Vec<Complex64> = piv.iter().map(|&p| b[p]).collect();
    b.copy_from_slice(&permuted);
    for i in 1..n {
        for j in 0..i {
            let sub = m[(i, j)] * b[j];
            b[i] -= sub;
        }
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            let sub = m[(i, j)] * b[j];
            b[i] -= sub;
        }
        b[i] /= m[(i, i)];
    }
}

/// Solves the complex square system `M x = b` by LU with partial pivoting.
/// Used by the reduction suite for small mode-amplitude systems.
pub(crate) fn solve_complex(m: &CMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut work = m.clone();
    let piv = complex_lu(&mut work)?;
    let mut x = b.to_vec();
    lu_solve_in_place(&work, &piv, &mut x);
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(a: &Matrix, eig: &Eig) -> f64 {
        let n = a.rows();
        let ac = CMatrix::from_real(a);
        let mut worst = 0.0f64;
        for (j, &lambda) in eig.values.iter().enumerate() {
            let mut res = 0.0;
            for i in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += ac[(i, k)] * eig.vectors[(k, j)];
                }
                res += (acc - lambda * eig.vectors[(i, j)]).norm_sqr();
            }
            worst = worst.max(res.sqrt());
        }
        worst
    }

    #[test]
    fn diagonal_eigenvalues() {
        let mut a = Matrix::zeros(2, 2);
        a[(0, 0)] = 3.0;
        a[(1, 1)] = 1.0;
        let eig = eig_small(&a).unwrap();
        assert!((eig.values[0] - Complex64::new(3.0, 0.0)).norm() < 1e-10);
        assert!((eig.values[1] - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        assert!(residual(&a, &eig) < 1e-8 * a.frobenius_norm());
    }

    #[test]
    fn rotation_gives_complex_pair() {
        let theta = 0.7f64;
        let mut a = Matrix::zeros(2, 2);
        a[(0, 0)] = theta.cos();
        a[(0, 1)] = -theta.sin();
        a[(1, 0)] = theta.sin();
        a[(1, 1)] = theta.cos();
        let eig = eig_small(&a).unwrap();
        let expect = Complex64::new(theta.cos(), theta.sin());
        let found_plus = eig.values.iter().any(|&l| (l - expect).norm() < 1e-10);
        let found_minus = eig.values.iter().any(|&l| (l - expect.conj()).norm() < 1e-10);
        assert!(found_plus && found_minus);
        assert!(residual(&a, &eig) < 1e-8 * a.frobenius_norm());
    }

    #[test]
    fn random_6x6_satisfies_multiplication_oracle() {
        let mut rng = crate::numerics::RngState::new(31);
        let a = Matrix::from_fn(6, 6, |_, _| rng.uniform(-1.0, 1.0));
        let eig = eig_small(&a).unwrap();
        assert!(residual(&a, &eig) < 1e-8 * a.frobenius_norm());
        for w in eig.values.windows(2) {
            assert!(w[0].norm() + 1e-12 >= w[1].norm());
        }
    }

    #[test]
    fn repeated_eigenvalues_identity() {
        let a = Matrix::identity(4);
        let eig = eig_small(&a).unwrap();
        for &l in &eig.values {
            assert!((l - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        }
        assert!(residual(&a, &eig) < 1e-8 * 2.0);
    }

    #[test]
    fn non_square_and_oversize_rejected() {
        assert!(eig_small(&Matrix::zeros(2, 3)).is_err());
        assert!(eig_small(&Matrix::zeros(EIG_SIZE_CAP + 1, EIG_SIZE_CAP + 1)).is_err());
    }

    #[test]
    fn moderate_size_random() {
        let mut rng = crate::numerics::RngState::new(77);
        let a = Matrix::from_fn(24, 24, |_, _| rng.uniform(-1.0, 1.0));
        let eig = eig_small(&a).unwrap();
        assert!(residual(&a, &eig) < 1e-8 * a.frobenius_norm());
    }
}
