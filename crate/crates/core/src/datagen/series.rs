//! Synthetic latent series with a planted linear spectrum.

use crate::error::{Error, Result};
use crate::numerics::{svd_thin, CMatrix, Matrix, RngState};
use num_complex::Complex64;

/// Builds a real `r x n_steps` latent series
/// `z_k = sum_j Re(2^(pair) modes_j alpha_j lambda_j^k)` from planted
/// discrete-time eigenvalues.
///
/// Complex eigenvalues must be given as upper-half-plane representatives
/// (`Im > 0`); each contributes together with its implicit conjugate, which
/// keeps the series real while spanning the two real directions a complex
/// pair needs. Random amplitudes stay bounded away from zero so every mode
/// is excited. `dt` is the (uniform) step spacing the series is understood
/// to be sampled at; it does not affect the generated values.
pub fn make_linear_series(
    eigs: &[Complex64],
    modes: &CMatrix,
    n_steps: usize,
    dt: f64,
    rng: &mut RngState,
) -> Result<Matrix> {
    if eigs.is_empty() || n_steps == 0 {
        return Err(Error::invalid("need at least one eigenvalue and one step"));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("dt must be positive"));
    }
    if modes.cols() != eigs.len() {
        return Err(Error::invalid(format!(
            "{} mode columns for {} eigenvalues",
            modes.cols(),
            eigs.len()
        )));
    }
    for &l in eigs {
        if l.norm() > 1.05 {
            return Err(Error::invalid(format!("eigenvalue modulus {} exceeds 1.05", l.norm())));
        }
        if l.im < 0.0 {
            return Err(Error::invalid(
                "complex eigenvalues must be upper-half-plane representatives (Im >= 0)",
            ));
        }
    }

    // Full column rank of the complex mode matrix, checked on the stacked
    // real form.
    let r = modes.rows();
    let stacked = Matrix::from_fn(2 * r, modes.cols(), |i, j| {
        if i < r {
            modes[(i, j)].re
        } else {
            modes[(i - r, j)].im
        }
    });
    let sv = svd_thin(&stacked)?;
    let smax = sv.s[0];
    if sv.s.len() < modes.cols() || sv.s[modes.cols() - 1] <= 1e-10 * smax {
        return Err(Error::invalid("mode matrix is rank deficient"));
    }

    // Random amplitudes with magnitude in [0.5, 1.5]; complex phase for
    // complex eigenvalues.
    let alphas: Vec<Complex64> = eigs
        .iter()
        .map(|l| {
            let mag = rng.uniform(0.5, 1.5);
            if l.im > 0.0 {
                let phase = rng.uniform(0.0, 2.0 * std::f64::consts::PI);
                Complex64::from_polar(mag, phase)
            } else {
                let sign = if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
                Complex64::new(sign * mag, 0.0)
            }
        })
        .collect();

    let mut series = Matrix::zeros(r, n_steps);
    for (j, (&lambda, &alpha)) in eigs.iter().zip(&alphas).enumerate() {
        let pair_factor = if lambda.im > 0.0 { 2.0 } else { 1.0 };
        let mut power = Complex64::new(1.0, 0.0);
        for k in 0..n_steps {
            let coeff = alpha * power;
            for i in 0..r {
                series[(i, k)] += pair_factor * (modes[(i, j)] * coeff).re;
            }
            power *= lambda;
        }
    }
    Ok(series)
}
