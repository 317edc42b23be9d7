//! Weighted mean-squared-error loss.

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// `(1/M) sum_i w_i ||pred_i - target_i||^2` over rows, with `w_i = 1` when
/// no weights are given; otherwise the quadrature weights are normalized to
/// mean one over the provided rows. Exactly equal weights reduce to the
/// unweighted loss bit-for-bit.
pub fn mse_loss(pred: &Matrix, target: &Matrix, weights: Option<&[f64]>) -> Result<f64> {
    if pred.rows() != target.rows() || pred.cols() != target.cols() {
        return Err(Error::invalid(format!(
            "prediction {}x{} vs target {}x{}",
            pred.rows(),
            pred.cols(),
            target.rows(),
            target.cols()
        )));
    }
    let m = pred.rows();
    if m == 0 {
        return Ok(0.0);
    }
    let norm = normalized_weights(weights, m)?;
    let mut acc = 0.0;
    for i in 0..m {
        let mut row = 0.0;
        for (p, t) in pred.row(i).iter().zip(target.row(i)) {
            let d = p - t;
            row += d * d;
        }
        acc += match &norm {
            Some(w) => w[i] * row,
            None => row,
        };
    }
    Ok(acc / m as f64)
}

/// Gradient of [`mse_loss`] with respect to the predictions:
/// `(2/M) w_i (pred_i - target_i)`.
pub fn mse_upstream(pred: &Matrix, target: &Matrix, weights: Option<&[f64]>) -> Result<Matrix> {
    if pred.rows() != target.rows() || pred.cols() != target.cols() {
        return Err(Error::invalid("upstream shape mismatch"));
    }
    let m = pred.rows();
    let norm = normalized_weights(weights, m)?;
    let mut d = pred.sub(target);
    let scale = 2.0 / m as f64;
    for i in 0..m {
        let w = norm.as_ref().map_or(1.0, |w| w[i]);
        for v in d.row_mut(i) {
            *v *= scale * w;
        }
    }
    Ok(d)
}

fn normalized_weights(weights: Option<&[f64]>, m: usize) -> Result<Option<Vec<f64>>> {
    let Some(w) = weights else { return Ok(None) };
    if w.len() != m {
        return Err(Error::invalid(format!("{} weights for {m} rows", w.len())));
    }
    if w.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::invalid("weights must be strictly positive"));
    }
    let (lo, hi) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if lo == hi {
        // All-equal weights are exactly the unweighted case.
        return Ok(None);
    }
    let mean = w.iter().sum::<f64>() / m as f64;
    Ok(Some(w.iter().map(|&v| v / mean).collect()))
}
