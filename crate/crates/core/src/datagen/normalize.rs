//! Per-column normalization with exact inverses.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Which normalization to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationKind {
    Standard,
    MinMaxSym,
    Identity,
}

/// A fitted column transform. `apply` followed by `invert` reproduces the
/// input to machine precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormalizationSpec {
    Identity,
    /// Zero mean, unit sample standard deviation.
    Standard { mean: f64, std: f64 },
    /// Maps `[min, max]` onto `[-1, 1]` symmetrically.
    MinMaxSym { min: f64, max: f64 },
}

impl NormalizationSpec {
    pub fn kind(&self) -> NormalizationKind {
        match self {
            NormalizationSpec::Identity => NormalizationKind::Identity,
            NormalizationSpec::Standard { .. } => NormalizationKind::Standard,
            NormalizationSpec::MinMaxSym { .. } => NormalizationKind::MinMaxSym,
        }
    }

    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        match *self {
            NormalizationSpec::Identity => v,
            NormalizationSpec::Standard { mean, std } => (v - mean) / std,
            NormalizationSpec::MinMaxSym { min, max } => {
                (v - (min + max) / 2.0) / ((max - min) / 2.0)
            }
        }
    }

    #[inline]
    pub fn invert(&self, v: f64) -> f64 {
        match *self {
            NormalizationSpec::Identity => v,
            NormalizationSpec::Standard { mean, std } => v * std + mean,
            NormalizationSpec::MinMaxSym { min, max } => {
                v * ((max - min) / 2.0) + (min + max) / 2.0
            }
        }
    }
}

/// Fits a column transform of the requested kind. Standard and MinMaxSym
/// require a non-constant column.
pub fn normalize_fit(kind: NormalizationKind, column: &[f64], col_index: usize) -> Result<NormalizationSpec> {
    if column.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "column {col_index} contains non-finite entries"
        )));
    }
    match kind {
        NormalizationKind::Identity => Ok(NormalizationSpec::Identity),
        NormalizationKind::Standard => {
            let n = column.len() as f64;
            if column.is_empty() {
                return Err(Error::invalid("cannot fit normalization on empty column"));
            }
            let mean = column.iter().sum::<f64>() / n;
            // Sample standard deviation (n - 1 denominator when possible).
            let denom = if column.len() > 1 { n - 1.0 } else { n };
            let var = column.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / denom;
            let std = var.sqrt();
            if std <= 0.0 {
                return Err(Error::DegenerateColumn {
                    column: col_index,
                    msg: "constant column cannot be standard-normalized".into(),
                });
            }
            Ok(NormalizationSpec::Standard { mean, std })
        }
        NormalizationKind::MinMaxSym => {
            let min = column.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if !(max > min) {
                return Err(Error::DegenerateColumn {
                    column: col_index,
                    msg: "constant column cannot be min-max normalized".into(),
                });
            }
            Ok(NormalizationSpec::MinMaxSym { min, max })
        }
    }
}
