//! Closed-form 1D modulated traveling wave dataset.

use super::dataset::{PointCloudDataset, PointCloudSchema};
use super::normalize::NormalizationKind;
use crate::error::Result;
use crate::numerics::Matrix;

/// Packet speed.
pub const WAVE_C: f64 = 0.012;
/// Carrier frequency.
pub const WAVE_OMEGA: f64 = 70.0;
/// Initial packet center; keeps the packet inside `[0, 1]` for `t` up to 70.
pub const WAVE_X0: f64 = 0.1;

/// `u(x, t) = exp(-1000 (x - x0 - c t)^2) sin(omega (x - x0 - c t))`.
pub fn wave_field(x: f64, t: f64) -> f64 {
    let s = x - WAVE_X0 - WAVE_C * t;
    (-1000.0 * s * s).exp() * (WAVE_OMEGA * s).sin()
}

/// 300 uniform spatial samples on `[0, 1]` times 20 uniform times on
/// `[0, 70]` (endpoints included), standard-normalized per column.
pub fn make_wave_dataset() -> Result<PointCloudDataset> {
    let nx = 300;
    let nt = 20;
    let mut raw = Matrix::zeros(nx * nt, 3);
    let mut row = 0;
    for ti in 0..nt {
        let t = 70.0 * ti as f64 / (nt - 1) as f64;
        for xi in 0..nx {
            let x = xi as f64 / (nx - 1) as f64;
            raw[(row, 0)] = t;
            raw[(row, 1)] = x;
            raw[(row, 2)] = wave_field(x, t);
            row += 1;
        }
    }
    let schema = PointCloudSchema::new(0, 1, 1, 1, false)?;
    PointCloudDataset::from_raw(schema, raw, NormalizationKind::Standard)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_count_is_6000() {
        let ds = make_wave_dataset().unwrap();
        assert_eq!(ds.n_rows(), 6000);
        assert_eq!(ds.schema.n_cols(), 3);
    }

    #[test]
    fn packet_center_is_a_zero() {
        // Exact at t = 0; for other times the center coordinate itself
        // rounds, leaving the zero correct to a few ulps.
        assert_eq!(wave_field(WAVE_X0, 0.0), 0.0);
        for &t in &[13.7, 42.0, 70.0] {
            assert!(wave_field(WAVE_X0 + WAVE_C * t, t).abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_decay_at_tenth() {
        // |x - x0 - c t| = 0.1 puts the envelope at e^-10 of its peak.
        let t = 5.0;
        let x = WAVE_X0 + WAVE_C * t + 0.1;
        let envelope = wave_field(x, t) / (WAVE_OMEGA * 0.1).sin();
        assert!((envelope - (-10.0f64).exp()).abs() < 1e-12);
        assert!((envelope - 4.54e-5).abs() < 1e-7);
    }
}
