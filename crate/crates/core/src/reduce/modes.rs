//! Quadrature normalization of learned spatial basis functions.
//!
//! A trained last-layer hypernetwork realizes `u = sum_i a_i(t) phi_i(x)`
//! with the `phi_i` given by the static spatial network's feature layer.
//! Normalizing each mode by `c_i = sqrt(sum_q w_q phi_i(x_q)^2)` and scaling
//! the latent series to `zeta_i(t) = c_i a_i(t)` leaves the reconstruction
//! unchanged while giving every basis function unit weighted norm.

use crate::error::{Error, Result};
use crate::nets::{NifModel, ParamTarget};
use crate::numerics::Matrix;

/// Normalization constants, a normalized-basis evaluator, and the scaled
/// latent series.
#[derive(Debug, Clone)]
pub struct NormalizedModes {
    pub c: Vec<f64>,
    /// `zeta_i(t) = c_i a_i(t)`, same shape as the input series.
    pub series_scaled: Matrix,
    model: NifModel,
}

impl NormalizedModes {
    /// Evaluates the normalized basis functions at arbitrary points:
    /// row `b` holds `phi~_1(x_b) ... phi~_r(x_b)`.
    pub fn eval_basis(&self, points: &Matrix) -> Result<Matrix> {
        if points.cols() != self.model.d_space() {
            return Err(Error::invalid(format!(
                "points have width {}, spatial dimension is {}",
                points.cols(),
                self.model.d_space()
            )));
        }
        let mut feats = self.model.static_features(points);
        for b in 0..feats.rows() {
            for (f, c) in feats.row_mut(b).iter_mut().zip(&self.c) {
                *f /= c;
            }
        }
        Ok(feats)
    }
}

/// Quadrature core: weighted norms of feature columns.
/// `features` is `Q x r` (one row per quadrature point); weights must be
/// strictly positive.
pub fn mode_norm_constants(features: &Matrix, weights: &[f64]) -> Result<Vec<f64>> {
    if weights.len() != features.rows() {
        return Err(Error::invalid(format!(
            "{} weights for {} quadrature points",
            weights.len(),
            features.rows()
        )));
    }
    if weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::invalid("quadrature weights must be strictly positive"));
    }
    let r = features.cols();
    let mut c = vec![0.0; r];
    for q in 0..features.rows() {
        let w = weights[q];
        for (acc, &f) in c.iter_mut().zip(features.row(q)) {
            *acc += w * f * f;
        }
    }
    for (i, v) in c.iter_mut().enumerate() {
        *v = v.sqrt();
        if *v < 1e-12 {
            return Err(Error::DegenerateColumn {
                column: i,
                msg: format!("mode {i} has weighted norm {v:.3e}"),
            });
        }
    }
    Ok(c)
}

/// Normalizes the spatial modes of a last-layer model over the given
/// quadrature rule and scales the latent series accordingly. `series` is
/// `r x M_t` with row `i` carrying `a_i(t)`.
pub fn nif_modes_normalize(
    model: &NifModel,
    quad_points: &Matrix,
    quad_weights: &[f64],
    series: &Matrix,
) -> Result<NormalizedModes> {
    if model.param_cfg().target != ParamTarget::LastLayer {
        return Err(Error::UnsupportedConfiguration(
            "mode normalization requires a last-layer parameterized model".into(),
        ));
    }
    let r = model.shape_cfg().width;
    if series.rows() != r {
        return Err(Error::invalid(format!(
            "latent series has {} rows, model has r = {r}",
            series.rows()
        )));
    }
    let feats = model.static_features(quad_points);
    let c = mode_norm_constants(&feats, quad_weights)?;
    let mut series_scaled = series.clone();
    for i in 0..r {
        for t in 0..series.cols() {
            series_scaled[(i, t)] *= c[i];
        }
    }
    Ok(NormalizedModes { c, series_scaled, model: model.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::{Activation, BlockStyle, ParameterNetConfig, ShapeNetConfig};
    use crate::numerics::RngState;

    #[test]
    fn constant_unit_feature_has_unit_norm() {
        // phi = 1 everywhere with weights summing to one gives c = 1.
        let features = Matrix::from_fn(50, 1, |_, _| 1.0);
        let weights = vec![1.0 / 50.0; 50];
        let c = mode_norm_constants(&features, &weights).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn scaling_a_mode_scales_its_constant() {
        let mut rng = RngState::new(1);
        let features = Matrix::from_fn(40, 2, |_, _| rng.uniform(-1.0, 1.0));
        let weights: Vec<f64> = (0..40).map(|_| rng.uniform(0.1, 1.0)).collect();
        let c = mode_norm_constants(&features, &weights).unwrap();
        let mut doubled = features.clone();
        for q in 0..40 {
            doubled[(q, 1)] *= 2.0;
        }
        let c2 = mode_norm_constants(&doubled, &weights).unwrap();
        assert!((c2[0] - c[0]).abs() < 1e-14);
        assert!((c2[1] - 2.0 * c[1]).abs() < 1e-12);
    }

    #[test]
    fn degenerate_mode_is_reported() {
        let features = Matrix::zeros(10, 2);
        let weights = vec![0.1; 10];
        assert!(mode_norm_constants(&features, &weights).is_err());
    }

    fn trained_like_model(rng: &mut RngState) -> NifModel {
        let shape = ShapeNetConfig {
            d_in: 1,
            width: 4,
            n_blocks: 1,
            d_out: 1,
            activation: Activation::sine(30.0),
            block_style: BlockStyle::ResNetHalfSum,
        };
        let pn = ParameterNetConfig::new(1, vec![6], 4, Activation::Swish, ParamTarget::LastLayer);
        NifModel::init(shape, pn, rng).unwrap()
    }

    #[test]
    fn normalized_basis_has_unit_weighted_norm() {
        let mut rng = RngState::new(2);
        let model = trained_like_model(&mut rng);
        let quad = Matrix::from_fn(200, 1, |i, _| -1.0 + 2.0 * i as f64 / 199.0);
        let weights = vec![2.0 / 200.0; 200];
        let series = Matrix::from_fn(4, 10, |_, _| rng.uniform(-1.0, 1.0));
        let modes = nif_modes_normalize(&model, &quad, &weights, &series).unwrap();
        let basis = modes.eval_basis(&quad).unwrap();
        let norms = mode_norm_constants(&basis, &weights).unwrap();
        for n in norms {
            assert!((n - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn reconstruction_is_invariant_under_normalization() {
        let mut rng = RngState::new(3);
        let model = trained_like_model(&mut rng);
        let quad = Matrix::from_fn(100, 1, |i, _| -1.0 + 2.0 * i as f64 / 99.0);
        let weights = vec![2.0 / 100.0; 100];
        let series = Matrix::from_fn(4, 7, |_, _| rng.uniform(-1.0, 1.0));
        let modes = nif_modes_normalize(&model, &quad, &weights, &series).unwrap();

        let points = Matrix::from_fn(100, 1, |_, _| rng.uniform(-1.0, 1.0));
        let raw_feats = model.static_features(&points);
        let norm_feats = modes.eval_basis(&points).unwrap();
        for t in 0..7 {
            for b in 0..points.rows() {
                let mut raw = 0.0;
                let mut renorm = 0.0;
                for i in 0..4 {
                    raw += series[(i, t)] * raw_feats[(b, i)];
                    renorm += modes.series_scaled[(i, t)] * norm_feats[(b, i)];
                }
                assert!((raw - renorm).abs() < 1e-10, "t {t} point {b}");
            }
        }
    }

    #[test]
    fn refined_quadrature_changes_constants_little() {
        // Smooth integrand: rectangles at 200 vs 2000 points agree to a
        // fraction of a percent.
        let mut rng = RngState::new(4);
        let model = trained_like_model(&mut rng);
        let coarse = Matrix::from_fn(200, 1, |i, _| -1.0 + 2.0 * (i as f64 + 0.5) / 200.0);
        let fine = Matrix::from_fn(2000, 1, |i, _| -1.0 + 2.0 * (i as f64 + 0.5) / 2000.0);
        let series = Matrix::zeros(4, 2);
        let mc = nif_modes_normalize(&model, &coarse, &vec![2.0 / 200.0; 200], &series).unwrap();
        let mf = nif_modes_normalize(&model, &fine, &vec![2.0 / 2000.0; 2000], &series).unwrap();
        for (a, b) in mc.c.iter().zip(&mf.c) {
            assert!((a - b).abs() / b < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn full_mode_model_is_rejected() {
        let mut rng = RngState::new(5);
        let shape = ShapeNetConfig {
            d_in: 1,
            width: 3,
            n_blocks: 0,
            d_out: 1,
            activation: Activation::Swish,
            block_style: BlockStyle::PlainChain,
        };
        let pn = ParameterNetConfig::new(1, vec![4], 2, Activation::Swish, ParamTarget::Full);
        let model = NifModel::init(shape, pn, &mut rng).unwrap();
        let quad = Matrix::zeros(5, 1);
        assert!(nif_modes_normalize(&model, &quad, &[1.0; 5], &Matrix::zeros(3, 2)).is_err());
    }
}
