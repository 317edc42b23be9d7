//! Central-difference verification of the hand-rolled reverse mode.

use super::loss::{mse_loss, mse_upstream};
use crate::error::{Error, Result};
use crate::nets::Model;
use crate::numerics::Matrix;

/// Compares the analytic MSE gradient against central differences on every
/// trainable coordinate and returns the worst discrepancy.
///
/// Per-coordinate error is `|analytic - fd| / max(|analytic|, |fd|, 0.01)`:
/// components below ~1e-2 are held to the absolute standard `tol * 1e-2`
/// because f64 central differences cannot resolve finer than roughly
/// `eps * |loss| / h` there.
pub fn grad_check(model: &mut dyn Model, inputs: &Matrix, targets: &Matrix, h: f64) -> Result<f64> {
    if !(1e-7..=1e-4).contains(&h) {
        return Err(Error::invalid(format!("step h = {h:.3e} outside [1e-7, 1e-4]")));
    }
    let (_, grad) = model.forward_backward(inputs, &mut |pred: &Matrix| {
        mse_upstream(pred, targets, None).expect("shapes checked by caller")
    })?;
    let mut worst = 0.0f64;
    for p in 0..model.n_params() {
        let orig = model.params()[p];
        model.params_mut()[p] = orig + h;
        let up = mse_loss(&model.forward(inputs)?, targets, None)?;
        model.params_mut()[p] = orig - h;
        let dn = mse_loss(&model.forward(inputs)?, targets, None)?;
        model.params_mut()[p] = orig;
        let fd = (up - dn) / (2.0 * h);
        let scale = fd.abs().max(grad[p].abs()).max(1e-2);
        worst = worst.max((grad[p] - fd).abs() / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::{
        Activation, BlockStyle, CoordNet, NifModel, ParamTarget, ParameterNetConfig, ShapeNetConfig,
    };
    use crate::numerics::RngState;

    #[test]
    fn linear_model_is_exact() {
        let mut rng = RngState::new(1);
        let mut model = CoordNet::init(
            ShapeNetConfig {
                d_in: 2,
                width: 3,
                n_blocks: 0,
                d_out: 1,
                activation: Activation::Identity,
                block_style: BlockStyle::PlainChain,
            },
            &mut rng,
        )
        .unwrap();
        let inputs = Matrix::from_fn(6, 2, |_, _| rng.uniform(-1.0, 1.0));
        let targets = Matrix::from_fn(6, 1, |_, _| rng.uniform(-1.0, 1.0));
        // Per-coordinate the loss is quadratic, so central differences are
        // exact; the larger step keeps roundoff below 1e-10.
        let err = grad_check(&mut model, &inputs, &targets, 1e-4).unwrap();
        assert!(err < 1e-10, "error {err}");
    }

    #[test]
    fn tiny_full_mode_hypernetwork_passes() {
        let mut rng = RngState::new(2);
        let shape = ShapeNetConfig {
            d_in: 1,
            width: 4,
            n_blocks: 1,
            d_out: 1,
            activation: Activation::Swish,
            block_style: BlockStyle::ResNetHalfSum,
        };
        let pn = ParameterNetConfig::new(2, vec![4], 2, Activation::Swish, ParamTarget::Full);
        let mut model = NifModel::init(shape, pn, &mut rng).unwrap();
        let inputs = Matrix::from_fn(8, 3, |_, _| rng.uniform(-1.0, 1.0));
        let targets = Matrix::from_fn(8, 1, |_, _| rng.uniform(-1.0, 1.0));
        let err = grad_check(&mut model, &inputs, &targets, 1e-6).unwrap();
        assert!(err < 1e-6, "error {err}");
    }

    #[test]
    fn tiny_sine_spatial_net_passes() {
        let mut rng = RngState::new(3);
        let mut model = CoordNet::init(
            ShapeNetConfig {
                d_in: 1,
                width: 5,
                n_blocks: 1,
                d_out: 1,
                activation: Activation::sine(30.0),
                block_style: BlockStyle::ResNetHalfSum,
            },
            &mut rng,
        )
        .unwrap();
        let inputs = Matrix::from_fn(8, 1, |_, _| rng.uniform(-1.0, 1.0));
        let targets = Matrix::from_fn(8, 1, |_, _| rng.uniform(-1.0, 1.0));
        let err = grad_check(&mut model, &inputs, &targets, 1e-6).unwrap();
        assert!(err < 1e-6, "error {err}");
    }

    #[test]
    fn out_of_range_step_rejected() {
        let mut rng = RngState::new(4);
        let mut model = CoordNet::init(
            ShapeNetConfig {
                d_in: 1,
                width: 2,
                n_blocks: 0,
                d_out: 1,
                activation: Activation::Tanh,
                block_style: BlockStyle::PlainChain,
            },
            &mut rng,
        )
        .unwrap();
        let x = Matrix::zeros(2, 1);
        let t = Matrix::zeros(2, 1);
        assert!(grad_check(&mut model, &x, &t, 1e-3).is_err());
    }
}
