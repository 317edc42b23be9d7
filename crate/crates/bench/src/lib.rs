//! Shared fixtures for the criterion benchmarks.

use nifkit::nets::{Activation, BlockStyle, CoordNet, NifModel, ParamTarget, ParameterNetConfig, ShapeNetConfig};
use nifkit::numerics::{Matrix, RngState};

/// Hypernetwork with a sine spatial net of the given width, plus the
/// monolithic comparator at 1.37x width taking the condition as input.
pub fn query_pair(width: usize, seed: u64) -> (NifModel, CoordNet) {
    let mut rng = RngState::new(seed);
    let shape = ShapeNetConfig {
        d_in: 3,
        width,
        n_blocks: 2,
        d_out: 1,
        activation: Activation::sine(30.0),
        block_style: BlockStyle::ResNetHalfSum,
    };
    let nif = NifModel::init(
        shape,
        ParameterNetConfig::new(1, vec![32], 3, Activation::Swish, ParamTarget::Full),
        &mut rng,
    )
    .expect("valid configuration");
    let mono = CoordNet::init(
        ShapeNetConfig {
            d_in: 4,
            width: (width as f64 * 1.37).ceil() as usize,
            n_blocks: 2,
            d_out: 1,
            activation: Activation::sine(30.0),
            block_style: BlockStyle::ResNetHalfSum,
        },
        &mut rng,
    )
    .expect("valid configuration");
    (nif, mono)
}

pub fn point_cloud(n: usize, d: usize, seed: u64) -> Matrix {
    let mut rng = RngState::new(seed);
    Matrix::from_fn(n, d, |_, _| rng.uniform(-1.0, 1.0))
}
