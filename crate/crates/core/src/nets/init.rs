//! Parameter initialization rules.
//!
//! Sine networks use the scaled-uniform scheme: the input layer draws
//! weights from `U(-1/n_in, 1/n_in)` and every later layer from
//! `U(-sqrt(6/n_in)/omega0, sqrt(6/n_in)/omega0)`, biases from
//! `U(-1/sqrt(n_in), 1/sqrt(n_in))`. All other activations draw every
//! parameter from a truncated normal with standard deviation 0.1 clipped at
//! two standard deviations.

use super::activation::Activation;
use super::layout::FlatParamLayout;
use crate::numerics::RngState;

/// Truncated-normal standard deviation for non-sine networks.
pub const TRUNC_NORMAL_STD: f64 = 0.1;
/// Cutoff in multiples of the standard deviation.
pub const TRUNC_NORMAL_CUTOFF: f64 = 2.0;
/// Scale applied to the conditioning network's output-layer weights so the
/// produced parameters start near their own initialization distribution.
pub const HYPER_LAST_LAYER_SCALE: f64 = 1e-2;

/// Hard bound of the sine weight initialization for a given layer.
pub fn sine_weight_bound(layer: usize, n_in: usize, omega0: f64) -> f64 {
    if layer == 0 {
        1.0 / n_in as f64
    } else {
        (6.0 / n_in as f64).sqrt() / omega0
    }
}

/// Hard bound of the sine bias initialization.
pub fn sine_bias_bound(n_in: usize) -> f64 {
    1.0 / (n_in as f64).sqrt()
}

/// Draws a full flat parameter vector for a chain with the given layout,
/// filling segments in layout order (all weights, then all biases).
pub fn init_chain(layout: &FlatParamLayout, activation: Activation, rng: &mut RngState) -> Vec<f64> {
    let mut flat = vec![0.0; layout.total()];
    match activation {
        Activation::Sine { omega0 } => {
            for l in 0..layout.n_layers() {
                let seg = layout.weight(l);
                let bound = sine_weight_bound(l, seg.n_in, omega0);
                for v in &mut flat[seg.offset..seg.offset + seg.len] {
                    *v = rng.uniform(-bound, bound);
                }
            }
            for l in 0..layout.n_layers() {
                let seg = layout.bias(l);
                let bound = sine_bias_bound(layout.weight(l).n_in);
                for v in &mut flat[seg.offset..seg.offset + seg.len] {
                    *v = rng.uniform(-bound, bound);
                }
            }
        }
        _ => {
            for v in &mut flat {
                *v = rng.trunc_normal(TRUNC_NORMAL_STD, TRUNC_NORMAL_CUTOFF);
            }
        }
    }
    flat
}
