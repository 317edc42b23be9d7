//! Deterministic per-point cost formulas for spatial queries.
//!
//! Counts multiply-add work of the affine chains plus a configurable weight
//! per activation evaluation (transcendental functions cost several
//! multiply-adds). The counts depend only on the spatial architecture, so a
//! hypernetwork's per-point query cost is independent of its conditioning
//! network by construction.

use crate::nets::{BlockStyle, ShapeNetConfig};

/// Default flop weight of one activation (or activation-derivative)
/// evaluation.
pub const DEFAULT_ACT_COST: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlopMode {
    Forward,
    /// Forward pass plus one input-gradient sweep per output component.
    Gradient,
}

/// `2 d_in d_out` multiply-adds plus `d_out` bias additions.
pub fn affine_flops(d_in: usize, d_out: usize) -> u64 {
    (2 * d_in * d_out + d_out) as u64
}

/// Per-point query cost with the default activation weight.
pub fn flops_per_point(cfg: &ShapeNetConfig, mode: FlopMode) -> u64 {
    flops_per_point_with_cost(cfg, mode, DEFAULT_ACT_COST)
}

/// Per-point query cost with an explicit activation weight.
pub fn flops_per_point_with_cost(cfg: &ShapeNetConfig, mode: FlopMode, act_cost: u64) -> u64 {
    let w = cfg.width;
    let body_layers = match cfg.block_style {
        BlockStyle::ResNetHalfSum => 2 * cfg.n_blocks,
        BlockStyle::PlainChain => cfg.n_blocks,
    };
    // Forward: affine chains, activations on all but the final layer, and
    // the half-sum combine (add + scale per unit per block).
    let mut forward = affine_flops(cfg.d_in, w) + act_cost * w as u64;
    forward += body_layers as u64 * (affine_flops(w, w) + act_cost * w as u64);
    if cfg.block_style == BlockStyle::ResNetHalfSum {
        forward += (2 * w * cfg.n_blocks) as u64;
    }
    forward += affine_flops(w, cfg.d_out);

    match mode {
        FlopMode::Forward => forward,
        FlopMode::Gradient => {
            // One reverse sweep per output component: data gradient of each
            // affine layer plus the activation-derivative multiply.
            let mut sweep = 2 * (w * cfg.d_out) as u64; // through the linear output layer
            sweep += body_layers as u64 * (2 * (w * w) as u64 + (act_cost + 1) * w as u64);
            if cfg.block_style == BlockStyle::ResNetHalfSum {
                sweep += (2 * w * cfg.n_blocks) as u64;
            }
            sweep += 2 * (cfg.d_in * w) as u64 + (act_cost + 1) * w as u64; // first layer
            forward + cfg.d_out as u64 * sweep
        }
    }
}
