//! Freezing one latent condition into an immutable spatial evaluator.

use crate::error::Result;
use crate::nets::{coord_forward, input_gradient_from, FlatParamLayout, Model, NifModel, ShapeNetConfig};
use crate::numerics::Matrix;

/// Where a compiled field came from.
#[derive(Debug, Clone)]
pub struct FieldProvenance {
    /// FNV-1a hash of the source model's configuration and parameters.
    pub model_hash: String,
    pub condition: Vec<f64>,
    pub latent: Vec<f64>,
}

/// Frozen spatial-network parameters for one condition. Evaluation matches
/// the end-to-end model on the same rows; the conditioning network is no
/// longer involved.
#[derive(Debug, Clone)]
pub struct CompiledField {
    shape_cfg: ShapeNetConfig,
    layout: FlatParamLayout,
    flat: Vec<f64>,
    pub provenance: FieldProvenance,
}

/// Runs the conditioning network once and caches the produced parameters.
pub fn compile(model: &NifModel, condition: &[f64]) -> Result<CompiledField> {
    let (flat, latent) = model.compile_condition(condition)?;
    let shape_cfg = *model.shape_cfg();
    Ok(CompiledField {
        shape_cfg,
        layout: shape_cfg.layout(),
        flat,
        provenance: FieldProvenance {
            model_hash: format!("{:016x}", model_hash(model)),
            condition: condition.to_vec(),
            latent,
        },
    })
}

fn model_hash(model: &NifModel) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    eat(format!("{:?}{:?}", model.shape_cfg(), model.param_cfg()).as_bytes());
    for v in model.params() {
        eat(&v.to_le_bytes());
    }
    h
}

impl CompiledField {
    pub fn shape_cfg(&self) -> &ShapeNetConfig {
        &self.shape_cfg
    }

    /// The frozen flat parameter vector.
    pub fn theta_shape(&self) -> &[f64] {
        &self.flat
    }

    pub fn d_in(&self) -> usize {
        self.shape_cfg.d_in
    }

    pub fn d_out(&self) -> usize {
        self.shape_cfg.d_out
    }

    /// Spatial-network-only evaluation of a batch of points.
    pub fn eval_points(&self, points: &Matrix) -> Result<Matrix> {
        self.check(points)?;
        Ok(coord_forward(&self.shape_cfg, &self.layout, &self.flat, points, None))
    }

    /// Exact reverse-mode spatial derivatives; row layout matches the
    /// end-to-end model's spatial gradient.
    pub fn eval_gradient(&self, points: &Matrix) -> Result<Matrix> {
        self.check(points)?;
        input_gradient_from(&self.shape_cfg, &self.layout, &self.flat, points)
    }

    fn check(&self, points: &Matrix) -> Result<()> {
        if points.cols() != self.shape_cfg.d_in {
            return Err(crate::error::Error::invalid(format!(
                "points have width {}, field takes {}",
                points.cols(),
                self.shape_cfg.d_in
            )));
        }
        Ok(())
    }
}
