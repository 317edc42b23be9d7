//! Branch/trunk operator baseline.
//!
//! The branch net consumes the conditioning columns and the trunk net the
//! spatial columns; the prediction is the dot product of the trunk features
//! with all but the last branch output, plus the last branch output acting
//! as a bias:
//! `u = sum_k branch_k(t) trunk_k(x) + branch_last(t)`.

use super::activation::Activation;
use super::init::init_chain;
use super::kernels::{chain_backward, chain_forward, ChainTape};
use super::layout::FlatParamLayout;
use super::model::Model;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, RngState};
use serde::{Deserialize, Serialize};

/// Layer widths of both nets, input width first. The branch output must be
/// exactly one wider than the trunk output. Hidden layers are activated;
/// the branch output layer is linear while the trunk output features keep
/// the activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeepOnetConfig {
    pub branch: Vec<usize>,
    pub trunk: Vec<usize>,
    pub activation: Activation,
}

impl DeepOnetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.branch.len() < 2 || self.trunk.len() < 2 {
            return Err(Error::invalid("branch and trunk need at least input and output widths"));
        }
        if self.branch.iter().chain(&self.trunk).any(|&w| w == 0) {
            return Err(Error::invalid("widths must be >= 1"));
        }
        let bk = *self.branch.last().unwrap();
        let tk = *self.trunk.last().unwrap();
        if bk != tk + 1 {
            return Err(Error::invalid(format!(
                "branch output {bk} must equal trunk output {tk} + 1 (the extra entry is the bias)"
            )));
        }
        Ok(())
    }

    fn dims(widths: &[usize]) -> Vec<(usize, usize)> {
        widths.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn branch_layout(&self) -> FlatParamLayout {
        FlatParamLayout::new(&Self::dims(&self.branch))
    }

    pub fn trunk_layout(&self) -> FlatParamLayout {
        FlatParamLayout::new(&Self::dims(&self.trunk))
    }

    pub fn param_count(&self) -> usize {
        self.branch_layout().total() + self.trunk_layout().total()
    }

    fn branch_acts(&self) -> Vec<Option<Activation>> {
        let n = self.branch.len() - 1;
        let mut acts = vec![Some(self.activation); n];
        acts[n - 1] = None; // linear branch output
        acts
    }

    fn trunk_acts(&self) -> Vec<Option<Activation>> {
        vec![Some(self.activation); self.trunk.len() - 1]
    }
}

#[derive(Debug, Clone)]
pub struct DeepOnet {
    cfg: DeepOnetConfig,
    branch_layout: FlatParamLayout,
    trunk_layout: FlatParamLayout,
    /// `[branch parameters | trunk parameters]`.
    params: Vec<f64>,
}

impl DeepOnet {
    pub fn init(cfg: DeepOnetConfig, rng: &mut RngState) -> Result<Self> {
        cfg.validate()?;
        let branch_layout = cfg.branch_layout();
        let trunk_layout = cfg.trunk_layout();
        let mut params = init_chain(&branch_layout, cfg.activation, rng);
        params.extend(init_chain(&trunk_layout, cfg.activation, rng));
        Ok(DeepOnet { cfg, branch_layout, trunk_layout, params })
    }

    pub fn from_params(cfg: DeepOnetConfig, params: Vec<f64>) -> Result<Self> {
        cfg.validate()?;
        let branch_layout = cfg.branch_layout();
        let trunk_layout = cfg.trunk_layout();
        if params.len() != branch_layout.total() + trunk_layout.total() {
            return Err(Error::invalid(format!(
                "{} parameters supplied, architecture has {}",
                params.len(),
                branch_layout.total() + trunk_layout.total()
            )));
        }
        Ok(DeepOnet { cfg, branch_layout, trunk_layout, params })
    }

    pub fn cfg(&self) -> &DeepOnetConfig {
        &self.cfg
    }

    fn split_inputs(&self, inputs: &Matrix) -> Result<(Matrix, Matrix)> {
        let d_b = self.cfg.branch[0];
        let d_t = self.cfg.trunk[0];
        if inputs.cols() != d_b + d_t {
            return Err(Error::invalid(format!(
                "input width {} does not match branch {} + trunk {}",
                inputs.cols(),
                d_b,
                d_t
            )));
        }
        let mut cond = Matrix::zeros(inputs.rows(), d_b);
        let mut x = Matrix::zeros(inputs.rows(), d_t);
        for r in 0..inputs.rows() {
            let row = inputs.row(r);
            cond.row_mut(r).copy_from_slice(&row[..d_b]);
            x.row_mut(r).copy_from_slice(&row[d_b..]);
        }
        Ok((cond, x))
    }

    fn branch_params(&self) -> &[f64] {
        &self.params[..self.branch_layout.total()]
    }

    fn trunk_params(&self) -> &[f64] {
        &self.params[self.branch_layout.total()..]
    }

    fn combine(&self, branch: &Matrix, trunk: &Matrix) -> Matrix {
        let k = trunk.cols();
        let mut u = Matrix::zeros(branch.rows(), 1);
        for r in 0..branch.rows() {
            let b = branch.row(r);
            let t = trunk.row(r);
            let mut acc = b[k];
            for (bi, ti) in b[..k].iter().zip(t) {
                acc += bi * ti;
            }
            u[(r, 0)] = acc;
        }
        u
    }
}

impl Model for DeepOnet {
    fn n_params(&self) -> usize {
        self.params.len()
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn d_in(&self) -> usize {
        self.cfg.branch[0] + self.cfg.trunk[0]
    }

    fn d_out(&self) -> usize {
        1
    }

    fn forward(&self, inputs: &Matrix) -> Result<Matrix> {
        let (cond, x) = self.split_inputs(inputs)?;
        let branch = chain_forward(&cond, self.branch_params(), &self.branch_layout, &self.cfg.branch_acts(), None);
        let trunk = chain_forward(&x, self.trunk_params(), &self.trunk_layout, &self.cfg.trunk_acts(), None);
        Ok(self.combine(&branch, &trunk))
    }

    fn forward_backward(
        &self,
        inputs: &Matrix,
        upstream: &mut dyn FnMut(&Matrix) -> Matrix,
    ) -> Result<(Matrix, Vec<f64>)> {
        let (cond, x) = self.split_inputs(inputs)?;
        let b_acts = self.cfg.branch_acts();
        let t_acts = self.cfg.trunk_acts();
        let mut b_tape = ChainTape { inputs: vec![], pres: vec![] };
        let mut t_tape = ChainTape { inputs: vec![], pres: vec![] };
        let branch = chain_forward(&cond, self.branch_params(), &self.branch_layout, &b_acts, Some(&mut b_tape));
        let trunk = chain_forward(&x, self.trunk_params(), &self.trunk_layout, &t_acts, Some(&mut t_tape));
        let u = self.combine(&branch, &trunk);
        let du = upstream(&u);

        let k = trunk.cols();
        let mut dbranch = Matrix::zeros(branch.rows(), branch.cols());
        let mut dtrunk = Matrix::zeros(trunk.rows(), trunk.cols());
        for r in 0..branch.rows() {
            let d = du[(r, 0)];
            let b = branch.row(r);
            let t = trunk.row(r);
            let db = dbranch.row_mut(r);
            db[k] = d;
            for i in 0..k {
                db[i] = d * t[i];
            }
            let dt = dtrunk.row_mut(r);
            for i in 0..k {
                dt[i] = d * b[i];
            }
        }

        let mut dparams = vec![0.0; self.params.len()];
        let split = self.branch_layout.total();
        let (dbp, dtp) = dparams.split_at_mut(split);
        chain_backward(&dbranch, self.branch_params(), &self.branch_layout, &b_acts, &b_tape, dbp, false);
        chain_backward(&dtrunk, self.trunk_params(), &self.trunk_layout, &t_acts, &t_tape, dtp, false);
        Ok((u, dparams))
    }
}
