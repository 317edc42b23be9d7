//! Random Fourier feature network: a frozen Gaussian frequency matrix maps
//! inputs to `[cos(2 pi B v), sin(2 pi B v)]`, followed by a trainable MLP.

use super::activation::Activation;
use super::init::init_chain;
use super::kernels::{chain_backward, chain_forward, ChainTape};
use super::layout::FlatParamLayout;
use super::model::Model;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, RngState};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierConfig {
    pub d_in: usize,
    pub n_features: usize,
    /// Standard deviation of the frozen frequency entries.
    pub sigma: f64,
    pub hidden: Vec<usize>,
    pub d_out: usize,
    pub activation: Activation,
}

impl FourierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_in == 0 || self.n_features == 0 || self.d_out == 0 {
            return Err(Error::invalid("dimensions must be >= 1"));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::invalid("sigma must be non-negative"));
        }
        if self.hidden.iter().any(|&h| h == 0) {
            return Err(Error::invalid("hidden widths must be >= 1"));
        }
        Ok(())
    }

    fn mlp_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 1);
        let mut prev = 2 * self.n_features;
        for &h in &self.hidden {
            dims.push((prev, h));
            prev = h;
        }
        dims.push((prev, self.d_out));
        dims
    }

    pub fn layout(&self) -> FlatParamLayout {
        FlatParamLayout::new(&self.mlp_dims())
    }

    /// Trainable count; the frozen frequency matrix is excluded.
    pub fn param_count(&self) -> usize {
        self.layout().total()
    }

    fn acts(&self) -> Vec<Option<Activation>> {
        let n = self.hidden.len() + 1;
        let mut acts = vec![Some(self.activation); n];
        acts[n - 1] = None;
        acts
    }
}

#[derive(Debug, Clone)]
pub struct FourierNet {
    cfg: FourierConfig,
    /// Frozen `n_features x d_in` frequency matrix, entries N(0, sigma^2).
    b_matrix: Matrix,
    layout: FlatParamLayout,
    params: Vec<f64>,
}

impl FourierNet {
    pub fn init(cfg: FourierConfig, rng: &mut RngState) -> Result<Self> {
        cfg.validate()?;
        let b_matrix = Matrix::from_fn(cfg.n_features, cfg.d_in, |_, _| cfg.sigma * rng.normal());
        let layout = cfg.layout();
        let params = init_chain(&layout, cfg.activation, rng);
        Ok(FourierNet { cfg, b_matrix, layout, params })
    }

    pub fn from_parts(cfg: FourierConfig, b_matrix: Matrix, params: Vec<f64>) -> Result<Self> {
        cfg.validate()?;
        if b_matrix.rows() != cfg.n_features || b_matrix.cols() != cfg.d_in {
            return Err(Error::invalid("frequency matrix shape mismatch"));
        }
        let layout = cfg.layout();
        if params.len() != layout.total() {
            return Err(Error::invalid(format!(
                "{} parameters supplied, architecture has {}",
                params.len(),
                layout.total()
            )));
        }
        Ok(FourierNet { cfg, b_matrix, layout, params })
    }

    pub fn cfg(&self) -> &FourierConfig {
        &self.cfg
    }

    pub fn frequencies(&self) -> &Matrix {
        &self.b_matrix
    }

    /// `gamma(v) = [cos(2 pi B v), sin(2 pi B v)]`; its squared norm is
    /// exactly `n_features`.
    pub fn features(&self, inputs: &Matrix) -> Result<Matrix> {
        if inputs.cols() != self.cfg.d_in {
            return Err(Error::invalid(format!(
                "input width {} does not match d_in {}",
                inputs.cols(),
                self.cfg.d_in
            )));
        }
        let f = self.cfg.n_features;
        let proj = inputs.matmul_nt(&self.b_matrix);
        let mut feats = Matrix::zeros(inputs.rows(), 2 * f);
        for r in 0..inputs.rows() {
            let prow = proj.row(r);
            let frow = feats.row_mut(r);
            for (j, &p) in prow.iter().enumerate() {
                let a = 2.0 * std::f64::consts::PI * p;
                frow[j] = a.cos();
                frow[f + j] = a.sin();
            }
        }
        Ok(feats)
    }
}

impl Model for FourierNet {
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
        self.cfg.d_in
    }

    fn d_out(&self) -> usize {
        self.cfg.d_out
    }

    fn forward(&self, inputs: &Matrix) -> Result<Matrix> {
        let feats = self.features(inputs)?;
        Ok(chain_forward(&feats, &self.params, &self.layout, &self.cfg.acts(), None))
    }

    fn forward_backward(
        &self,
        inputs: &Matrix,
        upstream: &mut dyn FnMut(&Matrix) -> Matrix,
    ) -> Result<(Matrix, Vec<f64>)> {
        let feats = self.features(inputs)?;
        let acts = self.cfg.acts();
        let mut tape = ChainTape { inputs: vec![], pres: vec![] };
        let out = chain_forward(&feats, &self.params, &self.layout, &acts, Some(&mut tape));
        let dout = upstream(&out);
        let mut dparams = vec![0.0; self.params.len()];
        chain_backward(&dout, &self.params, &self.layout, &acts, &tape, &mut dparams, false);
        Ok((out, dparams))
    }
}
