//! The hypernetwork model: a conditioning network (ParameterNet) whose
//! linear output layer produces the parameters of a coordinate network
//! (ShapeNet), either all of them (`Full`) or only the final linear layer
//! (`LastLayer`).
//!
//! Because the output layer of the conditioning network is linear in the
//! bottleneck activation `z`, the produced flat parameter vector is
//! `flat(z) = b_out + sum_k z_k W_out[:, k]`
//! and each column slice is itself a complete flat ShapeNet vector. Forward
//! and reverse passes exploit this: every spatial layer is evaluated as
//! `r + 1` shared-weight affine maps combined with per-row `z` weights,
//! which avoids materializing per-row weight tensors.

use super::activation::Activation;
use super::coordnet::{hidden_backward, hidden_forward, ShapeNetConfig};
use super::init::{init_chain, HYPER_LAST_LAYER_SCALE, TRUNC_NORMAL_CUTOFF, TRUNC_NORMAL_STD};
use super::init::sine_weight_bound;
use super::kernels::{
    activate, activate_backward, affine_backward_data, affine_backward_params, affine_forward,
    chain_backward, chain_forward, ChainTape,
};
use super::layout::FlatParamLayout;
use super::model::Model;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, RngState};
use serde::{Deserialize, Serialize};

/// Which ShapeNet parameters the conditioning network produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamTarget {
    Full,
    LastLayer,
}

/// Architecture of the conditioning network: activated hidden layers, a
/// linear bottleneck of width `bottleneck`, and a linear output layer whose
/// width is implied by the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterNetConfig {
    pub d_in: usize,
    pub hidden: Vec<usize>,
    /// Latent dimension r.
    pub bottleneck: usize,
    pub activation: Activation,
    pub target: ParamTarget,
    /// In `LastLayer` mode, whether the produced parameters include the
    /// output bias. Disabling it gives the strict sum-of-products form.
    pub last_layer_bias: bool,
}

impl ParameterNetConfig {
    pub fn new(d_in: usize, hidden: Vec<usize>, bottleneck: usize, activation: Activation, target: ParamTarget) -> Self {
        ParameterNetConfig { d_in, hidden, bottleneck, activation, target, last_layer_bias: true }
    }
}

/// Full evaluation of the hypernetwork on a batch of rows.
#[derive(Debug, Clone)]
pub struct NifForward {
    /// Predicted outputs, one row per input row.
    pub u: Matrix,
    /// Bottleneck activations (the latent code), one row per input row.
    pub latent: Matrix,
    /// Produced flat parameters, one row per input row: the complete
    /// ShapeNet vector in full mode, the final-layer block in last-layer
    /// mode.
    pub flat_params: Matrix,
}

/// Hypernetwork pairing a conditioning network with a coordinate network.
#[derive(Debug, Clone)]
pub struct NifModel {
    shape_cfg: ShapeNetConfig,
    param_cfg: ParameterNetConfig,
    shape_layout: FlatParamLayout,
    pn_layout: FlatParamLayout,
    pn_acts: Vec<Option<Activation>>,
    /// Layout of the trainable hidden ShapeNet parameters (last-layer mode
    /// only).
    static_layout: Option<FlatParamLayout>,
    /// `[conditioning-network parameters | static hidden parameters]`.
    params: Vec<f64>,
    theta_len: usize,
}

impl NifModel {
    /// Dimensions `(n_in, n_out)` of every conditioning-network layer.
    fn pn_dims(shape_cfg: &ShapeNetConfig, param_cfg: &ParameterNetConfig) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(param_cfg.hidden.len() + 2);
        let mut prev = param_cfg.d_in;
        for &h in &param_cfg.hidden {
            dims.push((prev, h));
            prev = h;
        }
        dims.push((prev, param_cfg.bottleneck));
        dims.push((param_cfg.bottleneck, Self::produced_len(shape_cfg, param_cfg)));
        dims
    }

    /// Width of the conditioning network's output layer.
    pub fn produced_len(shape_cfg: &ShapeNetConfig, param_cfg: &ParameterNetConfig) -> usize {
        match param_cfg.target {
            ParamTarget::Full => shape_cfg.param_count(),
            ParamTarget::LastLayer => {
                let n = shape_cfg.d_out;
                let r = shape_cfg.width;
                n * r + if param_cfg.last_layer_bias { n } else { 0 }
            }
        }
    }

    fn validate(shape_cfg: &ShapeNetConfig, param_cfg: &ParameterNetConfig) -> Result<()> {
        shape_cfg.validate()?;
        if param_cfg.d_in == 0 || param_cfg.bottleneck == 0 {
            return Err(Error::invalid("conditioning dims must be >= 1"));
        }
        if param_cfg.hidden.iter().any(|&h| h == 0) {
            return Err(Error::invalid("hidden widths must be >= 1"));
        }
        if param_cfg.target == ParamTarget::LastLayer && shape_cfg.width != param_cfg.bottleneck {
            return Err(Error::invalid(format!(
                "last-layer mode ties the spatial network's penultimate width ({}) to the bottleneck r ({})",
                shape_cfg.width, param_cfg.bottleneck
            )));
        }
        Ok(())
    }

    /// Trainable parameter counts `(theta, static_hidden)`.
    pub fn param_counts(shape_cfg: &ShapeNetConfig, param_cfg: &ParameterNetConfig) -> (usize, usize) {
        let theta = FlatParamLayout::new(&Self::pn_dims(shape_cfg, param_cfg)).total();
        let stat = match param_cfg.target {
            ParamTarget::Full => 0,
            ParamTarget::LastLayer => FlatParamLayout::new(&shape_cfg.hidden_layer_dims()).total(),
        };
        (theta, stat)
    }

    /// Initializes a model. Conditioning layers follow their activation's
    /// rule; the output layer's weights are drawn by the same rule and
    /// scaled by 1e-2 while its biases are drawn from the coordinate
    /// network's own initialization distribution segment by segment, so the
    /// produced parameters start out distributed like a freshly initialized
    /// ShapeNet.
    pub fn init(shape_cfg: ShapeNetConfig, param_cfg: ParameterNetConfig, rng: &mut RngState) -> Result<Self> {
        Self::validate(&shape_cfg, &param_cfg)?;
        let shape_layout = shape_cfg.layout();
        let pn_dims = Self::pn_dims(&shape_cfg, &param_cfg);
        let pn_layout = FlatParamLayout::new(&pn_dims);
        let n_pn = pn_dims.len();

        // Front chain (everything but the output layer).
        let front_layout = FlatParamLayout::new(&pn_dims[..n_pn - 1]);
        let front = init_chain(&front_layout, param_cfg.activation, rng);

        // Output layer weights: activation rule, scaled down.
        let out_w_seg = pn_layout.weight(n_pn - 1);
        let mut out_w = vec![0.0; out_w_seg.len];
        match param_cfg.activation {
            Activation::Sine { omega0 } => {
                let bound = sine_weight_bound(n_pn - 1, out_w_seg.n_in, omega0);
                for v in &mut out_w {
                    *v = HYPER_LAST_LAYER_SCALE * rng.uniform(-bound, bound);
                }
            }
            _ => {
                for v in &mut out_w {
                    *v = HYPER_LAST_LAYER_SCALE * rng.trunc_normal(TRUNC_NORMAL_STD, TRUNC_NORMAL_CUTOFF);
                }
            }
        }

        // A full ShapeNet initialization supplies the output-layer biases
        // (and the static hidden parameters in last-layer mode).
        let shape_init = init_chain(&shape_layout, shape_cfg.activation, rng);
        let n_shape = shape_layout.n_layers();
        let out_b: Vec<f64> = match param_cfg.target {
            ParamTarget::Full => shape_init.clone(),
            ParamTarget::LastLayer => {
                let mut b = shape_layout.weight_slice(&shape_init, n_shape - 1).to_vec();
                if param_cfg.last_layer_bias {
                    b.extend_from_slice(shape_layout.bias_slice(&shape_init, n_shape - 1));
                }
                b
            }
        };

        let (static_layout, static_params) = match param_cfg.target {
            ParamTarget::Full => (None, Vec::new()),
            ParamTarget::LastLayer => {
                let sl = FlatParamLayout::new(&shape_cfg.hidden_layer_dims());
                let mut sp = vec![0.0; sl.total()];
                for l in 0..n_shape - 1 {
                    let dst_w = sl.weight(l);
                    sp[dst_w.offset..dst_w.offset + dst_w.len]
                        .copy_from_slice(shape_layout.weight_slice(&shape_init, l));
                    let dst_b = sl.bias(l);
                    sp[dst_b.offset..dst_b.offset + dst_b.len]
                        .copy_from_slice(shape_layout.bias_slice(&shape_init, l));
                }
                (Some(sl), sp)
            }
        };

        // Assemble theta in the conditioning network's layout order.
        let mut theta = vec![0.0; pn_layout.total()];
        for l in 0..n_pn - 1 {
            let dst = pn_layout.weight(l);
            theta[dst.offset..dst.offset + dst.len].copy_from_slice(front_layout.weight_slice(&front, l));
            let dstb = pn_layout.bias(l);
            theta[dstb.offset..dstb.offset + dstb.len].copy_from_slice(front_layout.bias_slice(&front, l));
        }
        let ws = pn_layout.weight(n_pn - 1);
        theta[ws.offset..ws.offset + ws.len].copy_from_slice(&out_w);
        let bs = pn_layout.bias(n_pn - 1);
        theta[bs.offset..bs.offset + bs.len].copy_from_slice(&out_b);

        let theta_len = theta.len();
        let mut params = theta;
        params.extend_from_slice(&static_params);

        let mut pn_acts: Vec<Option<Activation>> = param_cfg.hidden.iter().map(|_| Some(param_cfg.activation)).collect();
        pn_acts.push(None); // linear bottleneck
        pn_acts.push(None); // linear output

        Ok(NifModel {
            shape_cfg,
            param_cfg,
            shape_layout,
            pn_layout,
            pn_acts,
            static_layout,
            params,
            theta_len,
        })
    }

    /// Rebuilds a model from configs plus a stored parameter vector.
    pub fn from_params(shape_cfg: ShapeNetConfig, param_cfg: ParameterNetConfig, params: Vec<f64>) -> Result<Self> {
        Self::validate(&shape_cfg, &param_cfg)?;
        let (theta_len, static_len) = Self::param_counts(&shape_cfg, &param_cfg);
        if params.len() != theta_len + static_len {
            return Err(Error::invalid(format!(
                "{} parameters supplied, architecture has {}",
                params.len(),
                theta_len + static_len
            )));
        }
        let shape_layout = shape_cfg.layout();
        let pn_dims = Self::pn_dims(&shape_cfg, &param_cfg);
        let pn_layout = FlatParamLayout::new(&pn_dims);
        let static_layout = match param_cfg.target {
            ParamTarget::Full => None,
            ParamTarget::LastLayer => Some(FlatParamLayout::new(&shape_cfg.hidden_layer_dims())),
        };
        let mut pn_acts: Vec<Option<Activation>> = param_cfg.hidden.iter().map(|_| Some(param_cfg.activation)).collect();
        pn_acts.push(None);
        pn_acts.push(None);
        Ok(NifModel { shape_cfg, param_cfg, shape_layout, pn_layout, pn_acts, static_layout, params, theta_len })
    }

    pub fn shape_cfg(&self) -> &ShapeNetConfig {
        &self.shape_cfg
    }

    pub fn param_cfg(&self) -> &ParameterNetConfig {
        &self.param_cfg
    }

    pub fn shape_layout(&self) -> &FlatParamLayout {
        &self.shape_layout
    }

    /// Width of the conditioning input block.
    pub fn d_cond(&self) -> usize {
        self.param_cfg.d_in
    }

    pub fn d_space(&self) -> usize {
        self.shape_cfg.d_in
    }

    pub fn theta(&self) -> &[f64] {
        &self.params[..self.theta_len]
    }

    /// Static hidden ShapeNet parameters (last-layer mode).
    pub fn static_params(&self) -> Option<&[f64]> {
        match self.param_cfg.target {
            ParamTarget::Full => None,
            ParamTarget::LastLayer => Some(&self.params[self.theta_len..]),
        }
    }

    fn split_inputs(&self, inputs: &Matrix) -> Result<(Matrix, Matrix)> {
        let d_c = self.d_cond();
        let d_x = self.d_space();
        if inputs.cols() != d_c + d_x {
            return Err(Error::invalid(format!(
                "input width {} does not match condition {} + space {}",
                inputs.cols(),
                d_c,
                d_x
            )));
        }
        let mut cond = Matrix::zeros(inputs.rows(), d_c);
        let mut x = Matrix::zeros(inputs.rows(), d_x);
        for b in 0..inputs.rows() {
            let row = inputs.row(b);
            cond.row_mut(b).copy_from_slice(&row[..d_c]);
            x.row_mut(b).copy_from_slice(&row[d_c..]);
        }
        Ok((cond, x))
    }

    /// The `k`-th hyper basis vector (a full produced-parameter block):
    /// `k = 0` is the output-layer bias, `k >= 1` the `k-1`-th column of the
    /// output-layer weight.
    fn basis<'a>(&self, theta: &'a [f64], k: usize) -> &'a [f64] {
        let last = self.pn_layout.n_layers() - 1;
        if k == 0 {
            self.pn_layout.bias_slice(theta, last)
        } else {
            let seg = self.pn_layout.weight(last);
            let m = seg.n_out;
            &theta[seg.offset + (k - 1) * m..seg.offset + k * m]
        }
    }

    /// Runs the conditioning network up to the bottleneck.
    fn pn_front(&self, cond: &Matrix, tape: Option<&mut ChainTape>) -> Matrix {
        let front = self.pn_layout.view_without_last_layer();
        let acts = &self.pn_acts[..self.pn_acts.len() - 1];
        chain_forward(cond, self.theta(), &front, acts, tape)
    }

    /// Evaluates predictions, latent codes and produced parameters for a
    /// batch of `(condition | space)` rows.
    pub fn forward_detailed(&self, inputs: &Matrix) -> Result<NifForward> {
        let (cond, x) = self.split_inputs(inputs)?;
        let z = self.pn_front(&cond, None);
        let rows = inputs.rows();
        let produced = Self::produced_len(&self.shape_cfg, &self.param_cfg);
        let mut flat_params = Matrix::zeros(rows, produced);
        for b in 0..rows {
            let out = flat_params.row_mut(b);
            out.copy_from_slice(self.basis(self.theta(), 0));
            for (k, &zk) in z.row(b).iter().enumerate() {
                for (o, &src) in out.iter_mut().zip(self.basis(self.theta(), k + 1)) {
                    *o += zk * src;
                }
            }
        }
        let u = match self.param_cfg.target {
            ParamTarget::Full => self.hyper_forward(&z, &x, None),
            ParamTarget::LastLayer => {
                let feats = self.static_features(&x);
                self.last_layer_combine(&flat_params, &feats)
            }
        };
        Ok(NifForward { u, latent: z, flat_params })
    }

    /// Features of the static hidden spatial network (last-layer mode).
    pub fn static_features(&self, x: &Matrix) -> Matrix {
        let sl = self.static_layout.as_ref().expect("last-layer mode has static parameters");
        hidden_forward(&self.shape_cfg, sl, self.static_params().unwrap(), x, None)
    }

    fn last_layer_combine(&self, produced: &Matrix, feats: &Matrix) -> Matrix {
        let n = self.shape_cfg.d_out;
        let r = self.shape_cfg.width;
        let mut u = Matrix::zeros(produced.rows(), n);
        for b in 0..produced.rows() {
            let p = produced.row(b);
            let f = feats.row(b);
            let urow = u.row_mut(b);
            for o in 0..n {
                let mut acc = if self.param_cfg.last_layer_bias { p[n * r + o] } else { 0.0 };
                for (i, &fi) in f.iter().enumerate() {
                    acc += p[i * n + o] * fi;
                }
                urow[o] = acc;
            }
        }
        u
    }

    /// Full-mode spatial evaluation with row-dependent virtual weights
    /// `flat(z) = basis_0 + sum_k z_k basis_k`.
    fn hyper_forward(&self, z: &Matrix, x: &Matrix, mut tape: Option<&mut Vec<HyperLayerTape>>) -> Matrix {
        let cfg = &self.shape_cfg;
        let n_layers = self.shape_layout.n_layers();
        let mut cur = self.hyper_layer(z, x, 0, tape.as_deref_mut());
        let _first_pre = activate_tape(&mut cur, cfg.activation, tape.as_deref_mut());
        match cfg.block_style {
            super::coordnet::BlockStyle::ResNetHalfSum => {
                for b in 0..cfg.n_blocks {
                    let eta = cur.clone();
                    let mut zeta = self.hyper_layer(z, &eta, 1 + 2 * b, tape.as_deref_mut());
                    activate_tape(&mut zeta, cfg.activation, tape.as_deref_mut());
                    let mut s = self.hyper_layer(z, &zeta, 2 + 2 * b, tape.as_deref_mut());
                    activate_tape(&mut s, cfg.activation, tape.as_deref_mut());
                    for (n, &sv) in cur.data_mut().iter_mut().zip(s.data()) {
                        *n = 0.5 * (*n + sv);
                    }
                }
            }
            super::coordnet::BlockStyle::PlainChain => {
                for b in 0..cfg.n_blocks {
                    let mut next = self.hyper_layer(z, &cur, 1 + b, tape.as_deref_mut());
                    activate_tape(&mut next, cfg.activation, tape.as_deref_mut());
                    cur = next;
                }
            }
        }
        self.hyper_layer(z, &cur, n_layers - 1, tape.as_deref_mut())
    }

    /// One virtual-weight affine layer: `r + 1` shared affine evaluations
    /// combined per row.
    fn hyper_layer(&self, z: &Matrix, x: &Matrix, layer: usize, tape: Option<&mut Vec<HyperLayerTape>>) -> Matrix {
        let theta = self.theta();
        let seg = self.shape_layout.weight(layer);
        let r = self.param_cfg.bottleneck;
        let mut gs = Vec::with_capacity(r + 1);
        for k in 0..=r {
            let src = self.basis(theta, k);
            gs.push(affine_forward(
                x,
                self.shape_layout.weight_slice(src, layer),
                self.shape_layout.bias_slice(src, layer),
                seg.n_out,
            ));
        }
        let mut out = gs[0].clone();
        for b in 0..x.rows() {
            let zrow = z.row(b);
            let orow = out.row_mut(b);
            for (k, &zk) in zrow.iter().enumerate() {
                for (o, &g) in orow.iter_mut().zip(gs[k + 1].row(b)) {
                    *o += zk * g;
                }
            }
        }
        if let Some(t) = tape {
            t.push(HyperLayerTape { input: x.clone(), gs, pre: None });
        }
        out
    }

    /// Reverse pass through one virtual-weight layer. Accumulates output
    /// layer gradients into `dtheta` (when present) and latent gradients
    /// into `dz`; returns the input gradient when `want_dx`.
    #[allow(clippy::too_many_arguments)]
    fn hyper_layer_backward(
        &self,
        z: &Matrix,
        layer: usize,
        tape: &HyperLayerTape,
        dpre: &Matrix,
        mut dtheta: Option<&mut [f64]>,
        dz: Option<&mut Matrix>,
        want_dx: bool,
    ) -> Option<Matrix> {
        let theta = self.theta();
        let r = self.param_cfg.bottleneck;
        let rows = dpre.rows();
        let seg_w = self.shape_layout.weight(layer);
        let seg_b = self.shape_layout.bias(layer);
        let last = self.pn_layout.n_layers() - 1;
        let out_w_seg = self.pn_layout.weight(last);
        let out_b_seg = self.pn_layout.bias(last);
        let m = out_w_seg.n_out;

        if let Some(dzm) = dz {
            for b in 0..rows {
                let drow = dpre.row(b);
                let dzrow = dzm.row_mut(b);
                for k in 0..r {
                    let grow = tape.gs[k + 1].row(b);
                    let mut acc = 0.0;
                    for (&d, &g) in drow.iter().zip(grow) {
                        acc += d * g;
                    }
                    dzrow[k] += acc;
                }
            }
        }

        let mut dx = want_dx.then(|| Matrix::zeros(rows, tape.input.cols()));
        let mut scaled = Matrix::zeros(rows, dpre.cols());
        for k in 0..=r {
            if k == 0 {
                scaled.data_mut().copy_from_slice(dpre.data());
            } else {
                for b in 0..rows {
                    let zk = z[(b, k - 1)];
                    for (s, &d) in scaled.row_mut(b).iter_mut().zip(dpre.row(b)) {
                        *s = zk * d;
                    }
                }
            }
            if let Some(dt) = dtheta.as_deref_mut() {
                // Locate this basis block inside theta's gradient.
                let base = if k == 0 { out_b_seg.offset } else { out_w_seg.offset + (k - 1) * m };
                let (dw, db) = {
                    let block = &mut dt[base..base + m];
                    let (w_part, rest) = block.split_at_mut(seg_b.offset);
                    (
                        &mut w_part[seg_w.offset..seg_w.offset + seg_w.len],
                        &mut rest[..seg_b.len],
                    )
                };
                affine_backward_params(&tape.input, &scaled, dw, db);
            }
            if let Some(dxm) = dx.as_mut() {
                let src = self.basis(theta, k);
                affine_backward_data(&scaled, self.shape_layout.weight_slice(src, layer), tape.input.cols(), dxm);
            }
        }
        dx
    }

    /// Reverse sweep of the full-mode spatial stack. `dout` is the gradient
    /// at the network output; returns the spatial-input gradient when
    /// `want_dx`.
    fn hyper_backward(
        &self,
        z: &Matrix,
        tape: &[HyperLayerTape],
        dout: &Matrix,
        mut dtheta: Option<&mut [f64]>,
        mut dz: Option<&mut Matrix>,
        want_dx: bool,
    ) -> Option<Matrix> {
        let cfg = &self.shape_cfg;
        let act = cfg.activation;
        let n_layers = self.shape_layout.n_layers();
        let last = n_layers - 1;

        let mut dcur = dout.clone();
        // Output layer (linear, tape entry last).
        let mut dprev = self
            .hyper_layer_backward(z, last, &tape[tape.len() - 1], &dcur, dtheta.as_deref_mut(), dz.as_deref_mut(), true)
            .expect("inner layers always need input gradients");

        match cfg.block_style {
            super::coordnet::BlockStyle::ResNetHalfSum => {
                for b in (0..cfg.n_blocks).rev() {
                    // Tape entries: [first, (b0l1, b0l2), ...]; block b's
                    // layers sit at 1 + 2b and 2 + 2b.
                    let t1 = &tape[1 + 2 * b];
                    let t2 = &tape[2 + 2 * b];
                    dprev.scale(0.5);
                    let deta_skip = dprev.clone();
                    let mut dpre2 = dprev;
                    activate_backward(&mut dpre2, t2.pre.as_ref().unwrap(), act);
                    let mut dzeta = self
                        .hyper_layer_backward(z, 2 + 2 * b, t2, &dpre2, dtheta.as_deref_mut(), dz.as_deref_mut(), true)
                        .unwrap();
                    activate_backward(&mut dzeta, t1.pre.as_ref().unwrap(), act);
                    let deta = self
                        .hyper_layer_backward(z, 1 + 2 * b, t1, &dzeta, dtheta.as_deref_mut(), dz.as_deref_mut(), true)
                        .unwrap();
                    dprev = deta_skip;
                    for (a, &d) in dprev.data_mut().iter_mut().zip(deta.data()) {
                        *a += d;
                    }
                }
            }
            super::coordnet::BlockStyle::PlainChain => {
                for b in (0..cfg.n_blocks).rev() {
                    let t = &tape[1 + b];
                    activate_backward(&mut dprev, t.pre.as_ref().unwrap(), act);
                    dprev = self
                        .hyper_layer_backward(z, 1 + b, t, &dprev, dtheta.as_deref_mut(), dz.as_deref_mut(), true)
                        .unwrap();
                }
            }
        }
        // First layer.
        let t0 = &tape[0];
        activate_backward(&mut dprev, t0.pre.as_ref().unwrap(), act);
        dcur = dprev;
        self.hyper_layer_backward(z, 0, t0, &dcur, dtheta, dz, want_dx)
    }

    /// Exact reverse-mode spatial derivative; rows hold
    /// `[du_0/dx_0 .. du_0/dx_{D-1}, du_1/dx_0, ...]`.
    pub fn spatial_gradient(&self, inputs: &Matrix) -> Result<Matrix> {
        let (cond, x) = self.split_inputs(inputs)?;
        let rows = inputs.rows();
        let d_x = self.d_space();
        let n = self.shape_cfg.d_out;
        let mut out = Matrix::zeros(rows, n * d_x);
        match self.param_cfg.target {
            ParamTarget::Full => {
                let z = self.pn_front(&cond, None);
                let mut tape = Vec::new();
                let _ = self.hyper_forward(&z, &x, Some(&mut tape));
                for comp in 0..n {
                    let mut dout = Matrix::zeros(rows, n);
                    for b in 0..rows {
                        dout[(b, comp)] = 1.0;
                    }
                    let dx = self.hyper_backward(&z, &tape, &dout, None, None, true).unwrap();
                    for b in 0..rows {
                        out.row_mut(b)[comp * d_x..(comp + 1) * d_x].copy_from_slice(dx.row(b));
                    }
                }
            }
            ParamTarget::LastLayer => {
                let detail = self.forward_detailed(inputs)?;
                let sl = self.static_layout.as_ref().unwrap();
                let mut tape = Vec::new();
                let _ = hidden_forward(&self.shape_cfg, sl, self.static_params().unwrap(), &x, Some(&mut tape));
                let r = self.shape_cfg.width;
                for comp in 0..n {
                    // d(features) = produced weight row for this component.
                    let mut dfeat = Matrix::zeros(rows, r);
                    for b in 0..rows {
                        let p = detail.flat_params.row(b);
                        let drow = dfeat.row_mut(b);
                        for i in 0..r {
                            drow[i] = p[i * n + comp];
                        }
                    }
                    let dx = hidden_backward(&self.shape_cfg, sl, self.static_params().unwrap(), &tape, &dfeat, None, true)
                        .unwrap();
                    for b in 0..rows {
                        out.row_mut(b)[comp * d_x..(comp + 1) * d_x].copy_from_slice(dx.row(b));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Amplitudes `a_i` of the produced final layer for each condition row
    /// (last-layer mode, scalar output): the row `i` of the spatial
    /// expansion `u = sum_i a_i phi_i + b`. Returns a `B x r` matrix.
    pub fn produced_amplitudes(&self, conditions: &Matrix) -> Result<Matrix> {
        if self.param_cfg.target != ParamTarget::LastLayer {
            return Err(Error::UnsupportedConfiguration(
                "amplitude extraction requires a last-layer parameterized model".into(),
            ));
        }
        if self.shape_cfg.d_out != 1 {
            return Err(Error::UnsupportedConfiguration(
                "amplitude extraction is defined for scalar-output models".into(),
            ));
        }
        if conditions.cols() != self.d_cond() {
            return Err(Error::invalid(format!(
                "condition width {} does not match {}",
                conditions.cols(),
                self.d_cond()
            )));
        }
        let produced = chain_forward(conditions, self.theta(), &self.pn_layout, &self.pn_acts, None);
        let r = self.shape_cfg.width;
        Ok(Matrix::from_fn(conditions.rows(), r, |b, i| produced[(b, i)]))
    }

    /// Assembles the complete flat ShapeNet vector for a single condition
    /// row (the compile step of decoupled spatial query). Returns the flat
    /// vector together with the latent code.
    pub fn compile_condition(&self, condition: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        if condition.len() != self.d_cond() {
            return Err(Error::invalid(format!(
                "condition width {} does not match {}",
                condition.len(),
                self.d_cond()
            )));
        }
        let cond = Matrix::from_vec(1, condition.len(), condition.to_vec())?;
        let z = self.pn_front(&cond, None);
        let produced_len = Self::produced_len(&self.shape_cfg, &self.param_cfg);
        let mut produced = self.basis(self.theta(), 0).to_vec();
        for (k, &zk) in z.row(0).iter().enumerate() {
            for (o, &src) in produced.iter_mut().zip(self.basis(self.theta(), k + 1)) {
                *o += zk * src;
            }
        }
        debug_assert_eq!(produced.len(), produced_len);

        let flat = match self.param_cfg.target {
            ParamTarget::Full => produced,
            ParamTarget::LastLayer => {
                // Hidden segments come from the static parameters; the last
                // layer from the conditioning network's output.
                let mut flat = vec![0.0; self.shape_layout.total()];
                let sl = self.static_layout.as_ref().unwrap();
                let sp = self.static_params().unwrap();
                let n_shape = self.shape_layout.n_layers();
                for l in 0..n_shape - 1 {
                    let dst = self.shape_layout.weight(l);
                    flat[dst.offset..dst.offset + dst.len].copy_from_slice(sl.weight_slice(sp, l));
                    let dstb = self.shape_layout.bias(l);
                    flat[dstb.offset..dstb.offset + dstb.len].copy_from_slice(sl.bias_slice(sp, l));
                }
                let n = self.shape_cfg.d_out;
                let r = self.shape_cfg.width;
                let wdst = self.shape_layout.weight(n_shape - 1);
                flat[wdst.offset..wdst.offset + wdst.len].copy_from_slice(&produced[..n * r]);
                if self.param_cfg.last_layer_bias {
                    let bdst = self.shape_layout.bias(n_shape - 1);
                    flat[bdst.offset..bdst.offset + bdst.len].copy_from_slice(&produced[n * r..]);
                }
                flat
            }
        };
        Ok((flat, z.row(0).to_vec()))
    }
}

struct HyperLayerTape {
    input: Matrix,
    gs: Vec<Matrix>,
    /// Pre-activation of this layer's output (filled for activated layers).
    pre: Option<Matrix>,
}

fn activate_tape(m: &mut Matrix, act: Activation, tape: Option<&mut Vec<HyperLayerTape>>) -> Option<Matrix> {
    let pre = activate(m, act);
    if let Some(t) = tape {
        t.last_mut().expect("layer recorded before activation").pre = Some(pre);
        None
    } else {
        Some(pre)
    }
}

impl Model for NifModel {
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
        self.d_cond() + self.d_space()
    }

    fn d_out(&self) -> usize {
        self.shape_cfg.d_out
    }

    fn forward(&self, inputs: &Matrix) -> Result<Matrix> {
        match self.param_cfg.target {
            ParamTarget::Full => {
                let (cond, x) = self.split_inputs(inputs)?;
                let z = self.pn_front(&cond, None);
                Ok(self.hyper_forward(&z, &x, None))
            }
            ParamTarget::LastLayer => Ok(self.forward_detailed(inputs)?.u),
        }
    }

    fn forward_backward(
        &self,
        inputs: &Matrix,
        upstream: &mut dyn FnMut(&Matrix) -> Matrix,
    ) -> Result<(Matrix, Vec<f64>)> {
        let (cond, x) = self.split_inputs(inputs)?;
        let rows = inputs.rows();
        let mut dparams = vec![0.0; self.params.len()];
        let front = self.pn_layout.view_without_last_layer();
        let front_acts = &self.pn_acts[..self.pn_acts.len() - 1];

        match self.param_cfg.target {
            ParamTarget::Full => {
                let mut pn_tape = ChainTape { inputs: vec![], pres: vec![] };
                let z = chain_forward(&cond, self.theta(), &front, front_acts, Some(&mut pn_tape));
                let mut tape = Vec::new();
                let u = self.hyper_forward(&z, &x, Some(&mut tape));
                let dout = upstream(&u);
                let mut dz = Matrix::zeros(rows, self.param_cfg.bottleneck);
                self.hyper_backward(&z, &tape, &dout, Some(&mut dparams[..self.theta_len]), Some(&mut dz), false);
                chain_backward(&dz, self.theta(), &front, front_acts, &pn_tape, &mut dparams[..self.theta_len], false);
                Ok((u, dparams))
            }
            ParamTarget::LastLayer => {
                let mut pn_tape = ChainTape { inputs: vec![], pres: vec![] };
                let produced = chain_forward(&cond, self.theta(), &self.pn_layout, &self.pn_acts, Some(&mut pn_tape));
                let sl = self.static_layout.as_ref().unwrap();
                let mut shape_tape = Vec::new();
                let static_slice = &self.params[self.theta_len..];
                let feats = hidden_forward(&self.shape_cfg, sl, static_slice, &x, Some(&mut shape_tape));
                let u = self.last_layer_combine(&produced, &feats);
                let dout = upstream(&u);

                let n = self.shape_cfg.d_out;
                let r = self.shape_cfg.width;
                let mut dproduced = Matrix::zeros(rows, produced.cols());
                let mut dfeat = Matrix::zeros(rows, r);
                for b in 0..rows {
                    let du = dout.row(b);
                    let p = produced.row(b);
                    let f = feats.row(b);
                    let dp = dproduced.row_mut(b);
                    let df = dfeat.row_mut(b);
                    for o in 0..n {
                        let d = du[o];
                        if self.param_cfg.last_layer_bias {
                            dp[n * r + o] = d;
                        }
                        for i in 0..r {
                            dp[i * n + o] = d * f[i];
                            df[i] += d * p[i * n + o];
                        }
                    }
                }
                let (dtheta, dstatic) = dparams.split_at_mut(self.theta_len);
                chain_backward(&dproduced, self.theta(), &self.pn_layout, &self.pn_acts, &pn_tape, dtheta, false);
                hidden_backward(&self.shape_cfg, sl, static_slice, &shape_tape, &dfeat, Some(dstatic), false);
                Ok((u, dparams))
            }
        }
    }
}
