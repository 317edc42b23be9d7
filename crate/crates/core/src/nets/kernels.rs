//! Batched affine-layer kernels over flat column-major weight slices.
//!
//! All loops are written so the innermost dimension walks contiguous
//! memory: weights are column-major, activations row-major.

use super::activation::Activation;
use super::layout::FlatParamLayout;
use crate::numerics::Matrix;

/// `out[b, :] = x[b, :] * W^T + bias` with `W` column-major in `w`.
pub(crate) fn affine_forward(x: &Matrix, w: &[f64], bias: &[f64], d_out: usize) -> Matrix {
    let d_in = x.cols();
    debug_assert_eq!(w.len(), d_in * d_out);
    debug_assert_eq!(bias.len(), d_out);
    let mut out = Matrix::zeros(x.rows(), d_out);
    for b in 0..x.rows() {
        let xrow = x.row(b);
        let orow = out.row_mut(b);
        orow.copy_from_slice(bias);
        for (i, &xi) in xrow.iter().enumerate() {
            let wcol = &w[i * d_out..(i + 1) * d_out];
            for (o, &wv) in orow.iter_mut().zip(wcol) {
                *o += xi * wv;
            }
        }
    }
    out
}

/// `dx[b, :] += dy[b, :] * W` (data gradient through the same layer).
pub(crate) fn affine_backward_data(dy: &Matrix, w: &[f64], d_in: usize, dx: &mut Matrix) {
    let d_out = dy.cols();
    debug_assert_eq!(w.len(), d_in * d_out);
    debug_assert_eq!(dx.cols(), d_in);
    for b in 0..dy.rows() {
        let dyrow = dy.row(b);
        let dxrow = dx.row_mut(b);
        for (i, dxi) in dxrow.iter_mut().enumerate() {
            let wcol = &w[i * d_out..(i + 1) * d_out];
            let mut acc = 0.0;
            for (&d, &wv) in dyrow.iter().zip(wcol) {
                acc += d * wv;
            }
            *dxi += acc;
        }
    }
}

/// `dW += x^T dy` (column-major accumulation) and `db += column sums of dy`.
pub(crate) fn affine_backward_params(x: &Matrix, dy: &Matrix, dw: &mut [f64], db: &mut [f64]) {
    let d_in = x.cols();
    let d_out = dy.cols();
    debug_assert_eq!(dw.len(), d_in * d_out);
    debug_assert_eq!(db.len(), d_out);
    for b in 0..x.rows() {
        let xrow = x.row(b);
        let dyrow = dy.row(b);
        for (o, &d) in db.iter_mut().zip(dyrow) {
            *o += d;
        }
        for (i, &xi) in xrow.iter().enumerate() {
            let wcol = &mut dw[i * d_out..(i + 1) * d_out];
            for (o, &d) in wcol.iter_mut().zip(dyrow) {
                *o += xi * d;
            }
        }
    }
}

/// Applies `act` in place, returning the saved pre-activations.
pub(crate) fn activate(m: &mut Matrix, act: Activation) -> Matrix {
    let pre = m.clone();
    for v in m.data_mut() {
        *v = act.apply(*v);
    }
    pre
}

/// `dpre = dpost .* act'(pre)` in place on `dpost`.
pub(crate) fn activate_backward(dpost: &mut Matrix, pre: &Matrix, act: Activation) {
    for (d, &p) in dpost.data_mut().iter_mut().zip(pre.data()) {
        *d *= act.deriv(p);
    }
}

/// Forward tape of a plain chain (no skip connections).
pub(crate) struct ChainTape {
    /// Input of each layer.
    pub inputs: Vec<Matrix>,
    /// Pre-activations of each activated layer (`None` for linear layers).
    pub pres: Vec<Option<Matrix>>,
}

/// Plain affine chain: layer `l` computes `act[l](x W_l^T + b_l)` with
/// `act[l] = None` meaning linear. Records a tape when requested.
pub(crate) fn chain_forward(
    x: &Matrix,
    flat: &[f64],
    layout: &FlatParamLayout,
    acts: &[Option<Activation>],
    mut tape: Option<&mut ChainTape>,
) -> Matrix {
    debug_assert_eq!(acts.len(), layout.n_layers());
    let mut cur = x.clone();
    for l in 0..layout.n_layers() {
        let seg = layout.weight(l);
        let mut next = affine_forward(&cur, layout.weight_slice(flat, l), layout.bias_slice(flat, l), seg.n_out);
        let pre = match acts[l] {
            Some(a) => Some(activate(&mut next, a)),
            None => None,
        };
        if let Some(t) = tape.as_deref_mut() {
            t.inputs.push(cur);
            t.pres.push(pre);
        }
        cur = next;
    }
    cur
}

/// Reverse pass matching [`chain_forward`]. Accumulates parameter gradients
/// into `dflat` and returns the input gradient when `want_dx`.
pub(crate) fn chain_backward(
    dout: &Matrix,
    flat: &[f64],
    layout: &FlatParamLayout,
    acts: &[Option<Activation>],
    tape: &ChainTape,
    dflat: &mut [f64],
    want_dx: bool,
) -> Option<Matrix> {
    let n = layout.n_layers();
    let mut dcur = dout.clone();
    for l in (0..n).rev() {
        if let (Some(a), Some(pre)) = (acts[l], tape.pres[l].as_ref()) {
            activate_backward(&mut dcur, pre, a);
        }
        let wseg = layout.weight(l);
        let bseg = layout.bias(l);
        {
            let (dw, db) = {
                // Weight and bias segments are disjoint; split at the bias
                // block which always follows all weight blocks.
                let (head, tail) = dflat.split_at_mut(bseg.offset);
                (&mut head[wseg.offset..wseg.offset + wseg.len], &mut tail[..bseg.len])
            };
            affine_backward_params(&tape.inputs[l], &dcur, dw, db);
        }
        if l > 0 || want_dx {
            let d_in = wseg.n_in;
            let mut dx = Matrix::zeros(dcur.rows(), d_in);
            affine_backward_data(&dcur, layout.weight_slice(flat, l), d_in, &mut dx);
            dcur = dx;
        } else {
            return None;
        }
    }
    want_dx.then_some(dcur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngState;

    #[test]
    fn chain_matches_manual_two_layer_evaluation() {
        let layout = FlatParamLayout::new(&[(2, 3), (3, 1)]);
        let mut rng = RngState::new(6);
        let flat: Vec<f64> = (0..layout.total()).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let x = Matrix::from_fn(4, 2, |_, _| rng.uniform(-1.0, 1.0));
        let acts = [Some(Activation::Tanh), None];
        let out = chain_forward(&x, &flat, &layout, &acts, None);

        let (ws, bs) = layout.unpack(&flat).unwrap();
        for b in 0..4 {
            let mut h = [0.0; 3];
            for o in 0..3 {
                h[o] = (ws[0][(o, 0)] * x[(b, 0)] + ws[0][(o, 1)] * x[(b, 1)] + bs[0][o]).tanh();
            }
            let y = ws[1][(0, 0)] * h[0] + ws[1][(0, 1)] * h[1] + ws[1][(0, 2)] * h[2] + bs[1][0];
            assert!((out[(b, 0)] - y).abs() < 1e-14);
        }
    }

    #[test]
    fn chain_gradients_match_finite_differences() {
        let layout = FlatParamLayout::new(&[(2, 4), (4, 2)]);
        let mut rng = RngState::new(14);
        let mut flat: Vec<f64> = (0..layout.total()).map(|_| rng.uniform(-0.8, 0.8)).collect();
        let x = Matrix::from_fn(3, 2, |_, _| rng.uniform(-1.0, 1.0));
        let acts = [Some(Activation::Swish), None];
        // Loss: sum of outputs.
        let mut tape = ChainTape { inputs: vec![], pres: vec![] };
        let out = chain_forward(&x, &flat, &layout, &acts, Some(&mut tape));
        let ones = Matrix::from_fn(out.rows(), out.cols(), |_, _| 1.0);
        let mut dflat = vec![0.0; flat.len()];
        let dx = chain_backward(&ones, &flat, &layout, &acts, &tape, &mut dflat, true).unwrap();

        let h = 1e-6;
        let loss = |flat: &[f64], x: &Matrix| -> f64 {
            chain_forward(x, flat, &layout, &acts, None).data().iter().sum()
        };
        for p in 0..flat.len() {
            let orig = flat[p];
            flat[p] = orig + h;
            let up = loss(&flat, &x);
            flat[p] = orig - h;
            let dn = loss(&flat, &x);
            flat[p] = orig;
            let fd = (up - dn) / (2.0 * h);
            assert!((dflat[p] - fd).abs() < 1e-6 * fd.abs().max(1.0), "param {p}");
        }
        // Input gradient check on one coordinate.
        let mut xp = x.clone();
        xp[(1, 0)] += h;
        let up = loss(&flat, &xp);
        xp[(1, 0)] -= 2.0 * h;
        let dn = loss(&flat, &xp);
        let fd = (up - dn) / (2.0 * h);
        assert!((dx[(1, 0)] - fd).abs() < 1e-6 * fd.abs().max(1.0));
    }
}
