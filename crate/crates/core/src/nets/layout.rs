//! Bijection between a flat parameter vector and the per-layer weight and
//! bias tensors of a chain network.
//!
//! Segment order is `vec(W_1), ..., vec(W_L), b_1, ..., b_L` with
//! column-major vectorization of each `n_out x n_in` weight matrix.

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// One contiguous slice of the flat vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub offset: usize,
    pub len: usize,
    /// Output dimension (rows of the weight matrix, or bias length).
    pub n_out: usize,
    /// Input dimension (columns of the weight matrix; 1 for biases).
    pub n_in: usize,
}

/// Offsets of every weight and bias segment for a fixed layer-dimension
/// list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatParamLayout {
    /// `(n_in, n_out)` per layer, input to output.
    dims: Vec<(usize, usize)>,
    weights: Vec<Segment>,
    biases: Vec<Segment>,
    total: usize,
}

impl FlatParamLayout {
    pub fn new(dims: &[(usize, usize)]) -> Self {
        let mut weights = Vec::with_capacity(dims.len());
        let mut offset = 0;
        for &(n_in, n_out) in dims {
            weights.push(Segment { offset, len: n_in * n_out, n_out, n_in });
            offset += n_in * n_out;
        }
        let mut biases = Vec::with_capacity(dims.len());
        for &(_, n_out) in dims {
            biases.push(Segment { offset, len: n_out, n_out, n_in: 1 });
            offset += n_out;
        }
        FlatParamLayout { dims: dims.to_vec(), weights, biases, total: offset }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn n_layers(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[(usize, usize)] {
        &self.dims
    }

    /// View of the same layout with the final layer's segments removed.
    /// Retained segments keep their absolute offsets (and `total` stays the
    /// parent's), so the view indexes into the parent's flat vector; it is
    /// not suitable for `pack`/`unpack`.
    pub fn view_without_last_layer(&self) -> FlatParamLayout {
        let n = self.dims.len() - 1;
        FlatParamLayout {
            dims: self.dims[..n].to_vec(),
            weights: self.weights[..n].to_vec(),
            biases: self.biases[..n].to_vec(),
            total: self.total,
        }
    }

    pub fn weight(&self, layer: usize) -> Segment {
        self.weights[layer]
    }

    pub fn bias(&self, layer: usize) -> Segment {
        self.biases[layer]
    }

    pub fn weight_slice<'a>(&self, flat: &'a [f64], layer: usize) -> &'a [f64] {
        let s = self.weights[layer];
        &flat[s.offset..s.offset + s.len]
    }

    pub fn bias_slice<'a>(&self, flat: &'a [f64], layer: usize) -> &'a [f64] {
        let s = self.biases[layer];
        &flat[s.offset..s.offset + s.len]
    }

    /// Expands a flat vector into `(weights, biases)`, each weight as an
    /// `n_out x n_in` matrix.
    pub fn unpack(&self, flat: &[f64]) -> Result<(Vec<Matrix>, Vec<Vec<f64>>)> {
        if flat.len() != self.total {
            return Err(Error::invalid(format!(
                "flat vector has {} entries, layout requires {}",
                flat.len(),
                self.total
            )));
        }
        let mut ws = Vec::with_capacity(self.dims.len());
        let mut bs = Vec::with_capacity(self.dims.len());
        for l in 0..self.dims.len() {
            let seg = self.weights[l];
            let data = &flat[seg.offset..seg.offset + seg.len];
            // Column-major storage: entry (o, i) sits at i * n_out + o.
            let w = Matrix::from_fn(seg.n_out, seg.n_in, |o, i| data[i * seg.n_out + o]);
            ws.push(w);
            bs.push(self.bias_slice(flat, l).to_vec());
        }
        Ok((ws, bs))
    }

    /// Inverse of [`FlatParamLayout::unpack`].
    pub fn pack(&self, weights: &[Matrix], biases: &[Vec<f64>]) -> Result<Vec<f64>> {
        if weights.len() != self.dims.len() || biases.len() != self.dims.len() {
            return Err(Error::invalid("pack: wrong number of layers"));
        }
        let mut flat = vec![0.0; self.total];
        for (l, w) in weights.iter().enumerate() {
            let seg = self.weights[l];
            if w.rows() != seg.n_out || w.cols() != seg.n_in {
                return Err(Error::invalid(format!("pack: layer {l} weight shape mismatch")));
            }
            for i in 0..seg.n_in {
                for o in 0..seg.n_out {
                    flat[seg.offset + i * seg.n_out + o] = w[(o, i)];
                }
            }
        }
        for (l, b) in biases.iter().enumerate() {
            let seg = self.biases[l];
            if b.len() != seg.n_out {
                return Err(Error::invalid(format!("pack: layer {l} bias length mismatch")));
            }
            flat[seg.offset..seg.offset + seg.len].copy_from_slice(b);
        }
        Ok(flat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngState;

    #[test]
    fn segments_are_disjoint_contiguous_and_cover() {
        let layout = FlatParamLayout::new(&[(1, 2), (2, 2), (2, 1)]);
        let mut covered = vec![false; layout.total()];
        for l in 0..3 {
            for s in [layout.weight(l), layout.bias(l)] {
                for i in s.offset..s.offset + s.len {
                    assert!(!covered[i], "overlap at {i}");
                    covered[i] = true;
                }
            }
        }
        assert!(covered.iter().all(|&c| c));
        assert_eq!(layout.total(), 2 + 4 + 2 + 2 + 2 + 1);
    }

    #[test]
    fn pack_unpack_round_trips_random_vectors() {
        let layout = FlatParamLayout::new(&[(3, 5), (5, 5), (5, 2)]);
        let mut rng = RngState::new(4);
        let flat: Vec<f64> = (0..layout.total()).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let (ws, bs) = layout.unpack(&flat).unwrap();
        let back = layout.pack(&ws, &bs).unwrap();
        assert_eq!(flat, back);
    }

    #[test]
    fn wrong_lengths_rejected() {
        let layout = FlatParamLayout::new(&[(2, 2)]);
        assert!(layout.unpack(&[0.0; 3]).is_err());
    }
}
