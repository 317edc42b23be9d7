//! Dataset wiring for hypernetwork sparse sensing: sensor readings become
//! the conditioning columns of every row of their snapshot.

use crate::datagen::{NormalizationKind, PointCloudDataset, PointCloudSchema};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Row offsets of the equal-length, identically-ordered snapshots of a
/// time-resolved dataset. Returns `(bounds, m_x)` with one extra trailing
/// bound.
fn snapshot_bounds(dataset: &PointCloudDataset) -> Result<(Vec<usize>, usize)> {
    let schema = &dataset.schema;
    if schema.d_param != 0 || schema.d_time != 1 || schema.d_out != 1 {
        return Err(Error::invalid(
            "expected a time-resolved dataset with no parameter columns and one output",
        ));
    }
    let n = dataset.n_rows();
    if n == 0 {
        return Err(Error::invalid("empty dataset"));
    }
    let mut bounds = vec![0usize];
    for i in 1..n {
        if dataset.table[(i, 0)].to_bits() != dataset.table[(i - 1, 0)].to_bits() {
            bounds.push(i);
        }
    }
    bounds.push(n);
    let m_x = bounds[1] - bounds[0];
    for w in bounds.windows(2) {
        if w[1] - w[0] != m_x {
            return Err(Error::invalid("snapshots have unequal point counts"));
        }
    }
    let space = schema.space_range();
    for w in bounds.windows(2).skip(1) {
        for local in 0..m_x {
            for d in space.clone() {
                if dataset.table[(w[0] + local, d)] != dataset.table[(bounds[0] + local, d)] {
                    return Err(Error::invalid("snapshots do not share a common point ordering"));
                }
            }
        }
    }
    Ok((bounds, m_x))
}

/// Snapshot-matrix form of a time-resolved dataset, de-normalized back to
/// physical units: `values` is `M_x x M_t`, `grid` the shared spatial
/// points, `times` the physical snapshot times (with their normalized
/// counterparts for feeding models), and `weights` the per-point quadrature
/// weights when the schema carries them.
#[derive(Debug, Clone)]
pub struct SnapshotView {
    pub values: Matrix,
    pub grid: Matrix,
    pub times: Vec<f64>,
    pub times_normalized: Vec<f64>,
    pub weights: Option<Vec<f64>>,
}

/// Extracts the snapshot matrix of a time-resolved single-output dataset.
pub fn snapshot_matrix(dataset: &PointCloudDataset) -> Result<SnapshotView> {
    let (bounds, m_x) = snapshot_bounds(dataset)?;
    let m_t = bounds.len() - 1;
    let schema = &dataset.schema;
    let out_col = schema.out_range().start;
    let space = schema.space_range();
    let mut values = Matrix::zeros(m_x, m_t);
    let mut times = Vec::with_capacity(m_t);
    let mut times_normalized = Vec::with_capacity(m_t);
    for (snap, w) in bounds.windows(2).enumerate() {
        times_normalized.push(dataset.table[(w[0], 0)]);
        times.push(dataset.normalization[0].invert(dataset.table[(w[0], 0)]));
        for local in 0..m_x {
            let v = dataset.table[(w[0] + local, out_col)];
            values[(local, snap)] = dataset.normalization[out_col].invert(v);
        }
    }
    let mut grid = Matrix::zeros(m_x, schema.d_space);
    for local in 0..m_x {
        for (k, d) in space.clone().enumerate() {
            grid[(local, k)] = dataset.normalization[d].invert(dataset.table[(local, d)]);
        }
    }
    let weights = schema.weight_col().map(|wc| (0..m_x).map(|i| dataset.table[(i, wc)]).collect());
    Ok(SnapshotView { values, grid, times, times_normalized, weights })
}

/// Rebuilds a time-resolved single-output dataset into sparse-sensing form:
/// each output row is `(u(x_s1, t) ... u(x_sp, t), x, u(x, t))` where the
/// sensor values are read from the snapshot the row belongs to.
///
/// The input must be snapshot-structured: rows grouped by identical time
/// values, every group listing the same spatial points in the same order.
/// All columns of the result are standard-normalized (sensor readings
/// included), fitting the statistics on the data given here.
pub fn nif_sparse_sensing_build(sensor_indices: &[usize], dataset: &PointCloudDataset) -> Result<PointCloudDataset> {
    let schema = &dataset.schema;
    if sensor_indices.is_empty() {
        return Err(Error::invalid("need at least one sensor"));
    }
    let (snapshot_bounds, m_x) = snapshot_bounds(dataset)?;
    let space = schema.space_range();
    let p = sensor_indices.len();
    for &s in sensor_indices {
        if s >= m_x {
            return Err(Error::invalid(format!("sensor index {s} out of range for {m_x} grid points")));
        }
    }

    let out_col = schema.out_range().start;
    let d_space = schema.d_space;
    let m_t = snapshot_bounds.len() - 1;
    let mut raw = Matrix::zeros(m_t * m_x, p + d_space + 1);
    let mut row = 0;
    for w in snapshot_bounds.windows(2) {
        let base = w[0];
        let sensor_vals: Vec<f64> = sensor_indices.iter().map(|&s| dataset.table[(base + s, out_col)]).collect();
        for local in 0..m_x {
            let dst = raw.row_mut(row);
            dst[..p].copy_from_slice(&sensor_vals);
            for (k, d) in space.clone().enumerate() {
                dst[p + k] = dataset.table[(base + local, d)];
            }
            dst[p + d_space] = dataset.table[(base + local, out_col)];
            row += 1;
        }
    }

    let out_schema = PointCloudSchema::new(p, 0, d_space, 1, false)?;
    PointCloudDataset::from_raw(out_schema, raw, NormalizationKind::Standard)
}
