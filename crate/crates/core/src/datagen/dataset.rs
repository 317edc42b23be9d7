//! Point-cloud tables: one row per sample with schema and normalization
//! state.

use super::normalize::{normalize_fit, NormalizationKind, NormalizationSpec};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Column roles of a point-cloud table, in storage order:
/// parameters, time, spatial coordinates, outputs, optional quadrature
/// weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointCloudSchema {
    pub d_param: usize,
    /// 0 or 1.
    pub d_time: usize,
    pub d_space: usize,
    pub d_out: usize,
    pub has_weight: bool,
}

impl PointCloudSchema {
    pub fn new(d_param: usize, d_time: usize, d_space: usize, d_out: usize, has_weight: bool) -> Result<Self> {
        if d_time > 1 {
            return Err(Error::invalid("d_time must be 0 or 1"));
        }
        if d_space == 0 || d_out == 0 {
            return Err(Error::invalid("schema requires d_space >= 1 and d_out >= 1"));
        }
        Ok(PointCloudSchema { d_param, d_time, d_space, d_out, has_weight })
    }

    pub fn n_cols(&self) -> usize {
        self.d_param + self.d_time + self.d_space + self.d_out + usize::from(self.has_weight)
    }

    /// Width of the model-input block (parameters, time, space).
    pub fn n_inputs(&self) -> usize {
        self.d_param + self.d_time + self.d_space
    }

    /// Width of the conditioning block (parameters and time).
    pub fn n_condition(&self) -> usize {
        self.d_param + self.d_time
    }

    pub fn space_range(&self) -> std::ops::Range<usize> {
        let start = self.d_param + self.d_time;
        start..start + self.d_space
    }

    pub fn out_range(&self) -> std::ops::Range<usize> {
        let start = self.d_param + self.d_time + self.d_space;
        start..start + self.d_out
    }

    pub fn weight_col(&self) -> Option<usize> {
        self.has_weight.then(|| self.n_cols() - 1)
    }
}

/// A table of samples realizing the empirical training measure, stored in
/// normalized units together with the per-column transforms that undo the
/// normalization.
#[derive(Debug, Clone)]
pub struct PointCloudDataset {
    pub schema: PointCloudSchema,
    pub table: Matrix,
    pub normalization: Vec<NormalizationSpec>,
}

impl PointCloudDataset {
    /// Wraps an already-normalized table. Validates shapes, finiteness and
    /// strictly positive weights.
    pub fn new(schema: PointCloudSchema, table: Matrix, normalization: Vec<NormalizationSpec>) -> Result<Self> {
        if table.cols() != schema.n_cols() {
            return Err(Error::invalid(format!(
                "table has {} columns, schema requires {}",
                table.cols(),
                schema.n_cols()
            )));
        }
        if normalization.len() != schema.n_cols() {
            return Err(Error::invalid(format!(
                "{} normalization specs for {} columns",
                normalization.len(),
                schema.n_cols()
            )));
        }
        table.ensure_finite("dataset table")?;
        if let Some(w) = schema.weight_col() {
            for i in 0..table.rows() {
                if !(table[(i, w)] > 0.0) {
                    return Err(Error::invalid(format!(
                        "quadrature weight at row {i} must be strictly positive"
                    )));
                }
            }
        }
        Ok(PointCloudDataset { schema, table, normalization })
    }

    /// Normalizes a raw table column-by-column with the given kind on every
    /// non-weight column (weights are never transformed) and wraps the
    /// result.
    pub fn from_raw(schema: PointCloudSchema, raw: Matrix, kind: NormalizationKind) -> Result<Self> {
        if raw.cols() != schema.n_cols() {
            return Err(Error::invalid(format!(
                "raw table has {} columns, schema requires {}",
                raw.cols(),
                schema.n_cols()
            )));
        }
        let weight_col = schema.weight_col();
        let mut specs = Vec::with_capacity(schema.n_cols());
        let mut table = raw;
        for j in 0..schema.n_cols() {
            let spec = if Some(j) == weight_col || table.rows() == 0 {
                NormalizationSpec::Identity
            } else {
                normalize_fit(kind, &table.col_vec(j), j)?
            };
            for i in 0..table.rows() {
                table[(i, j)] = spec.apply(table[(i, j)]);
            }
            specs.push(spec);
        }
        PointCloudDataset::new(schema, table, specs)
    }

    pub fn n_rows(&self) -> usize {
        self.table.rows()
    }

    /// Copies the input block (param, time, space columns) of the selected
    /// rows into a dense matrix. `None` selects every row.
    pub fn gather_inputs(&self, rows: Option<&[usize]>) -> Matrix {
        self.gather(rows, 0, self.schema.n_inputs())
    }

    /// Copies the target block of the selected rows.
    pub fn gather_targets(&self, rows: Option<&[usize]>) -> Matrix {
        self.gather(rows, self.schema.out_range().start, self.schema.d_out)
    }

    /// Quadrature weights of the selected rows, if the schema has them.
    pub fn gather_weights(&self, rows: Option<&[usize]>) -> Option<Vec<f64>> {
        let w = self.schema.weight_col()?;
        Some(match rows {
            Some(idx) => idx.iter().map(|&i| self.table[(i, w)]).collect(),
            None => self.table.col_vec(w),
        })
    }

    fn gather(&self, rows: Option<&[usize]>, start: usize, width: usize) -> Matrix {
        let n = rows.map_or(self.n_rows(), |r| r.len());
        let mut out = Matrix::zeros(n, width);
        for dst in 0..n {
            let src = rows.map_or(dst, |r| r[dst]);
            out.row_mut(dst).copy_from_slice(&self.table.row(src)[start..start + width]);
        }
        out
    }

    /// Re-expresses the table under different per-column transforms, e.g. a
    /// held-out set under its training set's normalization so a trained
    /// model sees consistently scaled inputs.
    pub fn renormalize_to(&self, specs: &[NormalizationSpec]) -> Result<PointCloudDataset> {
        if specs.len() != self.normalization.len() {
            return Err(Error::invalid(format!(
                "{} reference specs for {} columns",
                specs.len(),
                self.normalization.len()
            )));
        }
        let mut table = self.table.clone();
        for j in 0..table.cols() {
            for i in 0..table.rows() {
                let physical = self.normalization[j].invert(table[(i, j)]);
                table[(i, j)] = specs[j].apply(physical);
            }
        }
        PointCloudDataset::new(self.schema, table, specs.to_vec())
    }

    /// Undoes the output-column normalization on a prediction matrix whose
    /// columns line up with the schema's output block.
    pub fn denormalize_outputs(&self, preds: &Matrix) -> Matrix {
        let out_start = self.schema.out_range().start;
        let mut phys = preds.clone();
        for j in 0..self.schema.d_out {
            let spec = &self.normalization[out_start + j];
            for i in 0..phys.rows() {
                phys[(i, j)] = spec.invert(phys[(i, j)]);
            }
        }
        phys
    }
}
