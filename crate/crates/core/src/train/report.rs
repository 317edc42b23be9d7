//! Root-mean-square error reporting in normalized and physical units.

use crate::datagen::PointCloudDataset;
use crate::error::Result;
use crate::nets::Model;
use serde::{Deserialize, Serialize};

const EVAL_CHUNK: usize = 8192;

/// Error of one parameter group (rows sharing the same parameter columns).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamGroupError {
    /// The shared parameter values, in physical units.
    pub param: Vec<f64>,
    pub rmse_normalized: f64,
    pub rmse_physical: f64,
    pub n_rows: usize,
}

/// Overall and per-parameter errors. The overall figure is the
/// weighted root mean of the per-group squared errors
/// (`overall^2 = sum n_g rmse_g^2 / sum n_g`), so groups recombine exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RmseReport {
    pub rmse_normalized: f64,
    pub rmse_physical: f64,
    pub n_rows: usize,
    pub per_param: Vec<ParamGroupError>,
}

/// Evaluates the model over the whole dataset and reports RMSE on the
/// normalized training scale and in de-normalized target units. With
/// `group_by_param` the report also carries one entry per distinct
/// parameter-column tuple.
pub fn rmse_report(model: &dyn Model, dataset: &PointCloudDataset, group_by_param: bool) -> Result<RmseReport> {
    let n = dataset.n_rows();
    let d_param = dataset.schema.d_param;
    // Group key -> (sum sq normalized, sum sq physical, count, param values).
    let mut groups: Vec<(Vec<u64>, Vec<f64>, f64, f64, usize)> = Vec::new();
    let mut total_norm = 0.0;
    let mut total_phys = 0.0;
    let mut total_entries = 0usize;

    let rows: Vec<usize> = (0..n).collect();
    for chunk in rows.chunks(EVAL_CHUNK) {
        let inputs = dataset.gather_inputs(Some(chunk));
        let targets = dataset.gather_targets(Some(chunk));
        let preds = model.forward(&inputs)?;
        let preds_phys = dataset.denormalize_outputs(&preds);
        let targets_phys = dataset.denormalize_outputs(&targets);
        for (local, &row) in chunk.iter().enumerate() {
            let mut sq_norm = 0.0;
            let mut sq_phys = 0.0;
            for j in 0..dataset.schema.d_out {
                let dn = preds[(local, j)] - targets[(local, j)];
                sq_norm += dn * dn;
                let dp = preds_phys[(local, j)] - targets_phys[(local, j)];
                sq_phys += dp * dp;
            }
            total_norm += sq_norm;
            total_phys += sq_phys;
            total_entries += dataset.schema.d_out;
            if group_by_param {
                let key: Vec<u64> = dataset.table.row(row)[..d_param].iter().map(|v| v.to_bits()).collect();
                match groups.iter_mut().find(|(k, ..)| *k == key) {
                    Some((_, _, gn, gp, count)) => {
                        *gn += sq_norm;
                        *gp += sq_phys;
                        *count += 1;
                    }
                    None => {
                        let param: Vec<f64> = (0..d_param)
                            .map(|j| dataset.normalization[j].invert(dataset.table[(row, j)]))
                            .collect();
                        groups.push((key, param, sq_norm, sq_phys, 1));
                    }
                }
            }
        }
    }

    let denom = total_entries.max(1) as f64;
    let per_param = groups
        .into_iter()
        .map(|(_, param, gn, gp, count)| {
            let gd = (count * dataset.schema.d_out) as f64;
            ParamGroupError {
                param,
                rmse_normalized: (gn / gd).sqrt(),
                rmse_physical: (gp / gd).sqrt(),
                n_rows: count,
            }
        })
        .collect();
    Ok(RmseReport {
        rmse_normalized: (total_norm / denom).sqrt(),
        rmse_physical: (total_phys / denom).sqrt(),
        n_rows: n,
        per_param,
    })
}
