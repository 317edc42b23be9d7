//! Point-cloud CSV format with a JSON normalization sidecar.
//!
//! Layout: a single comment header encoding the schema,
//! `# nif-pointcloud v1; roles=param:1,time:1,space:1,out:1,weight:0`,
//! followed by one comma-separated numeric row per sample. Values are
//! written in Rust's shortest round-trip form, so `read(write(d))`
//! reproduces the table bit-for-bit. Normalization state lives in
//! `<name>.norm.json` next to the table.

use super::dataset::{PointCloudDataset, PointCloudSchema};
use super::normalize::NormalizationSpec;
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

const MAGIC: &str = "# nif-pointcloud v1;";

#[derive(Serialize, Deserialize)]
struct Sidecar {
    columns: Vec<NormalizationSpec>,
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("norm.json")
}

/// Writes the dataset table as CSV plus its normalization sidecar.
pub fn write_pointcloud(path: &Path, ds: &PointCloudDataset) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let s = &ds.schema;
    writeln!(
        w,
        "{MAGIC} roles=param:{},time:{},space:{},out:{},weight:{}",
        s.d_param,
        s.d_time,
        s.d_space,
        s.d_out,
        usize::from(s.has_weight)
    )?;
    let mut line = String::new();
    for i in 0..ds.table.rows() {
        line.clear();
        for (j, v) in ds.table.row(i).iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            write!(line, "{v}").expect("formatting into a String cannot fail");
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;

    let sidecar = Sidecar { columns: ds.normalization.clone() };
    let json = serde_json::to_string_pretty(&sidecar)?;
    std::fs::write(sidecar_path(path), json)?;
    Ok(())
}

/// Reads a dataset written by [`write_pointcloud`]. A missing sidecar is
/// treated as identity normalization (a raw table).
pub fn read_pointcloud(path: &Path) -> Result<PointCloudDataset> {
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse { msg: "empty file".into(), line: 1 })??;
    let schema = parse_header(&header)?;

    let n_cols = schema.n_cols();
    let mut data = Vec::new();
    let mut n_rows = 0;
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0;
        for cell in line.split(',') {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                msg: format!("non-numeric cell {:?}", cell.trim()),
                line: line_no,
            })?;
            data.push(v);
            count += 1;
        }
        if count != n_cols {
            return Err(Error::Parse {
                msg: format!("row has {count} cells, schema requires {n_cols}"),
                line: line_no,
            });
        }
        n_rows += 1;
    }
    let table = Matrix::from_vec(n_rows, n_cols, data)?;

    let sc_path = sidecar_path(path);
    let normalization = if sc_path.exists() {
        let text = std::fs::read_to_string(&sc_path)?;
        let sidecar: Sidecar = serde_json::from_str(&text)?;
        if sidecar.columns.len() != n_cols {
            return Err(Error::Parse {
                msg: format!(
                    "sidecar has {} column specs, schema requires {n_cols}",
                    sidecar.columns.len()
                ),
                line: 0,
            });
        }
        sidecar.columns
    } else {
        vec![NormalizationSpec::Identity; n_cols]
    };

    PointCloudDataset::new(schema, table, normalization)
}

fn parse_header(header: &str) -> Result<PointCloudSchema> {
    let rest = header.strip_prefix(MAGIC).ok_or_else(|| Error::Parse {
        msg: format!("missing {MAGIC:?} header"),
        line: 1,
    })?;
    let roles = rest
        .trim()
        .strip_prefix("roles=")
        .ok_or_else(|| Error::Parse { msg: "missing roles= block".into(), line: 1 })?;

    let (mut d_param, mut d_time, mut d_space, mut d_out, mut weight) = (0, 0, 0, 0, 0);
    for piece in roles.split(',') {
        let (name, count) = piece
            .split_once(':')
            .ok_or_else(|| Error::Parse { msg: format!("malformed role {piece:?}"), line: 1 })?;
        let count: usize = count.trim().parse().map_err(|_| Error::Parse {
            msg: format!("non-numeric role count in {piece:?}"),
            line: 1,
        })?;
        match name.trim() {
            "param" => d_param = count,
            "time" => d_time = count,
            "space" => d_space = count,
            "out" => d_out = count,
            "weight" => weight = count,
            other => {
                return Err(Error::Parse {
                    msg: format!("unknown role token {other:?}"),
                    line: 1,
                })
            }
        }
    }
    if weight > 1 {
        return Err(Error::Parse { msg: "weight count must be 0 or 1".into(), line: 1 });
    }
    PointCloudSchema::new(d_param, d_time, d_space, d_out, weight == 1)
}
