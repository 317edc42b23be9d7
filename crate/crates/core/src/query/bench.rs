//! Wall-clock and flop comparison of decoupled versus monolithic spatial
//! query.

use super::compile::{compile, CompiledField};
use super::flops::{flops_per_point, FlopMode};
use crate::error::{Error, Result};
use crate::nets::{CoordNet, Model, NifModel};
use crate::numerics::{Matrix, RngState};
use serde::Serialize;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct QueryBenchConfig {
    pub n_points: usize,
    pub repeats: usize,
    /// Seed for the query point cloud.
    pub seed: u64,
    /// Reconstruction errors of the two models on their shared training
    /// data, when the caller has them (recorded, not measured here).
    pub recon_errors: Option<(f64, f64)>,
}

impl Default for QueryBenchConfig {
    fn default() -> Self {
        QueryBenchConfig { n_points: 100_000, repeats: 5, seed: 0, recon_errors: None }
    }
}

/// Per-model benchmark row.
#[derive(Debug, Clone, Serialize)]
pub struct BenchEntry {
    pub label: String,
    pub width: usize,
    pub flops_forward: u64,
    pub flops_gradient: u64,
    pub ns_per_point_forward: f64,
    pub ns_per_point_gradient: f64,
    /// One-time conditioning cost, amortized over all queries (zero for the
    /// monolithic model).
    pub compile_ns: f64,
    pub recon_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryBenchReport {
    pub n_points: usize,
    pub repeats: usize,
    pub machine: String,
    pub entries: Vec<BenchEntry>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs[xs.len() / 2]
}

fn time_median<F: FnMut()>(repeats: usize, mut f: F) -> f64 {
    let mut samples = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let t0 = Instant::now();
        f();
        samples.push(t0.elapsed().as_nanos() as f64);
    }
    median(samples)
}

/// Benchmarks a compiled hypernetwork field against a monolithic
/// space-time network on the same random point cloud. The monolithic model
/// answers the same queries by carrying the condition as extra input
/// columns. Wall times are medians over `repeats` of a monotonic clock;
/// flop counts come from the closed-form formulas.
pub fn run_benchmark(
    nif: &NifModel,
    condition: &[f64],
    monolithic: &CoordNet,
    cfg: &QueryBenchConfig,
) -> Result<QueryBenchReport> {
    if cfg.repeats == 0 {
        return Err(Error::invalid("repeats must be >= 1"));
    }
    let d_space = nif.d_space();
    if monolithic.cfg().d_in != condition.len() + d_space {
        return Err(Error::invalid(format!(
            "monolithic model takes {} inputs, condition {} + space {} given",
            monolithic.cfg().d_in,
            condition.len(),
            d_space
        )));
    }

    let mut rng = RngState::new(cfg.seed);
    let points = Matrix::from_fn(cfg.n_points, d_space, |_, _| rng.uniform(-1.0, 1.0));
    let mut augmented = Matrix::zeros(cfg.n_points, condition.len() + d_space);
    for b in 0..cfg.n_points {
        augmented.row_mut(b)[..condition.len()].copy_from_slice(condition);
        augmented.row_mut(b)[condition.len()..].copy_from_slice(points.row(b));
    }

    let t0 = Instant::now();
    let field: CompiledField = compile(nif, condition)?;
    let compile_ns = t0.elapsed().as_nanos() as f64;

    let denom = cfg.n_points.max(1) as f64;
    let nif_fwd = time_median(cfg.repeats, || {
        let _ = field.eval_points(&points);
    }) / denom;
    let nif_grad = time_median(cfg.repeats, || {
        let _ = field.eval_gradient(&points);
    }) / denom;
    let mono_fwd = time_median(cfg.repeats, || {
        let _ = monolithic.forward(&augmented);
    }) / denom;
    let mono_grad = time_median(cfg.repeats, || {
        let _ = monolithic.input_gradient(&augmented);
    }) / denom;

    let entries = vec![
        BenchEntry {
            label: "nif-compiled".into(),
            width: nif.shape_cfg().width,
            flops_forward: flops_per_point(nif.shape_cfg(), FlopMode::Forward),
            flops_gradient: flops_per_point(nif.shape_cfg(), FlopMode::Gradient),
            ns_per_point_forward: nif_fwd,
            ns_per_point_gradient: nif_grad,
            compile_ns,
            recon_error: cfg.recon_errors.map(|(a, _)| a),
        },
        BenchEntry {
            label: "monolithic".into(),
            width: monolithic.cfg().width,
            flops_forward: flops_per_point(monolithic.cfg(), FlopMode::Forward),
            flops_gradient: flops_per_point(monolithic.cfg(), FlopMode::Gradient),
            ns_per_point_forward: mono_fwd,
            ns_per_point_gradient: mono_grad,
            compile_ns: 0.0,
            recon_error: cfg.recon_errors.map(|(_, b)| b),
        },
    ];
    Ok(QueryBenchReport {
        n_points: cfg.n_points,
        repeats: cfg.repeats,
        machine: format!(
            "{}-{} ({} cpus)",
            std::env::consts::ARCH,
            std::env::consts::OS,
            std::thread::available_parallelism().map_or(1, |n| n.get())
        ),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::{Activation, BlockStyle, ParamTarget, ParameterNetConfig, ShapeNetConfig};

    fn pair(width: usize, pn_hidden: Vec<usize>) -> (NifModel, CoordNet) {
        let shape = ShapeNetConfig {
            d_in: 1,
            width,
            n_blocks: 1,
            d_out: 1,
            activation: Activation::sine(30.0),
            block_style: BlockStyle::ResNetHalfSum,
        };
        let mut rng = RngState::new(8);
        let nif = NifModel::init(
            shape,
            ParameterNetConfig::new(1, pn_hidden, 2, Activation::Swish, ParamTarget::Full),
            &mut rng,
        )
        .unwrap();
        let mono = CoordNet::init(
            ShapeNetConfig {
                d_in: 2,
                width: (width as f64 * 1.37).ceil() as usize,
                n_blocks: 1,
                d_out: 1,
                activation: Activation::sine(30.0),
                block_style: BlockStyle::ResNetHalfSum,
            },
            &mut rng,
        )
        .unwrap();
        (nif, mono)
    }

    #[test]
    fn zero_work_report() {
        let (nif, mono) = pair(8, vec![4]);
        let report = run_benchmark(
            &nif,
            &[0.0],
            &mono,
            &QueryBenchConfig { n_points: 0, repeats: 1, ..Default::default() },
        )
        .unwrap();
        assert_eq!(report.n_points, 0);
        assert_eq!(report.entries.len(), 2);
    }

    #[test]
    fn flop_columns_match_the_formulas() {
        let (nif, mono) = pair(8, vec![4]);
        let report = run_benchmark(
            &nif,
            &[0.1],
            &mono,
            &QueryBenchConfig { n_points: 50, repeats: 2, ..Default::default() },
        )
        .unwrap();
        assert_eq!(
            report.entries[0].flops_forward,
            flops_per_point(nif.shape_cfg(), FlopMode::Forward)
        );
        assert_eq!(
            report.entries[1].flops_gradient,
            flops_per_point(mono.cfg(), FlopMode::Gradient)
        );
    }

    #[test]
    fn per_point_flops_are_independent_of_conditioning_size() {
        let (small, _) = pair(8, vec![4]);
        let (big, _) = pair(8, vec![64, 64]);
        assert_eq!(
            flops_per_point(small.shape_cfg(), FlopMode::Forward),
            flops_per_point(big.shape_cfg(), FlopMode::Forward)
        );
        assert_eq!(
            flops_per_point(small.shape_cfg(), FlopMode::Gradient),
            flops_per_point(big.shape_cfg(), FlopMode::Gradient)
        );
    }

    #[test]
    fn timing_grows_with_point_count() {
        let (nif, mono) = pair(16, vec![8]);
        let mut totals = Vec::new();
        for &n in &[200usize, 2_000, 20_000] {
            let report = run_benchmark(
                &nif,
                &[0.2],
                &mono,
                &QueryBenchConfig { n_points: n, repeats: 3, ..Default::default() },
            )
            .unwrap();
            totals.push(report.entries[0].ns_per_point_forward * n as f64);
        }
        assert!(totals[0] <= totals[1] && totals[1] <= totals[2], "{totals:?}");
    }
}
