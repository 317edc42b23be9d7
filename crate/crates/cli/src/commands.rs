//! Subcommand implementations.

use crate::config::RunConfig;
use crate::{AppError, BenchArgs, CommonArgs, DataArgs, DmdArgs, EvalArgs, TrainArgs};
use nifkit::datagen::{
    make_ks_dataset, make_wave_dataset, read_pointcloud, uniform_mus, write_pointcloud, KsConfig,
    PointCloudDataset,
};
use nifkit::nets::{
    load_model, save_model, Activation, AnyModel, BlockStyle, CoordNet, DeepOnet, DeepOnetConfig,
    FourierConfig, FourierNet, NifModel, ParamTarget, ParameterNetConfig, ShapeNetConfig,
};
use nifkit::numerics::{Matrix, RngState};
use nifkit::query::{run_benchmark, QueryBenchConfig};
use nifkit::reduce::{
    dmd as run_dmd, dmd_mode_field, nif_modes_normalize, nif_sparse_sensing_build, pod as run_pod,
    qdeim_select, snapshot_matrix, QdeimSelection,
};
use nifkit::train::{fit, rmse_report, TrainConfig};
use serde_json::json;
use std::path::{Path, PathBuf};

type CmdResult = Result<(), AppError>;

fn load_config(args: &CommonArgs) -> Result<RunConfig, AppError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.set("seed", seed);
    }
    Ok(cfg)
}

fn prepare_out(args: &CommonArgs) -> Result<PathBuf, AppError> {
    std::fs::create_dir_all(&args.out)?;
    Ok(args.out.clone())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), AppError> {
    std::fs::write(path, serde_json::to_string_pretty(value).map_err(nifkit::Error::from)?)?;
    Ok(())
}

fn resolve_path(flag: &Option<PathBuf>, cfg: &mut RunConfig, key: &str) -> Result<PathBuf, AppError> {
    if let Some(p) = flag {
        cfg.set(key, p.display());
        return Ok(p.clone());
    }
    match cfg.get(key) {
        Some(p) => Ok(PathBuf::from(p)),
        None => Err(AppError::Usage(format!("missing --{} (or config key {key})", key.replace('_', "-")))),
    }
}

fn parse_activation(name: &str, omega0: f64) -> Result<Activation, AppError> {
    Ok(match name {
        "swish" => Activation::Swish,
        "tanh" => Activation::Tanh,
        "relu" => Activation::Relu,
        "sine" => Activation::sine(omega0),
        "identity" => Activation::Identity,
        other => return Err(AppError::Usage(format!("unknown activation {other:?}"))),
    })
}

fn parse_style(name: &str) -> Result<BlockStyle, AppError> {
    Ok(match name {
        "resnet" => BlockStyle::ResNetHalfSum,
        "plain" => BlockStyle::PlainChain,
        other => return Err(AppError::Usage(format!("unknown block style {other:?}"))),
    })
}

// ---------------------------------------------------------------- datasets

const GEN_KS_KEYS: &[&str] = &[
    "seed", "ks.n_grid", "ks.dt", "ks.t_final", "ks.save_every", "ks.subsample_space",
    "ks.subsample_time", "ks.dealias", "ks.mu_min", "ks.mu_max", "ks.n_mu", "ks.name",
];

pub fn gen_ks(args: CommonArgs) -> CmdResult {
    let mut cfg = load_config(&args)?;
    cfg.reject_unknown(GEN_KS_KEYS)?;
    let out = prepare_out(&args)?;
    let _seed = cfg.u64_or("seed", 0)?;
    let ks = KsConfig {
        n_grid: cfg.usize_or("ks.n_grid", 1024)?,
        dt: cfg.f64_or("ks.dt", 1e-3)?,
        t_final: cfg.f64_or("ks.t_final", 100.0)?,
        save_every: cfg.usize_or("ks.save_every", 10)?,
        subsample_space: cfg.usize_or("ks.subsample_space", 4)?,
        subsample_time: cfg.usize_or("ks.subsample_time", 100)?,
        dealias: cfg.bool_or("ks.dealias", true)?,
    };
    let mu_min = cfg.f64_or("ks.mu_min", 0.2)?;
    let mu_max = cfg.f64_or("ks.mu_max", 0.28)?;
    let n_mu = cfg.usize_or("ks.n_mu", 20)?;
    let name = cfg.str_or("ks.name", "ks");

    let mus = uniform_mus(mu_min, mu_max, n_mu);
    let dataset = make_ks_dataset(&mus, &ks)?;
    let path = out.join(format!("{name}.csv"));
    write_pointcloud(&path, &dataset)?;
    cfg.echo(&out)?;
    println!("wrote {} rows to {}", dataset.n_rows(), path.display());
    Ok(())
}

pub fn gen_wave(args: CommonArgs) -> CmdResult {
    let mut cfg = load_config(&args)?;
    cfg.reject_unknown(&["seed"])?;
    let out = prepare_out(&args)?;
    let _ = cfg.u64_or("seed", 0)?;
    let dataset = make_wave_dataset()?;
    let path = out.join("wave.csv");
    write_pointcloud(&path, &dataset)?;
    cfg.echo(&out)?;
    println!("wrote {} rows to {}", dataset.n_rows(), path.display());
    Ok(())
}

// ---------------------------------------------------------------- training

const TRAIN_KEYS: &[&str] = &[
    "seed", "model", "data", "test_data",
    "train.learning_rate", "train.batch_size", "train.epochs", "train.shuffle",
    "train.beta1", "train.beta2", "train.epsilon",
    "net.shape_width", "net.shape_blocks", "net.shape_style", "net.shape_activation",
    "net.pn_hidden", "net.bottleneck", "net.pn_activation", "net.last_layer_bias",
    "net.width", "net.blocks", "net.style", "net.activation", "net.omega0",
    "net.branch_hidden", "net.trunk_hidden", "net.trunk_features",
    "net.features", "net.sigma", "net.hidden",
];

/// Builds a freshly initialized model of the requested kind, shaped to the
/// dataset's schema.
pub fn build_model(
    kind: &str,
    dataset: &PointCloudDataset,
    cfg: &mut RunConfig,
    rng: &mut RngState,
) -> Result<AnyModel, AppError> {
    let schema = &dataset.schema;
    let omega0 = cfg.f64_or("net.omega0", 30.0)?;
    match kind {
        "nif-full" | "nif-lastlayer" => {
            let width = cfg.usize_or("net.shape_width", 56)?;
            let target = if kind == "nif-full" { ParamTarget::Full } else { ParamTarget::LastLayer };
            let default_bottleneck = match target {
                // The latent width defaults to the conditioning dimension.
                ParamTarget::Full => schema.n_condition(),
                // Last-layer mode ties it to the spatial width.
                ParamTarget::LastLayer => width,
            };
            let shape = ShapeNetConfig {
                d_in: schema.d_space,
                width,
                n_blocks: cfg.usize_or("net.shape_blocks", 1)?,
                d_out: schema.d_out,
                activation: parse_activation(&cfg.str_or("net.shape_activation", "sine"), omega0)?,
                block_style: parse_style(&cfg.str_or("net.shape_style", "resnet"))?,
            };
            let pn = ParameterNetConfig {
                d_in: schema.n_condition(),
                hidden: cfg.usize_list_or("net.pn_hidden", "30,30")?,
                bottleneck: cfg.usize_or("net.bottleneck", default_bottleneck)?,
                activation: parse_activation(&cfg.str_or("net.pn_activation", "swish"), omega0)?,
                target,
                last_layer_bias: cfg.bool_or("net.last_layer_bias", true)?,
            };
            Ok(AnyModel::Nif(NifModel::init(shape, pn, rng)?))
        }
        "mlp" | "siren" => {
            let activation = if kind == "siren" {
                Activation::sine(omega0)
            } else {
                parse_activation(&cfg.str_or("net.activation", "swish"), omega0)?
            };
            let shape = ShapeNetConfig {
                d_in: schema.n_inputs(),
                width: cfg.usize_or("net.width", 100)?,
                n_blocks: cfg.usize_or("net.blocks", 1)?,
                d_out: schema.d_out,
                activation,
                block_style: parse_style(&cfg.str_or("net.style", "resnet"))?,
            };
            Ok(AnyModel::Coord(CoordNet::init(shape, rng)?))
        }
        "deeponet" => {
            let features = cfg.usize_or("net.trunk_features", 16)?;
            let mut branch = vec![schema.n_condition()];
            branch.extend(cfg.usize_list_or("net.branch_hidden", "30,30")?);
            branch.push(features + 1);
            let mut trunk = vec![schema.d_space];
            trunk.extend(cfg.usize_list_or("net.trunk_hidden", "30,30")?);
            trunk.push(features);
            let donet = DeepOnetConfig {
                branch,
                trunk,
                activation: parse_activation(&cfg.str_or("net.activation", "tanh"), omega0)?,
            };
            Ok(AnyModel::DeepOnet(DeepOnet::init(donet, rng)?))
        }
        "fourier" => {
            let fcfg = FourierConfig {
                d_in: schema.n_inputs(),
                n_features: cfg.usize_or("net.features", 64)?,
                sigma: cfg.f64_or("net.sigma", 1.0)?,
                hidden: cfg.usize_list_or("net.hidden", "64,64")?,
                d_out: schema.d_out,
                activation: parse_activation(&cfg.str_or("net.activation", "relu"), omega0)?,
            };
            Ok(AnyModel::Fourier(FourierNet::init(fcfg, rng)?))
        }
        other => Err(AppError::Usage(format!(
            "unknown model {other:?}; expected nif-full, nif-lastlayer, mlp, deeponet, fourier or siren"
        ))),
    }
}

pub fn train(args: TrainArgs) -> CmdResult {
    let mut cfg = load_config(&args.common)?;
    cfg.reject_unknown(TRAIN_KEYS)?;
    if let Some(model) = &args.model {
        cfg.set("model", model);
    }
    let out = prepare_out(&args.common)?;
    let data_path = resolve_path(&args.data, &mut cfg, "data")?;
    let dataset = read_pointcloud(&data_path)?;
    let test_set = match (&args.test_data, cfg.get("test_data").map(String::from)) {
        (Some(p), _) => {
            cfg.set("test_data", p.display());
            Some(read_pointcloud(p)?)
        }
        (None, Some(p)) => Some(read_pointcloud(Path::new(&p))?),
        (None, None) => None,
    };
    // Held-out rows must enter the model under the training normalization.
    let test_set = match test_set {
        Some(ds) => Some(ds.renormalize_to(&dataset.normalization)?),
        None => None,
    };

    let seed = cfg.u64_or("seed", 0)?;
    let kind = cfg
        .get("model")
        .map(String::from)
        .ok_or_else(|| AppError::Usage("missing --model (or config key model)".into()))?;
    let mut rng = RngState::new(seed);
    let mut model = build_model(&kind, &dataset, &mut cfg, &mut rng)?;

    let tcfg = TrainConfig {
        learning_rate: cfg.f64_or("train.learning_rate", 1e-3)?,
        batch_size: cfg.usize_or("train.batch_size", 1024)?,
        epochs: cfg.usize_or("train.epochs", 100)?,
        beta1: cfg.f64_or("train.beta1", 0.9)?,
        beta2: cfg.f64_or("train.beta2", 0.999)?,
        epsilon: cfg.f64_or("train.epsilon", 1e-8)?,
        seed,
        shuffle: cfg.bool_or("train.shuffle", true)?,
    };
    let history = fit(model.as_model_mut(), &dataset, &tcfg)?;
    let train_report = rmse_report(model.as_model(), &dataset, dataset.schema.d_param > 0)?;
    let test_report = match &test_set {
        Some(ds) => Some(rmse_report(model.as_model(), ds, ds.schema.d_param > 0)?),
        None => None,
    };

    let ckpt = out.join("model.nif");
    save_model(&ckpt, &model)?;
    let config_map: serde_json::Value = serde_json::from_str(&format!(
        "{{{}}}",
        cfg.render()
            .lines()
            .map(|l| {
                let (k, v) = l.split_once('=').unwrap_or((l, ""));
                format!("{:?}: {:?}", k, v)
            })
            .collect::<Vec<_>>()
            .join(",")
    ))
    .map_err(nifkit::Error::from)?;
    let metrics = json!({
        "config": config_map,
        "model": kind,
        "seed": seed,
        "n_params": model.as_model().n_params(),
        "epoch_losses": history.epoch_losses,
        "steps": history.steps,
        "wall_secs": history.wall_secs,
        "train_rmse_normalized": train_report.rmse_normalized,
        "train_rmse_physical": train_report.rmse_physical,
        "test_rmse_normalized": test_report.as_ref().map(|r| r.rmse_normalized),
        "test_rmse_physical": test_report.as_ref().map(|r| r.rmse_physical),
        "test_per_param": test_report.as_ref().map(|r| {
            r.per_param.iter().map(|g| json!({
                "param": g.param,
                "rmse_normalized": g.rmse_normalized,
                "rmse_physical": g.rmse_physical,
            })).collect::<Vec<_>>()
        }),
    });
    write_json(&out.join("metrics.json"), &metrics)?;
    cfg.echo(&out)?;
    println!(
        "trained {kind} ({} params) for {} steps; final loss {:.6e}; checkpoint {}",
        model.as_model().n_params(),
        history.steps,
        history.epoch_losses.last().copied().unwrap_or(f64::NAN),
        ckpt.display()
    );
    Ok(())
}

pub fn eval(args: EvalArgs) -> CmdResult {
    let mut cfg = load_config(&args.common)?;
    cfg.reject_unknown(&["seed", "checkpoint", "data", "eval.group_by_param", "eval.norm_from"])?;
    let out = prepare_out(&args.common)?;
    let ckpt = resolve_path(&args.checkpoint, &mut cfg, "checkpoint")?;
    let data_path = resolve_path(&args.data, &mut cfg, "data")?;
    let group = cfg.bool_or("eval.group_by_param", true)?;
    let model = load_model(&ckpt)?;
    let mut dataset = read_pointcloud(&data_path)?;
    // Optional reference dataset whose normalization the inputs should be
    // expressed in (normally the training table).
    if let Some(reference) = cfg.get("eval.norm_from").map(String::from) {
        let reference = read_pointcloud(Path::new(&reference))?;
        dataset = dataset.renormalize_to(&reference.normalization)?;
    }
    let report = rmse_report(model.as_model(), &dataset, group && dataset.schema.d_param > 0)?;
    let value = serde_json::to_value(&report).map_err(nifkit::Error::from)?;
    write_json(&out.join("eval.json"), &value)?;
    cfg.echo(&out)?;
    println!(
        "rmse normalized {:.6e}, physical {:.6e} over {} rows",
        report.rmse_normalized, report.rmse_physical, report.n_rows
    );
    Ok(())
}

// ------------------------------------------------------------- reduction

fn write_grid_csv(path: &Path, header: &[String], columns: &[Vec<f64>]) -> Result<(), AppError> {
    use std::fmt::Write as _;
    let rows = columns.first().map_or(0, |c| c.len());
    let mut text = String::new();
    text.push('#');
    text.push(' ');
    text.push_str(&header.join(","));
    text.push('\n');
    for i in 0..rows {
        let mut first = true;
        for col in columns {
            if !first {
                text.push(',');
            }
            write!(text, "{}", col[i]).unwrap();
            first = false;
        }
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn pod(args: DataArgs) -> CmdResult {
    let mut cfg = load_config(&args.common)?;
    cfg.reject_unknown(&["seed", "data", "pod.rank"])?;
    let out = prepare_out(&args.common)?;
    let data_path = resolve_path(&args.data, &mut cfg, "data")?;
    let dataset = read_pointcloud(&data_path)?;
    let view = snapshot_matrix(&dataset)?;
    let rank = cfg.usize_or("pod.rank", 8)?;
    let result = run_pod(&view.values, rank)?;

    let mut header: Vec<String> = (0..view.grid.cols()).map(|d| format!("x{d}")).collect();
    let mut columns: Vec<Vec<f64>> = (0..view.grid.cols()).map(|d| view.grid.col_vec(d)).collect();
    for j in 0..rank {
        header.push(format!("mode{j}"));
        columns.push(result.basis.psi_r.col_vec(j));
    }
    write_grid_csv(&out.join("pod_modes.csv"), &header, &columns)?;

    let mut cheader = vec!["t".to_string()];
    let mut ccolumns = vec![view.times.clone()];
    for j in 0..rank {
        cheader.push(format!("alpha{j}"));
        ccolumns.push((0..result.coeffs.cols()).map(|t| result.coeffs[(j, t)]).collect());
    }
    write_grid_csv(&out.join("pod_coeffs.csv"), &cheader, &ccolumns)?;

    write_json(
        &out.join("pod.json"),
        &json!({
            "rank": rank,
            "singular_values": result.basis.sigma,
            "residual_sq": result.residual_sq,
            "n_space": view.values.rows(),
            "n_time": view.values.cols(),
        }),
    )?;
    cfg.echo(&out)?;
    println!("rank-{rank} basis over {} x {} snapshots", view.values.rows(), view.values.cols());
    Ok(())
}

pub fn qdeim(args: DataArgs) -> CmdResult {
    let mut cfg = load_config(&args.common)?;
    cfg.reject_unknown(&["seed", "data", "qdeim.rank"])?;
    let out = prepare_out(&args.common)?;
    let data_path = resolve_path(&args.data, &mut cfg, "data")?;
    let dataset = read_pointcloud(&data_path)?;
    let view = snapshot_matrix(&dataset)?;
    let rank = cfg.usize_or("qdeim.rank", 8)?;
    let result = run_pod(&view.values, rank)?;
    let sel = qdeim_select(&result.basis.psi_r, rank)?;
    let locations: Vec<Vec<f64>> = sel.indices.iter().map(|&i| view.grid.row(i).to_vec()).collect();
    write_json(
        &out.join("sensors.json"),
        &json!({
            "rank": rank,
            "indices": sel.indices,
            "locations": locations,
        }),
    )?;
    cfg.echo(&out)?;
    println!("selected sensors {:?}", sel.indices);
    Ok(())
}

pub fn sparse_sense(args: DataArgs) -> CmdResult {
    let mut cfg = load_config(&args.common)?;
    cfg.reject_unknown(&["seed", "data", "sense.sensors"])?;
    let out = prepare_out(&args.common)?;
    let data_path = resolve_path(&args.data, &mut cfg, "data")?;
    let dataset = read_pointcloud(&data_path)?;
    let sensors = cfg
        .get("sense.sensors")
        .ok_or_else(|| AppError::Usage("missing config key sense.sensors (comma-separated row indices)".into()))?
        .to_string();
    let indices: Vec<usize> = sensors
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| AppError::Usage(format!("bad sensor index {s:?}"))))
        .collect::<Result<_, _>>()?;

    let built = nif_sparse_sensing_build(&indices, &dataset)?;
    write_pointcloud(&out.join("sense.csv"), &built)?;

    // Linear baseline on the same sensors: rank-p POD plus least-squares
    // reconstruction per snapshot.
    let view = snapshot_matrix(&dataset)?;
    let p = indices.len();
    let baseline = run_pod(&view.values, p)?;
    let sel = QdeimSelection {
        indices: indices.clone(),
        c: {
            let mut c = Matrix::zeros(p, view.values.rows());
            for (row, &idx) in indices.iter().enumerate() {
                c[(row, idx)] = 1.0;
            }
            c
        },
    };
    let mut sq_sum = 0.0;
    let mut count = 0usize;
    for t in 0..view.values.cols() {
        let y: Vec<f64> = indices.iter().map(|&i| view.values[(i, t)]).collect();
        let recon = nifkit::reduce::deim_reconstruct(&sel, &baseline.basis.psi_r, &y)?;
        for (i, r) in recon.iter().enumerate() {
            let d = r - view.values[(i, t)];
            sq_sum += d * d;
            count += 1;
        }
    }
    let baseline_rmse = (sq_sum / count as f64).sqrt();
    write_json(
        &out.join("sense_baseline.json"),
        &json!({
            "sensors": indices,
            "pod_deim_rmse_physical": baseline_rmse,
        }),
    )?;
    cfg.echo(&out)?;
    println!(
        "built {} sensing rows; linear baseline rmse {:.6e}",
        built.n_rows(),
        baseline_rmse
    );
    Ok(())
}

fn read_series_csv(path: &Path) -> Result<Matrix, AppError> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
        let row = row.map_err(|_| nifkit::Error::Parse {
            msg: "non-numeric cell in series".into(),
            line: idx + 1,
        })?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(AppError::Usage("empty series file".into()));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(AppError::Lib(nifkit::Error::Parse { msg: "ragged series rows".into(), line: 0 }));
    }
    let data: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(Matrix::from_vec(data.len() / cols, cols, data).map_err(AppError::Lib)?)
}

pub fn dmd(args: DmdArgs) -> CmdResult {
    let mut cfg = load_config(&args.common)?;
    cfg.reject_unknown(&["seed", "series", "checkpoint", "data", "dmd.dt", "dmd.rank", "dmd.grid_points"])?;
    let out = prepare_out(&args.common)?;

    let dmd_json = |result: &nifkit::reduce::DmdResult| {
        json!({
            "eigenvalues": result.eigenvalues.iter().map(|l| json!({"re": l.re, "im": l.im})).collect::<Vec<_>>(),
            "frequencies": result.frequencies,
            "amplitudes": result.amplitudes.iter().map(|a| json!({"re": a.re, "im": a.im})).collect::<Vec<_>>(),
            "dt": result.dt,
            "effective_rank": result.effective_rank,
            "truncated": result.truncated,
        })
    };

    if let Some(series_path) = &args.series {
        cfg.set("series", series_path.display());
        let series = read_series_csv(series_path)?;
        let dt = cfg.f64_or("dmd.dt", 1.0)?;
        let rank = cfg.usize_or("dmd.rank", series.rows())?;
        let result = run_dmd(&series, dt, rank)?;
        if result.truncated {
            eprintln!(
                "warning: series rank-deficient, truncated to {} modes",
                result.effective_rank
            );
        }
        write_json(&out.join("dmd.json"), &dmd_json(&result))?;
        cfg.echo(&out)?;
        println!("{} modes, leading |lambda| {:.6}", result.effective_rank, result.eigenvalues[0].norm());
        return Ok(());
    }

    // Model path: extract the latent series from a trained last-layer
    // checkpoint over the dataset's snapshot times.
    let ckpt = resolve_path(&args.checkpoint, &mut cfg, "checkpoint")?;
    let data_path = resolve_path(&args.data, &mut cfg, "data")?;
    let model = match load_model(&ckpt)? {
        AnyModel::Nif(m) => m,
        other => {
            return Err(AppError::Usage(format!(
                "dmd needs a nif-lastlayer checkpoint, got {}",
                other.kind_name()
            )))
        }
    };
    let dataset = read_pointcloud(&data_path)?;
    let view = snapshot_matrix(&dataset)?;
    let m_t = view.times.len();
    if m_t < 3 {
        return Err(AppError::Lib(nifkit::Error::invalid("need at least 3 snapshots")));
    }
    let dt = view.times[1] - view.times[0];
    for w in view.times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1.0) {
            return Err(AppError::Lib(nifkit::Error::invalid("snapshot times are not uniformly spaced")));
        }
    }

    let conditions = Matrix::from_fn(m_t, 1, |t, _| view.times_normalized[t]);
    let amplitudes = model.produced_amplitudes(&conditions)?;
    let r = amplitudes.cols();
    let series = Matrix::from_fn(r, m_t, |i, t| amplitudes[(t, i)]);

    // Normalize the learned basis over the training points (quadrature
    // weights from the dataset when present, else uniform).
    let space_range = dataset.schema.space_range();
    let quad_points = Matrix::from_fn(view.grid.rows(), dataset.schema.d_space, |i, d| {
        dataset.normalization[space_range.start + d].apply(view.grid[(i, d)])
    });
    let weights = view
        .weights
        .clone()
        .unwrap_or_else(|| vec![1.0 / view.grid.rows() as f64; view.grid.rows()]);
    let modes = nif_modes_normalize(&model, &quad_points, &weights, &series)?;

    let rank = cfg.usize_or("dmd.rank", r)?;
    let result = run_dmd(&modes.series_scaled, dt, rank)?;
    if result.truncated {
        eprintln!("warning: latent series rank-deficient, truncated to {} modes", result.effective_rank);
    }
    write_json(&out.join("dmd.json"), &dmd_json(&result))?;

    // Spatial fields of each mode on a fresh uniform grid.
    let n_grid = cfg.usize_or("dmd.grid_points", 500)?;
    if dataset.schema.d_space == 1 {
        let (lo, hi) = view.grid.col_vec(0).iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
        let grid_phys = Matrix::from_fn(n_grid, 1, |i, _| lo + (hi - lo) * i as f64 / (n_grid - 1) as f64);
        let grid_norm = Matrix::from_fn(n_grid, 1, |i, _| {
            dataset.normalization[space_range.start].apply(grid_phys[(i, 0)])
        });
        let fields = dmd_mode_field(&result, &modes, &grid_norm)?;
        let mut header = vec!["x0".to_string()];
        let mut columns = vec![grid_phys.col_vec(0)];
        for j in 0..fields.cols() {
            header.push(format!("mode{j}_re"));
            header.push(format!("mode{j}_im"));
            columns.push((0..n_grid).map(|i| fields[(i, j)].re).collect());
            columns.push((0..n_grid).map(|i| fields[(i, j)].im).collect());
        }
        write_grid_csv(&out.join("dmd_modes.csv"), &header, &columns)?;
    }
    cfg.echo(&out)?;
    println!(
        "{} modes, leading frequency {:.6}",
        result.effective_rank,
        result.frequencies.first().copied().unwrap_or(0.0)
    );
    Ok(())
}

// ------------------------------------------------------------ benchmarks

pub fn bench_query(args: BenchArgs) -> CmdResult {
    let mut cfg = load_config(&args.common)?;
    cfg.reject_unknown(&[
        "seed", "checkpoint", "mono_checkpoint",
        "bench.n_points", "bench.repeats", "bench.condition", "bench.width_factor",
    ])?;
    let out = prepare_out(&args.common)?;
    let ckpt = resolve_path(&args.checkpoint, &mut cfg, "checkpoint")?;
    let nif = match load_model(&ckpt)? {
        AnyModel::Nif(m) => m,
        other => {
            return Err(AppError::Usage(format!(
                "bench-query needs a hypernetwork checkpoint, got {}",
                other.kind_name()
            )))
        }
    };
    let seed = cfg.u64_or("seed", 0)?;
    let condition: Vec<f64> = cfg
        .str_or("bench.condition", &vec!["0"; nif.d_cond()].join(","))
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| AppError::Usage(format!("bad condition value {s:?}"))))
        .collect::<Result<_, _>>()?;
    let factor = cfg.f64_or("bench.width_factor", 1.37)?;

    let mono = match &args.mono_checkpoint {
        Some(p) => {
            cfg.set("mono_checkpoint", p.display());
            match load_model(p)? {
                AnyModel::Coord(m) => m,
                other => {
                    return Err(AppError::Usage(format!(
                        "mono checkpoint must be a coordinate network, got {}",
                        other.kind_name()
                    )))
                }
            }
        }
        None => {
            let shape = nif.shape_cfg();
            let mono_cfg = ShapeNetConfig {
                d_in: nif.d_cond() + nif.d_space(),
                width: (shape.width as f64 * factor).ceil() as usize,
                n_blocks: shape.n_blocks,
                d_out: shape.d_out,
                activation: Activation::sine(30.0),
                block_style: shape.block_style,
            };
            CoordNet::init(mono_cfg, &mut RngState::new(seed))?
        }
    };

    let bench_cfg = QueryBenchConfig {
        n_points: cfg.usize_or("bench.n_points", 200_000)?,
        repeats: cfg.usize_or("bench.repeats", 5)?,
        seed,
        recon_errors: None,
    };
    let report = run_benchmark(&nif, &condition, &mono, &bench_cfg)?;
    let value = serde_json::to_value(&report).map_err(nifkit::Error::from)?;
    write_json(&out.join("bench.json"), &value)?;
    cfg.echo(&out)?;
    for entry in &report.entries {
        println!(
            "{:>14}: width {:>4}, {:>8} fwd flops/pt, {:>9.1} ns/pt fwd, {:>9.1} ns/pt grad",
            entry.label, entry.width, entry.flops_forward, entry.ns_per_point_forward, entry.ns_per_point_gradient
        );
    }
    Ok(())
}
