//! Scratch probe for wave-experiment calibration (not a deliverable).

use nifkit::datagen::{make_wave_dataset, PointCloudDataset, PointCloudSchema};
use nifkit::nets::{Activation, BlockStyle, CoordNet, Model, NifModel, ParamTarget, ParameterNetConfig, ShapeNetConfig};
use nifkit::numerics::{Matrix, RngState};
use nifkit::train::{fit, TrainConfig};

fn main() {
    let ds = make_wave_dataset().unwrap();
    // Snapshot at the first time value: rows 0..300.
    let snap_rows: Vec<usize> = (0..300).collect();
    let x = ds.gather_inputs(Some(&snap_rows));
    let u = ds.gather_targets(Some(&snap_rows));
    // Build a space-only dataset (drop the t column).
    let mut raw = Matrix::zeros(300, 2);
    for i in 0..300 {
        raw[(i, 0)] = x[(i, 1)];
        raw[(i, 1)] = u[(i, 0)];
    }
    let schema = PointCloudSchema::new(0, 0, 1, 1, false).unwrap();
    let snap = PointCloudDataset::new(
        schema,
        raw,
        vec![nifkit::datagen::NormalizationSpec::Identity; 2],
    )
    .unwrap();

    for (label, lr, batch, epochs) in [
        ("shape19 lr1e-3 full", 1e-3, 300usize, 50_000usize),
        ("shape19 lr1e-2 full", 1e-2, 300, 50_000),
    ] {
        let mut rng = RngState::new(3);
        let mut net = CoordNet::init(
            ShapeNetConfig {
                d_in: 1,
                width: 2,
                n_blocks: 2,
                d_out: 1,
                activation: Activation::sine(30.0),
                block_style: BlockStyle::PlainChain,
            },
            &mut rng,
        )
        .unwrap();
        let cfg = TrainConfig { learning_rate: lr, batch_size: batch, epochs, seed: 5, ..Default::default() };
        let hist = fit(&mut net, &snap, &cfg).unwrap();
        println!("{label}: final snapshot loss {:.4e}", hist.epoch_losses.last().unwrap());
    }

    // Full space-time problem with a roomier conditioning net, still 1e-3.
    for (label, pn_hidden, pn_act, shape_act) in [
        ("nif51  swishPN sineSN", vec![2usize, 2], Activation::Swish, Activation::sine(30.0)),
        ("nif51  sinePN  sineSN", vec![2, 2], Activation::sine(30.0), Activation::sine(30.0)),
    ] {
        let mut rng = RngState::new(3);
        let shape = ShapeNetConfig {
            d_in: 1,
            width: 2,
            n_blocks: 2,
            d_out: 1,
            activation: shape_act,
            block_style: BlockStyle::PlainChain,
        };
        let pn = ParameterNetConfig::new(1, pn_hidden, 1, pn_act, ParamTarget::Full);
        let mut model = NifModel::init(shape, pn, &mut rng).unwrap();
        let cfg = TrainConfig { learning_rate: 1e-3, batch_size: 6000, epochs: 20_000, seed: 5, ..Default::default() };
        let hist = fit(&mut model, &ds, &cfg).unwrap();
        println!("{label}: loss {:.4e}", hist.epoch_losses.last().unwrap());
    }
}
