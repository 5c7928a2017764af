//! Trains a reduced network on generated scenes and evaluates it.
//!
//! The full-size network is what `idseg train` uses; this one keeps the same
//! encoder / dense head / decoder layout at 64x64 so the example runs in
//! under a minute.
//!
//! ```text
//! cargo run --release --example train_synthetic -- [epochs]
//! ```

use idseg::data::{generate_synthetic, make_sample_sized, read_manifest, SynthParams};
use idseg::eval::{evaluate, threshold_grid};
use idseg::geometry::SelectParams;
use idseg::nn::{train, Model, ModelConfig, TrainConfig};

fn main() -> anyhow::Result<()> {
    let epochs = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(8);
    let dir = tempfile::tempdir()?;
    let params = SynthParams { count_train: 192, count_test: 48, image_size: 96, ..SynthParams::default() };
    let manifest = generate_synthetic(&params, dir.path())?;
    let records = read_manifest(&manifest)?;

    let side = 64;
    let load = |part| -> idseg::Result<Vec<_>> {
        records.iter().filter(|r| r.part == part).map(|r| make_sample_sized(r, dir.path(), side)).collect()
    };
    let (train_set, val_set) = (load(1)?, load(2)?);

    let config = ModelConfig::encoder_decoder((side, side, 3), &[8, 12, 16, 24], &[24, 8], &[16, 12, 8, 8])?;
    println!("{} parameters", config.param_count()?);
    let model = Model::init(config, 7)?;
    let cfg = TrainConfig { epochs, batch_size: 16, lr: 2e-3, seed: 7 };
    let (model, _log) = train(model, &train_set, &val_set, &cfg, |m| {
        println!(
            "epoch {:>2}  loss {:.4}  val_loss {:.4}  val_rec {:.3}  val_prec {:.3}",
            m.epoch, m.loss, m.val_loss, m.val_recall, m.val_precision
        );
    })?;

    let test: Vec<_> = records.iter().filter(|r| r.part == 2).cloned().collect();
    let report = evaluate(&model, &test, dir.path(), &threshold_grid(0.1)?, SelectParams::default())?;
    for (t, acc) in &report.curve {
        println!("IoU >= {t:.1}: {acc:.3}");
    }
    Ok(())
}
