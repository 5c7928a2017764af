use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{AdamState, DEFAULT_LR};
use super::loss::bce_loss;
use super::metrics::Confusion;
use super::model::Model;
use crate::data::{batches, Sample};
use crate::error::{Error, Result};

/// Pixel threshold used for all logged metrics.
pub const METRIC_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 60, batch_size: 32, lr: DEFAULT_LR, seed: 42 }
    }
}

/// One row of the training log; `epoch` counts from 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    pub val_precision: f64,
    pub val_recall: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochMetrics>,
}

impl TrainLog {
    pub const CSV_HEADER: &'static str =
        "epoch,loss,accuracy,precision,recall,val_loss,val_accuracy,val_precision,val_recall";

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.epochs {
            w.serialize(row).map_err(csv_err)?;
        }
        // serde writes the header with the first row; an empty log still gets one
        if self.epochs.is_empty() {
            w.write_record(Self::CSV_HEADER.split(',')).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let epochs = r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err)?;
        Ok(Self { epochs })
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::InvalidArgument(format!("csv: {other:?}")),
    }
}

/// Loss and confusion counts accumulated over whole samples.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunningStats {
    loss_sum: f64,
    samples: usize,
    confusion: Confusion,
}

impl RunningStats {
    pub fn add(&mut self, batch_loss: f64, batch_len: usize, confusion: &Confusion) {
        self.loss_sum += batch_loss * batch_len as f64;
        self.samples += batch_len;
        self.confusion.add(confusion);
    }

    /// `(mean loss, accuracy, precision, recall)`.
    pub fn summary(&self) -> (f64, f64, f64, f64) {
        let m = self.confusion.metrics();
        (self.loss_sum / self.samples.max(1) as f64, m.accuracy, m.precision, m.recall)
    }
}

/// Mean loss and pixel metrics of `model` over `samples`, without updating it.
pub fn evaluate_samples(model: &Model, samples: &[Sample], batch_size: usize) -> Result<RunningStats> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset("evaluation set"));
    }
    let mut stats = RunningStats::default();
    for batch in batches(samples, batch_size, 0, false)? {
        let (images, masks) = batch?;
        let (prob, _) = model.forward(&images, false)?;
        let (loss, _) = bce_loss(&prob, &masks)?;
        stats.add(loss, images.batch_len(), &Confusion::from_maps(&prob, &masks, METRIC_THRESHOLD)?);
    }
    Ok(stats)
}

/// Mini-batch Adam training with a seeded shuffle each epoch.
///
/// Train metrics are accumulated over the epoch's batches as they are
/// processed; validation metrics come from a full pass after the epoch.
/// `on_epoch` is called with each finished row.
pub fn train(
    mut model: Model,
    train_set: &[Sample],
    val_set: &[Sample],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<(Model, TrainLog)> {
    if train_set.is_empty() {
        return Err(Error::EmptyDataset("training set"));
    }
    if val_set.is_empty() {
        return Err(Error::EmptyDataset("validation set"));
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be at least 1".into()));
    }
    if !(config.lr.is_finite() && config.lr > 0.0) {
        return Err(Error::InvalidArgument(format!("learning rate {} must be positive", config.lr)));
    }
    let mut log = TrainLog::default();
    let mut adam = AdamState::new(&model, config.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for epoch in 1..=config.epochs {
        let mut stats = RunningStats::default();
        for batch in batches(train_set, config.batch_size, rng.gen(), true)? {
            let (images, masks) = batch?;
            let (prob, cache) = model.forward(&images, true)?;
            let (loss, d_prob) = bce_loss(&prob, &masks)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite("training loss"));
            }
            stats.add(loss, images.batch_len(), &Confusion::from_maps(&prob, &masks, METRIC_THRESHOLD)?);
            let grads = model.backward(&cache.expect("cache requested"), &d_prob)?;
            adam.apply(&mut model, &grads)?;
        }
        let (loss, accuracy, precision, recall) = stats.summary();
        let (val_loss, val_accuracy, val_precision, val_recall) =
            evaluate_samples(&model, val_set, config.batch_size)?.summary();
        let row = EpochMetrics {
            epoch,
            loss,
            accuracy,
            precision,
            recall,
            val_loss,
            val_accuracy,
            val_precision,
            val_recall,
        };
        on_epoch(&row);
        log.epochs.push(row);
    }
    Ok((model, log))
}
