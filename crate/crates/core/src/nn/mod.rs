//! The segmentation network: configuration, parameters, forward and backward
//! passes, loss, optimizer, training loop and model files.

mod adam;
mod config;
mod format;
mod loss;
mod metrics;
mod model;
mod train;

pub use adam::{adam_step, AdamState, DEFAULT_LR};
pub use config::{ActShape, Activation, LayerSpec, ModelConfig, BOTTLENECK_SIDE};
pub use format::{
    decode_model, encode_model, encoded_size, load_model, save_model, summary_table, FORMAT_VERSION, MAGIC,
};
pub use loss::bce_loss;
pub use metrics::{pixel_metrics, Confusion, PixelMetrics};
pub use model::{ForwardCache, Gradients, LayerParams, Model};
pub use train::{evaluate_samples, train, EpochMetrics, RunningStats, TrainConfig, TrainLog, METRIC_THRESHOLD};
