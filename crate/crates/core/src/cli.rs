//! Command-line front end for the `idseg` binary.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::data::{generate_synthetic, load_image, make_sample, read_manifest, save_png, DatasetRecord, SynthParams};
use crate::eval::{
    bench_inference, draw_quad_overlay, evaluate, threshold_grid, timed_detect, DetectionJson, OVERLAY_COLOR,
};
use crate::geometry::SelectParams;
use crate::nn::{load_model, save_model, summary_table, train, Model, ModelConfig, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "idseg", version, about = "Identity document detection by semantic segmentation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic dataset with a manifest
    Synth(SynthArgs),
    /// Train the reference network on a manifest
    Train(TrainArgs),
    /// Detect the document quadrilateral in one image
    Detect(DetectArgs),
    /// Accuracy-vs-IoU curve, pixel metrics and timing over a manifest
    Eval(EvalArgs),
    /// Inference latency on a random image
    Bench(BenchArgs),
    /// Per-layer parameter table of a model file
    Inspect(InspectArgs),
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        Ok(_) => Err("must be a positive number".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn unit_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if (0.0..=1.0).contains(&v) => Ok(v),
        Ok(_) => Err("must lie in [0, 1]".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn image_size(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 32 => Ok(v),
        Ok(_) => Err("must be at least 32".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn bench_iters(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= crate::eval::MIN_BENCH_ITERATIONS => Ok(v),
        Ok(_) => Err(format!("must be at least {}", crate::eval::MIN_BENCH_ITERATIONS)),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 512)]
    pub train: usize,
    #[arg(long, default_value_t = 128)]
    pub test: usize,
    #[arg(long, default_value_t = 128, value_parser = image_size)]
    pub size: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.3, value_parser = unit_f64)]
    pub clutter: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory image paths are relative to [default: the manifest's directory]
    #[arg(long)]
    pub data_root: Option<PathBuf>,
    #[arg(long, default_value_t = 60, value_parser = positive_usize)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32, value_parser = positive_usize)]
    pub batch: usize,
    #[arg(long, default_value_t = 0.001, value_parser = positive_f64)]
    pub lr: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub log: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub overlay: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory image paths are relative to [default: the manifest's directory]
    #[arg(long)]
    pub data_root: Option<PathBuf>,
    #[arg(long)]
    pub curve: PathBuf,
    #[arg(long, default_value_t = 0.05, value_parser = positive_f64)]
    pub iou_step: f64,
    /// Evaluate only records of this part [default: 2 when present, else all]
    #[arg(long)]
    pub part: Option<i64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 100, value_parser = bench_iters)]
    pub iters: usize,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub model: PathBuf,
}

fn data_root(explicit: &Option<PathBuf>, manifest: &Path) -> PathBuf {
    explicit.clone().unwrap_or_else(|| manifest.parent().map(Path::to_path_buf).unwrap_or_default())
}

fn load_records(manifest: &Path) -> anyhow::Result<Vec<DatasetRecord>> {
    read_manifest(manifest).with_context(|| format!("reading manifest {}", manifest.display()))
}

fn cmd_synth(a: &SynthArgs) -> anyhow::Result<()> {
    let params = SynthParams {
        count_train: a.train,
        count_test: a.test,
        image_size: a.size,
        seed: a.seed,
        clutter_level: a.clutter,
    };
    let manifest = generate_synthetic(&params, &a.out).with_context(|| format!("writing to {}", a.out.display()))?;
    println!("{}", manifest.display());
    Ok(())
}

fn cmd_train(a: &TrainArgs) -> anyhow::Result<()> {
    let records = load_records(&a.manifest)?;
    let root = data_root(&a.data_root, &a.manifest);
    let load = |part: i64| -> anyhow::Result<Vec<_>> {
        records.iter().filter(|r| r.part == part).map(|r| make_sample(r, &root).map_err(Into::into)).collect()
    };
    let (train_set, val_set) = (load(1)?, load(2)?);
    if train_set.is_empty() || val_set.is_empty() {
        bail!(
            "manifest needs part 1 (train) and part 2 (validation) rows; found {} and {}",
            train_set.len(),
            val_set.len()
        );
    }
    let model = Model::init(ModelConfig::reference(), a.seed)?;
    let config = TrainConfig { epochs: a.epochs, batch_size: a.batch, lr: a.lr, seed: a.seed };
    println!("training on {} samples, validating on {}", train_set.len(), val_set.len());
    let (model, log) = train(model, &train_set, &val_set, &config, |m| {
        println!(
            "epoch {:>3}  loss {:.4}  acc {:.4}  prec {:.4}  rec {:.4}  |  val_loss {:.4}  val_acc {:.4}  val_prec {:.4}  val_rec {:.4}",
            m.epoch, m.loss, m.accuracy, m.precision, m.recall, m.val_loss, m.val_accuracy, m.val_precision, m.val_recall
        );
        let _ = std::io::stdout().flush();
    })?;
    save_model(&model, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    log.write_csv(fs::File::create(&a.log).with_context(|| format!("creating {}", a.log.display()))?)?;
    println!("model written to {}", a.out.display());
    Ok(())
}

fn cmd_detect(a: &DetectArgs) -> anyhow::Result<()> {
    let model = load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let image = load_image(&a.image)?;
    let (det, latency_ms) = timed_detect(&model, &image, SelectParams::default())?;
    let json = serde_json::to_string(&DetectionJson::new(det.quad.as_ref(), latency_ms))?;
    println!("{json}");
    if let Some(path) = &a.json {
        fs::write(path, format!("{json}\n")).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &a.overlay {
        let out = match &det.quad {
            Some(q) => draw_quad_overlay(&image, q, OVERLAY_COLOR)?,
            None => image,
        };
        save_png(&out, path)?;
    }
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> anyhow::Result<()> {
    let model = load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let mut records = load_records(&a.manifest)?;
    let part = a.part.or_else(|| records.iter().any(|r| r.part == 2).then_some(2));
    if let Some(p) = part {
        records.retain(|r| r.part == p);
    }
    if records.is_empty() {
        bail!("no records to evaluate");
    }
    let grid = threshold_grid(a.iou_step)?;
    let report = evaluate(&model, &records, data_root(&a.data_root, &a.manifest), &grid, SelectParams::default())?;
    report.write_curve_csv(fs::File::create(&a.curve).with_context(|| format!("creating {}", a.curve.display()))?)?;
    let found = report.detections.iter().filter(|d| d.predicted.is_some()).count();
    println!("images: {}  quads found: {}  failures: {}", report.detections.len(), found, report.failures.len());
    for f in &report.failures {
        eprintln!("failed: {}: {}", f.path, f.message);
    }
    if let Some(acc) = report.accuracy_at(0.5) {
        println!("accuracy@0.5: {acc:.4}");
    }
    println!(
        "pixel accuracy: {:.4}  precision: {:.4}  recall: {:.4}",
        report.pixel.accuracy, report.pixel.precision, report.pixel.recall
    );
    let t = report.timing;
    println!("latency ms: mean {:.3}  p50 {:.3}  p95 {:.3}", t.mean_ms, t.p50_ms, t.p95_ms);
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> anyhow::Result<()> {
    let model = load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let t = bench_inference(&model, a.iters)?;
    println!("mean_ms {:.3}", t.mean_ms);
    println!("p50_ms {:.3}", t.p50_ms);
    println!("p95_ms {:.3}", t.p95_ms);
    Ok(())
}

fn cmd_inspect(a: &InspectArgs) -> anyhow::Result<()> {
    let model = load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    print!("{}", summary_table(&model)?);
    Ok(())
}

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Train(a) => cmd_train(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Inspect(a) => cmd_inspect(a),
    }
}

/// Parses arguments and runs the command. Returns the process exit code:
/// 0 on success, 1 on a runtime failure, 2 on a usage error.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
