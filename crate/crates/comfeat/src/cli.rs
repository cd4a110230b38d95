//! The `comfeat` command line.
//!
//! Exit status: 0 on success, 1 on a runtime error (message on stderr),
//! 2 on a usage error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use comfeat_core::feature::FeatureSource;
use comfeat_core::spectral::{cepstral_features, temporal_mean_pool, FilterScale, SpectralConfig};

use crate::config::{parse_train_config, read_spectral_config, ServiceConfig, MODEL_ENV};
use crate::embedding::{store_embedding, store_matrix};
use crate::manifest::read_manifest;
use crate::pipeline::{evaluate, to_model_rate, train_from_manifest, TrainConfig};
use crate::predict::Predictor;
use crate::wav::decode_wav;
use crate::weights::{load_weights, model_version, save_weights, weights_digest};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "comfeat",
    version,
    about = "Speech-based depression severity regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute cepstral features for one WAV or every audio file in a manifest.
    Extract(ExtractArgs),
    /// Train a fusion model from a manifest and write CFWT weights.
    Train(TrainArgs),
    /// Score a manifest with trained weights and print MAE/RMSE as JSON.
    Eval(EvalArgs),
    /// Predict one utterance and print the prediction as JSON.
    Predict(PredictArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cepstra {
    Mfcc,
    Lfcc,
}

impl Cepstra {
    fn source(self) -> FeatureSource {
        match self {
            Cepstra::Mfcc => FeatureSource::Mfcc,
            Cepstra::Lfcc => FeatureSource::Lfcc,
        }
    }
}

#[derive(Debug, Args)]
struct ExtractArgs {
    /// A single WAV file.
    #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
    audio: Option<PathBuf>,
    /// A manifest; every entry with audio gets `<id>.<kind>.cfem` in --out.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output file (with --audio) or directory (with --manifest).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "mfcc")]
    kind: Cepstra,
    /// Write the time-averaged vector instead of the per-frame matrix.
    #[arg(long)]
    pooled: bool,
    #[arg(long)]
    spectral_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Where to write the CFWT weights.
    #[arg(long)]
    out: PathBuf,
    /// Training config file (`key = value`); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training log as JSON lines; defaults to `<out>.log.jsonl`.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Comma-separated sources in branch order, e.g. `trillsson,mfcc`.
    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<FeatureSource>>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    spectral_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    spectral_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    audio: PathBuf,
    /// CFEM file for a neural branch; repeat for several sources.
    #[arg(long)]
    embedding: Vec<PathBuf>,
    #[arg(long)]
    spectral_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// Service config file (`key = value`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Weights to serve; the COMFEAT_MODEL environment variable wins over this.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Listen address, overriding the config file.
    #[arg(long)]
    listen: Option<std::net::SocketAddr>,
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Extract(a) => extract(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Predict(a) => predict(a),
        Command::Serve(a) => serve(a),
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string(value).expect("serializable"));
}

fn extract_one(audio: &Path, out: &Path, cfg: &SpectralConfig, pooled: bool) -> Result<()> {
    let clip = to_model_rate(decode_wav(&read(audio)?)?)?;
    let frames = cepstral_features(&clip, cfg)?;
    let bytes = if pooled {
        store_embedding(&temporal_mean_pool(&frames, FeatureSource::Other)?)?
    } else {
        store_matrix(&frames)?
    };
    write(out, bytes)
}

fn extract(a: ExtractArgs) -> Result<()> {
    let source = a.kind.source();
    let mut cfg = read_spectral_config(a.spectral_config.as_deref())?;
    cfg.scale = match source {
        FeatureSource::Lfcc => FilterScale::Linear,
        _ => FilterScale::Mel,
    };
    match (a.audio, a.manifest) {
        (Some(audio), _) => extract_one(&audio, &a.out, &cfg, a.pooled),
        (None, Some(manifest)) => {
            fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
            let mut written = 0;
            for entry in read_manifest(&manifest)? {
                let Some(audio) = &entry.audio_path else { continue };
                let out = a.out.join(format!("{}.{}.cfem", entry.id, source));
                extract_one(audio, &out, &cfg, a.pooled)?;
                written += 1;
            }
            eprintln!("wrote {written} feature files to {}", a.out.display());
            Ok(())
        }
        (None, None) => unreachable!("clap requires one input"),
    }
}

fn train(a: TrainArgs) -> Result<()> {
    let mut cfg = TrainConfig::default();
    if let Some(path) = &a.config {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        cfg = parse_train_config(&text, cfg)?;
    }
    if let Some(f) = a.features {
        cfg.feature_set = f;
    }
    cfg.epochs = a.epochs.unwrap_or(cfg.epochs);
    cfg.batch_size = a.batch_size.unwrap_or(cfg.batch_size);
    cfg.lr = a.lr.unwrap_or(cfg.lr);
    cfg.dropout_p = a.dropout.unwrap_or(cfg.dropout_p);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    cfg.early_stop_patience = a.patience.unwrap_or(cfg.early_stop_patience);

    let spectral = read_spectral_config(a.spectral_config.as_deref())?;
    let entries = read_manifest(&a.manifest)?;
    let outcome = train_from_manifest(&entries, &cfg, &spectral)?;
    let bytes = save_weights(&outcome.model);
    write(&a.out, &bytes)?;
    let log_path = a.log.unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".log.jsonl");
        PathBuf::from(p)
    });
    write(&log_path, outcome.log_jsonl())?;
    let best = outcome
        .log
        .iter()
        .filter_map(|e| e.dev_rmse)
        .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.min(r))));
    print_json(&serde_json::json!({
        "weights": a.out,
        "log": log_path,
        "model_version": model_version(&weights_digest(&bytes)),
        "epochs_run": outcome.log.len(),
        "best_dev_rmse": best,
        "train": outcome.train_ids.len(),
        "dev": outcome.dev_ids.len(),
        "test": outcome.test_ids,
    }));
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let bytes = read(&a.model)?;
    let model = load_weights(&bytes)?;
    let spectral = read_spectral_config(a.spectral_config.as_deref())?;
    let entries = read_manifest(&a.manifest)?;
    let mut report = evaluate(&model, &entries, &spectral)?;
    report.model_version = model_version(&weights_digest(&bytes));
    print_json(&report);
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let spectral = read_spectral_config(a.spectral_config.as_deref())?;
    let predictor = Predictor::load(&a.model, &spectral)?;
    let audio = read(&a.audio)?;
    let embeddings = a.embedding.iter().map(|p| read(p)).collect::<Result<Vec<_>>>()?;
    print_json(&predictor.predict(&audio, &embeddings)?);
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    let text = match &a.config {
        Some(p) => fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
        None => String::new(),
    };
    let env_model = std::env::var_os(MODEL_ENV).map(PathBuf::from);
    let explicit_model = env_model.is_some() || a.model.is_some();
    let mut cfg = ServiceConfig::parse(&text, env_model.or(a.model))?;
    // paths inside a config file are relative to that file
    if let Some(dir) = a.config.as_deref().and_then(Path::parent) {
        if !explicit_model {
            cfg.model_path = dir.join(&cfg.model_path);
        }
        cfg.spectral_config = cfg.spectral_config.map(|p| dir.join(p));
    }
    if let Some(listen) = a.listen {
        cfg.listen = listen;
    }
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .try_init();
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::Incompatible(e.to_string()))?;
    runtime.block_on(crate::service::serve(cfg))
}
