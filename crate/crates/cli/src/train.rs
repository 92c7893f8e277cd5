//! `train` and `eval`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sephia_core::config::{ExperimentConfig, NetKind};
use sephia_core::dataset::{idx, prepare, resolve_data_dir, PreparedData};
use sephia_core::rng::{derive_seed, names};
use sephia_core::snn::{evaluate, train, EvalReport, TrainOutcome};

use crate::error::{CliError, CliResult};
use crate::manifest::ManifestBuilder;
use crate::Command;

#[derive(Debug, Clone, PartialEq, clap::Args, Serialize, Deserialize)]
pub struct TrainArgs {
    /// Experiment configuration (JSON).
    pub config: PathBuf,
    /// Overrides the configuration's root seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the number of epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, clap::Args, Serialize, Deserialize)]
pub struct EvalArgs {
    /// Parameters written by `train`.
    pub params: PathBuf,
    /// Experiment configuration (JSON).
    pub config: PathBuf,
    /// Evaluate with the comb re-referenced to this peak channel power.
    #[arg(long, allow_hyphen_values = true)]
    pub p_lambda_dbm: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Trained parameters with what is needed to rebuild the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    pub kind: NetKind,
    /// Source power the parameters were trained at (dBm).
    pub p_max_dbm: f64,
    pub n_params: usize,
    pub params: Vec<f64>,
}

pub fn load_config(path: &Path, snapshot: Option<ExperimentConfig>) -> CliResult<ExperimentConfig> {
    match snapshot {
        Some(cfg) => Ok(cfg),
        None => ExperimentConfig::load(path).map_err(CliError::config),
    }
}

pub const IDX_FILES: [&str; 4] = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
];

/// Resolves the dataset (a missing directory is a configuration error),
/// hashes its files into the manifest and prepares the seed's split.
pub fn prepare_data(cfg: &ExperimentConfig, seed: u64, mb: Option<&mut ManifestBuilder>) -> CliResult<PreparedData> {
    let dir = resolve_data_dir(&cfg.data).map_err(CliError::config)?;
    if let Some(mb) = mb {
        for name in IDX_FILES {
            let path = idx::locate(&dir, name).map_err(CliError::config)?;
            mb.input_file(&path)?;
        }
    }
    prepare(&cfg.data, seed).map_err(CliError::runtime)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Runtime(format!("CSV: {e}"))
}

/// Per-epoch metrics without timings, so reruns are byte-identical.
pub fn write_metrics(path: &Path, out: &TrainOutcome) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["epoch", "train_loss", "val_loss", "val_accuracy", "lr_end"])
        .map_err(csv_err)?;
    for e in &out.epochs {
        w.write_record([
            e.epoch.to_string(),
            e.train_loss.to_string(),
            e.val_loss.to_string(),
            e.val_accuracy.to_string(),
            e.lr_end.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Runtime(e.to_string()))
}

fn write_batches(path: &Path, out: &TrainOutcome) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["step", "epoch", "lr", "train_loss", "val_accuracy", "val_accuracy_sma"])
        .map_err(csv_err)?;
    for b in &out.batches {
        w.write_record([
            b.step.to_string(),
            b.epoch.to_string(),
            b.lr.to_string(),
            b.train_loss.to_string(),
            b.val_accuracy.to_string(),
            b.val_accuracy_sma.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn write_confusion(path: &Path, report: &EvalReport) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let n = report.confusion.len();
    let mut header = vec!["true".to_string()];
    header.extend((0..n).map(|p| format!("pred_{p}")));
    w.write_record(&header).map_err(csv_err)?;
    for (t, row) in report.confusion.iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(row.iter().map(|c| c.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::Runtime(e.to_string()))
}

pub fn cmd_train(a: &TrainArgs, snapshot: Option<ExperimentConfig>) -> CliResult<()> {
    let mut cfg = load_config(&a.config, snapshot)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(e) = a.epochs {
        cfg.train.epochs = e;
    }
    cfg.validate().map_err(CliError::config)?;
    let mut stored = a.clone();
    stored.seed = None;
    stored.epochs = None;
    let mut mb = ManifestBuilder::new(Command::Train(stored));
    mb.config(&cfg);
    let result = train_into(&cfg, &a.out, &mut mb);
    mb.write(&a.out, result)
}

fn train_into(cfg: &ExperimentConfig, out: &Path, mb: &mut ManifestBuilder) -> CliResult<()> {
    let spec = cfg.network_spec::<f64>().map_err(CliError::config)?;
    let data = prepare_data(cfg, cfg.seed, Some(mb))?;
    create_dir(out)?;
    eprintln!(
        "train: {:?} net, {} parameters, {} train / {} val / {} test samples",
        cfg.network.kind,
        spec.n_params(),
        data.train.len(),
        data.val.len(),
        data.test.len()
    );
    let outcome = train(
        &spec,
        &data.train,
        &data.val,
        &data.test,
        &cfg.train,
        &cfg.init,
        cfg.network.time_steps,
        cfg.seed,
        &mut |e| {
            eprintln!(
                "epoch {:>2}: train loss {:.4}, val loss {:.4}, val acc {:.4} ({:.1} s)",
                e.epoch, e.train_loss, e.val_loss, e.val_accuracy, e.seconds
            )
        },
    )
    .map_err(CliError::runtime)?;
    eprintln!(
        "test accuracy {:.4}, min val loss {:.4}",
        outcome.test.accuracy, outcome.min_val_loss
    );
    let path = |name: &str| out.join(name);
    write_metrics(&path("metrics.csv"), &outcome)?;
    write_batches(&path("batches.csv"), &outcome)?;
    write_json(
        &path("params.json"),
        &ParamsFile {
            kind: cfg.network.kind,
            p_max_dbm: cfg.photonics.p_max_dbm,
            n_params: outcome.final_params.len(),
            params: outcome.final_params.clone(),
        },
    )?;
    write_json(&path("test.json"), &outcome.test)?;
    write_confusion(&path("confusion.csv"), &outcome.test)?;
    for name in [
        "metrics.csv",
        "batches.csv",
        "params.json",
        "test.json",
        "confusion.csv",
    ] {
        mb.output(&path(name));
    }
    Ok(())
}

/// Seed the training loop uses for its final test pass.
pub fn test_eval_seed(seed: u64) -> u64 {
    derive_seed(derive_seed(seed, names::EVAL), "test")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalOutput {
    pub p_lambda_dbm: f64,
    #[serde(flatten)]
    pub report: EvalReport,
}

pub fn load_params(path: &Path) -> CliResult<(ParamsFile, serde_json::Value)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let p: ParamsFile =
        serde_json::from_value(value.clone()).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((p, value))
}

pub fn cmd_eval(a: &EvalArgs, snapshot: Option<ExperimentConfig>) -> CliResult<()> {
    let cfg = load_config(&a.config, snapshot)?;
    let (params, raw) = load_params(&a.params)?;
    let mut mb = ManifestBuilder::new(Command::Eval(a.clone()));
    mb.config(&cfg);
    mb.params(raw);
    mb.seed("test_eval", test_eval_seed(cfg.seed));
    let result = (|| {
        let spec = cfg.network_spec::<f64>().map_err(CliError::config)?;
        if params.kind != cfg.network.kind || params.params.len() != spec.n_params() {
            return Err(CliError::Config(format!(
                "params file holds {} {:?} parameters, configuration needs {} {:?}",
                params.params.len(),
                params.kind,
                spec.n_params(),
                cfg.network.kind
            )));
        }
        let p = a.p_lambda_dbm.unwrap_or(params.p_max_dbm);
        let spec = spec.with_source_power(params.p_max_dbm, p);
        let data = prepare_data(&cfg, cfg.seed, Some(&mut mb))?;
        let report = evaluate(
            &spec,
            &params.params,
            &data.test,
            cfg.network.time_steps,
            cfg.train.noise_enabled,
            test_eval_seed(cfg.seed),
        )
        .map_err(CliError::runtime)?;
        let out = EvalOutput {
            p_lambda_dbm: p,
            report,
        };
        println!(
            "{}",
            serde_json::to_string(&out).map_err(|e| CliError::Runtime(e.to_string()))?
        );
        if let Some(dir) = &a.out {
            create_dir(dir)?;
            write_json(&dir.join("eval.json"), &out)?;
            write_confusion(&dir.join("confusion.csv"), &out.report)?;
            mb.output(&dir.join("eval.json"));
            mb.output(&dir.join("confusion.csv"));
        }
        Ok(())
    })();
    match &a.out {
        Some(dir) => mb.write(dir, result),
        None => result,
    }
}
