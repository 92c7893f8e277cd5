//! Command-line front end: training, evaluation, design sweeps, transient
//! simulation and the closed-form budget table. Every command that writes an
//! output directory also writes a `manifest.json` from which it can be
//! replayed.

// `!(x > 0.0)` checks also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod budget;
pub mod cache;
pub mod error;
pub mod manifest;
pub mod sweep;
pub mod train;
pub mod transient;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub use error::{CliError, CliResult};
pub use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "sephia", version, about = "Optoelectronic spiking network simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Train a network from a JSON configuration.
    Train(train::TrainArgs),
    /// Evaluate saved parameters on the test split.
    Eval(train::EvalArgs),
    /// Run the design grid or a source-power sweep.
    Sweep(sweep::SweepArgs),
    /// Simulate one neuron preset through the ring modulator.
    Transient(transient::TransientArgs),
    /// Print power, frequency and energy budgets.
    Budget(budget::BudgetArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, PartialEq, clap::Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Output directory for the replayed run.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    DesignGrid,
    Power,
}

/// Runs a parsed command; the error carries the process exit code.
pub fn run(command: &Command) -> CliResult<()> {
    match command {
        Command::Train(a) => train::cmd_train(a, None),
        Command::Eval(a) => train::cmd_eval(a, None),
        Command::Sweep(a) => sweep::cmd_sweep(a, None),
        Command::Transient(a) => transient::cmd_transient(a),
        Command::Budget(a) => budget::cmd_budget(a),
        Command::Replay(a) => replay(a),
    }
}

fn replay(a: &ReplayArgs) -> CliResult<()> {
    let m = RunManifest::load(&a.manifest)?;
    let config = m.config_snapshot()?;
    match m.command {
        Command::Train(mut t) => {
            t.out = a.out.clone();
            train::cmd_train(&t, config)
        }
        Command::Eval(mut e) => {
            e.out = Some(a.out.clone());
            let params = m
                .params_snapshot
                .ok_or_else(|| CliError::Config("manifest has no parameter snapshot".into()))?;
            let dir = a.out.clone();
            std::fs::create_dir_all(&dir).map_err(|err| CliError::Runtime(format!("{}: {err}", dir.display())))?;
            let path = dir.join("params.json");
            train::write_json(&path, &params)?;
            e.params = path;
            train::cmd_eval(&e, config)
        }
        Command::Sweep(mut s) => {
            s.out = a.out.clone();
            sweep::cmd_sweep(&s, config)
        }
        Command::Transient(mut t) => {
            t.out = a.out.clone();
            transient::cmd_transient(&t)
        }
        Command::Budget(mut b) => {
            b.out = Some(a.out.clone());
            budget::cmd_budget(&b)
        }
        Command::Replay(_) => Err(CliError::Config("a manifest cannot record a replay".into())),
    }
}
