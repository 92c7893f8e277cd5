//! `transient`: one neuron preset driving its ring modulator.

use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use sephia_transient::{classify_regime, run_preset, EnergyReport, Regime, TransientPreset};

use crate::error::{CliError, CliResult};
use crate::manifest::ManifestBuilder;
use crate::train::write_json;
use crate::Command;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetName {
    Tonic,
    Adapting,
    Bursting,
}

impl PresetName {
    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::Tonic => "tonic",
            PresetName::Adapting => "adapting",
            PresetName::Bursting => "bursting",
        }
    }
}

#[derive(Debug, Clone, PartialEq, clap::Args, Serialize, Deserialize)]
pub struct TransientArgs {
    #[arg(value_enum)]
    pub preset: PresetName,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransientReport {
    pub preset: String,
    pub regime: Regime,
    pub expected: Regime,
    pub spike_count: usize,
    pub rate_hz: f64,
    pub spike_times_s: Vec<f64>,
    /// Peak through power per simulated channel (W).
    pub through_peak_w: Vec<f64>,
    pub energy: EnergyReport<f64>,
}

pub fn cmd_transient(a: &TransientArgs) -> CliResult<()> {
    let preset = TransientPreset::builtin(a.preset.as_str()).map_err(CliError::config)?;
    let mut mb = ManifestBuilder::new(Command::Transient(a.clone()));
    mb.hash_bytes(
        serde_json::to_string(&preset)
            .map_err(|e| CliError::Runtime(e.to_string()))?
            .as_bytes(),
    );
    let result = (|| {
        let run = run_preset(&preset).map_err(CliError::runtime)?;
        std::fs::create_dir_all(&a.out).map_err(|e| CliError::Runtime(format!("{}: {e}", a.out.display())))?;
        let wave = a.out.join("waveform.csv");
        run.write_csv(&wave).map_err(CliError::runtime)?;
        let report = TransientReport {
            preset: run.preset.clone(),
            regime: classify_regime(&run.adex.spikes),
            expected: preset.expected,
            spike_count: run.adex.spikes.len(),
            rate_hz: run.rate_hz,
            spike_times_s: run.adex.spikes.clone(),
            through_peak_w: run
                .through_w
                .iter()
                .map(|ch| ch.iter().copied().fold(0.0, f64::max))
                .collect(),
            energy: run.energy,
        };
        let rep = a.out.join("report.json");
        write_json(&rep, &report)?;
        mb.output(&wave);
        mb.output(&rep);
        println!(
            "{}: {} ({} spikes, {:.3} GSpike/s), P_E {:.3} uW, {}",
            report.preset,
            report.regime,
            report.spike_count,
            report.rate_hz * 1e-9,
            report.energy.p_average * 1e6,
            report
                .energy
                .e_per_spike
                .map_or("no spikes".to_string(), |e| format!("{:.3} fJ/spike", e * 1e15)),
        );
        Ok(())
    })();
    mb.write(&a.out, result)
}
