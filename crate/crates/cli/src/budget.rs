//! `budget`: closed-form power, frequency and energy budgets of one Op-Tile.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use sephia_core::design::{
    energy_per_spike, fsr_channel_limit, min_source_power_dbm, path_loss_db, power_limited_tile_size,
    resolution_margin_db, BudgetInputs,
};
use sephia_core::photonic::PdParams;
use sephia_core::units::watt_to_dbm;

use crate::error::{CliError, CliResult};
use crate::manifest::ManifestBuilder;
use crate::train::write_json;
use crate::Command;

#[derive(Debug, Clone, PartialEq, clap::Args, Serialize, Deserialize)]
pub struct BudgetArgs {
    #[arg(long, default_value_t = 16)]
    pub n_inp: usize,
    #[arg(long, default_value_t = 16)]
    pub n_out: usize,
    /// Per-MRM insertion loss (dB).
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.2)]
    pub il_db: f64,
    #[arg(long, default_value_t = 100.0)]
    pub delta_omega_ghz: f64,
    #[arg(long, default_value_t = 1306.0)]
    pub fsr_ghz: f64,
    #[arg(long, default_value_t = 4)]
    pub bits: u32,
    /// Source power available per channel (dBm).
    #[arg(long, allow_hyphen_values = true, default_value_t = 6.0)]
    pub p_source_dbm: f64,
    /// Detector floor (dBm); the reference photodetector's NEP over its bandwidth when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub pd_floor_dbm: Option<f64>,
    /// Electrical power of one neuron (W).
    #[arg(long, default_value_t = 4.586e-6)]
    pub p_e_w: f64,
    /// Optical power per neuron for the energy roll-up (dBm).
    #[arg(long, allow_hyphen_values = true, default_value_t = 4.0)]
    pub p_lambda_dbm: f64,
    #[arg(long, default_value_t = 1e9)]
    pub rate_hz: f64,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Default for BudgetArgs {
    fn default() -> Self {
        Self {
            n_inp: 16,
            n_out: 16,
            il_db: 0.2,
            delta_omega_ghz: 100.0,
            fsr_ghz: 1306.0,
            bits: 4,
            p_source_dbm: 6.0,
            pd_floor_dbm: None,
            p_e_w: 4.586e-6,
            p_lambda_dbm: 4.0,
            rate_hz: 1e9,
            json: false,
            out: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub inputs: BudgetInputs,
    pub path_loss_db: f64,
    pub resolution_margin_db: f64,
    pub min_source_power_dbm: f64,
    /// Available source power minus the requirement.
    pub headroom_db: f64,
    /// Largest square tile the source power supports.
    pub power_limited_tile: usize,
    pub fsr_channel_limit: usize,
    pub energy_per_spike_j: f64,
}

pub fn budget_report(a: &BudgetArgs) -> CliResult<BudgetReport> {
    let pd_floor_dbm = match a.pd_floor_dbm {
        Some(p) => p,
        None => watt_to_dbm(PdParams::<f64>::reference().min_detectable_power()).map_err(CliError::runtime)?,
    };
    let inputs = BudgetInputs {
        n_inp: a.n_inp,
        n_out: a.n_out,
        il_db: a.il_db,
        pd_floor_dbm,
        resolution_bits: a.bits,
    };
    inputs.validate().map_err(CliError::config)?;
    let need = min_source_power_dbm(&inputs);
    Ok(BudgetReport {
        path_loss_db: path_loss_db(a.n_inp, a.n_out, a.il_db),
        resolution_margin_db: resolution_margin_db(a.bits),
        min_source_power_dbm: need,
        headroom_db: a.p_source_dbm - need,
        power_limited_tile: power_limited_tile_size(a.il_db, pd_floor_dbm, a.bits, a.p_source_dbm),
        fsr_channel_limit: fsr_channel_limit(a.fsr_ghz, a.delta_omega_ghz).map_err(CliError::config)?,
        energy_per_spike_j: energy_per_spike(a.p_e_w, a.p_lambda_dbm, a.rate_hz).map_err(CliError::config)?,
        inputs,
    })
}

pub fn cmd_budget(a: &BudgetArgs) -> CliResult<()> {
    let r = budget_report(a);
    let Some(dir) = &a.out else {
        return r.and_then(|r| print_report(a, &r));
    };
    let mut mb = ManifestBuilder::new(Command::Budget(a.clone()));
    let result = r.and_then(|r| {
        print_report(a, &r)?;
        std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
        write_json(&dir.join("budget.json"), &r)?;
        mb.output(&dir.join("budget.json"));
        Ok(())
    });
    mb.write(dir, result)
}

fn print_report(a: &BudgetArgs, r: &BudgetReport) -> CliResult<()> {
    if a.json {
        println!(
            "{}",
            serde_json::to_string_pretty(r).map_err(|e| CliError::Runtime(e.to_string()))?
        );
        return Ok(());
    }
    let i = &r.inputs;
    println!("tile                    {} x {}, IL {} dB", i.n_inp, i.n_out, i.il_db);
    println!("path loss               {:.2} dB", r.path_loss_db);
    println!("PD floor                {:.2} dBm", i.pd_floor_dbm);
    println!(
        "resolution margin       {:.2} dB ({} bits)",
        r.resolution_margin_db, i.resolution_bits
    );
    println!("min source power        {:.2} dBm", r.min_source_power_dbm);
    println!("headroom at {:>5.1} dBm   {:.2} dB", a.p_source_dbm, r.headroom_db);
    println!("power-limited N_T       {}", r.power_limited_tile);
    println!(
        "FSR channel limit       {} ({} GHz / {} GHz)",
        r.fsr_channel_limit, a.fsr_ghz, a.delta_omega_ghz
    );
    println!("energy per spike        {:.4} pJ", r.energy_per_spike_j * 1e12);
    Ok(())
}
