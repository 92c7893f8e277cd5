//! `sweep design-grid` and `sweep power`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sephia_core::config::ExperimentConfig;
use sephia_core::dataset::PreparedData;
use sephia_core::design::{
    cell_config, power_sweep_seed, run_power_sweep, summarize_cells, table_rows, write_grid_csv, write_power_csv,
    CellSummary, GridCell, PowerSweep, SeedRun, SweepGrid, TableRow,
};

use crate::cache::{cached_train_run, Cache};
use crate::error::{CliError, CliResult};
use crate::manifest::ManifestBuilder;
use crate::train::{load_config, load_params, prepare_data, write_json};
use crate::{Command, SweepKind};

#[derive(Debug, Clone, PartialEq, clap::Args, Serialize, Deserialize)]
pub struct SweepArgs {
    #[arg(value_enum)]
    pub kind: SweepKind,
    /// Base experiment configuration (JSON).
    pub config: PathBuf,
    /// Trained parameters; required by the power sweep.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Seeds per grid cell (comma separated); default 0..5.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Overrides the number of training epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Restricts the grid to these cells, e.g. A1,C3.
    #[arg(long, value_delimiter = ',')]
    pub cells: Option<Vec<String>>,
    /// Directory memoizing finished training runs.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true, default_value_t = -4.0)]
    pub p_min: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 12.0)]
    pub p_max: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p_step: f64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Inclusive power grid; the end point is kept when the step lands on it
/// within rounding.
pub fn power_points(p_min: f64, p_max: f64, p_step: f64) -> CliResult<Vec<f64>> {
    if !(p_step > 0.0) || !(p_max >= p_min) || !p_min.is_finite() || !p_max.is_finite() {
        return Err(CliError::Config(format!(
            "power range needs p_min <= p_max and p_step > 0, got {p_min}..{p_max} step {p_step}"
        )));
    }
    let n = ((p_max - p_min) / p_step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| p_min + k as f64 * p_step).collect())
}

/// Salt for cached results: changes whenever the library version does.
pub fn cache_salt() -> String {
    format!("sephia-{}", env!("CARGO_PKG_VERSION"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub runs: Vec<SeedRun>,
    pub cells: Vec<CellSummary>,
    /// Power sweep of each cell's best seed.
    pub sweeps: Vec<(String, PowerSweep)>,
    pub table: Vec<TableRow>,
}

fn select_cells(grid: &SweepGrid, only: Option<&[String]>) -> CliResult<Vec<GridCell>> {
    let all = grid.cells();
    let Some(keys) = only else { return Ok(all) };
    for k in keys {
        if !all.iter().any(|c| &c.key == k) {
            let known: Vec<&str> = all.iter().map(|c| c.key.as_str()).collect();
            return Err(CliError::Config(format!(
                "unknown cell '{k}', expected one of {}",
                known.join(", ")
            )));
        }
    }
    Ok(all.into_iter().filter(|c| keys.contains(&c.key)).collect())
}

/// Trains every selected (cell, seed) pair, summarizes the cells and sweeps
/// source power on each cell's best run. Failed runs are recorded, not fatal.
pub fn design_grid(
    base: &ExperimentConfig,
    grid: &SweepGrid,
    only: Option<&[String]>,
    cache: Option<&Cache>,
    mut mb: Option<&mut ManifestBuilder>,
) -> CliResult<GridResult> {
    grid.validate().map_err(CliError::config)?;
    let cells = select_cells(grid, only)?;
    let mut data: Vec<(u64, PreparedData)> = Vec::new();
    for (i, &seed) in grid.seeds.iter().enumerate() {
        let m = if i == 0 { mb.as_deref_mut() } else { None };
        data.push((seed, prepare_data(base, seed, m)?));
    }
    let mut runs = Vec::new();
    for cell in &cells {
        for (seed, d) in &data {
            let cfg = cell_config(base, cell, *seed);
            let t0 = std::time::Instant::now();
            let outcome = cached_train_run(cache, &cfg, d).map_err(|e| e.to_string());
            match &outcome {
                Ok(s) => eprintln!(
                    "{} seed {seed}: test accuracy {:.4}, min val loss {:.4} ({:.0} s)",
                    cell.key,
                    s.test_accuracy,
                    s.min_val_loss,
                    t0.elapsed().as_secs_f64()
                ),
                Err(e) => eprintln!("{} seed {seed}: failed: {e}", cell.key),
            }
            runs.push(SeedRun {
                cell: cell.key.clone(),
                seed: *seed,
                outcome,
            });
        }
    }
    let summaries: Vec<CellSummary> = summarize_cells(grid, &runs)
        .into_iter()
        .filter(|s| cells.iter().any(|c| c.key == s.cell.key))
        .collect();
    let mut sweeps = Vec::new();
    for s in &summaries {
        let Some(best) = s.best_seed else { continue };
        let run = runs
            .iter()
            .find(|r| r.cell == s.cell.key && r.seed == best)
            .and_then(|r| r.outcome.as_ref().ok())
            .expect("best seed has a successful run");
        let cfg = cell_config(base, &s.cell, best);
        let d = &data.iter().find(|(seed, _)| *seed == best).expect("seed prepared").1;
        let sweep = cached_power_sweep(cache, &cfg, &run.params, d, &grid.p_lambda_dbm)?;
        eprintln!(
            "{} power sweep: peak {:.4} at {} dBm",
            s.cell.key, sweep.peak_accuracy, sweep.peak_dbm
        );
        sweeps.push((s.cell.key.clone(), sweep));
    }
    let table = table_rows(&summaries, &sweeps);
    Ok(GridResult {
        runs,
        cells: summaries,
        sweeps,
        table,
    })
}

/// Re-evaluates `params` (trained at `cfg.photonics.p_max_dbm`) at every
/// source power, with draws fixed by the run's seed.
pub fn cached_power_sweep(
    cache: Option<&Cache>,
    cfg: &ExperimentConfig,
    params: &[f64],
    data: &PreparedData,
    points: &[f64],
) -> CliResult<PowerSweep> {
    let run = || {
        let spec = cfg.network_spec::<f64>().map_err(CliError::config)?;
        run_power_sweep(
            &spec,
            cfg.photonics.p_max_dbm,
            params,
            &data.test,
            cfg.network.time_steps,
            cfg.train.noise_enabled,
            power_sweep_seed(cfg.seed),
            points,
        )
        .map_err(CliError::runtime)
    };
    match cache {
        None => run(),
        Some(c) => {
            let key = c.key(
                "power",
                &[&json_bytes(cfg)?, &json_bytes(params)?, &json_bytes(points)?],
            );
            c.get_or(&key, run)
        }
    }
}

fn json_bytes<T: Serialize + ?Sized>(v: &T) -> CliResult<Vec<u8>> {
    serde_json::to_vec(v).map_err(|e| CliError::Runtime(e.to_string()))
}

fn write_with<F>(path: &Path, f: F) -> CliResult<()>
where
    F: FnOnce(std::fs::File) -> sephia_core::Result<()>,
{
    let file = std::fs::File::create(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    f(file).map_err(CliError::runtime)
}

fn write_table(path: &Path, rows: &[TableRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    for r in rows {
        w.serialize(r)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    }
    w.flush()
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

pub fn cmd_sweep(a: &SweepArgs, snapshot: Option<ExperimentConfig>) -> CliResult<()> {
    let mut cfg = load_config(&a.config, snapshot)?;
    if let Some(e) = a.epochs {
        cfg.train.epochs = e;
    }
    let points = power_points(a.p_min, a.p_max, a.p_step)?;
    let mut stored = a.clone();
    stored.epochs = None;
    let mut mb = ManifestBuilder::new(Command::Sweep(stored));
    mb.config(&cfg);
    let result = match a.kind {
        SweepKind::DesignGrid => grid_into(a, &cfg, points, &mut mb),
        SweepKind::Power => power_into(a, &cfg, &points, &mut mb),
    };
    mb.write(&a.out, result)
}

fn create_out(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))
}

fn grid_into(a: &SweepArgs, cfg: &ExperimentConfig, points: Vec<f64>, mb: &mut ManifestBuilder) -> CliResult<()> {
    let mut grid = SweepGrid {
        p_lambda_dbm: points,
        ..SweepGrid::default()
    };
    if let Some(s) = &a.seeds {
        grid.seeds = s.clone();
    }
    let cache = a.cache.as_ref().map(|d| Cache::new(d, cache_salt()));
    let r = design_grid(cfg, &grid, a.cells.as_deref(), cache.as_ref(), Some(mb))?;
    create_out(&a.out)?;
    let out = |name: &str| a.out.join(name);
    write_with(&out("grid.csv"), |f| write_grid_csv(&r.runs, f))?;
    write_with(&out("power.csv"), |f| write_power_csv(&r.sweeps, f))?;
    write_json(&out("cells.json"), &r.cells)?;
    write_table(&out("table.csv"), &r.table)?;
    for name in ["grid.csv", "power.csv", "cells.json", "table.csv"] {
        mb.output(&out(name));
    }
    for row in &r.table {
        eprintln!(
            "{}: best accuracy {:.2}%, 3 dB drop {}, min val loss {:.3}",
            row.cell,
            100.0 * row.best_test_accuracy,
            row.drop_3db_pts.map_or("n/a".into(), |d| format!("{d:.2} pts")),
            row.min_val_loss
        );
    }
    Ok(())
}

fn power_into(a: &SweepArgs, cfg: &ExperimentConfig, points: &[f64], mb: &mut ManifestBuilder) -> CliResult<()> {
    let path = a
        .params
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep power needs --params".into()))?;
    let (params, raw) = load_params(path)?;
    mb.params(raw);
    mb.seed("power_sweep", power_sweep_seed(cfg.seed));
    let mut cfg = cfg.clone();
    cfg.photonics.p_max_dbm = params.p_max_dbm;
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
    let data = prepare_data(&cfg, cfg.seed, Some(mb))?;
    let cache = a.cache.as_ref().map(|d| Cache::new(d, cache_salt()));
    let sweep = cached_power_sweep(cache.as_ref(), &cfg, &params.params, &data, points)?;
    create_out(&a.out)?;
    let label = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("params")
        .to_string();
    let sweeps = [(label, sweep)];
    write_with(&a.out.join("power.csv"), |f| write_power_csv(&sweeps, f))?;
    write_json(&a.out.join("power.json"), &sweeps[0].1)?;
    mb.output(&a.out.join("power.csv"));
    mb.output(&a.out.join("power.json"));
    for p in &sweeps[0].1.points {
        eprintln!("{:>6.1} dBm: accuracy {:.4}", p.p_lambda_dbm, p.accuracy);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_grid_is_inclusive() {
        let p = power_points(-4.0, 12.0, 1.0).unwrap();
        assert_eq!(p.len(), 17);
        assert_eq!((p[0], p[16]), (-4.0, 12.0));
        assert_eq!(power_points(0.0, 1.0, 0.3).unwrap().len(), 4);
        assert!(power_points(1.0, 0.0, 1.0).is_err());
        assert!(power_points(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn cell_selection_rejects_unknown_keys() {
        let g = SweepGrid::default();
        let c = select_cells(&g, Some(&["C3".into(), "A1".into()])).unwrap();
        assert_eq!(c.iter().map(|c| c.key.as_str()).collect::<Vec<_>>(), ["A1", "C3"]);
        assert!(matches!(
            select_cells(&g, Some(&["D1".into()])),
            Err(CliError::Config(_))
        ));
    }
}
