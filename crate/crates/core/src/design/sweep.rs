//! Design-space experiments: the spacing x MRM-variant training grid and the
//! source-power robustness sweep.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, NetKind};
use crate::dataset::{PreparedData, Sample};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::snn::{evaluate, train, EpochMetrics, NetworkSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MrmVariant {
    pub q_factor: f64,
    pub er_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    /// Labelled A, B, C, ... in order.
    pub delta_omegas_ghz: Vec<f64>,
    /// Labelled 1, 2, 3, ... in order.
    pub variants: Vec<MrmVariant>,
    pub seeds: Vec<u64>,
    pub p_lambda_dbm: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        let v = |q_factor, er_db| MrmVariant { q_factor, er_db };
        Self {
            delta_omegas_ghz: vec![100.0, 63.0, 50.0],
            variants: vec![v(10_000.0, 15.0), v(10_000.0, 6.0), v(5_000.0, 6.0)],
            seeds: (0..5).collect(),
            p_lambda_dbm: (-4..=12).map(f64::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    /// Spacing letter followed by variant number, e.g. `A1`.
    pub key: String,
    pub delta_omega_ghz: f64,
    pub q_factor: f64,
    pub er_db: f64,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.delta_omegas_ghz.is_empty() || self.delta_omegas_ghz.len() > 26 {
            return Err(Error::InvalidParameter(
                "grid.delta_omegas_ghz must hold 1..=26 spacings".into(),
            ));
        }
        if self.variants.is_empty() || self.seeds.is_empty() {
            return Err(Error::InvalidParameter(
                "grid.variants and grid.seeds must not be empty".into(),
            ));
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<GridCell> {
        let mut out = Vec::new();
        for (i, &d) in self.delta_omegas_ghz.iter().enumerate() {
            for (j, v) in self.variants.iter().enumerate() {
                out.push(GridCell {
                    key: format!("{}{}", (b'A' + i as u8) as char, j + 1),
                    delta_omega_ghz: d,
                    q_factor: v.q_factor,
                    er_db: v.er_db,
                });
            }
        }
        out
    }
}

/// The base configuration moved to a cell: spacing (with its tabulated
/// shifts), Q and ER replaced; everything else kept.
pub fn cell_config(base: &ExperimentConfig, cell: &GridCell, seed: u64) -> ExperimentConfig {
    let mut cfg = base.clone();
    cfg.network.kind = NetKind::Photonic;
    cfg.photonics.delta_omega_ghz = cell.delta_omega_ghz;
    cfg.photonics.dlambda_max_pm = None;
    cfg.photonics.dlambda_neural_pm = None;
    cfg.photonics.q_factor = cell.q_factor;
    cfg.photonics.er_db = cell.er_db;
    cfg.seed = seed;
    cfg
}

/// What the grid keeps from one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub epochs: Vec<EpochRecord>,
    pub min_val_loss: f64,
    pub test_accuracy: f64,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

impl From<&EpochMetrics> for EpochRecord {
    fn from(m: &EpochMetrics) -> Self {
        Self {
            epoch: m.epoch,
            train_loss: m.train_loss,
            val_loss: m.val_loss,
            val_accuracy: m.val_accuracy,
        }
    }
}

/// Trains `cfg` (seeded by `cfg.seed`) on `data`.
pub fn train_run(cfg: &ExperimentConfig, data: &PreparedData) -> Result<RunSummary> {
    let spec = cfg.network_spec::<f64>()?;
    let out = train(
        &spec,
        &data.train,
        &data.val,
        &data.test,
        &cfg.train,
        &cfg.init,
        cfg.network.time_steps,
        cfg.seed,
        &mut |_| {},
    )?;
    Ok(RunSummary {
        epochs: out.epochs.iter().map(EpochRecord::from).collect(),
        min_val_loss: out.min_val_loss,
        test_accuracy: out.test.accuracy,
        params: out.final_params,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub cell: String,
    pub seed: u64,
    /// Error message of a failed run.
    pub outcome: std::result::Result<RunSummary, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    #[serde(flatten)]
    pub cell: GridCell,
    pub n_ok: usize,
    pub failures: Vec<String>,
    /// Validation loss per epoch averaged over the successful seeds.
    pub mean_val_loss: Vec<f64>,
    /// Minimum of the mean validation-loss curve.
    pub min_val_loss: f64,
    pub best_test_accuracy: f64,
    pub best_seed: Option<u64>,
}

/// Per-cell aggregates in grid order. Cells without a successful run report
/// NaN losses and accuracy.
pub fn summarize_cells(grid: &SweepGrid, runs: &[SeedRun]) -> Vec<CellSummary> {
    grid.cells()
        .into_iter()
        .map(|cell| {
            let mine: Vec<&SeedRun> = runs.iter().filter(|r| r.cell == cell.key).collect();
            let ok: Vec<(u64, &RunSummary)> = mine
                .iter()
                .filter_map(|r| r.outcome.as_ref().ok().map(|s| (r.seed, s)))
                .collect();
            let failures = mine
                .iter()
                .filter_map(|r| r.outcome.as_ref().err().map(|e| format!("seed {}: {e}", r.seed)))
                .collect();
            let n_epochs = ok.iter().map(|(_, s)| s.epochs.len()).min().unwrap_or(0);
            let mean_val_loss: Vec<f64> = (0..n_epochs)
                .map(|e| ok.iter().map(|(_, s)| s.epochs[e].val_loss).sum::<f64>() / ok.len() as f64)
                .collect();
            let min_val_loss = mean_val_loss.iter().copied().fold(f64::NAN, f64::min);
            let best = ok
                .iter()
                .max_by(|a, b| a.1.test_accuracy.total_cmp(&b.1.test_accuracy).then(b.0.cmp(&a.0)));
            CellSummary {
                cell,
                n_ok: ok.len(),
                failures,
                mean_val_loss,
                min_val_loss,
                best_test_accuracy: best.map_or(f64::NAN, |b| b.1.test_accuracy),
                best_seed: best.map(|b| b.0),
            }
        })
        .collect()
}

/// Trains every (cell, seed) pair. `data_for_seed` supplies the split of a
/// seed; a failed run is recorded and the grid continues. `on_run` sees each
/// run as it finishes.
pub fn run_design_grid(
    grid: &SweepGrid,
    base: &ExperimentConfig,
    data_for_seed: &mut dyn FnMut(u64) -> Result<PreparedData>,
    on_run: &mut dyn FnMut(&SeedRun),
) -> Result<Vec<SeedRun>> {
    grid.validate()?;
    let mut data = Vec::with_capacity(grid.seeds.len());
    for &s in &grid.seeds {
        data.push(data_for_seed(s)?);
    }
    let mut runs = Vec::new();
    for cell in grid.cells() {
        for (&seed, d) in grid.seeds.iter().zip(&data) {
            let cfg = cell_config(base, &cell, seed);
            let run = SeedRun {
                cell: cell.key.clone(),
                seed,
                outcome: train_run(&cfg, d).map_err(|e| e.to_string()),
            };
            on_run(&run);
            runs.push(run);
        }
    }
    Ok(runs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub p_lambda_dbm: f64,
    pub accuracy: f64,
    pub mean_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSweep {
    pub points: Vec<PowerPoint>,
    /// Lowest power attaining the maximum accuracy.
    pub peak_dbm: f64,
    pub peak_accuracy: f64,
    /// Accuracy at `peak - 3 dB` minus the peak accuracy (fraction); absent
    /// when that power is not in the sweep.
    pub drop_3db: Option<f64>,
}

/// Evaluates fixed parameters while the comb is re-referenced to each source
/// power. Encoding and noise draws repeat across points (same `eval_seed`).
#[allow(clippy::too_many_arguments)]
pub fn run_power_sweep(
    spec: &NetworkSpec<f64>,
    trained_dbm: f64,
    params: &[f64],
    samples: &[Sample],
    steps: usize,
    noise: bool,
    eval_seed: u64,
    p_lambda_dbm: &[f64],
) -> Result<PowerSweep> {
    if p_lambda_dbm.is_empty() {
        return Err(Error::InvalidParameter(
            "power sweep needs at least one P_lambda".into(),
        ));
    }
    let mut points = Vec::with_capacity(p_lambda_dbm.len());
    for &p in p_lambda_dbm {
        let r = evaluate(
            &spec.with_source_power(trained_dbm, p),
            params,
            samples,
            steps,
            noise,
            eval_seed,
        )?;
        points.push(PowerPoint {
            p_lambda_dbm: p,
            accuracy: r.accuracy,
            mean_loss: r.mean_loss,
        });
    }
    let mut sorted: Vec<&PowerPoint> = points.iter().collect();
    sorted.sort_by(|a, b| a.p_lambda_dbm.total_cmp(&b.p_lambda_dbm));
    let peak = sorted
        .iter()
        .fold(sorted[0], |best, p| if p.accuracy > best.accuracy { p } else { best });
    let (peak_dbm, peak_accuracy) = (peak.p_lambda_dbm, peak.accuracy);
    let drop_3db = points
        .iter()
        .find(|p| (p.p_lambda_dbm - (peak_dbm - 3.0)).abs() < 1e-9)
        .map(|p| p.accuracy - peak_accuracy);
    Ok(PowerSweep {
        points,
        peak_dbm,
        peak_accuracy,
        drop_3db,
    })
}

/// Eval seed shared by every point of a run's power sweep.
pub fn power_sweep_seed(run_seed: u64) -> u64 {
    derive_seed(run_seed, "power_sweep")
}

/// One row per (cell, seed, epoch).
pub fn write_grid_csv<W: Write>(runs: &[SeedRun], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "cell",
        "seed",
        "epoch",
        "train_loss",
        "val_loss",
        "val_accuracy",
        "test_accuracy",
        "error",
    ])?;
    for r in runs {
        match &r.outcome {
            Ok(s) => {
                for e in &s.epochs {
                    w.write_record([
                        r.cell.clone(),
                        r.seed.to_string(),
                        e.epoch.to_string(),
                        e.train_loss.to_string(),
                        e.val_loss.to_string(),
                        e.val_accuracy.to_string(),
                        s.test_accuracy.to_string(),
                        String::new(),
                    ])?;
                }
            }
            Err(msg) => {
                w.write_record([
                    r.cell.clone(),
                    r.seed.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    msg.clone(),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// One row per (cell, P_lambda).
pub fn write_power_csv<W: Write>(sweeps: &[(String, PowerSweep)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["cell", "p_lambda_dbm", "accuracy", "mean_loss"])?;
    for (cell, s) in sweeps {
        for p in &s.points {
            w.write_record([
                cell.clone(),
                p.p_lambda_dbm.to_string(),
                p.accuracy.to_string(),
                p.mean_loss.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Table-style row: best accuracy, 3 dB robustness and min validation loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub cell: String,
    pub delta_omega_ghz: f64,
    pub q_factor: f64,
    pub er_db: f64,
    pub best_test_accuracy: f64,
    pub drop_3db_pts: Option<f64>,
    pub min_val_loss: f64,
    pub n_ok: usize,
}

pub fn table_rows(cells: &[CellSummary], sweeps: &[(String, PowerSweep)]) -> Vec<TableRow> {
    cells
        .iter()
        .map(|c| TableRow {
            cell: c.cell.key.clone(),
            delta_omega_ghz: c.cell.delta_omega_ghz,
            q_factor: c.cell.q_factor,
            er_db: c.cell.er_db,
            best_test_accuracy: c.best_test_accuracy,
            drop_3db_pts: sweeps
                .iter()
                .find(|(k, _)| *k == c.cell.key)
                .and_then(|(_, s)| s.drop_3db)
                .map(|d| 100.0 * d),
            min_val_loss: c.min_val_loss,
            n_ok: c.n_ok,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake(cell: &str, seed: u64, losses: &[f64], acc: f64) -> SeedRun {
        SeedRun {
            cell: cell.into(),
            seed,
            outcome: Ok(RunSummary {
                epochs: losses
                    .iter()
                    .enumerate()
                    .map(|(epoch, &val_loss)| EpochRecord {
                        epoch,
                        train_loss: val_loss,
                        val_loss,
                        val_accuracy: 0.5,
                    })
                    .collect(),
                min_val_loss: losses.iter().copied().fold(f64::INFINITY, f64::min),
                test_accuracy: acc,
                params: vec![],
            }),
        }
    }

    #[test]
    fn nine_labelled_cells() {
        let g = SweepGrid::default();
        let keys: Vec<String> = g.cells().into_iter().map(|c| c.key).collect();
        assert_eq!(keys, ["A1", "A2", "A3", "B1", "B2", "B3", "C1", "C2", "C3"]);
        let c3 = &g.cells()[8];
        assert_eq!((c3.delta_omega_ghz, c3.q_factor, c3.er_db), (50.0, 5000.0, 6.0));
        assert_eq!(g.p_lambda_dbm.first(), Some(&-4.0));
        assert_eq!(g.p_lambda_dbm.last(), Some(&12.0));
    }

    #[test]
    fn cell_config_uses_spacing_table() {
        let mut base = ExperimentConfig::default();
        base.photonics.dlambda_max_pm = Some(-123.0);
        let c = &SweepGrid::default().cells()[4];
        let cfg = cell_config(&base, c, 3);
        assert_eq!(cfg.photonics.shifts().unwrap(), (-250.0, -210.0));
        assert_eq!(
            (cfg.photonics.q_factor, cfg.photonics.er_db, cfg.seed),
            (10_000.0, 6.0, 3)
        );
    }

    #[test]
    fn summaries_average_curves_and_keep_failures() {
        let grid = SweepGrid {
            delta_omegas_ghz: vec![100.0],
            variants: vec![MrmVariant {
                q_factor: 1e4,
                er_db: 15.0,
            }],
            seeds: vec![0, 1, 2],
            p_lambda_dbm: vec![6.0],
        };
        let runs = vec![
            fake("A1", 0, &[1.0, 0.5, 0.6], 0.8),
            fake("A1", 1, &[0.8, 0.7, 0.2], 0.9),
            SeedRun {
                cell: "A1".into(),
                seed: 2,
                outcome: Err("diverged".into()),
            },
        ];
        let s = &summarize_cells(&grid, &runs)[0];
        assert_eq!(s.n_ok, 2);
        assert_eq!(s.failures.len(), 1);
        assert_eq!(s.mean_val_loss, vec![0.9, 0.6, 0.4]);
        assert!((s.min_val_loss - 0.4).abs() < 1e-15);
        assert_eq!((s.best_test_accuracy, s.best_seed), (0.9, Some(1)));
        let mut buf = Vec::new();
        write_grid_csv(&runs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 3 + 3 + 1);
        assert!(text.contains("diverged"));
    }
}
