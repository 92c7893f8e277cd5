//! Op-Tile forward model: spike encoding on the neural MRM bus, ideal
//! broadcast to the weight-bank rows, per-row MRM weighting and balanced
//! photodetection into one signed current per neuron.

use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::photonic::{CombSource, MrmParams, Notch, PdParams};
use crate::scalar::{sigmoid, Scalar};
use crate::units::{hz_per_pm, pm_to_hz};

/// Static description of one Op-Tile.
#[derive(Debug, Clone, PartialEq)]
pub struct OpTileConfig<S> {
    /// Number of inputs = WDM channels used.
    pub n_inp: usize,
    /// Weight-bank rows; row `2m` is excitatory and `2m + 1` inhibitory for neuron `m`.
    pub n_out_rows: usize,
    /// Most negative weight-MRM shift (pm); realized shifts lie in `(dlambda_max_pm, 0)`.
    pub dlambda_max_pm: S,
    /// Shift applied to a neural MRM while its neuron spikes (pm).
    pub dlambda_neural_pm: S,
    /// Q / ER / IL template; every ring's rest resonance sits on its channel center.
    pub mrm: MrmParams<S>,
    pub comb: CombSource<S>,
    /// Current that maps to unit membrane drive (A).
    pub i_unit: S,
}

impl<S: Scalar> OpTileConfig<S> {
    pub fn n_neurons(&self) -> usize {
        self.n_out_rows / 2
    }

    pub fn n_weights(&self) -> usize {
        self.n_out_rows * self.n_inp
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_inp == 0 || self.n_out_rows == 0 {
            return Err(Error::InvalidParameter("tile dimensions must be non-zero".into()));
        }
        if !self.n_out_rows.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "weight bank needs an even row count, got {}",
                self.n_out_rows
            )));
        }
        if self.n_inp > self.comb.n_channels() {
            return Err(Error::InvalidParameter(format!(
                "tile uses {} channels but the comb provides {}",
                self.n_inp,
                self.comb.n_channels()
            )));
        }
        if !(self.i_unit > S::zero()) {
            return Err(Error::InvalidParameter("i_unit must be > 0".into()));
        }
        self.mrm.validate()
    }

    /// Ring parked on channel `c`.
    pub fn ring(&self, c: usize) -> MrmParams<S> {
        MrmParams {
            f_reso: self.comb.center(c),
            ..self.mrm
        }
    }
}

/// Realized resonance shift `dlambda_max * sigmoid(w)` (pm).
pub fn map_weight_to_shift<S: Scalar>(w_raw: S, dlambda_max_pm: S) -> S {
    dlambda_max_pm * sigmoid(w_raw)
}

/// Raw trainable weight-bank values, row-major `[n_out_rows x n_inp]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightBank<S> {
    pub n_rows: usize,
    pub n_cols: usize,
    pub w_raw: Vec<S>,
}

impl<S: Scalar> WeightBank<S> {
    pub fn new(n_rows: usize, n_cols: usize, w_raw: Vec<S>) -> Result<Self> {
        if w_raw.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch {
                what: "weight bank entries",
                expected: n_rows * n_cols,
                got: w_raw.len(),
            });
        }
        Ok(Self { n_rows, n_cols, w_raw })
    }

    pub fn filled(n_rows: usize, n_cols: usize, value: S) -> Self {
        Self {
            n_rows,
            n_cols,
            w_raw: vec![value; n_rows * n_cols],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> S {
        self.w_raw[r * self.n_cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: S) {
        self.w_raw[r * self.n_cols + c] = v;
    }

    /// Rows 1, 3, 5, ... (1-indexed) are excitatory.
    pub fn is_excitatory(row: usize) -> bool {
        row.is_multiple_of(2)
    }
}

/// Precomputed neural-stage responses for binary spikes, plus the continuous
/// form used when spike values are fractional.
#[derive(Debug, Clone)]
pub struct NeuralStage<S> {
    n: usize,
    notches: Vec<Notch<S>>,
    centers: Vec<S>,
    /// Spike shift (Hz).
    shift: S,
    /// Row-major `[k][j]`: ring k at rest / spiking, evaluated at channel j.
    t_rest: Vec<S>,
    t_spike: Vec<S>,
    rest_product: Vec<S>,
}

impl<S: Scalar> NeuralStage<S> {
    pub fn new(cfg: &OpTileConfig<S>) -> Self {
        let n = cfg.n_inp;
        let notches: Vec<_> = (0..n).map(|k| cfg.ring(k).notch()).collect();
        let centers: Vec<_> = (0..n).map(|k| cfg.comb.center(k)).collect();
        let shift = pm_to_hz(cfg.dlambda_neural_pm);
        let mut t_rest = vec![S::zero(); n * n];
        let mut t_spike = vec![S::zero(); n * n];
        for k in 0..n {
            for j in 0..n {
                let d = centers[k] - centers[j];
                t_rest[k * n + j] = notches[k].transmission(d);
                t_spike[k * n + j] = notches[k].transmission(d + shift);
            }
        }
        let rest_product = (0..n)
            .map(|j| (0..n).fold(S::one(), |acc, k| acc * t_rest[k * n + j]))
            .collect();
        Self {
            n,
            notches,
            centers,
            shift,
            t_rest,
            t_spike,
            rest_product,
        }
    }

    pub fn n_inp(&self) -> usize {
        self.n
    }

    /// Transmission of ring `k` at channel `j` when driven with spike value `s`.
    #[inline]
    pub fn ring_transmission(&self, k: usize, j: usize, s: S) -> S {
        if s == S::zero() {
            self.t_rest[k * self.n + j]
        } else if s == S::one() {
            self.t_spike[k * self.n + j]
        } else {
            self.notches[k].transmission(self.centers[k] - self.centers[j] + s * self.shift)
        }
    }

    /// d(ring transmission)/d(spike value).
    #[inline]
    pub fn ring_derivative(&self, k: usize, j: usize, s: S) -> S {
        self.notches[k].d_transmission(self.centers[k] - self.centers[j] + s * self.shift) * self.shift
    }

    /// Per-channel transmission of the whole neural bus.
    pub fn transmission(&self, spikes: &[S], out: &mut [S]) {
        out.copy_from_slice(&self.rest_product);
        for (k, &s) in spikes.iter().enumerate() {
            if s != S::zero() {
                for (j, o) in out.iter_mut().enumerate() {
                    *o *= self.ring_transmission(k, j, s) / self.t_rest[k * self.n + j];
                }
            }
        }
    }

    /// Accumulates d(loss)/d(spike_k) given d(loss)/d(T_neural[j]).
    pub fn backward(&self, spikes: &[S], t_neural: &[S], g_t_neural: &[S], g_spikes: &mut [S]) {
        for (k, &s) in spikes.iter().enumerate() {
            let mut acc = S::zero();
            for j in 0..self.n {
                let tk = self.ring_transmission(k, j, s);
                acc += g_t_neural[j] * t_neural[j] * self.ring_derivative(k, j, s) / tk;
            }
            g_spikes[k] += acc;
        }
    }
}

/// Per-channel transmission of the neural MRM bus for a spike vector.
pub fn neural_stage_transmission<S: Scalar>(spikes: &[S], cfg: &OpTileConfig<S>) -> Result<Vec<S>> {
    check_len("spike vector", cfg.n_inp, spikes.len())?;
    let stage = NeuralStage::new(cfg);
    let mut out = vec![S::zero(); cfg.n_inp];
    stage.transmission(spikes, &mut out);
    Ok(out)
}

/// Transmission of every weight-bank row at every channel, row-major `[r][j]`.
#[derive(Debug, Clone)]
pub struct RowTransmissions<S> {
    pub n_rows: usize,
    pub n_inp: usize,
    pub t_row: Vec<S>,
}

impl<S: Scalar> RowTransmissions<S> {
    pub fn new(cfg: &OpTileConfig<S>, w_raw: &[S]) -> Self {
        let (n_rows, n) = (cfg.n_out_rows, cfg.n_inp);
        let mut t_row = vec![S::one(); n_rows * n];
        let notches: Vec<_> = (0..n).map(|c| cfg.ring(c).notch()).collect();
        let centers = cfg.comb.centers();
        for r in 0..n_rows {
            let row = &mut t_row[r * n..(r + 1) * n];
            for c in 0..n {
                let shift = pm_to_hz(map_weight_to_shift(w_raw[r * n + c], cfg.dlambda_max_pm));
                for (j, t) in row.iter_mut().enumerate() {
                    *t *= notches[c].transmission(centers[c] + shift - centers[j]);
                }
            }
        }
        Self {
            n_rows,
            n_inp: n,
            t_row,
        }
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.t_row[r * self.n_inp..(r + 1) * self.n_inp]
    }

    /// Chains d(loss)/d(T_row[r][j]) (row-major) into d(loss)/d(w_raw[r][c]).
    pub fn weight_gradient(&self, cfg: &OpTileConfig<S>, w_raw: &[S], g_row: &[S], g_w: &mut [S]) {
        let n = self.n_inp;
        let notches: Vec<_> = (0..n).map(|c| cfg.ring(c).notch()).collect();
        let centers = cfg.comb.centers();
        let scale = hz_per_pm::<S>() * cfg.dlambda_max_pm;
        for r in 0..self.n_rows {
            for c in 0..n {
                let w = w_raw[r * n + c];
                let sg = sigmoid(w);
                let shift = pm_to_hz(cfg.dlambda_max_pm * sg);
                let dshift_dw = scale * sg * (S::one() - sg);
                let mut acc = S::zero();
                for j in 0..n {
                    let d = centers[c] + shift - centers[j];
                    let t = notches[c].transmission(d);
                    acc += g_row[r * n + j] * self.t_row[r * n + j] * notches[c].d_transmission(d) / t;
                }
                g_w[r * n + c] += acc * dshift_dw;
            }
        }
    }
}

/// Per-channel transmission of a single weight-bank row.
pub fn weight_row_transmission<S: Scalar>(bank: &WeightBank<S>, row: usize, cfg: &OpTileConfig<S>) -> Result<Vec<S>> {
    check_bank(bank, cfg)?;
    if row >= cfg.n_out_rows {
        return Err(Error::InvalidParameter(format!("row {row} out of range")));
    }
    let n = cfg.n_inp;
    let one_row = RowTransmissions::new(
        &OpTileConfig {
            n_out_rows: 1,
            ..cfg.clone()
        },
        &bank.w_raw[row * n..(row + 1) * n],
    );
    Ok(one_row.t_row)
}

/// Evaluation flags for [`tile_forward`].
#[derive(Debug, Clone, Copy, Default)]
pub struct TileFlags {
    pub noise: bool,
    /// Dropout probability on the per-neuron drive; 0 disables it.
    pub dropout_p: f64,
    /// Record per-channel powers at each stage.
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerTraceRow {
    pub channel: usize,
    pub stage: String,
    pub watts: f64,
}

#[derive(Debug, Clone)]
pub struct TileOutput<S> {
    /// Balanced photocurrent per neuron (A).
    pub bpd_currents: Vec<S>,
    /// Drive delivered to each neuron: `gain * I / i_unit`, after dropout.
    pub drive: Vec<S>,
    pub per_channel_powers_at_pd: Option<Vec<PowerTraceRow>>,
}

/// Fast single-timestep evaluation shared by [`tile_forward`] and the trainer.
/// Fills `t_neural`, `p_bus` (per channel, after the splitter) and `row_power`.
#[allow(clippy::too_many_arguments)]
#[inline]
pub(crate) fn tile_powers<S: Scalar>(
    stage: &NeuralStage<S>,
    rows: &RowTransmissions<S>,
    source_w: &[S],
    split: S,
    spikes: &[S],
    t_neural: &mut [S],
    p_bus: &mut [S],
    row_power: &mut [S],
) {
    stage.transmission(spikes, t_neural);
    for j in 0..p_bus.len() {
        p_bus[j] = source_w[j] * t_neural[j] * split;
    }
    for (r, out) in row_power.iter_mut().enumerate() {
        *out = rows.row(r).iter().zip(p_bus.iter()).map(|(&t, &p)| t * p).sum();
    }
}

/// One timestep of a tile: spikes in, per-neuron BPD currents and drives out.
#[allow(clippy::too_many_arguments)]
pub fn tile_forward<S: Scalar, R: Rng + ?Sized>(
    spikes_in: &[S],
    bank: &WeightBank<S>,
    gains: &[S],
    cfg: &OpTileConfig<S>,
    pd: &PdParams<S>,
    rng: &mut R,
    flags: TileFlags,
) -> Result<TileOutput<S>> {
    cfg.validate()?;
    check_len("spike vector", cfg.n_inp, spikes_in.len())?;
    check_len("gain vector", cfg.n_neurons(), gains.len())?;
    check_bank(bank, cfg)?;
    let n = cfg.n_inp;
    let stage = NeuralStage::new(cfg);
    let rows = RowTransmissions::new(cfg, &bank.w_raw);
    let source = cfg.comb.peak_powers_w()[..n].to_vec();
    let split = S::one() / S::of(cfg.n_out_rows as f64);
    let mut t_neural = vec![S::zero(); n];
    let mut p_bus = vec![S::zero(); n];
    let mut row_power = vec![S::zero(); cfg.n_out_rows];
    tile_powers(
        &stage,
        &rows,
        &source,
        split,
        spikes_in,
        &mut t_neural,
        &mut p_bus,
        &mut row_power,
    );

    let currents: Vec<S> = row_power
        .iter()
        .map(|&p| crate::photonic::pd_detect(p, pd, rng, flags.noise))
        .collect();
    let bpd_currents: Vec<S> = (0..cfg.n_neurons())
        .map(|m| currents[2 * m] - currents[2 * m + 1])
        .collect();
    let keep = S::of(1.0 - flags.dropout_p);
    let drive = bpd_currents
        .iter()
        .zip(gains)
        .map(|(&i, &g)| {
            let d = g * i / cfg.i_unit;
            if flags.dropout_p > 0.0 {
                if rng.random::<f64>() < flags.dropout_p {
                    S::zero()
                } else {
                    d / keep
                }
            } else {
                d
            }
        })
        .collect();

    let per_channel_powers_at_pd = flags.trace.then(|| {
        let mut trace = Vec::new();
        let mut push = |channel, stage: String, w: S| {
            trace.push(PowerTraceRow {
                channel,
                stage,
                watts: w.as_f64(),
            })
        };
        for j in 0..n {
            push(j, "source".into(), source[j]);
            push(j, "after_neural".into(), source[j] * t_neural[j]);
            push(j, "after_split".into(), p_bus[j]);
            for r in 0..cfg.n_out_rows {
                push(j, format!("row{r}"), p_bus[j] * rows.row(r)[j]);
            }
        }
        trace
    });

    Ok(TileOutput {
        bpd_currents,
        drive,
        per_channel_powers_at_pd,
    })
}

/// Writes a `channel,stage,watts` CSV.
pub fn write_power_trace_csv<W: Write>(rows: &[PowerTraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<power trace>", e))?;
    Ok(())
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { what, expected, got });
    }
    Ok(())
}

fn check_bank<S: Scalar>(bank: &WeightBank<S>, cfg: &OpTileConfig<S>) -> Result<()> {
    check_len("weight bank rows", cfg.n_out_rows, bank.n_rows)?;
    check_len("weight bank columns", cfg.n_inp, bank.n_cols)
}
