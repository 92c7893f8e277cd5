use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::units::dbm_to_watt;

/// Width of the flat-top band the per-channel peak powers are drawn from (dB).
pub const COMB_BAND_DB: f64 = 2.0;

/// Multi-wavelength source: uniformly spaced Lorentzian lines with fixed peak powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombSource<S> {
    /// Frequency of channel 0 (Hz).
    pub f0: S,
    /// Channel spacing (Hz).
    pub delta_omega: S,
    /// Per-channel peak power (dBm).
    pub peak_power_dbm: Vec<S>,
    /// Line FWHM (Hz).
    pub linewidth_fwhm: S,
}

impl<S: Scalar> CombSource<S> {
    /// Builds a source whose channel `k` carries `p_max_dbm + offsets[k]`.
    pub fn from_offsets(f0: S, delta_omega: S, p_max_dbm: S, offsets_db: &[S], linewidth_fwhm: S) -> Result<Self> {
        if !(delta_omega > S::zero()) {
            return Err(Error::InvalidParameter("channel spacing must be > 0".into()));
        }
        for (k, &o) in offsets_db.iter().enumerate() {
            check_offset(k, o.as_f64())?;
        }
        Ok(Self {
            f0,
            delta_omega,
            peak_power_dbm: offsets_db.iter().map(|&o| p_max_dbm + o).collect(),
            linewidth_fwhm,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.peak_power_dbm.len()
    }

    pub fn center(&self, k: usize) -> S {
        self.f0 + S::of(k as f64) * self.delta_omega
    }

    pub fn centers(&self) -> Vec<S> {
        (0..self.n_channels()).map(|k| self.center(k)).collect()
    }

    pub fn peak_power_w(&self, k: usize) -> S {
        dbm_to_watt(self.peak_power_dbm[k])
    }

    pub fn peak_powers_w(&self) -> Vec<S> {
        (0..self.n_channels()).map(|k| self.peak_power_w(k)).collect()
    }

    /// Same offsets re-referenced to a new maximum power.
    pub fn with_max_power(&self, old_max_dbm: S, new_max_dbm: S) -> Self {
        let mut out = self.clone();
        for p in &mut out.peak_power_dbm {
            *p = *p - old_max_dbm + new_max_dbm;
        }
        out
    }

    /// Power per grid bin (W): each channel contributes a unit-area Lorentzian
    /// scaled by its peak power and multiplied by the local bin width, so a line
    /// sums over the grid to approximately its channel power.
    pub fn synthesize_spectrum(&self, grid: &[S]) -> Result<Vec<S>> {
        let n = grid.len();
        if n < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid);
        }
        let n_ch = self.n_channels();
        if n_ch > 0 && (grid[0] > self.center(0) || grid[n - 1] < self.center(n_ch - 1)) {
            return Err(Error::InvalidGrid);
        }
        let limit = self.linewidth_fwhm / S::of(4.0);
        let max_step = grid.windows(2).map(|w| w[1] - w[0]).fold(S::zero(), |a, b| a.max(b));
        if max_step > limit {
            return Err(Error::GridTooCoarse {
                step_hz: max_step.as_f64(),
                limit_hz: limit.as_f64(),
            });
        }
        let hw = self.linewidth_fwhm / S::of(2.0);
        let norm = hw / S::PI();
        let powers = self.peak_powers_w();
        let half = S::of(0.5);
        Ok((0..n)
            .map(|i| {
                let bin = match i {
                    0 => grid[1] - grid[0],
                    _ if i == n - 1 => grid[n - 1] - grid[n - 2],
                    _ => (grid[i + 1] - grid[i - 1]) * half,
                };
                (0..n_ch)
                    .map(|k| {
                        let d = grid[i] - self.center(k);
                        powers[k] * norm / (d * d + hw * hw) * bin
                    })
                    .sum()
            })
            .collect())
    }
}

fn check_offset(channel: usize, offset_db: f64) -> Result<()> {
    if !(-COMB_BAND_DB..=0.0).contains(&offset_db) {
        return Err(Error::CombOffsetOutOfRange { channel, offset_db });
    }
    Ok(())
}

/// One entry of the persisted comb power file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombOffset {
    pub channel_index: usize,
    pub offset_db: f64,
}

/// Draws per-channel offsets uniformly from the 2 dB band below the maximum.
pub fn generate_comb_offsets(n_channels: usize, seed: u64) -> Vec<CombOffset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_channels)
        .map(|channel_index| CombOffset {
            channel_index,
            offset_db: -rng.random::<f64>() * COMB_BAND_DB,
        })
        .collect()
}

pub fn save_comb_offsets(path: &Path, offsets: &[CombOffset]) -> Result<()> {
    let text = serde_json::to_string_pretty(offsets)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Loads the comb file and returns offsets ordered by channel index.
pub fn load_comb_offsets(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_comb_offsets(&text)
}

pub(crate) fn parse_comb_offsets(text: &str) -> Result<Vec<f64>> {
    let mut entries: Vec<CombOffset> = serde_json::from_str(text)?;
    entries.sort_by_key(|e| e.channel_index);
    for (k, e) in entries.iter().enumerate() {
        if e.channel_index != k {
            return Err(Error::InvalidParameter(format!(
                "comb file: channel indices must be 0..n without gaps, found {} at position {k}",
                e.channel_index
            )));
        }
        check_offset(k, e.offset_db)?;
    }
    Ok(entries.into_iter().map(|e| e.offset_db).collect())
}
