//! Closed-form power, frequency and energy budgets of an Op-Tile.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::dbm_to_watt;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetInputs {
    pub n_inp: usize,
    pub n_out: usize,
    /// Per-MRM insertion loss (dB).
    pub il_db: f64,
    /// Minimum detectable power at the photodetector (dBm).
    pub pd_floor_dbm: f64,
    /// Required power resolution at the detector (bits).
    pub resolution_bits: u32,
}

impl BudgetInputs {
    pub fn validate(&self) -> Result<()> {
        if self.n_inp == 0 || self.n_out == 0 {
            return Err(Error::InvalidParameter(format!(
                "n_inp and n_out must be >= 1, got {} and {}",
                self.n_inp, self.n_out
            )));
        }
        if !(self.il_db >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "il_db must be >= 0, got {}",
                self.il_db
            )));
        }
        if !self.pd_floor_dbm.is_finite() {
            return Err(Error::InvalidParameter("pd_floor_dbm must be finite".into()));
        }
        Ok(())
    }
}

/// Loss of one channel crossing `n_inp` neural MRMs, a lossless `n_out`-way
/// split and `n_inp` weighting MRMs: `2 n_inp IL + 10 log10(n_out)`.
pub fn path_loss_db(n_inp: usize, n_out: usize, il_db: f64) -> f64 {
    2.0 * n_inp as f64 * il_db + 10.0 * (n_out as f64).log10()
}

/// Dynamic range needed to resolve `bits` power levels, `10 log10(2^bits)`.
pub fn resolution_margin_db(bits: u32) -> f64 {
    10.0 * (bits as f64) * 2f64.log10()
}

/// Peak channel power the source must supply so the detector sees the floor
/// plus the resolution margin.
pub fn min_source_power_dbm(b: &BudgetInputs) -> f64 {
    b.pd_floor_dbm + resolution_margin_db(b.resolution_bits) + path_loss_db(b.n_inp, b.n_out, b.il_db)
}

/// Largest square tile `N_T` whose requirement stays within `p_source_dbm`
/// (0 when even a 1x1 tile does not fit).
pub fn power_limited_tile_size(il_db: f64, pd_floor_dbm: f64, resolution_bits: u32, p_source_dbm: f64) -> usize {
    let need = |n: usize| {
        min_source_power_dbm(&BudgetInputs {
            n_inp: n,
            n_out: n,
            il_db,
            pd_floor_dbm,
            resolution_bits,
        })
    };
    let mut n = 0;
    // monotone in n; the bound only guards against il_db = 0 with a huge budget
    while n < 1 << 20 && need(n + 1) <= p_source_dbm {
        n += 1;
    }
    n
}

/// Channels that fit in one free spectral range, `floor(fsr / spacing)`.
pub fn fsr_channel_limit(fsr_ghz: f64, delta_omega_ghz: f64) -> Result<usize> {
    if !(fsr_ghz > 0.0 && delta_omega_ghz > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "FSR and spacing must be > 0, got {fsr_ghz} and {delta_omega_ghz} GHz"
        )));
    }
    Ok((fsr_ghz / delta_omega_ghz).floor() as usize)
}

/// Electrical plus optical power divided by the spike rate (J per spike).
pub fn energy_per_spike(p_e_w: f64, p_lambda_dbm: f64, rate_spikes_per_s: f64) -> Result<f64> {
    if !(rate_spikes_per_s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "spike rate must be > 0, got {rate_spikes_per_s}"
        )));
    }
    Ok((p_e_w + dbm_to_watt(p_lambda_dbm)) / rate_spikes_per_s)
}

/// Power reaching the detectors of a tile fed with `source_dbm`.
pub fn pd_power_dbm(source_dbm: f64, n_inp: usize, n_out: usize, il_db: f64) -> f64 {
    source_dbm - path_loss_db(n_inp, n_out, il_db)
}

/// Source power for a link of `n_mrms` fully transmitting rings that must
/// deliver `target_pd_power_dbm` at the detector.
pub fn minimal_interlink_power(target_pd_power_dbm: f64, n_mrms: usize, il_db: f64) -> f64 {
    target_pd_power_dbm + n_mrms as f64 * il_db
}
