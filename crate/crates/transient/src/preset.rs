//! Named neuron presets and the full neuron-to-ring co-simulation.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use sephia_core::config::shifts_for_spacing;
use sephia_core::photonic::MrmParams;
use sephia_core::units::{dbm_to_watt, wavelength_to_frequency, LAMBDA_REF};
use sephia_core::{Error, Result};

use crate::adex::{adex_integrate, AdexParams, AdexTrace};
use crate::energy::{energy_account, EnergyReport};
use crate::moscap::{cmt_ring_output, moscap_drive, MoscapMrmParams};
use crate::regime::{classify_regime, mean_rate, Regime};

pub const PRESET_NAMES: [&str; 3] = ["tonic", "adapting", "bursting"];

/// Rectangular input current, on during `[t_on, t_off)`, optionally repeated
/// every `period_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPulse {
    pub amplitude_a: f64,
    pub t_on_s: f64,
    /// Stays on to the end when absent.
    #[serde(default)]
    pub t_off_s: Option<f64>,
    #[serde(default)]
    pub period_s: Option<f64>,
}

impl InputPulse {
    pub fn sample(&self, dt: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| {
                let mut t = k as f64 * dt;
                if let Some(period) = self.period_s.filter(|&p| p > 0.0 && t >= self.t_on_s) {
                    t = self.t_on_s + (t - self.t_on_s) % period;
                }
                let on = t >= self.t_on_s && self.t_off_s.is_none_or(|off| t < off);
                if on {
                    self.amplitude_a
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Trapezoidal buffer output launched at every spike.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpikeShape {
    pub amplitude_v: f64,
    /// Time at full amplitude (s).
    pub width_s: f64,
    /// Rise and fall time (s).
    pub edge_s: f64,
}

impl SpikeShape {
    /// Sum of pulses at `spikes`, clipped to the amplitude, sampled at `k dt`.
    pub fn waveform(&self, spikes: &[f64], dt: f64, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        let len = 2.0 * self.edge_s + self.width_s;
        for &ts in spikes {
            let k0 = (ts / dt).ceil() as usize;
            let k1 = (((ts + len) / dt).ceil() as usize).min(n);
            for (k, o) in out.iter_mut().enumerate().take(k1).skip(k0) {
                let x = k as f64 * dt - ts;
                let y = if x < self.edge_s {
                    x / self.edge_s
                } else if x < self.edge_s + self.width_s {
                    1.0
                } else {
                    (len - x) / self.edge_s
                };
                *o = (*o + y.clamp(0.0, 1.0) * self.amplitude_v).min(self.amplitude_v);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingSetup {
    pub c_mrm_f: f64,
    pub r_mrm_ohm: f64,
    pub delta_omega_ghz: f64,
    pub q_factor: f64,
    pub er_db: f64,
    pub il_db: f64,
    /// Per-channel input power (dBm).
    pub p_in_dbm: f64,
}

impl Default for RingSetup {
    fn default() -> Self {
        Self {
            c_mrm_f: 10e-15,
            r_mrm_ohm: 50.0,
            delta_omega_ghz: 100.0,
            q_factor: 10_000.0,
            er_db: 15.0,
            il_db: 0.2,
            p_in_dbm: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransientPreset {
    pub name: String,
    pub note: String,
    pub adex: AdexParams<f64>,
    pub input: InputPulse,
    pub spike: SpikeShape,
    #[serde(default)]
    pub ring: RingSetup,
    pub v_supply_v: f64,
    pub dt_s: f64,
    pub t_end_s: f64,
    pub expected: Regime,
}

impl TransientPreset {
    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s)?;
        p.adex.validate()?;
        Ok(p)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    /// One of [`PRESET_NAMES`], compiled into the library.
    pub fn builtin(name: &str) -> Result<Self> {
        let src = match name {
            "tonic" => include_str!("../presets/tonic.json"),
            "adapting" => include_str!("../presets/adapting.json"),
            "bursting" => include_str!("../presets/bursting.json"),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown preset '{name}', expected one of {}",
                    PRESET_NAMES.join(", ")
                )))
            }
        };
        Self::from_json(src)
    }

    /// Ring driven by the spike buffer. At rest it sits on its channel; a
    /// full spike moves it by the tabulated neural shift for the spacing.
    pub fn mrm(&self) -> Result<MoscapMrmParams<f64>> {
        let r = &self.ring;
        let (_, neural) = shifts_for_spacing(r.delta_omega_ghz).ok_or_else(|| {
            Error::InvalidParameter(format!(
                "no tabulated spike shift for a {} GHz spacing",
                r.delta_omega_ghz
            ))
        })?;
        let ring = MrmParams::new(wavelength_to_frequency(LAMBDA_REF), r.q_factor, r.er_db, r.il_db)?;
        MoscapMrmParams::calibrated(ring, r.c_mrm_f, r.r_mrm_ohm, neural, self.spike.amplitude_v)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TransientRun {
    pub preset: String,
    pub dt_s: f64,
    pub i_in: Vec<f64>,
    pub adex: AdexTrace<f64>,
    pub v_spike: Vec<f64>,
    pub v_dynamic: Vec<f64>,
    /// Optical frequency of each through-power trace (Hz).
    pub channel_freqs_hz: Vec<f64>,
    pub through_w: Vec<Vec<f64>>,
    pub regime: Regime,
    pub rate_hz: f64,
    pub energy: EnergyReport<f64>,
}

/// Neuron, buffer, RC drive and ring optics. The ring's own channel and the
/// neighbour its spike shift moves toward are both simulated.
pub fn run_preset(p: &TransientPreset) -> Result<TransientRun> {
    let n = (p.t_end_s / p.dt_s).round() as usize;
    let i_in = p.input.sample(p.dt_s, n + 1);
    let adex = adex_integrate(&p.adex, &i_in, p.dt_s, p.t_end_s)?;
    let v_spike = p.spike.waveform(&adex.spikes, p.dt_s, adex.v.len());
    let mrm = p.mrm()?;
    let v_dynamic = moscap_drive(&v_spike, &mrm, p.dt_s);
    let f0 = mrm.ring.f_reso;
    let toward = mrm.shift_hz(p.spike.amplitude_v).signum();
    let freqs = vec![f0, f0 + toward * p.ring.delta_omega_ghz * 1e9];
    let p_in = dbm_to_watt(p.ring.p_in_dbm);
    let through = cmt_ring_output(&v_dynamic, &mrm, &[p_in, p_in], &freqs, p.dt_s)?;
    let energy = energy_account(
        &adex.v,
        &adex.w,
        &v_spike,
        &p.adex,
        mrm.c_mrm,
        p.v_supply_v,
        p.dt_s,
        &adex.spikes,
    )?;
    Ok(TransientRun {
        preset: p.name.clone(),
        dt_s: p.dt_s,
        i_in,
        regime: classify_regime(&adex.spikes),
        rate_hz: mean_rate(&adex.spikes),
        adex,
        v_spike,
        v_dynamic,
        channel_freqs_hz: freqs,
        through_w: through,
        energy,
    })
}

impl TransientRun {
    /// Columns `t_s, i_in_a, v_mem_v, w_a, v_spike_v, v_dynamic_v` and one
    /// `p_ch{j}_w` per simulated channel.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::io(path, e);
        let file = std::fs::File::create(path).map_err(io)?;
        let mut w = std::io::BufWriter::new(file);
        let mut header = String::from("t_s,i_in_a,v_mem_v,w_a,v_spike_v,v_dynamic_v");
        for j in 0..self.through_w.len() {
            header.push_str(&format!(",p_ch{j}_w"));
        }
        writeln!(w, "{header}").map_err(io)?;
        for k in 0..self.adex.v.len() {
            let mut line = format!(
                "{:e},{:e},{:e},{:e},{:e},{:e}",
                k as f64 * self.dt_s,
                self.i_in[k],
                self.adex.v[k],
                self.adex.w[k],
                self.v_spike[k],
                self.v_dynamic[k]
            );
            for ch in &self.through_w {
                line.push_str(&format!(",{:e}", ch[k]));
            }
            writeln!(w, "{line}").map_err(io)?;
        }
        w.flush().map_err(io)
    }
}
