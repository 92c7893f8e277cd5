//! Adjacent-channel crosstalk figure of merit for on-off keyed neural MRMs.
//!
//! Two rings rest on channels 1 and 2. Both are shifted by the same spike
//! shift, and the figure of merit is the power left on the two channels after
//! passing both rings. At rest each channel sits in its own notch; for large
//! shifts each ring walks onto the neighbouring channel, so the merit peaks at
//! an interior shift, which is the best spike shift for that spacing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::photonic::{CombSource, MrmParams};
use crate::units::{hz_to_pm, pm_to_hz, wavelength_to_frequency, LAMBDA_REF};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FomMode {
    /// Transmission evaluated at the two channel centers (unit power each).
    #[default]
    ChannelCenters,
    /// Lorentzian comb lines integrated over a frequency grid.
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkSetup {
    pub q_factor: f64,
    pub delta_omega_hz: f64,
    pub er_db: f64,
    pub il_db: f64,
    pub mode: FomMode,
    /// Comb line FWHM for [`FomMode::Spectral`] (Hz).
    pub linewidth_fwhm_hz: f64,
    /// Integration step for [`FomMode::Spectral`] (Hz).
    pub grid_step_hz: f64,
    /// Half-span of the spectral grid beyond the channel pair, in spacings.
    pub grid_span: f64,
}

impl CrosstalkSetup {
    /// Channel-center evaluation with ER 15 dB and IL 0.2 dB.
    pub fn new(q_factor: f64, delta_omega_hz: f64) -> Self {
        Self {
            q_factor,
            delta_omega_hz,
            er_db: 15.0,
            il_db: 0.2,
            mode: FomMode::ChannelCenters,
            linewidth_fwhm_hz: 8e9,
            grid_step_hz: 0.5e9,
            grid_span: 3.0,
        }
    }

    fn ring(&self) -> Result<MrmParams<f64>> {
        if !(self.delta_omega_hz > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "spacing must be > 0, got {}",
                self.delta_omega_hz
            )));
        }
        MrmParams::new(
            wavelength_to_frequency(LAMBDA_REF),
            self.q_factor,
            self.er_db,
            self.il_db,
        )
    }

    /// Shift magnitude at which a ring reaches the neighbouring channel (pm).
    pub fn spacing_pm(&self) -> f64 {
        hz_to_pm(self.delta_omega_hz).abs()
    }
}

/// Figure of merit for a shift of `dlambda_pm` applied to both rings. The
/// merit is even in the shift, so the sign convention does not matter.
pub fn crosstalk_fom_with(setup: &CrosstalkSetup, dlambda_pm: f64) -> Result<f64> {
    let ring = setup.ring()?;
    let notch = ring.notch();
    let s = pm_to_hz(dlambda_pm).abs();
    let d = setup.delta_omega_hz;
    // ring k rests on f_k; the probe detuning is f_reso + shift - f
    let pass = |f_rel: f64| notch.transmission(s - f_rel) * notch.transmission(d + s - f_rel);
    match setup.mode {
        FomMode::ChannelCenters => Ok(pass(0.0) + pass(d)),
        FomMode::Spectral => {
            let f1 = ring.f_reso;
            let comb = CombSource::from_offsets(f1, d, 0.0, &[0.0, 0.0], setup.linewidth_fwhm_hz)?;
            let lo = -setup.grid_span * d;
            let n = ((2.0 * setup.grid_span + 1.0) * d / setup.grid_step_hz).round() as usize + 1;
            let rel: Vec<f64> = (0..n).map(|i| lo + i as f64 * setup.grid_step_hz).collect();
            let grid: Vec<f64> = rel.iter().map(|r| f1 + r).collect();
            let spectrum = comb.synthesize_spectrum(&grid)?;
            let total: f64 = spectrum.iter().sum();
            let through: f64 = spectrum.iter().zip(&rel).map(|(p, &r)| p * pass(r)).sum();
            Ok(2.0 * through / total)
        }
    }
}

/// Channel-center figure of merit with ER `er_db` and IL 0.2 dB.
pub fn crosstalk_fom(q_factor: f64, delta_omega_hz: f64, dlambda_pm: f64, er_db: f64) -> Result<f64> {
    crosstalk_fom_with(
        &CrosstalkSetup {
            er_db,
            ..CrosstalkSetup::new(q_factor, delta_omega_hz)
        },
        dlambda_pm,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FomScan {
    pub dlambda_pm: Vec<f64>,
    pub fom: Vec<f64>,
    /// Refined location of the maximum (pm, magnitude of the blue shift).
    pub argmax_pm: f64,
    pub max_fom: f64,
}

/// Samples the merit on `[0, spacing]` with `step_pm`, then refines the best
/// sample by golden-section search within one step on either side.
pub fn scan_fom(setup: &CrosstalkSetup, step_pm: f64) -> Result<FomScan> {
    if !(step_pm > 0.0) {
        return Err(Error::InvalidParameter(format!("scan step must be > 0, got {step_pm}")));
    }
    let end = setup.spacing_pm();
    let n = (end / step_pm).ceil() as usize + 1;
    let xs: Vec<f64> = (0..n).map(|i| (i as f64 * step_pm).min(end)).collect();
    let ys = xs
        .iter()
        .map(|&x| crosstalk_fom_with(setup, x))
        .collect::<Result<Vec<_>>>()?;
    let best = ys
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or(Error::InvalidGrid)?;
    let (mut a, mut b) = ((xs[best] - step_pm).max(0.0), (xs[best] + step_pm).min(end));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-4 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if crosstalk_fom_with(setup, c)? >= crosstalk_fom_with(setup, d)? {
            b = d;
        } else {
            a = c;
        }
    }
    let x = 0.5 * (a + b);
    let y = crosstalk_fom_with(setup, x)?;
    let (argmax_pm, max_fom) = if y >= ys[best] { (x, y) } else { (xs[best], ys[best]) };
    Ok(FomScan {
        dlambda_pm: xs,
        fom: ys,
        argmax_pm,
        max_fom,
    })
}

/// Indices of strict interior local maxima.
pub fn interior_maxima(values: &[f64]) -> Vec<usize> {
    values
        .windows(3)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0] && w[1] > w[2])
        .map(|(i, _)| i + 1)
        .collect()
}

/// True when the samples have exactly one interior local maximum and it is
/// the largest sample. The merit turns up again as the shift approaches a
/// full spacing (each ring reaches the neighbouring channel), so the check
/// concerns the interior peak, not monotone decay to the end of the range.
pub fn has_unique_interior_max(values: &[f64]) -> bool {
    let peaks = interior_maxima(values);
    peaks.len() == 1 && values.iter().all(|&v| v <= values[peaks[0]])
}

/// True when the samples rise to a single peak and then fall, ignoring
/// wiggles smaller than `tol`.
pub fn is_unimodal(values: &[f64], tol: f64) -> bool {
    let Some(peak) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
    else {
        return false;
    };
    values[..=peak].windows(2).all(|w| w[1] >= w[0] - tol) && values[peak..].windows(2).all(|w| w[1] <= w[0] + tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argmax(q: f64, d_ghz: f64) -> f64 {
        scan_fom(&CrosstalkSetup::new(q, d_ghz * 1e9), 0.5).unwrap().argmax_pm
    }

    #[test]
    fn rest_is_suppressed() {
        let s = CrosstalkSetup::new(7500.0, 63e9);
        let rest = crosstalk_fom_with(&s, 0.0).unwrap();
        let peak = scan_fom(&s, 0.5).unwrap();
        assert!(rest < 0.3 * peak.max_fom, "{rest} vs {}", peak.max_fom);
        assert!(peak.argmax_pm > 0.0 && peak.argmax_pm < s.spacing_pm());
    }

    #[test]
    fn optimum_at_63_ghz() {
        for q in [6000.0, 7500.0, 10_000.0] {
            let a = argmax(q, 63.0);
            assert!((a - 210.0).abs() <= 10.0, "Q {q}: {a} pm");
        }
    }

    #[test]
    fn optima_scale_with_spacing() {
        assert!((argmax(7500.0, 100.0) - 335.0).abs() <= 10.0);
        assert!((argmax(7500.0, 50.0) - 165.0).abs() <= 10.0);
    }

    #[test]
    fn optimum_moves_toward_center_spacing_ratio() {
        // the optimum sits near the same fraction of the spacing at every spacing
        let frac = |d: f64| argmax(7500.0, d) / CrosstalkSetup::new(7500.0, d * 1e9).spacing_pm();
        let (a, b, c) = (frac(100.0), frac(63.0), frac(50.0));
        assert!((a - b).abs() < 0.05 && (b - c).abs() < 0.05, "{a} {b} {c}");
    }

    #[test]
    fn single_interior_peak_for_high_q() {
        for q in [6000.0, 7500.0, 10_000.0, 20_000.0] {
            for d in [50e9, 63e9, 100e9] {
                let s = scan_fom(&CrosstalkSetup::new(q, d), 0.5).unwrap();
                assert!(has_unique_interior_max(&s.fom), "Q {q} spacing {d}");
            }
        }
    }

    #[test]
    fn even_in_shift() {
        let s = CrosstalkSetup::new(10_000.0, 100e9);
        let a = crosstalk_fom_with(&s, 200.0).unwrap();
        let b = crosstalk_fom_with(&s, -200.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn spectral_mode_matches_centers_for_narrow_lines() {
        let narrow = CrosstalkSetup {
            mode: FomMode::Spectral,
            linewidth_fwhm_hz: 0.2e9,
            grid_step_hz: 0.02e9,
            grid_span: 40.0,
            ..CrosstalkSetup::new(10_000.0, 100e9)
        };
        let centers = CrosstalkSetup::new(10_000.0, 100e9);
        for x in [0.0, 150.0, 335.0] {
            let a = crosstalk_fom_with(&narrow, x).unwrap();
            let b = crosstalk_fom_with(&centers, x).unwrap();
            // line tails leak past the notch, so the deep-notch point differs most
            assert!((a - b).abs() < 0.02, "{x}: {a} vs {b}");
        }
    }

    #[test]
    fn unimodality_helper() {
        assert!(is_unimodal(&[0.0, 1.0, 2.0, 1.0], 0.0));
        assert!(!is_unimodal(&[0.0, 2.0, 1.0, 2.0, 0.0], 0.0));
        assert!(!is_unimodal(&[], 0.0));
        assert_eq!(interior_maxima(&[0.0, 2.0, 1.0, 0.5, 3.0]), vec![1]);
        assert!(!has_unique_interior_max(&[0.0, 2.0, 1.0, 0.5, 3.0]));
        assert!(has_unique_interior_max(&[0.0, 2.0, 1.0, 0.5, 1.5]));
    }
}
