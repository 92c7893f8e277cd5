//! Dither lock-in loop that keeps a ring on its channel under resonance drift.

use serde::{Deserialize, Serialize};

use sephia_core::photonic::MrmParams;
use sephia_core::units::hz_to_pm;
use sephia_core::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasLoop<S> {
    /// Bias dither applied alternately above and below the operating point (pm).
    pub dither_pm: S,
    /// Fraction of the estimated detuning corrected per control period.
    pub gain: S,
    /// Control period (s); one drift sample per period.
    pub period_s: S,
}

impl<S: Scalar> BiasLoop<S> {
    pub fn validate(&self) -> Result<()> {
        if !(self.dither_pm > S::zero() && self.period_s > S::zero()) {
            return Err(Error::InvalidParameter("dither and period must be > 0".into()));
        }
        if !(self.gain > S::zero() && self.gain <= S::one()) {
            return Err(Error::InvalidParameter(format!(
                "loop gain must be in (0, 1], got {}",
                self.gain
            )));
        }
        Ok(())
    }
}

impl Default for BiasLoop<f64> {
    fn default() -> Self {
        Self {
            dither_pm: 2.0,
            gain: 0.5,
            period_s: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LockReport<S> {
    /// Drift minus applied bias at the start of each period (pm).
    pub residual_pm: Vec<S>,
    pub bias_pm: Vec<S>,
    /// First period whose residual exceeded one linewidth.
    pub lock_lost_at: Option<usize>,
}

impl<S: Scalar> LockReport<S> {
    pub fn locked(&self) -> bool {
        self.lock_lost_at.is_none()
    }
}

/// Runs the loop over `drift_pm`. The monitor is a drop-port proxy, the
/// power the ring removes from the bus, `1 - T / T_IL`. Each period reads it
/// at `+dither` and `-dither`, estimates the detuning by inverting the
/// Lorentzian slope at the center, and moves the bias by `gain` times that.
pub fn bias_stabilize<S: Scalar>(drift_pm: &[S], ctl: &BiasLoop<S>, ring: &MrmParams<S>) -> Result<LockReport<S>> {
    ctl.validate()?;
    ring.validate()?;
    let gamma_pm = hz_to_pm(ring.linewidth()).abs();
    let hw = gamma_pm / S::of(2.0);
    let depth = S::one() - ring.t_er();
    let drop = |d: S| depth * hw * hw / (d * d + hw * hw);
    let a = ctl.dither_pm;
    let mut bias = S::zero();
    let mut report = LockReport {
        residual_pm: Vec::with_capacity(drift_pm.len()),
        bias_pm: Vec::with_capacity(drift_pm.len()),
        lock_lost_at: None,
    };
    for (k, &drift) in drift_pm.iter().enumerate() {
        let residual = drift - bias;
        report.residual_pm.push(residual);
        report.bias_pm.push(bias);
        if report.lock_lost_at.is_none() && residual.abs() > gamma_pm {
            report.lock_lost_at = Some(k);
        }
        let slope = (drop(residual + a) - drop(residual - a)) / (S::of(2.0) * a);
        let estimate = -slope * hw * hw / (S::of(2.0) * depth);
        bias += ctl.gain * estimate;
    }
    Ok(report)
}
