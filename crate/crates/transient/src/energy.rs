//! Supply-side energy of the neuron and its ring-modulator driver.

use serde::{Deserialize, Serialize};

use sephia_core::{Error, Result, Scalar};

use crate::adex::AdexParams;

/// Energy drawn per current component (J).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown<S> {
    pub cap: S,
    pub leak: S,
    pub spike: S,
    pub adapt: S,
    pub buf: S,
}

impl<S: Scalar> EnergyBreakdown<S> {
    pub fn total(&self) -> S {
        self.cap + self.leak + self.spike + self.adapt + self.buf
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport<S> {
    /// Total energy over the trace (J).
    pub e_total: S,
    /// `None` when the neuron did not spike.
    pub e_per_spike: Option<S>,
    /// Leak power (W).
    pub p_static: S,
    /// Everything but the leak (W).
    pub p_dynamic: S,
    pub p_average: S,
    pub breakdown: EnergyBreakdown<S>,
    pub spike_count: usize,
    pub duration_s: S,
}

/// Integrates `v_supply * sum |I_k|` over the traces sampled at `dt`.
///
/// Currents: `I_cap = C_mem dV/dt`, `I_leak`, `I_spike` (the exponential
/// term), `I_adapt = C_adapt dV_w/dt` with the adaptation node voltage
/// `V_w = w / g_leak`, and `I_buf = C_MRM dV_spike/dt`. Steps that contain a
/// spike charge the membrane along `v[k] -> v_peak -> v_reset -> v[k+1]`
/// and the adaptation node along the jump of `b`.
#[allow(clippy::too_many_arguments)]
pub fn energy_account<S: Scalar>(
    v_mem: &[S],
    w: &[S],
    v_spike: &[S],
    p: &AdexParams<S>,
    c_mrm: S,
    v_supply: S,
    dt: S,
    spike_times: &[S],
) -> Result<EnergyReport<S>> {
    let n = v_mem.len();
    if w.len() != n || v_spike.len() != n {
        return Err(Error::InvalidParameter(format!(
            "trace lengths differ: v_mem {n}, w {}, v_spike {}",
            w.len(),
            v_spike.len()
        )));
    }
    if !(dt > S::zero() && v_supply >= S::zero() && c_mrm >= S::zero()) {
        return Err(Error::InvalidParameter(
            "dt must be > 0, v_supply and c_mrm >= 0".into(),
        ));
    }
    let mut per_step = vec![0usize; n.saturating_sub(1)];
    for &t in spike_times {
        let k = (t / dt).floor().to_usize().unwrap_or(usize::MAX);
        if let Some(c) = per_step.get_mut(k.min(n.saturating_sub(2))) {
            *c += 1;
        }
    }
    let mut e = EnergyBreakdown::default();
    let w_scale = p.c_adapt / p.g_leak;
    for k in 0..n.saturating_sub(1) {
        let s = S::of(per_step[k] as f64);
        let dv = if per_step[k] == 0 {
            (v_mem[k + 1] - v_mem[k]).abs()
        } else {
            let swing = p.v_peak - p.v_reset;
            (p.v_peak - v_mem[k]).abs() + swing * s + (v_mem[k + 1] - p.v_reset).abs() + swing * (s - S::one())
        };
        let dw = (w[k + 1] - w[k] - p.b * s).abs() + p.b.abs() * s;
        let vm = S::of(0.5) * (v_mem[k] + v_mem[k + 1]);
        e.cap += p.c_mem * dv;
        e.leak += p.i_leak(vm).abs() * dt;
        e.spike += p.i_spike(vm.min(p.v_peak)) * dt;
        e.adapt += w_scale * dw;
        e.buf += c_mrm * (v_spike[k + 1] - v_spike[k]).abs();
    }
    for x in [&mut e.cap, &mut e.leak, &mut e.spike, &mut e.adapt, &mut e.buf] {
        *x *= v_supply;
    }
    let duration = dt * S::of(n.saturating_sub(1) as f64);
    let total = e.total();
    let per_s = |x: S| if duration > S::zero() { x / duration } else { S::zero() };
    Ok(EnergyReport {
        e_total: total,
        e_per_spike: (!spike_times.is_empty()).then(|| total / S::of(spike_times.len() as f64)),
        p_static: per_s(e.leak),
        p_dynamic: per_s(total - e.leak),
        p_average: per_s(total),
        breakdown: e,
        spike_count: spike_times.len(),
        duration_s: duration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adex::adex_integrate;
    use approx::assert_relative_eq;

    fn params() -> AdexParams<f64> {
        AdexParams {
            c_mem: 5e-15,
            g_leak: 1e-5,
            e_l: -0.070,
            v_t: -0.050,
            delta_t: 0.002,
            a: 2e-6,
            b: 2e-8,
            tau_w: 1e-9,
            v_reset: -0.058,
            v_peak: -0.040,
            c_adapt: 5e-15,
        }
    }

    #[test]
    fn silent_neuron_at_rest() {
        let p = params();
        let v = vec![p.e_l; 100];
        let r = energy_account(&v, &[0.0; 100], &[0.0; 100], &p, 10e-15, 1.0, 1e-12, &[]).unwrap();
        assert_eq!(r.p_static, 0.0);
        assert_eq!(r.breakdown.cap + r.breakdown.adapt + r.breakdown.buf, 0.0);
        assert!(r.e_per_spike.is_none());
        // only the exponential tail, e^-10 of the leak scale
        assert!(r.p_dynamic < 1e-9);
    }

    #[test]
    fn breakdown_sums_and_buffer_is_linear() {
        let p = params();
        let dt = 0.5e-12;
        let t_end = 10e-9;
        let n = (t_end / dt) as usize;
        let tr = adex_integrate(&p, &vec![6e-7; n], dt, t_end).unwrap();
        assert!(tr.spikes.len() > 3);
        let vs: Vec<f64> = (0..=n).map(|k| if (k / 400) % 2 == 1 { 0.25 } else { 0.0 }).collect();
        let a = energy_account(&tr.v, &tr.w, &vs, &p, 10e-15, 1.0, dt, &tr.spikes).unwrap();
        let b = energy_account(&tr.v, &tr.w, &vs, &p, 20e-15, 1.0, dt, &tr.spikes).unwrap();
        assert_relative_eq!(a.breakdown.total(), a.e_total, max_relative = 1e-3);
        assert_relative_eq!(a.p_static + a.p_dynamic, a.p_average, max_relative = 1e-12);
        assert_eq!(b.breakdown.buf, 2.0 * a.breakdown.buf);
        assert_eq!(b.breakdown.cap, a.breakdown.cap);
        assert_relative_eq!(
            a.e_per_spike.unwrap() * tr.spikes.len() as f64,
            a.e_total,
            max_relative = 1e-12
        );
    }

    #[test]
    fn spike_steps_count_the_full_swing() {
        let p = params();
        // one step straddles a spike: up to the peak, reset, then on to v[1]
        let v = [p.v_reset + 0.01, p.v_reset + 0.002];
        let r = energy_account(&v, &[0.0, p.b], &[0.0, 0.0], &p, 0.0, 1.0, 1e-12, &[0.5e-12]).unwrap();
        let path = (p.v_peak - v[0]) + (p.v_peak - p.v_reset) + 0.002;
        assert_relative_eq!(r.breakdown.cap, p.c_mem * path, max_relative = 1e-12);
        assert_relative_eq!(r.breakdown.adapt, p.c_adapt / p.g_leak * p.b, max_relative = 1e-12);
    }

    #[test]
    fn rejects_mismatched_traces() {
        let p = params();
        assert!(energy_account(&[0.0; 3], &[0.0; 2], &[0.0; 3], &p, 1e-15, 1.0, 1e-12, &[]).is_err());
    }
}
