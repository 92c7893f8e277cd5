//! RC-limited MOSCAP drive and time-domain coupled-mode optics of the neural
//! ring modulator.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use sephia_core::photonic::MrmParams;
use sephia_core::units::pm_to_hz;
use sephia_core::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoscapMrmParams<S> {
    /// MOS capacitance, held constant over bias (F).
    pub c_mrm: S,
    /// Series resistance (Ohm).
    pub r_mrm: S,
    /// Resonance shift per volt of `v_dynamic` (pm/V).
    pub v_to_dlambda: S,
    pub ring: MrmParams<S>,
    /// Bus-to-cavity coupling, `sqrt(2 / tau_e)` (1/sqrt(s)).
    pub kappa: S,
}

impl<S: Scalar> MoscapMrmParams<S> {
    /// Linear voltage map calibrated so that `v_swing` moves the resonance by
    /// `dlambda_pm`; coupling derived from the ring's Q and ER.
    pub fn calibrated(ring: MrmParams<S>, c_mrm: S, r_mrm: S, dlambda_pm: S, v_swing: S) -> Result<Self> {
        ring.validate()?;
        if !(c_mrm > S::zero() && r_mrm > S::zero()) {
            return Err(Error::InvalidParameter(format!(
                "c_mrm and r_mrm must be > 0, got {c_mrm} and {r_mrm}"
            )));
        }
        if !(v_swing.abs() > S::zero()) {
            return Err(Error::InvalidParameter("spike voltage swing must be non-zero".into()));
        }
        let (_, inv_tau_e) = cavity_rates(&ring);
        Ok(Self {
            c_mrm,
            r_mrm,
            v_to_dlambda: dlambda_pm / v_swing,
            ring,
            kappa: (S::of(2.0) * inv_tau_e).sqrt(),
        })
    }

    pub fn rc(&self) -> S {
        self.r_mrm * self.c_mrm
    }

    /// Amplitude decay time `Q / (pi f)`.
    pub fn photon_lifetime(&self) -> S {
        S::one() / cavity_rates(&self.ring).0
    }

    /// Resonance frequency shift (Hz) at drive voltage `v`.
    pub fn shift_hz(&self, v: S) -> S {
        pm_to_hz(self.v_to_dlambda * v)
    }
}

/// `(1/tau, 1/tau_e)`: total amplitude decay rate `pi * linewidth` and the
/// external part chosen so the on-resonance power transmission is `T_ER`
/// (under-coupled, `sqrt(T_ER) = 1 - 2 tau / tau_e`).
pub fn cavity_rates<S: Scalar>(ring: &MrmParams<S>) -> (S, S) {
    let inv_tau = S::PI() * ring.linewidth();
    let r = ring.t_er().sqrt();
    (inv_tau, (S::one() - r) / S::of(2.0) * inv_tau)
}

/// First-order RC response, exact for a drive held constant over each step.
pub fn moscap_drive<S: Scalar>(v_spike: &[S], p: &MoscapMrmParams<S>, dt: S) -> Vec<S> {
    let alpha = S::one() - (-dt / p.rc()).exp();
    let mut out = Vec::with_capacity(v_spike.len());
    let Some(&first) = v_spike.first() else {
        return out;
    };
    let mut v = first;
    out.push(v);
    for &target in &v_spike[..v_spike.len() - 1] {
        v += (target - v) * alpha;
        out.push(v);
    }
    out
}

/// Through-port power per channel. Each channel's cavity field starts in its
/// steady state for `v_dynamic[0]`; the detuning is held over each step and
/// the field advanced by RK4. `input_power_w[j]` feeds `channel_freqs_hz[j]`.
pub fn cmt_ring_output<S: Scalar>(
    v_dynamic: &[S],
    p: &MoscapMrmParams<S>,
    input_power_w: &[S],
    channel_freqs_hz: &[S],
    dt: S,
) -> Result<Vec<Vec<S>>> {
    if input_power_w.len() != channel_freqs_hz.len() {
        return Err(Error::InvalidParameter(format!(
            "{} input powers for {} channels",
            input_power_w.len(),
            channel_freqs_hz.len()
        )));
    }
    let tau = p.photon_lifetime();
    if !(dt > S::zero()) || dt > tau / S::of(20.0) {
        return Err(Error::InvalidParameter(format!(
            "dt {dt} s outside (0, tau_ph/20 = {}]",
            tau / S::of(20.0)
        )));
    }
    let (inv_tau, _) = cavity_rates(&p.ring);
    let t_il = p.ring.t_il();
    let two_pi = S::TAU();
    let kappa = p.kappa;
    let mut out = Vec::with_capacity(channel_freqs_hz.len());
    for (&p_in, &f) in input_power_w.iter().zip(channel_freqs_hz) {
        let s_in = Complex::new(p_in.sqrt(), S::zero());
        let rate = |v: S| Complex::new(-inv_tau, two_pi * (p.ring.f_reso + p.shift_hz(v) - f));
        let through = |a: Complex<S>| (s_in - a * kappa).norm_sqr() * t_il;
        let Some(&v0) = v_dynamic.first() else {
            out.push(Vec::new());
            continue;
        };
        let mut a = -(s_in * kappa) / rate(v0);
        let mut trace = Vec::with_capacity(v_dynamic.len());
        trace.push(through(a));
        for &v in &v_dynamic[..v_dynamic.len() - 1] {
            let m = rate(v);
            let drive = s_in * kappa;
            let f = |a: Complex<S>| m * a + drive;
            let half = dt / S::of(2.0);
            let k1 = f(a);
            let k2 = f(a + k1 * half);
            let k3 = f(a + k2 * half);
            let k4 = f(a + k3 * dt);
            a += (k1 + k2 * S::of(2.0) + k3 * S::of(2.0) + k4) * (dt / S::of(6.0));
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::InvalidParameter("non-finite cavity field; reduce dt".into()));
            }
            trace.push(through(a));
        }
        out.push(trace);
    }
    Ok(out)
}
