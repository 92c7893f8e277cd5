//! Adaptive exponential integrate-and-fire neuron, fixed-step RK4 with
//! bisection-localized spike events.

use serde::{Deserialize, Serialize};

use sephia_core::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdexParams<S> {
    /// Membrane capacitance (F).
    pub c_mem: S,
    /// Leak conductance (S).
    pub g_leak: S,
    /// Resting potential (V).
    pub e_l: S,
    /// Exponential threshold (V).
    pub v_t: S,
    /// Slope factor (V).
    pub delta_t: S,
    /// Subthreshold adaptation conductance (S).
    pub a: S,
    /// Spike-triggered adaptation increment (A).
    pub b: S,
    /// Adaptation time constant (s).
    pub tau_w: S,
    pub v_reset: S,
    /// Spike cutoff (V).
    pub v_peak: S,
    /// Adaptation capacitance (F), used only for energy accounting.
    pub c_adapt: S,
}

impl<S: Scalar> AdexParams<S> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c_mem", self.c_mem),
            ("g_leak", self.g_leak),
            ("tau_w", self.tau_w),
            ("delta_t", self.delta_t),
            ("c_adapt", self.c_adapt),
        ];
        for (name, v) in positive {
            if !(v > S::zero()) {
                return Err(Error::InvalidParameter(format!("adex.{name} must be > 0, got {v}")));
            }
        }
        if !(self.v_reset < self.v_t && self.v_t < self.v_peak) {
            return Err(Error::InvalidParameter(format!(
                "adex needs v_reset < v_t < v_peak, got {} / {} / {}",
                self.v_reset, self.v_t, self.v_peak
            )));
        }
        Ok(())
    }

    /// Membrane time constant `c_mem / g_leak`.
    pub fn tau_m(&self) -> S {
        self.c_mem / self.g_leak
    }

    /// Largest step accepted by [`adex_integrate`].
    pub fn max_dt(&self) -> S {
        self.tau_w.min(self.tau_m()) / S::of(50.0)
    }

    /// Exponential spike-initiation current `g_leak Δ_T exp((v - V_T)/Δ_T)`.
    pub fn i_spike(&self, v: S) -> S {
        self.g_leak * self.delta_t * ((v - self.v_t) / self.delta_t).exp()
    }

    pub fn i_leak(&self, v: S) -> S {
        self.g_leak * (v - self.e_l)
    }

    /// `(dv/dt, dw/dt)` at input current `i`.
    pub fn derivatives(&self, v: S, w: S, i: S) -> (S, S) {
        let dv = (i - self.i_leak(v) + self.i_spike(v) - w) / self.c_mem;
        let dw = (self.a * (v - self.e_l) - w) / self.tau_w;
        (dv, dw)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdexTrace<S> {
    pub dt: S,
    /// `v[k]`, `w[k]` at `t = k dt`, `k = 0..=n`.
    pub v: Vec<S>,
    pub w: Vec<S>,
    pub spikes: Vec<S>,
}

fn rk4<S: Scalar>(p: &AdexParams<S>, v: S, w: S, i: S, h: S) -> (S, S) {
    let two = S::of(2.0);
    let half = h / two;
    let (k1v, k1w) = p.derivatives(v, w, i);
    let (k2v, k2w) = p.derivatives(v + half * k1v, w + half * k1w, i);
    let (k3v, k3w) = p.derivatives(v + half * k2v, w + half * k2w, i);
    let (k4v, k4w) = p.derivatives(v + h * k3v, w + h * k3w, i);
    let six = S::of(6.0);
    (
        v + h / six * (k1v + two * k2v + two * k3v + k4v),
        w + h / six * (k1w + two * k2w + two * k3w + k4w),
    )
}

/// Integrates from rest (`v = E_L`, `w = 0`) to `t_end`. `i_in[k]` is held
/// over `[k dt, (k+1) dt)`; missing samples count as zero. A crossing of
/// `v_peak` is localized by bisection on the sub-step length, then `v` is
/// reset and `w` incremented by `b`; the rest of the step continues from there.
pub fn adex_integrate<S: Scalar>(p: &AdexParams<S>, i_in: &[S], dt: S, t_end: S) -> Result<AdexTrace<S>> {
    p.validate()?;
    if !(dt > S::zero()) || dt > p.max_dt() {
        return Err(Error::InvalidParameter(format!(
            "dt {dt} s outside (0, min(tau_w, c_mem/g_leak)/50 = {}]",
            p.max_dt()
        )));
    }
    let n = (t_end / dt).round().to_usize().unwrap_or(0);
    let mut v = p.e_l;
    let mut w = S::zero();
    let mut trace = AdexTrace {
        dt,
        v: Vec::with_capacity(n + 1),
        w: Vec::with_capacity(n + 1),
        spikes: Vec::new(),
    };
    trace.v.push(v);
    trace.w.push(w);
    let crossed = |x: S| !x.is_finite() || x >= p.v_peak;
    for k in 0..n {
        let i = i_in.get(k).copied().unwrap_or(S::zero());
        let mut t = S::of(k as f64) * dt;
        let mut left = dt;
        loop {
            let (v1, w1) = rk4(p, v, w, i, left);
            if !crossed(v1) {
                v = v1;
                w = w1;
                break;
            }
            let (mut lo, mut hi) = (S::zero(), left);
            for _ in 0..60 {
                let mid = S::of(0.5) * (lo + hi);
                if crossed(rk4(p, v, w, i, mid).0) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let (_, w_hit) = rk4(p, v, w, i, hi);
            if !w_hit.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite AdEx state at t = {t} s; reduce dt"
                )));
            }
            t += hi;
            trace.spikes.push(t);
            v = p.v_reset;
            w = w_hit + p.b;
            left -= hi;
            if left <= dt * S::of(1e-9) {
                break;
            }
        }
        if !(v.is_finite() && w.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite AdEx state at t = {t} s; reduce dt"
            )));
        }
        trace.v.push(v);
        trace.w.push(w);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix2, Vector2};

    pub(crate) fn base() -> AdexParams<f64> {
        AdexParams {
            c_mem: 5e-15,
            g_leak: 5e-6,
            e_l: -0.070,
            v_t: -0.050,
            delta_t: 0.002,
            a: 1e-6,
            b: 0.0,
            tau_w: 5e-9,
            v_reset: -0.058,
            v_peak: -0.040,
            c_adapt: 5e-15,
        }
    }

    #[test]
    fn rest_is_fixed_point() {
        let p = base();
        let tr = adex_integrate(&p, &[], 1e-12, 2e-9).unwrap();
        assert!(tr.spikes.is_empty());
        // the exponential term is ~e^-10 of the leak scale at rest
        let drift = tr.v.iter().map(|v| (v - p.e_l).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-6, "{drift}");
    }

    #[test]
    fn rejects_large_steps() {
        let p = base();
        assert!(adex_integrate(&p, &[], p.max_dt() * 1.01, 1e-9).is_err());
        let mut bad = p;
        bad.v_peak = bad.v_t;
        assert!(adex_integrate(&bad, &[], 1e-12, 1e-9).is_err());
    }

    #[test]
    fn spikes_reset_and_adapt() {
        let mut p = base();
        p.b = 1e-8;
        let i = vec![2e-7; 5000];
        let tr = adex_integrate(&p, &i, 1e-12, 5e-9).unwrap();
        assert!(tr.spikes.len() >= 2);
        assert!(tr.spikes.windows(2).all(|w| w[1] > w[0]));
        assert!(tr.v.iter().all(|&v| v < p.v_peak));
    }

    /// Linear (V, w) system with the exponential dropped, solved by
    /// eigen-decomposition; the simulation stays far below V_T so the
    /// exponential is below 1e-4 of the leak current.
    #[test]
    fn subthreshold_matches_linear_solution() {
        let mut p = base();
        p.v_t = 0.2;
        p.v_peak = 0.3;
        p.a = 2e-6;
        let i0 = 2e-8;
        let dt = 1e-12;
        let t_end = 6e-9;
        let n = (t_end / dt) as usize;
        let tr = adex_integrate(&p, &vec![i0; n], dt, t_end).unwrap();
        let m = Matrix2::new(-p.g_leak / p.c_mem, -1.0 / p.c_mem, p.a / p.tau_w, -1.0 / p.tau_w);
        let b = Vector2::new(i0 / p.c_mem, 0.0);
        let x_inf = -m.try_inverse().unwrap() * b;
        let eig = m.complex_eigenvalues();
        assert!(eig.iter().all(|l| l.re < 0.0));
        // x(t) = x_inf + exp(M t)(x0 - x_inf), exp via eigen-decomposition
        let x0 = Vector2::new(0.0, 0.0) - x_inf;
        let expm = |t: f64| {
            let (l1, l2) = (eig[0], eig[1]);
            let id = Matrix2::<f64>::identity().map(num_complex::Complex::from);
            let mc = m.map(num_complex::Complex::from);
            // Sylvester formula for distinct eigenvalues
            ((mc - id * l2) * (l1 * t).exp() - (mc - id * l1) * (l2 * t).exp()) / (l1 - l2)
        };
        for k in [500usize, 2000, 6000] {
            let t = k as f64 * dt;
            let e = expm(t);
            let v_lin = x_inf[0] + (e[(0, 0)] * x0[0] + e[(0, 1)] * x0[1]).re;
            assert_relative_eq!(tr.v[k] - p.e_l, v_lin, max_relative = 0.01);
        }
    }

    #[test]
    fn second_order_convergence_between_spikes() {
        let mut p = base();
        p.v_t = -0.045;
        p.v_peak = 0.0;
        let i0 = 8e-8;
        let t_end = 1e-9;
        let run = |dt: f64| {
            let n = (t_end / dt).round() as usize;
            *adex_integrate(&p, &vec![i0; n], dt, t_end).unwrap().v.last().unwrap()
        };
        let (a, b, c) = (run(4e-12), run(2e-12), run(1e-12));
        let order = ((a - b) / (b - c)).abs().log2();
        assert!(order >= 2.0, "observed order {order}");
    }

    #[test]
    fn spike_times_converge() {
        let mut p = base();
        p.b = 2e-8;
        let t_end = 4e-9;
        let run = |dt: f64| {
            let n = (t_end / dt).round() as usize;
            adex_integrate(&p, &vec![2e-7; n], dt, t_end).unwrap().spikes
        };
        let (a, b, c) = (run(4e-12), run(2e-12), run(1e-12));
        assert_eq!(a.len(), c.len());
        assert_eq!(b.len(), c.len());
        let e1 = (a[0] - c[0]).abs();
        let e2 = (b[0] - c[0]).abs();
        assert!(e2 <= e1 + 1e-18, "{e1} {e2}");
    }
}
