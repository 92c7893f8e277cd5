use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::units::{E_CHARGE, K_B};

/// Photodetector with thermal and shot noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdParams<S> {
    /// Responsivity (A/W).
    pub responsivity: S,
    /// Electrical bandwidth (Hz).
    pub f_cut: S,
    /// Temperature (K).
    pub temperature: S,
    /// Load resistance (Ohm).
    pub r_load: S,
    /// Dark current (A).
    pub i_dark: S,
}

impl<S: Scalar> PdParams<S> {
    /// Table values: 0.5 A/W, 2.5 GHz, 300 K, 50 Ohm, 1 nA.
    pub fn reference() -> Self {
        Self {
            responsivity: S::of(0.5),
            f_cut: S::of(2.5e9),
            temperature: S::of(300.0),
            r_load: S::of(50.0),
            i_dark: S::of(1e-9),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("responsivity", self.responsivity),
            ("f_cut", self.f_cut),
            ("temperature", self.temperature),
            ("r_load", self.r_load),
            ("i_dark", self.i_dark),
        ];
        for (name, v) in fields {
            if !(v > S::zero()) {
                return Err(Error::InvalidParameter(format!("PD {name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Johnson-Nyquist current noise variance `4 k_B T f_cut / R_load` (A^2).
    pub fn thermal_variance(&self) -> S {
        S::of(4.0 * K_B) * self.temperature * self.f_cut / self.r_load
    }

    /// Shot noise variance `2 e f_cut (I + I_dark)` (A^2).
    pub fn shot_variance(&self, i_signal: S) -> S {
        S::of(2.0 * E_CHARGE) * self.f_cut * (i_signal + self.i_dark)
    }

    pub fn noise_variance(&self, i_signal: S) -> S {
        self.thermal_variance() + self.shot_variance(i_signal)
    }

    /// Noise-equivalent power under dark conditions (W/sqrt(Hz)).
    pub fn nep(&self) -> S {
        self.noise_variance(S::zero()).sqrt() / (self.responsivity * self.f_cut.sqrt())
    }

    /// Optical power giving unit SNR over the full bandwidth (W).
    pub fn min_detectable_power(&self) -> S {
        self.nep() * self.f_cut.sqrt()
    }

    /// Noise-free photocurrent.
    #[inline]
    pub fn current(&self, power_w: S) -> S {
        self.responsivity * power_w
    }

    /// Adds one Gaussian sample whose variance is thermal + shot at `i_signal`.
    #[inline]
    pub fn add_noise<R: Rng + ?Sized>(&self, i_signal: S, rng: &mut R) -> S {
        let z: f64 = rng.sample(StandardNormal);
        i_signal + self.noise_variance(i_signal.max(S::zero())).sqrt() * S::of(z)
    }
}

/// Photocurrent for `power_w`; with noise enabled a single Gaussian sample is
/// added (treated as a constant by gradient computations).
pub fn pd_detect<S: Scalar, R: Rng + ?Sized>(power_w: S, pd: &PdParams<S>, rng: &mut R, noise_enabled: bool) -> S {
    let i = pd.current(power_w);
    if noise_enabled {
        pd.add_noise(i, rng)
    } else {
        i
    }
}
