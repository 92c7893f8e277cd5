use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::units::db_loss_to_ratio;

/// Microring modulator described as an ideal Lorentzian notch filter at its through port.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MrmParams<S> {
    /// Rest resonance frequency (Hz).
    pub f_reso: S,
    pub q_factor: S,
    /// Extinction ratio (dB, > 0).
    pub er_db: S,
    /// Insertion loss (dB, >= 0).
    pub il_db: S,
}

impl<S: Scalar> MrmParams<S> {
    pub fn new(f_reso: S, q_factor: S, er_db: S, il_db: S) -> Result<Self> {
        let p = Self {
            f_reso,
            q_factor,
            er_db,
            il_db,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_reso > S::zero()) {
            return Err(Error::InvalidParameter(format!(
                "f_reso must be > 0, got {}",
                self.f_reso
            )));
        }
        if !(self.q_factor > S::zero()) {
            return Err(Error::InvalidParameter(format!("Q must be > 0, got {}", self.q_factor)));
        }
        if !(self.er_db > S::zero()) {
            return Err(Error::InvalidParameter(format!(
                "ER must be > 0 dB, got {}",
                self.er_db
            )));
        }
        if !(self.il_db >= S::zero()) {
            return Err(Error::InvalidParameter(format!(
                "IL must be >= 0 dB, got {}",
                self.il_db
            )));
        }
        Ok(())
    }

    /// Full width at half maximum of the notch (Hz).
    pub fn linewidth(&self) -> S {
        self.f_reso / self.q_factor
    }

    /// Through-port power at maximum extinction, `10^(-ER/10)`.
    pub fn t_er(&self) -> S {
        db_loss_to_ratio(self.er_db)
    }

    /// Off-resonance pass-through power, `10^(-IL/10)`.
    pub fn t_il(&self) -> S {
        db_loss_to_ratio(self.il_db)
    }

    pub fn notch(&self) -> Notch<S> {
        let hw = self.linewidth() / S::of(2.0);
        Notch {
            hw2: hw * hw,
            depth: S::one() - self.t_er(),
            t_il: self.t_il(),
        }
    }

    /// Power transmission at probe frequency `f` with the resonance moved by `shift` (Hz).
    pub fn through_transmission(&self, shift: S, f: S) -> S {
        self.notch().transmission(self.f_reso + shift - f)
    }
}

/// Precomputed notch shape; evaluates transmission as a function of the
/// detuning `f_resonance - f_probe`.
#[derive(Debug, Clone, Copy)]
pub struct Notch<S> {
    hw2: S,
    depth: S,
    t_il: S,
}

impl<S: Scalar> Notch<S> {
    #[inline]
    pub fn transmission(&self, detuning: S) -> S {
        let lorentz = self.hw2 / (detuning * detuning + self.hw2);
        (S::one() - lorentz * self.depth) * self.t_il
    }

    /// Derivative of [`Notch::transmission`] with respect to the detuning, which
    /// equals the derivative with respect to a resonance shift.
    #[inline]
    pub fn d_transmission(&self, detuning: S) -> S {
        let denom = detuning * detuning + self.hw2;
        S::of(2.0) * self.hw2 * detuning / (denom * denom) * self.depth * self.t_il
    }

    pub fn t_il(&self) -> S {
        self.t_il
    }

    /// Transmission at zero detuning, `T_ER * T_IL`.
    pub fn floor(&self) -> S {
        (S::one() - self.depth) * self.t_il
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{pm_to_hz, wavelength_to_frequency, LAMBDA_REF};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ring() -> MrmParams<f64> {
        MrmParams::new(wavelength_to_frequency(LAMBDA_REF), 10_000.0, 15.0, 0.2).unwrap()
    }

    #[test]
    fn reference_points() {
        let m = ring();
        let on = m.through_transmission(0.0, m.f_reso);
        assert_relative_eq!(on, 10f64.powf(-1.5) * 10f64.powf(-0.02), max_relative = 1e-12);
        assert_relative_eq!(on, 0.0302, max_relative = 2e-3);
        let far = m.through_transmission(0.0, m.f_reso + 1e15);
        assert_relative_eq!(far, 0.9550, max_relative = 1e-4);
        let half = m.through_transmission(0.0, m.f_reso + m.linewidth() / 2.0);
        // (1 - 0.5 * (1 - T_ER)) * T_IL
        let expected = (1.0 - 0.5 * (1.0 - 10f64.powf(-1.5))) * 10f64.powf(-0.02);
        assert_relative_eq!(half, expected, max_relative = 1e-12);
        assert_relative_eq!(half, 0.4926, max_relative = 1e-3);
    }

    #[test]
    fn rejects_invalid() {
        assert!(MrmParams::new(1.0, 0.0, 15.0, 0.2).is_err());
        assert!(MrmParams::new(1.0, 1e4, 0.0, 0.2).is_err());
        assert!(MrmParams::new(1.0, 1e4, 15.0, -0.1).is_err());
        let m = ring();
        assert!(m.linewidth() > 0.0);
        assert!(m.t_er() > 0.0 && m.t_er() < 1.0);
        assert!(m.t_il() > 0.0 && m.t_il() <= 1.0);
    }

    #[test]
    fn single_precision_agrees() {
        let m64 = ring();
        let m32 = MrmParams::<f32>::new(m64.f_reso as f32, 1e4, 15.0, 0.2).unwrap();
        // f32 cannot resolve tens of GHz on a 229 THz carrier exactly; compare via detuning.
        let n32 = m32.notch();
        let n64 = m64.notch();
        for d in [0.0, 5e9, 11.4e9, 40e9] {
            assert_relative_eq!(
                n32.transmission(d as f32) as f64,
                n64.transmission(d),
                max_relative = 1e-5
            );
        }
    }

    proptest! {
        #[test]
        fn bounded(shift in -2e11f64..2e11, df in -5e11f64..5e11) {
            let m = ring();
            let t = m.through_transmission(shift, m.f_reso + df);
            prop_assert!(t >= m.t_er() * m.t_il() - 1e-15);
            prop_assert!(t <= m.t_il() + 1e-15);
        }

        #[test]
        fn monotone_in_shift_magnitude(a in 0.0f64..1e11, b in 0.0f64..1e11) {
            prop_assume!((a - b).abs() > 1.0);
            let m = ring();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(m.through_transmission(lo, m.f_reso) < m.through_transmission(hi, m.f_reso));
            prop_assert!(m.through_transmission(-lo, m.f_reso) < m.through_transmission(-hi, m.f_reso));
        }
    }

    #[test]
    fn analytic_derivative_matches_finite_differences() {
        let m = ring();
        let n = m.notch();
        let mut pm = -500.0;
        while pm <= 0.0 {
            let shift = pm_to_hz(pm);
            let analytic = n.d_transmission(shift);
            let h = 1e3; // Hz, tiny against the 22.9 GHz linewidth
            let fd = (n.transmission(shift + h) - n.transmission(shift - h)) / (2.0 * h);
            if analytic.abs() > 1e-30 {
                assert!(
                    ((analytic - fd) / analytic).abs() < 1e-6,
                    "pm={pm} a={analytic} fd={fd}"
                );
            } else {
                assert!(fd.abs() < 1e-18);
            }
            pm += 7.5;
        }
    }
}
