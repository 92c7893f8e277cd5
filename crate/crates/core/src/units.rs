//! Physical constants and unit conversions.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Boltzmann constant (J/K).
pub const K_B: f64 = 1.380649e-23;
/// Elementary charge (C).
pub const E_CHARGE: f64 = 1.602176634e-19;
/// Speed of light in vacuum (m/s).
pub const C_LIGHT: f64 = 299_792_458.0;
/// Reference wavelength for all pm <-> Hz conversions (m).
pub const LAMBDA_REF: f64 = 1310e-9;

/// Optical frequency of a vacuum wavelength.
pub fn wavelength_to_frequency<S: Scalar>(lambda_m: S) -> S {
    S::of(C_LIGHT) / lambda_m
}

/// Converts a small wavelength shift into the equivalent frequency shift,
/// `df = -c * dlambda / lambda^2`. A blue shift (negative `dlambda_m`) gives a positive `df`.
pub fn wavelength_shift_to_frequency_shift<S: Scalar>(dlambda_m: S, lambda_ref_m: S) -> S {
    -S::of(C_LIGHT) * dlambda_m / (lambda_ref_m * lambda_ref_m)
}

/// Frequency shift (Hz) per picometre of wavelength shift at [`LAMBDA_REF`].
pub fn hz_per_pm<S: Scalar>() -> S {
    wavelength_shift_to_frequency_shift(S::of(1e-12), S::of(LAMBDA_REF))
}

/// Same as [`wavelength_shift_to_frequency_shift`] with the shift in pm and `lambda_ref` = 1310 nm.
pub fn pm_to_hz<S: Scalar>(dlambda_pm: S) -> S {
    dlambda_pm * hz_per_pm()
}

/// Inverse of [`pm_to_hz`].
pub fn hz_to_pm<S: Scalar>(df_hz: S) -> S {
    df_hz / hz_per_pm()
}

pub fn dbm_to_watt<S: Scalar>(p_dbm: S) -> S {
    S::of(1e-3) * S::of(10.0).powf(p_dbm / S::of(10.0))
}

/// Fails for non-positive power, whose dBm value is undefined.
pub fn watt_to_dbm<S: Scalar>(p_w: S) -> Result<S> {
    if !(p_w > S::zero()) {
        return Err(Error::NonPositivePower(p_w.as_f64()));
    }
    Ok(S::of(10.0) * (p_w / S::of(1e-3)).log10())
}

/// Power ratio of a loss/gain in dB (`10^(-db/10)` for a loss).
pub fn db_loss_to_ratio<S: Scalar>(loss_db: S) -> S {
    S::of(10.0).powf(-loss_db / S::of(10.0))
}
