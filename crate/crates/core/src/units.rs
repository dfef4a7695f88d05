//! Unit conversions. Internal angular frequencies are rad/us; user-facing
//! numbers are plain MHz (ordinary frequency). 1 MHz corresponds to
//! 2*pi rad/us, so the two conversions below are exact inverses up to one ulp.

use std::f64::consts::TAU;

pub fn mhz_to_rad_per_us(f_mhz: f64) -> f64 {
    f_mhz * TAU
}

pub fn rad_per_us_to_mhz(w: f64) -> f64 {
    w / TAU
}

/// Optical wavevector magnitude in rad/um for a wavelength in nm. Multiplied
/// by a velocity in m/s (= um/us) this gives a Doppler shift in rad/us.
pub fn wavevector_rad_per_um(lambda_nm: f64) -> f64 {
    TAU * 1.0e3 / lambda_nm
}

/// dBm to linear milliwatts.
pub fn dbm_to_mw(p_dbm: f64) -> f64 {
    10f64.powf(p_dbm / 10.0)
}
