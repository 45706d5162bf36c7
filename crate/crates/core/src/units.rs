//! Physical constants and small unit helpers.
//!
//! Lengths inside the mode solver are in micrometres; everything that
//! crosses into SI physics formulas is converted at the call site.

use std::f64::consts::PI;

/// Speed of light in vacuum, m/s.
pub const C_LIGHT: f64 = 299_792_458.0;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Electron mass, kg.
pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;

/// Angular rate (rad/s) from an ordinary frequency in GHz.
pub fn ghz_to_angular(f_ghz: f64) -> f64 {
    2.0 * PI * f_ghz * 1e9
}

/// Ordinary frequency in GHz from an angular rate (rad/s).
pub fn angular_to_ghz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1e9)
}

/// Angular rate (rad/s) from an ordinary frequency in MHz.
pub fn mhz_to_angular(f_mhz: f64) -> f64 {
    2.0 * PI * f_mhz * 1e6
}

pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1e6)
}

/// Optical frequency in THz for a vacuum wavelength in nm.
pub fn wavelength_nm_to_thz(lambda_nm: f64) -> f64 {
    C_LIGHT / (lambda_nm * 1e-9) / 1e12
}

pub fn thz_to_wavelength_nm(f_thz: f64) -> f64 {
    C_LIGHT / (f_thz * 1e12) * 1e9
}

/// Energy in joules expressed as a temperature in microkelvin (E / k_B).
pub fn joule_to_microkelvin(e: f64) -> f64 {
    e / BOLTZMANN * 1e6
}

pub fn microkelvin_to_joule(t_uk: f64) -> f64 {
    t_uk * 1e-6 * BOLTZMANN
}
