//! Physical constants (SI, CODATA 2018 exact values where defined).

/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Reported motional mass of the fundamental acoustic mode, kg.
///
/// Kept as a documented reference value: neither of the selectable
/// Gaussian-mode effective-mass conventions reproduces it from the
/// quoted waist and quartz density, so it is never computed, only
/// echoed for comparison.
pub const REFERENCE_MOTIONAL_MASS_KG: f64 = 7.5e-9;
