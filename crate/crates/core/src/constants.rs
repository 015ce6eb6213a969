//! CODATA values in SI units.

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Vacuum permittivity (F/m).
pub const EPSILON_0: f64 = 8.854_187_8188e-12;

/// Plasma frequency of gold used throughout the worked examples (rad/s).
pub const GOLD_PLASMA_FREQUENCY: f64 = 1.385e16;
