//! Physical constants (CODATA 2018) and fixed material parameters.

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Vacuum permittivity ε₀, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;

/// Reduced Planck constant ħ, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Third-order susceptibility of fused silica, m²/V².
pub const CHI3_FUSED_SILICA: f64 = 2.0e-22;

/// First positive zero of J₁; the HE₁₂ cutoff V-number.
pub const J1_FIRST_ZERO: f64 = 3.831_705_970_207_512;
