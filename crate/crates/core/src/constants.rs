//! Physical constants (SI).

/// Speed of light in vacuum [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default refractive index of diamond (dispersionless).
pub const DIAMOND_INDEX: f64 = 2.41;

/// NV electron-spin gyromagnetic ratio, 2.8025 MHz/G, in Hz/T.
pub const NV_GYROMAGNETIC_RATIO: f64 = 2.8025e6 / 1.0e-4;

/// NV ground-state zero-field splitting [Hz].
pub const NV_ZERO_FIELD_SPLITTING: f64 = 2.87e9;

pub const PICOMETER: f64 = 1e-12;
pub const NANOMETER: f64 = 1e-9;
pub const MICROMETER: f64 = 1e-6;
pub const MHZ: f64 = 1e6;
pub const GHZ: f64 = 1e9;
pub const THZ: f64 = 1e12;

/// 1 MHz/pm expressed in Hz/m.
pub const MHZ_PER_PM: f64 = MHZ / PICOMETER;

/// Gauss in tesla.
pub const GAUSS: f64 = 1e-4;
