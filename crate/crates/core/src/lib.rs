//! Modelling and analysis toolkit for cryogenic fiber Fabry-Pérot microcavities.
//!
//! The crate covers the whole chain from cavity design to measured-trace
//! analysis:
//!
//! - [`cavity`]: two-layer (diamond membrane + air gap) resonance model, mode
//!   character, dispersion slope and mode volume.
//! - [`purcell`]: bare, vibration-averaged and maximum attainable Purcell
//!   factors, plus the named design presets.
//! - [`analysis`]: scan calibration, Lorentzian/Voigt fitting, transmission to
//!   displacement conversion, spectra, cycle-phase statistics, white-light
//!   length extraction and ODMR quantification.
//! - [`synth`]: seeded synthetic signals with known ground truth.
//!
//! Everything is SI internally. [`units`] parses the `25pm` / `20MHz/pm`
//! style quantities used in scenario files and on the command line.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cavity;
pub mod constants;
pub mod error;
pub mod fit;
pub mod io;
pub mod peaks;
pub mod purcell;
pub mod special;
pub mod synth;
pub mod units;

pub use analysis::{DisplacementTrace, LorentzianResonance, OdmrResult, Side, SpectrumResult, TransmissionTrace};
pub use cavity::{CavityGeometry, CavityMode, DispersionSlope, FrequencyBand, ModeCharacter, ModeVolume};
pub use error::{Error, Result};
pub use io::SampledCurve;
pub use purcell::{ModeParams, PurcellParams, PurcellResult};
