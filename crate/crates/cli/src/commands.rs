use crate::config::{missing, Resolver};
use crate::error::for_param;
use crate::io::{load_curve, Table};
use clap::Args;
use fpcav_core::analysis::{
    amplitude_spectrum, calibrate_scan_axis, combine_scans, cycle_phase_rms, gaussianity_check,
    length_from_white_light, odmr_fit, transmission_to_displacement, voigt_scan_fit, ConversionOptions,
    DisplacementTrace, GaussianityOptions, LorentzianResonance, OdmrOptions, Side, SpectrumOptions, TransmissionTrace,
    VoigtOptions, WhiteLightOptions,
};
use fpcav_core::cavity::{
    diamond_slope, dispersion_slope, length_from_fsr, mode_volume, nearest_mode, resonance_frequencies, CavityGeometry,
    DispersionSlope, FrequencyBand,
};
use fpcav_core::constants::{DIAMOND_INDEX, GAUSS, MHZ, MHZ_PER_PM, MICROMETER, PICOMETER, SPEED_OF_LIGHT};
use fpcav_core::peaks::PeakOptions;
use fpcav_core::purcell::{design_curve, evaluate, max_purcell, ModeParams, Preset, PresetRegistry};
use fpcav_core::synth::{builtin_scenario, builtin_scenario_names, Scenario, ScenarioFile};
use fpcav_core::units::{format_si, Dimension};
use fpcav_core::{Error, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use std::path::{Path, PathBuf};

pub const PRESET_DIR_ENV: &str = "FPCAV_PRESET_DIR";

/// What a command produced.
pub struct Outcome {
    pub result: Value,
    pub table: Option<Table>,
    /// The curve data is the primary product and goes to stdout by default.
    pub data_to_stdout: bool,
}

impl Outcome {
    fn new(result: Value, table: Option<Table>) -> Self {
        Self {
            result,
            table,
            data_to_stdout: false,
        }
    }
}

pub trait Command: Serialize + DeserializeOwned {
    const NAME: &'static str;
    type Params;
    /// Fills every default and parses every quantity, without touching data.
    fn resolve(&mut self, r: &mut Resolver) -> Result<Self::Params>;
    fn execute(params: Self::Params) -> Result<Outcome>;
    /// Input files named by the parameters.
    fn inputs(&self) -> Vec<String> {
        Vec::new()
    }
}

fn side(text: &str) -> Result<Side> {
    match text {
        "left" => Ok(Side::Left),
        "right" => Ok(Side::Right),
        _ => Err(Error::Parse(format!(
            "side must be \"left\" or \"right\", got {text:?}"
        ))),
    }
}

fn geometry(
    r: &mut Resolver,
    diamond_thickness: &mut Option<String>,
    air_gap: &Option<String>,
    refractive_index: &mut Option<f64>,
) -> Result<CavityGeometry> {
    let td = r.quantity(diamond_thickness, "diamond_thickness", "0um", Dimension::Length)?;
    let ta = Resolver::required_quantity(air_gap, "air_gap", Dimension::Length)?;
    let n = r.value(refractive_index, "refractive_index", DIAMOND_INDEX);
    CavityGeometry::new(td, ta, n)
}

fn geometry_json(g: &CavityGeometry) -> Value {
    json!({
        "diamond_thickness_m": g.diamond_thickness,
        "air_gap_m": g.air_gap,
        "refractive_index": g.refractive_index,
        "optical_length_m": g.optical_length(),
    })
}

// ---------------------------------------------------------------- modes

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesArgs {
    /// Diamond membrane thickness, e.g. 0.8um [default: 0um]
    #[arg(long)]
    pub diamond_thickness: Option<String>,
    /// Air gap between membrane and fiber mirror, e.g. 5um
    #[arg(long, required = true)]
    pub air_gap: Option<String>,
    /// Membrane refractive index [default: 2.41]
    #[arg(long)]
    pub refractive_index: Option<f64>,
    /// Lower band edge [default: 600nm]
    #[arg(long)]
    pub wavelength_min: Option<String>,
    /// Upper band edge [default: 700nm]
    #[arg(long)]
    pub wavelength_max: Option<String>,
}

impl Command for ModesArgs {
    const NAME: &'static str = "modes";
    type Params = (CavityGeometry, FrequencyBand);

    fn resolve(&mut self, r: &mut Resolver) -> Result<Self::Params> {
        let g = geometry(
            r,
            &mut self.diamond_thickness,
            &self.air_gap,
            &mut self.refractive_index,
        )?;
        let lo = r.quantity(&mut self.wavelength_min, "wavelength_min", "600nm", Dimension::Length)?;
        let hi = r.quantity(&mut self.wavelength_max, "wavelength_max", "700nm", Dimension::Length)?;
        Ok((g, FrequencyBand::from_wavelengths(lo, hi)?))
    }

    fn execute((g, band): Self::Params) -> Result<Outcome> {
        let mut table = Table::new(&[
            "order",
            "frequency [Hz]",
            "wavelength [m]",
            "dispersion [MHz/pm]",
            "air_like",
        ]);
        let mut modes = Vec::new();
        for m in resonance_frequencies(&g, band)? {
            let s = dispersion_slope(&g, &m)?;
            let air = m.character == fpcav_core::ModeCharacter::AirLike;
            table.push(&[
                m.order as f64,
                m.frequency,
                m.wavelength(),
                s.mhz_per_pm(),
                f64::from(u8::from(air)),
            ]);
            modes.push(json!({
                "order": m.order,
                "frequency_hz": m.frequency,
                "wavelength_m": m.wavelength(),
                "character": m.character,
                "dispersion_mhz_per_pm": s.mhz_per_pm(),
            }));
        }
        Ok(Outcome::new(
            json!({ "geometry": geometry_json(&g), "modes": modes }),
            Some(table),
        ))
    }
}

// ---------------------------------------------------------------- dispersion

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionArgs {
    /// Diamond membrane thickness [default: 0um]
    #[arg(long)]
    pub diamond_thickness: Option<String>,
    #[arg(long, required = true)]
    pub air_gap: Option<String>,
    /// [default: 2.41]
    #[arg(long)]
    pub refractive_index: Option<f64>,
    /// Target wavelength; the nearest resonance is used
    #[arg(long, required = true)]
    pub wavelength: Option<String>,
    /// Mirror radius of curvature, enables the mode volume
    #[arg(long)]
    pub radius_of_curvature: Option<String>,
}

impl Command for DispersionArgs {
    const NAME: &'static str = "dispersion";
    type Params = (CavityGeometry, f64);

    fn resolve(&mut self, r: &mut Resolver) -> Result<Self::Params> {
        let mut g = geometry(
            r,
            &mut self.diamond_thickness,
            &self.air_gap,
            &mut self.refractive_index,
        )?;
        let lambda = Resolver::required_quantity(&self.wavelength, "wavelength", Dimension::Length)?;
        if let Some(roc) =
            Resolver::optional_quantity(&self.radius_of_curvature, "radius_of_curvature", Dimension::Length)?
        {
            g = g.with_radius_of_curvature(roc)?;
        }
        Ok((g, lambda))
    }

    fn execute((g, lambda): Self::Params) -> Result<Outcome> {
        let m = nearest_mode(&g, SPEED_OF_LIGHT / lambda)?;
        let s = dispersion_slope(&g, &m)?;
        let sd = diamond_slope(&g, &m)?;
        let volume = match g.radius_of_curvature {
            Some(_) => Some(mode_volume(&g, &m)?),
            None => None,
        };
        Ok(Outcome::new(
            json!({
                "geometry": geometry_json(&g),
                "mode": {
                    "order": m.order,
                    "frequency_hz": m.frequency,
                    "wavelength_m": m.wavelength(),
                    "character": m.character,
                },
                "dispersion_mhz_per_pm": s.mhz_per_pm(),
                "dispersion_hz_per_m": s.hz_per_m(),
                "diamond_slope_mhz_per_pm": sd.abs() / MHZ_PER_PM,
                "mode_volume": volume,
            }),
            None,
        ))
    }
}

// ---------------------------------------------------------------- purcell

fn find_preset(name: &str, dir: Option<&str>) -> Result<Preset> {
    if let Some(dir) = dir {
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("preset directory {dir}: {e}"))))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        for file in files {
            let registry = PresetRegistry::from_json(&std::fs::read_to_string(&file)?)
                .map_err(|e| for_param(&file.display().to_string(), e))?;
            if let Some(p) = registry.get(name) {
                return Ok(p.clone());
            }
        }
    }
    fpcav_core::purcell::preset(name).cloned()
}

/// Mode parameters from a preset, explicit values, or a preset with
/// overrides. Values taken from the preset are written back into the slots.
#[allow(clippy::too_many_arguments)]
fn mode_params(
    r: &mut Resolver,
    preset: &Option<String>,
    preset_dir: &mut Option<String>,
    wavelength: &mut Option<String>,
    refractive_index: &mut Option<f64>,
    mode_volume: &mut Option<f64>,
    dispersion: &mut Option<String>,
) -> Result<ModeParams> {
    if preset_dir.is_none() {
        if let Ok(dir) = std::env::var(PRESET_DIR_ENV) {
            r.value(preset_dir, "preset_dir", dir);
        }
    }
    if let Some(name) = preset {
        let p = find_preset(name, preset_dir.as_deref())?;
        r.value(wavelength, "wavelength", format_si(p.wavelength, Dimension::Length));
        r.value(refractive_index, "refractive_index", p.refractive_index);
        r.value(mode_volume, "mode_volume", p.volume_lambda3);
        r.value(dispersion, "dispersion", format!("{:e}MHz/pm", p.dispersion_mhz_per_pm));
    }
    let lambda = Resolver::required_quantity(wavelength, "wavelength", Dimension::Length)?;
    let n = refractive_index.ok_or_else(|| missing("refractive_index"))?;
    let v = mode_volume.ok_or_else(|| missing("mode_volume"))?;
    let s = Resolver::required_quantity(dispersion, "dispersion", Dimension::FrequencyPerLength)?;
    Ok(ModeParams {
        frequency: SPEED_OF_LIGHT / lambda,
        refractive_index: n,
        mode_volume: v * lambda.powi(3),
        dispersion_slope: -s.abs(),
    })
}

fn mode_json(m: &ModeParams) -> Value {
    json!({
        "wavelength_m": m.wavelength(),
        "frequency_hz": m.frequency,
        "refractive_index": m.refractive_index,
        "mode_volume_lambda3": m.mode_volume / m.wavelength().powi(3),
        "dispersion_mhz_per_pm": m.dispersion_slope.abs() / MHZ_PER_PM,
    })
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PurcellArgs {
    /// Named mode parameter set, e.g. tunable-air
    #[arg(long)]
    pub preset: Option<String>,
    /// Extra preset files [default: $FPCAV_PRESET_DIR]
    #[arg(long)]
    pub preset_dir: Option<String>,
    /// Vacuum wavelength of the mode
    #[arg(long)]
    pub wavelength: Option<String>,
    #[arg(long)]
    pub refractive_index: Option<f64>,
    /// Mode volume in units of λ³
    #[arg(long)]
    pub mode_volume: Option<f64>,
    /// |dν/dt_a|, e.g. 46MHz/pm
    #[arg(long)]
    pub dispersion: Option<String>,
    /// Cavity quality factor
    #[arg(long = "q", required = true)]
    pub quality_factor: Option<f64>,
    /// RMS cavity length fluctuation, e.g. 25pm
    #[arg(long, required = true)]
    pub sigma: Option<String>,
}

impl Command for PurcellArgs {
    const NAME: &'static str = "purcell";
    type Params = (ModeParams, f64, f64);

    fn resolve(&mut self, r: &mut Resolver) -> Result<Self::Params> {
        let m = mode_params(
            r,
            &self.preset,
            &mut self.preset_dir,
            &mut self.wavelength,
            &mut self.refractive_index,
            &mut self.mode_volume,
            &mut self.dispersion,
        )?;
        let q = self.quality_factor.ok_or_else(|| missing("quality_factor"))?;
        let sigma = Resolver::required_quantity(&self.sigma, "sigma", Dimension::Length)?;
        Ok((m, q, sigma))
    }

    fn execute((m, q, sigma): Self::Params) -> Result<Outcome> {
        let p = m.with_q(q, sigma);
        let res = evaluate(&p)?;
        Ok(Outcome::new(
            json!({
                "mode": mode_json(&m),
                "quality_factor": q,
                "sigma_m": sigma,
                "frequency_jitter_hz": p.frequency_jitter(),
                "purcell_bare": res.bare,
                "purcell_effective": res.effective,
                "max_purcell": res.bound,
            }),
            None,
        ))
    }
}

// ---------------------------------------------------------------- design-curve

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignCurveArgs {
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub preset_dir: Option<String>,
    #[arg(long)]
    pub wavelength: Option<String>,
    #[arg(long)]
    pub refractive_index: Option<f64>,
    /// Mode volume in units of λ³
    #[arg(long)]
    pub mode_volume: Option<f64>,
    #[arg(long)]
    pub dispersion: Option<String>,
    /// Report the Q-optimised Purcell factor at this σ
    #[arg(long)]
    pub sigma: Option<String>,
    /// [default: 1pm]
    #[arg(long)]
    pub sigma_min: Option<String>,
    /// [default: 1000pm]
    #[arg(long)]
    pub sigma_max: Option<String>,
    /// Log-spaced points [default: 61]
    #[arg(long)]
    pub points: Option<usize>,
}

impl Command for DesignCurveArgs {
    const NAME: &'static str = "design-curve";
    type Params = (ModeParams, Option<f64>, f64, f64, usize);

    fn resolve(&mut self, r: &mut Resolver) -> Result<Self::Params> {
        let m = mode_params(
            r,
            &self.preset,
            &mut self.preset_dir,
            &mut self.wavelength,
            &mut self.refractive_index,
            &mut self.mode_volume,
            &mut self.dispersion,
        )?;
        let sigma = Resolver::optional_quantity(&self.sigma, "sigma", Dimension::Length)?;
        let lo = r.quantity(&mut self.sigma_min, "sigma_min", "1pm", Dimension::Length)?;
        let hi = r.quantity(&mut self.sigma_max, "sigma_max", "1000pm", Dimension::Length)?;
        let points = r.value(&mut self.points, "points", 61);
        Ok((m, sigma, lo, hi, points))
    }

    fn execute((m, sigma, lo, hi, points): Self::Params) -> Result<Outcome> {
        let curve = design_curve(&m, lo, hi, points)?;
        let mut table = Table::new(&["sigma [m]", "max_purcell"]);
        for p in &curve {
            table.push(&[p.sigma, p.max_purcell]);
        }
        let at = sigma.map(|s| max_purcell(&m, s)).transpose()?;
        Ok(Outcome::new(
            json!({
                "mode": mode_json(&m),
                "sigma_m": sigma,
                "max_purcell": at,
                "curve": curve,
            }),
            Some(table),
        ))
    }
}

// ---------------------------------------------------------------- linewidth

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinewidthArgs {
    /// Scan CSV or JSON; `-` for stdin [default: -]
    pub input: Option<String>,
    /// Unit of the scan axis column, e.g. V or ms
    #[arg(long)]
    pub axis_unit: Option<String>,
    #[arg(long)]
    pub value_unit: Option<String>,
    /// Frequency offset between the two lasers, e.g. 60GHz
    #[arg(long, required = true)]
    pub laser_detuning: Option<String>,
    /// Dispersion slope; converts linewidths to κ_x
    #[arg(long)]
    pub dispersion: Option<String>,
    /// Detection smoothing window in samples [default: 0]
    #[arg(long)]
    pub smoothing: Option<usize>,
    /// Peak prominence in noise units [default: 5]
    #[arg(long)]
    pub noise_factor: Option<f64>,
}

pub struct LinewidthParams {
    input: String,
    axis_unit: Option<String>,
    value_unit: Option<String>,
    detuning: f64,
    slope: Option<DispersionSlope>,
    peaks: PeakOptions,
}

impl Command for LinewidthArgs {
    const NAME: &'static str = "linewidth";
    type Params = LinewidthParams;

    fn resolve(&mut self, r: &mut Resolver) -> Result<Self::Params> {
        let input = r.value(&mut self.input, "input", "-".into());
        let detuning = Resolver::required_quantity(&self.laser_detuning, "laser_detuning", Dimension::Frequency)?;
        let slope = Resolver::optional_quantity(&self.dispersion, "dispersion", Dimension::FrequencyPerLength)?
            .map(DispersionSlope);
        let d = PeakOptions::default();
        let peaks = PeakOptions {
            smoothing: r.value(&mut self.smoothing, "smoothing", d.smoothing),
            noise_factor: r.value(&mut self.noise_factor, "noise_factor", d.noise_factor),
            ..d
        };
        Ok(LinewidthParams {
            input,
            axis_unit: self.axis_unit.clone(),
            value_unit: self.value_unit.clone(),
            detuning,
            slope,
            peaks,
        })
    }

    fn execute(p: Self::Params) -> Result<Outcome> {
        let scan = load_curve(
            &p.input,
            p.axis_unit.as_deref(),
            p.value_unit.as_deref(),
            None,
            Some(Dimension::Voltage),
        )?;
        let cal = calibrate_scan_axis(&scan, p.detuning, &p.peaks)?;
        let peaks: Vec<Value> = cal
            .peaks
            .iter()
            .zip(&cal.errors)
            .map(|(pk, e)| {
                json!({
                    "center_hz": pk.center,
                    "linewidth_hz": pk.fwhm_spectral,
                    "linewidth_error_hz": e.fwhm_spectral,
                    "amplitude": pk.amplitude,
                    "background": pk.background,
                    "linewidth_spatial_m": p.slope.map(|s| pk.with_dispersion(s).fwhm_spatial),
                })
            })
            .collect();
        let mut table = Table::new(&["frequency [Hz]", "signal"]);
        for (x, y) in cal.frequency_axis.iter().zip(&scan.values) {
            table.push(&[*x, *y]);
        }
        let lw = cal.linewidths();
        Ok(Outcome::new(
            json!({
                "scale_hz_per_axis_unit": cal.scale,
                "peaks": peaks,
                "mean_linewidth_hz": lw.iter().sum::<f64>() / lw.len() as f64,
            }),
            Some(table),
        ))
    }

    fn inputs(&self) -> Vec<String> {
        self.input.iter().cloned().collect()
    }
}

// ---------------------------------------------------------------- length

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LengthArgs {
    /// Free spectral range, e.g. 5THz
    #[arg(long, conflicts_with = "spectrum")]
    pub fsr: Option<String>,
    /// White-light transmission spectrum (wavelength axis)
    #[arg(long)]
    pub spectrum: Option<String>,
    #[arg(long)]
    pub axis_unit: Option<String>,
    /// Height filter for transverse modes [default: 0.5]
    #[arg(long)]
    pub height_fraction: Option<f64>,
    /// Spacing outlier cut in robust σ [default: 3]
    #[arg(long)]
    pub mad_factor: Option<f64>,
}

pub enum LengthParams {
    Fsr(f64),
    WhiteLight {
        input: String,
        axis_unit: Option<String>,
        options: WhiteLightOptions,
    },
}

impl Command for LengthArgs {
    const NAME: &'static str = "length";
    type Params = LengthParams;

    fn resolve(&mut self, r: &mut Resolver) -> Result<Self::Params> {
        if let Some(fsr) = Resolver::optional_quantity(&self.fsr, "fsr", Dimension::Frequency)? {
            return Ok(LengthParams::Fsr(fsr));
        }
        let input = self
            .spectrum
            .clone()
            .ok_or_else(|| Error::Parse("length needs either fsr or spectrum".into()))?;
        let d = WhiteLightOptions::default();
        let options = WhiteLightOptions {
            height_fraction: r.value(&mut self.height_fraction, "height_fraction", d.height_fraction),
            mad_factor: r.value(&mut self.mad_factor, "mad_factor", d.mad_factor),
            ..d
        };
        Ok(LengthParams::WhiteLight {
            input,
            axis_unit: self.axis_unit.clone(),
            options,
        })
    }

    fn execute(p: Self::Params) -> Result<Outcome> {
        match p {
            LengthParams::Fsr(fsr) => {
                let l = length_from_fsr(fsr)?;
                Ok(Outcome::new(
                    json!({ "method": "fsr", "fsr_hz": fsr, "length_m": l, "length_um": l / MICROMETER }),
                    None,
                ))
            }
            LengthParams::WhiteLight {
                input,
                axis_unit,
                options,
            } => {
                let s = load_curve(&input, axis_unit.as_deref(), None, Some(Dimension::Length), None)?;
                let res = length_from_white_light(&s, &options)?;
                let mut table = Table::new(&["wavelength [m]", "frequency [Hz]", "height"]);
                for m in &res.modes {
                    table.push(&[m.wavelength, m.frequency, m.height]);
                }
                Ok(Outcome::new(
                    json!({
                        "method": "white-light",
                        "fsr_hz": res.fsr,
                        "length_m": res.length,
                        "length_um": res.length / MICROMETER,
                        "modes": res.modes,
                        "rejected_peaks": res.rejected_peaks,
                        "spacings_hz": res.spacings,
                        "rejected_spacings_hz": res.rejected_spacings,
                    }),
                    Some(table),
                ))
            }
        }
    }

    fn inputs(&self) -> Vec<String> {
        self.spectrum.iter().cloned().collect()
    }
}

// ---------------------------------------------------------------- vibration

struct Calibration {
    resonance: LorentzianResonance,
    side: Side,
    conversion: ConversionOptions,
}

#[allow(clippy::too_many_arguments)]
fn calibration(
    r: &mut Resolver,
    linewidth: &mut Option<String>,
    linewidth_pm: &Option<f64>,
    peak: &mut Option<String>,
    background: &mut Option<String>,
    side_text: &mut Option<String>,
    floor: &mut Option<f64>,
    max_clipped_fraction: &mut Option<f64>,
) -> Result<Calibration> {
    let kappa_x = match (&linewidth, linewidth_pm) {
        (Some(_), Some(_)) => return Err(Error::Parse("give linewidth or linewidth_pm, not both".into())),
        (None, Some(pm)) => pm * PICOMETER,
        _ => Resolver::required_quantity(linewidth, "linewidth", Dimension::Length)?,
    };
    let t0 = r.quantity(peak, "peak", "1V", Dimension::Voltage)?;
    let bg = r.quantity(background, "background", "0V", Dimension::Voltage)?;
    let side = side(&r.value(side_text, "side", "right".into()))?;
    let d = ConversionOptions::default();
    Ok(Calibration {
        resonance: LorentzianResonance::spatial(t0, kappa_x, bg)?,
        side,
        conversion: ConversionOptions {
            floor: r.value(floor, "floor", d.floor),
            max_clipped_fraction: r.value(max_clipped_fraction, "max_clipped_fraction", d.max_clipped_fraction),
            ..d
        },
    })
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VibrationArgs {
    /// Transmission trace CSV or JSON; `-` for stdin [default: -]
    pub input: Option<String>,
    /// Unit of the time column [default: from header, else s]
    #[arg(long)]
    pub axis_unit: Option<String>,
    /// Unit of the transmission column [default: from header, else V]
    #[arg(long)]
    pub value_unit: Option<String>,
    /// Spatial linewidth κ_x, e.g. 500pm
    #[arg(long, required_unless_present = "linewidth_pm")]
    pub linewidth: Option<String>,
    /// κ_x as a bare number of picometres
    #[arg(long)]
    pub linewidth_pm: Option<f64>,
    /// Peak transmission above background T0 [default: 1V]
    #[arg(long)]
    pub peak: Option<String>,
    /// [default: 0V]
    #[arg(long)]
    pub background: Option<String>,
    /// Flank the cavity sits on: left or right [default: right]
    #[arg(long)]
    pub side: Option<String>,
    /// Clipping floor as a fraction of T0 [default: 1e-3]
    #[arg(long)]
    pub floor: Option<f64>,
    /// [default: 0.01]
    #[arg(long)]
    pub max_clipped_fraction: Option<f64>,
    /// Gaussianity KS threshold [default: 0.05]
    #[arg(long)]
    pub ks_threshold: Option<f64>,
    /// Welch segment length in samples [default: 2N/9]
    #[arg(long)]
    pub segment_length: Option<usize>,
    /// Spectral lines must exceed this multiple of the local median [default: 5]
    #[arg(long)]
    pub line_factor: Option<f64>,
    /// Half width of the local median window in bins [default: 50]
    #[arg(long)]
    pub line_window: Option<usize>,
}

pub struct VibrationParams {
    input: String,
    axis_unit: Option<String>,
    value_unit: Option<String>,
    cal: Calibration,
    gauss: GaussianityOptions,
    spectrum: SpectrumOptions,
    line_factor: f64,
    line_window: usize,
}

impl Command for VibrationArgs {
    const NAME: &'static str = "vibration";
    type Params = VibrationParams;

    fn resolve(&mut self, r: &mut Resolver) -> Result<Self::Params> {
        let input = r.value(&mut self.input, "input", "-".into());
        let cal = calibration(
            r,
            &mut self.linewidth,
            &self.linewidth_pm,
            &mut self.peak,
            &mut self.background,
            &mut self.side,
            &mut self.floor,
            &mut self.max_clipped_fraction,
        )?;
        let d = GaussianityOptions::default();
        let gauss = GaussianityOptions {
            ks_threshold: r.value(&mut self.ks_threshold, "ks_threshold", d.ks_threshold),
            ..d
        };
        Ok(VibrationParams {
            input,
            axis_unit: self.axis_unit.clone(),
            value_unit: self.value_unit.clone(),
            cal,
            gauss,
            spectrum: SpectrumOptions {
                segment_length: self.segment_length,
            },
            line_factor: r.value(&mut self.line_factor, "line_factor", 5.0),
            line_window: r.value(&mut self.line_window, "line_window", 50),
        })
    }

    fn execute(p: Self::Params) -> Result<Outcome> {
        let curve = load_curve(
            &p.input,
            p.axis_unit.as_deref(),
            p.value_unit.as_deref(),
            Some(Dimension::Time),
            Some(Dimension::Voltage),
        )?;
        let trace = TransmissionTrace::from_curve(&curve)?;
        let conv = transmission_to_displacement(&trace, &p.cal.resonance, p.cal.side, &p.cal.conversion)?;
        let g = gaussianity_check(&conv.trace, &p.gauss)?;
        let s = amplitude_spectrum(&conv.trace, &p.spectrum)?;
        let mut table = Table::new(&["frequency [Hz]", "asd [m/rtHz]", "integrated_rms [m]"]);
        for i in 0..s.frequencies.len() {
            table.push(&[s.frequencies[i], s.asd[i], s.integrated_rms[i]]);
        }
        Ok(Outcome::new(
            json!({
                "samples": trace.samples.len(),
                "sample_rate_hz": trace.sample_rate,
                "rms_m": conv.trace.rms,
                "rms_pm": conv.trace.rms / PICOMETER,
                "clipped": conv.clipped,
                "saturated": conv.saturated,
                "gaussianity": {
                    "passed": g.passed,
                    "ks_distance": g.ks_distance,
                    "excess_kurtosis": g.excess_kurtosis,
                    "std_dev_m": g.std_dev,
                },
                "spectrum": {
                    "total_rms_m": s.total_rms(),
                    "resolution_hz": s.resolution,
                    "segment_length": s.segment_length,
                    "averages": s.averages,
                    "lines_hz": s.lines(p.line_factor, p.line_window),
                },
            }),
            Some(table),
        ))
    }

    fn inputs(&self) -> Vec<String> {
        self.input.iter().cloned().collect()
    }
}

// ---------------------------------------------------------------- cycle-rms

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleRmsArgs {
    /// Trace CSV or JSON; `-` for stdin [default: -]
    pub input: Option<String>,
    #[arg(long)]
    pub axis_unit: Option<String>,
    #[arg(long)]
    pub value_unit: Option<String>,
    /// The input is already a displacement trace [m]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub displacement: Option<bool>,
    /// Cryocooler cycle period, e.g. 714.3ms
    #[arg(long, required = true)]
    pub period: Option<String>,
    /// Phase bins per cycle [default: 20]
    #[arg(long)]
    pub bins: Option<usize>,
    /// κ_x for transmission input, e.g. 500pm
    #[arg(long)]
    pub linewidth: Option<String>,
    #[arg(long)]
    pub linewidth_pm: Option<f64>,
    #[arg(long)]
    pub peak: Option<String>,
    #[arg(long)]
    pub background: Option<String>,
    #[arg(long)]
    pub side: Option<String>,
    #[arg(long)]
    pub floor: Option<f64>,
    #[arg(long)]
    pub max_clipped_fraction: Option<f64>,
}

pub struct CycleRmsParams {
    input: String,
    axis_unit: Option<String>,
    value_unit: Option<String>,
    cal: Option<Calibration>,
    period: f64,
    bins: usize,
}

impl Command for CycleRmsArgs {
    const NAME: &'static str = "cycle-rms";
    type Params = CycleRmsParams;

    fn resolve(&mut self, r: &mut Resolver) -> Result<Self::Params> {
        let input = r.value(&mut self.input, "input", "-".into());
        let is_disp = r.value(&mut self.displacement, "displacement", false);
        let cal = if is_disp {
            None
        } else {
            Some(calibration(
                r,
                &mut self.linewidth,
                &self.linewidth_pm,
                &mut self.peak,
                &mut self.background,
                &mut self.side,
                &mut self.floor,
                &mut self.max_clipped_fraction,
            )?)
        };
        Ok(CycleRmsParams {
            input,
            axis_unit: self.axis_unit.clone(),
            value_unit: self.value_unit.clone(),
            cal,
            period: Resolver::required_quantity(&self.period, "period", Dimension::Time)?,
            bins: r.value(&mut self.bins, "bins", 20),
        })
    }

    fn execute(p: Self::Params) -> Result<Outcome> {
        let value_dim = if p.cal.is_some() {
            Dimension::Voltage
        } else {
            Dimension::Length
        };
        let curve = load_curve(
            &p.input,
            p.axis_unit.as_deref(),
            p.value_unit.as_deref(),
            Some(Dimension::Time),
            Some(value_dim),
        )?;
        let disp = match &p.cal {
            Some(cal) => {
                let trace = TransmissionTrace::from_curve(&curve)?;
                transmission_to_displacement(&trace, &cal.resonance, cal.side, &cal.conversion)?.trace
            }
            None => DisplacementTrace::from_curve(&curve)?,
        };
        let bins = cycle_phase_rms(&disp, p.period, p.bins)?;
        let mut table = Table::new(&["phase", "rms [m]", "count"]);
        for b in &bins {
            table.push(&[b.phase, b.rms, b.count as f64]);
        }
        let peak = bins.iter().max_by(|a, b| a.rms.total_cmp(&b.rms)).copied();
        Ok(Outcome::new(
            json!({
                "period_s": p.period,
                "rms_m": disp.rms,
                "bins": bins,
                "loudest_phase": peak.map(|b| b.phase),
            }),
            Some(table),
        ))
    }

    fn inputs(&self) -> Vec<String> {
        self.input.iter().cloned().collect()
    }
}

// ---------------------------------------------------------------- voigt

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoigtArgs {
    /// Scan files (frequency axis); `-` reads one scan from stdin
    #[arg(required = true)]
    pub inputs: Option<Vec<String>>,
    #[arg(long)]
    pub axis_unit: Option<String>,
    #[arg(long)]
    pub value_unit: Option<String>,
    /// Lorentzian linewidth κ held fixed in the fit, e.g. 1GHz
    #[arg(long, required = true)]
    pub linewidth: Option<String>,
    /// Dispersion slope, e.g. 20MHz/pm
    #[arg(long, required = true)]
    pub dispersion: Option<String>,
    /// Significance in standard errors for a resolved width [default: 3]
    #[arg(long)]
    pub significance: Option<f64>,
    /// Peak-location smoothing in samples [default: 5]
    #[arg(long)]
    pub smoothing: Option<usize>,
}

pub struct VoigtParams {
    inputs: Vec<String>,
    axis_unit: Option<String>,
    value_unit: Option<String>,
    kappa: f64,
    slope: DispersionSlope,
    options: VoigtOptions,
}

impl Command for VoigtArgs {
    const NAME: &'static str = "voigt";
    type Params = VoigtParams;

    fn resolve(&mut self, r: &mut Resolver) -> Result<Self::Params> {
        let inputs = self
            .inputs
            .clone()
            .filter(|v| !v.is_empty())
            .ok_or_else(|| missing("inputs"))?;
        let d = VoigtOptions::default();
        Ok(VoigtParams {
            inputs,
            axis_unit: self.axis_unit.clone(),
            value_unit: self.value_unit.clone(),
            kappa: Resolver::required_quantity(&self.linewidth, "linewidth", Dimension::Frequency)?,
            slope: DispersionSlope(Resolver::required_quantity(
                &self.dispersion,
                "dispersion",
                Dimension::FrequencyPerLength,
            )?),
            options: VoigtOptions {
                significance: r.value(&mut self.significance, "significance", d.significance),
                smoothing: r.value(&mut self.smoothing, "smoothing", d.smoothing),
            },
        })
    }

    fn execute(p: Self::Params) -> Result<Outcome> {
        let mut fits = Vec::new();
        for input in &p.inputs {
            let scan = load_curve(
                input,
                p.axis_unit.as_deref(),
                p.value_unit.as_deref(),
                Some(Dimension::Frequency),
                Some(Dimension::Voltage),
            )?;
            fits.push(voigt_scan_fit(&scan, p.kappa, p.slope, &p.options).map_err(|e| for_param(input, e))?);
        }
        let summary = combine_scans(&fits, p.slope)?;
        let mut table = Table::new(&["scan", "sigma_freq [Hz]", "sigma_freq_error [Hz]"]);
        for (i, f) in fits.iter().enumerate() {
            table.push(&[i as f64, f.sigma_freq_fit, f.sigma_freq_error]);
        }
        let scans: Vec<Value> = p
            .inputs
            .iter()
            .zip(&fits)
            .map(|(name, f)| json!({ "input": name, "fit": f }))
            .collect();
        Ok(Outcome::new(
            json!({
                "scans": scans,
                "summary": summary,
                "sigma_length_pm": summary.sigma_length.value().map(|v| v / PICOMETER),
            }),
            Some(table),
        ))
    }

    fn inputs(&self) -> Vec<String> {
        self.inputs.clone().unwrap_or_default()
    }
}

// ---------------------------------------------------------------- odmr

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdmrArgs {
    /// ODMR spectrum (microwave frequency axis); `-` for stdin [default: -]
    pub input: Option<String>,
    #[arg(long)]
    pub axis_unit: Option<String>,
    /// Number of dips to fit, 1 or 2 [default: 2]
    #[arg(long)]
    pub dips: Option<usize>,
    /// Never attribute a magnetic field [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub zero_field: Option<bool>,
    /// Smallest splitting attributed to a field [default: 20MHz]
    #[arg(long)]
    pub field_threshold: Option<String>,
    /// Minimum fractional dip depth [default: 0.005]
    #[arg(long)]
    pub contrast_threshold: Option<f64>,
    /// Minimum dip depth in noise units [default: 5]
    #[arg(long)]
    pub noise_factor: Option<f64>,
    /// Detection smoothing in samples [default: 3]
    #[arg(long)]
    pub smoothing: Option<usize>,
}

pub struct OdmrParams {
    input: String,
    axis_unit: Option<String>,
    dips: usize,
    options: OdmrOptions,
}

impl Command for OdmrArgs {
    const NAME: &'static str = "odmr";
    type Params = OdmrParams;

    fn resolve(&mut self, r: &mut Resolver) -> Result<Self::Params> {
        let d = OdmrOptions::default();
        let threshold = format!("{:e}MHz", d.field_threshold / MHZ);
        Ok(OdmrParams {
            input: r.value(&mut self.input, "input", "-".into()),
            axis_unit: self.axis_unit.clone(),
            dips: r.value(&mut self.dips, "dips", 2),
            options: OdmrOptions {
                contrast_threshold: r.value(&mut self.contrast_threshold, "contrast_threshold", d.contrast_threshold),
                noise_factor: r.value(&mut self.noise_factor, "noise_factor", d.noise_factor),
                field_threshold: r.quantity(
                    &mut self.field_threshold,
                    "field_threshold",
                    &threshold,
                    Dimension::Frequency,
                )?,
                zero_field: r.value(&mut self.zero_field, "zero_field", d.zero_field),
                smoothing: r.value(&mut self.smoothing, "smoothing", d.smoothing),
            },
        })
    }

    fn execute(p: Self::Params) -> Result<Outcome> {
        let s = load_curve(&p.input, p.axis_unit.as_deref(), None, Some(Dimension::Frequency), None)?;
        let res = odmr_fit(&s, p.dips, &p.options)?;
        Ok(Outcome::new(
            json!({
                "fit": res,
                "splitting_mhz": res.splitting.map(|v| v / MHZ),
                "field_gauss": res.inferred_field.map(|b| b / GAUSS),
                "field_error_gauss": res.field_error.map(|b| b / GAUSS),
            }),
            None,
        ))
    }

    fn inputs(&self) -> Vec<String> {
        self.input.iter().cloned().collect()
    }
}

// ---------------------------------------------------------------- simulate

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateArgs {
    /// Built-in scenario name or scenario file
    #[arg(long, required = true)]
    pub scenario: Option<String>,
    /// Override the trace duration (vibration scenarios), e.g. 10s
    #[arg(long)]
    pub duration: Option<String>,
    /// Override the scenario seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Which scan of a scan scenario to emit [default: 0]
    #[arg(long)]
    pub index: Option<usize>,
    /// Vibration output: transmission or displacement [default: transmission]
    #[arg(long)]
    pub signal: Option<String>,
}

pub struct SimulateParams {
    file: ScenarioFile,
    index: usize,
    displacement: bool,
}

pub fn load_scenario(name: &str) -> Result<ScenarioFile> {
    if builtin_scenario_names().contains(&name) {
        builtin_scenario(name)
    } else if Path::new(name).exists() {
        ScenarioFile::from_json(&std::fs::read_to_string(name)?)
    } else {
        Err(Error::Domain(format!(
            "no scenario file {name:?} and no built-in of that name; built-ins: {}",
            builtin_scenario_names().join(", ")
        )))
    }
}

impl Command for SimulateArgs {
    const NAME: &'static str = "simulate";
    type Params = SimulateParams;

    fn resolve(&mut self, r: &mut Resolver) -> Result<Self::Params> {
        let name = self.scenario.clone().ok_or_else(|| missing("scenario"))?;
        let mut file = load_scenario(&name)?;
        let mut index = 0;
        let mut displacement = false;
        match &mut file.scenario {
            Scenario::Vibration(v) => {
                v.duration = r.quantity(
                    &mut self.duration,
                    "duration",
                    &format_si(v.duration, Dimension::Time),
                    Dimension::Time,
                )?;
                v.noise.seed = r.value(&mut self.seed, "seed", v.noise.seed);
                displacement = match r.value(&mut self.signal, "signal", "transmission".into()).as_str() {
                    "transmission" => false,
                    "displacement" => true,
                    other => {
                        return Err(Error::Parse(format!(
                            "signal must be transmission or displacement, got {other:?}"
                        )))
                    }
                };
            }
            Scenario::Scan(s) => {
                s.seed = r.value(&mut self.seed, "seed", s.seed);
                index = r.value(&mut self.index, "index", 0);
                if index >= s.scans {
                    return Err(Error::Domain(format!(
                        "index {index} out of range for {} scans",
                        s.scans
                    )));
                }
            }
            Scenario::WhiteLight(w) => w.seed = r.value(&mut self.seed, "seed", w.seed),
            Scenario::Odmr(o) => o.seed = r.value(&mut self.seed, "seed", o.seed),
        }
        if self.duration.is_some() && !matches!(file.scenario, Scenario::Vibration(_)) {
            return Err(Error::Parse("duration applies only to vibration scenarios".into()));
        }
        file.scenario.validate()?;
        Ok(SimulateParams {
            file,
            index,
            displacement,
        })
    }

    fn execute(p: Self::Params) -> Result<Outcome> {
        let kind = p.file.scenario.kind();
        let (table, truth) = match &p.file.scenario {
            Scenario::Vibration(v) => {
                let disp = v.displacement()?;
                let truth = json!({
                    "analytic_rms_m": disp.analytic_rms,
                    "trace_rms_m": disp.trace.rms,
                    "calibration": v.calibration,
                    "cycle_period_s": v.cycle_period,
                });
                let curve = if p.displacement {
                    disp.trace.to_curve()
                } else {
                    v.transmission(&disp)?.to_curve()
                };
                let header = if p.displacement {
                    "displacement [m]"
                } else {
                    "transmission [V]"
                };
                (two_columns("time [s]", header, &curve.axis, &curve.values), truth)
            }
            Scenario::Scan(s) => {
                let curve = s.scan(p.index)?;
                let truth = json!({
                    "linewidth_hz": s.linewidth,
                    "sigma_freq_hz": s.sigma_freq(),
                    "sigma_length_m": s.length_jitter,
                    "dispersion_mhz_per_pm": s.slope().mhz_per_pm(),
                    "index": p.index,
                    "scans": s.scans,
                });
                (
                    two_columns("frequency [Hz]", "transmission [V]", &curve.axis, &curve.values),
                    truth,
                )
            }
            Scenario::WhiteLight(w) => {
                let curve = w.spectrum()?;
                let g = w.geometry.to_geometry()?;
                let modes = resonance_frequencies(&g, w.band()?)?;
                let truth = json!({
                    "geometry": geometry_json(&g),
                    "mode_frequencies_hz": modes.iter().map(|m| m.frequency).collect::<Vec<_>>(),
                });
                (
                    two_columns("wavelength [m]", "transmission", &curve.axis, &curve.values),
                    truth,
                )
            }
            Scenario::Odmr(o) => {
                let curve = o.spectrum()?;
                let truth = json!({ "lines": o.lines });
                (
                    two_columns("frequency [Hz]", "signal", &curve.axis, &curve.values),
                    truth,
                )
            }
        };
        let samples = table.columns[0].len();
        Ok(Outcome {
            result: json!({
                "scenario": p.file.name,
                "kind": kind,
                "samples": samples,
                "ground_truth": truth,
            }),
            table: Some(table),
            data_to_stdout: true,
        })
    }
}

fn two_columns(a: &str, b: &str, x: &[f64], y: &[f64]) -> Table {
    Table {
        header: vec![a.into(), b.into()],
        columns: vec![x.to_vec(), y.to_vec()],
    }
}

// ---------------------------------------------------------------- dispatch

/// A command after parameter resolution.
pub struct Resolved {
    pub params: Map<String, Value>,
    pub defaulted: Vec<String>,
    pub inputs: Vec<String>,
    run: Box<dyn FnOnce() -> Result<Outcome>>,
}

impl Resolved {
    pub fn execute(self) -> Result<Outcome> {
        (self.run)()
    }
}

/// Parameter parsing failure, with the offending field when known.
#[derive(Debug)]
pub struct ParamError {
    pub field: Option<String>,
    pub error: Error,
}

fn resolve_as<C: Command + 'static>(params: Map<String, Value>, prior: Vec<String>) -> Result<Resolved, ParamError> {
    let mut args: C = serde_path_to_error::deserialize(Value::Object(params)).map_err(|e| ParamError {
        field: Some(e.path().to_string()).filter(|p| p != "."),
        error: Error::Parse(e.inner().to_string()),
    })?;
    let mut r = Resolver::new(prior);
    let resolved = args.resolve(&mut r).map_err(|error| ParamError {
        field: field_of(&error),
        error,
    })?;
    let inputs = args.inputs();
    let Value::Object(params) = serde_json::to_value(&args).expect("arguments serialize") else {
        unreachable!("arguments are structs")
    };
    Ok(Resolved {
        params,
        defaulted: r.defaulted,
        inputs,
        run: Box::new(move || C::execute(resolved)),
    })
}

/// Parameter name from a message prefixed by [`for_param`].
fn field_of(e: &Error) -> Option<String> {
    let msg = match e {
        Error::Unit(m) | Error::Domain(m) | Error::Parse(m) => m,
        _ => return None,
    };
    let (head, _) = msg.split_once(": ")?;
    (!head.is_empty() && head.chars().all(|c| c.is_ascii_lowercase() || c == '_')).then(|| head.to_string())
}

macro_rules! registry {
    ($($ty:ty),* $(,)?) => {
        pub const NAMES: &[&str] = &[$(<$ty>::NAME),*];

        pub fn resolve(name: &str, params: Map<String, Value>, prior: Vec<String>) -> Result<Resolved, ParamError> {
            match name {
                $(<$ty>::NAME => resolve_as::<$ty>(params, prior),)*
                _ => Err(ParamError {
                    field: Some("command".into()),
                    error: Error::Parse(format!("unknown command {name:?}; known: {}", NAMES.join(", "))),
                }),
            }
        }
    };
}

registry!(
    ModesArgs,
    DispersionArgs,
    PurcellArgs,
    DesignCurveArgs,
    LinewidthArgs,
    LengthArgs,
    VibrationArgs,
    CycleRmsArgs,
    VoigtArgs,
    OdmrArgs,
    SimulateArgs,
);
