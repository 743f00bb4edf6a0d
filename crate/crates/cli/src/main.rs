//! `fpcav`: cavity design, characterisation and vibration analysis.

mod commands;
mod config;
mod error;
mod io;
mod validate;

use clap::{Parser, Subcommand};
use commands::{
    CycleRmsArgs, DesignCurveArgs, DispersionArgs, LengthArgs, LinewidthArgs, ModesArgs, OdmrArgs, Outcome,
    PurcellArgs, SimulateArgs, VibrationArgs, VoigtArgs,
};
use config::{RunConfig, CONFIG_VERSION};
use error::{exit_code, CliError};
use fpcav_core::Error;
use serde::Serialize;
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "fpcav",
    version,
    about = "Fiber Fabry-Pérot microcavity design and vibration analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Write the JSON result document here instead of stdout
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Write plot-ready CSV curve data here; `-` for stdout
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Resonances of a hybrid diamond-air cavity in a wavelength band
    Modes(ModesArgs),
    /// Dispersion slope and character of the mode nearest a wavelength
    Dispersion(DispersionArgs),
    /// Bare and vibration-averaged Purcell factors
    Purcell(PurcellArgs),
    /// Q-optimised Purcell factor against RMS length fluctuation
    DesignCurve(DesignCurveArgs),
    /// Linewidths from a two-laser calibration scan
    Linewidth(LinewidthArgs),
    /// Cavity length from a free spectral range or a white-light spectrum
    Length(LengthArgs),
    /// Displacement RMS, Gaussianity and spectrum from a transmission trace
    Vibration(VibrationArgs),
    /// Displacement RMS folded on the cryocooler cycle
    CycleRms(CycleRmsArgs),
    /// Gaussian jitter from Voigt fits to laser scans
    Voigt(VoigtArgs),
    /// NV ODMR dip fit and magnetic field
    Odmr(OdmrArgs),
    /// Synthetic traces from a scenario
    Simulate(SimulateArgs),
    /// Re-run a config or the config embedded in a result document
    Run {
        /// Run config or result document
        config: PathBuf,
    },
    /// Check a scenario, preset, run config or result file without running it
    Validate { path: PathBuf },
    /// Print a bundled JSON schema
    Schema {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(SCHEMAS.iter().map(|s| s.0)))]
        name: String,
    },
}

/// Versioned JSON schemas for every file format the tool reads or writes.
const SCHEMAS: [(&str, &str); 5] = [
    ("run-config", include_str!("../schemas/run-config.v1.schema.json")),
    ("result", include_str!("../schemas/result.v1.schema.json")),
    ("scenario", include_str!("../schemas/scenario.v1.schema.json")),
    ("presets", include_str!("../schemas/presets.v1.schema.json")),
    ("error", include_str!("../schemas/error.v1.schema.json")),
];

fn params<T: Serialize>(args: &T) -> serde_json::Map<String, Value> {
    match serde_json::to_value(args).expect("arguments serialize") {
        Value::Object(m) => m,
        _ => unreachable!("arguments are structs"),
    }
}

impl Cmd {
    fn config(&self, output: Option<PathBuf>, csv: Option<PathBuf>) -> Option<RunConfig> {
        let (command, params) = match self {
            Cmd::Modes(a) => ("modes", params(a)),
            Cmd::Dispersion(a) => ("dispersion", params(a)),
            Cmd::Purcell(a) => ("purcell", params(a)),
            Cmd::DesignCurve(a) => ("design-curve", params(a)),
            Cmd::Linewidth(a) => ("linewidth", params(a)),
            Cmd::Length(a) => ("length", params(a)),
            Cmd::Vibration(a) => ("vibration", params(a)),
            Cmd::CycleRms(a) => ("cycle-rms", params(a)),
            Cmd::Voigt(a) => ("voigt", params(a)),
            Cmd::Odmr(a) => ("odmr", params(a)),
            Cmd::Simulate(a) => ("simulate", params(a)),
            Cmd::Run { .. } | Cmd::Validate { .. } | Cmd::Schema { .. } => return None,
        };
        Some(RunConfig {
            version: CONFIG_VERSION,
            command: command.into(),
            params,
            defaulted: Vec::new(),
            output,
            csv,
        })
    }
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let mut value: Value = serde_json::from_str(&text)?;
    if value.get("result").is_some() {
        value = value["config"].take();
    }
    let config: RunConfig = serde_json::from_value(value)?;
    if config.version != CONFIG_VERSION {
        return Err(Error::Parse(format!("unsupported config version {}", config.version)).into());
    }
    Ok(config)
}

fn execute(mut config: RunConfig) -> Result<(), CliError> {
    let resolved = commands::resolve(
        &config.command,
        std::mem::take(&mut config.params),
        std::mem::take(&mut config.defaulted),
    )
    .map_err(|e| e.error)?;
    config.params = resolved.params.clone();
    config.defaulted = resolved.defaulted.clone();
    let outcome = resolved.execute()?;
    emit(&config, outcome)
}

fn emit(config: &RunConfig, outcome: Outcome) -> Result<(), CliError> {
    let csv = config
        .csv
        .clone()
        .or_else(|| outcome.data_to_stdout.then(|| PathBuf::from("-")));
    let csv_to_stdout = csv.as_deref() == Some(Path::new("-"));
    if csv.is_some() && outcome.table.is_none() {
        return Err(Error::Parse(format!("{} produces no curve data for --csv", config.command)).into());
    }
    if csv_to_stdout && config.output.is_none() && !outcome.data_to_stdout {
        return Err(Error::Parse("--csv - needs --output for the result document".into()).into());
    }
    // Destinations are left out so that re-running a result document never
    // overwrites it and identical runs give identical documents.
    let embedded = RunConfig {
        output: None,
        csv: None,
        ..config.clone()
    };
    let doc = json!({
        "tool": "fpcav",
        "version": VERSION,
        "command": config.command,
        "config": embedded,
        "result": outcome.result,
    });
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    match &config.output {
        Some(path) => io::write_atomic(path, |f| f.write_all(text.as_bytes()))?,
        None if !csv_to_stdout => std::io::stdout().lock().write_all(text.as_bytes())?,
        None => {}
    }
    if let (Some(path), Some(table)) = (csv, &outcome.table) {
        if csv_to_stdout {
            table.write(std::io::stdout().lock())?;
        } else {
            io::write_atomic(&path, |f| table.write(f))?;
        }
    }
    Ok(())
}

fn report_error(e: &CliError) {
    let doc = json!({
        "tool": "fpcav",
        "version": VERSION,
        "error": { "class": e.class(), "message": e.message(), "exit_code": e.exit_code() },
    });
    let _ = writeln!(std::io::stderr(), "{}", serde_json::to_string(&doc).unwrap_or_default());
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            if !usage {
                return ExitCode::SUCCESS;
            }
            let doc = json!({
                "tool": "fpcav",
                "version": VERSION,
                "error": { "class": "parse", "message": e.kind().to_string(), "exit_code": exit_code("parse") },
            });
            eprintln!("{doc}");
            return ExitCode::from(exit_code("parse") as u8);
        }
    };
    let result = match &cli.command {
        Cmd::Validate { path } => {
            let path = path.to_string_lossy();
            let report = validate::validate(&path);
            println!(
                "{}",
                serde_json::to_string_pretty(&report.to_json(&path)).expect("report serializes")
            );
            if report.diagnostics.is_empty() {
                Ok(())
            } else {
                Err(CliError::Validation(report.diagnostics))
            }
        }
        Cmd::Schema { name } => {
            let text = SCHEMAS.iter().find(|s| s.0 == name).expect("checked by clap").1;
            print!("{text}");
            Ok(())
        }
        Cmd::Run { config } => load_config(config).and_then(|mut c| {
            if cli.output.is_some() {
                c.output = cli.output.clone();
            }
            if cli.csv.is_some() {
                c.csv = cli.csv.clone();
            }
            execute(c)
        }),
        cmd => execute(
            cmd.config(cli.output.clone(), cli.csv.clone())
                .expect("analysis command"),
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(&e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
