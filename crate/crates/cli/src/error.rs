use fpcav_core::Error;
use serde::Serialize;

/// One problem found by `validate`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    /// `schema`, `unit`, `domain`, `existence` or `parse`.
    pub kind: &'static str,
    /// Dotted path of the offending field.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    pub message: String,
}

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Validation(Vec<Diagnostic>),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    pub fn class(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.class(),
            CliError::Validation(_) => "validation",
        }
    }

    pub fn exit_code(&self) -> i32 {
        exit_code(self.class())
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Validation(d) => format!("{} problem(s) found", d.len()),
        }
    }
}

pub fn exit_code(class: &str) -> i32 {
    match class {
        "parse" => 2,
        "unit" => 3,
        "domain" => 4,
        "numerical" => 5,
        "fit" | "detection" | "calibration" | "quality" | "insufficient-data" => 6,
        "io" => 7,
        "validation" => 8,
        _ => 1,
    }
}

/// Prefixes the parameter name to unit and domain messages.
pub fn for_param(name: &str, e: Error) -> Error {
    match e {
        Error::Unit(m) => Error::Unit(format!("{name}: {m}")),
        Error::Domain(m) => Error::Domain(format!("{name}: {m}")),
        Error::Parse(m) => Error::Parse(format!("{name}: {m}")),
        other => other,
    }
}
