use crate::error::for_param;
use fpcav_core::units::{parse_as, Dimension};
use fpcav_core::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::path::PathBuf;

pub const CONFIG_VERSION: u32 = 1;

/// Everything needed to repeat an invocation. Result documents embed the
/// effective config, so feeding one back to `fpcav run` reproduces it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub command: String,
    /// Command parameters, including inputs, unit declarations, preset and
    /// seed where the command takes them.
    #[serde(default)]
    pub params: Map<String, Value>,
    /// Parameters whose values were filled in rather than given.
    #[serde(default)]
    pub defaulted: Vec<String>,
    /// Result document path; stdout when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Curve data path; `-` for stdout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

/// Fills defaults into parameter slots and records which ones it filled.
#[derive(Debug, Default)]
pub struct Resolver {
    pub defaulted: Vec<String>,
}

impl Resolver {
    pub fn new(prior: Vec<String>) -> Self {
        Self { defaulted: prior }
    }

    fn mark(&mut self, name: &str) {
        if !self.defaulted.iter().any(|d| d == name) {
            self.defaulted.push(name.to_string());
        }
    }

    pub fn value<T: Clone>(&mut self, slot: &mut Option<T>, name: &str, default: T) -> T {
        if slot.is_none() {
            self.mark(name);
            *slot = Some(default);
        }
        slot.clone().unwrap()
    }

    pub fn quantity(&mut self, slot: &mut Option<String>, name: &str, default: &str, dim: Dimension) -> Result<f64> {
        let text = self.value(slot, name, default.to_string());
        parse_as(&text, dim).map_err(|e| for_param(name, e))
    }

    pub fn optional_quantity(slot: &Option<String>, name: &str, dim: Dimension) -> Result<Option<f64>> {
        slot.as_deref()
            .map(|t| parse_as(t, dim).map_err(|e| for_param(name, e)))
            .transpose()
    }

    pub fn required_quantity(slot: &Option<String>, name: &str, dim: Dimension) -> Result<f64> {
        Self::optional_quantity(slot, name, dim)?.ok_or_else(|| missing(name))
    }
}

pub fn missing(name: &str) -> Error {
    Error::Parse(format!("{name}: missing required parameter"))
}
