use crate::commands;
use crate::config::{RunConfig, CONFIG_VERSION};
use crate::error::Diagnostic;
use fpcav_core::purcell::PresetRegistry;
use fpcav_core::synth::{OdmrScenario, ScanScenario, Scenario, ScenarioFile, VibrationScenario, WhiteLightScenario};
use fpcav_core::Error;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Map, Value};
use std::path::Path;

/// Outcome of checking one file without running anything.
pub struct Report {
    pub kind: &'static str,
    pub diagnostics: Vec<Diagnostic>,
    pub defaulted: Vec<String>,
    pub effective: Option<Value>,
}

impl Report {
    fn failed(kind: &'static str, d: Diagnostic) -> Self {
        Self {
            kind,
            diagnostics: vec![d],
            defaulted: Vec::new(),
            effective: None,
        }
    }

    pub fn to_json(&self, path: &str) -> Value {
        json!({
            "file": path,
            "kind": self.kind,
            "valid": self.diagnostics.is_empty(),
            "diagnostics": self.diagnostics,
            "defaulted": self.defaulted,
            "effective": self.effective,
        })
    }
}

fn line_of(text: &str, pos: usize) -> usize {
    text[..pos].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Line of the last key of a dotted path, found by scanning for each key in
/// turn. Array indices are skipped.
fn locate(text: &str, path: &str) -> Option<usize> {
    let mut pos = 0;
    let mut found = false;
    for seg in path.split('.') {
        let key = seg.split('[').next().unwrap_or(seg);
        if key.is_empty() || key.chars().all(|c| c.is_ascii_digit()) {
            continue;
        }
        match text[pos..].find(&format!("\"{key}\"")) {
            Some(i) => {
                pos += i;
                found = true;
            }
            None => break,
        }
    }
    found.then(|| line_of(text, pos))
}

fn kind_of(e: &Error) -> &'static str {
    match e {
        Error::Unit(_) => "unit",
        Error::Domain(_) => "domain",
        _ => "schema",
    }
}

fn diagnostic(text: &str, field: Option<String>, kind: &'static str, message: String) -> Diagnostic {
    Diagnostic {
        kind,
        line: field.as_deref().and_then(|f| locate(text, f)),
        field,
        message,
    }
}

/// Deserializes with the failing field path; `prefix` is prepended to it.
fn typed<T: DeserializeOwned>(text: &str, value: Value, prefix: &str) -> Result<T, Diagnostic> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let field = match (prefix.is_empty(), path == ".") {
            (true, _) => path,
            (false, true) => prefix.to_string(),
            (false, false) => format!("{prefix}.{path}"),
        };
        let message = e.inner().to_string();
        let kind = if message.contains("unit error") {
            "unit"
        } else {
            "schema"
        };
        diagnostic(text, Some(field), kind, message)
    })
}

/// Keys filled in by serde defaults: present after a round trip but absent
/// from the source.
fn added_keys(source: &Value, full: &Value, prefix: &str, out: &mut Vec<String>) {
    if let (Value::Object(a), Value::Object(b)) = (source, full) {
        for (k, v) in b {
            let path = if prefix.is_empty() {
                k.clone()
            } else {
                format!("{prefix}.{k}")
            };
            match a.get(k) {
                None if !v.is_null() => out.push(path),
                Some(sv) => added_keys(sv, v, &path, out),
                None => {}
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioHeader {
    version: u32,
    #[allow(dead_code)]
    name: String,
    #[serde(default)]
    #[allow(dead_code)]
    description: String,
    scenario: Map<String, Value>,
}

fn scenario(text: &str, value: Value) -> Report {
    const KIND: &str = "scenario";
    let header: ScenarioHeader = match typed(text, value.clone(), "") {
        Ok(h) => h,
        Err(d) => return Report::failed(KIND, d),
    };
    if header.version != fpcav_core::synth::SCENARIO_FORMAT_VERSION {
        let msg = format!("unsupported scenario version {}", header.version);
        return Report::failed(KIND, diagnostic(text, Some("version".into()), "schema", msg));
    }
    let mut body = header.scenario.clone();
    let kind = body.remove("kind").and_then(|k| k.as_str().map(String::from));
    let body = Value::Object(body);
    let parsed = match kind.as_deref() {
        Some("vibration") => typed::<VibrationScenario>(text, body, "scenario").map(Scenario::Vibration),
        Some("scan") => typed::<ScanScenario>(text, body, "scenario").map(Scenario::Scan),
        Some("white-light") => typed::<WhiteLightScenario>(text, body, "scenario").map(Scenario::WhiteLight),
        Some("odmr") => typed::<OdmrScenario>(text, body, "scenario").map(Scenario::Odmr),
        other => Err(diagnostic(
            text,
            Some("scenario.kind".into()),
            "schema",
            format!("unknown scenario kind {other:?}; expected vibration, scan, white-light or odmr"),
        )),
    };
    let parsed = match parsed {
        Ok(s) => s,
        Err(d) => return Report::failed(KIND, d),
    };
    if let Err(e) = parsed.validate() {
        return Report::failed(
            KIND,
            diagnostic(text, Some("scenario".into()), kind_of(&e), e.to_string()),
        );
    }
    let file: ScenarioFile = serde_json::from_value(value.clone()).expect("validated above");
    let full = serde_json::to_value(&file).expect("scenario serializes");
    let mut defaulted = Vec::new();
    added_keys(&value, &full, "", &mut defaulted);
    Report {
        kind: KIND,
        diagnostics: Vec::new(),
        defaulted,
        effective: Some(full),
    }
}

fn presets(text: &str, value: Value) -> Report {
    const KIND: &str = "presets";
    if let Err(d) = typed::<PresetRegistry>(text, value, "") {
        return Report::failed(KIND, d);
    }
    match PresetRegistry::from_json(text) {
        Ok(_) => Report {
            kind: KIND,
            diagnostics: Vec::new(),
            defaulted: Vec::new(),
            effective: None,
        },
        Err(e) => Report::failed(
            KIND,
            diagnostic(text, Some("presets".into()), kind_of(&e), e.to_string()),
        ),
    }
}

fn run_config(text: &str, value: Value, prefix: &str) -> Report {
    const KIND: &str = "run-config";
    let config: RunConfig = match typed(text, value, prefix) {
        Ok(c) => c,
        Err(d) => return Report::failed(KIND, d),
    };
    let field = |f: &str| {
        if prefix.is_empty() {
            f.to_string()
        } else {
            format!("{prefix}.{f}")
        }
    };
    if config.version != CONFIG_VERSION {
        let msg = format!("unsupported config version {}", config.version);
        return Report::failed(KIND, diagnostic(text, Some(field("version")), "schema", msg));
    }
    let resolved = match commands::resolve(&config.command, config.params, config.defaulted) {
        Ok(r) => r,
        Err(e) => {
            let f = match e.field.as_deref() {
                Some("command") => field("command"),
                Some(p) => field(&format!("params.{p}")),
                None => field("params"),
            };
            return Report::failed(KIND, diagnostic(text, Some(f), kind_of(&e.error), e.error.to_string()));
        }
    };
    let diagnostics: Vec<Diagnostic> = resolved
        .inputs
        .iter()
        .filter(|p| p.as_str() != "-" && !Path::new(p).exists())
        .map(|p| Diagnostic {
            kind: "existence",
            field: Some(field("params")),
            line: locate(text, &format!("{}.{p}", field("params"))),
            message: format!("input file not found: {p}"),
        })
        .collect();
    Report {
        kind: KIND,
        diagnostics,
        defaulted: resolved.defaulted.clone(),
        effective: Some(Value::Object(resolved.params.clone())),
    }
}

/// Schema, unit and existence checks. Accepts scenario files, preset
/// registries, run configs and result documents.
pub fn validate(path: &str) -> Report {
    if !Path::new(path).exists() {
        return Report::failed(
            "unknown",
            Diagnostic {
                kind: "existence",
                field: None,
                line: None,
                message: format!("file not found: {path}"),
            },
        );
    }
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            return Report::failed(
                "unknown",
                Diagnostic {
                    kind: "existence",
                    field: None,
                    line: None,
                    message: format!("cannot read {path}: {e}"),
                },
            )
        }
    };
    let value: Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            return Report::failed(
                "unknown",
                Diagnostic {
                    kind: "parse",
                    field: None,
                    line: Some(e.line()),
                    message: e.to_string(),
                },
            )
        }
    };
    let has = |k: &str| value.get(k).is_some();
    if has("scenario") {
        scenario(&text, value)
    } else if has("presets") {
        presets(&text, value)
    } else if has("command") && has("params") {
        run_config(&text, value, "")
    } else if has("config") && has("result") {
        let config = value["config"].clone();
        let mut r = run_config(&text, config, "config");
        r.kind = "result";
        r
    } else {
        Report::failed(
            "unknown",
            Diagnostic {
                kind: "schema",
                field: None,
                line: None,
                message: "not a scenario, preset registry, run config or result document".into(),
            },
        )
    }
}
