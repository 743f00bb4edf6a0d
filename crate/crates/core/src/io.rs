//! Trace and spectrum files.
//!
//! Two formats are accepted:
//!
//! - CSV: comma separated, `.` decimal point, one header row, first column
//!   the axis and second column the value. Header cells may carry a unit in
//!   brackets, e.g. `time [s],signal [V]`.
//! - JSON envelope: `{axis_unit, value_unit, sample_rate, meta, axis, values}`
//!   where `axis` may be omitted when `sample_rate` is given.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::io::{BufRead, Write};

/// One-dimensional sampled data with an explicit axis.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampledCurve {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis_unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub meta: Map<String, Value>,
    #[serde(default)]
    pub axis: Vec<f64>,
    pub values: Vec<f64>,
}

impl SampledCurve {
    pub fn new(axis: Vec<f64>, values: Vec<f64>) -> Self {
        Self {
            axis,
            values,
            ..Self::default()
        }
    }

    pub fn with_units(mut self, axis_unit: &str, value_unit: &str) -> Self {
        self.axis_unit = Some(axis_unit.to_string());
        self.value_unit = Some(value_unit.to_string());
        self
    }

    /// Uniformly sampled time series starting at `t = 0`.
    pub fn from_samples(values: Vec<f64>, sample_rate: f64) -> Self {
        let axis = (0..values.len()).map(|i| i as f64 / sample_rate).collect();
        Self {
            sample_rate: Some(sample_rate),
            axis,
            values,
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Fills a missing axis from `sample_rate` and checks consistency.
    pub fn validate(&mut self) -> Result<()> {
        if self.axis.is_empty() {
            let rate = self
                .sample_rate
                .ok_or_else(|| Error::Parse("curve has neither an axis nor a sample rate".into()))?;
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(Error::domain(format!("sample rate must be positive, got {rate}")));
            }
            self.axis = (0..self.values.len()).map(|i| i as f64 / rate).collect();
        }
        if self.axis.len() != self.values.len() {
            return Err(Error::Parse(format!(
                "axis has {} entries but values has {}",
                self.axis.len(),
                self.values.len()
            )));
        }
        if let Some(i) = self.values.iter().chain(&self.axis).position(|v| !v.is_finite()) {
            return Err(Error::Parse(format!("non-finite entry at position {i}")));
        }
        Ok(())
    }

    /// Sample rate of a uniformly spaced axis. Errors when spacing varies by
    /// more than 0.1% of the mean step.
    pub fn uniform_sample_rate(&self) -> Result<f64> {
        if let (Some(rate), true) = (self.sample_rate, self.axis.is_empty()) {
            return Ok(rate);
        }
        uniform_sample_rate(&self.axis)
    }
}

pub fn uniform_sample_rate(axis: &[f64]) -> Result<f64> {
    if axis.len() < 2 {
        return Err(Error::InsufficientData("at least two samples are needed".into()));
    }
    let n = axis.len();
    let step = (axis[n - 1] - axis[0]) / (n - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::domain("axis must be strictly increasing"));
    }
    for (i, w) in axis.windows(2).enumerate() {
        if ((w[1] - w[0]) - step).abs() > 1e-3 * step {
            return Err(Error::domain(format!(
                "non-uniform sampling: step {:e} at row {} differs from mean step {step:e}",
                w[1] - w[0],
                i + 1
            )));
        }
    }
    Ok(1.0 / step)
}

fn header_unit(cell: &str) -> Option<String> {
    let open = cell.find('[')?;
    let close = cell[open..].find(']')? + open;
    Some(cell[open + 1..close].trim().to_string())
}

/// Reads a two-column CSV with a header row.
pub fn read_csv<R: BufRead>(reader: R) -> Result<SampledCurve> {
    let mut lines = reader.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, line)) => {
                let line = line?;
                if !line.trim().is_empty() {
                    break line;
                }
            }
            None => return Err(Error::Parse("empty CSV input".into())),
        }
    };
    let cells: Vec<&str> = header.split(',').collect();
    if cells.len() < 2 {
        return Err(Error::Parse("CSV header must name two columns".into()));
    }
    if cells[0].trim().parse::<f64>().is_ok() {
        return Err(Error::Parse("CSV header row is required".into()));
    }
    let mut curve = SampledCurve {
        axis_unit: header_unit(cells[0]),
        value_unit: header_unit(cells[1]),
        ..SampledCurve::default()
    };
    for (lineno, line) in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split(',');
        let mut field = |what: &str| -> Result<f64> {
            let cell = it
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: missing {what} column", lineno + 1)))?;
            cell.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: cannot parse {what} {:?}", lineno + 1, cell.trim())))
        };
        curve.axis.push(field("axis")?);
        curve.values.push(field("value")?);
    }
    curve.validate()?;
    Ok(curve)
}

pub fn write_csv<W: Write>(mut writer: W, curve: &SampledCurve, axis_name: &str, value_name: &str) -> Result<()> {
    let label = |name: &str, unit: &Option<String>| match unit {
        Some(u) if !u.is_empty() => format!("{name} [{u}]"),
        _ => name.to_string(),
    };
    writeln!(
        writer,
        "{},{}",
        label(axis_name, &curve.axis_unit),
        label(value_name, &curve.value_unit)
    )?;
    for (x, y) in curve.axis.iter().zip(&curve.values) {
        writeln!(writer, "{x:e},{y:e}")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_json(text: &str) -> Result<SampledCurve> {
    let mut curve: SampledCurve = serde_json::from_str(text)?;
    curve.validate()?;
    Ok(curve)
}

/// Reads either format, choosing JSON when the first non-blank byte is `{`.
pub fn read_curve(text: &str) -> Result<SampledCurve> {
    if text.trim_start().starts_with('{') {
        read_json(text)
    } else {
        read_csv(text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let curve = SampledCurve::from_samples(vec![1.0, -2.5, 3.25e-12, 4.0], 1e5).with_units("s", "m");
        let mut buf = Vec::new();
        write_csv(&mut buf, &curve, "time", "displacement").unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("time [s],displacement [m]\n"));
        let back = read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.values, curve.values);
        assert_eq!(back.axis, curve.axis);
        assert_eq!(back.axis_unit.as_deref(), Some("s"));
        assert!((back.uniform_sample_rate().unwrap() - 1e5).abs() < 1e-6);
    }

    #[test]
    fn csv_errors() {
        assert_eq!(read_csv("1,2\n3,4\n".as_bytes()).unwrap_err().class(), "parse");
        assert_eq!(read_csv("t,v\n1,2\n3,x\n".as_bytes()).unwrap_err().class(), "parse");
        assert_eq!(read_csv("".as_bytes()).unwrap_err().class(), "parse");
    }

    #[test]
    fn json_envelope_without_axis() {
        let curve = read_curve(
            r#"{"axis_unit":"s","value_unit":"V","sample_rate":4.0,"meta":{"detector":"pd"},"values":[1,2,3]}"#,
        )
        .unwrap();
        assert_eq!(curve.axis, vec![0.0, 0.25, 0.5]);
        assert_eq!(curve.meta["detector"], "pd");
        assert!(read_curve(r#"{"values":[1,2],"bogus":1}"#).is_err());
    }

    #[test]
    fn non_uniform_axis() {
        let err = uniform_sample_rate(&[0.0, 1.0, 2.0, 3.5, 4.0]).unwrap_err();
        assert_eq!(err.class(), "domain");
    }
}
