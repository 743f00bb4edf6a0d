use fpcav_core::io::{read_curve, SampledCurve};
use fpcav_core::units::{parse_unit, Dimension};
use fpcav_core::{Error, Result};
use std::fs;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

/// `-` means stdin.
pub fn read_text(path: &str) -> Result<String> {
    if path == "-" {
        let mut text = String::new();
        io::stdin().lock().read_to_string(&mut text)?;
        Ok(text)
    } else {
        fs::read_to_string(path).map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{path}: {e}"))))
    }
}

/// Unit of one column: the declaration wins over the header, but the two
/// must agree when both are present. Returns the scale to SI.
fn column_scale(name: &str, declared: Option<&str>, header: Option<&str>, expected: Option<Dimension>) -> Result<f64> {
    let unit = match (declared, header) {
        (Some(d), Some(h)) if d.trim() != h.trim() => {
            return Err(Error::Unit(format!(
                "{name} column is declared as {d:?} but the file header says {h:?}"
            )))
        }
        (Some(u), _) | (None, Some(u)) => u,
        (None, None) => return Ok(1.0),
    };
    let (scale, dim) = parse_unit(unit).map_err(|e| Error::Unit(format!("{name} column: {e}")))?;
    if let Some(expected) = expected {
        if dim != expected && dim != Dimension::Dimensionless {
            return Err(Error::Unit(format!(
                "{name} column has unit {unit:?}, expected a {expected}"
            )));
        }
    }
    Ok(scale)
}

/// Reads a CSV or JSON curve and converts both columns to SI.
pub fn load_curve(
    path: &str,
    axis_unit: Option<&str>,
    value_unit: Option<&str>,
    axis_dim: Option<Dimension>,
    value_dim: Option<Dimension>,
) -> Result<SampledCurve> {
    let mut curve = read_curve(&read_text(path)?).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{path}: {m}")),
        other => other,
    })?;
    let ax = column_scale("axis", axis_unit, curve.axis_unit.as_deref(), axis_dim)?;
    let va = column_scale("value", value_unit, curve.value_unit.as_deref(), value_dim)?;
    if ax != 1.0 {
        curve.axis.iter_mut().for_each(|x| *x *= ax);
    }
    if va != 1.0 {
        curve.values.iter_mut().for_each(|v| *v *= va);
    }
    Ok(curve)
}

/// Column-oriented numeric table written as CSV.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            columns: vec![Vec::new(); header.len()],
        }
    }

    pub fn push(&mut self, row: &[f64]) {
        for (c, v) in self.columns.iter_mut().zip(row) {
            c.push(*v);
        }
    }

    pub fn write<W: Write>(&self, w: W) -> io::Result<()> {
        let mut w = BufWriter::new(w);
        writeln!(w, "{}", self.header.join(","))?;
        let rows = self.columns.first().map_or(0, Vec::len);
        let mut line = String::new();
        for i in 0..rows {
            line.clear();
            for (j, c) in self.columns.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{:e}", c[i]));
            }
            writeln!(w, "{line}")?;
        }
        w.flush()
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut fs::File) -> io::Result<()>) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    write(tmp.as_file_mut())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
