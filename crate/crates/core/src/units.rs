//! Quantities written as a number followed by a unit suffix: `25pm`,
//! `20MHz/pm`, `10GHz/s`, `3.7 um`. Values are converted to SI.

use crate::error::{Error, Result};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dimension {
    Dimensionless,
    Length,
    Frequency,
    Time,
    Voltage,
    MagneticField,
    /// Frequency per length, e.g. a dispersion slope.
    FrequencyPerLength,
    /// Frequency per time, e.g. a laser sweep rate.
    FrequencyPerTime,
    /// Voltage per time, e.g. a piezo ramp rate.
    VoltagePerTime,
}

impl Dimension {
    /// SI unit used when printing.
    pub fn si_unit(self) -> &'static str {
        match self {
            Dimension::Dimensionless => "",
            Dimension::Length => "m",
            Dimension::Frequency => "Hz",
            Dimension::Time => "s",
            Dimension::Voltage => "V",
            Dimension::MagneticField => "T",
            Dimension::FrequencyPerLength => "Hz/m",
            Dimension::FrequencyPerTime => "Hz/s",
            Dimension::VoltagePerTime => "V/s",
        }
    }

    fn ratio(num: Dimension, den: Dimension) -> Option<Dimension> {
        match (num, den) {
            (d, Dimension::Dimensionless) => Some(d),
            (Dimension::Frequency, Dimension::Length) => Some(Dimension::FrequencyPerLength),
            (Dimension::Frequency, Dimension::Time) => Some(Dimension::FrequencyPerTime),
            (Dimension::Voltage, Dimension::Time) => Some(Dimension::VoltagePerTime),
            _ => None,
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Dimension::Dimensionless => "dimensionless",
            Dimension::Length => "length",
            Dimension::Frequency => "frequency",
            Dimension::Time => "time",
            Dimension::Voltage => "voltage",
            Dimension::MagneticField => "magnetic field",
            Dimension::FrequencyPerLength => "frequency per length",
            Dimension::FrequencyPerTime => "frequency per time",
            Dimension::VoltagePerTime => "voltage per time",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    /// Value in SI units.
    pub value: f64,
    pub dimension: Dimension,
}

fn simple_unit(unit: &str) -> Option<(f64, Dimension)> {
    use Dimension::*;
    let u = match unit {
        "m" => (1.0, Length),
        "mm" => (1e-3, Length),
        "um" | "µm" | "μm" => (1e-6, Length),
        "nm" => (1e-9, Length),
        "pm" => (1e-12, Length),
        "fm" => (1e-15, Length),
        "Hz" => (1.0, Frequency),
        "kHz" => (1e3, Frequency),
        "MHz" => (1e6, Frequency),
        "GHz" => (1e9, Frequency),
        "THz" => (1e12, Frequency),
        "s" => (1.0, Time),
        "ms" => (1e-3, Time),
        "us" | "µs" | "μs" => (1e-6, Time),
        "ns" => (1e-9, Time),
        "min" => (60.0, Time),
        "V" => (1.0, Voltage),
        "mV" => (1e-3, Voltage),
        "uV" | "µV" | "μV" => (1e-6, Voltage),
        "T" => (1.0, MagneticField),
        "mT" => (1e-3, MagneticField),
        "G" => (1e-4, MagneticField),
        "mG" => (1e-7, MagneticField),
        _ => return None,
    };
    Some(u)
}

/// Scale factor to SI and dimension of a unit string such as `MHz/pm`.
pub fn parse_unit(unit: &str) -> Result<(f64, Dimension)> {
    let unit = unit.trim();
    if unit.is_empty() {
        return Ok((1.0, Dimension::Dimensionless));
    }
    let unknown = || Error::Unit(format!("unknown unit {unit:?}"));
    match unit.split_once('/') {
        None => simple_unit(unit).ok_or_else(unknown),
        Some((num, den)) => {
            let (a, da) = simple_unit(num.trim()).ok_or_else(unknown)?;
            let (b, db) = simple_unit(den.trim()).ok_or_else(unknown)?;
            let dim = Dimension::ratio(da, db).ok_or_else(unknown)?;
            Ok((a / b, dim))
        }
    }
}

/// Parses `<number><unit>`; whitespace between the two is allowed.
pub fn parse_quantity(text: &str) -> Result<Quantity> {
    let text = text.trim();
    let split = number_prefix_len(text);
    let (number, unit) = text.split_at(split);
    let value: f64 = number
        .parse()
        .map_err(|_| Error::Unit(format!("cannot read a number from {text:?}")))?;
    let (scale, dimension) = parse_unit(unit)?;
    Ok(Quantity {
        value: value * scale,
        dimension,
    })
}

fn number_prefix_len(text: &str) -> usize {
    let b = text.as_bytes();
    let digits = |mut i: usize, dot: bool| {
        while i < b.len() && (b[i].is_ascii_digit() || (dot && b[i] == b'.')) {
            i += 1;
        }
        i
    };
    let sign = |i: usize| usize::from(i < b.len() && matches!(b[i], b'+' | b'-'));
    let mut i = digits(sign(0), true);
    if i < b.len() && matches!(b[i], b'e' | b'E') {
        let j = i + 1 + sign(i + 1);
        if j < b.len() && b[j].is_ascii_digit() {
            i = digits(j, false);
        }
    }
    i
}

/// Parses a quantity and checks its dimension. A bare number is accepted
/// only for dimensionless quantities.
pub fn parse_as(text: &str, expected: Dimension) -> Result<f64> {
    let q = parse_quantity(text)?;
    if q.dimension != expected {
        return Err(Error::Unit(if q.dimension == Dimension::Dimensionless {
            format!(
                "{text:?} has no unit; expected a {expected} such as {}",
                example(expected)
            )
        } else {
            format!("{text:?} is a {}, expected a {expected}", q.dimension)
        }));
    }
    Ok(q.value)
}

fn example(dim: Dimension) -> &'static str {
    match dim {
        Dimension::Dimensionless => "1.5",
        Dimension::Length => "25pm",
        Dimension::Frequency => "1GHz",
        Dimension::Time => "10s",
        Dimension::Voltage => "1mV",
        Dimension::MagneticField => "36G",
        Dimension::FrequencyPerLength => "20MHz/pm",
        Dimension::FrequencyPerTime => "10GHz/s",
        Dimension::VoltagePerTime => "2V/s",
    }
}

/// Writes an SI value with its unit, e.g. `2.5e-11m`.
pub fn format_si(value: f64, dimension: Dimension) -> String {
    format!("{value:e}{}", dimension.si_unit())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawQuantity {
    Number(f64),
    Text(String),
}

/// Accepts a bare number (taken as SI) or a string with a unit.
pub fn deserialize_quantity<'de, D: Deserializer<'de>>(deserializer: D, dimension: Dimension) -> Result<f64, D::Error> {
    match RawQuantity::deserialize(deserializer)
        .map_err(|_| D::Error::custom(format!("expected a {dimension} such as {:?}", example(dimension))))?
    {
        RawQuantity::Number(v) => Ok(v),
        RawQuantity::Text(t) => parse_as(&t, dimension).map_err(|e| D::Error::custom(e.to_string())),
    }
}

macro_rules! quantity_serde {
    ($($name:ident => $dim:expr),* $(,)?) => {$(
        /// Serde adapter: number in SI or string with unit.
        pub mod $name {
            use super::*;

            pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&format_si(*v, $dim))
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
                deserialize_quantity(d, $dim)
            }

            pub mod option {
                use super::super::*;

                pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
                    match v {
                        Some(v) => s.serialize_str(&format_si(*v, $dim)),
                        None => s.serialize_none(),
                    }
                }

                pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
                    Ok(Some(deserialize_quantity(d, $dim)?))
                }
            }

            pub mod vec {
                use super::super::*;

                pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
                    s.collect_seq(v.iter().map(|x| format_si(*x, $dim)))
                }

                pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
                    struct Item(f64);
                    impl<'de> Deserialize<'de> for Item {
                        fn deserialize<D2: Deserializer<'de>>(d: D2) -> Result<Self, D2::Error> {
                            deserialize_quantity(d, $dim).map(Item)
                        }
                    }
                    Ok(Vec::<Item>::deserialize(d)?.into_iter().map(|i| i.0).collect())
                }
            }
        }
    )*};
}

quantity_serde! {
    length => Dimension::Length,
    frequency => Dimension::Frequency,
    time => Dimension::Time,
    voltage => Dimension::Voltage,
    frequency_per_length => Dimension::FrequencyPerLength,
    frequency_per_time => Dimension::FrequencyPerTime,
}
