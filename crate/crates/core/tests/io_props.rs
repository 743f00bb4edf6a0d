use fpcav_core::io::{read_csv, read_curve, write_csv, SampledCurve};
use fpcav_core::units::{format_si, parse_as, parse_quantity, Dimension};
use proptest::prelude::*;
use std::io::Cursor;

#[test]
fn parses_compound_units() {
    assert!((parse_as("20MHz/pm", Dimension::FrequencyPerLength).unwrap() - 2e19).abs() < 1e4);
    assert!((parse_as("10 GHz/s", Dimension::FrequencyPerTime).unwrap() - 1e10).abs() < 1e-3);
    assert!((parse_as("36G", Dimension::MagneticField).unwrap() / 36e-4 - 1.0).abs() < 1e-15);
    assert_eq!(parse_as("25pm", Dimension::Length).unwrap(), 25e-12);
}

#[test]
fn dimension_mismatch_is_a_unit_error() {
    for (text, dim) in [
        ("25pm", Dimension::Frequency),
        ("25", Dimension::Length),
        ("3 furlongs", Dimension::Length),
    ] {
        assert_eq!(parse_as(text, dim).unwrap_err().class(), "unit", "{text}");
    }
}

#[test]
fn csv_requires_a_header() {
    assert_eq!(read_csv(Cursor::new("1,2\n3,4\n")).unwrap_err().class(), "parse");
    assert_eq!(
        read_csv(Cursor::new("t [s],x [m]\n1,nope\n")).unwrap_err().class(),
        "parse"
    );
}

fn curve() -> impl Strategy<Value = SampledCurve> {
    prop::collection::vec((-1e3f64..1e3, -1e-9f64..1e-9), 2..200).prop_map(|pts| {
        let axis = (0..pts.len()).map(|i| i as f64 * 1e-5 + pts[0].0).collect();
        SampledCurve::new(axis, pts.iter().map(|p| p.1).collect()).with_units("s", "m")
    })
}

proptest! {
    #[test]
    fn csv_round_trip(c in curve()) {
        let mut buf = Vec::new();
        write_csv(&mut buf, &c, "t", "x").unwrap();
        let back = read_csv(Cursor::new(buf)).unwrap();
        prop_assert_eq!(&back.axis, &c.axis);
        prop_assert_eq!(&back.values, &c.values);
        prop_assert_eq!(back.axis_unit.as_deref(), Some("s"));
    }

    #[test]
    fn json_round_trip(c in curve()) {
        let text = serde_json::to_string(&c).unwrap();
        let back = read_curve(&text).unwrap();
        prop_assert_eq!(&back.axis, &c.axis);
        prop_assert_eq!(&back.values, &c.values);
    }

    #[test]
    fn si_format_round_trip(v in -1e20f64..1e20) {
        for dim in [Dimension::Length, Dimension::Frequency, Dimension::Time, Dimension::Voltage] {
            prop_assert_eq!(parse_as(&format_si(v, dim), dim).unwrap(), v);
        }
    }

    #[test]
    fn prefixes_scale(v in 0.001f64..1e6) {
        let pm = parse_quantity(&format!("{v}pm")).unwrap().value;
        let nm = parse_quantity(&format!("{v}nm")).unwrap().value;
        prop_assert!((nm / pm - 1e3).abs() < 1e-9);
    }
}
