//! Deterministic JSON and CSV emission with a metadata header.
//!
//! Floats are written with 17 significant digits in exponent form, which
//! round-trips every f64 exactly and does not depend on the platform.

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};
use serde_value::Value as Raw;
use std::io::{self, Write};

use crate::error::CliError;

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Wraps a serde_json formatter and replaces its float output.
struct FixedFloat<F>(F);

impl<F: Formatter> Formatter for FixedFloat<F> {
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        w.write_all(format_float(v as f64).as_bytes())
    }
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(format_float(v).as_bytes())
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

fn write_with<F: Formatter, T: Serialize>(value: &T, f: F) -> Result<String, CliError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloat(f));
    value.serialize(&mut ser).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn to_pretty<T: Serialize>(value: &T) -> Result<String, CliError> {
    write_with(value, PrettyFormatter::with_indent(b"  "))
}

pub fn to_compact<T: Serialize>(value: &T) -> Result<String, CliError> {
    write_with(value, CompactFormatter)
}

/// Path of the first NaN or infinity inside `value`, if any. serde_json
/// would silently write these as null.
fn non_finite(v: &Raw, path: &str) -> Option<String> {
    match v {
        Raw::F64(x) if !x.is_finite() => Some(path.to_string()),
        Raw::F32(x) if !x.is_finite() => Some(path.to_string()),
        Raw::Seq(items) => items.iter().enumerate().find_map(|(i, x)| non_finite(x, &format!("{path}[{i}]"))),
        Raw::Map(m) => m.iter().find_map(|(k, x)| {
            let key = match k {
                Raw::String(s) => s.clone(),
                other => format!("{other:?}"),
            };
            non_finite(x, &format!("{path}.{key}"))
        }),
        Raw::Option(Some(x)) | Raw::Newtype(x) => non_finite(x, path),
        _ => None,
    }
}

/// Converts a result to JSON, refusing non-finite floats.
pub fn finite_json<T: Serialize>(value: &T) -> Result<serde_json::Value, CliError> {
    let raw = serde_value::to_value(value).map_err(|e| CliError::Io(e.to_string()))?;
    if let Some(path) = non_finite(&raw, "result") {
        return Err(CliError::Violation(format!("non-finite value at {path}; NaN and infinity are not valid JSON")));
    }
    serde_json::to_value(value).map_err(|e| CliError::Io(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// CSV body with `# ` comment lines in front.
    pub fn to_csv(&self, comments: &[String]) -> Result<String, CliError> {
        let mut out = String::new();
        for c in comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for (r, row) in self.rows.iter().enumerate() {
            let cells = row
                .iter()
                .enumerate()
                .map(|(c, cell)| match *cell {
                    Cell::Int(v) => Ok(v.to_string()),
                    Cell::Float(v) if v.is_finite() => Ok(format_float(v)),
                    Cell::Float(_) => Err(CliError::Violation(format!(
                        "non-finite value in row {r}, column {}",
                        self.columns[c]
                    ))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_at_17_digits() {
        for x in [0.1, -1.0, std::f64::consts::PI, 1e-300, 6.02214076e23, 0.0, -0.0, f64::MIN_POSITIVE] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
            let json: f64 = serde_json::from_str(&s).unwrap();
            assert_eq!(json.to_bits(), x.to_bits());
        }
        assert_eq!(format_float(-1.0), "-1.0000000000000000e0");
    }

    #[test]
    fn nan_is_rejected_with_its_path() {
        #[derive(Serialize)]
        struct Inner {
            v: Vec<f64>,
        }
        #[derive(Serialize)]
        struct Outer {
            ok: f64,
            inner: Option<Inner>,
        }
        let bad = Outer { ok: 1.0, inner: Some(Inner { v: vec![0.0, f64::NAN] }) };
        match finite_json(&bad) {
            Err(CliError::Violation(m)) => assert!(m.contains("result.inner.v[1]"), "{m}"),
            other => panic!("{other:?}"),
        }
        let good = Outer { ok: 1.0, inner: None };
        assert!(finite_json(&good).is_ok());
        let mut t = Table::new(&["x"]);
        t.push(vec![Cell::Float(f64::INFINITY)]);
        assert!(t.to_csv(&[]).is_err());
    }

    #[test]
    fn pretty_output_is_stable_json() {
        let v = serde_json::json!({"a": [1.5, 2], "b": {"c": -0.25}});
        let s = to_pretty(&v).unwrap();
        assert!(s.contains("1.5000000000000000e0"));
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        assert_eq!(to_pretty(&v).unwrap(), s);
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["norm_sq", "count"]);
        t.push(vec![Cell::Int(0), Cell::Int(1)]);
        t.push(vec![Cell::Int(1), Cell::Float(4.0)]);
        let s = t.to_csv(&["meta".into()]).unwrap();
        assert_eq!(s, "# meta\nnorm_sq,count\n0,1\n1,4.0000000000000000e0\n");
    }
}
