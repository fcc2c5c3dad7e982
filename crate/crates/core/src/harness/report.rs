use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::deform::certify::CertificationReport;
use crate::harness::HarnessError;

/// Pretty JSON with every float written as `d.dddddddddddddddde±x` (17 significant digits).
struct Fixed17<'a>(PrettyFormatter<'a>);

impl Formatter for Fixed17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", fmt17(value))
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
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

/// A finite float with 17 significant digits; `inf`, `-inf` and `nan` otherwise.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON with 17-digit floats. Non-finite floats become `null`.
pub fn to_json17<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Fixed17(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser).expect("value serializes");
    out.push(b'\n');
    String::from_utf8(out).expect("utf-8 json")
}

/// The structured report document.
pub fn report_json(report: &CertificationReport) -> String {
    to_json17(report)
}

/// One row per μ: the first condition's minimum and argmin, then every condition's minimum.
pub fn report_table(report: &CertificationReport) -> String {
    let mut s = String::from("mu,min_margin,argmin_chart,argmin_x0,argmin_x1,argmin_x2,argmin_x3");
    for c in &report.conditions {
        s.push_str(",margin_");
        s.push_str(&c.condition);
    }
    s.push('\n');
    for r in &report.rows {
        let mut cells = vec![fmt17(r.mu), fmt17(r.min_margin), r.argmin_chart.to_string()];
        cells.extend(r.argmin_point.iter().map(|&x| fmt17(x)));
        cells.extend(r.margins.iter().map(|&x| fmt17(x)));
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn write(path: &Path, text: &str) -> Result<PathBuf, HarnessError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })?;
        }
    }
    std::fs::write(path, text).map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })?;
    Ok(path.to_path_buf())
}

/// Write the report document and/or the margin table; returns the files written.
pub fn emit_report(report: &CertificationReport, document: Option<&Path>, table: Option<&Path>) -> Result<Vec<PathBuf>, HarnessError> {
    let mut written = Vec::new();
    if let Some(p) = document {
        written.push(write(p, &report_json(report))?);
    }
    if let Some(p) = table {
        written.push(write(p, &report_table(report))?);
    }
    Ok(written)
}
