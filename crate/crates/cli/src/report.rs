//! Suite reports and their JSON / CSV / text renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{CliError, CliResult};

pub const SCHEMA: &str = "polymet-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema: String,
    pub suite: String,
    pub generated_at: String,
    pub overall_pass: bool,
    pub checks: Vec<CheckRecord>,
    pub tables: Vec<Table>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub values: BTreeMap<String, f64>,
    /// `None` for exact (integer or boolean) checks.
    pub tolerance: Option<f64>,
    pub pass: bool,
    /// Error raised while running the check, if any.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Canonical echo of the effective configuration.
    pub config: String,
    pub seed: Option<u64>,
    pub resolutions: BTreeMap<String, Vec<usize>>,
    pub version: String,
}

impl SuiteReport {
    pub fn recompute_pass(&mut self) {
        self.overall_pass = self.checks.iter().all(|c| c.pass);
    }

    pub fn failed(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl Format {
    pub fn parse(s: &str) -> CliResult<Format> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            other => Err(CliError::Usage(format!("unknown format `{other}` (json, csv or text)"))),
        }
    }
}

/// Pretty JSON with every float written to 17 significant digits.
pub struct CanonicalFormatter {
    inner: PrettyFormatter<'static>,
}

impl CanonicalFormatter {
    pub fn new() -> CanonicalFormatter {
        CanonicalFormatter { inner: PrettyFormatter::with_indent(b"  ") }
    }
}

impl Default for CanonicalFormatter {
    fn default() -> Self {
        Self::new()
    }
}

impl Formatter for CanonicalFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Canonical JSON of any serializable value.
pub fn to_canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, CanonicalFormatter::new());
    value.serialize(&mut ser).expect("serializing to memory cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

pub fn parse_report(text: &str) -> CliResult<SuiteReport> {
    let r: SuiteReport = serde_json::from_str(text).map_err(|e| CliError::Report(e.to_string()))?;
    if r.schema != SCHEMA {
        return Err(CliError::Report(format!("unsupported schema `{}`", r.schema)));
    }
    Ok(r)
}

fn join_values(values: &BTreeMap<String, f64>) -> String {
    values.iter().map(|(k, v)| format!("{k}={v:.16e}")).collect::<Vec<_>>().join(";")
}

pub fn to_csv(report: &SuiteReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let row = |w: &mut csv::Writer<Vec<u8>>, r: [&str; 6]| w.write_record(r).expect("writing to memory cannot fail");
    row(&mut w, ["suite", "check", "pass", "tolerance", "values", "error"]);
    for c in &report.checks {
        let tol = c.tolerance.map(|t| format!("{t:.16e}")).unwrap_or_default();
        let values = join_values(&c.values);
        let pass = if c.pass { "true" } else { "false" };
        row(&mut w, [&report.suite, &c.name, pass, &tol, &values, c.error.as_deref().unwrap_or("")]);
    }
    String::from_utf8(w.into_inner().expect("flushing memory cannot fail")).expect("CSV is UTF-8")
}

fn short(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e9 {
        format!("{v}")
    } else {
        format!("{v:.6e}")
    }
}

pub fn to_text(report: &SuiteReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "suite {} ({}), generated {}", report.suite, report.schema, report.generated_at);
    if let Some(seed) = report.provenance.seed {
        let _ = writeln!(s, "seed {seed}");
    }
    for c in &report.checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        let values: Vec<String> = c.values.iter().map(|(k, v)| format!("{k}={}", short(*v))).collect();
        let tol = c.tolerance.map(|t| format!(" tol={t:e}")).unwrap_or_default();
        let _ = writeln!(s, "{status} {}{tol}: {}", c.name, values.join(", "));
        if let Some(e) = &c.error {
            let _ = writeln!(s, "     error: {e}");
        }
    }
    for t in &report.tables {
        let _ = writeln!(s, "\ntable {}", t.name);
        let _ = writeln!(s, "  {}", t.columns.join("\t"));
        for r in &t.rows {
            let cells: Vec<String> = r.iter().map(|v| short(*v)).collect();
            let _ = writeln!(s, "  {}", cells.join("\t"));
        }
    }
    let passed = report.checks.iter().filter(|c| c.pass).count();
    let _ = writeln!(
        s,
        "\noverall: {} ({passed}/{} checks passed)",
        if report.overall_pass { "PASS" } else { "FAIL" },
        report.checks.len()
    );
    s
}

pub fn render(report: &SuiteReport, format: Format) -> String {
    match format {
        Format::Json => to_canonical_json(report),
        Format::Csv => to_csv(report),
        Format::Text => to_text(report),
    }
}

pub fn timestamp() -> String {
    humantime::format_rfc3339_seconds(std::time::SystemTime::now()).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample() -> SuiteReport {
        let mut values = BTreeMap::new();
        values.insert("max_residual".to_string(), 1.0 / 3.0);
        values.insert("trials".to_string(), 20.0);
        let mut resolutions = BTreeMap::new();
        resolutions.insert("torus".to_string(), vec![32, 32]);
        SuiteReport {
            schema: SCHEMA.into(),
            suite: "gauge".into(),
            generated_at: "2026-01-01T00:00:00Z".into(),
            overall_pass: false,
            checks: vec![
                CheckRecord { name: "gauge.adjoint".into(), values, tolerance: Some(1e-6), pass: true, error: None },
                CheckRecord {
                    name: "gauge.slice".into(),
                    values: BTreeMap::new(),
                    tolerance: None,
                    pass: false,
                    error: Some("solver did not converge, \"badly\"".into()),
                },
            ],
            tables: vec![Table { name: "t".into(), columns: vec!["a".into(), "b".into()], rows: vec![vec![0.1, -2.5e-300]] }],
            provenance: Provenance { config: "suite = gauge\nseed = 1\n".into(), seed: Some(1), resolutions, version: "0.1.0".into() },
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let r = sample();
        let text = to_canonical_json(&r);
        assert_eq!(parse_report(&text).unwrap(), r);
        assert!(text.contains("3.3333333333333331e-1"), "{text}");
    }

    #[test]
    fn csv_has_one_row_per_check() {
        let r = sample();
        let csv = to_csv(&r);
        let mut rd = csv::Reader::from_reader(csv.as_bytes());
        let rows: Vec<csv::StringRecord> = rd.records().map(|x| x.unwrap()).collect();
        assert_eq!(rows.len(), r.checks.len());
        assert_eq!(csv.lines().count(), r.checks.len() + 1);
        assert_eq!(&rows[1][5], "solver did not converge, \"badly\"");
    }

    #[test]
    fn text_has_overall_line() {
        let text = to_text(&sample());
        assert!(text.lines().any(|l| l.starts_with("overall: FAIL")));
        assert!(text.contains("PASS gauge.adjoint") && text.contains("FAIL gauge.slice"));
    }

    #[test]
    fn other_schema_rejected() {
        let text = to_canonical_json(&sample()).replace(SCHEMA, "polymet-report/0");
        assert!(matches!(parse_report(&text), Err(CliError::Report(_))));
    }
}
