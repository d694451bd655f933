//! Canonical CSV traces.
//!
//! Floats use Rust's shortest round-trip representation, absent values are
//! empty fields, lines end with LF.

use std::fmt::Write as _;
use std::io::{self, Write as _};
use std::path::Path;

use penalty_splitting::IterationRecord;

pub const HEADER: &str = "n,lambda,beta,step_displacement,penalty_residual,fbf_gap,oracle_error_x,oracle_error_z";

fn push_float(out: &mut String, v: f64) {
    write!(out, "{v:?}").expect("writing to a String");
}

fn push_optional(out: &mut String, v: Option<f64>) {
    out.push(',');
    if let Some(v) = v {
        push_float(out, v);
    }
}

pub fn format_record(r: &IterationRecord) -> String {
    let mut line = r.n.to_string();
    for v in [r.lambda, r.beta, r.step_displacement, r.penalty_residual] {
        line.push(',');
        push_float(&mut line, v);
    }
    push_optional(&mut line, r.fbf_gap);
    push_optional(&mut line, r.oracle_error_x);
    push_optional(&mut line, r.oracle_error_z);
    line
}

pub fn format_trace(records: &[IterationRecord]) -> String {
    let mut out = String::with_capacity(HEADER.len() + 1 + records.len() * 96);
    out.push_str(HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format_record(r));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceParseError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for TraceParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "trace line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for TraceParseError {}

pub fn parse_trace(text: &str) -> Result<Vec<IterationRecord>, TraceParseError> {
    let mut lines = text.split_terminator('\n').enumerate();
    match lines.next() {
        Some((_, HEADER)) => {}
        _ => return Err(TraceParseError { line: 1, message: "missing or wrong header".into() }),
    }
    lines
        .map(|(i, line)| {
            let err = |message: String| TraceParseError { line: i + 1, message };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 8 {
                return Err(err(format!("expected 8 fields, found {}", fields.len())));
            }
            let float = |s: &str| s.parse::<f64>().map_err(|e| err(format!("bad number {s:?}: {e}")));
            let optional = |s: &str| if s.is_empty() { Ok(None) } else { float(s).map(Some) };
            Ok(IterationRecord {
                n: fields[0].parse().map_err(|e| err(format!("bad index {:?}: {e}", fields[0])))?,
                lambda: float(fields[1])?,
                beta: float(fields[2])?,
                step_displacement: float(fields[3])?,
                penalty_residual: float(fields[4])?,
                fbf_gap: optional(fields[5])?,
                oracle_error_x: optional(fields[6])?,
                oracle_error_z: optional(fields[7])?,
            })
        })
        .collect()
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_trace(records: &[IterationRecord], path: &Path) -> io::Result<()> {
    write_atomic(path, format_trace(records).as_bytes())
}
