//! CSV and JSON writers. Every file starts with the run metadata, so each
//! output can be traced back to the exact scenario that produced it.
//!
//! CSV files carry the metadata on leading `#` lines; floats are written
//! with 17 significant digits so values round-trip exactly.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::diagnostics::DiagnosticsRecord;
use crate::domain::PhysicalField;
use crate::error::Error;
use crate::scenario::Scenario;
use crate::study::{ConvergenceReport, SweepRow};

pub const NORMS_HEADER: &str = "t,l2,h1,weighted_exp,weighted_q,conservation_residual,picard_iters";
pub const SNAPSHOT_HEADER: &str = "xi,re,im,abs";
pub const SWEEP_HEADER: &str = "x0,xf,length,delta_l2";

/// Conventions in effect for a run, spelled out in every output.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Conventions {
    pub advection: &'static str,
    pub delta_l2: &'static str,
    pub h1: &'static str,
    pub boundary: &'static str,
    pub norms: &'static str,
}

pub const CONVENTIONS: Conventions = Conventions {
    advection: "u_t + L u_x with L(x,t) = -alpha'(t) p(t) + x (ln p)'(t), p = 1/(beta - alpha)",
    delta_l2: "max over steps of (l2 at t=0) - (l2 at step n), never negative",
    h1: "sqrt(l2^2 + l2(forward difference)^2)",
    boundary: "nodes 0, M-1 and M held at zero by identity rows in every solve",
    norms: "discrete norms on the computational grid over [0, 1]",
};

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunMetadata {
    pub program: &'static str,
    pub version: &'static str,
    pub mode: String,
    pub conventions: Conventions,
    /// The scenario with every default and command-line override applied.
    pub scenario: Scenario,
}

impl RunMetadata {
    pub fn new(mode: impl Into<String>, scenario: &Scenario) -> Self {
        RunMetadata {
            program: "hnls",
            version: env!("CARGO_PKG_VERSION"),
            mode: mode.into(),
            conventions: CONVENTIONS,
            scenario: scenario.clone(),
        }
    }

    /// `#`-prefixed lines for the top of a CSV file.
    pub fn csv_preamble(&self) -> String {
        let json = serde_json::to_string(self).expect("metadata serialises");
        format!("# {} {}\n# metadata {}\n", self.program, self.version, json)
    }
}

/// `{:.16e}`: 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|source| Error::Io {
                path: dir.display().to_string(),
                source,
            })?;
        }
    }
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn norms_csv(meta: &RunMetadata, records: &[DiagnosticsRecord]) -> String {
    let mut s = meta.csv_preamble();
    s.push_str(NORMS_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            fmt_float(r.t),
            fmt_float(r.l2),
            fmt_float(r.h1),
            fmt_float(r.weighted_exp),
            fmt_float(r.weighted_q),
            fmt_float(r.conservation_residual),
            r.picard_iters
        );
    }
    s
}

pub fn write_norms_csv(path: &Path, meta: &RunMetadata, records: &[DiagnosticsRecord]) -> Result<(), Error> {
    write_file(path, &norms_csv(meta, records))
}

pub fn snapshot_csv(meta: &RunMetadata, t: f64, field: &PhysicalField) -> String {
    let mut s = meta.csv_preamble();
    let _ = writeln!(s, "# t {}", fmt_float(t));
    s.push_str(SNAPSHOT_HEADER);
    s.push('\n');
    for (x, z) in field.xi.iter().zip(&field.values) {
        let _ = writeln!(s, "{},{},{},{}", fmt_float(*x), fmt_float(z.re), fmt_float(z.im), fmt_float(z.norm()));
    }
    s
}

pub fn write_snapshot(path: &Path, meta: &RunMetadata, t: f64, field: &PhysicalField) -> Result<(), Error> {
    write_file(path, &snapshot_csv(meta, t, field))
}

pub fn sweep_csv(meta: &RunMetadata, rows: &[SweepRow]) -> String {
    let mut s = meta.csv_preamble();
    s.push_str(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{},{},{}", fmt_float(r.x0), fmt_float(r.xf), fmt_float(r.length), fmt_float(r.delta_l2));
    }
    s
}

pub fn write_sweep_table(path: &Path, meta: &RunMetadata, rows: &[SweepRow]) -> Result<(), Error> {
    write_file(path, &sweep_csv(meta, rows))
}

#[derive(Serialize)]
struct Wrapped<'a, T: Serialize> {
    metadata: &'a RunMetadata,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON object holding `metadata` next to the fields of `body`.
pub fn json_with_metadata<T: Serialize>(meta: &RunMetadata, body: &T) -> String {
    let mut s = serde_json::to_string_pretty(&Wrapped { metadata: meta, body }).expect("report serialises");
    s.push('\n');
    s
}

pub fn write_convergence_report(path: &Path, meta: &RunMetadata, report: &ConvergenceReport) -> Result<(), Error> {
    write_file(path, &json_with_metadata(meta, report))
}

/// Run summary, including wall time. The only output that differs between
/// identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub status: String,
    pub exit_code: i32,
    pub wall_time_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_step: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub files: Vec<String>,
}

pub fn write_run_summary(path: &Path, meta: &RunMetadata, summary: &RunSummary) -> Result<(), Error> {
    write_file(path, &json_with_metadata(meta, summary))
}
