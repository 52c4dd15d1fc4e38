//! Deterministic CSV and JSON artifacts.
//!
//! A CSV artifact starts with one `#` line carrying the tool version, the
//! configuration hash and the master seed, followed by a header row and the
//! data. Reals are written with six significant digits so bodies are
//! byte-stable across runs and platforms.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::asymptotics::{PowerGrid, SweepRow};
use crate::engine::{PowerEstimate, ReplicationOutcome};
use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Six significant digits, shortest round-trip form of the rounded value.
pub fn format_real(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{v:.5e}").parse().expect("formatted float parses");
    if rounded == 0.0 {
        "0".into()
    } else {
        rounded.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunHeader {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl RunHeader {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        Self {
            version: TOOL_VERSION.into(),
            config_hash: config_hash.into(),
            seed,
        }
    }

    pub fn line(&self) -> String {
        format!("# art-kit {} config={} seed={}", self.version, self.config_hash, self.seed)
    }
}

/// In-memory table of pre-formatted cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Header row and data rows as CSV text (no `#` line).
    pub fn body(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("CSV of UTF-8 cells is UTF-8"))
    }

    /// Full artifact text: the `#` line then the body.
    pub fn render(&self, header: &RunHeader) -> Result<String> {
        Ok(format!("{}\n{}", header.line(), self.body()?))
    }

    pub fn write(&self, path: &Path, header: &RunHeader) -> Result<()> {
        write_text(path, &self.render(header)?)
    }
}

/// `<dir>/<command>-<first 12 hex digits of the fingerprint>.<ext>`
pub fn artifact_path(dir: &Path, command: &str, fingerprint: &str, ext: &str) -> PathBuf {
    let short = &fingerprint[..fingerprint.len().min(12)];
    dir.join(format!("{command}-{short}.{ext}"))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::Io(format!("{}: {e}", parent.display())))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    f.write_all(text.as_bytes())
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

fn opt(v: Option<f64>) -> String {
    v.map(format_real).unwrap_or_default()
}

pub fn power_table(rows: &[(String, PowerEstimate)]) -> Table {
    let mut t = Table::new(&["label", "power", "se", "n_mc", "failures", "alpha"]);
    for (label, e) in rows {
        t.push(vec![
            label.clone(),
            format_real(e.power),
            format_real(e.se),
            e.n_mc.to_string(),
            e.failures.to_string(),
            format_real(e.alpha),
        ]);
    }
    t
}

/// One row per replication: index, p-value, statistic, exceedances, seed,
/// error message for failed replications.
pub fn replication_table(outcomes: &[ReplicationOutcome]) -> Table {
    let mut t = Table::new(&["replication", "p_value", "stat_obs", "exceedances", "ties", "seed", "error"]);
    for o in outcomes {
        let row = match &o.result {
            Ok(r) => vec![
                o.index.to_string(),
                format_real(r.p.value),
                format_real(r.p.stat_obs),
                r.p.exceedances.to_string(),
                r.p.tie_count.to_string(),
                r.seed.to_string(),
                String::new(),
            ],
            Err(e) => vec![
                o.index.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                e.to_string(),
            ],
        };
        t.push(row);
    }
    t
}

pub fn grid_table(grid: &PowerGrid) -> Table {
    let mut t = Table::new(&[
        "h0", "p", "power_a", "se_a", "power_b", "se_b", "diff", "diff_se", "q1_star", "error",
    ]);
    for c in &grid.cells {
        t.push(vec![
            format_real(c.h0),
            c.p.to_string(),
            format_real(c.power_a),
            format_real(c.se_a),
            format_real(c.power_b),
            format_real(c.se_b),
            format_real(c.diff),
            format_real(c.diff_se),
            opt(c.q1_star),
            c.error.clone().unwrap_or_default(),
        ]);
    }
    t
}

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(&["p", "h0", "epsilon", "t0", "power", "se"]);
    for r in rows {
        t.push(vec![
            r.p.to_string(),
            format_real(r.h0),
            format_real(r.epsilon),
            format_real(r.t0),
            format_real(r.power),
            format_real(r.se),
        ]);
    }
    t
}
