//! Result rows, CSV emission and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use spam_core::io::fmt_f64;

pub const CSV_HEADER: &str = "experiment,seed,fingerprint,metric,value,aux";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    /// Seed number, or `pooled` for rows aggregated over seeds.
    pub seed: String,
    pub fingerprint: String,
    pub metric: String,
    pub value: f64,
    pub aux: String,
}

fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            field(&r.experiment),
            field(&r.seed),
            field(&r.fingerprint),
            field(&r.metric),
            fmt_f64(r.value),
            field(&r.aux)
        );
    }
    out
}

/// A file produced by an experiment, relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub path: PathBuf,
    pub contents: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub ok: bool,
    pub wall_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellRecord {
    pub index: usize,
    pub fingerprint: String,
    pub config: BTreeMap<String, String>,
    pub seeds: Vec<SeedRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub software: String,
    pub kind: String,
    pub workers: usize,
    pub config: BTreeMap<String, String>,
    pub cells: Vec<CellRecord>,
    /// Set when any seed failed; its rows are missing from the results.
    pub partial: bool,
    pub outputs: Vec<String>,
    pub wall_seconds: f64,
}

pub fn write_file(root: &Path, rel: &Path, contents: &str) -> std::io::Result<()> {
    let path = root.join(rel);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)
}
