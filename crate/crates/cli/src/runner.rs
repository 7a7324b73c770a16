//! Orchestration over grid cells and seeds.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, Format, Kind, RawConfig};
use crate::experiments::{pooled, run_seed, SeedOutput};
use crate::output::{rows_to_csv, write_file, CellRecord, Manifest, ResultRow, SeedRecord};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{failed} of {total} seed runs failed; partial results in {}", .dir.display())]
    Partial { failed: usize, total: usize, dir: PathBuf },
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Usage(_) => 2,
            RunError::Partial { .. } | RunError::Io(_) => 3,
        }
    }
}

#[derive(Debug)]
pub struct RunSummary {
    pub cells: usize,
    pub rows: usize,
    pub out_dir: PathBuf,
}

/// Parses the kind argument; `sweep` defers to `experiment.kind`.
pub fn resolve_kind(arg: &str, raw: &RawConfig) -> Result<Kind, RunError> {
    let name = if arg == "sweep" {
        raw.entries
            .get("experiment.kind")
            .ok_or_else(|| RunError::Usage("sweep needs experiment.kind in the configuration".into()))?
            .as_str()
    } else {
        arg
    };
    name.parse().map_err(RunError::Usage)
}

pub fn default_workers() -> usize {
    std::env::var("SPAM_FORGE_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|w| *w >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Validates every cell, then runs each `(cell, seed)` pair on a pool of
/// `workers` threads and writes results in `(cell, seed)` order.
pub fn run(kind_arg: &str, raw: &RawConfig, out: Option<&Path>, workers: usize) -> Result<RunSummary, RunError> {
    if workers == 0 {
        return Err(RunError::Usage("--workers must be >= 1".into()));
    }
    let kind = resolve_kind(kind_arg, raw)?;
    let cells = raw.cells();
    let mut configs = Vec::with_capacity(cells.len());
    let mut errors = Vec::new();
    for (i, c) in cells.iter().enumerate() {
        match ExperimentConfig::from_raw(kind, c) {
            Ok(mut cfg) => {
                if let Some(o) = out {
                    cfg.out_dir = o.to_path_buf();
                }
                configs.push(cfg);
            }
            Err(ConfigError::Invalid(e)) if cells.len() > 1 => {
                errors.extend(e.into_iter().map(|m| format!("cell {i}: {m}")));
            }
            Err(e) => return Err(e.into()),
        }
    }
    if !errors.is_empty() {
        return Err(ConfigError::Invalid(errors).into());
    }
    let out_dir = match (out, configs.first()) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(c)) => c.out_dir.clone(),
        (None, None) => PathBuf::from("spam-forge-out"),
    };
    if configs.is_empty() {
        return Ok(RunSummary {
            cells: 0,
            rows: 0,
            out_dir,
        });
    }
    let start = Instant::now();
    let jobs: Vec<(usize, u64)> = configs
        .iter()
        .enumerate()
        .flat_map(|(i, c)| (0..c.knobs.seeds).map(move |s| (i, c.model.seed + s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunError::Usage(e.to_string()))?;
    let results: Vec<(spam_core::Result<SeedOutput>, f64)> = pool.install(|| {
        jobs.par_iter()
            .map(|(i, seed)| {
                let t = Instant::now();
                let r = run_seed(&configs[*i], *seed);
                (r, t.elapsed().as_secs_f64())
            })
            .collect()
    });
    let sweep = configs.len() > 1;
    let mut rows: Vec<ResultRow> = Vec::new();
    let mut records: Vec<CellRecord> = cells
        .iter()
        .zip(&configs)
        .enumerate()
        .map(|(index, (raw, cfg))| CellRecord {
            index,
            fingerprint: cfg.model.fingerprint(),
            config: raw.entries.clone(),
            seeds: Vec::new(),
        })
        .collect();
    let mut outputs_written = Vec::new();
    let mut failed = 0;
    let mut per_cell: Vec<Vec<SeedOutput>> = (0..configs.len()).map(|_| Vec::new()).collect();
    for ((cell, seed), (res, wall)) in jobs.iter().zip(results) {
        let prefix = if sweep { PathBuf::from(format!("cell_{cell:03}")) } else { PathBuf::new() };
        match res {
            Ok(o) => {
                rows.extend(o.rows.iter().cloned());
                for a in &o.artifacts {
                    let rel = prefix.join(&a.path);
                    write_file(&out_dir, &rel, &a.contents)?;
                    outputs_written.push(rel.display().to_string());
                }
                records[*cell].seeds.push(SeedRecord {
                    seed: *seed,
                    ok: true,
                    wall_seconds: wall,
                    error: None,
                });
                per_cell[*cell].push(o);
            }
            Err(e) => {
                failed += 1;
                records[*cell].seeds.push(SeedRecord {
                    seed: *seed,
                    ok: false,
                    wall_seconds: wall,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    for (i, cfg) in configs.iter().enumerate() {
        let (pooled_rows, artifacts) = pooled(cfg, &per_cell[i]);
        rows.extend(pooled_rows);
        let prefix = if sweep { PathBuf::from(format!("cell_{i:03}")) } else { PathBuf::new() };
        for a in artifacts {
            let rel = prefix.join(&a.path);
            write_file(&out_dir, &rel, &a.contents)?;
            outputs_written.push(rel.display().to_string());
        }
    }
    let first = &configs[0];
    if first.wants(Format::Csv) {
        write_file(&out_dir, Path::new("results.csv"), &rows_to_csv(&rows))?;
        outputs_written.push("results.csv".into());
    }
    if first.wants(Format::Json) {
        let mut s = serde_json::to_string_pretty(&rows).unwrap_or_default();
        s.push('\n');
        write_file(&out_dir, Path::new("results.json"), &s)?;
        outputs_written.push("results.json".into());
    }
    let manifest = Manifest {
        software: format!("spam-forge {}", env!("CARGO_PKG_VERSION")),
        kind: kind.name().into(),
        workers,
        config: raw.entries.clone(),
        cells: records,
        partial: failed > 0,
        outputs: outputs_written,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    let mut m = serde_json::to_string_pretty(&manifest).unwrap_or_default();
    m.push('\n');
    write_file(&out_dir, Path::new("manifest.json"), &m)?;
    if failed > 0 {
        return Err(RunError::Partial {
            failed,
            total: jobs.len(),
            dir: out_dir,
        });
    }
    Ok(RunSummary {
        cells: configs.len(),
        rows: rows.len(),
        out_dir,
    })
}
