//! Flat `section.key=value` configuration files.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use spam_core::local::MAX_VERTICES;
use spam_core::model::ModelParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Build,
    Degrees,
    Distances,
    Percolation,
    Layers,
    Truncation,
    Census,
    Modulus,
    TwoConnection,
}

impl Kind {
    pub const ALL: [Kind; 9] = [
        Kind::Build,
        Kind::Degrees,
        Kind::Distances,
        Kind::Percolation,
        Kind::Layers,
        Kind::Truncation,
        Kind::Census,
        Kind::Modulus,
        Kind::TwoConnection,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Kind::Build => "build",
            Kind::Degrees => "degrees",
            Kind::Distances => "distances",
            Kind::Percolation => "percolation",
            Kind::Layers => "layers",
            Kind::Truncation => "truncation",
            Kind::Census => "census",
            Kind::Modulus => "modulus",
            Kind::TwoConnection => "two-connection",
        }
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Kind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment kind {s:?}"))
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Ordered key/value pairs after `--set` overrides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax {
                line: i + 1,
                msg: format!("expected key=value, got {line:?}"),
            })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    msg: "empty key".into(),
                });
            }
            entries.insert(k.to_string(), v.trim().to_string());
        }
        Ok(RawConfig { entries })
    }

    pub fn set(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let (k, v) = assignment.split_once('=').ok_or(ConfigError::Syntax {
            line: 0,
            msg: format!("--set expects key=value, got {assignment:?}"),
        })?;
        self.entries.insert(k.trim().to_string(), v.trim().to_string());
        Ok(())
    }

    /// Grid axes from `grid.<key>=v1,v2,...`.
    pub fn grid(&self) -> Vec<(String, Vec<String>)> {
        self.entries
            .iter()
            .filter_map(|(k, v)| {
                k.strip_prefix("grid.").map(|key| {
                    let values = v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from);
                    (key.to_string(), values.collect())
                })
            })
            .collect()
    }

    /// One configuration per grid cell, in row-major order of the sorted axes.
    pub fn cells(&self) -> Vec<RawConfig> {
        let mut base = self.clone();
        base.entries.retain(|k, _| !k.starts_with("grid."));
        let mut cells = vec![base];
        for (key, values) in self.grid() {
            let mut next = Vec::with_capacity(cells.len() * values.len());
            for c in &cells {
                for v in &values {
                    let mut c = c.clone();
                    c.entries.insert(key.clone(), v.clone());
                    next.push(c);
                }
            }
            cells = next;
        }
        cells
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Knobs {
    pub seeds: u64,
    pub r_colour: f64,
    pub b: f64,
    pub cutoffs: Vec<f64>,
    pub h: u32,
    pub k: u32,
    pub eta: f64,
    pub sigma: f64,
    pub m: Option<u32>,
    pub pairs: usize,
    pub epsilon: f64,
    pub t: f64,
    pub cap: usize,
    pub hill_fraction: f64,
    pub goodness_c: f64,
    pub zx: u32,
    pub zy: u32,
    pub dist: f64,
    pub trials: usize,
    /// Hex canonical encoding; defaults to a root with a single neighbour.
    pub pattern: Option<String>,
}

impl Default for Knobs {
    fn default() -> Self {
        Knobs {
            seeds: 1,
            r_colour: 0.5,
            b: 0.7,
            cutoffs: vec![1.0, 2.0, 4.0, 8.0],
            h: 1,
            k: 5,
            eta: 0.05,
            sigma: 0.01,
            m: None,
            pairs: 200,
            epsilon: 1.0,
            t: 1.0,
            cap: MAX_VERTICES,
            hill_fraction: 0.01,
            goodness_c: 2.0,
            zx: 0,
            zy: 0,
            dist: 1.0,
            trials: 500,
            pattern: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Graph,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub model: ModelParams,
    pub knobs: Knobs,
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
}

struct Reader<'a> {
    raw: &'a RawConfig,
    errors: Vec<String>,
    used: Vec<&'static str>,
}

impl Reader<'_> {
    fn get<T: FromStr>(&mut self, key: &'static str, default: T) -> T {
        self.used.push(key);
        match self.raw.entries.get(key) {
            None => default,
            Some(v) => v.parse().unwrap_or_else(|_| {
                self.errors.push(format!("{key}: cannot parse {v:?}"));
                default
            }),
        }
    }

    fn list<T: FromStr>(&mut self, key: &'static str, default: Vec<T>) -> Vec<T> {
        self.used.push(key);
        let Some(v) = self.raw.entries.get(key) else {
            return default;
        };
        let mut out = Vec::new();
        for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item.parse() {
                Ok(x) => out.push(x),
                Err(_) => self.errors.push(format!("{key}: cannot parse {item:?}")),
            }
        }
        out
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.errors.push(msg());
        }
    }
}

impl ExperimentConfig {
    /// Typed configuration with every violated field reported at once.
    pub fn from_raw(kind: Kind, raw: &RawConfig) -> Result<Self, ConfigError> {
        let mut r = Reader {
            raw,
            errors: Vec::new(),
            used: Vec::new(),
        };
        let defaults = ModelParams::default();
        let model = ModelParams {
            gamma: r.get("model.gamma", defaults.gamma),
            gamma_prime: r.get("model.gamma_prime", defaults.gamma_prime),
            delta: r.get("model.delta", defaults.delta),
            dimension: r.get("model.d", defaults.dimension),
            volume: r.get("model.n", defaults.volume),
            intensity: r.get("model.lambda", defaults.intensity),
            seed: r.get("model.seed", defaults.seed),
        };
        r.errors.extend(model.violations().into_iter().map(|v| format!("model: {v}")));
        let kd = Knobs::default();
        let m: i64 = r.get("experiment.m", -1);
        let pattern: String = r.get("experiment.pattern", String::new());
        let knobs = Knobs {
            seeds: r.get("experiment.seeds", kd.seeds),
            r_colour: r.get("experiment.r_colour", kd.r_colour),
            b: r.get("experiment.b", kd.b),
            cutoffs: r.list("experiment.cutoffs", kd.cutoffs.clone()),
            h: r.get("experiment.h", kd.h),
            k: r.get("experiment.k", kd.k),
            eta: r.get("experiment.eta", kd.eta),
            sigma: r.get("experiment.sigma", kd.sigma),
            m: (m >= 0).then_some(m as u32),
            pairs: r.get("experiment.pairs", kd.pairs),
            epsilon: r.get("experiment.epsilon", kd.epsilon),
            t: r.get("experiment.t", kd.t),
            cap: r.get("experiment.cap", kd.cap),
            hill_fraction: r.get("experiment.hill_fraction", kd.hill_fraction),
            goodness_c: r.get("experiment.goodness_c", kd.goodness_c),
            zx: r.get("experiment.zx", kd.zx),
            zy: r.get("experiment.zy", kd.zy),
            dist: r.get("experiment.dist", kd.dist),
            trials: r.get("experiment.trials", kd.trials),
            pattern: (!pattern.is_empty()).then_some(pattern),
        };
        let out_dir: String = r.get("output.dir", "spam-forge-out".to_string());
        let formats: Vec<String> = r.list("output.formats", vec!["csv".into(), "json".into()]);
        let formats = formats
            .iter()
            .filter_map(|f| match f.as_str() {
                "csv" => Some(Format::Csv),
                "json" => Some(Format::Json),
                "graph" => Some(Format::Graph),
                other => {
                    r.errors.push(format!("output.formats: unknown format {other:?}"));
                    None
                }
            })
            .collect();
        validate_knobs(&mut r, kind, &knobs, &model);
        for key in raw.entries.keys() {
            if !r.used.contains(&key.as_str()) && key != "experiment.kind" {
                r.errors.push(format!("{key}: unknown key"));
            }
        }
        if !r.errors.is_empty() {
            return Err(ConfigError::Invalid(r.errors));
        }
        Ok(ExperimentConfig {
            kind,
            model,
            knobs,
            out_dir: PathBuf::from(out_dir),
            formats,
        })
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

fn validate_knobs(r: &mut Reader<'_>, kind: Kind, k: &Knobs, model: &ModelParams) {
    r.check(k.seeds >= 1, || "experiment.seeds must be >= 1".into());
    let unit = |x: f64| (0.0..=1.0).contains(&x);
    r.check(unit(k.r_colour), || format!("experiment.r_colour = {} outside [0,1]", k.r_colour));
    r.check(unit(k.b), || format!("experiment.b = {} outside [0,1]", k.b));
    r.check(unit(k.t), || format!("experiment.t = {} outside [0,1]", k.t));
    r.check(k.sigma > 0.0 && k.sigma <= 1.0, || {
        format!("experiment.sigma = {} outside (0,1]", k.sigma)
    });
    r.check(k.cap >= 1 && k.cap <= MAX_VERTICES, || {
        format!("experiment.cap = {} outside 1..={MAX_VERTICES}", k.cap)
    });
    r.check(k.epsilon > 0.0, || "experiment.epsilon must be > 0".into());
    r.check(k.hill_fraction > 0.0 && k.hill_fraction < 1.0, || {
        "experiment.hill_fraction must lie in (0,1)".into()
    });
    r.check(k.goodness_c >= 0.0, || "experiment.goodness_c must be >= 0".into());
    r.check(k.m != Some(0), || "experiment.m must be >= 1 (omit it to treat every cube as sparse)".into());
    match kind {
        Kind::Modulus => {
            r.check(k.eta > 0.0 && k.eta < 1.0, || {
                format!("experiment.eta = {} must lie in (0,1)", k.eta)
            });
        }
        Kind::Truncation => {
            r.check(!k.cutoffs.is_empty(), || "experiment.cutoffs must not be empty".into());
            r.check(k.cutoffs.iter().all(|c| *c >= 0.0), || {
                "experiment.cutoffs must be >= 0".into()
            });
            if let Some(p) = &k.pattern {
                r.check(hex::decode(p).is_ok_and(|b| spam_core::local::decode(&b).is_ok()), || {
                    format!("experiment.pattern {p:?} is not a canonical encoding")
                });
            }
        }
        Kind::Distances => {
            r.check(k.pairs >= 1, || "experiment.pairs must be >= 1".into());
        }
        Kind::TwoConnection => {
            r.check(k.trials >= 1, || "experiment.trials must be >= 1".into());
            r.check(k.dist >= 0.0 && k.dist <= model.torus().diameter(), || {
                format!("experiment.dist = {} outside [0, torus diameter]", k.dist)
            });
        }
        Kind::Census => {
            r.check(k.m.is_some(), || "census needs experiment.m".into());
        }
        _ => {}
    }
    if matches!(kind, Kind::Layers | Kind::Distances) && model.violations().is_empty() {
        r.check(spam_core::model::is_robust(model.gamma, model.delta), || {
            format!(
                "{kind} needs the robust regime gamma > delta/(1+delta) (gamma = {}, delta = {})",
                model.gamma, model.delta
            )
        });
    }
}
