//! Per-seed experiment bodies.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use spam_core::analysis::{
    build_layers, components, layer_diameter, two_connection_frequency, two_connection_q, typical_distance_sample,
    GoodnessConfig, LayerDiameter,
};
use spam_core::builder::{build_accelerated, site_percolate_post, site_percolate_with};
use spam_core::graph::{EvolvingGraph, VertexFilter};
use spam_core::io::write_graph;
use spam_core::local::{
    bad_vertex_count, empirical_indegree, empirical_neighbourhood, long_edge_count, skorohod_modulus,
    truncated_degree_path, BallConfig, Orientation, RootedGraph, RootedNeighbourhood,
};
use spam_core::marks::MarkOracle;
use spam_core::model::{regime_report, ConnectionKernel, ModelParams};
use spam_core::point_process::{colour_points, dense_cube_census, early_vertex_count, sample_points, Colour, PointCloud};
use spam_core::stats::{degree_by_birth, hill_top, in_degrees, ols};
use spam_core::{Result, SpamError};

use crate::config::{ExperimentConfig, Format, Kind};
use crate::output::{Artifact, ResultRow};

#[derive(Debug, Default)]
pub struct SeedOutput {
    pub rows: Vec<ResultRow>,
    pub artifacts: Vec<Artifact>,
    /// Final in-degrees, kept for pooled summaries.
    pub degrees: Vec<f64>,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    seed: u64,
    fingerprint: String,
    out: SeedOutput,
}

impl Ctx<'_> {
    fn row(&mut self, metric: &str, value: f64, aux: impl Into<String>) {
        self.out.rows.push(ResultRow {
            experiment: self.cfg.kind.name().to_string(),
            seed: self.seed.to_string(),
            fingerprint: self.fingerprint.clone(),
            metric: metric.to_string(),
            value,
            aux: aux.into(),
        });
    }

    fn artifact(&mut self, path: String, contents: String) {
        self.out.artifacts.push(Artifact {
            path: PathBuf::from(path),
            contents,
        });
    }
}

struct Instance {
    cloud: Arc<PointCloud>,
    oracle: MarkOracle,
    kernel: ConnectionKernel,
}

fn instance(params: ModelParams, red: Option<f64>) -> Result<Instance> {
    let mut cloud = sample_points(&params, "points")?;
    if let Some(r) = red {
        cloud = colour_points(&cloud, r, "colours")?;
    }
    let oracle = MarkOracle::new(&cloud, params.seed);
    Ok(Instance {
        cloud: Arc::new(cloud),
        oracle,
        kernel: params.kernel()?,
    })
}

impl Instance {
    fn build(&self, cutoff: f64, filter: VertexFilter) -> Result<(EvolvingGraph, spam_core::builder::BuildLog)> {
        build_accelerated(&self.cloud, &self.oracle, &self.kernel, cutoff, filter)
    }
}

fn largest_fraction(g: &EvolvingGraph, of: usize) -> f64 {
    let largest = components(&g.full()).sizes().into_iter().max().unwrap_or(0);
    if of == 0 {
        0.0
    } else {
        largest as f64 / of as f64
    }
}

pub fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedOutput> {
    let params = ModelParams { seed, ..cfg.model };
    let mut ctx = Ctx {
        cfg,
        seed,
        fingerprint: params.fingerprint(),
        out: SeedOutput::default(),
    };
    let k = &cfg.knobs;
    match cfg.kind {
        Kind::Build => {
            let inst = instance(params, None)?;
            let (g, log) = inst.build(f64::INFINITY, VertexFilter::All)?;
            ctx.row("vertices", g.vertex_count() as f64, "");
            ctx.row("edges", g.edge_count() as f64, "");
            ctx.row("evaluations", log.evaluations as f64, "");
            ctx.row("accepted", log.accepted as f64, "");
            ctx.row("nodes_visited", log.nodes_visited as f64, "");
            ctx.row("acceptance_rate", log.acceptance_rate(), "");
            if cfg.wants(Format::Graph) {
                ctx.artifact(format!("graphs/seed_{seed}.txt"), write_graph(&g));
            }
        }
        Kind::Degrees => {
            let inst = instance(params, None)?;
            let g = inst.build(f64::INFINITY, VertexFilter::All)?.0;
            let degrees = in_degrees(&g);
            let h = hill_top(&degrees, k.hill_fraction)?;
            ctx.row("hill_alpha", h.alpha, format!("k={}", h.k));
            ctx.row("hill_se", h.se, format!("k={}", h.k));
            ctx.row("max_in_degree", degrees.iter().copied().fold(0.0, f64::max), "");
            let n = params.volume;
            let bounds: Vec<f64> = (0..=10).map(|i| (n.ln() * (i as f64 / 10.0 - 1.0)).exp()).collect();
            let bins = degree_by_birth(&g, &bounds);
            let (xs, ys): (Vec<f64>, Vec<f64>) = bins.iter().map(|b| (b.0, b.1)).unzip();
            if let Ok((slope, _)) = ols(&xs, &ys) {
                ctx.row("birth_degree_slope", slope, format!("bins={}", bins.len()));
            }
            ctx.out.degrees = degrees;
        }
        Kind::Distances => {
            let inst = instance(params, None)?;
            let g = inst.build(f64::INFINITY, VertexFilter::All)?.0;
            let s = typical_distance_sample(&g.full(), k.pairs, &params, k.epsilon, "pairs")?;
            ctx.row("median_distance", s.median, format!("pairs={}", k.pairs));
            ctx.row("mean_distance", s.mean, format!("pairs={}", k.pairs));
            ctx.row("distance_budget", s.budget.unwrap_or(f64::NAN), format!("epsilon={}", k.epsilon));
            ctx.row("component_size", s.component_size as f64, "");
            for (h, c) in s.histogram.iter().enumerate() {
                ctx.row("distance_count", *c as f64, format!("hops={h}"));
            }
        }
        Kind::Percolation => {
            let inst = instance(params, Some(1.0 - k.b))?;
            let g = inst.build(f64::INFINITY, VertexFilter::All)?.0;
            ctx.row("giant_fraction", components(&g.full()).giant_fraction(), "");
            let black: Vec<bool> = inst.cloud.colours().iter().map(|c| *c == Colour::Black).collect();
            let black_count = inst.cloud.colour_count(Colour::Black);
            let thinned = site_percolate_with(&g, &black)?;
            ctx.row("thinned_largest_fraction", largest_fraction(&thinned, black_count), format!("b={}", k.b));
            let gb = inst.build(f64::INFINITY, VertexFilter::Colour(Colour::Black))?.0;
            ctx.row("black_graph_largest_fraction", largest_fraction(&gb, black_count), format!("b={}", k.b));
            let post = site_percolate_post(&g, k.b, "percolation")?;
            let kept = post.vertex_count();
            ctx.row("post_percolation_largest_fraction", largest_fraction(&post, kept), format!("b={}", k.b));
        }
        Kind::Layers => {
            let inst = instance(params, Some(k.r_colour))?;
            let g = inst.build(f64::INFINITY, VertexFilter::All)?.0;
            let regime = regime_report(&params, None, None)?;
            let layers = build_layers(&g, &regime, &GoodnessConfig { c: k.goodness_c })?;
            ctx.row("final_layer_index", regime.k as f64, "");
            ctx.row("empty_flag", layers.empty_flag as u8 as f64, "");
            for (i, l) in layers.layers.iter().enumerate() {
                ctx.row("layer_size", l.len() as f64, format!("k={}", i + 1));
            }
            if let Some(top) = layers.layers.last().filter(|l| !l.is_empty()) {
                let cap = 4 * regime.k;
                match layer_diameter(&g.full(), top, cap)? {
                    LayerDiameter::Within(d) => ctx.row("layer_diameter", d as f64, format!("cap={cap}")),
                    LayerDiameter::ExceedsCap => ctx.row("layer_diameter", f64::INFINITY, format!("cap={cap}")),
                }
            }
        }
        Kind::Truncation => {
            let inst = instance(params, None)?;
            let g = inst.build(f64::INFINITY, VertexFilter::All)?.0;
            let pattern = match &k.pattern {
                Some(hex) => {
                    let enc = hex::decode(hex).map_err(|e| SpamError::Argument(e.to_string()))?;
                    let n = spam_core::local::decode(&enc)?.n;
                    RootedNeighbourhood {
                        encoding: enc,
                        vertices: n,
                        depth: k.h,
                    }
                }
                None => RootedNeighbourhood::from_graph(&RootedGraph::new(2, 0, &[(0, 1)], Orientation::Undirected)?, 1),
            };
            for r in &k.cutoffs {
                let gr = inst.build(*r, VertexFilter::All)?.0;
                let bad = bad_vertex_count(&g, &gr, k.t, k.h, &pattern)?;
                ctx.row("bad_vertex_count", bad as f64, format!("r={r}"));
                ctx.row("long_edge_count", long_edge_count(&g, *r, k.m)? as f64, format!("r={r}"));
            }
            ctx.row("early_vertex_count", early_vertex_count(&inst.cloud, k.sigma) as f64, format!("sigma={}", k.sigma));
        }
        Kind::Census => {
            let cloud = sample_points(&params, "points")?;
            let m = k.m.unwrap_or(1);
            let census = dense_cube_census(&cloud, m)?;
            ctx.row("cube_count", census.counts.len() as f64, "");
            ctx.row("dense_cubes", census.dense_indices().len() as f64, format!("m={m}"));
            ctx.row("dense_mass", census.dense_mass() as f64, format!("m={m}"));
            ctx.row("early_vertex_count", early_vertex_count(&cloud, k.sigma) as f64, format!("sigma={}", k.sigma));
            ctx.row("early_vertex_mean", params.intensity * params.volume * k.sigma, format!("sigma={}", k.sigma));
        }
        Kind::Modulus => {
            let inst = instance(params, None)?;
            let g = inst.build(f64::INFINITY, VertexFilter::All)?.0;
            let path = truncated_degree_path(&g, k.k);
            ctx.row("skorohod_modulus", skorohod_modulus(&path, k.eta)?, format!("eta={};k={}", k.eta, k.k));
            ctx.row("path_jumps", path.jumps() as f64, format!("k={}", k.k));
            let ball = BallConfig {
                cap: k.cap,
                orientation: Orientation::Undirected,
            };
            let hoods = empirical_neighbourhood(&g, k.t, k.h, ball)?;
            ctx.row("neighbourhood_classes", hoods.counts.len() as f64, format!("h={}", k.h));
            ctx.row("neighbourhood_overflow", hoods.overflow as f64, format!("cap={}", k.cap));
            if cfg.wants(Format::Csv) {
                ctx.artifact(format!("paths/seed_{seed}.csv"), path.to_csv());
            }
            if cfg.wants(Format::Json) {
                let indeg = empirical_indegree(&g, k.t);
                ctx.artifact(format!("measures/indegree_seed_{seed}.json"), pretty(&indeg.to_json()));
                ctx.artifact(format!("measures/neighbourhood_h{}_seed_{seed}.json", k.h), pretty(&hoods.to_json()));
            }
        }
        Kind::TwoConnection => {
            let kernel = params.kernel()?;
            let q = two_connection_q(&kernel, k.zx, k.zy, k.dist)?;
            let bound = -(-params.intensity * q).exp_m1();
            let hits = two_connection_frequency(
                &kernel,
                &params.torus(),
                k.zx,
                k.zy,
                k.dist,
                params.intensity,
                k.trials,
                seed,
                "late",
            )?;
            let aux = format!("zx={};zy={};dist={}", k.zx, k.zy, k.dist);
            ctx.row("q", q, aux.clone());
            ctx.row("lower_bound", bound, aux.clone());
            ctx.row("frequency", hits as f64 / k.trials as f64, format!("{aux};trials={}", k.trials));
        }
    }
    Ok(ctx.out)
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

/// Rows and files summarising all seeds of a cell.
pub fn pooled(cfg: &ExperimentConfig, outputs: &[SeedOutput]) -> (Vec<ResultRow>, Vec<Artifact>) {
    if cfg.kind != Kind::Degrees {
        return (Vec::new(), Vec::new());
    }
    let all: Vec<f64> = outputs.iter().flat_map(|o| o.degrees.iter().copied()).collect();
    let mut rows = Vec::new();
    let fingerprint = cfg.model.fingerprint();
    if let Ok(h) = hill_top(&all, cfg.knobs.hill_fraction) {
        for (metric, value) in [("hill_alpha", h.alpha), ("hill_se", h.se), ("hill_ci_low", h.ci_low), ("hill_ci_high", h.ci_high)] {
            rows.push(ResultRow {
                experiment: cfg.kind.name().into(),
                seed: "pooled".into(),
                fingerprint: fingerprint.clone(),
                metric: metric.into(),
                value,
                aux: format!("k={}", h.k),
            });
        }
    }
    let mut hist: BTreeMap<u64, u64> = BTreeMap::new();
    for d in &all {
        *hist.entry(*d as u64).or_insert(0) += 1;
    }
    let mut csv = String::from("degree,count\n");
    for (d, c) in hist {
        csv.push_str(&format!("{d},{c}\n"));
    }
    let artifacts = vec![Artifact {
        path: PathBuf::from("degree_histogram.csv"),
        contents: csv,
    }];
    (rows, artifacts)
}
