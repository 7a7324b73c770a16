//! Good vertices, the layer hierarchy, layer diameters and reachability.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::components::{bfs_into, UNREACHABLE};
use crate::error::{arg, Result, SpamError};
use crate::graph::{EvolvingGraph, GraphView};
use crate::model::{ModelParams, RegimeReport};
use crate::point_process::Colour;

/// Slack `g(x) = (1 + ln(1 + x))^c` in the goodness threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodnessConfig {
    pub c: f64,
}

impl Default for GoodnessConfig {
    fn default() -> Self {
        GoodnessConfig { c: 2.0 }
    }
}

impl GoodnessConfig {
    pub fn g(&self, x: f64) -> f64 {
        (1.0 + x.ln_1p()).powf(self.c)
    }

    /// `s^-gamma / g(1/s)`.
    pub fn threshold(&self, s: f64, gamma: f64) -> f64 {
        s.powf(-gamma) / self.g(1.0 / s)
    }
}

fn red_young_neighbours(graph: &EvolvingGraph, x: u32, local: bool) -> usize {
    let cloud = &graph.cloud;
    let s = cloud.birth(x);
    let d = cloud.dimension() as f64;
    let half = s.powf(-1.0 / d);
    let px = cloud.pos(x);
    graph.in_edges[x as usize]
        .iter()
        .take_while(|y| cloud.birth(**y) < 0.5)
        .filter(|y| cloud.birth(**y) > s && cloud.colour(**y) == Colour::Red)
        .filter(|y| {
            !local
                || px
                    .iter()
                    .zip(cloud.pos(**y))
                    .all(|(a, b)| cloud.torus.wrapped_delta(*a, *b) <= half)
        })
        .count()
}

/// Red in-neighbours born in `(s, 1/2)` reach `s^-gamma / g(1/s)`.
pub fn is_good(graph: &EvolvingGraph, x: u32, cfg: &GoodnessConfig) -> bool {
    let s = graph.cloud.birth(x);
    if s >= 0.5 || !graph.members[x as usize] {
        return false;
    }
    red_young_neighbours(graph, x, false) as f64 >= cfg.threshold(s, graph.cloud.params.gamma)
}

/// As [`is_good`], counting only neighbours in the torus cube of half-width
/// `s^(-1/d)` around the vertex.
pub fn is_locally_good(graph: &EvolvingGraph, x: u32, cfg: &GoodnessConfig) -> bool {
    let s = graph.cloud.birth(x);
    if s >= 0.5 || !graph.members[x as usize] {
        return false;
    }
    red_young_neighbours(graph, x, true) as f64 >= cfg.threshold(s, graph.cloud.params.gamma)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerHierarchy {
    pub regime: RegimeReport,
    /// `layers[k - 1]` is `L_k`, ascending ids.
    pub layers: Vec<Vec<u32>>,
    pub thresholds: Vec<f64>,
    pub goodness: GoodnessConfig,
    /// Set when no layer index qualifies at this volume.
    pub empty_flag: bool,
}

/// Birth threshold `n^(-alpha^-k)` of layer `k`.
pub fn layer_threshold(volume: f64, alpha: f64, k: u32) -> f64 {
    (-(alpha.powi(-(k as i32))) * volume.ln()).exp()
}

pub fn build_layers(graph: &EvolvingGraph, regime: &RegimeReport, cfg: &GoodnessConfig) -> Result<LayerHierarchy> {
    if !regime.robust {
        return Err(SpamError::Regime("layers are defined in the robust regime only".into()));
    }
    let (alpha, _, _) = regime.layer_params()?;
    let n = graph.cloud.params.volume;
    if regime.k == 0 {
        return Ok(LayerHierarchy {
            regime: regime.clone(),
            layers: Vec::new(),
            thresholds: Vec::new(),
            goodness: *cfg,
            empty_flag: true,
        });
    }
    let thresholds: Vec<f64> = (1..=regime.k).map(|k| layer_threshold(n, alpha, k)).collect();
    let top = *thresholds.last().unwrap();
    let cloud = &graph.cloud;
    let candidates: Vec<u32> = (0..cloud.count_born_by(top) as u32)
        .filter(|x| cloud.colour(*x) == Colour::Red && is_good(graph, *x, cfg))
        .collect();
    let layers = thresholds
        .iter()
        .map(|t| candidates.iter().copied().filter(|x| cloud.birth(*x) <= *t).collect())
        .collect();
    Ok(LayerHierarchy {
        regime: regime.clone(),
        layers,
        thresholds,
        goodness: *cfg,
        empty_flag: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerDiameter {
    Within(u32),
    ExceedsCap,
}

/// Largest pairwise hop distance inside `layer`, searching at most `cap` hops.
pub fn layer_diameter<G: GraphView>(g: &G, layer: &[u32], cap: u32) -> Result<LayerDiameter> {
    if layer.is_empty() {
        return arg("layer is empty");
    }
    let mut dist = vec![UNREACHABLE; g.slots()];
    let mut queue = VecDeque::new();
    let mut best = 0;
    for (i, u) in layer.iter().enumerate() {
        let seen = bfs_into(g, *u, cap, &mut dist, &mut queue);
        let mut over = false;
        for v in &layer[i + 1..] {
            let d = dist[*v as usize];
            if d == UNREACHABLE {
                over = true;
                break;
            }
            best = best.max(d);
        }
        for w in seen {
            dist[w as usize] = UNREACHABLE;
        }
        if over {
            return Ok(LayerDiameter::ExceedsCap);
        }
    }
    Ok(LayerDiameter::Within(best))
}

/// Oldest vertex born before `s` within `depth` hops of `start`.
pub fn reachable_old_vertex<G: GraphView>(g: &G, start: u32, depth: u32, s: f64) -> Option<u32> {
    let mut dist = vec![UNREACHABLE; g.slots()];
    let seen = bfs_into(g, start, depth, &mut dist, &mut VecDeque::new());
    seen.into_iter()
        .filter(|v| g.birth(*v) < s)
        .min_by(|a, b| g.birth(*a).total_cmp(&g.birth(*b)))
}

/// Whether a locally good red vertex born before `s^alpha` lies within
/// distance `s^(-beta/d)` of `x`, where `s` is the birth of `x`.
pub fn high_degree_density_probe(
    graph: &EvolvingGraph,
    x: u32,
    regime: &RegimeReport,
    cfg: &GoodnessConfig,
) -> Result<bool> {
    let (alpha, beta, _) = regime.layer_params()?;
    let cloud = &graph.cloud;
    let p: &ModelParams = &cloud.params;
    let s = cloud.birth(x);
    let lower = p.volume.powf(-1.0 / beta);
    if !(s > lower && s <= 0.25) {
        return arg(format!("birth {s} outside ({lower}, 1/4]"));
    }
    let radius = s.powf(-beta / p.dimension as f64);
    let limit = s.powf(alpha);
    Ok((0..cloud.count_born_by(limit) as u32).any(|z| {
        cloud.colour(z) == Colour::Red
            && cloud.dist(x, z) <= radius
            && is_locally_good(graph, z, cfg)
    }))
}
