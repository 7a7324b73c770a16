//! Sampled pairwise distances inside the component of the oldest vertex.

use std::collections::VecDeque;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::components::{bfs_into, components, UNREACHABLE};
use crate::error::{Result, SpamError};
use crate::graph::GraphView;
use crate::model::{regime_report, ModelParams};
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceStats {
    pub samples: Vec<u32>,
    pub median: f64,
    pub mean: f64,
    /// `histogram[h]` counts sampled pairs at distance `h`.
    pub histogram: Vec<u64>,
    /// `(4 + eps) rho ln ln n`, absent outside the robust regime.
    pub budget: Option<f64>,
    pub component_size: u32,
}

pub fn median_u32(xs: &[u32]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_unstable();
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2] as f64
    } else {
        (v[k / 2 - 1] as f64 + v[k / 2] as f64) / 2.0
    }
}

/// Distances between `pairs` uniformly chosen pairs of distinct vertices of
/// `C_n`; pairs sharing a source share one search.
pub fn typical_distance_sample<G: GraphView>(
    g: &G,
    pairs: usize,
    params: &ModelParams,
    epsilon: f64,
    stream_label: &str,
) -> Result<DistanceStats> {
    let comp = components(g);
    let giant = comp.oldest.map(|l| comp.members_of(l)).unwrap_or_default();
    if giant.len() < 2 {
        return Err(SpamError::Sampling(format!(
            "component of the oldest vertex has {} vertices",
            giant.len()
        )));
    }
    let mut rng = stream_rng(params.seed, stream_label);
    let mut chosen: Vec<(u32, u32)> = (0..pairs)
        .map(|_| {
            let ix = sample(&mut rng, giant.len(), 2);
            (giant[ix.index(0)], giant[ix.index(1)])
        })
        .collect();
    let order: Vec<usize> = {
        let mut o: Vec<usize> = (0..pairs).collect();
        o.sort_by_key(|i| chosen[*i]);
        o
    };
    let mut samples = vec![0u32; pairs];
    let mut dist = vec![UNREACHABLE; g.slots()];
    let mut queue = VecDeque::new();
    let mut current = None;
    let mut seen = Vec::new();
    for i in order {
        let (u, v) = chosen[i];
        if current != Some(u) {
            for w in seen.drain(..) {
                dist[w as usize] = UNREACHABLE;
            }
            seen = bfs_into(g, u, UNREACHABLE, &mut dist, &mut queue);
            current = Some(u);
        }
        samples[i] = dist[v as usize];
    }
    chosen.clear();
    let max = samples.iter().copied().max().unwrap_or(0) as usize;
    let mut histogram = vec![0u64; max + 1];
    for s in &samples {
        histogram[*s as usize] += 1;
    }
    let mean = samples.iter().map(|s| *s as f64).sum::<f64>() / pairs.max(1) as f64;
    let report = regime_report(params, None, None)?;
    let budget = report.rho.map(|r| (4.0 + epsilon) * r * params.volume.ln().ln());
    Ok(DistanceStats {
        median: median_u32(&samples),
        mean,
        histogram,
        budget,
        samples,
        component_size: giant.len() as u32,
    })
}
