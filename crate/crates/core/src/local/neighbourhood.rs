//! Rooted h-balls and empirical measures over them.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::canon::{canonical_encoding, decode, Orientation, RootedGraph, MAX_VERTICES};
use crate::error::{arg, Result, SpamError};
use crate::graph::{EvolvingGraph, GraphView, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallConfig {
    pub cap: usize,
    pub orientation: Orientation,
}

impl Default for BallConfig {
    fn default() -> Self {
        BallConfig {
            cap: MAX_VERTICES,
            orientation: Orientation::Undirected,
        }
    }
}

impl BallConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cap == 0 || self.cap > MAX_VERTICES {
            return arg(format!("ball cap must lie in 1..={MAX_VERTICES}, got {}", self.cap));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RootedNeighbourhood {
    pub encoding: Vec<u8>,
    pub vertices: usize,
    pub depth: u32,
}

impl RootedNeighbourhood {
    pub fn from_graph(g: &RootedGraph, depth: u32) -> Self {
        RootedNeighbourhood {
            encoding: canonical_encoding(g),
            vertices: g.n,
            depth,
        }
    }

    pub fn hex(&self) -> String {
        hex::encode(&self.encoding)
    }

    pub fn singleton(orientation: Orientation) -> Self {
        Self::from_graph(&RootedGraph::new(1, 0, &[], orientation).unwrap(), 0)
    }
}

/// Vertices within `h` hops of `x` (root first) and the edges lying on paths
/// of length at most `h` from the root, as local index pairs oriented from
/// the younger to the older endpoint.
pub(crate) fn ball<G: GraphView>(g: &G, x: u32, h: u32, cap: usize) -> Result<(Vec<u32>, Vec<(usize, usize)>)> {
    let mut index: HashMap<u32, (usize, u32)> = HashMap::new();
    let mut order = vec![x];
    index.insert(x, (0, 0));
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        let du = index[&u].1;
        if du == h {
            continue;
        }
        let mut overflow = false;
        g.for_each_neighbour(u, |v| {
            if !g.contains(v) || index.contains_key(&v) {
                return;
            }
            index.insert(v, (order.len(), du + 1));
            order.push(v);
            overflow |= order.len() > cap;
        });
        if overflow {
            return Err(SpamError::SizeCap { size: order.len(), cap });
        }
    }
    let mut edges = Vec::new();
    for (iu, u) in order.iter().enumerate() {
        let du = index[u].1;
        if du == h {
            continue;
        }
        g.for_each_neighbour(*u, |v| {
            let Some(&(iv, dv)) = index.get(&v) else { return };
            if dv > du || (dv == du && v > *u) {
                if v > *u {
                    edges.push((iv, iu));
                } else {
                    edges.push((iu, iv));
                }
            }
        });
    }
    Ok((order, edges))
}

/// `[G(t), x]_h`, canonicalised.
pub fn h_neighbourhood(graph: &EvolvingGraph, x: u32, h: u32, t: f64, cfg: BallConfig) -> Result<RootedNeighbourhood> {
    cfg.validate()?;
    let snap = graph.snapshot(t);
    if !snap.contains(x) {
        return arg(format!("vertex {x} is not in the graph at time {t}"));
    }
    ball_in(&snap, x, h, cfg)
}

fn ball_in(snap: &Snapshot<'_>, x: u32, h: u32, cfg: BallConfig) -> Result<RootedNeighbourhood> {
    let (verts, edges) = ball(snap, x, h, cfg.cap)?;
    let g = RootedGraph::new(verts.len(), 0, &edges, cfg.orientation)?;
    Ok(RootedNeighbourhood::from_graph(&g, h))
}

pub trait MeasureKey: Ord + Clone + Send {
    fn key_string(&self) -> String;
}

impl MeasureKey for Vec<u8> {
    fn key_string(&self) -> String {
        hex::encode(self)
    }
}

impl MeasureKey for u32 {
    fn key_string(&self) -> String {
        self.to_string()
    }
}

/// Counting measure normalised by the torus volume.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure<K: MeasureKey> {
    pub counts: BTreeMap<K, u64>,
    /// Vertices whose ball exceeded the size cap.
    pub overflow: u64,
    pub normalizer: f64,
}

impl<K: MeasureKey> EmpiricalMeasure<K> {
    pub fn new(normalizer: f64) -> Self {
        EmpiricalMeasure {
            counts: BTreeMap::new(),
            overflow: 0,
            normalizer,
        }
    }

    pub fn add(&mut self, key: K) {
        *self.counts.entry(key).or_insert(0) += 1;
    }

    pub fn merge(mut self, other: Self) -> Self {
        for (k, c) in other.counts {
            *self.counts.entry(k).or_insert(0) += c;
        }
        self.overflow += other.overflow;
        self
    }

    pub fn weight(&self, key: &K) -> f64 {
        self.counts.get(key).copied().unwrap_or(0) as f64 / self.normalizer
    }

    pub fn total_count(&self) -> u64 {
        self.counts.values().sum::<u64>() + self.overflow
    }

    pub fn mass(&self) -> f64 {
        self.total_count() as f64 / self.normalizer
    }

    /// Image under `f`; the overflow bucket is carried over unchanged.
    pub fn pushforward<K2: MeasureKey>(&self, f: impl Fn(&K) -> Result<K2>) -> Result<EmpiricalMeasure<K2>> {
        let mut out = EmpiricalMeasure::new(self.normalizer);
        for (k, c) in &self.counts {
            *out.counts.entry(f(k)?).or_insert(0) += c;
        }
        out.overflow = self.overflow;
        Ok(out)
    }

    /// `{key: weight}` with an `"overflow"` entry when the bucket is nonempty.
    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (k, c) in &self.counts {
            map.insert(k.key_string(), (*c as f64 / self.normalizer).into());
        }
        if self.overflow > 0 {
            map.insert("overflow".into(), (self.overflow as f64 / self.normalizer).into());
        }
        serde_json::Value::Object(map)
    }
}

pub fn empirical_neighbourhood(graph: &EvolvingGraph, t: f64, h: u32, cfg: BallConfig) -> Result<EmpiricalMeasure<Vec<u8>>> {
    cfg.validate()?;
    let snap = graph.snapshot(t);
    let n = graph.cloud.params.volume;
    let verts = snap.vertices();
    verts
        .par_iter()
        .fold(
            || Ok(EmpiricalMeasure::new(n)),
            |acc: Result<EmpiricalMeasure<Vec<u8>>>, x| {
                let mut acc = acc?;
                match ball_in(&snap, *x, h, cfg) {
                    Ok(b) => acc.add(b.encoding),
                    Err(SpamError::SizeCap { .. }) => acc.overflow += 1,
                    Err(e) => return Err(e),
                }
                Ok(acc)
            },
        )
        .reduce(|| Ok(EmpiricalMeasure::new(n)), |a, b| Ok(a?.merge(b?)))
}

pub fn empirical_indegree(graph: &EvolvingGraph, t: f64) -> EmpiricalMeasure<u32> {
    let snap = graph.snapshot(t);
    let mut m = EmpiricalMeasure::new(graph.cloud.params.volume);
    for x in snap.vertices() {
        m.add(snap.in_degree(x));
    }
    m
}

/// Number of root neighbours in an encoded ball.
pub fn root_degree(encoding: &[u8]) -> Result<u32> {
    let g = decode(encoding)?;
    let inc = (0..g.n).filter(|v| g.out[*v] & 1 == 1).count() as u32;
    Ok(g.out[0].count_ones() * (g.orientation == Orientation::BirthOrdered) as u32 + inc)
}

/// Edges into the root of a birth-ordered ball.
pub fn root_in_degree(encoding: &[u8]) -> Result<u32> {
    let g = decode(encoding)?;
    if g.orientation != Orientation::BirthOrdered {
        return arg("in-degree needs a birth-ordered encoding");
    }
    Ok((0..g.n).filter(|v| g.out[*v] & 1 == 1).count() as u32)
}
