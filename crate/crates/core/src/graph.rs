//! Birth-ordered evolving graphs and their time snapshots.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::point_process::{Colour, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Spam,
    Rcm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexFilter {
    All,
    Colour(Colour),
    /// Arbitrary retained subset, e.g. after site percolation.
    Subset,
}

impl VertexFilter {
    pub fn admits(&self, c: Colour) -> bool {
        match self {
            VertexFilter::All | VertexFilter::Subset => true,
            VertexFilter::Colour(k) => *k == c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildDescriptor {
    pub model: ModelKind,
    pub range_cutoff: f64,
    pub filter: VertexFilter,
    pub fingerprint: String,
}

/// Graph on a point cloud. Edges point from the younger to the older
/// endpoint and carry the younger endpoint's birth time.
#[derive(Debug, Clone)]
pub struct EvolvingGraph {
    pub cloud: Arc<PointCloud>,
    pub members: Vec<bool>,
    /// Younger in-neighbours of each vertex, ascending.
    pub in_edges: Vec<Vec<u32>>,
    /// Older out-neighbours of each vertex, ascending.
    pub out_edges: Vec<Vec<u32>>,
    pub descriptor: BuildDescriptor,
}

impl EvolvingGraph {
    pub fn empty(cloud: Arc<PointCloud>, members: Vec<bool>, descriptor: BuildDescriptor) -> Self {
        let m = cloud.len();
        EvolvingGraph {
            cloud,
            members,
            in_edges: vec![Vec::new(); m],
            out_edges: vec![Vec::new(); m],
            descriptor,
        }
    }

    /// Adds `younger -> older`; callers keep arrivals in birth order.
    pub fn push_edge(&mut self, younger: u32, older: u32) {
        debug_assert!(older < younger);
        self.in_edges[older as usize].push(younger);
        self.out_edges[younger as usize].push(older);
    }

    pub fn slots(&self) -> usize {
        self.members.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.members.iter().filter(|m| **m).count()
    }

    pub fn edge_count(&self) -> usize {
        self.out_edges.iter().map(Vec::len).sum()
    }

    pub fn in_degree(&self, x: u32) -> u32 {
        self.in_edges[x as usize].len() as u32
    }

    /// `Z_x(t)`: in-edges born at or before `t`.
    pub fn in_degree_at(&self, x: u32, t: f64) -> u32 {
        let limit = self.cloud.count_born_by(t) as u32;
        self.in_edges[x as usize].partition_point(|y| *y < limit) as u32
    }

    /// All edges as `(younger, older)`, sorted.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (y, olds) in self.out_edges.iter().enumerate() {
            for x in olds {
                out.push((y as u32, *x));
            }
        }
        out
    }

    pub fn has_edge(&self, younger: u32, older: u32) -> bool {
        self.out_edges[younger as usize].binary_search(&older).is_ok()
    }

    pub fn snapshot(&self, t: f64) -> Snapshot<'_> {
        Snapshot {
            graph: self,
            t,
            limit: self.cloud.count_born_by(t) as u32,
        }
    }

    pub fn full(&self) -> Snapshot<'_> {
        Snapshot {
            graph: self,
            t: 1.0,
            limit: self.slots() as u32,
        }
    }

    /// Copy restricted to `keep`; edges survive when both ends are kept.
    pub fn restrict(&self, keep: &[bool], filter: VertexFilter) -> EvolvingGraph {
        let members: Vec<bool> = self.members.iter().zip(keep).map(|(a, b)| *a && *b).collect();
        let mut g = EvolvingGraph::empty(
            self.cloud.clone(),
            members,
            BuildDescriptor {
                filter,
                ..self.descriptor.clone()
            },
        );
        for (y, olds) in self.out_edges.iter().enumerate() {
            if !g.members[y] {
                continue;
            }
            for x in olds {
                if g.members[*x as usize] {
                    g.push_edge(y as u32, *x);
                }
            }
        }
        g
    }

    /// True when every edge of `self` is an edge of `other`.
    pub fn edges_subset_of(&self, other: &EvolvingGraph) -> bool {
        self.out_edges
            .iter()
            .zip(&other.out_edges)
            .all(|(a, b)| a.iter().all(|x| b.binary_search(x).is_ok()))
    }
}

/// Read access to the undirected skeleton of a graph.
pub trait GraphView {
    /// Upper bound on vertex ids plus one.
    fn slots(&self) -> usize;
    fn contains(&self, v: u32) -> bool;
    fn birth(&self, v: u32) -> f64;
    fn for_each_neighbour<F: FnMut(u32)>(&self, v: u32, f: F);

    fn vertices(&self) -> Vec<u32> {
        (0..self.slots() as u32).filter(|v| self.contains(*v)).collect()
    }

    fn degree(&self, v: u32) -> usize {
        let mut k = 0;
        self.for_each_neighbour(v, |_| k += 1);
        k
    }
}

/// `G(t)`: vertices born at or before `t` and the edges they created.
#[derive(Debug, Clone, Copy)]
pub struct Snapshot<'a> {
    pub graph: &'a EvolvingGraph,
    pub t: f64,
    /// First vertex id born after `t`.
    pub limit: u32,
}

impl Snapshot<'_> {
    pub fn in_neighbours(&self, v: u32) -> &[u32] {
        let ins = &self.graph.in_edges[v as usize];
        &ins[..ins.partition_point(|y| *y < self.limit)]
    }

    pub fn out_neighbours(&self, v: u32) -> &[u32] {
        if v < self.limit {
            &self.graph.out_edges[v as usize]
        } else {
            &[]
        }
    }

    pub fn in_degree(&self, v: u32) -> u32 {
        self.in_neighbours(v).len() as u32
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.members[..self.limit as usize].iter().filter(|m| **m).count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.out_edges[..self.limit as usize].iter().map(Vec::len).sum()
    }

    pub fn edges(&self) -> Vec<(u32, u32)> {
        self.graph
            .edges()
            .into_iter()
            .filter(|(y, _)| *y < self.limit)
            .collect()
    }
}

impl GraphView for Snapshot<'_> {
    fn slots(&self) -> usize {
        self.limit as usize
    }

    fn contains(&self, v: u32) -> bool {
        v < self.limit && self.graph.members[v as usize]
    }

    fn birth(&self, v: u32) -> f64 {
        self.graph.cloud.birth(v)
    }

    #[inline]
    fn for_each_neighbour<F: FnMut(u32)>(&self, v: u32, mut f: F) {
        for x in self.out_neighbours(v) {
            f(*x);
        }
        for y in self.in_neighbours(v) {
            f(*y);
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::ModelParams;

    /// a(0.1), b(0.5), c(0.9) on a 1-d torus of volume 10.
    pub fn toy3(edges: &[(u32, u32)]) -> EvolvingGraph {
        let p = ModelParams::new(0.8, 1.0, 1.5, 1, 10.0);
        let cloud = PointCloud::from_parts(p, vec![0.1, 0.5, 0.9], vec![0.0, 1.0, 2.0], None).unwrap();
        toy_on(cloud, edges)
    }

    pub fn toy_on(cloud: PointCloud, edges: &[(u32, u32)]) -> EvolvingGraph {
        let m = cloud.len();
        let mut g = EvolvingGraph::empty(
            Arc::new(cloud),
            vec![true; m],
            BuildDescriptor {
                model: ModelKind::Spam,
                range_cutoff: f64::INFINITY,
                filter: VertexFilter::All,
                fingerprint: String::new(),
            },
        );
        let mut e = edges.to_vec();
        e.sort();
        for (y, x) in e {
            g.push_edge(y, x);
        }
        for ins in g.in_edges.iter_mut() {
            ins.sort();
        }
        g
    }

    #[test]
    fn snapshot_toy() {
        let g = toy3(&[(1, 0), (2, 1)]);
        let s = g.snapshot(0.5);
        assert_eq!(s.edges(), vec![(1, 0)]);
        assert_eq!(s.vertex_count(), 2);
        assert_eq!(g.snapshot(1.0).edges(), g.edges());
        let s0 = g.snapshot(0.0);
        assert_eq!(s0.vertex_count(), 0);
        assert_eq!(s0.edge_count(), 0);
        assert_eq!(g.in_degree_at(0, 0.5), 1);
        assert_eq!(g.in_degree_at(0, 0.49), 0);
    }

    #[test]
    fn restrict_drops_incident_edges() {
        let g = toy3(&[(1, 0), (2, 1), (2, 0)]);
        let h = g.restrict(&[true, false, true], VertexFilter::Subset);
        assert_eq!(h.edges(), vec![(2, 0)]);
        assert!(h.edges_subset_of(&g));
        assert!(!g.edges_subset_of(&h));
    }
}
