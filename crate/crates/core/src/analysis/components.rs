//! Connected components and breadth-first distances on the undirected skeleton.

use std::collections::VecDeque;

use crate::error::{arg, Result};
use crate::graph::GraphView;

pub const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
        }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (hi, lo) = if self.rank[ra as usize] >= self.rank[rb as usize] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[lo as usize] = hi;
        if self.rank[hi as usize] == self.rank[lo as usize] {
            self.rank[hi as usize] += 1;
        }
        true
    }
}

/// Component labels; each label is the smallest vertex id of its component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentIndex {
    /// `UNREACHABLE` for slots that are not vertices.
    pub label: Vec<u32>,
    /// Size per label, zero for ids that are not labels.
    pub size: Vec<u32>,
    pub count: usize,
    /// Label of the component holding the oldest vertex.
    pub oldest: Option<u32>,
    pub vertex_count: usize,
}

impl ComponentIndex {
    pub fn size_of(&self, v: u32) -> u32 {
        match self.label.get(v as usize) {
            Some(l) if *l != UNREACHABLE => self.size[*l as usize],
            _ => 0,
        }
    }

    pub fn giant_size(&self) -> u32 {
        self.oldest.map_or(0, |l| self.size[l as usize])
    }

    /// `#C_n / #vertices`.
    pub fn giant_fraction(&self) -> f64 {
        if self.vertex_count == 0 {
            0.0
        } else {
            self.giant_size() as f64 / self.vertex_count as f64
        }
    }

    pub fn members_of(&self, label: u32) -> Vec<u32> {
        (0..self.label.len() as u32)
            .filter(|v| self.label[*v as usize] == label)
            .collect()
    }

    pub fn sizes(&self) -> Vec<u32> {
        self.size.iter().copied().filter(|s| *s > 0).collect()
    }
}

pub fn components<G: GraphView>(g: &G) -> ComponentIndex {
    let n = g.slots();
    let mut uf = UnionFind::new(n);
    for v in 0..n as u32 {
        if g.contains(v) {
            g.for_each_neighbour(v, |w| {
                if w < v {
                    uf.union(v, w);
                }
            });
        }
    }
    let mut label = vec![UNREACHABLE; n];
    let mut root_label = vec![UNREACHABLE; n];
    let mut size = vec![0u32; n];
    let mut count = 0;
    let mut vertex_count = 0;
    let mut oldest = None;
    for v in 0..n as u32 {
        if !g.contains(v) {
            continue;
        }
        vertex_count += 1;
        let r = uf.find(v) as usize;
        if root_label[r] == UNREACHABLE {
            root_label[r] = v;
            count += 1;
        }
        let l = root_label[r];
        label[v as usize] = l;
        size[l as usize] += 1;
        if oldest.is_none() {
            oldest = Some(l);
        }
    }
    ComponentIndex {
        label,
        size,
        count,
        oldest,
        vertex_count,
    }
}

/// Hop counts from `src`, stopping at depth `cap`.
pub fn bfs<G: GraphView>(g: &G, src: u32, cap: u32) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; g.slots()];
    bfs_into(g, src, cap, &mut dist, &mut VecDeque::new());
    dist
}

/// As [`bfs`], reusing buffers; `dist` must be all `UNREACHABLE` on entry.
/// Returns the visited vertices so callers can reset the buffer cheaply.
pub fn bfs_into<G: GraphView>(g: &G, src: u32, cap: u32, dist: &mut [u32], queue: &mut VecDeque<u32>) -> Vec<u32> {
    let mut seen = Vec::new();
    if !g.contains(src) {
        return seen;
    }
    queue.clear();
    dist[src as usize] = 0;
    seen.push(src);
    queue.push_back(src);
    while let Some(v) = queue.pop_front() {
        let dv = dist[v as usize];
        if dv >= cap {
            continue;
        }
        g.for_each_neighbour(v, |w| {
            if dist[w as usize] == UNREACHABLE {
                dist[w as usize] = dv + 1;
                seen.push(w);
                queue.push_back(w);
            }
        });
    }
    seen
}

/// Hop distance, or `None` when `v` is not reachable from `u`.
pub fn graph_distance<G: GraphView>(g: &G, u: u32, v: u32) -> Result<Option<u32>> {
    if !g.contains(u) || !g.contains(v) {
        return arg(format!("unknown vertex in pair ({u}, {v})"));
    }
    if u == v {
        return Ok(Some(0));
    }
    let d = bfs(g, u, UNREACHABLE)[v as usize];
    Ok((d != UNREACHABLE).then_some(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::toy3;

    #[test]
    fn toy_path() {
        let g = toy3(&[(1, 0), (2, 1)]);
        let c = components(&g.full());
        assert_eq!(c.count, 1);
        assert_eq!(c.giant_size(), 3);
        assert_eq!(graph_distance(&g.full(), 0, 2).unwrap(), Some(2));
        assert_eq!(graph_distance(&g.full(), 1, 1).unwrap(), Some(0));
        assert!(graph_distance(&g.full(), 0, 7).is_err());
    }

    #[test]
    fn disconnected_and_empty() {
        let g = toy3(&[(2, 1)]);
        let c = components(&g.full());
        assert_eq!(c.count, 2);
        assert_eq!(c.label, vec![0, 1, 1]);
        assert_eq!(c.oldest, Some(0));
        assert!((c.giant_fraction() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(graph_distance(&g.full(), 0, 2).unwrap(), None);
        let e = g.snapshot(0.0);
        let c = components(&e);
        assert_eq!(c.count, 0);
        assert_eq!(c.oldest, None);
    }

    #[test]
    fn union_find_basics() {
        let mut uf = UnionFind::new(5);
        assert!(uf.union(0, 1));
        assert!(uf.union(3, 4));
        assert!(!uf.union(1, 0));
        assert_eq!(uf.find(0), uf.find(1));
        assert_ne!(uf.find(0), uf.find(3));
    }
}
