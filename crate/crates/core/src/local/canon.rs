//! Canonical forms of rooted graphs with at most 64 vertices.
//!
//! Individualisation-refinement: the root is a cell of its own, partitions are
//! refined to equitable ones, the first non-singleton cell is branched on, and
//! branches equivalent under automorphisms already found are skipped. The
//! certificate is the lexicographically smallest relabelled adjacency matrix
//! among the leaves explored.

use serde::{Deserialize, Serialize};

use crate::error::{arg, Result, SpamError};

pub const MAX_VERTICES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    Undirected,
    /// Edges point from the younger to the older endpoint.
    BirthOrdered,
}

/// Rooted graph on vertices `0..n`; `out[v]` is the bitmask of targets of `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedGraph {
    pub n: usize,
    pub root: usize,
    pub out: Vec<u64>,
    pub orientation: Orientation,
}

impl RootedGraph {
    pub fn new(n: usize, root: usize, edges: &[(usize, usize)], orientation: Orientation) -> Result<Self> {
        if n == 0 || n > MAX_VERTICES {
            return Err(SpamError::SizeCap {
                size: n,
                cap: MAX_VERTICES,
            });
        }
        if root >= n {
            return arg(format!("root {root} outside 0..{n}"));
        }
        let mut out = vec![0u64; n];
        for (a, b) in edges {
            if *a >= n || *b >= n || a == b {
                return arg(format!("bad edge ({a}, {b})"));
            }
            out[*a] |= 1 << b;
            if orientation == Orientation::Undirected {
                out[*b] |= 1 << a;
            }
        }
        Ok(RootedGraph {
            n,
            root,
            out,
            orientation,
        })
    }

    fn incoming(&self) -> Vec<u64> {
        let mut inc = vec![0u64; self.n];
        for (v, row) in self.out.iter().enumerate() {
            let mut r = *row;
            while r != 0 {
                let w = r.trailing_zeros() as usize;
                inc[w] |= 1 << v;
                r &= r - 1;
            }
        }
        inc
    }

    /// Same graph with vertex `v` renamed `perm[v]`.
    pub fn relabel(&self, perm: &[usize]) -> RootedGraph {
        let mut out = vec![0u64; self.n];
        for (v, row) in self.out.iter().enumerate() {
            let mut r = *row;
            while r != 0 {
                let w = r.trailing_zeros() as usize;
                out[perm[v]] |= 1 << perm[w];
                r &= r - 1;
            }
        }
        RootedGraph {
            n: self.n,
            root: perm[self.root],
            out,
            orientation: self.orientation,
        }
    }

    pub fn edge_count(&self) -> usize {
        let total: u32 = self.out.iter().map(|r| r.count_ones()).sum();
        match self.orientation {
            Orientation::Undirected => total as usize / 2,
            Orientation::BirthOrdered => total as usize,
        }
    }
}

struct Search<'a> {
    g: &'a RootedGraph,
    inc: Vec<u64>,
    first: Option<(Vec<usize>, Vec<u64>)>,
    first_path: Vec<usize>,
    best: Option<(Vec<usize>, Vec<u64>)>,
    autos: Vec<Vec<usize>>,
}

fn cells_of(mask: u64) -> impl Iterator<Item = usize> {
    let mut m = mask;
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let v = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(v)
        }
    })
}

impl Search<'_> {
    fn key(&self, v: usize, splitter: u64) -> (u32, u32) {
        let o = (self.g.out[v] & splitter).count_ones();
        match self.g.orientation {
            Orientation::Undirected => (o, 0),
            Orientation::BirthOrdered => (o, (self.inc[v] & splitter).count_ones()),
        }
    }

    /// Refines an ordered partition until every cell is equitable with
    /// respect to every other.
    fn refine(&self, cells: &mut Vec<u64>) {
        loop {
            let mut changed = false;
            let mut si = 0;
            while si < cells.len() {
                let splitter = cells[si];
                let mut next = Vec::with_capacity(cells.len() + 4);
                for c in cells.iter() {
                    if c.count_ones() == 1 {
                        next.push(*c);
                        continue;
                    }
                    let mut keyed: Vec<((u32, u32), usize)> =
                        cells_of(*c).map(|v| (self.key(v, splitter), v)).collect();
                    keyed.sort_unstable();
                    let mut cur = 0u64;
                    let mut last = keyed[0].0;
                    for (k, v) in keyed {
                        if k != last {
                            next.push(cur);
                            cur = 0;
                            last = k;
                            changed = true;
                        }
                        cur |= 1 << v;
                    }
                    next.push(cur);
                }
                *cells = next;
                si += 1;
            }
            if !changed {
                return;
            }
        }
    }

    fn certificate(&self, order: &[usize]) -> Vec<u64> {
        let mut pos = vec![0usize; self.g.n];
        for (i, v) in order.iter().enumerate() {
            pos[*v] = i;
        }
        order
            .iter()
            .map(|v| cells_of(self.g.out[*v]).fold(0u64, |acc, w| acc | 1 << pos[w]))
            .collect()
    }

    /// Orbit representatives under stored automorphisms fixing `path`.
    fn same_orbit(&self, path: &[usize], a: usize, b: usize) -> bool {
        let n = self.g.n;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for g in &self.autos {
            if path.iter().all(|p| g[*p] == *p) {
                for v in 0..n {
                    let (x, y) = (find(&mut parent, v), find(&mut parent, g[v]));
                    if x != y {
                        parent[x] = y;
                    }
                }
            }
        }
        find(&mut parent, a) == find(&mut parent, b)
    }

    /// Returns the depth to unwind to after an automorphism with the first
    /// leaf is found.
    fn search(&mut self, mut cells: Vec<u64>, path: &mut Vec<usize>) -> Option<usize> {
        self.refine(&mut cells);
        if let Some(t) = cells.iter().position(|c| c.count_ones() > 1) {
            let members: Vec<usize> = cells_of(cells[t]).collect();
            let mut explored: Vec<usize> = Vec::new();
            for v in members {
                if explored.iter().any(|u| self.same_orbit(path, *u, v)) {
                    continue;
                }
                let mut next = cells.clone();
                next[t] &= !(1 << v);
                next.insert(t, 1 << v);
                path.push(v);
                let r = self.search(next, path);
                path.pop();
                explored.push(v);
                if let Some(level) = r {
                    if level < path.len() {
                        return Some(level);
                    }
                }
            }
            return None;
        }
        let order: Vec<usize> = cells.iter().map(|c| c.trailing_zeros() as usize).collect();
        let cert = self.certificate(&order);
        let Some((first_order, first_cert)) = &self.first else {
            self.first = Some((order.clone(), cert.clone()));
            self.first_path = path.clone();
            self.best = Some((order, cert));
            return None;
        };
        let automorphism = |from: &[usize]| {
            let mut g = vec![0usize; self.g.n];
            for (a, b) in from.iter().zip(&order) {
                g[*a] = *b;
            }
            g
        };
        if cert == *first_cert {
            let g = automorphism(first_order);
            self.autos.push(g);
            let common = path.iter().zip(&self.first_path).take_while(|(a, b)| a == b).count();
            return Some(common);
        }
        let (best_order, best_cert) = self.best.as_ref().unwrap();
        if cert == *best_cert {
            let g = automorphism(best_order);
            self.autos.push(g);
        } else if cert < *best_cert {
            self.best = Some((order, cert));
        }
        None
    }
}

/// Relabelling `order[i] -> i` that yields the canonical form.
pub fn canonical_order(g: &RootedGraph) -> Vec<usize> {
    let mut s = Search {
        g,
        inc: g.incoming(),
        first: None,
        first_path: Vec::new(),
        best: None,
        autos: Vec::new(),
    };
    let rest = if g.n == 64 { !0u64 } else { (1u64 << g.n) - 1 } & !(1u64 << g.root);
    let mut cells = vec![1u64 << g.root];
    if rest != 0 {
        cells.push(rest);
    }
    s.search(cells, &mut Vec::new());
    s.best.unwrap().0
}

/// Byte encoding: orientation flag, vertex count (u16 LE), then the packed
/// adjacency bits of the canonical relabelling (upper triangle when
/// undirected, all off-diagonal entries otherwise).
pub fn canonical_encoding(g: &RootedGraph) -> Vec<u8> {
    let order = canonical_order(g);
    let mut pos = vec![0usize; g.n];
    for (i, v) in order.iter().enumerate() {
        pos[*v] = i;
    }
    let relabelled = g.relabel(&pos);
    let mut out = vec![(g.orientation == Orientation::BirthOrdered) as u8];
    out.extend_from_slice(&(g.n as u16).to_le_bytes());
    let mut bits = Vec::new();
    for i in 0..g.n {
        for j in 0..g.n {
            let take = match g.orientation {
                Orientation::Undirected => j > i,
                Orientation::BirthOrdered => j != i,
            };
            if take {
                bits.push(relabelled.out[i] >> j & 1 == 1);
            }
        }
    }
    for chunk in bits.chunks(8) {
        out.push(chunk.iter().enumerate().fold(0u8, |acc, (k, b)| acc | (*b as u8) << k));
    }
    out
}

/// Decodes [`canonical_encoding`]; the root is vertex 0.
pub fn decode(enc: &[u8]) -> Result<RootedGraph> {
    if enc.len() < 3 {
        return arg("encoding too short");
    }
    let orientation = if enc[0] & 1 == 1 {
        Orientation::BirthOrdered
    } else {
        Orientation::Undirected
    };
    let n = u16::from_le_bytes([enc[1], enc[2]]) as usize;
    let mut edges = Vec::new();
    let mut k = 0;
    for i in 0..n {
        for j in 0..n {
            let take = match orientation {
                Orientation::Undirected => j > i,
                Orientation::BirthOrdered => j != i,
            };
            if take {
                let byte = *enc.get(3 + k / 8).ok_or(SpamError::Argument("encoding truncated".into()))?;
                if byte >> (k % 8) & 1 == 1 {
                    edges.push((i, j));
                }
                k += 1;
            }
        }
    }
    RootedGraph::new(n, 0, &edges, orientation)
}

pub fn canonical_equal(a: &RootedGraph, b: &RootedGraph) -> bool {
    a.n == b.n && a.orientation == b.orientation && canonical_encoding(a) == canonical_encoding(b)
}
