//! Edge marks `V(x, y)`.
//!
//! For every arrival `y` the marks `V(x, y)` over all cloud points `x` are iid
//! uniform. They are laid out on a space-time k-d tree and generated top-down:
//! a node of size `k` draws its minimum from `Beta(1, k)` and the position of
//! that minimum uniformly, the sibling that does not hold the minimum draws a
//! fresh conditional minimum, and so on down to the buckets. Each draw is a
//! hash of `(seed, y, node)`, so any single mark can be recomputed along one
//! root-to-leaf path, and whole subtrees can be discarded by their minimum.

use std::sync::Arc;

use crate::error::{arg, Result};
use crate::point_process::PointCloud;
use crate::rng::{below, open_unit, splitmix};

pub const NONE: u32 = u32::MAX;
const BUCKET: usize = 8;
const BIRTH_RATIO: f64 = 4.0;

const TAG_NODE: u64 = 0x6e6f_6465;
const TAG_POS: u64 = 0x706f_7369;
const TAG_SLOT: u64 = 0x736c_6f74;

#[derive(Debug, Clone)]
pub struct Node {
    pub lo: u32,
    pub hi: u32,
    pub left: u32,
    pub right: u32,
    pub parent: u32,
}

impl Node {
    #[inline]
    pub fn is_leaf(&self) -> bool {
        self.left == NONE
    }

    #[inline]
    pub fn size(&self) -> u32 {
        self.hi - self.lo
    }
}

/// k-d tree over `(position, birth)`. Nodes are split by birth rank until
/// their births lie within a factor `BIRTH_RATIO`, then spatially; leaves hold
/// at most eight points.
#[derive(Debug, Clone)]
pub struct SpaceTimeTree {
    pub dimension: usize,
    pub nodes: Vec<Node>,
    /// `bbox[node * 2d ..]` holds `lo_0, hi_0, lo_1, hi_1, ...`.
    pub bbox: Vec<f64>,
    /// Point id stored in each slot.
    pub perm: Vec<u32>,
    /// Slot of each point id.
    pub slot: Vec<u32>,
    /// Leaf holding each point id.
    pub leaf: Vec<u32>,
}

impl SpaceTimeTree {
    pub fn build(cloud: &PointCloud) -> Self {
        let d = cloud.dimension();
        let m = cloud.len();
        let mut tree = SpaceTimeTree {
            dimension: d,
            nodes: Vec::with_capacity(2 * m / BUCKET + 2),
            bbox: Vec::new(),
            perm: (0..m as u32).collect(),
            slot: vec![0; m],
            leaf: vec![0; m],
        };
        if m > 0 {
            tree.split(cloud, 0, m, NONE);
        } else {
            tree.nodes.push(Node {
                lo: 0,
                hi: 0,
                left: NONE,
                right: NONE,
                parent: NONE,
            });
            tree.bbox.extend(std::iter::repeat_n(0.0, 2 * d));
        }
        for (s, id) in tree.perm.iter().enumerate() {
            tree.slot[*id as usize] = s as u32;
        }
        tree
    }

    fn split(&mut self, cloud: &PointCloud, lo: usize, hi: usize, parent: u32) -> u32 {
        let d = self.dimension;
        let idx = self.nodes.len() as u32;
        self.nodes.push(Node {
            lo: lo as u32,
            hi: hi as u32,
            left: NONE,
            right: NONE,
            parent,
        });
        for k in 0..d {
            let (mut a, mut b) = (f64::INFINITY, f64::NEG_INFINITY);
            for id in &self.perm[lo..hi] {
                let c = cloud.pos(*id)[k];
                a = a.min(c);
                b = b.max(c);
            }
            self.bbox.push(a);
            self.bbox.push(b);
        }
        if hi - lo <= BUCKET {
            for id in &self.perm[lo..hi] {
                self.leaf[*id as usize] = idx;
            }
            return idx;
        }
        let axis = self.split_axis(cloud, idx, lo, hi);
        let mid = lo + (hi - lo) / 2;
        if axis == d {
            // ids are birth ranks
            self.perm[lo..hi].select_nth_unstable(mid - lo);
        } else {
            self.perm[lo..hi].select_nth_unstable_by(mid - lo, |a, b| {
                cloud.pos(*a)[axis].total_cmp(&cloud.pos(*b)[axis]).then(a.cmp(b))
            });
        }
        let l = self.split(cloud, lo, mid, idx);
        let r = self.split(cloud, mid, hi, idx);
        self.nodes[idx as usize].left = l;
        self.nodes[idx as usize].right = r;
        idx
    }

    /// Splits time while the birth times of the node span more than a factor
    /// `BIRTH_RATIO`, space (widest axis) otherwise.
    fn split_axis(&self, cloud: &PointCloud, v: u32, lo: usize, hi: usize) -> usize {
        let d = self.dimension;
        let ids = &self.perm[lo..hi];
        let oldest = cloud.birth(*ids.iter().min().unwrap());
        let youngest = cloud.birth(*ids.iter().max().unwrap());
        if youngest > BIRTH_RATIO * oldest {
            return d;
        }
        let b = self.node_bbox(v);
        let (mut axis, mut width) = (0, f64::NEG_INFINITY);
        for k in 0..d {
            let w = b[2 * k + 1] - b[2 * k];
            if w > width {
                axis = k;
                width = w;
            }
        }
        axis
    }

    #[inline]
    pub fn node_bbox(&self, v: u32) -> &[f64] {
        let w = 2 * self.dimension;
        &self.bbox[v as usize * w..(v as usize + 1) * w]
    }

    /// Smallest torus distance from `y` to the bounding box of node `v`.
    #[inline]
    pub fn min_dist(&self, v: u32, y: &[f64], side: f64) -> f64 {
        let b = self.node_bbox(v);
        let wrap = |a: f64, c: f64| {
            let t = (a - c).abs();
            t.min(side - t)
        };
        if self.dimension == 1 {
            let (lo, hi) = (b[0], b[1]);
            let c = y[0];
            return if c >= lo && c <= hi {
                0.0
            } else {
                wrap(c, lo).min(wrap(c, hi))
            };
        }
        let mut acc = 0.0;
        for (k, c) in y.iter().enumerate() {
            let (lo, hi) = (b[2 * k], b[2 * k + 1]);
            if *c < lo || *c > hi {
                let w = wrap(*c, lo).min(wrap(*c, hi));
                acc += w * w;
            }
        }
        acc.sqrt()
    }

    /// Per-node aggregate `min` of `value(id)` over members, bottom-up.
    pub fn aggregate_min<F: Fn(u32) -> u32>(&self, value: F) -> Vec<u32> {
        let mut out = vec![u32::MAX; self.nodes.len()];
        for v in (0..self.nodes.len()).rev() {
            let n = &self.nodes[v];
            out[v] = if n.is_leaf() {
                self.perm[n.lo as usize..n.hi as usize]
                    .iter()
                    .map(|id| value(*id))
                    .min()
                    .unwrap_or(u32::MAX)
            } else {
                out[n.left as usize].min(out[n.right as usize])
            };
        }
        out
    }
}

/// Deterministic source of the iid uniform marks `V(older, younger)`.
#[derive(Debug, Clone)]
pub struct MarkOracle {
    pub seed: u64,
    pub tree: Arc<SpaceTimeTree>,
}

#[inline]
fn node_key(seed: u64, y: u32, v: u32) -> u64 {
    splitmix(splitmix(splitmix(seed ^ TAG_NODE) ^ y as u64) ^ v as u64)
}

/// Minimum of `k` iid uniforms on `(floor, 1)`.
#[inline]
fn cond_min(floor: f64, k: u32, u: f64) -> f64 {
    let b = -(u.ln() / k as f64).exp_m1();
    floor + (1.0 - floor) * b
}

impl MarkOracle {
    pub fn new(cloud: &PointCloud, seed: u64) -> Self {
        MarkOracle {
            seed,
            tree: Arc::new(SpaceTimeTree::build(cloud)),
        }
    }

    /// Fresh `(min, argmin slot)` for node `v` given the floor inherited from
    /// the parent.
    #[inline]
    pub fn fresh(&self, y: u32, v: u32, floor: f64) -> (f64, u32) {
        let n = &self.tree.nodes[v as usize];
        let h = node_key(self.seed, y, v);
        let m = cond_min(floor, n.size(), open_unit(h));
        let a = n.lo + below(splitmix(h ^ TAG_POS), n.size() as u64) as u32;
        (m, a)
    }

    #[inline]
    pub fn root(&self, y: u32) -> (f64, u32) {
        self.fresh(y, 0, 0.0)
    }

    /// State of child `c` of a node whose state is `(m, a)`.
    #[inline]
    pub fn child(&self, y: u32, c: u32, m: f64, a: u32) -> (f64, u32) {
        let n = &self.tree.nodes[c as usize];
        if a >= n.lo && a < n.hi {
            (m, a)
        } else {
            self.fresh(y, c, m)
        }
    }

    /// Mark of the point in `slot` inside a leaf whose state is `(m, a)`.
    #[inline]
    pub fn slot_mark(&self, y: u32, slot: u32, m: f64, a: u32) -> f64 {
        if slot == a {
            m
        } else {
            let h = splitmix(splitmix(splitmix(self.seed ^ TAG_SLOT) ^ y as u64) ^ slot as u64);
            m + (1.0 - m) * open_unit(h)
        }
    }

    /// `V(x, y)` by a single root-to-leaf descent.
    pub fn mark(&self, x: u32, y: u32) -> f64 {
        let t = &self.tree;
        let s = t.slot[x as usize];
        let (mut m, mut a) = self.root(y);
        let mut v = 0u32;
        loop {
            let n = &t.nodes[v as usize];
            if n.is_leaf() {
                return self.slot_mark(y, s, m, a);
            }
            let l = &t.nodes[n.left as usize];
            let c = if s < l.hi { n.left } else { n.right };
            (m, a) = self.child(y, c, m, a);
            v = c;
        }
    }

    /// Calls `visit(x, V(x, y))` for every point `x` in a node whose
    /// `min_id` entry is below `below_id`, in slot order.
    pub fn for_each_mark<F: FnMut(u32, f64)>(&self, y: u32, min_id: &[u32], below_id: u32, mut visit: F) {
        let t = &self.tree;
        if t.perm.is_empty() || min_id[0] >= below_id {
            return;
        }
        let mut stack = Vec::with_capacity(64);
        let (m, a) = self.root(y);
        stack.push((0u32, m, a));
        while let Some((v, m, a)) = stack.pop() {
            let n = &t.nodes[v as usize];
            if n.is_leaf() {
                for s in n.lo..n.hi {
                    visit(t.perm[s as usize], self.slot_mark(y, s, m, a));
                }
                continue;
            }
            for c in [n.right, n.left] {
                if min_id[c as usize] < below_id {
                    let (cm, ca) = self.child(y, c, m, a);
                    stack.push((c, cm, ca));
                }
            }
        }
    }
}

pub fn edge_mark(oracle: &MarkOracle, older: u32, younger: u32) -> Result<f64> {
    if older == younger {
        return arg(format!("edge mark requested for the pair ({older}, {older})"));
    }
    let m = oracle.tree.perm.len() as u32;
    if older >= m || younger >= m {
        return arg(format!("vertex id out of range (count {m})"));
    }
    Ok(oracle.mark(older, younger))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::point_process::sample_points;

    fn cloud(n: f64, d: u32, seed: u64) -> PointCloud {
        sample_points(&ModelParams::new(0.8, 1.0, 1.5, d, n).with_seed(seed), "points").unwrap()
    }

    #[test]
    fn tree_partitions_points() {
        let c = cloud(500.0, 2, 1);
        let t = SpaceTimeTree::build(&c);
        let mut seen = vec![false; c.len()];
        for n in t.nodes.iter().filter(|n| n.is_leaf()) {
            assert!(n.size() as usize <= BUCKET);
            for s in n.lo..n.hi {
                let id = t.perm[s as usize];
                assert!(!seen[id as usize]);
                seen[id as usize] = true;
            }
        }
        assert!(seen.iter().all(|x| *x));
        for v in 0..t.nodes.len() as u32 {
            let n = &t.nodes[v as usize];
            let b = t.node_bbox(v);
            for s in n.lo..n.hi {
                let p = c.pos(t.perm[s as usize]);
                for k in 0..2 {
                    assert!(p[k] >= b[2 * k] && p[k] <= b[2 * k + 1]);
                }
            }
        }
    }

    #[test]
    fn min_dist_is_a_lower_bound() {
        for d in 1..=3 {
            let c = cloud(400.0, d, 5);
            let t = SpaceTimeTree::build(&c);
            for y in (0..c.len() as u32).step_by(37) {
                for v in 0..t.nodes.len() as u32 {
                    let lb = t.min_dist(v, c.pos(y), c.torus.side);
                    let n = &t.nodes[v as usize];
                    for s in n.lo..n.hi {
                        assert!(lb <= c.dist(y, t.perm[s as usize]));
                    }
                }
            }
        }
    }

    #[test]
    fn traversal_matches_descent() {
        let c = cloud(300.0, 1, 9);
        let o = MarkOracle::new(&c, 77);
        let zeros = vec![0u32; o.tree.nodes.len()];
        for y in [0u32, 5, 150, c.len() as u32 - 1] {
            let mut count = 0;
            o.for_each_mark(y, &zeros, 1, |x, v| {
                assert_eq!(v, o.mark(x, y));
                assert!(v > 0.0 && v < 1.0);
                count += 1;
            });
            assert_eq!(count, c.len());
        }
    }

    #[test]
    fn node_minimum_bounds_subtree() {
        let c = cloud(200.0, 2, 2);
        let o = MarkOracle::new(&c, 3);
        let t = &o.tree;
        let y = 17;
        // recompute states top-down and compare with leaf marks
        let mut state = vec![(0.0, 0u32); t.nodes.len()];
        state[0] = o.root(y);
        for v in 0..t.nodes.len() {
            let n = &t.nodes[v];
            if !n.is_leaf() {
                let (m, a) = state[v];
                state[n.left as usize] = o.child(y, n.left, m, a);
                state[n.right as usize] = o.child(y, n.right, m, a);
            }
        }
        for (v, n) in t.nodes.iter().enumerate() {
            let (m, a) = state[v];
            let marks: Vec<f64> = (n.lo..n.hi).map(|s| o.mark(t.perm[s as usize], y)).collect();
            let lo = marks.iter().cloned().fold(f64::INFINITY, f64::min);
            assert_eq!(lo, m);
            assert_eq!(o.mark(t.perm[a as usize], y), m);
        }
    }

    #[test]
    fn edge_mark_errors() {
        let c = cloud(50.0, 1, 1);
        let o = MarkOracle::new(&c, 1);
        assert!(edge_mark(&o, 3, 3).is_err());
        assert!(edge_mark(&o, 0, 10_000).is_err());
        assert_eq!(edge_mark(&o, 1, 4).unwrap(), edge_mark(&o, 1, 4).unwrap());
    }
}
