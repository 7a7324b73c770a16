//! Sequential graph construction. Both builders read the same marks and
//! commit each arrival's edges only after all of its candidates are decided.

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Result, SpamError};
use crate::graph::{BuildDescriptor, EvolvingGraph, ModelKind, VertexFilter};
use crate::marks::{MarkOracle, NONE};
use crate::model::ConnectionKernel;
use crate::point_process::{Colour, PointCloud};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildLog {
    pub evaluations: u64,
    pub accepted: u64,
    pub nodes_visited: u64,
    pub wall_seconds: f64,
}

impl BuildLog {
    pub fn acceptance_rate(&self) -> f64 {
        if self.evaluations == 0 {
            0.0
        } else {
            self.accepted as f64 / self.evaluations as f64
        }
    }
}

fn check_inputs(cloud: &PointCloud, oracle: &MarkOracle) -> Result<()> {
    if oracle.tree.perm.len() != cloud.len() {
        return Err(SpamError::Contract(format!(
            "mark oracle indexes {} points, cloud has {}",
            oracle.tree.perm.len(),
            cloud.len()
        )));
    }
    if cloud.births().windows(2).any(|w| w[0] >= w[1]) {
        return Err(SpamError::Contract("cloud is not birth-ordered".into()));
    }
    Ok(())
}

fn check_cutoff(range_cutoff: f64) -> Result<()> {
    if !(range_cutoff >= 0.0) {
        return arg(format!("range cutoff {range_cutoff} must be >= 0"));
    }
    Ok(())
}

fn member_mask(cloud: &PointCloud, filter: VertexFilter) -> Result<Vec<bool>> {
    if let VertexFilter::Colour(c) = filter {
        if c == Colour::Uncoloured || !cloud.is_coloured() {
            return Err(SpamError::Contract("colour filter needs a coloured cloud".into()));
        }
    }
    Ok(cloud.colours().iter().map(|c| filter.admits(*c)).collect())
}

fn descriptor(cloud: &PointCloud, model: ModelKind, range_cutoff: f64, filter: VertexFilter) -> BuildDescriptor {
    BuildDescriptor {
        model,
        range_cutoff,
        filter,
        fingerprint: cloud.params.fingerprint(),
    }
}

/// Number of candidate pairs an all-pairs build examines.
pub fn exact_candidate_count(members: &[bool]) -> u64 {
    let k = members.iter().filter(|m| **m).count() as u64;
    k * k.saturating_sub(1) / 2
}

struct Commit {
    z: Vec<u32>,
    accepted: Vec<u32>,
}

impl Commit {
    fn flush(&mut self, g: &mut EvolvingGraph, y: u32, mut on_edge: impl FnMut(u32, u32)) {
        self.accepted.sort_unstable();
        for x in self.accepted.drain(..) {
            g.push_edge(y, x);
            self.z[x as usize] += 1;
            on_edge(x, self.z[x as usize]);
        }
    }
}

/// Reference builder: every older filtered vertex is tested against every
/// arrival.
pub fn build_exact(
    cloud: &Arc<PointCloud>,
    oracle: &MarkOracle,
    kernel: &ConnectionKernel,
    range_cutoff: f64,
    filter: VertexFilter,
) -> Result<(EvolvingGraph, BuildLog)> {
    check_inputs(cloud, oracle)?;
    check_cutoff(range_cutoff)?;
    let start = Instant::now();
    let members = member_mask(cloud, filter)?;
    let min_id = oracle.tree.aggregate_min(|id| if members[id as usize] { id } else { u32::MAX });
    let mut g = EvolvingGraph::empty(
        cloud.clone(),
        members.clone(),
        descriptor(cloud, ModelKind::Spam, range_cutoff, filter),
    );
    let mut log = BuildLog::default();
    let mut state = Commit {
        z: vec![0; cloud.len()],
        accepted: Vec::new(),
    };
    for y in 0..cloud.len() as u32 {
        if !members[y as usize] {
            continue;
        }
        let t = cloud.birth(y);
        let py = cloud.pos(y);
        oracle.for_each_mark(y, &min_id, y, |x, v| {
            if x >= y || !members[x as usize] {
                return;
            }
            log.evaluations += 1;
            let d = cloud.torus.dist(cloud.pos(x), py);
            if d <= range_cutoff && v <= kernel.prob(state.z[x as usize], d, t) {
                state.accepted.push(x);
            }
        });
        log.accepted += state.accepted.len() as u64;
        state.flush(&mut g, y, |_, _| {});
    }
    log.wall_seconds = start.elapsed().as_secs_f64();
    Ok((g, log))
}

/// Branch-and-bound builder over the mark tree. A subtree is skipped only
/// when its smallest mark exceeds an upper bound on every connection
/// probability inside it, so the edge set equals that of [`build_exact`].
pub fn build_accelerated(
    cloud: &Arc<PointCloud>,
    oracle: &MarkOracle,
    kernel: &ConnectionKernel,
    range_cutoff: f64,
    filter: VertexFilter,
) -> Result<(EvolvingGraph, BuildLog)> {
    check_inputs(cloud, oracle)?;
    check_cutoff(range_cutoff)?;
    let start = Instant::now();
    let members = member_mask(cloud, filter)?;
    let tree = &oracle.tree;
    let min_id = tree.aggregate_min(|id| if members[id as usize] { id } else { u32::MAX });
    let mut maxdeg = vec![0u32; tree.nodes.len()];
    let mut g = EvolvingGraph::empty(
        cloud.clone(),
        members.clone(),
        descriptor(cloud, ModelKind::Spam, range_cutoff, filter),
    );
    let mut log = BuildLog::default();
    let mut state = Commit {
        z: vec![0; cloud.len()],
        accepted: Vec::new(),
    };
    let side = cloud.torus.side;
    let mut stack: Vec<(u32, f64, u32)> = Vec::with_capacity(128);
    for y in 0..cloud.len() as u32 {
        if !members[y as usize] || min_id[0] >= y {
            continue;
        }
        let t = cloud.birth(y);
        let py = cloud.pos(y);
        let (m, a) = oracle.root(y);
        stack.push((0, m, a));
        while let Some((v, m, a)) = stack.pop() {
            log.nodes_visited += 1;
            let n = &tree.nodes[v as usize];
            if n.is_leaf() {
                for s in n.lo..n.hi {
                    let x = tree.perm[s as usize];
                    if x >= y || !members[x as usize] {
                        continue;
                    }
                    let d = cloud.torus.dist(cloud.pos(x), py);
                    if d > range_cutoff {
                        continue;
                    }
                    log.evaluations += 1;
                    let p = kernel.prob(state.z[x as usize], d, t);
                    if m <= p && oracle.slot_mark(y, s, m, a) <= p {
                        state.accepted.push(x);
                    }
                }
                continue;
            }
            for c in [n.right, n.left] {
                if min_id[c as usize] >= y {
                    continue;
                }
                let dmin = tree.min_dist(c, py, side);
                if dmin > range_cutoff {
                    continue;
                }
                let q = kernel.prob(maxdeg[c as usize], dmin, t) * (1.0 + 1e-9);
                if m > q {
                    continue;
                }
                let (cm, ca) = oracle.child(y, c, m, a);
                if cm > q {
                    continue;
                }
                stack.push((c, cm, ca));
            }
        }
        log.accepted += state.accepted.len() as u64;
        state.flush(&mut g, y, |x, z| {
            let mut v = tree.leaf[x as usize];
            while v != NONE && maxdeg[v as usize] < z {
                maxdeg[v as usize] = z;
                v = tree.nodes[v as usize].parent;
            }
        });
    }
    log.wall_seconds = start.elapsed().as_secs_f64();
    Ok((g, log))
}

/// `G`, the black and red graphs, and range-truncated copies, all read from
/// one set of marks.
#[derive(Debug, Clone)]
pub struct CoupledFamily {
    pub full: EvolvingGraph,
    pub black: EvolvingGraph,
    pub red: EvolvingGraph,
    pub truncated: Vec<(f64, EvolvingGraph)>,
}

pub fn build_coupled_family(
    cloud: &Arc<PointCloud>,
    oracle: &MarkOracle,
    kernel: &ConnectionKernel,
    range_cutoffs: &[f64],
) -> Result<CoupledFamily> {
    if !cloud.is_coloured() {
        return Err(SpamError::Contract("coupled family needs a coloured cloud".into()));
    }
    let full = build_accelerated(cloud, oracle, kernel, f64::INFINITY, VertexFilter::All)?.0;
    let black = build_accelerated(cloud, oracle, kernel, f64::INFINITY, VertexFilter::Colour(Colour::Black))?.0;
    let red = build_accelerated(cloud, oracle, kernel, f64::INFINITY, VertexFilter::Colour(Colour::Red))?.0;
    let mut truncated = Vec::new();
    for r in range_cutoffs {
        let g = if r.is_infinite() {
            full.clone()
        } else {
            build_accelerated(cloud, oracle, kernel, *r, VertexFilter::All)?.0
        };
        truncated.push((*r, g));
    }
    Ok(CoupledFamily {
        full,
        black,
        red,
        truncated,
    })
}

/// Classical site percolation: keeps each vertex with probability `b`.
pub fn site_percolate_post(graph: &EvolvingGraph, b: f64, stream_label: &str) -> Result<EvolvingGraph> {
    if !(0.0..=1.0).contains(&b) {
        return arg(format!("retention probability {b} outside [0,1]"));
    }
    let mut rng = stream_rng(graph.cloud.params.seed, stream_label);
    let keep: Vec<bool> = (0..graph.slots()).map(|_| rng.random::<f64>() < b).collect();
    Ok(graph.restrict(&keep, VertexFilter::Subset))
}

/// Site percolation with a prescribed retained set, e.g. the black vertices.
pub fn site_percolate_with(graph: &EvolvingGraph, retained: &[bool]) -> Result<EvolvingGraph> {
    if retained.len() != graph.slots() {
        return arg("retained set length differs from vertex count");
    }
    Ok(graph.restrict(retained, VertexFilter::Subset))
}

/// Static random connection model on the same marks: `y -> x` for `x < y`
/// iff `V(x, y) <= connection_fn(|x - y|)`.
pub fn build_rcm(
    cloud: &Arc<PointCloud>,
    oracle: &MarkOracle,
    connection_fn: &dyn Fn(f64) -> f64,
) -> Result<EvolvingGraph> {
    check_inputs(cloud, oracle)?;
    let members = vec![true; cloud.len()];
    let min_id = oracle.tree.aggregate_min(|id| id);
    let mut g = EvolvingGraph::empty(
        cloud.clone(),
        members,
        descriptor(cloud, ModelKind::Rcm, f64::INFINITY, VertexFilter::All),
    );
    let mut acc = Vec::new();
    for y in 0..cloud.len() as u32 {
        let py = cloud.pos(y);
        oracle.for_each_mark(y, &min_id, y, |x, v| {
            if x < y && v <= connection_fn(cloud.torus.dist(cloud.pos(x), py)) {
                acc.push(x);
            }
        });
        acc.sort_unstable();
        for x in acc.drain(..) {
            g.push_edge(y, x);
        }
    }
    Ok(g)
}

/// As [`build_rcm`] for a nonincreasing `connection_fn`, pruning subtrees by
/// their nearest point.
pub fn build_rcm_decreasing(
    cloud: &Arc<PointCloud>,
    oracle: &MarkOracle,
    connection_fn: &dyn Fn(f64) -> f64,
) -> Result<EvolvingGraph> {
    check_inputs(cloud, oracle)?;
    let tree = &oracle.tree;
    let min_id = tree.aggregate_min(|id| id);
    let mut g = EvolvingGraph::empty(
        cloud.clone(),
        vec![true; cloud.len()],
        descriptor(cloud, ModelKind::Rcm, f64::INFINITY, VertexFilter::All),
    );
    let side = cloud.torus.side;
    let mut acc = Vec::new();
    let mut stack: Vec<(u32, f64, u32)> = Vec::new();
    for y in 1..cloud.len() as u32 {
        let py = cloud.pos(y);
        let (m, a) = oracle.root(y);
        stack.push((0, m, a));
        while let Some((v, m, a)) = stack.pop() {
            let n = &tree.nodes[v as usize];
            if n.is_leaf() {
                for s in n.lo..n.hi {
                    let x = tree.perm[s as usize];
                    if x < y && oracle.slot_mark(y, s, m, a) <= connection_fn(cloud.torus.dist(cloud.pos(x), py)) {
                        acc.push(x);
                    }
                }
                continue;
            }
            for c in [n.right, n.left] {
                if min_id[c as usize] >= y {
                    continue;
                }
                let q = connection_fn(tree.min_dist(c, py, side));
                let (cm, ca) = oracle.child(y, c, m, a);
                if cm <= q * (1.0 + 1e-9) {
                    stack.push((c, cm, ca));
                }
            }
        }
        acc.sort_unstable();
        for x in acc.drain(..) {
            g.push_edge(y, x);
        }
    }
    Ok(g)
}

/// `phi_*(r) = phi(sigma r^d / f(l))`, the comparison profile that dominates
/// every connection made after time `sigma` to a vertex of in-degree `<= l`.
pub fn dominating_profile(kernel: &ConnectionKernel, sigma: f64, ell: u32) -> impl Fn(f64) -> f64 + '_ {
    move |r| kernel.prob(ell, r, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::point_process::{colour_points, sample_points};

    fn setup(n: f64, gamma: f64, delta: f64, d: u32, seed: u64) -> (Arc<PointCloud>, MarkOracle, ConnectionKernel) {
        let p = ModelParams::new(gamma, 1.0, delta, d, n).with_seed(seed);
        let c = sample_points(&p, "points").unwrap();
        let o = MarkOracle::new(&c, seed ^ 0xabc);
        (Arc::new(c), o, p.kernel().unwrap())
    }

    #[test]
    fn accelerated_equals_exact_small_grid() {
        for seed in 0..4 {
            for (g, dl) in [(0.5, 1.5), (0.8, 3.0), (0.8, 1.2)] {
                for d in [1, 2] {
                    let (c, o, k) = setup(400.0, g, dl, d, seed);
                    for cut in [2.0, f64::INFINITY] {
                        let (a, la) = build_accelerated(&c, &o, &k, cut, VertexFilter::All).unwrap();
                        let (b, lb) = build_exact(&c, &o, &k, cut, VertexFilter::All).unwrap();
                        assert_eq!(a.edges(), b.edges(), "seed {seed} g {g} delta {dl} d {d} cut {cut}");
                        assert_eq!(lb.evaluations, exact_candidate_count(&b.members));
                        assert!(la.evaluations <= lb.evaluations);
                    }
                }
            }
        }
    }

    #[test]
    fn edges_match_direct_rule() {
        // replay with marks taken one pair at a time
        let (c, o, k) = setup(300.0, 0.8, 1.5, 1, 11);
        let (g, _) = build_accelerated(&c, &o, &k, f64::INFINITY, VertexFilter::All).unwrap();
        let mut z = vec![0u32; c.len()];
        let mut expect = Vec::new();
        for y in 0..c.len() as u32 {
            let mut acc = Vec::new();
            for x in 0..y {
                let p = k.prob(z[x as usize], c.dist(x, y), c.birth(y));
                if o.mark(x, y) <= p {
                    acc.push(x);
                }
            }
            for x in acc {
                z[x as usize] += 1;
                expect.push((y, x));
            }
        }
        assert_eq!(g.edges(), expect);
        for x in 0..c.len() as u32 {
            assert_eq!(g.in_degree(x), z[x as usize]);
        }
    }

    #[test]
    fn trivial_builds() {
        let p = ModelParams::new(0.8, 1.0, 1.5, 1, 10.0);
        let one = Arc::new(PointCloud::from_parts(p, vec![0.3], vec![0.0], None).unwrap());
        let o = MarkOracle::new(&one, 1);
        let k = p.kernel().unwrap();
        assert_eq!(build_exact(&one, &o, &k, f64::INFINITY, VertexFilter::All).unwrap().0.edge_count(), 0);

        let (c, o, k) = setup(500.0, 0.8, 1.5, 1, 2);
        let (g, _) = build_accelerated(&c, &o, &k, 0.0, VertexFilter::All).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert!(build_exact(&c, &o, &k, -1.0, VertexFilter::All).is_err());
    }

    #[test]
    fn two_vertices_forced_edge() {
        let p = ModelParams::new(0.8, 1.0, 1.5, 1, 10.0);
        let c = Arc::new(PointCloud::from_parts(p, vec![0.2, 0.6], vec![0.0, 3.0], None).unwrap());
        let k = p.kernel().unwrap();
        let prob = k.prob(0, 3.0, 0.6);
        let seed = (0..1000).find(|s| MarkOracle::new(&c, *s).mark(0, 1) <= prob).unwrap();
        let o = MarkOracle::new(&c, seed);
        let (g, _) = build_exact(&c, &o, &k, f64::INFINITY, VertexFilter::All).unwrap();
        assert_eq!(g.edges(), vec![(1, 0)]);
    }

    #[test]
    fn mismatched_oracle_rejected() {
        let (c, _, k) = setup(100.0, 0.8, 1.5, 1, 1);
        let (other, _, _) = setup(300.0, 0.8, 1.5, 1, 2);
        let o = MarkOracle::new(&other, 1);
        assert!(matches!(
            build_exact(&c, &o, &k, 1.0, VertexFilter::All),
            Err(SpamError::Contract(_))
        ));
    }

    #[test]
    fn family_containments() {
        let (c, o, k) = setup(800.0, 0.8, 1.5, 1, 4);
        let c = Arc::new(colour_points(&c, 0.3, "colours").unwrap());
        let f = build_coupled_family(&c, &o, &k, &[1.0, 5.0, f64::INFINITY]).unwrap();
        assert!(f.black.edges_subset_of(&f.full));
        assert!(f.red.edges_subset_of(&f.full));
        assert!(f.truncated[0].1.edges_subset_of(&f.truncated[1].1));
        assert!(f.truncated[1].1.edges_subset_of(&f.full));
        let blacks: Vec<bool> = c.colours().iter().map(|x| *x == Colour::Black).collect();
        let perc = site_percolate_with(&f.full, &blacks).unwrap();
        assert!(f.black.edges_subset_of(&perc));
    }

    #[test]
    fn family_needs_colours() {
        let (c, o, k) = setup(100.0, 0.8, 1.5, 1, 4);
        assert!(build_coupled_family(&c, &o, &k, &[]).is_err());
    }

    #[test]
    fn percolation_extremes() {
        let (c, o, k) = setup(300.0, 0.8, 1.5, 1, 5);
        let (g, _) = build_accelerated(&c, &o, &k, f64::INFINITY, VertexFilter::All).unwrap();
        assert_eq!(site_percolate_post(&g, 1.0, "perc").unwrap().edges(), g.edges());
        let e = site_percolate_post(&g, 0.0, "perc").unwrap();
        assert_eq!(e.edge_count(), 0);
        assert_eq!(e.vertex_count(), 0);
        assert!(site_percolate_post(&g, 1.5, "perc").is_err());
    }

    #[test]
    fn rcm_variants() {
        let (c, o, _) = setup(150.0, 0.8, 1.5, 1, 6);
        assert_eq!(build_rcm(&c, &o, &|_| 0.0).unwrap().edge_count(), 0);
        let m = c.len();
        assert_eq!(build_rcm(&c, &o, &|_| 1.0).unwrap().edge_count(), m * (m - 1) / 2);
        let f = |r: f64| (1.0 / (1.0 + r * r)).min(1.0);
        assert_eq!(
            build_rcm(&c, &o, &f).unwrap().edges(),
            build_rcm_decreasing(&c, &o, &f).unwrap().edges()
        );
    }

    #[test]
    fn rcm_dominates_on_filtered_pairs() {
        let (c, o, k) = setup(600.0, 0.8, 1.5, 1, 8);
        let (g, _) = build_accelerated(&c, &o, &k, f64::INFINITY, VertexFilter::All).unwrap();
        let (sigma, ell) = (0.3, 4);
        let rcm = build_rcm_decreasing(&c, &o, &dominating_profile(&k, sigma, ell)).unwrap();
        let mut checked = 0;
        for (y, x) in g.edges() {
            if c.birth(y) >= sigma && g.in_degree_at(x, c.birth(y)) - 1 <= ell {
                assert!(rcm.has_edge(y, x));
                checked += 1;
            }
        }
        assert!(checked > 0);
    }
}
