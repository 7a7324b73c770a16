//! Discrepancy counters between a graph and its range-truncated version.

use super::canon::{Orientation, RootedGraph};
use super::neighbourhood::{ball, RootedNeighbourhood};
use crate::error::{arg, Result, SpamError};
use crate::graph::{EvolvingGraph, GraphView, Snapshot};
use crate::point_process::{cube_of, dense_cube_census};

fn matches(snap: &Snapshot<'_>, x: u32, h: u32, pattern: &RootedNeighbourhood, orientation: Orientation) -> Result<bool> {
    match ball(snap, x, h, pattern.vertices) {
        Ok((verts, edges)) => {
            if verts.len() != pattern.vertices {
                return Ok(false);
            }
            let g = RootedGraph::new(verts.len(), 0, &edges, orientation)?;
            Ok(RootedNeighbourhood::from_graph(&g, h).encoding == pattern.encoding)
        }
        Err(SpamError::SizeCap { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Vertices where exactly one of `[G(t),x]_h` and `[G_trunc(t),x]_h` is
/// isomorphic to `pattern`. Balls larger than the pattern are rejected before
/// canonicalisation, so no cap overflow can occur.
pub fn bad_vertex_count(
    g: &EvolvingGraph,
    truncated: &EvolvingGraph,
    t: f64,
    h: u32,
    pattern: &RootedNeighbourhood,
) -> Result<usize> {
    if g.slots() != truncated.slots() || g.cloud.births() != truncated.cloud.births() {
        return arg("graphs must share a point cloud");
    }
    let orientation = match pattern.encoding.first() {
        Some(1) => Orientation::BirthOrdered,
        Some(0) => Orientation::Undirected,
        _ => return arg("malformed pattern encoding"),
    };
    let (a, b) = (g.snapshot(t), truncated.snapshot(t));
    let mut count = 0;
    for x in a.vertices() {
        let in_a = matches(&a, x, h, pattern, orientation)?;
        let in_b = b.contains(x) && matches(&b, x, h, pattern, orientation)?;
        count += (in_a != in_b) as usize;
    }
    for x in b.vertices() {
        if !a.contains(x) && matches(&b, x, h, pattern, orientation)? {
            count += 1;
        }
    }
    Ok(count)
}

/// Edges longer than `r` whose older endpoint lies in a cube with fewer than
/// `m` points; `None` treats every cube as sparse.
pub fn long_edge_count(graph: &EvolvingGraph, r: f64, m: Option<u32>) -> Result<usize> {
    if r.is_nan() || r < 0.0 {
        return arg("r must be nonnegative");
    }
    let census = m.map(|m| dense_cube_census(&graph.cloud, m)).transpose()?;
    let cloud = &graph.cloud;
    let mut count = 0;
    for (y, olds) in graph.out_edges.iter().enumerate() {
        for x in olds {
            if cloud.dist(y as u32, *x) <= r {
                continue;
            }
            let sparse = census
                .as_ref()
                .is_none_or(|c| !c.is_dense(cube_of(&cloud.torus, cloud.pos(*x))));
            count += sparse as usize;
        }
    }
    Ok(count)
}
