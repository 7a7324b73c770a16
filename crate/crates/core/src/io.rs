//! Plain-text graph format.
//!
//! ```text
//! spamgraph v1 d=<d> n=<n> count=<m>
//! V <id> <birth> <x1..xd> <colour>
//! E <younger_id> <older_id>
//! ```

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Result, SpamError};
use crate::graph::{BuildDescriptor, EvolvingGraph, ModelKind, VertexFilter};
use crate::model::ModelParams;
use crate::point_process::{Colour, PointCloud};

/// Float formatting with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{x:.16e}")
}

fn header(cloud: &PointCloud, count: usize) -> String {
    format!(
        "spamgraph v1 d={} n={} count={}\n",
        cloud.dimension(),
        fmt_f64(cloud.params.volume),
        count
    )
}

fn vertex_line(out: &mut String, cloud: &PointCloud, i: u32) {
    let _ = write!(out, "V {} {}", i, fmt_f64(cloud.birth(i)));
    for c in cloud.pos(i) {
        let _ = write!(out, " {}", fmt_f64(*c));
    }
    let _ = writeln!(out, " {}", cloud.colour(i));
}

pub fn write_cloud(cloud: &PointCloud) -> String {
    let mut out = header(cloud, cloud.len());
    for i in 0..cloud.len() as u32 {
        vertex_line(&mut out, cloud, i);
    }
    out
}

/// Member vertices and their edges.
pub fn write_graph(g: &EvolvingGraph) -> String {
    let mut out = header(&g.cloud, g.vertex_count());
    for i in 0..g.slots() as u32 {
        if g.members[i as usize] {
            vertex_line(&mut out, &g.cloud, i);
        }
    }
    for (y, x) in g.edges() {
        let _ = writeln!(out, "E {y} {x}");
    }
    out
}

fn perr<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(SpamError::Parse {
        line,
        msg: msg.into(),
    })
}

fn num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse()
        .or_else(|_| perr(line, format!("bad number {tok:?}")))
}

/// Parses a graph file. Vertex ids are renumbered densely in file order;
/// parameters other than `d` and `n` take the values in `base`.
pub fn read_graph(text: &str, base: ModelParams) -> Result<EvolvingGraph> {
    let mut lines = text.lines().enumerate();
    let (_, head) = lines.next().ok_or(SpamError::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    let parts: Vec<&str> = head.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != "spamgraph" || parts[1] != "v1" {
        return perr(1, "expected `spamgraph v1 d=.. n=.. count=..`");
    }
    let field = |p: &str, key: &str| -> Result<String> {
        p.strip_prefix(key)
            .map(str::to_string)
            .ok_or(SpamError::Parse {
                line: 1,
                msg: format!("expected {key}"),
            })
    };
    let d: u32 = num(&field(parts[2], "d=")?, 1)?;
    let n: f64 = num(&field(parts[3], "n=")?, 1)?;
    let count: usize = num(&field(parts[4], "count=")?, 1)?;
    let params = ModelParams {
        dimension: d,
        volume: n,
        ..base
    };
    let mut ids = Vec::with_capacity(count);
    let mut births = Vec::with_capacity(count);
    let mut pos = Vec::with_capacity(count * d as usize);
    let mut colours = Vec::with_capacity(count);
    let mut edges = Vec::new();
    for (k, l) in lines {
        let ln = k + 1;
        let t: Vec<&str> = l.split_whitespace().collect();
        match t.first() {
            None => continue,
            Some(&"V") => {
                if t.len() != 4 + d as usize {
                    return perr(ln, "wrong field count in vertex line");
                }
                let id: u64 = num(t[1], ln)?;
                if ids.last().is_some_and(|p| *p >= id) {
                    return perr(ln, "vertex ids must increase");
                }
                ids.push(id);
                births.push(num::<f64>(t[2], ln)?);
                for c in &t[3..3 + d as usize] {
                    pos.push(num::<f64>(c, ln)?);
                }
                colours.push(Colour::parse(t[3 + d as usize]).ok_or(SpamError::Parse {
                    line: ln,
                    msg: "bad colour".into(),
                })?);
            }
            Some(&"E") => {
                if t.len() != 3 {
                    return perr(ln, "wrong field count in edge line");
                }
                edges.push((num::<u64>(t[1], ln)?, num::<u64>(t[2], ln)?, ln));
            }
            Some(other) => return perr(ln, format!("unknown record {other:?}")),
        }
    }
    if ids.len() != count {
        return perr(1, format!("header says {count} vertices, found {}", ids.len()));
    }
    let cloud = Arc::new(PointCloud::from_parts(params, births, pos, Some(colours))?);
    let mut g = EvolvingGraph::empty(
        cloud.clone(),
        vec![true; count],
        BuildDescriptor {
            model: ModelKind::Spam,
            range_cutoff: f64::INFINITY,
            filter: VertexFilter::All,
            fingerprint: params.fingerprint(),
        },
    );
    let mut dense = Vec::with_capacity(edges.len());
    for (y, x, ln) in edges {
        let (Ok(yy), Ok(xx)) = (ids.binary_search(&y), ids.binary_search(&x)) else {
            return perr(ln, "edge endpoint is not a listed vertex");
        };
        if xx >= yy {
            return perr(ln, "edge must point from younger to older");
        }
        dense.push((yy as u32, xx as u32));
    }
    dense.sort_unstable();
    dense.dedup();
    for (y, x) in dense {
        g.push_edge(y, x);
    }
    for ins in g.in_edges.iter_mut() {
        ins.sort_unstable();
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::build_accelerated;
    use crate::marks::MarkOracle;
    use crate::point_process::{colour_points, sample_points};

    #[test]
    fn round_trip() {
        let p = ModelParams::new(0.8, 1.0, 1.5, 2, 200.0).with_seed(4);
        let c = sample_points(&p, "points").unwrap();
        let c = Arc::new(colour_points(&c, 0.4, "colours").unwrap());
        let o = MarkOracle::new(&c, 1);
        let (g, _) = build_accelerated(&c, &o, &p.kernel().unwrap(), f64::INFINITY, VertexFilter::All).unwrap();
        let text = write_graph(&g);
        assert!(text.starts_with("spamgraph v1 d=2 n=2.0000000000000000e2 count="));
        let h = read_graph(&text, p).unwrap();
        assert_eq!(h.edges(), g.edges());
        assert_eq!(h.cloud.births(), g.cloud.births());
        assert_eq!(h.cloud.positions(), g.cloud.positions());
        assert_eq!(h.cloud.colours(), g.cloud.colours());
        assert_eq!(write_graph(&h), text);
    }

    #[test]
    fn rejects_bad_input() {
        let p = ModelParams::default();
        assert!(read_graph("", p).is_err());
        assert!(read_graph("spamgraph v2 d=1 n=10 count=0\n", p).is_err());
        let bad_edge = "spamgraph v1 d=1 n=10 count=2\nV 0 0.1 0.0 none\nV 1 0.2 1.0 none\nE 0 1\n";
        assert!(matches!(read_graph(bad_edge, p), Err(SpamError::Parse { line: 4, .. })));
        let ok = bad_edge.replace("E 0 1", "E 1 0");
        assert_eq!(read_graph(&ok, p).unwrap().edges(), vec![(1, 0)]);
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
