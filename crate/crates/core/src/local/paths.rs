//! Càdlàg step paths on [0, 1], degree evolutions and the Skorohod modulus.

use std::fmt::Write as _;

use crate::error::{arg, Result};
use crate::graph::{EvolvingGraph, GraphView};
use crate::io::fmt_f64;

/// Right-continuous step path: `values` holds the initial row followed by
/// one row per jump, each of length `dimension`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPath {
    pub dimension: usize,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepPath {
    pub fn constant(value: Vec<f64>) -> Self {
        StepPath {
            dimension: value.len(),
            times: Vec::new(),
            values: value,
        }
    }

    pub fn new(initial: Vec<f64>, jumps: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        let mut p = StepPath::constant(initial);
        if p.dimension == 0 {
            return arg("path dimension must be positive");
        }
        for (t, v) in jumps {
            p.push(t, &v)?;
        }
        Ok(p)
    }

    /// Appends a jump; a jump at time 0 overwrites the initial value and a
    /// repeated time overwrites the previous jump.
    pub fn push(&mut self, t: f64, value: &[f64]) -> Result<()> {
        if value.len() != self.dimension {
            return arg("jump value has the wrong dimension");
        }
        if !(0.0..=1.0).contains(&t) {
            return arg(format!("jump time {t} outside [0, 1]"));
        }
        let last = self.times.last().copied().unwrap_or(0.0);
        if t < last {
            return arg("jump times must increase");
        }
        if t == last {
            let k = self.values.len() - self.dimension;
            self.values[k..].copy_from_slice(value);
        } else {
            self.times.push(t);
            self.values.extend_from_slice(value);
        }
        Ok(())
    }

    pub fn jumps(&self) -> usize {
        self.times.len()
    }

    /// Value after the `k`-th jump (`k = 0` is the initial value).
    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.dimension..(k + 1) * self.dimension]
    }

    pub fn value_at(&self, t: f64) -> &[f64] {
        self.row(self.times.partition_point(|s| *s <= t))
    }

    /// `time,v0,v1,...` rows, starting with the initial value at time 0.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time");
        for j in 0..self.dimension {
            let _ = write!(out, ",v{j}");
        }
        out.push('\n');
        let times = std::iter::once(0.0).chain(self.times.iter().copied());
        for (k, t) in times.enumerate() {
            out.push_str(&fmt_f64(t));
            for v in self.row(k) {
                let _ = write!(out, ",{}", fmt_f64(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// `Z_x(.)`: unit jumps at the births of the in-neighbours of `x`.
pub fn degree_evolution(graph: &EvolvingGraph, x: u32) -> StepPath {
    let mut p = StepPath::constant(vec![0.0]);
    for (k, y) in graph.in_edges[x as usize].iter().enumerate() {
        p.push(graph.cloud.birth(*y), &[(k + 1) as f64]).expect("births lie in [0, 1]");
    }
    p
}

/// Coordinate `j` is `(1/n) #{x : Z_x(t) = j}` for `j <= k`.
pub fn truncated_degree_path(graph: &EvolvingGraph, k: u32) -> StepPath {
    let k = k as usize;
    let n = graph.cloud.params.volume;
    let full = graph.full();
    let mut degree = vec![0usize; graph.slots()];
    let mut counts = vec![0u64; k + 1];
    let mut p = StepPath::constant(vec![0.0; k + 1]);
    let mut row = vec![0.0; k + 1];
    for y in 0..graph.slots() as u32 {
        if !full.contains(y) {
            continue;
        }
        counts[0] += 1;
        for x in &graph.out_edges[y as usize] {
            if !full.contains(*x) {
                continue;
            }
            let z = degree[*x as usize];
            degree[*x as usize] = z + 1;
            if z <= k {
                counts[z] -= 1;
            }
            if z < k {
                counts[z + 1] += 1;
            }
        }
        let next = graph.out_edges.get(y as usize + 1).map(|_| graph.cloud.birth(y + 1));
        if next == Some(graph.cloud.birth(y)) {
            continue;
        }
        for (r, c) in row.iter_mut().zip(&counts) {
            *r = *c as f64 / n;
        }
        if row != p.row(p.jumps()) {
            p.push(graph.cloud.birth(y), &row).expect("births lie in [0, 1]");
        }
    }
    p
}

/// Range of rows `a..=b` in the max norm over coordinates.
fn oscillation(path: &StepPath, a: usize, b: usize) -> f64 {
    (0..path.dimension)
        .map(|j| {
            let (lo, hi) = (a..=b).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), k| {
                let v = path.row(k)[j];
                (lo.min(v), hi.max(v))
            });
            hi - lo
        })
        .fold(0.0, f64::max)
}

/// Skorohod-adapted modulus `w'_eta` over partitions of [0, 1] into
/// half-open intervals longer than `eta`.
///
/// A boundary matters only through where it sits relative to the jumps:
/// exactly on a jump, or strictly between two consecutive ones. Over these
/// classes, a shortest-prefix dynamic programme decides whether a given
/// oscillation level is achievable, and the optimum is the least achievable
/// value among the finitely many interval oscillations.
pub fn skorohod_modulus(path: &StepPath, eta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return arg("eta must be positive");
    }
    if eta >= 1.0 {
        return arg("no partition of [0, 1] has all intervals longer than eta >= 1");
    }
    let m = path.times.partition_point(|t| *t < 1.0);
    let tau = |k: usize| -> f64 {
        if k == 0 {
            0.0
        } else if k > m {
            1.0
        } else {
            path.times[k - 1]
        }
    };
    let mut osc = vec![vec![0.0; m + 1]; m + 1];
    for (a, row) in osc.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate().skip(a) {
            *cell = oscillation(path, a, b);
        }
    }
    // class c: even c is the jump point k = c/2, odd c the open gap after it
    let classes = 2 * m + 3;
    let first_row = |c: usize| c / 2;
    let last_row = |c: usize| if c % 2 == 0 { c / 2 - 1 } else { c / 2 };
    let feasible = |level: f64| -> bool {
        let mut best = vec![f64::INFINITY; classes];
        best[0] = 0.0;
        for c in 1..classes {
            let k = c / 2;
            for prev in 0..c {
                let p = best[prev];
                if p.is_infinite() || osc[first_row(prev)][last_row(c)] > level {
                    continue;
                }
                let cand = if c % 2 == 0 {
                    Some(tau(k)).filter(|t| t - p > eta)
                } else {
                    Some(tau(k).max(p + eta)).filter(|y| *y < tau(k + 1))
                };
                if let Some(y) = cand {
                    best[c] = best[c].min(y);
                }
            }
        }
        best[classes - 1].is_finite()
    };
    let mut levels: Vec<f64> = osc.iter().flatten().copied().collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let (mut lo, mut hi) = (0, levels.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(levels[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(levels[lo])
}
