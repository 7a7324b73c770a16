//! Tail-index and regression helpers.

use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::graph::EvolvingGraph;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillEstimate {
    pub alpha: f64,
    pub k: usize,
    /// Asymptotic standard error `alpha / sqrt(k)`.
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Hill estimator on the `k` largest observations, relative to the
/// `(k+1)`-th largest.
pub fn hill(data: &[f64], k: usize) -> Result<HillEstimate> {
    if k < 1 || k >= data.len() {
        return arg(format!("need 1 <= k < {} order statistics, got {k}", data.len()));
    }
    let mut v = data.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    let base = v[k];
    if !(base > 0.0) {
        return arg("threshold order statistic must be positive");
    }
    let mean_log = v[..k].iter().map(|x| (x / base).ln()).sum::<f64>() / k as f64;
    if !(mean_log > 0.0) {
        return arg("top order statistics are all tied");
    }
    let alpha = 1.0 / mean_log;
    let se = alpha / (k as f64).sqrt();
    Ok(HillEstimate {
        alpha,
        k,
        se,
        ci_low: alpha - 1.96 * se,
        ci_high: alpha + 1.96 * se,
    })
}

/// Hill estimate on the top `fraction` of the data.
pub fn hill_top(data: &[f64], fraction: f64) -> Result<HillEstimate> {
    let k = ((data.len() as f64 * fraction).round() as usize).max(1);
    hill(data, k)
}

/// Least-squares slope and intercept.
pub fn ols(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return arg("regression needs two or more paired points");
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return arg("regressor has zero variance");
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    }
}

/// Final in-degrees of member vertices.
pub fn in_degrees(g: &EvolvingGraph) -> Vec<f64> {
    (0..g.slots() as u32)
        .filter(|v| g.members[*v as usize])
        .map(|v| g.in_degree(v) as f64)
        .collect()
}

/// `(ln s_mid, ln median Z(1))` per birth bin with edges `bounds`; bins whose
/// median degree is zero are dropped.
pub fn degree_by_birth(g: &EvolvingGraph, bounds: &[f64]) -> Vec<(f64, f64, usize)> {
    let cloud = &g.cloud;
    let mut out = Vec::new();
    for w in bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        let lo = cloud.count_born_by(a) as u32;
        let hi = cloud.count_born_by(b) as u32;
        let zs: Vec<f64> = (lo..hi)
            .filter(|v| g.members[*v as usize])
            .map(|v| g.in_degree(v) as f64)
            .collect();
        if zs.is_empty() {
            continue;
        }
        let m = median(&zs);
        if m > 0.0 {
            out.push(((a * b).sqrt().ln(), m.ln(), zs.len()));
        }
    }
    out
}
