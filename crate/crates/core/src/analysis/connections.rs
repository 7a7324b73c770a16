//! Two-connections through young common neighbours.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{arg, Result, SpamError};
use crate::graph::EvolvingGraph;
use crate::model::{ball_volume, ConnectionKernel, TorusBox};
use crate::rng::stream_rng;

fn k_term(kernel: &ConnectionKernel, fx: f64, fy: f64, dist: f64) -> f64 {
    let d = kernel.dimension;
    let r = fx.powf(1.0 / d as f64) + dist;
    fx * kernel.profile.value(r.powi(d) / fy)
}

/// `Q(x, y)` for in-degrees `zx`, `zy` at time 1/2 and distance `dist`.
pub fn two_connection_q(kernel: &ConnectionKernel, zx: u32, zy: u32, dist: f64) -> Result<f64> {
    let fx = kernel.attachment.value(zx);
    let fy = kernel.attachment.value(zy);
    let pre = kernel.profile.value(1.0) * ball_volume(kernel.dimension as i64)? / 2.0;
    Ok(pre * k_term(kernel, fx, fy, dist).max(k_term(kernel, fy, fx, dist)))
}

/// `(Q, 1 - exp(-lambda Q))` for two vertices born before 1/2.
pub fn two_connection_bound(graph: &EvolvingGraph, x: u32, y: u32, lambda: f64) -> Result<(f64, f64)> {
    let cloud = &graph.cloud;
    for v in [x, y] {
        if cloud.birth(v) >= 0.5 {
            return arg(format!("vertex {v} born at {} >= 1/2", cloud.birth(v)));
        }
    }
    if !(lambda > 0.0) {
        return arg(format!("intensity {lambda} must be > 0"));
    }
    let kernel = cloud.params.kernel()?;
    let q = two_connection_q(
        &kernel,
        graph.in_degree_at(x, 0.5),
        graph.in_degree_at(y, 0.5),
        cloud.dist(x, y),
    )?;
    Ok((q, -(-lambda * q).exp_m1()))
}

/// Some vertex born in `[1/2, 1]` points to both `x` and `y`.
pub fn is_two_connected(graph: &EvolvingGraph, x: u32, y: u32) -> bool {
    let cloud = &graph.cloud;
    let (a, b) = (&graph.in_edges[x as usize], &graph.in_edges[y as usize]);
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                if cloud.birth(a[i]) >= 0.5 {
                    return true;
                }
                i += 1;
                j += 1;
            }
        }
    }
    false
}

/// Replays the arrivals after time 1/2 for two fixed vertices with given
/// in-degrees at 1/2 and counts trials in which a late vertex connects to both.
#[allow(clippy::too_many_arguments)]
pub fn two_connection_frequency(
    kernel: &ConnectionKernel,
    torus: &TorusBox,
    zx: u32,
    zy: u32,
    dist: f64,
    lambda: f64,
    trials: usize,
    seed: u64,
    stream_label: &str,
) -> Result<usize> {
    if dist > torus.diameter() {
        return arg(format!("distance {dist} exceeds the torus diameter"));
    }
    let d = torus.dimension;
    let volume = torus.side.powi(d as i32);
    let poisson = Poisson::new(lambda * volume / 2.0).map_err(|e| SpamError::Sampling(e.to_string()))?;
    let mut rng = stream_rng(seed, stream_label);
    let x = vec![0.0; d];
    let mut y = vec![0.0; d];
    y[0] = dist;
    let half = torus.side / 2.0;
    let mut hits = 0;
    let mut arrivals: Vec<(f64, Vec<f64>)> = Vec::new();
    for _ in 0..trials {
        let count = poisson.sample(&mut rng) as usize;
        arrivals.clear();
        for _ in 0..count {
            let t = 0.5 + 0.5 * (1.0 - rng.random::<f64>());
            let p: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * torus.side - half).collect();
            arrivals.push((t, p));
        }
        arrivals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (mut zx, mut zy) = (zx, zy);
        for (t, p) in &arrivals {
            let to_x = rng.random::<f64>() <= kernel.prob(zx, torus.dist(p, &x), *t);
            let to_y = rng.random::<f64>() <= kernel.prob(zy, torus.dist(p, &y), *t);
            if to_x && to_y {
                hits += 1;
                break;
            }
            zx += to_x as u32;
            zy += to_y as u32;
        }
    }
    Ok(hits)
}
