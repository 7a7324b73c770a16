//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Pass criterion numbers as arguments to run a subset:
//! `cargo test -p spam-validation --test acceptance -- 3 7`.

use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;

use spam_core::analysis::{
    build_layers, components, layer_diameter, two_connection_frequency, two_connection_q, typical_distance_sample,
    GoodnessConfig, LayerDiameter,
};
use spam_core::builder::{build_accelerated, build_coupled_family, build_exact, site_percolate_with};
use spam_core::graph::{EvolvingGraph, VertexFilter};
use spam_core::local::{
    bad_vertex_count, canonical_encoding, empirical_indegree, empirical_neighbourhood, long_edge_count,
    root_in_degree, skorohod_modulus, BallConfig, Orientation, RootedGraph, RootedNeighbourhood, StepPath,
};
use spam_core::marks::MarkOracle;
use spam_core::model::{regime_report, ConnectionKernel, ModelParams};
use spam_core::point_process::{colour_points, early_vertex_count, sample_points, Colour, PointCloud};
use spam_core::rng::stream_rng;
use spam_core::stats::{degree_by_birth, hill_top, in_degrees, mean_sd, ols};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

struct Instance {
    params: ModelParams,
    cloud: Arc<PointCloud>,
    oracle: MarkOracle,
    kernel: ConnectionKernel,
}

fn instance(gamma: f64, delta: f64, d: u32, n: f64, seed: u64, red: Option<f64>) -> Instance {
    let params = ModelParams::new(gamma, 1.0, delta, d, n).with_seed(seed);
    let mut cloud = sample_points(&params, "points").unwrap();
    if let Some(r) = red {
        cloud = colour_points(&cloud, r, "colours").unwrap();
    }
    let oracle = MarkOracle::new(&cloud, seed);
    Instance {
        params,
        cloud: Arc::new(cloud),
        oracle,
        kernel: params.kernel().unwrap(),
    }
}

impl Instance {
    fn build(&self, cutoff: f64, filter: VertexFilter) -> EvolvingGraph {
        build_accelerated(&self.cloud, &self.oracle, &self.kernel, cutoff, filter).unwrap().0
    }
}

fn c1_builder_equivalence() -> Outcome {
    let mut cells = 0;
    let mut mismatches = Vec::new();
    for n in [500.0, 2000.0, 5000.0] {
        for gamma in [0.5, 0.8] {
            for delta in [1.5, 3.0] {
                for cutoff in [2.0, f64::INFINITY] {
                    for seed in 0..20 {
                        let inst = instance(gamma, delta, 1, n, seed, None);
                        let fast = inst.build(cutoff, VertexFilter::All);
                        let exact = build_exact(&inst.cloud, &inst.oracle, &inst.kernel, cutoff, VertexFilter::All)
                            .unwrap()
                            .0;
                        cells += 1;
                        if fast.edges() != exact.edges() {
                            mismatches.push((n, gamma, delta, cutoff, seed));
                        }
                    }
                }
            }
        }
    }
    outcome(
        mismatches.is_empty(),
        format!("{cells} builds compared, {} mismatches {:?}", mismatches.len(), mismatches),
    )
}

fn c2_coupling() -> Outcome {
    let mut failures = Vec::new();
    for seed in 0..10 {
        let inst = instance(0.8, 1.2, 1, 2000.0, seed, Some(0.3));
        let fam = build_coupled_family(&inst.cloud, &inst.oracle, &inst.kernel, &[1.0, 5.0]).unwrap();
        let (g1, g5) = (&fam.truncated[0].1, &fam.truncated[1].1);
        let ok = fam.black.edges_subset_of(&fam.full)
            && fam.red.edges_subset_of(&fam.full)
            && g1.edges_subset_of(g5)
            && g5.edges_subset_of(&fam.full);
        if !ok {
            failures.push(seed);
        }
    }
    outcome(failures.is_empty(), format!("10 seeds, containment failures on {failures:?}"))
}

fn pooled_degrees(gamma: f64, delta: f64) -> Vec<f64> {
    let mut pooled = Vec::new();
    for seed in 0..20 {
        let inst = instance(gamma, delta, 1, 2e5, seed, None);
        pooled.extend(in_degrees(&inst.build(f64::INFINITY, VertexFilter::All)));
    }
    pooled
}

fn c3_degree_law() -> Outcome {
    let target = 1.0 / 0.75;
    let main = hill_top(&pooled_degrees(0.75, 1.5), 0.01).unwrap();
    let within = (main.alpha - target).abs() <= 0.15 * target;
    let a = hill_top(&pooled_degrees(0.75, 1.2), 0.01).unwrap();
    let b = hill_top(&pooled_degrees(0.75, 2.5), 0.01).unwrap();
    let z = (a.alpha - b.alpha).abs() / (a.se * a.se + b.se * b.se).sqrt();
    outcome(
        within && z <= 1.96,
        format!(
            "Hill alpha {:.4} (target {:.4} +- 15%, k = {}); delta 1.2 vs 2.5: {:.4} vs {:.4}, z = {:.2} (limit 1.96)",
            main.alpha, target, main.k, a.alpha, b.alpha, z
        ),
    )
}

fn c4_birth_scaling() -> Outcome {
    let gamma = 0.8;
    let n: f64 = 1e5;
    // ten log-spaced birth-time bins covering [1/n, 1]
    let bounds: Vec<f64> = (0..=10).map(|i| (n.ln() * (i as f64 / 10.0 - 1.0)).exp()).collect();
    let mut slopes = Vec::new();
    for seed in 0..5 {
        let inst = instance(gamma, 2.5, 1, n, seed, None);
        let rows = degree_by_birth(&inst.build(f64::INFINITY, VertexFilter::All), &bounds);
        let xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
        slopes.push(ols(&xs, &ys).unwrap().0);
    }
    let (mean, _) = mean_sd(&slopes);
    outcome(
        (mean + gamma).abs() <= 0.1,
        format!("slope {mean:.4} over 5 seeds {slopes:.3?} (target {:.2} +- 0.1)", -gamma),
    )
}

fn c5_giant() -> Outcome {
    let mut means = Vec::new();
    let mut robust = 0;
    let mut fractions = Vec::new();
    for n in [1e4, 1e5] {
        let mut fr = Vec::new();
        for seed in 0..20 {
            let inst = instance(0.8, 1.2, 1, n, seed, Some(0.3));
            let g = inst.build(f64::INFINITY, VertexFilter::All);
            fr.push(components(&g.full()).giant_fraction());
            if n == 1e5 {
                let black: Vec<bool> = inst.cloud.colours().iter().map(|c| *c == Colour::Black).collect();
                let thinned = site_percolate_with(&g, &black).unwrap();
                let comp = components(&thinned.full());
                let largest = comp.sizes().into_iter().max().unwrap_or(0) as f64;
                let f = largest / inst.cloud.colour_count(Colour::Black) as f64;
                fractions.push(f);
                robust += (f >= 0.1) as usize;
            }
        }
        means.push(mean_sd(&fr).0);
    }
    let spread = (means[0] - means[1]).abs();
    outcome(
        spread <= 0.05 && robust >= 18,
        format!(
            "giant fraction {:.4} (n=1e4) vs {:.4} (n=1e5), spread {spread:.4}; black-thinned largest component >= 0.1 on {robust}/20 seeds (min {:.3})",
            means[0],
            means[1],
            fractions.iter().copied().fold(f64::INFINITY, f64::min)
        ),
    )
}

fn pooled_median_distance(n: f64) -> (f64, f64) {
    let mut all = Vec::new();
    let mut budget = 0.0;
    for seed in 0..5 {
        let inst = instance(0.8, 1.2, 1, n, seed, None);
        let g = inst.build(f64::INFINITY, VertexFilter::All);
        let stats = typical_distance_sample(&g.full(), 200, &inst.params, 1.0, "pairs").unwrap();
        budget = stats.budget.unwrap();
        all.extend(stats.samples.iter().map(|d| *d as f64));
    }
    (spam_core::stats::median(&all), budget)
}

fn c6_distances() -> Outcome {
    let (small, _) = pooled_median_distance(1e4);
    let (large, budget) = pooled_median_distance(1e6);
    outcome(
        large <= budget && large - small <= 2.0,
        format!("median distance {small} (n=1e4), {large} (n=1e6); budget {budget:.3}; growth {}", large - small),
    )
}

fn c7_two_connection() -> Outcome {
    let params = ModelParams::new(0.8, 1.0, 1.2, 1, 1000.0);
    let kernel = params.kernel().unwrap();
    let torus = params.torus();
    let trials = 500;
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    let mut cell = 0u64;
    for zx in [0u32, 3, 10] {
        for zy in [0u32, 3, 10] {
            for dist in [1.0, 10.0, 100.0] {
                cell += 1;
                let q = two_connection_q(&kernel, zx, zy, dist).unwrap();
                let bound = -(-q).exp_m1();
                let hits = two_connection_frequency(&kernel, &torus, zx, zy, dist, 1.0, trials, cell, "late").unwrap();
                let freq = hits as f64 / trials as f64;
                let sd = (bound * (1.0 - bound) / trials as f64).sqrt();
                let margin = freq - (bound - 3.0 * sd);
                worst = worst.min(margin);
                if margin < 0.0 {
                    failures.push((zx, zy, dist, freq, bound));
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("27 cells, smallest margin {worst:.4}, failures {failures:?}"),
    )
}

fn c8_layers() -> Outcome {
    let mut flagged = 0;
    let mut within = 0;
    let mut k_seen = 0;
    for seed in 0..20 {
        let inst = instance(0.8, 1.2, 1, 1e5, seed, Some(0.5));
        let regime = regime_report(&inst.params, None, None).unwrap();
        k_seen = regime.k;
        let g = inst.build(f64::INFINITY, VertexFilter::All);
        let layers = build_layers(&g, &regime, &GoodnessConfig::default()).unwrap();
        if layers.empty_flag {
            flagged += 1;
            continue;
        }
        let top = layers.layers.last().unwrap();
        let cap = 4 * regime.k;
        if !top.is_empty() && matches!(layer_diameter(&g.full(), top, cap).unwrap(), LayerDiameter::Within(_)) {
            within += 1;
        }
    }
    if k_seen == 0 {
        outcome(
            flagged == 20,
            format!("K = 0 at n = 1e5; empty-layer flag raised on {flagged}/20 seeds, diameter check skipped"),
        )
    } else {
        outcome(within >= 18, format!("K = {k_seen}; diameter <= 4K on {within}/20 seeds"))
    }
}

/// Lexicographically least adjacency bit string over all relabellings that
/// send the root to 0.
fn brute_form(g: &RootedGraph) -> u64 {
    let n = g.n;
    let others: Vec<usize> = (0..n).filter(|v| *v != g.root).collect();
    let mut perm: Vec<usize> = (1..n).collect();
    let mut best = u64::MAX;
    let mut at = vec![0usize; n];
    loop {
        at[0] = g.root;
        for (v, p) in others.iter().zip(&perm) {
            at[*p] = *v;
        }
        let mut bits = 0u64;
        let mut k = 0;
        for i in 0..n {
            for j in 0..n {
                let take = match g.orientation {
                    Orientation::Undirected => j > i,
                    Orientation::BirthOrdered => j != i,
                };
                if take {
                    if g.out[at[i]] >> at[j] & 1 == 1 {
                        bits |= 1 << k;
                    }
                    k += 1;
                }
            }
        }
        best = best.min(bits);
        if !next_permutation(&mut perm) {
            return best;
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|i| p[i - 1] < p[*i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|j| p[*j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn random_graph(rng: &mut impl Rng, n: usize, density: f64) -> RootedGraph {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < density {
                edges.push((a, b));
            }
        }
    }
    RootedGraph::new(n, rng.random_range(0..n), &edges, Orientation::Undirected).unwrap()
}

fn canon_exhaustive() -> (usize, bool) {
    let mut checked = 0;
    let mut ok = true;
    for n in 1..=5usize {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let mut by_code: HashMap<Vec<u8>, u64> = HashMap::new();
        let mut by_form: HashMap<u64, Vec<u8>> = HashMap::new();
        for mask in 0u32..1 << pairs.len() {
            let edges: Vec<(usize, usize)> =
                pairs.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, e)| *e).collect();
            for root in 0..n {
                let g = RootedGraph::new(n, root, &edges, Orientation::Undirected).unwrap();
                let code = canonical_encoding(&g);
                let form = brute_form(&g);
                ok &= *by_code.entry(code.clone()).or_insert(form) == form;
                ok &= *by_form.entry(form).or_insert(code.clone()) == code;
                checked += 1;
            }
        }
    }
    (checked, ok)
}

fn canon_randomised() -> (usize, usize) {
    let mut rng = stream_rng(9, "canon");
    let mut disagreements = 0;
    let cases = 10_000;
    for case in 0..cases {
        let n = rng.random_range(6..=8);
        let density = rng.random_range(0.15..0.7);
        let g = random_graph(&mut rng, n, density);
        let h = match case % 3 {
            0 => {
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut rng);
                g.relabel(&perm)
            }
            1 => {
                let mut h = g.clone();
                let (a, b) = loop {
                    let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
                    if a != b {
                        break (a, b);
                    }
                };
                h.out[a] ^= 1 << b;
                h.out[b] ^= 1 << a;
                h
            }
            _ => {
                let mut h = random_graph(&mut rng, n, density);
                h.root = rng.random_range(0..n);
                h
            }
        };
        let same = canonical_encoding(&g) == canonical_encoding(&h);
        if same != (brute_form(&g) == brute_form(&h)) {
            disagreements += 1;
        }
    }
    (cases, disagreements)
}

/// Minimum over partitions with boundaries on a 1/1000 grid, evaluating the
/// path directly. Jump times are multiples of 1/20 and `eta` is an odd
/// multiple of 1/40, so every feasibility margin is a multiple of 1/40 and
/// the grid cannot miss an admissible partition.
fn modulus_on_grid(path: &StepPath, eta_units: usize) -> f64 {
    const G: usize = 1000;
    let at = |i: usize| i as f64 / G as f64;
    let mut best = vec![f64::INFINITY; G + 1];
    best[0] = 0.0;
    for q in 0..G {
        if best[q].is_infinite() {
            continue;
        }
        let start = path.value_at(at(q)).to_vec();
        let (mut lo, mut hi) = (start.clone(), start);
        let mut next_jump = path.times.partition_point(|t| *t <= at(q));
        for p in q + 1..=G {
            // values on [q, p) include jumps strictly before p
            while next_jump < path.times.len() && path.times[next_jump] < at(p) {
                for (j, v) in path.value_at(path.times[next_jump]).iter().enumerate() {
                    lo[j] = lo[j].min(*v);
                    hi[j] = hi[j].max(*v);
                }
                next_jump += 1;
            }
            if p - q <= eta_units {
                continue;
            }
            let osc = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
            best[p] = best[p].min(best[q].max(osc));
        }
    }
    best[G]
}

fn modulus_agreement() -> (usize, usize) {
    let mut rng = stream_rng(11, "modulus");
    let mut disagreements = 0;
    for _ in 0..1000 {
        let dim = rng.random_range(1..=2);
        let jumps = rng.random_range(0..=8);
        let mut slots: Vec<usize> = (1..=20).collect();
        slots.shuffle(&mut rng);
        let mut times: Vec<usize> = slots[..jumps].to_vec();
        times.sort();
        let initial: Vec<f64> = (0..dim).map(|_| rng.random_range(-3..=3) as f64).collect();
        let steps = times
            .iter()
            .map(|k| {
                let v = (0..dim).map(|_| rng.random_range(-3..=3) as f64).collect();
                ((k * 50) as f64 / 1000.0, v)
            })
            .collect();
        let path = StepPath::new(initial, steps).unwrap();
        let eta_units = 25 * (2 * rng.random_range(0..20) + 1);
        let eta = eta_units as f64 / 1000.0;
        if skorohod_modulus(&path, eta).unwrap() != modulus_on_grid(&path, eta_units) {
            disagreements += 1;
        }
    }
    (1000, disagreements)
}

fn pushforward_agreement() -> (usize, usize, u64) {
    let mut rng = stream_rng(13, "pushforward");
    let mut mismatches = 0;
    let mut overflow = 0;
    let cfg = BallConfig {
        cap: 64,
        orientation: Orientation::BirthOrdered,
    };
    for seed in 0..50 {
        let d = rng.random_range(1..=2);
        let n = rng.random_range(200.0..800.0);
        let gamma = rng.random_range(0.2..0.4);
        let inst = instance(gamma, 2.0, d, n, seed, None);
        let g = inst.build(f64::INFINITY, VertexFilter::All);
        let t = rng.random_range(0.2..=1.0);
        let hoods = empirical_neighbourhood(&g, t, 1, cfg).unwrap();
        overflow += hoods.overflow;
        let pushed = hoods.pushforward(|k| root_in_degree(k)).unwrap();
        let direct = empirical_indegree(&g, t);
        let same = pushed.counts == direct.counts
            && pushed.overflow == 0
            && direct.counts.keys().all(|k| pushed.weight(k) == direct.weight(k));
        mismatches += !same as usize;
    }
    (50, mismatches, overflow)
}

fn c9_local_exactness() -> Outcome {
    let (exhaustive, exhaustive_ok) = canon_exhaustive();
    let (cases, canon_bad) = canon_randomised();
    let (paths, modulus_bad) = modulus_agreement();
    let (graphs, push_bad, overflow) = pushforward_agreement();
    outcome(
        exhaustive_ok && canon_bad == 0 && modulus_bad == 0 && push_bad == 0,
        format!(
            "{exhaustive} rooted graphs on <= 5 vertices {}; {canon_bad}/{cases} randomised disagreements; \
             {modulus_bad}/{paths} modulus disagreements; {push_bad}/{graphs} pushforward mismatches (overflow {overflow})",
            if exhaustive_ok { "agree" } else { "DISAGREE" }
        ),
    )
}

fn c10_truncation() -> Outcome {
    let radii = [1.0, 2.0, 4.0, 8.0];
    let mut bad = vec![0.0; radii.len()];
    let mut long = vec![0.0; radii.len()];
    let edge = RootedGraph::new(2, 0, &[(0, 1)], Orientation::Undirected).unwrap();
    let pattern = RootedNeighbourhood::from_graph(&edge, 1);
    for seed in 0..20 {
        let inst = instance(0.5, 3.0, 1, 1e4, seed, None);
        let g = inst.build(f64::INFINITY, VertexFilter::All);
        for (i, r) in radii.iter().enumerate() {
            let gr = inst.build(*r, VertexFilter::All);
            bad[i] += bad_vertex_count(&g, &gr, 1.0, 1, &pattern).unwrap() as f64 / 20.0;
            long[i] += long_edge_count(&g, *r, Some(3)).unwrap() as f64 / 20.0;
        }
    }
    let monotone = |v: &[f64]| v.windows(2).all(|w| w[1] <= w[0]);
    let sigma = 0.01;
    let mut counts = Vec::new();
    for seed in 0..200 {
        let p = ModelParams::new(0.5, 1.0, 3.0, 1, 1e4).with_seed(seed);
        counts.push(early_vertex_count(&sample_points(&p, "points").unwrap(), sigma) as f64);
    }
    let (mean, _) = mean_sd(&counts);
    let expected = 1e4 * sigma;
    let sd = (expected / 200.0).sqrt();
    outcome(
        monotone(&bad) && monotone(&long) && (mean - expected).abs() <= 3.0 * sd,
        format!(
            "bad vertices {bad:.2?}, long edges {long:.2?} at r = {radii:?}; early vertices mean {mean:.3} vs {expected} (3 sd = {:.3})",
            3.0 * sd
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("builder oracle equivalence", c1_builder_equivalence),
        ("coupling containments", c2_coupling),
        ("degree law", c3_degree_law),
        ("birth-time degree scaling", c4_birth_scaling),
        ("giant component and robustness", c5_giant),
        ("ultra-small distances", c6_distances),
        ("two-connection bound", c7_two_connection),
        ("layer diameter", c8_layers),
        ("local-structure exactness", c9_local_exactness),
        ("truncation diagnostics", c10_truncation),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        failed += !o.pass as usize;
        let mut out = std::io::stdout().lock();
        let _ = writeln!(
            out,
            "criterion {id:>2} {name}: {} [{:.1}s] {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
        let _ = out.flush();
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
