//! Builds one graph and prints its build log.
//!
//! `cargo run --release --example build_graph -- <n> <gamma> <delta> [cutoff]`

use std::sync::Arc;

use spam_core::builder::build_accelerated;
use spam_core::graph::VertexFilter;
use spam_core::marks::MarkOracle;
use spam_core::model::ModelParams;
use spam_core::point_process::sample_points;

fn main() -> spam_core::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let [n, gamma, delta] = args[..3.min(args.len())] else {
        eprintln!("usage: build_graph <n> <gamma> <delta> [cutoff]");
        std::process::exit(2);
    };
    let cutoff = args.get(3).copied().unwrap_or(f64::INFINITY);
    let params = ModelParams::new(gamma, 1.0, delta, 1, n).with_seed(1);
    params.validate()?;
    let cloud = Arc::new(sample_points(&params, "points")?);
    let oracle = MarkOracle::new(&cloud, params.seed);
    let (g, log) = build_accelerated(&cloud, &oracle, &params.kernel()?, cutoff, VertexFilter::All)?;
    println!("{} vertices, {} edges", g.vertex_count(), g.edge_count());
    println!("{log:?}");
    Ok(())
}
