pub mod canon;
pub mod diagnostics;
pub mod neighbourhood;
pub mod paths;

pub use canon::{canonical_encoding, canonical_equal, decode, Orientation, RootedGraph, MAX_VERTICES};
pub use diagnostics::{bad_vertex_count, long_edge_count};
pub use neighbourhood::{
    empirical_indegree, empirical_neighbourhood, h_neighbourhood, root_degree, root_in_degree, BallConfig,
    EmpiricalMeasure, MeasureKey, RootedNeighbourhood,
};
pub use paths::{degree_evolution, skorohod_modulus, truncated_degree_path, StepPath};
