pub mod components;
pub mod connections;
pub mod distances;
pub mod layers;

pub use components::{bfs, components, graph_distance, ComponentIndex, UnionFind, UNREACHABLE};
pub use connections::{is_two_connected, two_connection_bound, two_connection_frequency, two_connection_q};
pub use distances::{typical_distance_sample, DistanceStats};
pub use layers::{
    build_layers, high_degree_density_probe, is_good, is_locally_good, layer_diameter, reachable_old_vertex,
    GoodnessConfig, LayerDiameter, LayerHierarchy,
};
