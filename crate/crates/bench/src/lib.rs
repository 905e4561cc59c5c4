//! Shared fixtures for the benchmarks.

use sparsepipe::engine::{init_model, SparseModel};
use sparsepipe::experiment::{build_patterns, Method};
use sparsepipe::topology::NetworkConfig;

/// The 800-100-10 network with out-degrees (20, 10).
pub fn mnist_sized_model() -> SparseModel {
    let net = NetworkConfig::new(vec![800, 100, 10], vec![20, 10]).unwrap();
    let p = build_patterns(&net, Method::Structured, None, 1).unwrap();
    init_model(p, vec![800, 100, 10], 2, 0.1).unwrap()
}

pub fn input(width: usize) -> Vec<f64> {
    (0..width)
        .map(|i| ((i * 37) % 101) as f64 / 101.0)
        .collect()
}
