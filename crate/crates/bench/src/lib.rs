//! Fixed workloads shared by the benchmarks.

use netjam_core::consensus::spread_state;
use netjam_core::{ConsensusConfig, Graph, PlayerParams};

/// Attacker and defender with enough energy for long attacks and recoveries.
pub fn players() -> (PlayerParams, PlayerParams) {
    (
        PlayerParams::new(0.4, 5.0, 0.39, 0.1).expect("valid attacker"),
        PlayerParams::new(0.6, 1.0, 0.1, 0.3).expect("valid defender"),
    )
}

/// Circulant graph on `n` vertices joining each vertex to its next `k` neighbours.
pub fn circulant(n: usize, k: usize) -> Graph {
    let edges = (0..n).flat_map(|i| (1..=k).map(move |s| (i, (i + s) % n)));
    Graph::new(n, edges).expect("valid circulant")
}

pub fn consensus_config(n: usize) -> ConsensusConfig {
    ConsensusConfig {
        x0: spread_state(n, 0.0, 3.0),
        epsilon: 0.05,
        sample_step: 0.01,
    }
}
