//! Seeded random instances shared by the integration suites.
#![allow(dead_code)]

use netjam_core::{build_table, ConnectivityTable, Graph, PlayerParams};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random spanning tree plus each remaining pair with probability `extra`.
pub fn connected_graph(rng: &mut impl Rng, n: usize, extra: f64) -> Graph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for k in 1..n {
        let parent = order[rng.gen_range(0..k)];
        edges.push((order[k], parent));
    }
    for i in 0..n {
        for j in i + 1..n {
            let present = edges
                .iter()
                .any(|&(a, b)| (a, b) == (i, j) || (a, b) == (j, i));
            if !present && rng.gen_bool(extra) {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, edges).unwrap()
}

/// Any simple graph on `n` vertices, each pair present with probability `p`.
pub fn any_graph(rng: &mut impl Rng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, edges).unwrap()
}

/// Uniform draw from the open-at-`lo` interval `(lo, hi]`.
fn above(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    loop {
        let v = rng.gen_range(lo..=hi);
        if v > lo {
            return v;
        }
    }
}

/// κ ∈ (0, 5], ρ ∈ (0, 0.5), β ∈ (ρ, 3], γ ∈ (0, 1].
pub fn player(rng: &mut impl Rng) -> PlayerParams {
    let kappa = above(rng, 0.0, 5.0);
    let rho = loop {
        let v = above(rng, 0.0, 0.5);
        if v < 0.5 {
            break v;
        }
    };
    let beta = above(rng, rho, 3.0);
    let gamma = above(rng, 0.0, 1.0);
    PlayerParams::new(beta, kappa, rho, gamma).unwrap()
}

pub struct Instance {
    pub graph: Graph,
    pub table: ConnectivityTable,
    pub attacker: PlayerParams,
    pub defender: PlayerParams,
    pub start_time: f64,
    pub spent_a: f64,
    pub spent_d: f64,
}

/// Connected graph with `n ∈ [3, 6]`, random players and a random prior history.
pub fn instance(rng: &mut impl Rng) -> Instance {
    let n = rng.gen_range(3..=6);
    let extra = rng.gen_range(0.0..0.7);
    let graph = connected_graph(rng, n, extra);
    let table = build_table(&graph).unwrap();
    let attacker = player(rng);
    let defender = player(rng);
    let start_time = if rng.gen_bool(0.5) {
        0.0
    } else {
        rng.gen_range(0.0..5.0)
    };
    let spent_a = rng.gen_range(0.0..=attacker.kappa + attacker.rho * start_time);
    let spent_d = rng.gen_range(0.0..=defender.kappa + defender.rho * start_time);
    Instance {
        graph,
        table,
        attacker,
        defender,
        start_time,
        spent_a,
        spent_d,
    }
}

impl Instance {
    pub fn input(&self) -> netjam_core::StageInput<'_> {
        netjam_core::StageInput {
            table: &self.table,
            start_time: self.start_time,
            spent_a: self.spent_a,
            spent_d: self.spent_d,
            attacker: self.attacker,
            defender: self.defender,
        }
    }
}
