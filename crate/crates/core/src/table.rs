//! The attack/recovery connectivity table.
//!
//! Entry `(a, d)` is the generalized edge connectivity that survives when the
//! attacker removes the worst `a` edges and the defender then restores the
//! best `d` of those same edges:
//!
//! ```text
//! table(a, d) = min_{|A| = a} max_{D ⊆ A, |D| = d} λ̂((E \ A) ∪ D)
//! ```
//!
//! Everything is computed exactly by enumerating edge subsets as bitmasks,
//! so it is only meant for small graphs (a guard rejects large edge sets).
//! The table is built once per graph and shared by every stage game.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{components_of_mask, Edge, Graph};

/// Default cap on `|E|` for [`build_table`].
pub const DEFAULT_EDGE_LIMIT: usize = 20;

/// Hard cap regardless of the configured limit; the enumeration allocates
/// `2^|E|` entries per pass.
const MAX_ENUMERABLE_EDGES: usize = 30;

/// Edge-index bitmasks attaining one table entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub attack: u64,
    pub recovery: u64,
}

#[derive(Debug, Clone)]
pub struct ConnectivityTable {
    graph: Graph,
    size: usize,
    /// Row-major `size x size`; entries above the diagonal hold padding 0.
    entries: Vec<i32>,
    witnesses: Vec<Option<Witness>>,
}

impl ConnectivityTable {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// `|E| + 1`.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn edge_count(&self) -> usize {
        self.size - 1
    }

    /// Entry `(a, d)`, or `None` outside `0 <= d <= a <= |E|`.
    pub fn get(&self, a: usize, d: usize) -> Option<i32> {
        (d <= a && a < self.size).then(|| self.entries[a * self.size + d])
    }

    /// Entry `(a, d)`.
    ///
    /// # Panics
    ///
    /// When `(a, d)` is outside the lower triangle.
    pub fn at(&self, a: usize, d: usize) -> i32 {
        self.get(a, d)
            .unwrap_or_else(|| panic!("table entry ({a}, {d}) is outside the lower triangle"))
    }

    /// Connectivity of the intact graph, entry `(0, 0)`.
    pub fn intact(&self) -> i32 {
        self.at(0, 0)
    }

    pub fn witness(&self, a: usize, d: usize) -> Option<Witness> {
        if d <= a && a < self.size {
            self.witnesses[a * self.size + d]
        } else {
            None
        }
    }

    pub fn attack_edges(&self, a: usize, d: usize) -> Vec<Edge> {
        self.witness(a, d)
            .map(|w| self.graph.edges_of(w.attack))
            .unwrap_or_default()
    }

    pub fn recovery_edges(&self, a: usize, d: usize) -> Vec<Edge> {
        self.witness(a, d)
            .map(|w| self.graph.edges_of(w.recovery))
            .unwrap_or_default()
    }

    /// Lower-triangular rows, row `a` holding entries `d = 0..=a`.
    pub fn rows(&self) -> Vec<Vec<i32>> {
        (0..self.size)
            .map(|a| (0..=a).map(|d| self.at(a, d)).collect())
            .collect()
    }

    /// Full square matrix with padding zeros above the diagonal.
    pub fn padded_rows(&self) -> Vec<Vec<i32>> {
        self.entries
            .chunks(self.size)
            .map(|row| row.to_vec())
            .collect()
    }

    /// CSV with one row per attacked-edge count and one column per recovered-edge count.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m^A");
        for d in 0..self.size {
            out.push_str(&format!(",m^D={d}"));
        }
        out.push('\n');
        for (a, row) in self.padded_rows().iter().enumerate() {
            out.push_str(&a.to_string());
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// `x` precedes `y` when comparing their sorted edge-index lists lexicographically.
/// Only meaningful for sets of equal size.
fn lex_less(x: u64, y: u64) -> bool {
    let diff = x ^ y;
    diff != 0 && x & diff & diff.wrapping_neg() != 0
}

/// Generalized edge connectivity of every spanning subgraph, indexed by present-edge mask.
fn lambda_hat_per_mask(g: &Graph) -> Vec<i8> {
    let m = g.edge_count();
    let count = 1usize << m;
    let mut comps = vec![0u8; count];
    for (mask, c) in comps.iter_mut().enumerate() {
        *c = components_of_mask(g.vertex_count(), g.edges(), mask as u64) as u8;
    }
    // For connected S: λ(S) = 1 + min_e λ(S \ e), with λ = 0 once disconnected.
    let mut lambda = vec![0u8; count];
    for mask in 1..count {
        if comps[mask] != 1 {
            continue;
        }
        let mut best = u8::MAX;
        let mut rest = mask;
        while rest != 0 {
            let bit = rest & rest.wrapping_neg();
            rest ^= bit;
            best = best.min(lambda[mask ^ bit]);
        }
        lambda[mask] = best + 1;
    }
    comps
        .iter()
        .zip(&lambda)
        .map(|(&c, &l)| if c == 1 { l as i8 } else { -((c - 1) as i8) })
        .collect()
}

#[derive(Clone, Copy)]
struct Best {
    value: i32,
    attack: u64,
    recovery: u64,
    /// The attack set alone also attains the `(a, 0)` entry.
    consistent: bool,
}

impl Best {
    fn beats(&self, other: &Option<Best>) -> bool {
        let Some(o) = other else { return true };
        if self.value != o.value {
            return self.value < o.value;
        }
        if self.consistent != o.consistent {
            return self.consistent;
        }
        lex_less(self.attack, o.attack)
    }
}

pub fn build_table(g: &Graph) -> Result<ConnectivityTable> {
    build_table_with_limit(g, DEFAULT_EDGE_LIMIT)
}

/// Builds the table by exhaustive enumeration, rejecting graphs with more than `limit` edges.
///
/// Recovery sets range over subsets of the chosen attack set. Among
/// minimizing attack sets, those that also minimize the no-recovery entry of
/// the same row are preferred, so one attack set can realize both phases of a
/// game; remaining ties go to the lexicographically smallest edge list, for
/// attack and recovery sets alike.
pub fn build_table_with_limit(g: &Graph, limit: usize) -> Result<ConnectivityTable> {
    let m = g.edge_count();
    if m > limit.min(MAX_ENUMERABLE_EDGES) {
        return Err(Error::TooLarge {
            edges: m,
            limit: limit.min(MAX_ENUMERABLE_EDGES),
        });
    }
    if !g.is_connected() {
        return Err(Error::DisconnectedInput);
    }
    let size = m + 1;
    let full = g.full_mask();
    let lam = lambda_hat_per_mask(g);

    let mut no_recovery = vec![i32::MAX; size];
    for (t, &v) in lam.iter().enumerate() {
        let a = m - (t as u64).count_ones() as usize;
        no_recovery[a] = no_recovery[a].min(v as i32);
    }

    let mut best: Vec<Option<Best>> = vec![None; size * size];
    let mut top = vec![0i8; lam.len()];
    let mut arg = vec![0u64; lam.len()];
    // Pass `s` fixes the number of edges present after recovery; `top[t]` is the
    // best λ̂ over supersets of `t` of that size (edges of `t` are those left
    // standing by the attack).
    for s in 0..=m {
        for t in (0..lam.len()).rev() {
            let kept = (t as u64).count_ones() as usize;
            if kept > s {
                continue;
            }
            if kept == s {
                top[t] = lam[t];
                arg[t] = t as u64;
            } else {
                let mut missing = full & !(t as u64);
                let mut cur: Option<(i8, u64)> = None;
                while missing != 0 {
                    let bit = missing & missing.wrapping_neg();
                    missing ^= bit;
                    let up = t | bit as usize;
                    let cand = (top[up], arg[up]);
                    cur = match cur {
                        None => Some(cand),
                        Some(c) if cand.0 > c.0 || (cand.0 == c.0 && lex_less(cand.1, c.1)) => {
                            Some(cand)
                        }
                        keep => keep,
                    };
                }
                let (v, s_mask) = cur.expect("t is missing at least one edge");
                top[t] = v;
                arg[t] = s_mask;
            }
            let a = m - kept;
            let d = s - kept;
            let attack = full & !(t as u64);
            let cand = Best {
                value: top[t] as i32,
                attack,
                recovery: arg[t] & attack,
                consistent: lam[t] as i32 == no_recovery[a],
            };
            let slot = &mut best[a * size + d];
            if cand.beats(slot) {
                *slot = Some(cand);
            }
        }
    }

    let entries = best.iter().map(|b| b.map_or(0, |b| b.value)).collect();
    let witnesses = best
        .iter()
        .map(|b| {
            b.map(|b| Witness {
                attack: b.attack,
                recovery: b.recovery,
            })
        })
        .collect();
    Ok(ConnectivityTable {
        graph: g.clone(),
        size,
        entries,
        witnesses,
    })
}

/// Fewest edges a defender must restore to lift a disconnected graph from
/// `lambda_attacked` to `lambda_target`.
///
/// Each restored edge merges at most two components, so a negative target
/// needs `target - attacked` edges and reaching a connected graph (target 1)
/// needs `-attacked`. Targets above 1 depend on the graph and are rejected.
pub fn min_edges_to_reconnect(lambda_attacked: i32, lambda_target: i32) -> Result<u32> {
    if lambda_attacked >= 0 {
        return Err(Error::InvalidTarget(format!(
            "attacked connectivity {lambda_attacked} is not negative"
        )));
    }
    if lambda_target < lambda_attacked {
        return Err(Error::InvalidTarget(format!(
            "target {lambda_target} is below attacked connectivity {lambda_attacked}"
        )));
    }
    match lambda_target {
        t if t < 0 => Ok((t - lambda_attacked) as u32),
        1 => Ok((-lambda_attacked) as u32),
        t => Err(Error::InvalidTarget(format!(
            "target {t} is not reachable by a count formula"
        ))),
    }
}
