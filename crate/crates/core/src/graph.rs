//! Undirected simple graphs and the connectivity measures the game is played over.
//!
//! The generalized edge connectivity of a graph is its edge connectivity when
//! it is connected, and minus the number of edges needed to reconnect it
//! (components - 1) otherwise. Connected graphs score positive, disconnected
//! graphs score negative, and the further from zero the more edges an
//! adversary or a repair crew has to touch to change that.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected edge in canonical form (`.0 < .1`), vertices 0-indexed.
pub type Edge = (usize, usize);

/// Undirected simple graph with a canonical, sorted edge list.
///
/// Edge order matters: bit `i` of an edge mask refers to `edges()[i]`, and
/// witness tie-breaks compare sorted edge-index lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
}

#[derive(Serialize, Deserialize)]
struct RawGraph {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<RawGraph> for Graph {
    type Error = Error;

    fn try_from(raw: RawGraph) -> Result<Self> {
        Graph::new(raw.n, raw.edges.into_iter().map(|[i, j]| (i, j)))
    }
}

impl From<Graph> for RawGraph {
    fn from(g: Graph) -> Self {
        RawGraph {
            n: g.n,
            edges: g.edges.iter().map(|&(i, j)| [i, j]).collect(),
        }
    }
}

impl Graph {
    /// Builds a graph, canonicalizing each pair to `(min, max)` and sorting.
    ///
    /// Rejects `n == 0`, self-loops, out-of-range endpoints and duplicates.
    pub fn new(n: usize, edges: impl IntoIterator<Item = Edge>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("vertex count must be positive".into()));
        }
        let mut canon = Vec::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {i}")));
            }
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) has an endpoint outside 0..{n}"
                )));
            }
            canon.push((i.min(j), i.max(j)));
        }
        canon.sort_unstable();
        if let Some(w) = canon.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge ({}, {})",
                w[0].0, w[0].1
            )));
        }
        Ok(Graph { n, edges: canon })
    }

    /// Graph on `n` vertices with no edges.
    pub fn empty(n: usize) -> Result<Self> {
        Graph::new(n, [])
    }

    pub fn path(n: usize) -> Result<Self> {
        Graph::new(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn complete(n: usize) -> Result<Self> {
        Graph::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    /// Four agents with links 1-2, 1-3, 2-3, 3-4, 1-4 (1-indexed), the running
    /// example whose attack/recovery table is known in closed form.
    pub fn four_agent_example() -> Self {
        Graph::new(4, [(0, 1), (0, 2), (1, 2), (2, 3), (0, 3)]).expect("static graph is valid")
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Mask with one bit set per edge.
    pub fn full_mask(&self) -> u64 {
        if self.edges.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.edges.len()) - 1
        }
    }

    /// Edges selected by `mask`, in canonical order.
    pub fn edges_of(&self, mask: u64) -> Vec<Edge> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &e)| e)
            .collect()
    }

    /// Spanning subgraph keeping only the edges selected by `mask`.
    pub fn subgraph(&self, mask: u64) -> Graph {
        Graph {
            n: self.n,
            edges: self.edges_of(mask),
        }
    }

    /// Spanning subgraph with the given edges removed. Edges not in the graph are ignored.
    pub fn without(&self, removed: &[Edge]) -> Graph {
        Graph {
            n: self.n,
            edges: self
                .edges
                .iter()
                .filter(|e| !removed.contains(e))
                .copied()
                .collect(),
        }
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    pub fn is_connected(&self) -> bool {
        connected_components(self) == 1
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G(n={}, edges=[", self.n)?;
        for (k, (i, j)) in self.edges.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{i}-{j}")?;
        }
        write!(f, "])")
    }
}

/// Union-find over `0..n` with path halving and union by size.
#[derive(Debug, Clone)]
pub(crate) struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
    sets: usize,
}

impl DisjointSets {
    pub(crate) fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            size: vec![1; n],
            sets: n,
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.sets -= 1;
    }

    pub(crate) fn sets(&self) -> usize {
        self.sets
    }
}

/// Number of connected components of the edges of `edges` selected by `mask`.
pub(crate) fn components_of_mask(n: usize, edges: &[Edge], mask: u64) -> usize {
    let mut ds = DisjointSets::new(n);
    let mut rest = mask;
    while rest != 0 {
        let i = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let (a, b) = edges[i];
        ds.union(a, b);
    }
    ds.sets()
}

pub fn connected_components(g: &Graph) -> usize {
    components_of_mask(g.n, &g.edges, g.full_mask())
}

/// Minimum number of edges whose removal disconnects `g`.
///
/// Computed as the smallest unit-capacity max-flow from vertex 0 to every
/// other vertex. A single vertex has connectivity 0.
pub fn edge_connectivity(g: &Graph) -> Result<usize> {
    if !g.is_connected() {
        return Err(Error::DisconnectedInput);
    }
    if g.n == 1 {
        return Ok(0);
    }
    let mut adj = vec![Vec::new(); g.n];
    for &(i, j) in &g.edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let best = (1..g.n)
        .map(|t| unit_max_flow(g.n, &g.edges, &adj, 0, t))
        .min()
        .unwrap_or(0);
    Ok(best)
}

/// Edmonds-Karp on the undirected unit-capacity network given by `edges`.
fn unit_max_flow(n: usize, edges: &[Edge], adj: &[Vec<usize>], s: usize, t: usize) -> usize {
    // residual[u][v]: remaining capacity u -> v
    let mut residual = vec![vec![0i32; n]; n];
    for &(i, j) in edges {
        residual[i][j] += 1;
        residual[j][i] += 1;
    }
    let mut flow = 0;
    let mut prev = vec![usize::MAX; n];
    loop {
        prev.iter_mut().for_each(|p| *p = usize::MAX);
        prev[s] = s;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            if u == t {
                break;
            }
            for &v in &adj[u] {
                if prev[v] == usize::MAX && residual[u][v] > 0 {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[t] == usize::MAX {
            return flow;
        }
        let mut v = t;
        while v != s {
            let u = prev[v];
            residual[u][v] -= 1;
            residual[v][u] += 1;
            v = u;
        }
        flow += 1;
    }
}

/// Generalized edge connectivity: `λ(g)` when connected, `-(components - 1)` otherwise.
pub fn generalized_lambda(g: &Graph) -> i32 {
    let c = connected_components(g);
    if c == 1 {
        edge_connectivity(g).expect("graph checked connected") as i32
    } else {
        -((c - 1) as i32)
    }
}
