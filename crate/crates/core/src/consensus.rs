//! Continuous-time consensus `ẋ = −L(t) x` over a played timeline.
//!
//! The topology is piecewise constant, so each segment is propagated exactly
//! with the spectral decomposition of its (symmetric) Laplacian.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::PlayerParams;
use crate::graph::{Edge, Graph};
use crate::timeline::{Segment, Timeline};

/// Bisection stops once the bracket on the consensus time is this narrow.
const CROSSING_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusConfig {
    pub x0: Vec<f64>,
    pub epsilon: f64,
    pub sample_step: f64,
}

impl ConsensusConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.x0.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.x0.len(),
            });
        }
        if self.x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("initial state must be finite".into()));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "epsilon {} must be positive",
                self.epsilon
            )));
        }
        if !(self.sample_step > 0.0 && self.sample_step.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "sample step {} must be positive",
                self.sample_step
            )));
        }
        Ok(())
    }
}

/// `n` values evenly spread over `[lo, hi]`.
pub fn spread_state(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: f64,
}

/// Disagreement at the start of a game and when its attack may begin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameCheckpoint {
    pub index: usize,
    pub start: f64,
    pub v_start: f64,
    pub attack_start: f64,
    pub v_attack_start: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusTrajectory {
    pub samples: Vec<Sample>,
    /// First time the disagreement is at most epsilon, if reached within the horizon.
    pub t_star: Option<f64>,
    pub checkpoints: Vec<GameCheckpoint>,
}

/// Graph Laplacian `D − A`.
pub fn laplacian(g: &Graph) -> DMatrix<f64> {
    laplacian_of(g.vertex_count(), g.edges())
}

fn laplacian_of(n: usize, edges: &[Edge]) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    for &(i, j) in edges {
        l[(i, i)] += 1.0;
        l[(j, j)] += 1.0;
        l[(i, j)] -= 1.0;
        l[(j, i)] -= 1.0;
    }
    l
}

/// `max x − min x`.
pub fn disagreement(x: &[f64]) -> f64 {
    assert!(!x.is_empty(), "disagreement of an empty state");
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    hi - lo
}

/// Exact flow of `ẋ = −L x` for a fixed Laplacian.
#[derive(Debug, Clone)]
pub struct LaplacianFlow {
    basis: DMatrix<f64>,
    rates: DVector<f64>,
}

impl LaplacianFlow {
    pub fn new(laplacian: DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(laplacian);
        LaplacianFlow {
            basis: eig.eigenvectors,
            rates: eig.eigenvalues,
        }
    }

    pub fn for_graph(g: &Graph) -> Self {
        Self::new(laplacian(g))
    }

    /// `exp(−L t) x`.
    pub fn propagate(&self, x: &DVector<f64>, t: f64) -> DVector<f64> {
        let mut coeffs = self.basis.tr_mul(x);
        for (c, &r) in coeffs.iter_mut().zip(self.rates.iter()) {
            *c *= (-r * t).exp();
        }
        &self.basis * coeffs
    }

    /// `exp(−L t)`.
    pub fn transition(&self, t: f64) -> DMatrix<f64> {
        let decay = DMatrix::from_diagonal(&self.rates.map(|r| (-r * t).exp()));
        &self.basis * decay * self.basis.transpose()
    }
}

/// `max_j min_i P_ij` for `P = exp(−γ L)`.
pub fn contraction_floor(g: &Graph, gamma: f64) -> f64 {
    let p = LaplacianFlow::for_graph(g).transition(gamma);
    p.column_iter()
        .map(|col| col.min())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Upper bound on the approximate consensus time under the attacker's energy budget:
///
/// ```text
/// (β_A (γ_A + γ_D) ⌈(ln ε − ln V(x0)) / ln(1 − p)⌉ + κ_A) / (β_A − ρ_A)
/// ```
///
/// with `p` from [`contraction_floor`] at the attacker's dwell time.
pub fn consensus_time_bound(
    g: &Graph,
    attacker: &PlayerParams,
    defender: &PlayerParams,
    x0: &[f64],
    epsilon: f64,
) -> Result<f64> {
    if x0.len() != g.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: g.vertex_count(),
            got: x0.len(),
        });
    }
    if !g.is_connected() {
        return Err(Error::DisconnectedInput);
    }
    if attacker.beta <= attacker.rho {
        return Err(Error::InvalidParams("attacker beta must exceed rho".into()));
    }
    let v0 = disagreement(x0);
    if v0 <= epsilon {
        return Err(Error::AlreadyConsensus {
            disagreement: v0,
            epsilon,
        });
    }
    let p = contraction_floor(g, attacker.gamma);
    let games = ((epsilon.ln() - v0.ln()) / (1.0 - p).ln()).ceil();
    Ok(
        (attacker.beta * (attacker.gamma + defender.gamma) * games + attacker.kappa)
            / (attacker.beta - attacker.rho),
    )
}

/// Propagates across a contiguous list of segments starting at `segments[0].start`.
struct SegmentWalker<'a> {
    segments: &'a [Segment],
    flows: HashMap<Vec<Edge>, LaplacianFlow>,
    n: usize,
}

impl<'a> SegmentWalker<'a> {
    fn new(n: usize, segments: &'a [Segment]) -> Self {
        SegmentWalker {
            segments,
            flows: HashMap::new(),
            n,
        }
    }

    fn flow(&mut self, k: usize) -> &LaplacianFlow {
        let edges = &self.segments[k].edges;
        let n = self.n;
        self.flows
            .entry(edges.clone())
            .or_insert_with(|| LaplacianFlow::new(laplacian_of(n, edges)))
    }
}

/// Integrates the consensus dynamics over the timeline's segments.
pub fn integrate(timeline: &Timeline, config: &ConsensusConfig) -> Result<ConsensusTrajectory> {
    let n = timeline.graph.vertex_count();
    config.validate(n)?;
    let segments: Vec<Segment> = timeline.segments().cloned().collect();
    let mut traj = integrate_segments(n, &segments, config)?;

    // Checkpoints at game start and attack start, read off the propagated path.
    let mut walker = SegmentWalker::new(n, &segments);
    let mut boundary_states = Vec::with_capacity(segments.len() + 1);
    let mut x = DVector::from_vec(config.x0.clone());
    boundary_states.push(x.clone());
    for (k, seg) in segments.iter().enumerate() {
        x = walker.flow(k).propagate(&x, seg.duration());
        boundary_states.push(x.clone());
    }
    let state_at = |t: f64, walker: &mut SegmentWalker<'_>| -> Option<DVector<f64>> {
        let k = segments.partition_point(|s| s.end < t);
        if k == segments.len() || t < segments[k].start {
            return None;
        }
        let dt = t - segments[k].start;
        Some(walker.flow(k).propagate(&boundary_states[k], dt))
    };
    for r in &timeline.records {
        let marks = &r.outcome.marks;
        if marks.attack_start > timeline.horizon {
            continue;
        }
        let (Some(xs), Some(xa)) = (
            state_at(marks.start, &mut walker),
            state_at(marks.attack_start, &mut walker),
        ) else {
            continue;
        };
        traj.checkpoints.push(GameCheckpoint {
            index: r.index,
            start: marks.start,
            v_start: disagreement(xs.as_slice()),
            attack_start: marks.attack_start,
            v_attack_start: disagreement(xa.as_slice()),
        });
    }
    Ok(traj)
}

/// Integrates over explicit contiguous segments; no game checkpoints are produced.
pub fn integrate_segments(
    n: usize,
    segments: &[Segment],
    config: &ConsensusConfig,
) -> Result<ConsensusTrajectory> {
    config.validate(n)?;
    if let Some(bad) = segments
        .iter()
        .flat_map(|s| s.edges.iter())
        .find(|&&(i, j)| i >= n || j >= n)
    {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: bad.0.max(bad.1) + 1,
        });
    }
    let mut walker = SegmentWalker::new(n, segments);
    let t0 = segments.first().map_or(0.0, |s| s.start);
    let t_end = segments.last().map_or(t0, |s| s.end);

    let mut x = DVector::from_vec(config.x0.clone());
    let eps = config.epsilon;
    let mut t_star = (disagreement(x.as_slice()) <= eps).then_some(t0);
    let mut samples = Vec::new();
    let mut next_sample = 0usize;
    let sample_time = |i: usize| t0 + i as f64 * config.sample_step;

    for k in 0..segments.len() {
        let seg = &segments[k];
        let flow = walker.flow(k);
        while sample_time(next_sample) < seg.end
            || (k + 1 == segments.len() && sample_time(next_sample) <= t_end)
        {
            let ts = sample_time(next_sample);
            let xs = flow.propagate(&x, ts - seg.start);
            let v = disagreement(xs.as_slice());
            samples.push(Sample {
                t: ts,
                x: xs.as_slice().to_vec(),
                v,
            });
            next_sample += 1;
        }
        let x_end = flow.propagate(&x, seg.duration());
        if t_star.is_none() && disagreement(x_end.as_slice()) <= eps {
            let (mut lo, mut hi) = (seg.start, seg.end);
            while hi - lo > CROSSING_TOLERANCE {
                let mid = 0.5 * (lo + hi);
                let v = disagreement(flow.propagate(&x, mid - seg.start).as_slice());
                if v <= eps {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            t_star = Some(hi);
        }
        x = x_end;
    }
    Ok(ConsensusTrajectory {
        samples,
        t_star,
        checkpoints: Vec::new(),
    })
}

/// Consensus time on a fixed connected graph, without any attacks.
pub fn static_consensus_time(g: &Graph, x0: &[f64], epsilon: f64) -> Result<f64> {
    if x0.len() != g.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: g.vertex_count(),
            got: x0.len(),
        });
    }
    if !g.is_connected() {
        return Err(Error::DisconnectedInput);
    }
    let flow = LaplacianFlow::for_graph(g);
    let x = DVector::from_column_slice(x0);
    let v_at = |t: f64| disagreement(flow.propagate(&x, t).as_slice());
    if v_at(0.0) <= epsilon {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while v_at(hi) > epsilon {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::InvalidParams(
                "disagreement does not reach epsilon".into(),
            ));
        }
    }
    let mut lo = 0.0;
    while hi - lo > CROSSING_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if v_at(mid) <= epsilon {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
