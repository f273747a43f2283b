//! Experiment configuration, orchestration and file emission.
//!
//! All times are in the same dimensionless units as the game parameters.
//!
//! A run config is a JSON document:
//!
//! ```json
//! {
//!   "graph": {"n": 4, "edges": [[0, 1], [0, 2], [1, 2], [2, 3], [0, 3]]},
//!   "attacker": {"beta": 0.4, "kappa": 0.5, "rho": 0.3, "gamma": 0.1},
//!   "defender": {"beta": 0.6, "kappa": 1.0, "rho": 0.1, "gamma": 0.3},
//!   "consensus": {"epsilon": 0.5, "sample_step": 0.01},
//!   "horizon": 6.0
//! }
//! ```
//!
//! `graph` may instead be a path to a graph file, resolved relative to the
//! config file. `consensus.x0` defaults to values spread evenly over `[0, 3]`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::consensus::{
    consensus_time_bound, contraction_floor, integrate, spread_state, static_consensus_time,
    ConsensusConfig, ConsensusTrajectory,
};
use crate::error::{Error, Result};
use crate::game::{
    solve_stage, utility_attacker, utility_defender, Label, PlayerParams, StageInput, StageOutcome,
};
use crate::graph::Graph;
use crate::table::{build_table, ConnectivityTable};
use crate::timeline::{energy_remaining, play, Timeline};

/// Default initial states are spread over this interval.
pub const DEFAULT_SPREAD: (f64, f64) = (0.0, 3.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSource {
    Inline(Graph),
    File(PathBuf),
}

impl GraphSource {
    pub fn load(&self, base: &Path) -> Result<Graph> {
        match self {
            GraphSource::Inline(g) => Ok(g.clone()),
            GraphSource::File(p) => load_graph(&base.join(p)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusSection {
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    pub epsilon: f64,
    pub sample_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub graph: GraphSource,
    pub attacker: PlayerParams,
    pub defender: PlayerParams,
    pub consensus: ConsensusSection,
    pub horizon: f64,
    /// Only used to generate randomized test corpora; runs are deterministic.
    #[serde(default)]
    pub seed: u64,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse<T: serde::de::DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    serde_json::from_str(text).map_err(|source| Error::Parse {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_graph(path: &Path) -> Result<Graph> {
    parse(&read(path)?, path)
}

/// A run config with its graph resolved and every field validated.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub graph: Graph,
    pub attacker: PlayerParams,
    pub defender: PlayerParams,
    pub consensus: ConsensusConfig,
    pub horizon: f64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<ResolvedRun> {
        let cfg: RunConfig = parse(&read(path)?, path)?;
        cfg.resolve(path.parent().unwrap_or(Path::new(".")))
    }

    pub fn resolve(&self, base: &Path) -> Result<ResolvedRun> {
        let graph = self.graph.load(base)?;
        if !graph.is_connected() {
            return Err(Error::DisconnectedInput);
        }
        self.attacker.validate()?;
        self.defender.validate()?;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "horizon {} must be positive",
                self.horizon
            )));
        }
        let x0 = self.consensus.x0.clone().unwrap_or_else(|| {
            spread_state(graph.vertex_count(), DEFAULT_SPREAD.0, DEFAULT_SPREAD.1)
        });
        let consensus = ConsensusConfig {
            x0,
            epsilon: self.consensus.epsilon,
            sample_step: self.consensus.sample_step,
        };
        consensus.validate(graph.vertex_count())?;
        Ok(ResolvedRun {
            graph,
            attacker: self.attacker,
            defender: self.defender,
            consensus,
            horizon: self.horizon,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSummary {
    pub index: usize,
    pub label: Label,
    pub start: f64,
    pub end: f64,
    pub m_a: usize,
    pub m_d: usize,
    pub delta_a: f64,
    pub delta_d: f64,
    pub u_attacker: f64,
    pub u_defender: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub games: Vec<GameSummary>,
    pub t_star: Option<f64>,
    pub attack_free_t_star: f64,
    pub bound: f64,
    pub bound_satisfied: bool,
    pub contraction_floor: f64,
    /// Every game shrank the disagreement by at least the contraction factor before its attack.
    pub contraction_satisfied: bool,
    pub energy_spent_a: f64,
    pub energy_spent_d: f64,
    pub total_u_attacker: f64,
    pub total_u_defender: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub timeline: Timeline,
    pub trajectory: ConsensusTrajectory,
    pub summary: RunSummary,
}

/// Tolerance for the per-game contraction check.
pub const CONTRACTION_TOLERANCE: f64 = 1e-8;

/// Totals of energy and utility recomputed from a timeline's outcomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Audit {
    pub energy_spent_a: f64,
    pub energy_spent_d: f64,
    pub total_u_attacker: f64,
    pub total_u_defender: f64,
}

/// Recomputes energy use and utilities of every recorded game from its strategies.
pub fn audit(timeline: &Timeline, table: &ConnectivityTable) -> Result<Audit> {
    let mut a = Audit {
        energy_spent_a: 0.0,
        energy_spent_d: 0.0,
        total_u_attacker: 0.0,
        total_u_defender: 0.0,
    };
    for r in &timeline.records {
        let o = &r.outcome;
        a.energy_spent_a += timeline.attacker.beta * o.attack.m as f64 * o.attack.delta;
        a.energy_spent_d += timeline.defender.beta * o.defense.m as f64 * o.defense.delta;
        a.total_u_attacker +=
            utility_attacker(table, &o.attack, &o.defense, timeline.attacker.beta)?;
        a.total_u_defender +=
            utility_defender(table, &o.attack, &o.defense, timeline.defender.beta)?;
    }
    Ok(a)
}

pub fn run(cfg: &ResolvedRun) -> Result<RunReport> {
    let table = build_table(&cfg.graph)?;
    let timeline = play(&table, cfg.attacker, cfg.defender, cfg.horizon)?;
    let trajectory = integrate(&timeline, &cfg.consensus)?;
    let attack_free_t_star =
        static_consensus_time(&cfg.graph, &cfg.consensus.x0, cfg.consensus.epsilon)?;
    let bound = match consensus_time_bound(
        &cfg.graph,
        &cfg.attacker,
        &cfg.defender,
        &cfg.consensus.x0,
        cfg.consensus.epsilon,
    ) {
        Ok(b) => b,
        Err(Error::AlreadyConsensus { .. }) => 0.0,
        Err(e) => return Err(e),
    };
    let floor = contraction_floor(&cfg.graph, cfg.attacker.gamma);
    let contraction_satisfied = trajectory
        .checkpoints
        .iter()
        .all(|c| c.v_attack_start <= (1.0 - floor) * c.v_start + CONTRACTION_TOLERANCE);
    let totals = audit(&timeline, &table)?;
    let games = timeline
        .records
        .iter()
        .map(|r| GameSummary {
            index: r.index,
            label: r.outcome.label,
            start: r.outcome.marks.start,
            end: r.outcome.marks.end,
            m_a: r.outcome.attack.m,
            m_d: r.outcome.defense.m,
            delta_a: r.outcome.attack.delta,
            delta_d: r.outcome.defense.delta,
            u_attacker: r.outcome.u_attacker,
            u_defender: r.outcome.u_defender,
        })
        .collect();
    let summary = RunSummary {
        games,
        t_star: trajectory.t_star,
        attack_free_t_star,
        bound,
        bound_satisfied: trajectory.t_star.is_some_and(|t| t <= bound),
        contraction_floor: floor,
        contraction_satisfied,
        energy_spent_a: totals.energy_spent_a,
        energy_spent_d: totals.energy_spent_d,
        total_u_attacker: totals.total_u_attacker,
        total_u_defender: totals.total_u_defender,
    };
    Ok(RunReport {
        timeline,
        trajectory,
        summary,
    })
}

/// Solves the first game of a run config in isolation.
pub fn solve_first_game(cfg: &ResolvedRun) -> Result<StageOutcome> {
    let table = build_table(&cfg.graph)?;
    solve_stage(&StageInput {
        table: &table,
        start_time: 0.0,
        spent_a: 0.0,
        spent_d: 0.0,
        attacker: cfg.attacker,
        defender: cfg.defender,
    })
}

/// `t, lambda, energy_a, energy_d, label` on the sampling grid.
pub fn timeline_csv(timeline: &Timeline, sample_step: f64) -> String {
    let mut out = String::from("t,lambda,energy_a,energy_d,label\n");
    let steps = (timeline.horizon / sample_step).floor() as usize;
    for i in 0..=steps {
        let t = i as f64 * sample_step;
        let Some((lambda, label)) = timeline.state_at(t) else {
            continue;
        };
        let spent = timeline.spent_at(t);
        let _ = writeln!(
            out,
            "{t:.6},{lambda},{:.9},{:.9},{label}",
            energy_remaining(&timeline.attacker, spent.spent_a, t),
            energy_remaining(&timeline.defender, spent.spent_d, t),
        );
    }
    out
}

/// `t, x_1..x_n, V` per sample.
pub fn trajectory_csv(traj: &ConsensusTrajectory, n: usize) -> String {
    let mut out = String::from("t");
    for i in 1..=n {
        let _ = write!(out, ",x_{i}");
    }
    out.push_str(",V\n");
    for s in &traj.samples {
        let _ = write!(out, "{:.6}", s.t);
        for x in &s.x {
            let _ = write!(out, ",{x:.9}");
        }
        let _ = writeln!(out, ",{:.9}", s.v);
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// Writes `timeline.json`, `timeline.csv`, `trajectory.csv` and `summary.json` into `dir`.
pub fn write_run(report: &RunReport, sample_step: f64, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let n = report.timeline.graph.vertex_count();
    write_file(&dir.join("timeline.json"), &to_json(&report.timeline))?;
    write_file(
        &dir.join("timeline.csv"),
        &timeline_csv(&report.timeline, sample_step),
    )?;
    write_file(
        &dir.join("trajectory.csv"),
        &trajectory_csv(&report.trajectory, n),
    )?;
    write_file(&dir.join("summary.json"), &to_json(&report.summary))?;
    Ok(())
}

/// Parameter varied along one sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    BetaA,
    BetaD,
    /// Attacker's one-edge cap, set through its prior energy use.
    DeltaA,
    /// Defender's one-edge cap, set through its prior energy use.
    DeltaD,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::BetaA => "beta_a",
            SweepParam::BetaD => "beta_d",
            SweepParam::DeltaA => "delta_a",
            SweepParam::DeltaD => "delta_d",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: SweepParam,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::InvalidParams(format!(
                "{} axis needs at least 2 steps, got {}",
                self.param.name(),
                self.steps
            )));
        }
        if !self.min.is_finite() || !self.max.is_finite() || self.min >= self.max {
            return Err(Error::InvalidParams(format!(
                "{} axis needs min < max",
                self.param.name()
            )));
        }
        Ok(())
    }

    pub fn value(&self, i: usize) -> f64 {
        self.min + (self.max - self.min) * i as f64 / (self.steps - 1) as f64
    }
}

/// A 2-D grid of single stage games.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub graph: GraphSource,
    pub attacker: PlayerParams,
    pub defender: PlayerParams,
    #[serde(default)]
    pub start_time: f64,
    #[serde(default)]
    pub spent_a: f64,
    #[serde(default)]
    pub spent_d: f64,
    pub x_axis: Axis,
    pub y_axis: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub x: f64,
    pub y: f64,
    pub label: Label,
    pub m_a: usize,
    pub m_d: usize,
}

impl SweepSpec {
    pub fn load(path: &Path) -> Result<(SweepSpec, Graph)> {
        let spec: SweepSpec = parse(&read(path)?, path)?;
        let graph = spec.graph.load(path.parent().unwrap_or(Path::new(".")))?;
        Ok((spec, graph))
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.x_axis.steps = steps;
        self.y_axis.steps = steps;
        self
    }

    fn validate(&self) -> Result<()> {
        self.x_axis.validate()?;
        self.y_axis.validate()?;
        if self.x_axis.param == self.y_axis.param {
            return Err(Error::InvalidParams("sweep axes must differ".into()));
        }
        Ok(())
    }
}

struct GridInput {
    attacker: PlayerParams,
    defender: PlayerParams,
    spent_a: f64,
    spent_d: f64,
}

fn apply(spec: &SweepSpec, g: &mut GridInput, param: SweepParam, value: f64) -> Result<()> {
    let attack_start = spec.start_time + spec.attacker.gamma;
    let recovery_start = attack_start + spec.defender.gamma;
    match param {
        SweepParam::BetaA => g.attacker.beta = value,
        SweepParam::BetaD => g.defender.beta = value,
        SweepParam::DeltaA => {
            let p = &g.attacker;
            g.spent_a = p.kappa + p.rho * attack_start - value * (p.beta - p.rho);
        }
        SweepParam::DeltaD => {
            let p = &g.defender;
            g.spent_d = p.kappa + p.rho * recovery_start - value * (p.beta - p.rho);
        }
    }
    if g.spent_a < 0.0 || g.spent_d < 0.0 {
        return Err(Error::InvalidParams(format!(
            "{} = {value} exceeds the energy budget",
            param.name()
        )));
    }
    Ok(())
}

/// Solves one stage game per grid point, in parallel, returned in row-major grid order
/// (`x` outer, `y` inner).
pub fn sweep(spec: &SweepSpec, graph: &Graph) -> Result<Vec<SweepPoint>> {
    spec.validate()?;
    let table = build_table(graph)?;
    let grid: Vec<(usize, usize)> = (0..spec.x_axis.steps)
        .flat_map(|i| (0..spec.y_axis.steps).map(move |j| (i, j)))
        .collect();
    grid.par_iter()
        .map(|&(i, j)| {
            let (x, y) = (spec.x_axis.value(i), spec.y_axis.value(j));
            let mut g = GridInput {
                attacker: spec.attacker,
                defender: spec.defender,
                spent_a: spec.spent_a,
                spent_d: spec.spent_d,
            };
            apply(spec, &mut g, spec.x_axis.param, x)?;
            apply(spec, &mut g, spec.y_axis.param, y)?;
            let out = solve_stage(&StageInput {
                table: &table,
                start_time: spec.start_time,
                spent_a: g.spent_a,
                spent_d: g.spent_d,
                attacker: g.attacker,
                defender: g.defender,
            })?;
            Ok(SweepPoint {
                x,
                y,
                label: out.label,
                m_a: out.attack.m,
                m_d: out.defense.m,
            })
        })
        .collect()
}

pub fn sweep_csv(spec: &SweepSpec, points: &[SweepPoint]) -> String {
    let mut out = format!(
        "{},{},label,m_a,m_d\n",
        spec.x_axis.param.name(),
        spec.y_axis.param.name()
    );
    for p in points {
        let _ = writeln!(out, "{:.6},{:.6},{},{},{}", p.x, p.y, p.label, p.m_a, p.m_d);
    }
    out
}
