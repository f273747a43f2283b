//! Repeated play: chains stage games, carries the energy ledgers forward and
//! records the piecewise-constant communication graph each game produces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{solve_stage, Label, PlayerParams, StageInput, StageOutcome};
use crate::graph::{generalized_lambda, Edge, Graph};
use crate::table::ConnectivityTable;

/// Cumulative energy consumed by each player (recharge is not stored here).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub spent_a: f64,
    pub spent_d: f64,
}

impl EnergyLedger {
    pub fn charge(
        &mut self,
        outcome: &StageOutcome,
        attacker: &PlayerParams,
        defender: &PlayerParams,
    ) {
        self.spent_a += attacker.beta * outcome.attack.m as f64 * outcome.attack.delta;
        self.spent_d += defender.beta * outcome.defense.m as f64 * outcome.defense.delta;
    }
}

/// Energy still available at time `t` given what has been consumed.
pub fn energy_remaining(params: &PlayerParams, spent: f64, t: f64) -> f64 {
    params.kappa + params.rho * t - spent
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Intact,
    Attacked,
    Recovered,
}

/// A stretch of time over which the communication graph is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub phase: Phase,
    /// Edges jammed and not restored during the segment.
    pub m_a: usize,
    pub m_d: usize,
    pub lambda: i32,
    pub edges: Vec<Edge>,
}

impl Segment {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub index: usize,
    /// Ledger at the start of the game, i.e. the stage input.
    pub ledger_before: EnergyLedger,
    pub outcome: StageOutcome,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub graph: Graph,
    pub attacker: PlayerParams,
    pub defender: PlayerParams,
    pub horizon: f64,
    pub records: Vec<GameRecord>,
}

impl Timeline {
    /// All segments in time order, covering `[0, horizon]`.
    pub fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.records.iter().flat_map(|r| r.segments.iter())
    }

    pub fn ledger(&self) -> EnergyLedger {
        let mut ledger = EnergyLedger::default();
        for r in &self.records {
            ledger.charge(&r.outcome, &self.attacker, &self.defender);
        }
        ledger
    }

    fn record_at(&self, t: f64) -> Option<&GameRecord> {
        self.records
            .iter()
            .find(|r| t >= r.outcome.marks.start && t < r.outcome.marks.end)
            .or_else(|| self.records.last().filter(|r| t >= r.outcome.marks.start))
    }

    /// Energy each player has consumed by time `t`, including partial actions.
    pub fn spent_at(&self, t: f64) -> EnergyLedger {
        let Some(r) = self.record_at(t) else {
            return EnergyLedger::default();
        };
        let o = &r.outcome;
        let busy = |from: f64, len: f64| (t - from).clamp(0.0, len);
        EnergyLedger {
            spent_a: r.ledger_before.spent_a
                + self.attacker.beta
                    * o.attack.m as f64
                    * busy(o.marks.attack_start, o.attack.delta),
            spent_d: r.ledger_before.spent_d
                + self.defender.beta
                    * o.defense.m as f64
                    * busy(o.marks.recovery_start, o.defense.delta),
        }
    }

    /// Generalized connectivity and game label in force at time `t`.
    pub fn state_at(&self, t: f64) -> Option<(i32, Label)> {
        let r = self.record_at(t)?;
        let seg = r
            .segments
            .iter()
            .find(|s| t >= s.start && t < s.end)
            .or(r.segments.last())?;
        Some((seg.lambda, r.outcome.label))
    }
}

/// Builds the segments of one game, clipped to `horizon`.
///
/// The graph runs intact, then attacked, then (if the defender acts)
/// recovered, then attacked again until the attack ends; a game without an
/// attack stays intact throughout.
fn segments_for(table: &ConnectivityTable, outcome: &StageOutcome, horizon: f64) -> Vec<Segment> {
    let g = table.graph();
    let marks = &outcome.marks;
    let (m_a, m_d) = (outcome.attack.m, outcome.defense.m);
    let intact = || (Phase::Intact, 0, 0, table.intact(), g.edges().to_vec());

    let mut spans = vec![(marks.start, marks.attack_start, intact())];
    if m_a == 0 {
        spans.push((marks.attack_start, marks.end, intact()));
    } else {
        // Keep the realized attack set for the unrecovered phase when it also
        // attains the no-recovery entry; otherwise fall back to that entry's witness.
        let realized = outcome.attack.edges.clone();
        let attacked_graph = {
            let candidate = g.without(&realized);
            if generalized_lambda(&candidate) == table.at(m_a, 0) {
                candidate
            } else {
                g.without(&table.attack_edges(m_a, 0))
            }
        };
        let attacked = (
            Phase::Attacked,
            m_a,
            0,
            table.at(m_a, 0),
            attacked_graph.edges().to_vec(),
        );
        spans.push((marks.attack_start, marks.recovery_start, attacked.clone()));
        if m_d > 0 {
            let mut edges = g.without(&realized).edges().to_vec();
            edges.extend_from_slice(&outcome.defense.edges);
            edges.sort_unstable();
            spans.push((
                marks.recovery_start,
                marks.recovery_end,
                (Phase::Recovered, m_a, m_d, table.at(m_a, m_d), edges),
            ));
        }
        spans.push((marks.recovery_end, marks.attack_end, attacked));
    }

    spans
        .into_iter()
        .filter_map(|(start, end, (phase, m_a, m_d, lambda, edges))| {
            let end = end.min(horizon);
            (end > start).then_some(Segment {
                start,
                end,
                phase,
                m_a,
                m_d,
                lambda,
                edges,
            })
        })
        .collect()
}

/// Plays games back to back from `t = 0` until a game starts at or after `horizon`.
pub fn play(
    table: &ConnectivityTable,
    attacker: PlayerParams,
    defender: PlayerParams,
    horizon: f64,
) -> Result<Timeline> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "horizon {horizon} must be positive and finite"
        )));
    }
    let mut ledger = EnergyLedger::default();
    let mut records = Vec::new();
    let mut t = 0.0;
    while t < horizon {
        let input = StageInput {
            table,
            start_time: t,
            spent_a: ledger.spent_a,
            spent_d: ledger.spent_d,
            attacker,
            defender,
        };
        let outcome = solve_stage(&input)?;
        let index = records.len();
        if outcome.marks.end <= t {
            return Err(Error::StallGuard { index });
        }
        let segments = segments_for(table, &outcome, horizon);
        let before = ledger;
        ledger.charge(&outcome, &attacker, &defender);
        t = outcome.marks.end;
        records.push(GameRecord {
            index,
            ledger_before: before,
            outcome,
            segments,
        });
    }
    Ok(Timeline {
        graph: table.graph().clone(),
        attacker,
        defender,
        horizon,
        records,
    })
}
