//! One attacker/defender stage game, solved by backward induction.
//!
//! Within a game starting at `t0` the attacker may jam `m_a` edges from
//! `t0 + γ_A` for `δ_A` time units; once the attack has run for `γ_D` the
//! defender may restore `m_d ≤ m_a` of the jammed edges for `δ_D`. Payoffs
//! integrate the generalized connectivity of the graph over the attack window
//! and charge `β m δ` per player. Energy caps every duration.
//!
//! The solver scores the candidate attacker plans (no attack, attack to
//! exhaustion, attack only until the defender could react, attack to
//! exhaustion against an optimal recovery), works out the defender's best
//! reply to each, and picks the subgame-perfect combination.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Edge;
use crate::table::ConnectivityTable;

/// Relative tolerance under which two utilities count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

/// Per-player cost, energy and timing parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlayerParams {
    /// Cost (and energy drain) per edge per unit time.
    pub beta: f64,
    /// Initial energy.
    pub kappa: f64,
    /// Recharge rate.
    pub rho: f64,
    /// Dwell time before this player may act.
    pub gamma: f64,
}

impl PlayerParams {
    pub fn new(beta: f64, kappa: f64, rho: f64, gamma: f64) -> Result<Self> {
        let p = PlayerParams {
            beta,
            kappa,
            rho,
            gamma,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks `κ ≥ 0`, `0 ≤ ρ < 1`, `β > ρ`, `γ > 0`, all finite.
    ///
    /// Zero energy and zero recharge are accepted so a player can be switched
    /// off entirely.
    pub fn validate(&self) -> Result<()> {
        let fields = [self.beta, self.kappa, self.rho, self.gamma];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if self.kappa < 0.0 {
            return Err(Error::InvalidParams(format!("kappa {} < 0", self.kappa)));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::InvalidParams(format!(
                "rho {} outside [0, 1)",
                self.rho
            )));
        }
        if self.beta <= self.rho {
            return Err(Error::InvalidParams(format!(
                "beta {} must exceed rho {}",
                self.beta, self.rho
            )));
        }
        if self.gamma <= 0.0 {
            return Err(Error::InvalidParams(format!("gamma {} <= 0", self.gamma)));
        }
        Ok(())
    }
}

/// Everything a stage game depends on.
#[derive(Debug, Clone, Copy)]
pub struct StageInput<'a> {
    pub table: &'a ConnectivityTable,
    pub start_time: f64,
    /// Energy consumed by the attacker in earlier games.
    pub spent_a: f64,
    /// Energy consumed by the defender in earlier games.
    pub spent_d: f64,
    pub attacker: PlayerParams,
    pub defender: PlayerParams,
}

impl StageInput<'_> {
    fn validate(&self) -> Result<()> {
        self.attacker.validate()?;
        self.defender.validate()?;
        if !(self.start_time >= 0.0 && self.start_time.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "start time {} must be finite and nonnegative",
                self.start_time
            )));
        }
        if !(self.spent_a >= 0.0 && self.spent_d >= 0.0) {
            return Err(Error::InvalidParams(
                "consumed energy must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn attack_start(&self) -> f64 {
        self.start_time + self.attacker.gamma
    }

    /// Earliest recovery start, assuming the attack lasts past the defender's dwell.
    pub fn recovery_start(&self) -> f64 {
        self.attack_start() + self.defender.gamma
    }

    /// Longest attack on `m` edges the attacker can afford in this game.
    pub fn attack_cap(&self, m: usize) -> f64 {
        max_duration(&self.attacker, self.spent_a, m, self.attack_start())
    }

    /// Longest recovery of `m` edges the defender can afford in this game.
    pub fn recovery_cap(&self, m: usize) -> f64 {
        max_duration(&self.defender, self.spent_d, m, self.recovery_start())
    }
}

/// Number of edges acted on, for how long, and which ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub m: usize,
    pub delta: f64,
    pub edges: Vec<Edge>,
}

impl Strategy {
    pub fn idle() -> Self {
        Strategy {
            m: 0,
            delta: 0.0,
            edges: Vec::new(),
        }
    }

    /// Strategy without materialized edges, for scoring.
    pub fn sized(m: usize, delta: f64) -> Self {
        Strategy {
            m,
            delta,
            edges: Vec::new(),
        }
    }
}

/// Which of the four equilibrium shapes a game settled on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    /// No attack.
    CS1,
    /// Attack until the energy cap, no recovery.
    CS2a,
    /// Attack only until the defender could start recovering.
    CS2b,
    /// Attack until the energy cap, defender recovers optimally.
    CS3,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::CS1 => "CS1",
            Label::CS2a => "CS2a",
            Label::CS2b => "CS2b",
            Label::CS3 => "CS3",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Timing of one game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Marks {
    pub start: f64,
    pub attack_start: f64,
    pub attack_end: f64,
    pub recovery_start: f64,
    pub recovery_end: f64,
    pub end: f64,
}

/// The simplified utilities compared during backward induction, with their maximizers.
///
/// `None` means the candidate set was empty (no attack size leads to a
/// recovery, or none leaves the defender idle).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidates {
    pub a1: f64,
    pub a2a: Option<f64>,
    pub m_a2a: usize,
    pub a2b: Option<f64>,
    pub m_a2b: usize,
    pub a3: Option<f64>,
    pub m_a3: usize,
    /// Best attack among sizes the defender will not answer with a recovery.
    pub a2a_prime: Option<f64>,
    pub m_a2a_prime: usize,
    pub d1: f64,
    pub d2a: Option<f64>,
    pub d2b: Option<f64>,
    pub d3: Option<f64>,
    /// Defender payoff for answering the `m_a2a` attack with its best recovery.
    pub d3_prime: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub label: Label,
    pub attack: Strategy,
    pub defense: Strategy,
    pub marks: Marks,
    pub u_attacker: f64,
    pub u_defender: f64,
    /// Energy cap on the chosen attack, `0` when idle.
    pub attack_cap: f64,
    /// Energy cap on the chosen recovery, `0` when idle.
    pub recovery_cap: f64,
    pub candidates: Candidates,
}

/// Longest span a player can keep `m` edges busy starting at `start`:
/// `(κ + ρ·start − spent) / (β m − ρ)`, or 0 when no energy is left.
pub fn max_duration(p: &PlayerParams, spent: f64, m: usize, start: f64) -> f64 {
    assert!(m >= 1, "max_duration needs at least one edge");
    let available = p.kappa + p.rho * start - spent;
    if available <= 0.0 {
        return 0.0;
    }
    available / (p.beta * m as f64 - p.rho)
}

fn check_pair(table: &ConnectivityTable, attack: &Strategy, defense: &Strategy) -> Result<()> {
    if defense.m > attack.m {
        return Err(Error::InvalidPair {
            attacked: attack.m,
            recovered: defense.m,
        });
    }
    if attack.m > table.edge_count() {
        return Err(Error::InvalidParams(format!(
            "attack on {} edges exceeds |E| = {}",
            attack.m,
            table.edge_count()
        )));
    }
    Ok(())
}

/// Attacker payoff `−λ̂_A (δ_A − δ_D) − λ̂_D δ_D − β_A m_A δ_A`.
///
/// `defense.delta` is the realized recovery time.
pub fn utility_attacker(
    table: &ConnectivityTable,
    attack: &Strategy,
    defense: &Strategy,
    beta_a: f64,
) -> Result<f64> {
    check_pair(table, attack, defense)?;
    let la = table.at(attack.m, 0) as f64;
    let ld = table.at(attack.m, defense.m) as f64;
    Ok(-la * (attack.delta - defense.delta)
        - ld * defense.delta
        - beta_a * attack.m as f64 * attack.delta)
}

/// Defender payoff `λ̂_A (δ_A − δ_D) + λ̂_D δ_D − β_D m_D δ_D`.
pub fn utility_defender(
    table: &ConnectivityTable,
    attack: &Strategy,
    defense: &Strategy,
    beta_d: f64,
) -> Result<f64> {
    check_pair(table, attack, defense)?;
    let la = table.at(attack.m, 0) as f64;
    let ld = table.at(attack.m, defense.m) as f64;
    Ok(la * (attack.delta - defense.delta) + ld * defense.delta
        - beta_d * defense.m as f64 * defense.delta)
}

/// The defender's optimal reply to an attack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefenderResponse {
    /// Edges to recover; 0 when recovering does not pay or is impossible.
    pub m: usize,
    /// Recovery duration `min(Δ_D(m), δ_A − γ_D)`; 0 when not recovering.
    pub xi: f64,
    /// Payoff rate `λ̂_D − λ̂_A − β_D m` of the best recovery size, if any size was feasible.
    pub phi: Option<f64>,
    /// Best `φ·ξ` over recovery sizes `1..=m_A`, whether or not it is taken.
    pub best_gain: Option<f64>,
}

impl DefenderResponse {
    fn none() -> Self {
        DefenderResponse {
            m: 0,
            xi: 0.0,
            phi: None,
            best_gain: None,
        }
    }

    pub fn recovers(&self) -> bool {
        self.m > 0
    }
}

/// Best recovery against jamming `m_a` edges for `delta_a`.
///
/// Maximizes `φ(m_D)·ξ(m_D)` over `m_D ∈ 1..=m_a`, ties going to more edges.
/// The defender stays idle when the best gain is negative, or when no
/// recovery time is available (`δ_A ≤ γ_D` or no energy).
pub fn defender_best_response(
    table: &ConnectivityTable,
    m_a: usize,
    delta_a: f64,
    input: &StageInput<'_>,
) -> DefenderResponse {
    let gamma_d = input.defender.gamma;
    if m_a == 0 || delta_a <= gamma_d {
        return DefenderResponse::none();
    }
    let window = delta_a - gamma_d;
    let la = table.at(m_a, 0) as f64;
    let mut best: Option<(usize, f64, f64, f64)> = None;
    for m_d in 1..=m_a {
        let xi = input.recovery_cap(m_d).min(window);
        let phi = table.at(m_a, m_d) as f64 - la - input.defender.beta * m_d as f64;
        let gain = phi * xi;
        let better = match best {
            None => true,
            Some((_, _, _, g)) => gain > g || tied(gain, g),
        };
        if better {
            best = Some((m_d, xi, phi, gain));
        }
    }
    let (m_d, xi, phi, gain) = best.expect("m_a >= 1");
    if xi <= 0.0 || gain < 0.0 {
        return DefenderResponse {
            m: 0,
            xi: 0.0,
            phi: Some(phi),
            best_gain: Some(gain),
        };
    }
    DefenderResponse {
        m: m_d,
        xi,
        phi: Some(phi),
        best_gain: Some(gain),
    }
}

/// Argmax over `(m, value)` pairs, ties resolved toward larger `m`.
fn argmax(items: impl IntoIterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (m, v) in items {
        best = match best {
            Some((bm, bv)) if v < bv && !tied(v, bv) => Some((bm, bv)),
            Some((bm, bv)) if tied(v, bv) && m < bm => Some((bm, bv)),
            _ => Some((m, v)),
        };
    }
    best
}

/// Per attack size data shared by the candidate scores.
struct AttackOption {
    m: usize,
    cap: f64,
    lambda_a: f64,
    response: DefenderResponse,
}

impl AttackOption {
    fn rate(&self, beta_a: f64) -> f64 {
        -self.lambda_a - beta_a * self.m as f64
    }
}

/// Solves one stage game.
///
/// Candidate scores, with `Δ_A(m)` the attack cap and `c(m) = −λ̂(m, 0) − β_A m`:
///
/// * exhaust: `c(m)·Δ_A(m)`;
/// * stop at the defender's dwell: `c(m)·min(γ_D, Δ_A(m))`;
/// * exhaust against recovery, over sizes the defender answers:
///   `−λ̂_A(Δ_A − ξ) − λ̂_D ξ − β_A m Δ_A`;
/// * exhaust, restricted to sizes the defender leaves alone.
///
/// The attack is dropped when even the best exhausting attack loses
/// money. Otherwise, if the defender leaves the best exhausting attack alone
/// it is played; else the remaining candidates are compared in the order
/// recovery-answered, dwell-limited, unanswered.
pub fn solve_stage(input: &StageInput<'_>) -> Result<StageOutcome> {
    input.validate()?;
    let table = input.table;
    let edge_total = table.edge_count();
    if edge_total == 0 {
        return Err(Error::EmptyTable);
    }
    let beta_a = input.attacker.beta;
    let gamma_d = input.defender.gamma;

    let options: Vec<AttackOption> = (1..=edge_total)
        .map(|m| {
            let cap = input.attack_cap(m);
            AttackOption {
                m,
                cap,
                lambda_a: table.at(m, 0) as f64,
                response: defender_best_response(table, m, cap, input),
            }
        })
        .collect();

    let exhaust = |o: &AttackOption| o.rate(beta_a) * o.cap;
    let short = |o: &AttackOption| o.rate(beta_a) * gamma_d.min(o.cap);
    let answered = |o: &AttackOption| {
        let r = &o.response;
        let ld = table.at(o.m, r.m) as f64;
        -o.lambda_a * (o.cap - r.xi) - ld * r.xi - beta_a * o.m as f64 * o.cap
    };
    let defender_answered = |o: &AttackOption| {
        let r = &o.response;
        let ld = table.at(o.m, r.m) as f64;
        o.lambda_a * (o.cap - r.xi) + ld * r.xi - input.defender.beta * r.m as f64 * r.xi
    };

    let a2a = argmax(options.iter().map(|o| (o.m, exhaust(o))));
    let a2b = argmax(options.iter().map(|o| (o.m, short(o))));
    let a3 = argmax(
        options
            .iter()
            .filter(|o| o.response.recovers())
            .map(|o| (o.m, answered(o))),
    );
    let a2a_prime = argmax(
        options
            .iter()
            .filter(|o| !o.response.recovers())
            .map(|o| (o.m, exhaust(o))),
    );
    let opt = |m: usize| &options[m - 1];

    let (m2a, u2a) = a2a.expect("at least one edge");
    let (m2b, u2b) = a2b.expect("at least one edge");
    let d2a = opt(m2a).lambda_a * opt(m2a).cap;
    let d3_prime = opt(m2a)
        .response
        .best_gain
        .map(|g| g + opt(m2a).lambda_a * opt(m2a).cap);

    let mut candidates = Candidates {
        a1: 0.0,
        a2a: Some(u2a),
        m_a2a: m2a,
        a2b: Some(u2b),
        m_a2b: m2b,
        a3: a3.map(|(_, v)| v),
        m_a3: a3.map_or(0, |(m, _)| m),
        a2a_prime: a2a_prime.map(|(_, v)| v),
        m_a2a_prime: a2a_prime.map_or(0, |(m, _)| m),
        d1: 0.0,
        d2a: Some(d2a),
        d2b: Some(opt(m2b).lambda_a * gamma_d.min(opt(m2b).cap)),
        d3: a3.map(|(m, _)| defender_answered(opt(m))),
        d3_prime,
    };

    let attack_possible = options.iter().any(|o| o.cap > 0.0);
    let neg_inf = f64::NEG_INFINITY;
    let u3 = candidates.a3.unwrap_or(neg_inf);
    let u2a_prime = candidates.a2a_prime.unwrap_or(neg_inf);
    let m_tilde = candidates.m_a2a_prime;

    enum Choice {
        Idle,
        Exhaust(usize),
        Short(usize),
        Answered(usize),
    }
    let choice = if !attack_possible || u2a < 0.0 {
        Choice::Idle
    } else if !opt(m2a).response.recovers() {
        Choice::Exhaust(m2a)
    } else if u3 < u2b {
        if u2a_prime >= u2b {
            Choice::Exhaust(m_tilde)
        } else {
            Choice::Short(m2b)
        }
    } else if u2a_prime > u3 {
        Choice::Exhaust(m_tilde)
    } else {
        Choice::Answered(candidates.m_a3)
    };

    if !attack_possible {
        // Nothing is affordable; report the idle plan only.
        candidates.a2a = None;
        candidates.a2b = None;
        candidates.a3 = None;
        candidates.a2a_prime = None;
        candidates.d2a = None;
        candidates.d2b = None;
        candidates.d3 = None;
        candidates.d3_prime = None;
    }

    let (label, m_a, delta_a, m_d, xi) = match choice {
        Choice::Idle => (Label::CS1, 0, 0.0, 0, 0.0),
        Choice::Exhaust(m) => (Label::CS2a, m, opt(m).cap, 0, 0.0),
        Choice::Short(m) => (Label::CS2b, m, gamma_d.min(opt(m).cap), 0, 0.0),
        Choice::Answered(m) => {
            let r = opt(m).response;
            (Label::CS3, m, opt(m).cap, r.m, r.xi)
        }
    };

    let start = input.start_time;
    let attack_start = input.attack_start();
    let attack_end = attack_start + delta_a;
    let recovery_start = attack_end.min(attack_start + gamma_d);
    let recovery_end = recovery_start + xi;
    let end = if m_a > 0 {
        attack_end
    } else {
        start + input.attacker.gamma + gamma_d
    };
    let marks = Marks {
        start,
        attack_start,
        attack_end,
        recovery_start,
        recovery_end,
        end,
    };

    let attack = Strategy {
        m: m_a,
        delta: delta_a,
        edges: table.attack_edges(m_a, m_d),
    };
    let defense = Strategy {
        m: m_d,
        delta: xi,
        edges: table.recovery_edges(m_a, m_d),
    };
    let u_attacker = utility_attacker(table, &attack, &defense, beta_a)?;
    let u_defender = utility_defender(table, &attack, &defense, input.defender.beta)?;

    Ok(StageOutcome {
        label,
        attack_cap: if m_a > 0 { opt(m_a).cap } else { 0.0 },
        recovery_cap: if m_d > 0 {
            input.recovery_cap(m_d)
        } else {
            0.0
        },
        attack,
        defense,
        marks,
        u_attacker,
        u_defender,
        candidates,
    })
}

/// Closed-form equilibrium label for the single-edge graph.
///
/// `delta_a` and `delta_d` are the attack and recovery caps for one edge.
/// With `ξ = min(Δ_D, Δ_A − γ_D)`: no attack when `β_A > 1`; attack without
/// recovery when `β_D > 2` (or no recovery time exists); otherwise stop at
/// the defender's dwell when `β_A > 1 − 2ξ/(Δ_A − γ_D)`, else attack to
/// exhaustion against a recovery.
pub fn n2_region(beta_a: f64, beta_d: f64, delta_a: f64, delta_d: f64, gamma_d: f64) -> Label {
    if beta_a > 1.0 || delta_a <= 0.0 {
        return Label::CS1;
    }
    let xi = delta_d.min(delta_a - gamma_d);
    if beta_d > 2.0 || xi <= 0.0 {
        return Label::CS2a;
    }
    let threshold = 1.0 - 2.0 * xi / (delta_a - gamma_d);
    if beta_a > threshold {
        Label::CS2b
    } else {
        Label::CS3
    }
}
