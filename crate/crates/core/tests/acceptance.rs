//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use netjam_core::consensus::{consensus_time_bound, spread_state, LaplacianFlow};
use netjam_core::game::defender_best_response;
use netjam_core::harness::{run, ResolvedRun, CONTRACTION_TOLERANCE};
use netjam_core::timeline::Phase;
use netjam_core::{
    build_table, n2_region, solve_stage, utility_attacker, ConsensusConfig, Graph, Label,
    PlayerParams, StageInput, Strategy,
};
use rand::Rng;

const REFERENCE_TABLE: [&[i32]; 6] = [
    &[2],
    &[1, 2],
    &[-1, 1, 2],
    &[-1, 1, 1, 2],
    &[-2, -1, 1, 1, 2],
    &[-3, -2, -1, 1, 1, 2],
];
const GRID: usize = 200;
const PROPERTY_INSTANCES: usize = 500;
const SPE_INSTANCES: usize = 200;
const SPE_TOLERANCE: f64 = 1e-9;
const RANDOM_BOUND_RUNS: usize = 100;
const INTEGRATOR_SEGMENTS: usize = 50;
const INTEGRATOR_TOLERANCE: f64 = 1e-6;
const RK4_STEP: f64 = 1e-4;
const ROW_SUM_TOLERANCE: f64 = 1e-9;
const EPSILON: f64 = 0.5;
const HORIZON: f64 = 12.0;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn params(beta: f64, kappa: f64, rho: f64, gamma: f64) -> PlayerParams {
    PlayerParams::new(beta, kappa, rho, gamma).unwrap()
}

fn first_simulation() -> (PlayerParams, PlayerParams) {
    (params(0.4, 0.5, 0.3, 0.1), params(0.6, 1.0, 0.1, 0.3))
}

fn second_simulation() -> (PlayerParams, PlayerParams) {
    (params(0.4, 5.0, 0.39, 0.1), params(0.6, 1.0, 0.1, 0.3))
}

fn resolved(graph: Graph, attacker: PlayerParams, defender: PlayerParams) -> ResolvedRun {
    let n = graph.vertex_count();
    ResolvedRun {
        graph,
        attacker,
        defender,
        consensus: ConsensusConfig {
            x0: spread_state(n, 0.0, 3.0),
            epsilon: EPSILON,
            sample_step: 0.01,
        },
        horizon: HORIZON,
    }
}

fn golden_matrix() -> Verdict {
    let started = Instant::now();
    let table = build_table(&Graph::four_agent_example()).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let mut mismatches = Vec::new();
    for (a, row) in REFERENCE_TABLE.iter().enumerate() {
        for (d, &want) in row.iter().enumerate() {
            let got = table.at(a, d);
            if got != want {
                mismatches.push(format!("({a},{d}) got {got} want {want}"));
            }
        }
    }
    let fast = elapsed < 1.0;
    verdict(
        mismatches.is_empty() && fast,
        format!(
            "{}/21 entries match, {:.3}s{}",
            21 - mismatches.len(),
            elapsed,
            if mismatches.is_empty() {
                String::new()
            } else {
                format!("; mismatches: {}", mismatches.join(", "))
            }
        ),
    )
}

fn two_agent_regions() -> Verdict {
    let table = build_table(&Graph::path(2).unwrap()).unwrap();
    let mut disagreements = 0;
    let mut first = None;
    let mut seen = std::collections::BTreeSet::new();
    for i in 1..=GRID {
        for j in 1..=GRID {
            let beta_a = 2.0 * i as f64 / GRID as f64;
            let beta_d = 3.0 * j as f64 / GRID as f64;
            let input = StageInput {
                table: &table,
                start_time: 0.0,
                spent_a: 0.0,
                spent_d: 0.0,
                attacker: params(beta_a, 1.0, 0.005, 0.1),
                defender: params(beta_d, 0.5, 0.005, 0.3),
            };
            let delta_a = input.attack_cap(1);
            let delta_d = input.recovery_cap(1);
            let got = solve_stage(&input).unwrap().label;
            let want = n2_region(beta_a, beta_d, delta_a, delta_d, input.defender.gamma);
            seen.insert(want.as_str());
            if got != want {
                disagreements += 1;
                first.get_or_insert(format!("β^A={beta_a}, β^D={beta_d}: {got} vs {want}"));
            }
        }
    }
    verdict(
        disagreements == 0 && seen.len() == 4,
        format!(
            "{} of {} grid points disagree, regions seen {:?}{}",
            disagreements,
            GRID * GRID,
            seen,
            first.map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    )
}

fn equilibrium_properties() -> Verdict {
    let mut rng = common::rng(2024);
    let mut violations: Vec<String> = Vec::new();
    let mut attacks = 0;
    let mut recoveries = 0;
    for k in 0..PROPERTY_INSTANCES {
        let inst = common::instance(&mut rng);
        let input = inst.input();
        let o = solve_stage(&input).unwrap();
        let c = &o.candidates;
        let mut flag = |name: &str| violations.push(format!("{name} on instance {k}"));
        attacks += usize::from(o.attack.m > 0);
        recoveries += usize::from(o.defense.m > 0);

        // No recovery is always at least as good for the attacker.
        let m_a = rng.gen_range(1..=inst.table.edge_count());
        let delta_a = rng.gen_range(0.0..3.0);
        let attack = Strategy::sized(m_a, delta_a);
        let bare =
            utility_attacker(&inst.table, &attack, &Strategy::idle(), inst.attacker.beta).unwrap();
        for m_d in 1..=m_a {
            let defense = Strategy::sized(m_d, rng.gen_range(0.0..=delta_a));
            let u = utility_attacker(&inst.table, &attack, &defense, inst.attacker.beta).unwrap();
            if u > bare + 1e-12 {
                flag("recovery helped the attacker");
            }
        }

        let u2a = c.a2a.unwrap_or(f64::NEG_INFINITY);
        let u2b = c.a2b.unwrap_or(f64::NEG_INFINITY);
        if let Some(u3) = c.a3 {
            if u3 > u2a + 1e-12 {
                flag("answered attack beat exhaustion");
            }
        }
        let sign = |v: f64| {
            if v.abs() <= 1e-12 {
                0
            } else if v > 0.0 {
                1
            } else {
                -1
            }
        };
        if c.a2a.is_some() && sign(u2a) != sign(u2b) {
            flag("exhaust/dwell sign mismatch");
        }
        if u2a > 0.0 && u2a + 1e-12 < u2b {
            flag("dwell beat exhaustion");
        }
        if inst.defender.beta > 2.0 && o.defense.m != 0 {
            flag("recovery above cost 2");
        }
        if inst.attacker.beta > 1.0 && o.label != Label::CS1 {
            flag("attack above cost 1");
        }
        if o.attack.m > 0 && inst.table.at(o.attack.m, 0) >= 0 {
            flag("attack left graph connected");
        }
    }
    verdict(
        violations.is_empty(),
        format!(
            "{} instances ({} attacked, {} recovered), {} violations{}",
            PROPERTY_INSTANCES,
            attacks,
            recoveries,
            violations.len(),
            violations
                .first()
                .map(|v| format!("; first: {v}"))
                .unwrap_or_default()
        ),
    )
}

fn subgame_perfection() -> Verdict {
    let mut rng = common::rng(77);
    let mut worst_gap = 0.0f64;
    let mut offender = None;
    for k in 0..SPE_INSTANCES {
        let inst = common::instance(&mut rng);
        let input = inst.input();
        let o = solve_stage(&input).unwrap();
        let gamma_d = inst.defender.gamma;
        for m in 1..=inst.table.edge_count() {
            let cap = input.attack_cap(m);
            for delta in [0.0, gamma_d.min(cap), cap] {
                if delta <= 0.0 {
                    continue;
                }
                let r = defender_best_response(&inst.table, m, delta, &input);
                let attack = Strategy::sized(m, delta);
                let defense = Strategy::sized(r.m, r.xi);
                let u =
                    utility_attacker(&inst.table, &attack, &defense, inst.attacker.beta).unwrap();
                let gap = u - o.u_attacker;
                if gap > worst_gap {
                    worst_gap = gap;
                    offender = Some(format!("instance {k}, m={m}, δ={delta:.4}"));
                }
            }
        }
        if o.u_attacker < -SPE_TOLERANCE {
            worst_gap = worst_gap.max(-o.u_attacker);
            offender.get_or_insert(format!("instance {k}: worse than idling"));
        }
    }
    verdict(
        worst_gap <= SPE_TOLERANCE,
        format!(
            "{} instances, largest profitable deviation {:.3e}{}",
            SPE_INSTANCES,
            worst_gap,
            offender.map(|o| format!(" at {o}")).unwrap_or_default()
        ),
    )
}

struct Replication {
    pass: bool,
    detail: String,
    runs: Vec<netjam_core::harness::RunReport>,
}

fn replication() -> Replication {
    let g = Graph::four_agent_example();
    let (a1, d1) = first_simulation();
    let (a2, d2) = second_simulation();
    let first = run(&resolved(g.clone(), a1, d1)).unwrap();
    let second = run(&resolved(g, a2, d2)).unwrap();

    let attacking: Vec<_> = first
        .timeline
        .records
        .iter()
        .filter(|r| r.outcome.attack.m > 0)
        .collect();
    let first_ok = !attacking.is_empty()
        && attacking.iter().all(|r| {
            r.outcome.attack.m == 5
                && r.outcome.defense.m == 0
                && r.segments
                    .iter()
                    .filter(|s| s.phase == Phase::Attacked)
                    .all(|s| s.lambda == -3)
        })
        && first.timeline.ledger().spent_d == 0.0;

    let game1 = &second.timeline.records[0];
    let restored = game1
        .segments
        .iter()
        .any(|s| s.phase == Phase::Recovered && s.lambda > 0);
    let second_ok = game1.outcome.defense.m == 3 && restored;

    let slower = |r: &netjam_core::harness::RunReport| {
        r.summary
            .t_star
            .is_some_and(|t| t > r.summary.attack_free_t_star)
    };
    let labels = |r: &netjam_core::harness::RunReport| {
        r.timeline
            .records
            .iter()
            .map(|r| {
                format!(
                    "{}({},{})",
                    r.outcome.label, r.outcome.attack.m, r.outcome.defense.m
                )
            })
            .take(4)
            .collect::<Vec<_>>()
            .join(" ")
    };
    let pass = first_ok && second_ok && slower(&first) && slower(&second);
    let detail = format!(
        "first: {} games [{} ..], T*={:?} vs attack-free {:.4}; second: game 1 {} with m^D={}, [{} ..], T*={:?} vs {:.4}",
        first.timeline.records.len(),
        labels(&first),
        first.summary.t_star,
        first.summary.attack_free_t_star,
        game1.outcome.label,
        game1.outcome.defense.m,
        labels(&second),
        second.summary.t_star,
        second.summary.attack_free_t_star,
    );
    Replication {
        pass,
        detail,
        runs: vec![first, second],
    }
}

fn consensus_bound(replicated: &[netjam_core::harness::RunReport]) -> Verdict {
    let mut failures = Vec::new();
    let mut worst_contraction = f64::NEG_INFINITY;
    let mut check = |report: &netjam_core::harness::RunReport, name: String| {
        let s = &report.summary;
        match s.t_star {
            Some(t) if t <= s.bound => {}
            other => failures.push(format!("{name}: T*={other:?} bound={:.4}", s.bound)),
        }
        let floor = s.contraction_floor;
        for c in &report.trajectory.checkpoints {
            let excess = c.v_attack_start - (1.0 - floor) * c.v_start;
            worst_contraction = worst_contraction.max(excess);
            if excess > CONTRACTION_TOLERANCE {
                failures.push(format!(
                    "{name}: game {} contraction off by {excess:.3e}",
                    c.index
                ));
            }
        }
    };
    for (i, r) in replicated.iter().enumerate() {
        check(r, format!("simulation {}", i + 1));
    }
    let mut rng = common::rng(4242);
    let mut runs = 0;
    while runs < RANDOM_BOUND_RUNS {
        let n = rng.gen_range(3..=6);
        let g = common::connected_graph(&mut rng, n, 0.4);
        let a = common::player(&mut rng);
        let d = common::player(&mut rng);
        let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
        let eps = rng.gen_range(0.05..0.5);
        let bound = match consensus_time_bound(&g, &a, &d, &x0, eps) {
            Ok(b) => b,
            Err(_) => continue,
        };
        let cfg = ResolvedRun {
            graph: g,
            attacker: a,
            defender: d,
            consensus: ConsensusConfig {
                x0,
                epsilon: eps,
                sample_step: 0.05,
            },
            horizon: bound + 1.0,
        };
        let report = run(&cfg).unwrap();
        check(&report, format!("random run {runs}"));
        runs += 1;
    }
    verdict(
        failures.is_empty(),
        format!(
            "{} runs, largest contraction excess {:.3e}, {} failures{}",
            replicated.len() + RANDOM_BOUND_RUNS,
            worst_contraction,
            failures.len(),
            failures
                .first()
                .map(|f| format!("; first: {f}"))
                .unwrap_or_default()
        ),
    )
}

fn path_versus_complete() -> Verdict {
    let (a, d) = second_simulation();
    let path = run(&resolved(Graph::path(4).unwrap(), a, d)).unwrap();
    let complete = run(&resolved(Graph::complete(4).unwrap(), a, d)).unwrap();
    let attacks = |r: &netjam_core::harness::RunReport| -> Vec<(Label, f64)> {
        r.timeline
            .records
            .iter()
            .filter(|g| g.outcome.attack.m > 0)
            .map(|g| (g.outcome.label, g.outcome.attack.delta))
            .collect()
    };
    let mean = |xs: &[(Label, f64)]| xs.iter().map(|x| x.1).sum::<f64>() / xs.len().max(1) as f64;
    let (pa, ca) = (attacks(&path), attacks(&complete));
    let (pm, cm) = (mean(&pa), mean(&ca));
    let dwell = d.gamma + 1e-12;
    let complete_short = ca.iter().any(|x| x.0 == Label::CS2b) && ca.iter().all(|x| x.1 <= dwell);
    let path_long = pa.iter().any(|x| x.0 != Label::CS2b && x.1 > dwell) && pm > cm;
    let faster = match (complete.summary.t_star, path.summary.t_star) {
        (Some(c), Some(p)) => c < p,
        (Some(_), None) => true,
        _ => false,
    };
    let labels = |xs: &[(Label, f64)]| {
        let mut names: Vec<&str> = xs.iter().map(|x| x.0.as_str()).collect();
        names.dedup();
        names.join("/")
    };
    verdict(
        complete_short && path_long && faster,
        format!(
            "complete: {} attacks [{}] mean {:.4}, T* {:?}; path: {} attacks [{}] mean {:.4}, T* {:?}",
            ca.len(),
            labels(&ca),
            cm,
            complete.summary.t_star,
            pa.len(),
            labels(&pa),
            pm,
            path.summary.t_star
        ),
    )
}

fn rk4(l: &DMatrix<f64>, x0: &DVector<f64>, t: f64) -> DVector<f64> {
    let steps = (t / RK4_STEP).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let f = |x: &DVector<f64>| -(l * x);
    let mut x = x0.clone();
    for _ in 0..steps {
        let k1 = f(&x);
        let k2 = f(&(&x + &k1 * (h / 2.0)));
        let k3 = f(&(&x + &k2 * (h / 2.0)));
        let k4 = f(&(&x + &k3 * h));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    x
}

fn integrator_check() -> Verdict {
    let mut rng = common::rng(99);
    let mut worst = 0.0f64;
    let mut worst_row = 0.0f64;
    for _ in 0..INTEGRATOR_SEGMENTS {
        let n = rng.gen_range(2..=6);
        let g = common::any_graph(&mut rng, n, 0.6);
        let flow = LaplacianFlow::for_graph(&g);
        let x0 = DVector::from_fn(n, |_, _| rng.gen_range(-3.0..3.0));
        let t = rng.gen_range(0.01..2.0);
        let exact = flow.propagate(&x0, t);
        let reference = rk4(&netjam_core::consensus::laplacian(&g), &x0, t);
        worst = worst.max((exact - reference).amax());
        let gamma = rng.gen_range(0.01..1.0);
        let p = flow.transition(gamma);
        for i in 0..n {
            worst_row = worst_row.max((p.row(i).sum() - 1.0).abs());
        }
    }
    verdict(
        worst <= INTEGRATOR_TOLERANCE && worst_row <= ROW_SUM_TOLERANCE,
        format!(
            "{INTEGRATOR_SEGMENTS} segments, max state error {worst:.3e}, max row-sum error {worst_row:.3e}"
        ),
    )
}

fn main() -> ExitCode {
    let started = Instant::now();
    let timed = |f: &dyn Fn() -> Verdict| {
        let t = Instant::now();
        let mut v = f();
        v.detail = format!("{}; {:.2}s", v.detail, t.elapsed().as_secs_f64());
        v
    };
    let mut results: Vec<(&str, Verdict)> = vec![
        ("1 golden matrix", timed(&golden_matrix)),
        ("2 two-agent regions", timed(&two_agent_regions)),
        ("3 equilibrium properties", timed(&equilibrium_properties)),
        ("4 subgame perfection", timed(&subgame_perfection)),
    ];
    let rep = replication();
    results.push((
        "5 simulation replication",
        verdict(rep.pass, rep.detail.clone()),
    ));
    results.push(("6 consensus bound", timed(&|| consensus_bound(&rep.runs))));
    results.push(("7 path vs complete", timed(&path_versus_complete)));
    results.push(("8 integrator", timed(&integrator_check)));

    let mut failed = 0;
    for (name, v) in &results {
        println!(
            "criterion {name}: {} ({})",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    println!(
        "acceptance: {} passed, {} failed in {:.1}s",
        results.len() - failed,
        failed,
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
