//! Repeated attacker/defender edge-jamming games on undirected graphs.
//!
//! An attacker jams communication links and a defender restores some of them,
//! both limited by energy that drains with use and slowly recharges. Each
//! round is a two-stage game solved for its subgame-perfect equilibrium; the
//! rounds are chained into a timeline whose time-varying topology drives a
//! continuous-time consensus process.
//!
//! * [`graph`]: graphs, components, edge connectivity, generalized connectivity.
//! * [`table`]: the attack/recovery connectivity table.
//! * [`game`]: single stage games.
//! * [`timeline`]: repeated play and energy ledgers.
//! * [`consensus`]: Laplacian dynamics, consensus time and its bound.
//! * [`harness`]: configs, runs, sweeps and output files.

pub mod consensus;
pub mod error;
pub mod game;
pub mod graph;
pub mod harness;
pub mod table;
pub mod timeline;

pub use consensus::{ConsensusConfig, ConsensusTrajectory};
pub use error::{Error, Result};
pub use game::{
    defender_best_response, max_duration, n2_region, solve_stage, utility_attacker,
    utility_defender, Label, PlayerParams, StageInput, StageOutcome, Strategy,
};
pub use graph::{connected_components, edge_connectivity, generalized_lambda, Edge, Graph};
pub use table::{build_table, min_edges_to_reconnect, ConnectivityTable};
pub use timeline::{energy_remaining, play, EnergyLedger, Timeline};
