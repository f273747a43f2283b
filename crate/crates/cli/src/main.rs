use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use netjam_core::harness::{
    load_graph, run, solve_first_game, sweep, sweep_csv, write_run, RunConfig, SweepSpec,
};
use netjam_core::{build_table, Error};

/// Attacker/defender jamming games on graphs and their effect on consensus.
#[derive(Debug, Parser)]
#[command(name = "netjam", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the attack/recovery connectivity table of a graph as CSV.
    Table {
        #[arg(long)]
        graph: PathBuf,
        /// Write table.csv here instead of standard output.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Solve the first stage game of a run config and print it as JSON.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Replace the config's graph.
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Play the repeated game, integrate consensus and write the run files.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Solve one stage game per point of a 2-D parameter grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Grid steps along both axes, overriding the sweep file.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

/// Anything that goes wrong while reading inputs is the caller's to fix.
fn input<T>(r: netjam_core::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::Validation(e.to_string()))
}

fn emit(out_dir: Option<&Path>, file: &str, contents: &str) -> Result<(), Failure> {
    match out_dir {
        Some(dir) => {
            let path = dir.join(file);
            fs::create_dir_all(dir)
                .and_then(|_| fs::write(&path, contents))
                .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
        }
        None => std::io::stdout()
            .write_all(contents.as_bytes())
            .map_err(|e| Failure::Runtime(format!("stdout: {e}"))),
    }
}

fn load_run(
    config: &Path,
    graph: Option<&Path>,
) -> Result<netjam_core::harness::ResolvedRun, Failure> {
    let text = fs::read_to_string(config)
        .map_err(|e| Failure::Validation(format!("{}: {e}", config.display())))?;
    let mut cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| Failure::Validation(format!("{}: {e}", config.display())))?;
    if let Some(g) = graph {
        cfg.graph = netjam_core::harness::GraphSource::Inline(input(load_graph(g))?);
    }
    input(cfg.resolve(config.parent().unwrap_or(Path::new("."))))
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Table { graph, out_dir } => {
            let g = input(load_graph(&graph))?;
            if !g.is_connected() {
                return Err(Error::DisconnectedInput.into());
            }
            let table = build_table(&g)?;
            emit(out_dir.as_deref(), "table.csv", &table.to_csv())
        }
        Command::Solve {
            config,
            graph,
            out_dir,
        } => {
            let cfg = load_run(&config, graph.as_deref())?;
            let outcome = solve_first_game(&cfg)?;
            let mut json = serde_json::to_string_pretty(&outcome)
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            json.push('\n');
            emit(out_dir.as_deref(), "solve.json", &json)
        }
        Command::Run {
            config,
            graph,
            out_dir,
        } => {
            let cfg = load_run(&config, graph.as_deref())?;
            let report = run(&cfg)?;
            write_run(&report, cfg.consensus.sample_step, &out_dir)
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            let s = &report.summary;
            eprintln!(
                "{} games, T* = {}, bound = {:.4} ({})",
                s.games.len(),
                s.t_star
                    .map_or("not reached".to_string(), |t| format!("{t:.4}")),
                s.bound,
                if s.bound_satisfied {
                    "satisfied"
                } else {
                    "not satisfied"
                }
            );
            Ok(())
        }
        Command::Sweep {
            config,
            graph,
            steps,
            out_dir,
        } => {
            let (mut spec, mut g) = input(SweepSpec::load(&config))?;
            if let Some(path) = graph {
                g = input(load_graph(&path))?;
            }
            if let Some(steps) = steps {
                spec = spec.with_steps(steps);
            }
            let points = sweep(&spec, &g)?;
            emit(out_dir.as_deref(), "sweep.csv", &sweep_csv(&spec, &points))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
