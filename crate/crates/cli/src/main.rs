//! `ehflow`: offline and online transmission schedules for energy-harvesting relay chains.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ehflow_core::oracle::{brute_force_single_hop, brute_force_two_hop, slot_from_scenario, uniform_levels};
use ehflow_core::scenario::{builtin, ScenarioFile, BUILTINS};
use ehflow_core::{min_completion_time, run_online, solve_throughput, DeadlineQuery, Error, Variant};

use report::{NodeSummary, OracleSummary, Summary};

#[derive(Parser)]
#[command(name = "ehflow", version, about = "Transmission scheduling for energy-harvesting relay chains")]
struct Cli {
    /// Directory that relative `--out` paths are resolved against.
    #[arg(long, global = true, env = "EHFLOW_OUT_DIR")]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Throughput-optimal offline schedule.
    SolveOffline {
        #[command(flatten)]
        common: Common,
        /// Also minimize the energy spent by every node but the last.
        #[arg(long)]
        min_source_energy: bool,
        /// Replace every curve with a staircase of this many epochs.
        #[arg(long, value_name = "EPOCHS")]
        discretize: Option<usize>,
    },
    /// Causal online schedule.
    SolveOnline {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "proposed", value_parser = ["proposed", "benchmark"])]
        variant: String,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Shortest deadline that delivers a given amount of data.
    MinTime {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        target_bits: f64,
        /// Upper end of the search.
        #[arg(long)]
        t_max: f64,
    },
    /// Offline optimum against both online variants.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Cross-check the solver against exhaustive search on a slotted copy of the scenario.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        slots: usize,
        #[arg(long, default_value_t = 9)]
        levels: usize,
        /// Largest power level; defaults to the largest per-slot harvest rate.
        #[arg(long)]
        p_max: Option<f64>,
    },
    /// Print a built-in scenario as a scenario file.
    Builtin {
        #[arg(value_parser = BUILTINS)]
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file, or `builtin:<name>`.
    scenario: String,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    deadline: Option<f64>,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Validation(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Unreachable { .. }
            | Error::ExceedsAchievable { .. }
            | Error::NonConvex { .. }
            | Error::LookAhead { .. } => Failure::Solver(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Validation(format!("cannot write output: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn load(common: &Common, extend_to: Option<f64>) -> Result<ScenarioFile, Failure> {
    let mut file = match common.scenario.strip_prefix("builtin:") {
        Some(name) => builtin(name).ok_or_else(|| {
            Failure::Validation(format!("unknown built-in `{name}` (known: {})", BUILTINS.join(", ")))
        })?,
        None => ScenarioFile::load(&common.scenario)?,
    };
    let old_horizon = file.horizon();
    if let Some(deadline) = common.deadline {
        file.deadline = deadline;
    }
    if let Some(dt) = common.dt {
        if !(dt > 0.0) {
            return Err(Failure::Validation(format!("--dt must be positive, got {dt}")));
        }
        file.dt = Some(dt);
    }
    let horizon = extend_to.map_or(old_horizon, |t| t.max(old_horizon)).max(file.deadline);
    file.horizon = Some(horizon);
    Ok(file)
}

fn csv_path(out_dir: Option<&Path>, out: Option<&PathBuf>, file: &ScenarioFile, command: &str) -> Option<PathBuf> {
    let path = out
        .cloned()
        .or_else(|| file.output.as_ref().and_then(|o| o.csv.clone()).map(PathBuf::from))
        .or_else(|| out_dir.map(|_| PathBuf::from(format!("{command}.csv"))))?;
    Some(match out_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path,
    })
}

fn run(cli: Cli) -> Outcome {
    let out_dir = cli.out_dir.as_deref();
    match cli.command {
        Command::SolveOffline {
            common,
            min_source_energy,
            discretize,
        } => {
            let file = load(&common, None)?;
            let mut sc = file.build()?;
            if let Some(epochs) = discretize {
                sc = sc.discretized(epochs)?;
            }
            let sol = solve_throughput(&sc, min_source_energy)?;
            let t1: Vec<Option<f64>> = sol.tangents.iter().map(|t| t.map(|t| t.touch)).collect();
            let csv = csv_path(out_dir, common.out.as_ref(), &file, "solve-offline");
            if let Some(path) = &csv {
                report::write_schedules(path, &sc, &sol.schedules)?;
            }
            print(Summary {
                command: "solve-offline".into(),
                scenario: common.scenario,
                deadline: sc.deadline,
                cells: sc.cells,
                delivered: Some(sol.delivered),
                epochs: discretize,
                csv: csv.map(|p| p.display().to_string()),
                nodes: NodeSummary::from_schedules(&sc, &sol.schedules, &t1),
                ..Default::default()
            });
        }
        Command::SolveOnline {
            common,
            variant,
            epsilon,
        } => {
            let file = load(&common, None)?;
            let sc = file.build()?;
            let variant: Variant = variant.parse()?;
            let eps = epsilon.unwrap_or_else(|| file.epsilon());
            let run = run_online(&sc, eps, variant)?;
            let csv = csv_path(out_dir, common.out.as_ref(), &file, "solve-online");
            if let Some(path) = &csv {
                report::write_schedules(path, &sc, &run.schedules)?;
            }
            print(Summary {
                command: "solve-online".into(),
                scenario: common.scenario,
                deadline: sc.deadline,
                cells: sc.cells,
                delivered: Some(run.delivered),
                variant: Some(variant.to_string()),
                epsilon: Some(eps),
                csv: csv.map(|p| p.display().to_string()),
                nodes: NodeSummary::from_schedules(&sc, &run.schedules, &[]),
                ..Default::default()
            });
        }
        Command::MinTime {
            common,
            target_bits,
            t_max,
        } => {
            let mut file = load(&common, Some(t_max))?;
            if !(t_max > 0.0) {
                return Err(Failure::Validation(format!("--t-max must be positive, got {t_max}")));
            }
            file.deadline = t_max;
            let sc = file.build()?;
            let out = min_completion_time(&sc, &DeadlineQuery::new(target_bits, t_max))?;
            let solved = sc.with_deadline(out.t_off)?;
            let t1: Vec<Option<f64>> = out.solution.tangents.iter().map(|t| t.map(|t| t.touch)).collect();
            let csv = csv_path(out_dir, common.out.as_ref(), &file, "min-time");
            if let Some(path) = &csv {
                report::write_schedules(path, &solved, &out.solution.schedules)?;
            }
            print(Summary {
                command: "min-time".into(),
                scenario: common.scenario,
                deadline: t_max,
                cells: sc.cells,
                delivered: Some(out.solution.delivered),
                t_off: Some(out.t_off),
                target_bits: Some(target_bits),
                csv: csv.map(|p| p.display().to_string()),
                nodes: NodeSummary::from_schedules(&solved, &out.solution.schedules, &t1),
                ..Default::default()
            });
        }
        Command::Compare { common, epsilon } => {
            let file = load(&common, None)?;
            let sc = file.build()?;
            let eps = epsilon.unwrap_or_else(|| file.epsilon());
            let offline = solve_throughput(&sc, false)?;
            let proposed = run_online(&sc, eps, Variant::Proposed)?;
            let benchmark = run_online(&sc, eps, Variant::Benchmark)?;
            let csv = csv_path(out_dir, common.out.as_ref(), &file, "compare");
            if let Some(path) = &csv {
                let last = |s: &[ehflow_core::Schedule]| s.last().unwrap().data.clone();
                report::write_comparison(
                    path,
                    &offline.times,
                    [&last(&offline.schedules), &last(&proposed.schedules), &last(&benchmark.schedules)],
                )?;
            }
            print(Summary {
                command: "compare".into(),
                scenario: common.scenario,
                deadline: sc.deadline,
                cells: sc.cells,
                epsilon: Some(eps),
                offline: Some(offline.delivered),
                proposed: Some(proposed.delivered),
                benchmark: Some(benchmark.delivered),
                csv: csv.map(|p| p.display().to_string()),
                ..Default::default()
            });
        }
        Command::OracleCheck {
            common,
            slots,
            levels,
            p_max,
        } => {
            let file = load(&common, None)?;
            let sc = file.build()?;
            if sc.hops() > 2 {
                return Err(Failure::Validation(format!(
                    "oracle-check handles one or two hops, the scenario has {}",
                    sc.hops()
                )));
            }
            let probe = slot_from_scenario(&sc, slots, vec![0.0])?;
            let p_max = p_max.unwrap_or_else(|| {
                probe
                    .energy
                    .iter()
                    .flat_map(|e| e.iter().scan(0.0, |prev, v| Some((v - std::mem::replace(prev, *v)) / probe.slot_len)))
                    .fold(0.0f64, f64::max)
            });
            let inst = slot_from_scenario(&sc, slots, uniform_levels(p_max, levels))?;
            let rates: Vec<_> = sc.nodes.iter().map(|n| n.rate.clone()).collect();
            let oracle = match rates.as_slice() {
                [r] => brute_force_single_hop(&inst, r)?,
                [a, b] => brute_force_two_hop(&inst, a, b)?,
                _ => unreachable!(),
            };
            let slotted = solve_throughput(&inst.to_scenario(&rates, sc.cells)?, true)?;
            let continuous = solve_throughput(&sc, false)?.delivered;
            let slack = 1e-6 * oracle.delivered.max(1.0);
            let tie = (slotted.delivered - oracle.delivered).abs() <= slack;
            let slotted_energy = slotted.schedules[0].energy_used();
            let certified = slotted.delivered >= oracle.delivered - slack
                && continuous >= oracle.delivered - slack
                && (!tie || oracle.source_energy >= slotted_energy - slack);
            print(Summary {
                command: "oracle-check".into(),
                scenario: common.scenario,
                deadline: sc.deadline,
                cells: sc.cells,
                oracle: Some(OracleSummary {
                    slots,
                    levels: inst.levels.clone(),
                    oracle_delivered: oracle.delivered,
                    oracle_source_energy: oracle.source_energy,
                    slotted_solver_delivered: slotted.delivered,
                    slotted_solver_source_energy: slotted_energy,
                    continuous_delivered: continuous,
                    certified,
                }),
                ..Default::default()
            });
            if !certified {
                return Err(Failure::Solver("the oracle beat the solver".into()));
            }
        }
        Command::Builtin { name, out } => {
            let text = builtin(&name).expect("clap restricts the name").to_toml();
            match out {
                Some(path) => {
                    let path = match out_dir {
                        Some(dir) if path.is_relative() => dir.join(path),
                        _ => path,
                    };
                    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                        std::fs::create_dir_all(dir)?;
                    }
                    std::fs::write(&path, text)?;
                }
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn print(summary: Summary) {
    print!("{}", summary.render());
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver error: {msg}");
            ExitCode::from(3)
        }
    }
}
