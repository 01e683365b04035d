//! `evacrec`: validate scenarios, precompute travel times, solve, check the
//! solver against exhaustive enumeration, and run the HTTP service.
//!
//! Exit codes: 0 ok, 1 i/o or parse failure, 2 validation failure or stale
//! matrix, 3 demand left uncovered, 4 oracle mismatch, 5 instance too large
//! for the oracle.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use evacrec_core::generator;
use evacrec_core::recommender::{
    enumerate_with, instance_from_snapshot, solve_with, ConstraintSet, ProblemInstance, RankKey,
    RecommendError, SolverConfig, TimeObjective,
};
use evacrec_core::scenario::{read_travel_times, write_travel_times, InstanceError, Scenario, ScenarioError};
use evacrec_service::ServeArgs;

const OK: u8 = 0;
const IO: u8 = 1;
const INVALID: u8 = 2;
const PARTIAL: u8 = 3;
const MISMATCH: u8 = 4;
const TOO_LARGE: u8 = 5;

#[derive(Parser, Debug)]
#[command(name = "evacrec", version, about = "Evacuation resource recommender")]
struct Cli {
    /// Seed for generated instances.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Log progress to standard error.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a scenario file; one line per violation.
    Validate { scenario: PathBuf },
    /// Recommend a plan for a scenario.
    Solve {
        scenario: PathBuf,
        /// Write the plan as JSON here.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Minimize the longest trip instead of the summed trip times.
        #[arg(long)]
        makespan: bool,
        /// Reuse travel times written by `matrix`.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        exact_bound: Option<usize>,
    },
    /// Compare the solver with exhaustive enumeration.
    Oracle {
        #[arg(required_unless_present = "random", conflicts_with = "random")]
        scenario: Option<PathBuf>,
        /// Check this many generated instances, seeded from `--seed` upwards.
        #[arg(long)]
        random: Option<u64>,
    },
    /// Precompute the travel-time matrices of a scenario.
    Matrix {
        scenario: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run the HTTP service.
    Serve(ServeArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "warn" };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(level)),
        )
        .with_writer(std::io::stderr)
        .init();

    let code = match cli.command {
        Command::Validate { scenario } => validate(&scenario),
        Command::Solve {
            scenario,
            output,
            makespan,
            matrix,
            exact_bound,
        } => solve(&scenario, output.as_deref(), makespan, matrix.as_deref(), exact_bound),
        Command::Oracle { scenario: Some(path), .. } => oracle_file(&path),
        Command::Oracle { random, .. } => oracle_random(random.unwrap_or(0), cli.seed),
        Command::Matrix { scenario, output } => matrix(&scenario, &output),
        Command::Serve(args) => serve(args),
    };
    ExitCode::from(code)
}

/// Exit code and message for a scenario that failed to load.
fn load_failure(e: &ScenarioError) -> u8 {
    match e {
        ScenarioError::Invalid(violations) => {
            for v in violations {
                println!("{v}");
            }
            INVALID
        }
        other => {
            eprintln!("error: {other}");
            IO
        }
    }
}

fn validate(path: &Path) -> u8 {
    match Scenario::load(path) {
        Ok(s) => {
            let k = s.snapshot();
            println!(
                "valid: {} mobile resources, {} rescue points, {} shelters, {} road nodes",
                k.mobile_resources.len(),
                k.rescue_points.len(),
                k.shelters.len(),
                s.graph.node_count()
            );
            OK
        }
        Err(e) => load_failure(&e),
    }
}

fn solve(
    path: &Path,
    output: Option<&Path>,
    makespan: bool,
    matrix: Option<&Path>,
    exact_bound: Option<usize>,
) -> u8 {
    let scenario = match Scenario::load(path) {
        Ok(s) => s,
        Err(e) => {
            // Solving an invalid scenario is an input failure, not a report.
            load_failure(&e);
            return IO;
        }
    };
    let times = match matrix.map(read_travel_times).transpose() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return IO;
        }
    };
    let instance = match scenario.instance(times.as_ref()) {
        Ok(i) => i,
        Err(e @ InstanceError::StaleMatrix { .. }) => {
            eprintln!("error: {e}");
            return INVALID;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return IO;
        }
    };
    let mut config = scenario.settings().config();
    if makespan {
        config.time_objective = TimeObjective::Makespan;
    }
    if let Some(b) = exact_bound {
        config.exact_bound = b;
    }
    let started = std::time::Instant::now();
    let plan = match solve_with(&instance, &config) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return IO;
        }
    };
    tracing::debug!(elapsed = ?started.elapsed(), "solved");
    if let Some(out) = output {
        if let Err(e) = std::fs::write(out, plan.to_json()) {
            eprintln!("error: {}: {e}", out.display());
            return IO;
        }
    }
    print!("{}", report::plan(&plan));
    if plan.has_uncovered_demand() {
        PARTIAL
    } else {
        OK
    }
}

/// Solver key, oracle optimum and enumeration counts for one instance.
struct Comparison {
    solver: RankKey,
    oracle: RankKey,
    candidates: u64,
    feasible: u64,
}

fn compare(instance: &ProblemInstance, config: &SolverConfig) -> Result<Comparison, RecommendError> {
    let mode = config.time_objective;
    let mut best: Option<RankKey> = None;
    let mut feasible = 0;
    let candidates = enumerate_with(instance, |p| {
        feasible += 1;
        let k = p.objective.key(mode, p.makespan());
        if best.map_or(true, |b| k < b) {
            best = Some(k);
        }
    })?;
    let plan = solve_with(instance, config)?;
    Ok(Comparison {
        solver: plan.rank_key(),
        oracle: best.expect("the empty plan is always feasible"),
        candidates,
        feasible,
    })
}

fn oracle_file(path: &Path) -> u8 {
    let scenario = match Scenario::load(path) {
        Ok(s) => s,
        Err(e) => return load_failure(&e),
    };
    let instance = match scenario.instance(None) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return IO;
        }
    };
    let config = scenario.settings().config();
    let mode = config.time_objective;
    match compare(&instance, &config) {
        Ok(c) => {
            println!("solver: {}", report::key(c.solver, mode));
            println!(
                "oracle: {} ({} candidates, {} feasible)",
                report::key(c.oracle, mode),
                c.candidates,
                c.feasible
            );
            if c.solver == c.oracle {
                println!("match");
                OK
            } else {
                println!("MISMATCH");
                MISMATCH
            }
        }
        Err(e @ RecommendError::InstanceTooLarge { .. }) => {
            eprintln!("error: {e}");
            TOO_LARGE
        }
        Err(e) => {
            eprintln!("error: {e}");
            IO
        }
    }
}

/// Instance `i` of a batch uses generator seed `seed + i`.
fn oracle_random(count: u64, seed: u64) -> u8 {
    let config = SolverConfig::default();
    let mut matches = 0;
    for i in 0..count {
        let s = seed.wrapping_add(i);
        let g = generator::random_scenario(&mut generator::rng(s));
        let result = instance_from_snapshot(&g.snapshot, &g.graph, ConstraintSet::default())
            .and_then(|inst| compare(&inst, &config));
        match result {
            Ok(c) if c.solver == c.oracle => {
                matches += 1;
                tracing::debug!(seed = s, key = ?c.solver, "match");
            }
            Ok(c) => println!(
                "seed {s}: solver {} / oracle {}",
                report::key(c.solver, config.time_objective),
                report::key(c.oracle, config.time_objective)
            ),
            Err(e) => {
                eprintln!("seed {s}: error: {e}");
                return IO;
            }
        }
    }
    println!("{matches}/{count} matches");
    if matches == count {
        OK
    } else {
        MISMATCH
    }
}

fn matrix(path: &Path, output: &Path) -> u8 {
    let scenario = match Scenario::load(path) {
        Ok(s) => s,
        Err(e) => {
            load_failure(&e);
            return IO;
        }
    };
    let times = match scenario.travel_times() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return IO;
        }
    };
    if let Err(e) = write_travel_times(output, &times) {
        eprintln!("error: {e}");
        return IO;
    }
    println!(
        "wrote {}: {}x{} to rescue points, {}x{} to shelters",
        output.display(),
        times.to_rescue_points.origins.len(),
        times.to_rescue_points.destinations.len(),
        times.to_shelters.origins.len(),
        times.to_shelters.destinations.len()
    );
    OK
}

fn serve(args: ServeArgs) -> u8 {
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return IO;
        }
    };
    match runtime.block_on(evacrec_service::run(args)) {
        Ok(()) => OK,
        Err(evacrec_service::StartError::Scenario(e)) => load_failure(&e),
        Err(e) => {
            eprintln!("error: {e}");
            IO
        }
    }
}
