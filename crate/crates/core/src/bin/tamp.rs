use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tamp_core::bench;
use tamp_core::exec::Outcome;
use tamp_core::ff::{Planner, PlannerConfig};
use tamp_core::pipeline::{self, RunError};
use tamp_core::render;
use tamp_core::scenario::Scenario;
use tamp_core::world::{Config, TimedConfig, WorldState};

/// Effort-minimizing task and motion planning for a planar mobile manipulator.
#[derive(Parser)]
#[command(name = "tamp", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Sweep every motion edge on insertion instead of lazily.
    #[arg(long)]
    eager: bool,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Plan and print the incumbent effort.
    Plan {
        #[command(flatten)]
        common: Common,
        /// Symbolic plan only, no motion.
        #[arg(long)]
        task_only: bool,
    },
    /// Plan, then execute against the scenario timeline.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Plan each scenario at several seeds and write CSV.
    Bench {
        /// Scenario files; repeat the flag for several.
        #[arg(long = "scenario")]
        scenarios: Vec<PathBuf>,
        /// First seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Seeds per scenario.
        #[arg(long, default_value_t = 1)]
        reps: u64,
        #[arg(long)]
        eager: bool,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Draw a world, or a scenario with its planned path, as SVG.
    Render {
        #[command(flatten)]
        common: Common,
        /// World file to draw instead of a scenario.
        #[arg(long, conflicts_with = "scenario")]
        world: Option<PathBuf>,
        /// Incumbent dump whose waypoints are overlaid on `--world`.
        #[arg(long, requires = "world")]
        incumbent: Option<PathBuf>,
    },
}

const INPUT_ERROR: u8 = 1;
const PLAN_FAILURE: u8 = 2;

struct Fail(u8, String);

impl From<std::io::Error> for Fail {
    fn from(e: std::io::Error) -> Self {
        Fail(INPUT_ERROR, e.to_string())
    }
}

fn input(msg: impl ToString) -> Fail {
    Fail(INPUT_ERROR, msg.to_string())
}

fn load(common: &Common) -> Result<Scenario, Fail> {
    let path = common.scenario.as_ref().ok_or_else(|| input("--scenario is required"))?;
    let mut sc = Scenario::load(path).map_err(input)?;
    if let Some(seed) = common.seed {
        sc.set_seed(seed);
    }
    sc.engine.eager |= common.eager;
    Ok(sc)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf, Fail> {
    std::fs::create_dir_all(dir)?;
    let p = dir.join(name);
    std::fs::write(&p, text)?;
    Ok(p)
}

fn run_error(e: RunError) -> Fail {
    match e {
        RunError::Input(e) => input(e),
        RunError::Plan(f) => Fail(PLAN_FAILURE, format!("failure: {f:?}")),
    }
}

fn cmd_plan(common: &Common, task_only: bool) -> Result<(), Fail> {
    let sc = load(common)?;
    if task_only {
        let mut planner = Planner::new(&sc.task, sc.task.goal.clone(), PlannerConfig::default());
        let plan = planner
            .tp(&sc.task.init)
            .map_err(|_| Fail(PLAN_FAILURE, "failure: UnsolvableTask".into()))?;
        for a in plan.action_names(&sc.task) {
            println!("{a}");
        }
        return Ok(());
    }
    let planned = pipeline::plan(&sc);
    let planned = match planned {
        Ok(p) => p,
        Err(e) => return Err(run_error(e)),
    };
    write(&common.out, "incumbent.jsonl", &planned.incumbent.to_jsonl(&sc.task))?;
    write(&common.out, "engine.jsonl", &planned.engine.trace_jsonl())?;
    write(&common.out, "graph.jsonl", &planned.engine.graph.to_jsonl(&sc.task))?;
    println!("c* = {:.3}", planned.incumbent.c_star);
    Ok(())
}

fn cmd_run(common: &Common) -> Result<(), Fail> {
    let sc = load(common)?;
    let (planned, trace) = pipeline::run(&sc).map_err(run_error)?;
    write(&common.out, "incumbent.jsonl", &planned.incumbent.to_jsonl(&sc.task))?;
    write(&common.out, "engine.jsonl", &planned.engine.trace_jsonl())?;
    write(&common.out, "trace.jsonl", &trace.to_jsonl())?;
    println!("c* = {:.3}", planned.incumbent.c_star);
    println!("effort = {:.3}", trace.effort_s);
    println!("replans = {}", trace.replans);
    match trace.outcome {
        Outcome::Success => {
            println!("outcome = success");
            Ok(())
        }
        Outcome::Failure(f) => Err(Fail(PLAN_FAILURE, format!("failure: {f:?}"))),
    }
}

fn cmd_bench(scenarios: &[PathBuf], seed: u64, reps: u64, eager: bool, jobs: usize, out: &Path) -> Result<(), Fail> {
    let loaded = scenarios
        .iter()
        .map(|p| Scenario::load(p).map_err(input))
        .collect::<Result<Vec<_>, _>>()?;
    let seeds: Vec<u64> = (seed..seed + reps).collect();
    let rows = bench::bench(&loaded, &seeds, eager, jobs);
    let csv = bench::to_csv(&rows);
    write(out, "bench.csv", &csv)?;
    print!("{csv}");
    Ok(())
}

/// Waypoints per step from an incumbent dump.
fn read_incumbent(path: &Path) -> Result<Vec<Vec<Config>>, Fail> {
    let text = std::fs::read_to_string(path)?;
    let mut paths = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let v: serde_json::Value =
            serde_json::from_str(line).map_err(|e| input(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if let Some(w) = v.get("waypoints") {
            let wps: Vec<TimedConfig> = serde_json::from_value(w.clone())
                .map_err(|e| input(format!("{}:{}: {e}", path.display(), i + 1)))?;
            paths.push(wps.into_iter().map(|w| w.c).collect());
        }
    }
    Ok(paths)
}

fn cmd_render(common: &Common, world: Option<&Path>, incumbent: Option<&Path>) -> Result<(), Fail> {
    let (name, svg) = match world {
        Some(w) => {
            let ws = WorldState::load(w).map_err(input)?;
            let paths = match incumbent {
                Some(p) => read_incumbent(p)?,
                None => Vec::new(),
            };
            let stem = w.file_stem().map_or("world".into(), |s| s.to_string_lossy().into_owned());
            (stem, render::svg(&ws, &paths))
        }
        None => {
            let sc = load(common)?;
            let planned = pipeline::plan(&sc).map_err(run_error)?;
            let paths: Vec<Vec<Config>> = planned.incumbent.steps.iter().map(|s| s.path.configs()).collect();
            (sc.name.clone(), render::svg(&sc.world, &paths))
        }
    };
    let p = write(&common.out, &format!("{name}.svg"), &svg)?;
    println!("{}", p.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { INPUT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let r = match &cli.cmd {
        Cmd::Plan { common, task_only } => cmd_plan(common, *task_only),
        Cmd::Run { common } => cmd_run(common),
        Cmd::Bench {
            scenarios,
            seed,
            reps,
            eager,
            jobs,
            out,
        } => cmd_bench(scenarios, *seed, *reps, *eager, *jobs, out),
        Cmd::Render {
            common,
            world,
            incumbent,
        } => cmd_render(common, world.as_deref(), incumbent.as_deref()),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail(code, msg)) => {
            eprintln!("{msg}");
            ExitCode::from(code)
        }
    }
}
