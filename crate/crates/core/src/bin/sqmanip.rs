use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use sqmanip::format::num;
use sqmanip::harness::{bench, emit, load_scenario, metrics_from_dir, run_pipeline, run_plan, MetricsReport, Mode, Scenario};
use sqmanip::Error;

#[derive(Parser)]
#[command(name = "sqmanip", version, about = "Superquadric whole-body planner and safety controller")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Sq,
    Ellipse,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Sq => Mode::Sq,
            ModeArg::Ellipse => Mode::Ellipse,
        }
    }
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum, default_value = "sq")]
    mode: ModeArg,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Wind noise seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Control period [s].
    #[arg(long)]
    dt: Option<f64>,
    /// Planner integration steps.
    #[arg(long)]
    ns: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a trajectory and write trajectory, Voronoi and metrics files.
    Plan(RunArgs),
    /// Plan, then fly the plan in closed loop, and write every output file.
    Simulate(RunArgs),
    /// Run scenarios in both modes in parallel and print a metrics table.
    Bench {
        #[arg(long, required = true, num_args = 1..)]
        scenario: Vec<PathBuf>,
        /// Optional directory for a `bench.csv` summary.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip the closed-loop simulation.
        #[arg(long)]
        plan_only: bool,
    },
    /// Recompute metrics from the CSV files of a previous run.
    Metrics {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn load(args: &RunArgs) -> Result<Scenario, Error> {
    let mut s = load_scenario(&args.scenario)?;
    if let Some(seed) = args.seed {
        s.sim.seed = seed;
    }
    if let Some(dt) = args.dt {
        if !(dt > 0.0 && dt <= 0.01) {
            return Err(Error::validation("--dt", "must lie in (0, 0.01]"));
        }
        s.sim.dt = dt;
    }
    if let Some(ns) = args.ns {
        if ns == 0 {
            return Err(Error::validation("--ns", "must be at least 1"));
        }
        s.planner.n_s = ns;
    }
    Ok(s)
}

fn print_report(name: &str, mode: Mode, r: &MetricsReport) {
    println!(
        "{name} [{mode}] plan_time={:.4}s min_distance={:.4} arc_length={:.4} jerkiness={:.4e} h_co_min={:.4} thrust=[{:.3}, {:.3}] infeasible={}/{}",
        r.plan_time, r.min_distance, r.arc_length, r.jerkiness, r.h_co_min, r.thrust_min, r.thrust_max, r.infeasible_ticks, r.ticks
    );
}

fn write_bench(dir: &Path, rows: &[(String, Mode, MetricsReport)]) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.display().to_string(), source })?;
    let mut s = String::from("scenario,mode,plan_time,min_distance,arc_length,jerkiness,h_co_min,thrust_min,thrust_max,infeasible_ticks,ticks\n");
    for (name, mode, r) in rows {
        s.push_str(&format!(
            "{name},{mode},{},{},{},{},{},{},{},{},{}\n",
            num(r.plan_time),
            num(r.min_distance),
            num(r.arc_length),
            num(r.jerkiness),
            num(r.h_co_min),
            num(r.thrust_min),
            num(r.thrust_max),
            r.infeasible_ticks,
            r.ticks
        ));
    }
    let path = dir.join("bench.csv");
    std::fs::write(&path, s).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Plan(args) => {
            let s = load(&args)?;
            let (plan, report) = run_plan(&s, args.mode.into())?;
            emit(&args.out, &plan.rows, None, &plan.voronoi, &report)?;
            print_report(&s.name, plan.mode, &report);
        }
        Command::Simulate(args) => {
            let s = load(&args)?;
            let r = run_pipeline(&s, args.mode.into())?;
            emit(&args.out, &r.plan.rows, Some((&r.sim.telemetry, &r.sim.events)), &r.plan.voronoi, &r.report)?;
            print_report(&s.name, r.plan.mode, &r.report);
        }
        Command::Bench { scenario, out, plan_only } => {
            let scenarios = scenario.iter().map(|p| load_scenario(p)).collect::<Result<Vec<_>, _>>()?;
            let mut ok = Vec::new();
            let mut first_err = None;
            for e in bench(&scenarios, &[Mode::Sq, Mode::Ellipse], !plan_only) {
                match e.result {
                    Ok(r) => {
                        print_report(&e.name, e.mode, &r);
                        ok.push((e.name, e.mode, r));
                    }
                    Err(err) => {
                        eprintln!("{} [{}] failed: {err}", e.name, e.mode);
                        first_err.get_or_insert(err);
                    }
                }
            }
            if let Some(dir) = out {
                write_bench(&dir, &ok)?;
            }
            if let Some(err) = first_err {
                return Err(err);
            }
        }
        Command::Metrics { out } => {
            let r = metrics_from_dir(&out)?;
            print!("{}", r.to_toml());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e.root() {
                Error::Validation { .. } | Error::Overlap { .. } => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}
