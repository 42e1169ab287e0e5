//! `evmaas`: generate, solve, sweep, validate and report on electric MaaS
//! fleet scenarios with charging, V2G and battery degradation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use evmaas_core::analysis;
use evmaas_core::dag::build_graph;
use evmaas_core::milp::build_model;
use evmaas_core::oracle::{enumerate_optimum, TinyLimits};
use evmaas_core::plan::{
    extract_plan, objective_parts, read_plan_csv, validate_plan, write_plan_csv,
};
use evmaas_core::scenario::{load_dir, save_dir, DemandProfile, GeneratorConfig, PricePattern};
use evmaas_core::solver::{solve, Backend, SolveSettings, SolveStatus};
use evmaas_core::{DegradationParams64, Error, FleetPlan64, Scenario64};

const SOLVER_CMD_ENV: &str = "EVMAAS_SOLVER_CMD";

const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Parser)]
#[command(
    name = "evmaas",
    about = "Electric MaaS fleet operations: dial-a-ride + V2G + battery degradation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario directory
    Generate(GenerateArgs),
    /// Solve a scenario and write plan.csv + breakdown.csv
    Solve(SolveArgs),
    /// Solve once per battery price and write sweep.csv
    Sweep(SweepArgs),
    /// Re-check a plan against the constraint system
    Validate(ValidateArgs),
    /// Write grid profile and degradation curve for a plan
    Report(ReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    requests: usize,
    #[arg(long)]
    vehicles: usize,
    #[arg(long)]
    stations: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = ProfileArg::Bimodal)]
    profile: ProfileArg,
    #[arg(long, value_enum, default_value_t = PricesArg::DayNight)]
    prices: PricesArg,
    #[arg(long, default_value_t = 1440)]
    horizon: i64,
    #[arg(long, default_value_t = 10.0)]
    square_km: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Uniform,
    Bimodal,
}

#[derive(Clone, Copy, ValueEnum)]
enum PricesArg {
    Flat,
    DayNight,
}

#[derive(Args)]
struct SolverArgs {
    /// Command template with {mps} {sol} {gap} {timelimit} placeholders;
    /// falls back to EVMAAS_SOLVER_CMD, then to the built-in tiny backend
    #[arg(long)]
    solver_cmd: Option<String>,
    /// Relative MIP gap
    #[arg(long, default_value_t = 1e-4)]
    gap: f64,
    /// Solver time limit in seconds
    #[arg(long, default_value_t = 600.0)]
    timelimit: f64,
}

impl SolverArgs {
    fn settings(&self) -> SolveSettings {
        let command = self
            .solver_cmd
            .clone()
            .or_else(|| std::env::var(SOLVER_CMD_ENV).ok());
        let mut settings = match command {
            Some(cmd) => SolveSettings::external(cmd),
            None => SolveSettings {
                backend: Backend::BuiltinTiny,
                ..SolveSettings::default()
            },
        };
        settings.mip_gap = self.gap;
        settings.time_limit_s = self.timelimit;
        settings
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Battery prices in EUR per kWh of capacity, comma-separated
    #[arg(long, value_delimiter = ',')]
    pbatt: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    scenario: PathBuf,
    /// Also compare against the exhaustive optimum (tiny scenarios only)
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 15)]
    bin_minutes: i64,
    /// Also dump the transition graph as CSV
    #[arg(long)]
    graph_csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Solver(_) => EXIT_SOLVER,
                Error::TooLarge(_) => EXIT_SOLVER,
                _ => EXIT_INFEASIBLE,
            };
            ExitCode::from(code)
        }
    }
}

fn run(command: Command) -> Result<u8, Error> {
    match command {
        Command::Generate(args) => generate(args),
        Command::Solve(args) => run_solve(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Validate(args) => run_validate(args),
        Command::Report(args) => run_report(args),
    }
}

fn generate(args: GenerateArgs) -> Result<u8, Error> {
    let mut cfg = GeneratorConfig::new(args.seed, args.requests, args.vehicles, args.stations)
        .profile(match args.profile {
            ProfileArg::Uniform => DemandProfile::Uniform,
            ProfileArg::Bimodal => DemandProfile::BimodalPeaks,
        })
        .prices(match args.prices {
            PricesArg::Flat => PricePattern::Flat,
            PricesArg::DayNight => PricePattern::DayNight,
        });
    cfg.horizon_min = args.horizon;
    cfg.square_km = args.square_km;
    let scenario: Scenario64 = cfg.build();
    let degradation = DegradationParams64::default();
    save_dir(&scenario, &degradation, &args.out)?;
    println!(
        "wrote scenario with {} requests, {} vehicles, {} stations to {}",
        scenario.requests.len(),
        scenario.fleet.n_vehicles,
        scenario.stations.len(),
        args.out.display()
    );
    Ok(0)
}

fn run_solve(args: SolveArgs) -> Result<u8, Error> {
    let (scenario, degradation) = load_dir::<f64>(&args.scenario)?;
    let graph = build_graph(&scenario);
    let model = build_model(&scenario, &graph, &degradation)?;
    let settings = args.solver.settings();
    let result = solve(&model, &settings)?;
    match result.status {
        SolveStatus::Optimal | SolveStatus::GapFeasible => {}
        SolveStatus::Infeasible => {
            eprintln!("model reported infeasible");
            return Ok(EXIT_INFEASIBLE);
        }
        SolveStatus::TimeoutNoSolution => {
            eprintln!("no solution within the time limit");
            return Ok(EXIT_INFEASIBLE);
        }
    }
    let plan = extract_plan(&model, &result.values)?;
    let violations = validate_plan(&plan, &scenario, &graph);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("{v}");
        }
        return Ok(EXIT_INFEASIBLE);
    }

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    write_file(&args.out.join("plan.csv"), |w| write_plan_csv(&plan, w))?;
    let breakdown = analysis::profit_breakdown(&plan, &scenario, &degradation)?;
    write_file(&args.out.join("breakdown.csv"), |w| {
        analysis::write_breakdown_csv(&breakdown, w)
    })?;

    let parts = objective_parts(&plan, &scenario, &degradation)?;
    println!(
        "status {:?}, objective {:.4} EUR (travel {:.4}, electricity {:.4}, degradation {:.4}), {} of {} requests served, {:.1}s",
        result.status,
        parts.total(),
        parts.travel,
        parts.electricity,
        parts.degradation,
        plan.served_count(scenario.requests.len()),
        scenario.requests.len(),
        result.wall_time_s
    );
    Ok(0)
}

fn run_sweep(args: SweepArgs) -> Result<u8, Error> {
    if args.pbatt.is_empty() {
        return Err(Error::Invalid("--pbatt needs at least one price".into()));
    }
    let (scenario, degradation) = load_dir::<f64>(&args.scenario)?;
    let settings = args.solver.settings();
    let rows = analysis::pareto_sweep(&scenario, &degradation, &args.pbatt, &settings, args.jobs)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    write_file(&args.out.join("sweep.csv"), |w| {
        analysis::write_sweep_csv(&rows, w)
    })?;
    let failures = rows.iter().filter(|r| r.status.contains("error")).count();
    println!(
        "swept {} battery prices ({} failures) into {}",
        rows.len(),
        failures,
        args.out.join("sweep.csv").display()
    );
    Ok(if failures > 0 { EXIT_SOLVER } else { 0 })
}

fn run_validate(args: ValidateArgs) -> Result<u8, Error> {
    let (scenario, degradation) = load_dir::<f64>(&args.scenario)?;
    let graph = build_graph(&scenario);
    let text = std::fs::read_to_string(&args.plan).map_err(|e| Error::io(&args.plan, e))?;
    let plan: FleetPlan64 = read_plan_csv(&text, &args.plan.display().to_string())?;
    let violations = validate_plan(&plan, &scenario, &graph);
    if !violations.is_empty() {
        for v in &violations {
            println!("{v}");
        }
        println!("{} violation(s)", violations.len());
        return Ok(EXIT_INFEASIBLE);
    }
    println!("plan satisfies all constraints");

    if args.oracle {
        let (best, _) = enumerate_optimum(&scenario, &graph, &degradation, &TinyLimits::default())?;
        let actual = objective_parts(&plan, &scenario, &degradation)?.total();
        let tol = 1e-6 * best.abs().max(1.0);
        if actual > best + tol {
            println!(
                "plan objective {actual:.6} EUR is worse than the exhaustive optimum {best:.6} EUR"
            );
            return Ok(EXIT_INFEASIBLE);
        }
        println!("plan objective {actual:.6} EUR matches the exhaustive optimum {best:.6} EUR");
    }
    Ok(0)
}

fn run_report(args: ReportArgs) -> Result<u8, Error> {
    let (scenario, degradation) = load_dir::<f64>(&args.scenario)?;
    let text = std::fs::read_to_string(&args.plan).map_err(|e| Error::io(&args.plan, e))?;
    let plan: FleetPlan64 = read_plan_csv(&text, &args.plan.display().to_string())?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;

    let bins = analysis::grid_profile(&plan, &scenario, args.bin_minutes)?;
    write_file(&args.out.join("grid_profile.csv"), |w| {
        analysis::write_grid_profile_csv(&bins, w)
    })?;
    let curve_path = args.out.join("degradation_curve.csv");
    let file = std::fs::File::create(&curve_path).map_err(|e| Error::io(&curve_path, e))?;
    analysis::write_degradation_curve_csv(&degradation, 100, std::io::BufWriter::new(file))?;

    if let Some(graph_csv) = &args.graph_csv {
        let graph = build_graph(&scenario);
        write_file(graph_csv, |w| graph.write_debug_csv(w))?;
    }
    println!("wrote grid_profile.csv and degradation_curve.csv to {}", args.out.display());
    Ok(0)
}

fn write_file<F>(path: &Path, write: F) -> Result<(), Error>
where
    F: FnOnce(std::io::BufWriter<std::fs::File>) -> std::io::Result<()>,
{
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write(std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}
