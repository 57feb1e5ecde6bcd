use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use multigoal::bench::{benchmark, BenchConfig};
use multigoal::envgen::{generate_synthetic_env, EnvSpec};
use multigoal::gridmap::{load_map, save_map};
use multigoal::mission::{run_mission, verify_plan, Method, Mission, MissionConfig, Plan};
use multigoal::render::render_svg;
use multigoal::sequencing::TspMode;
use multigoal::validity::{CheckerConfig, RobotFootprint, StateChecker};
use multigoal::{CostExponent, CostWeights, Error, ErrorKind};

#[derive(Parser)]
#[command(name = "multigoal", version, about = "Safe multi-goal inspection planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a closed inspection tour and write it as JSON.
    Plan(PlanArgs),
    /// Repeat missions per method and checker setting and report statistics.
    Bench(BenchArgs),
    /// Generate a synthetic map from an environment spec.
    GenEnv(GenEnvArgs),
    /// Draw a map, with an optional mission and plan, as SVG.
    Render(RenderArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Idp,
    Dp,
    Irba,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Idp => Method::Idp,
            MethodArg::Dp => Method::Dp,
            MethodArg::Irba => Method::Irba,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TspArg {
    Exact,
    Heuristic,
    Auto,
}

#[derive(Args)]
struct PlannerArgs {
    #[arg(long, default_value_t = 0.3)]
    t_low: f64,
    #[arg(long, default_value_t = 0.8)]
    t_high: f64,
    /// Translational cost weight.
    #[arg(long, default_value_t = 1.0)]
    wt: f64,
    /// Rotational cost weight.
    #[arg(long, default_value_t = 1.0)]
    wr: f64,
    /// Norm exponent of the translational term.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    cost_exponent: u8,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3000)]
    max_vertices: usize,
    #[arg(long, value_enum, default_value = "auto")]
    tsp: TspArg,
    /// Robot footprint as LENGTHxWIDTH in meters.
    #[arg(long, default_value = "0.8x0.6")]
    footprint: String,
}

impl PlannerArgs {
    fn mission_config(&self) -> Result<MissionConfig, Error> {
        let mut cfg = MissionConfig::default().with_seed(self.seed);
        cfg.weights = CostWeights::new(self.wt, self.wr)?.with_exponent(CostExponent::from_int(self.cost_exponent)?);
        cfg.checker = CheckerConfig::default().with_thresholds(self.t_low, self.t_high)?;
        cfg.footprint = RobotFootprint::parse(&self.footprint)?;
        cfg.query.max_vertices = self.max_vertices;
        cfg.query.batch_size = cfg.query.batch_size.min(self.max_vertices.max(1));
        cfg.tsp = match self.tsp {
            TspArg::Exact => TspMode::Exact,
            TspArg::Heuristic => TspMode::Heuristic,
            TspArg::Auto => TspMode::Auto,
        };
        Ok(cfg)
    }
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    mission: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "idp")]
    method: MethodArg,
    #[command(flatten)]
    planner: PlannerArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    mission: PathBuf,
    /// JSON report destination; the table always goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Methods to compare.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "dp,idp")]
    method: Vec<MethodArg>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Extra checker thresholds as LOW:HIGH; repeatable. Defaults to --t-low/--t-high.
    #[arg(long, value_parser = parse_thresholds)]
    checker: Vec<(f64, f64)>,
    #[command(flatten)]
    planner: PlannerArgs,
}

fn parse_thresholds(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected LOW:HIGH, got `{s}`"))?;
    let lo = lo.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let hi = hi.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((lo, hi))
}

#[derive(Args)]
struct GenEnvArgs {
    /// Environment spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long)]
    mission: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn plan(args: &PlanArgs) -> Result<(), Error> {
    let map = load_map(&args.map)?;
    let mission = Mission::load(&args.mission)?;
    let cfg = args.planner.mission_config()?.with_method(args.method.into());
    let plan = run_mission(&map, &mission, &cfg)?;
    let checker = StateChecker::new(&map, cfg.footprint, cfg.checker);
    verify_plan(&plan, &mission, &checker).map_err(|e| Error::Invariant(e.to_string()))?;
    plan.save(&args.out)?;
    println!(
        "{} ToIs, cost {:.3}, {} paths planned, {} waypoints",
        plan.sequence.len(),
        plan.total_cost,
        plan.stats.paths_planned,
        plan.waypoints.len()
    );
    Ok(())
}

fn bench(args: &BenchArgs) -> Result<(), Error> {
    let map = load_map(&args.map)?;
    let mission = Mission::load(&args.mission)?;
    let base = args.planner.mission_config()?;
    let thresholds = if args.checker.is_empty() {
        vec![(args.planner.t_low, args.planner.t_high)]
    } else {
        args.checker.clone()
    };
    let cfg = BenchConfig {
        methods: args.method.iter().map(|&m| m.into()).collect(),
        thresholds,
        trials: args.trials,
        seed: args.planner.seed,
        base,
    };
    let report = benchmark(&map, &mission, &cfg)?;
    if let Some(out) = &args.out {
        std::fs::write(out, report.to_json()?)?;
    }
    print!("{}", report.table());
    Ok(())
}

fn gen_env(args: &GenEnvArgs) -> Result<(), Error> {
    let spec = EnvSpec::load(&args.spec)?;
    let map = generate_synthetic_env(&spec, args.seed)?;
    save_map(&map, &args.out)
}

fn render(args: &RenderArgs) -> Result<(), Error> {
    let map = load_map(&args.map)?;
    let mission = args.mission.as_ref().map(Mission::load).transpose()?;
    let plan = args.plan.as_ref().map(Plan::load).transpose()?;
    let svg = render_svg(&map, mission.as_ref(), plan.as_ref())?;
    std::fs::write(&args.out, svg)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan(a) => plan(a),
        Command::Bench(a) => bench(a),
        Command::GenEnv(a) => gen_env(a),
        Command::Render(a) => render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(match e.kind() {
                ErrorKind::Input => 2,
                ErrorKind::Planning => 3,
                ErrorKind::Invariant => 4,
            })
        }
    }
}
