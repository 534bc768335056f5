//! The `hadamard` command-line front end.
//!
//! Exit codes: 0 success, 1 `verify` found a gap above tolerance, 2 input
//! error, 3 a positive `--tol` was not met within the budget (the last iterate
//! is still written).

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::format::{self, PointSet, ResultDocument, ScheduleDoc, SpaceDescriptor};
use crate::oracles::{self, OracleReport};
use crate::prox::{
    self, AnchorConfiguration, ConvexSet, IterationTrace, ObjectiveComponent, RunConfig, StepSchedule, StopReason, DEFAULT_BUDGET,
};
use crate::space::{Backend, GeodesicBall, SpaceHandle, SpacePoint};
use crate::treespace::TaxonSet;

const ALGO_HELP: &str = "cyclic: resolvents in a fixed order, one lambda per cycle (--cycles). \
random: one uniformly drawn resolvent per step (--steps); weights enter the resolvent coefficients. \
lln: inductive mean (--steps, mean only); anchors are drawn with probability proportional to their \
weights, so weights enter the sampling distribution instead of the coefficients.";

#[derive(Parser, Debug)]
#[command(name = "hadamard", version, about = "Means, medians and convex feasibility in Hadamard spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Weighted Fréchet mean of the anchors.
    Mean(SolveArgs),
    /// Weighted geometric median of the anchors.
    Median(SolveArgs),
    /// A point in the intersection of geodesic balls.
    Feasibility(FeasibilityArgs),
    /// Law-of-large-numbers (inductive) mean.
    Lln(LlnArgs),
    /// Lie-Trotter-Kato approximation of the gradient flow of the mean or median objective.
    Flow(FlowArgs),
    /// Check solver results against independent oracles.
    Verify(VerifyArgs),
    /// Point at parameter t on the geodesic between two inputs.
    Geodesic(GeodesicArgs),
}

#[derive(Args, Debug)]
struct DataArgs {
    /// euclidean:D, spider:K, spd:N, bhv or bhv:N (optional when the points document declares it).
    #[arg(long)]
    space: Option<String>,
    /// JSON points document.
    #[arg(long, conflicts_with = "trees")]
    points: Option<PathBuf>,
    /// Newick trees, one per line.
    #[arg(long)]
    trees: Option<PathBuf>,
    /// Comma-separated positive weights, overriding the document's (default uniform).
    #[arg(long)]
    weights: Option<String>,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Result document path (written atomically).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trace CSV path.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Keep every n-th step in the trace.
    #[arg(long, default_value_t = 1)]
    trace_every: u64,
}

#[derive(Args, Debug)]
struct ScheduleArgs {
    /// Number of cycles (cyclic order).
    #[arg(long)]
    cycles: Option<u64>,
    /// Number of single steps (random order, lln).
    #[arg(long)]
    steps: Option<u64>,
    /// C in lambda_k = C/(k+1).
    #[arg(long = "lambda-c", default_value_t = 1.0)]
    lambda_c: f64,
    /// Stop once the movement over a cycle (or the last N steps) is at most this; 0 runs the full budget.
    #[arg(long, default_value_t = 0.0)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Algo {
    Cyclic,
    Random,
    Lln,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value_t = Algo::Cyclic, help = ALGO_HELP)]
    algo: Algo,
    #[command(flatten)]
    schedule: ScheduleArgs,
    /// Start point (JSON encoding, or Newick for trees); default the first anchor.
    #[arg(long)]
    start: Option<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SetObjective {
    /// Projections onto the balls.
    Indicator,
    /// Minimize the sum of distances to the balls.
    Distance,
}

#[derive(Args, Debug)]
struct FeasibilityArgs {
    #[arg(long)]
    space: String,
    /// Ball center (JSON encoding, or Newick for trees); repeat once per ball.
    #[arg(long, required = true)]
    center: Vec<String>,
    /// Ball radius; repeat once per ball, in the order of --center.
    #[arg(long, required = true)]
    radius: Vec<f64>,
    /// Start point.
    #[arg(long)]
    start: String,
    #[arg(long, value_enum, default_value_t = Algo::Cyclic, help = "cyclic or random order of the set resolvents")]
    algo: Algo,
    #[arg(long, value_enum, default_value_t = SetObjective::Indicator)]
    objective: SetObjective,
    #[command(flatten)]
    schedule: ScheduleArgs,
    /// A run fails (exit 3) if the final point is farther than this from some ball.
    #[arg(long, default_value_t = 1e-6)]
    feasibility_tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct LlnArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    steps: u64,
    #[arg(long, default_value_t = 0.0)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FlowObjective {
    /// Sum of weighted squared distances.
    Mean,
    /// Sum of weighted distances.
    Median,
}

#[derive(Args, Debug)]
struct FlowArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value_t = FlowObjective::Mean)]
    objective: FlowObjective,
    /// Flow time.
    #[arg(long)]
    t: f64,
    /// Number of resolvent cycles, each with lambda = t/k.
    #[arg(long)]
    k: u64,
    /// Start point; default the first anchor.
    #[arg(long)]
    start: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Cycles of the cyclic solvers being checked.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    cycles: u64,
    /// Report path; the report is printed when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GeodesicArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    t: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Runs one invocation; `argv[0]` is the program name.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Mean(args) => solve(args, true),
        Command::Median(args) => solve(args, false),
        Command::Feasibility(args) => feasibility(args),
        Command::Lln(args) => lln(args),
        Command::Flow(args) => flow(args),
        Command::Verify(args) => verify(args),
        Command::Geodesic(args) => geodesic(args),
    }
}

fn input_error<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}

fn load(data: &DataArgs) -> Result<PointSet> {
    let descriptor = data.space.as_deref().map(str::parse::<SpaceDescriptor>).transpose()?;
    let mut set = match (&data.points, &data.trees) {
        (Some(path), None) => format::read_points_file(path, descriptor)?,
        (None, Some(path)) => {
            let descriptor = descriptor.unwrap_or(SpaceDescriptor::Bhv(None));
            if !matches!(descriptor, SpaceDescriptor::Bhv(_)) {
                return input_error(format!("--trees needs a tree space, got --space {descriptor}"));
            }
            let (trees, taxa) = format::read_trees_file(path)?;
            let space = descriptor.handle(Some(taxa.len()))?;
            PointSet { space, points: trees.into_iter().map(SpacePoint::from).collect(), weights: None, taxa: Some(taxa) }
        }
        _ => return input_error("pass exactly one of --points or --trees"),
    };
    if let Some(text) = &data.weights {
        let ws = text
            .split(',')
            .map(|w| w.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad weight `{w}`"))))
            .collect::<Result<Vec<_>>>()?;
        set.weights = Some(ws);
    }
    Ok(set)
}

fn configuration(set: &PointSet) -> Result<AnchorConfiguration> {
    match &set.weights {
        Some(ws) => AnchorConfiguration::new(set.points.clone(), ws.clone()),
        None => AnchorConfiguration::uniform(set.points.clone()),
    }
}

/// Reads a point given on the command line: JSON, or a bare Newick string.
fn parse_cli_point(text: &str, space: &SpaceHandle, taxa: Option<&TaxonSet>) -> Result<SpacePoint> {
    let value = serde_json::from_str::<Value>(text).unwrap_or_else(|_| Value::String(text.to_string()));
    format::parse_point(&value, space, taxa)
}

fn run_config(s: &ScheduleArgs, algo: Algo, output: &OutputArgs) -> Result<RunConfig> {
    let budget = match (algo, s.cycles, s.steps) {
        (Algo::Cyclic, _, Some(_)) => return input_error("--steps applies to random order and lln; use --cycles"),
        (Algo::Random | Algo::Lln, Some(_), _) => return input_error("--cycles applies to cyclic order; use --steps"),
        (Algo::Cyclic, c, None) => c.unwrap_or(DEFAULT_BUDGET),
        (_, None, st) => st.unwrap_or(DEFAULT_BUDGET),
    };
    if s.tol.is_nan() || s.tol < 0.0 {
        return input_error("--tol must be nonnegative");
    }
    Ok(RunConfig {
        budget,
        tolerance: s.tol,
        seed: s.seed,
        schedule: StepSchedule::harmonic(s.lambda_c)?,
        record_every: record_every(output, budget),
    })
}

fn record_every(output: &OutputArgs, budget: u64) -> u64 {
    if output.trace.is_some() {
        output.trace_every.max(1)
    } else {
        budget.max(1)
    }
}

fn emit(doc: &ResultDocument, out: Option<&Path>) -> Result<()> {
    let text = doc.to_json();
    if let Some(path) = out {
        format::write_atomic(path, text.as_bytes())?;
    }
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "point: {}", doc.point)?;
    writeln!(stdout, "objective: {}", doc.objective)?;
    Ok(())
}

/// What a run reports beyond its trace.
struct RunFacts<'a> {
    seed: u64,
    schedule: Option<&'a StepSchedule>,
    tolerance: f64,
}

fn finish(
    space: &SpaceHandle,
    taxa: Option<&TaxonSet>,
    trace: &IterationTrace,
    objective: f64,
    facts: RunFacts,
    output: &OutputArgs,
) -> Result<i32> {
    let doc = ResultDocument {
        space: space.backend().to_string(),
        point: format::point_to_value(trace.final_point(), taxa)?,
        objective,
        iterations: trace.iterations(),
        stop_reason: trace.stop_reason.as_str().into(),
        seed: trace.rng.is_some().then_some(facts.seed),
        schedule: facts.schedule.map(ScheduleDoc::of),
        rng: trace.rng.map(String::from),
    };
    if let Some(path) = &output.trace {
        format::write_atomic(path, format::trace_csv(trace).as_bytes())?;
    }
    emit(&doc, output.out.as_deref())?;
    if facts.tolerance > 0.0 && trace.stop_reason == StopReason::Budget {
        eprintln!("warning: tolerance not reached within the budget; wrote the last iterate");
        return Ok(3);
    }
    Ok(0)
}

fn solve(args: SolveArgs, mean: bool) -> Result<i32> {
    let set = load(&args.data)?;
    let data = configuration(&set)?;
    let config = run_config(&args.schedule, args.algo, &args.output)?;
    let x0 = match &args.start {
        Some(text) => parse_cli_point(text, &set.space, set.taxa.as_ref())?,
        None => data.anchors()[0].clone(),
    };
    let components = if mean { prox::mean_components(&data) } else { prox::median_components(&data) };
    let trace = match args.algo {
        Algo::Cyclic => prox::ppa_cyclic(&set.space, &components, &x0, &config)?,
        Algo::Random => prox::ppa_random(&set.space, &components, &x0, &config)?,
        Algo::Lln if !mean => return input_error("the lln estimator computes means only"),
        Algo::Lln if args.start.is_some() => return input_error("the lln estimator starts at a sampled anchor; drop --start"),
        Algo::Lln => prox::frechet_mean(&set.space, &data, prox::MeanVariant::Lln, &config)?.1,
    };
    let facts = RunFacts { seed: config.seed, schedule: (args.algo != Algo::Lln).then_some(&config.schedule), tolerance: config.tolerance };
    finish(&set.space, set.taxa.as_ref(), &trace, trace.final_objective(), facts, &args.output)
}

fn lln(args: LlnArgs) -> Result<i32> {
    let set = load(&args.data)?;
    let data = configuration(&set)?;
    let config = RunConfig {
        budget: args.steps,
        tolerance: args.tol,
        seed: args.seed,
        schedule: StepSchedule::default(),
        record_every: record_every(&args.output, args.steps),
    };
    let (_, trace) = prox::frechet_mean(&set.space, &data, prox::MeanVariant::Lln, &config)?;
    let facts = RunFacts { seed: args.seed, schedule: None, tolerance: args.tol };
    finish(&set.space, set.taxa.as_ref(), &trace, trace.final_objective(), facts, &args.output)
}

fn feasibility(args: FeasibilityArgs) -> Result<i32> {
    let descriptor: SpaceDescriptor = args.space.parse()?;
    if args.center.len() != args.radius.len() {
        return input_error(format!("{} centers but {} radii", args.center.len(), args.radius.len()));
    }
    if args.algo == Algo::Lln {
        return input_error("feasibility runs in cyclic or random order");
    }
    // tree centers fix the taxa themselves
    let (space, taxa) = match descriptor {
        SpaceDescriptor::Bhv(n) => {
            let (_, taxa) = crate::treespace::parse_newick(&args.center[0], None)?;
            (SpaceDescriptor::Bhv(n).handle(Some(taxa.len()))?, Some(taxa))
        }
        other => (other.handle(None)?, None),
    };
    let sets = args
        .center
        .iter()
        .zip(&args.radius)
        .map(|(c, r)| Ok(ConvexSet::Ball(GeodesicBall::new(parse_cli_point(c, &space, taxa.as_ref())?, *r)?)))
        .collect::<Result<Vec<_>>>()?;
    let components: Vec<ObjectiveComponent> = match args.objective {
        SetObjective::Indicator => sets.iter().cloned().map(ObjectiveComponent::Indicator).collect(),
        SetObjective::Distance => {
            let w = 1.0 / sets.len() as f64;
            sets.iter().cloned().map(|set| ObjectiveComponent::ScaledSetDistance { set, weight: w }).collect()
        }
    };
    let x0 = parse_cli_point(&args.start, &space, taxa.as_ref())?;
    let config = run_config(&args.schedule, args.algo, &args.output)?;
    let trace = match args.algo {
        Algo::Cyclic => prox::ppa_cyclic(&space, &components, &x0, &config)?,
        _ => prox::ppa_random(&space, &components, &x0, &config)?,
    };
    let x = trace.final_point();
    let mut total = 0.0;
    let mut worst: f64 = 0.0;
    for set in &sets {
        let d = set.distance(&space, x)?;
        total += d;
        worst = worst.max(d);
    }
    let facts = RunFacts { seed: config.seed, schedule: Some(&config.schedule), tolerance: config.tolerance };
    let code = finish(&space, taxa.as_ref(), &trace, total, facts, &args.output)?;
    if worst > args.feasibility_tol {
        eprintln!("warning: final point is {worst:e} from a ball (limit {:e})", args.feasibility_tol);
        return Ok(3);
    }
    Ok(code)
}

fn flow(args: FlowArgs) -> Result<i32> {
    let set = load(&args.data)?;
    let data = configuration(&set)?;
    let components = match args.objective {
        FlowObjective::Mean => prox::mean_components(&data),
        FlowObjective::Median => prox::median_components(&data),
    };
    let x0 = match &args.start {
        Some(text) => parse_cli_point(text, &set.space, set.taxa.as_ref())?,
        None => data.anchors()[0].clone(),
    };
    let x = prox::lie_trotter_kato(&set.space, &components, &x0, args.t, args.k)?;
    let doc = ResultDocument {
        space: set.space.backend().to_string(),
        point: format::point_to_value(&x, set.taxa.as_ref())?,
        objective: prox::objective_value(&set.space, &components, &x)?,
        iterations: args.k * components.len() as u64,
        stop_reason: StopReason::Budget.as_str().into(),
        seed: None,
        schedule: Some(ScheduleDoc { form: "t/k".into(), c: None }),
        rng: None,
    };
    emit(&doc, args.out.as_deref())?;
    Ok(0)
}

fn geodesic(args: GeodesicArgs) -> Result<i32> {
    let set = load(&args.data)?;
    let [p, q] = set.points.as_slice() else {
        return input_error(format!("geodesic needs exactly two input points, got {}", set.points.len()));
    };
    let x = set.space.geodesic_point(p, q, args.t)?;
    let doc = json!({
        "space": set.space.backend().to_string(),
        "t": args.t,
        "distance": set.space.distance(p, q)?,
        "point": format::point_to_value(&x, set.taxa.as_ref())?,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("document serializes");
    text.push('\n');
    if let Some(path) = &args.out {
        format::write_atomic(path, text.as_bytes())?;
    }
    println!("point: {}", doc["point"]);
    Ok(0)
}

/// Point tolerance of `verify`, relative to the instance scale.
const VERIFY_POINT_TOL: f64 = 1e-2;
/// Objective tolerance of `verify`, relative to the oracle objective.
const VERIFY_OBJECTIVE_TOL: f64 = 1e-3;
/// Resolvent agreement of `verify` with the golden-section oracle.
const VERIFY_PROX_TOL: f64 = 1e-6;

fn verify(args: VerifyArgs) -> Result<i32> {
    let set = load(&args.data)?;
    let data = configuration(&set)?;
    let report = verify_report(&set.space, &data, set.taxa.as_ref(), args.cycles)?;
    let text = report.to_json() + "\n";
    match &args.out {
        Some(path) => format::write_atomic(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    for e in &report.entries {
        eprintln!(
            "{} {}: oracle {} solver {} gap {:e} (tol {:e})",
            if e.passed { "ok  " } else { "FAIL" },
            e.label,
            e.oracle,
            e.solver,
            e.abs_gap,
            e.tolerance
        );
    }
    Ok(if report.passed() { 0 } else { 1 })
}

/// Oracle checks available for the instance: closed-form and Weiszfeld
/// references in Euclidean space, the per-ray search on spiders, the
/// geodesic law for two anchors, the diagonal SPD mean, and the 1-D resolvent
/// oracle on every backend.
pub fn verify_report(space: &SpaceHandle, data: &AnchorConfiguration, taxa: Option<&TaxonSet>, cycles: u64) -> Result<OracleReport> {
    let config = RunConfig::with_budget(cycles.max(1));
    let config = RunConfig { record_every: config.budget, ..config };
    let (mean, mean_trace) = prox::frechet_mean(space, data, prox::MeanVariant::Cyclic, &config)?;
    let median_trace = match space.backend() {
        Backend::Euclidean { .. } | Backend::Spider { .. } => {
            Some(prox::geometric_median(space, data, prox::MedianVariant::Cyclic, &config)?.1)
        }
        _ => None,
    };
    let mut scale: f64 = 1.0;
    for a in data.anchors() {
        for b in data.anchors() {
            scale = scale.max(space.distance(a, b)?);
        }
    }
    let show = |p: &SpacePoint| format::point_to_value(p, taxa).map(|v| v.to_string());
    let mut report = OracleReport::new(format!("{} anchors on {}, {cycles} cycles", data.len(), space.backend()));

    match space.backend() {
        Backend::Euclidean { .. } => {
            let exact: SpacePoint = oracles::euclidean_mean_closed_form(data)?.into();
            let gap = space.distance(&exact, &mean)?;
            report.within("mean: distance to closed form", 0.0, gap, VERIFY_POINT_TOL * scale).with_points(show(&exact)?, show(&mean)?);
            let median = oracles::weiszfeld_median(data, 100_000, 1e-14)?;
            let oracle = oracles::euclidean_median_objective(data, median.coords())?;
            let solver = median_trace.as_ref().expect("computed above").final_objective();
            report
                .within("median: objective vs Weiszfeld", oracle, solver, VERIFY_OBJECTIVE_TOL * oracle.max(1.0))
                .with_points(show(&median.into())?, show(median_trace.as_ref().expect("computed above").final_point())?);
        }
        Backend::Spider { .. } => {
            let (m, v) = oracles::spider_1d_search(space, data, 2, 1e-13)?;
            let m: SpacePoint = m.into();
            report
                .within("mean: distance to per-ray search", 0.0, space.distance(&m, &mean)?, VERIFY_POINT_TOL * scale)
                .with_points(show(&m)?, show(&mean)?);
            report.within("mean: objective vs per-ray search", v, mean_trace.final_objective(), VERIFY_OBJECTIVE_TOL * v.max(1.0));
            let (p, v) = oracles::spider_1d_search(space, data, 1, 1e-13)?;
            let trace = median_trace.as_ref().expect("computed above");
            report
                .within("median: objective vs per-ray search", v, trace.final_objective(), VERIFY_OBJECTIVE_TOL * v.max(1.0))
                .with_points(show(&p.into())?, show(trace.final_point())?);
        }
        Backend::Spd { .. } => {
            if let Ok(exact) = oracles::spd_diagonal_mean(data) {
                let exact: SpacePoint = exact.into();
                report
                    .within("mean: distance to diagonal closed form", 0.0, space.distance(&exact, &mean)?, VERIFY_POINT_TOL * scale)
                    .with_points(show(&exact)?, show(&mean)?);
            }
        }
        Backend::Bhv { .. } => {}
    }

    if data.len() == 2 {
        let exact = space.geodesic_point(&data.anchors()[0], &data.anchors()[1], data.weights()[1])?;
        report
            .within("mean: distance to the weighted geodesic point", 0.0, space.distance(&exact, &mean)?, VERIFY_POINT_TOL * scale)
            .with_points(show(&exact)?, show(&mean)?);
    }

    // resolvents of the first anchor's components, seen from a random point
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let a = &data.anchors()[0];
    let from = data.anchors().get(1).cloned().unwrap_or_else(|| crate::sample::point(&mut rng, space, scale));
    let w = data.weights()[0];
    let d = space.distance(&from, a)?;
    for (label, component) in [
        ("resolvent of w d(., a_1)^2", ObjectiveComponent::ScaledSquaredDistance { anchor: a.clone(), weight: w }),
        ("resolvent of w d(., a_1)", ObjectiveComponent::ScaledDistance { anchor: a.clone(), weight: w }),
    ] {
        for lambda in [0.1, 1.0, 10.0] {
            let (oracle, _) = oracles::prox_1d_oracle(space, &component, lambda, &from, 1e-12)?;
            let solver = component.prox(space, lambda, &from)?.point;
            report.within(
                format!("{label}, lambda {lambda}: distance to 1-D oracle"),
                0.0,
                space.distance(&oracle, &solver)?,
                VERIFY_PROX_TOL * (1.0 + d),
            );
        }
    }
    Ok(report)
}
