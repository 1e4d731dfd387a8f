//! Command-line experiment runner.
//!
//! Every subcommand writes one header row plus data rows. Exit codes: 0 on
//! success, 2 when the configuration does not validate, 3 when a run or an
//! oracle check under `--verify` fails or output cannot be written.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use refinery_core::bargaining::{
    correlation_sweep, expected_refined_payoffs, is_strictly_decreasing, Allocation, BargainingReport, BargainingSpec,
    ValueFunction, WeightModel,
};
use refinery_core::games::{
    expected_refined_welfare, refine_game, solve_realization, AgreementEvent, Method, PerturbationModel, ZeroSumSpec,
};
use refinery_core::multivalue::{
    aggregate_utility, classify, detect_dilemma, exhaustive_resolution_probability, multi_value_dominates,
    resolution_probability, sample_joint, Coupling, JointOutcome, JointRefinementModel, Resolution, ValueProfile,
};
use refinery_core::oracles::{grid_maximize_2d, scan_equilibrium_welfare};
use refinery_core::refinement::{builtin_models, check_rrp};
use refinery_core::single::{
    best_act, exhaustive_chain, exhaustive_value_of_refinement, optimal_stopping, optimal_value, sequential_refinement,
    value_of_refinement, Criterion, DeltaSequence, RefinementGain, Stage,
};
use refinery_core::stats::Z99;
use refinery_core::{DecisionProblem, DistSpec, RefinementModel, SubStream};

use crate::emit::{Cell, Format, Table};
use crate::exec::PoolExecutor;
use crate::io::{read_json, JointDoc, ModelDoc, ProblemDoc, ProfileDoc};

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or input document.
    Validation(String),
    /// A run, check or write failed.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Validation(_) => 2,
            Self::Runtime(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Self::Validation(m) | Self::Runtime(m) => m,
        }
    }
}

fn invalid<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Validation(e.to_string())
}

fn failed<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn check(ok: bool, what: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Runtime(format!("verify failed: {}", what())))
    }
}

#[derive(Debug, Parser)]
#[command(name = "refinery", version, about = "Value refinement experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Seed for the random streams; required for Monte Carlo runs.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo sample count.
    #[arg(long, global = true, default_value_t = 10_000)]
    pub n: usize,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Re-run the oracle comparisons and fail on disagreement.
    #[arg(long, global = true)]
    pub verify: bool,
    /// Emit one row per outcome, sample or step instead of the summary.
    #[arg(long, global = true)]
    pub detail: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    #[value(alias = "mc")]
    MonteCarlo,
    Exhaustive,
}

impl MethodArg {
    fn method(self) -> Method {
        match self {
            Self::MonteCarlo => Method::MonteCarlo,
            Self::Exhaustive => Method::Exhaustive,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::MonteCarlo => "monte-carlo",
            Self::Exhaustive => "exhaustive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Utility,
    ProbabilityWeighted,
}

impl CriterionArg {
    fn criterion(self) -> Criterion {
        match self {
            Self::Utility => Criterion::Utility,
            Self::ProbabilityWeighted => Criterion::ProbabilityWeighted,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::Utility => "utility",
            Self::ProbabilityWeighted => "probability-weighted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpreadFamily {
    TwoPoint,
    Uniform,
    Gaussian,
}

impl SpreadFamily {
    /// Mean-zero spread with scale `a`: `±a`, `U(-a, a)` or `N(0, a)`.
    fn dist(self, a: f64) -> DistSpec {
        match self {
            Self::TwoPoint => DistSpec::pm(a),
            Self::Uniform => DistSpec::uniform(-a, a),
            Self::Gaussian => DistSpec::gaussian(0.0, a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CouplingArg {
    Explicit,
    Independent,
    CommonSpread,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GameFamily {
    TwoPoint,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightFamily {
    TwoPoint,
    Uniform,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Value of one refinement of an act.
    RefineValue(RefineValueArgs),
    /// Expected optimum along a chain of refinements.
    RefineChain(RefineChainArgs),
    /// Optimal number of refinements at a fixed cost.
    Stopping(StoppingArgs),
    /// Probability that refining a dilemma act reveals a dominating branch.
    Dilemma(DilemmaArgs),
    /// Welfare of the best equilibrium after refining a zero-sum game.
    Zerosum(ZerosumArgs),
    /// Nash bargaining payoffs before and after refining the good.
    Bargain(BargainArgs),
    /// Exact bargaining gains over a grid of weight correlations.
    SweepCorrelation(SweepArgs),
}

#[derive(Debug, Args)]
pub struct RefineValueArgs {
    /// Decision problem document; default: two acts with credence 0.5 each and utilities 0 and -1.
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Act to refine; default: the best act.
    #[arg(long)]
    pub act: Option<usize>,
    /// Refinement model document; overrides --builtin.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Built-in model name, or `all` for one row per built-in model.
    #[arg(long, default_value = "two-point-2")]
    pub builtin: String,
    #[arg(long, value_enum, default_value_t = MethodArg::MonteCarlo)]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value_t = CriterionArg::Utility)]
    pub criterion: CriterionArg,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct RefineChainArgs {
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Spread scale of each stage, in order.
    #[arg(long, value_delimiter = ',', default_value = "2,1")]
    pub spreads: Vec<f64>,
    #[arg(long, value_enum, default_value_t = SpreadFamily::TwoPoint)]
    pub family: SpreadFamily,
    /// Split probability of every stage.
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::MonteCarlo)]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value_t = CriterionArg::Utility)]
    pub criterion: CriterionArg,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct StoppingArgs {
    /// Expected marginal gains, strictly decreasing and nonnegative.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "geometric")]
    pub deltas: Option<Vec<f64>>,
    /// Geometric gains `first,ratio`.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub geometric: Option<Vec<f64>>,
    #[arg(long)]
    pub cost: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct DilemmaArgs {
    /// Value profile document; default: A = (2, 0) and notA = (1, 1).
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub a: usize,
    #[arg(long, default_value_t = 1)]
    pub not_a: usize,
    /// Joint model document; overrides the flags below.
    #[arg(long)]
    pub joint: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = CouplingArg::Explicit)]
    pub coupling: CouplingArg,
    /// Per-dimension spread scale.
    #[arg(long, value_delimiter = ',', default_value = "1,4")]
    pub offsets: Vec<f64>,
    /// Explicit joint over sign patterns; bit `i` set means dimension `i` moves up.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.25")]
    pub pmf: Vec<f64>,
    /// Spread family for the independent and common-spread couplings.
    #[arg(long, value_enum, default_value_t = SpreadFamily::Uniform)]
    pub family: SpreadFamily,
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::MonteCarlo)]
    pub method: MethodArg,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ZerosumArgs {
    /// Base game; only `matching-pennies` is named, use --payoffs otherwise.
    #[arg(long, default_value = "matching-pennies", conflicts_with = "payoffs")]
    pub base: String,
    /// Row payoffs `v,alpha,beta,gamma` of the base game.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub payoffs: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub rho: f64,
    #[arg(long, value_enum, default_value_t = GameFamily::TwoPoint)]
    pub family: GameFamily,
    /// Perturbation magnitude (two-point) or standard deviation (gaussian).
    #[arg(long, default_value_t = 0.5)]
    pub mag: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::MonteCarlo)]
    pub method: MethodArg,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct BargainArgs {
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub rho: f64,
    /// `linear`, `sqrt` or `power:<exponent>`.
    #[arg(long, default_value = "sqrt")]
    pub v: String,
    #[arg(long, value_enum, default_value_t = WeightFamily::TwoPoint)]
    pub weights: WeightFamily,
    /// Symmetric disagreement payoff.
    #[arg(long, default_value_t = 0.0)]
    pub d: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Exhaustive)]
    pub method: MethodArg,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    /// Ascending correlation grid.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-1,-0.5,0,0.5,1")]
    pub rhos: Vec<f64>,
    #[arg(long, default_value = "linear")]
    pub v: String,
    #[arg(long, default_value_t = 0.0)]
    pub d: f64,
    #[command(flatten)]
    pub common: Common,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Self::RefineValue(a) => &a.common,
            Self::RefineChain(a) => &a.common,
            Self::Stopping(a) => &a.common,
            Self::Dilemma(a) => &a.common,
            Self::Zerosum(a) => &a.common,
            Self::Bargain(a) => &a.common,
            Self::SweepCorrelation(a) => &a.common,
        }
    }
}

/// Runs a parsed command and writes its table.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let exec = PoolExecutor::from_env().map_err(CliError::Validation)?;
    let common = cli.command.common();
    let table = build_table(&cli.command, &exec)?;
    write_table(&table, common)
}

/// Runs a command and returns its table without writing it.
pub fn build_table(command: &Command, exec: &PoolExecutor) -> Result<Table, CliError> {
    let common = command.common();
    if common.n == 0 {
        return Err(CliError::Validation("--n must be at least 1".into()));
    }
    match command {
        Command::RefineValue(a) => refine_value(a, exec),
        Command::RefineChain(a) => refine_chain(a, exec),
        Command::Stopping(a) => stopping(a),
        Command::Dilemma(a) => dilemma(a, exec),
        Command::Zerosum(a) => zerosum(a, exec),
        Command::Bargain(a) => bargain(a, exec),
        Command::SweepCorrelation(a) => sweep(a),
    }
}

fn write_table(table: &Table, common: &Common) -> Result<(), CliError> {
    let io_err = |e: io::Error| CliError::Runtime(format!("cannot write output: {e}"));
    match &common.out {
        Some(path) => {
            let file = File::create(path).map_err(io_err)?;
            let mut w = BufWriter::new(file);
            table.write(common.format, &mut w).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            table.write(common.format, &mut w).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
    }
}

fn stream_for(common: &Common, method: MethodArg) -> Result<SubStream, CliError> {
    match (common.seed, method) {
        (Some(seed), _) => Ok(SubStream::new(seed)),
        (None, MethodArg::Exhaustive) => Ok(SubStream::new(0)),
        (None, MethodArg::MonteCarlo) => Err(CliError::Validation("--seed is required for Monte Carlo runs".into())),
    }
}

fn seed_cell(common: &Common) -> Cell {
    common.seed.map_or(Cell::Empty, Cell::from)
}

fn n_cell(common: &Common, method: MethodArg) -> Cell {
    match method {
        MethodArg::MonteCarlo => common.n.into(),
        MethodArg::Exhaustive => Cell::Empty,
    }
}

fn load_problem(path: &Option<PathBuf>) -> Result<DecisionProblem, CliError> {
    match path {
        Some(p) => read_json::<ProblemDoc>(p).map_err(invalid)?.to_problem().map_err(invalid),
        None => DecisionProblem::from_acts(&[0.5, 0.5], &[0.0, -1.0]).map_err(invalid),
    }
}

fn joined(xs: &[f64]) -> Cell {
    Cell::Text(xs.iter().map(|x| crate::emit::format_g17(*x)).collect::<Vec<_>>().join(";"))
}

fn refine_value(a: &RefineValueArgs, exec: &PoolExecutor) -> Result<Table, CliError> {
    let problem = load_problem(&a.problem)?;
    let act = match a.act {
        Some(i) if i < problem.act_count() => i,
        Some(i) => return Err(CliError::Validation(format!("act {i} out of range"))),
        None => best_act(&problem).map_err(invalid)?.0,
    };
    let (u0, p0) = (problem.act_desirability(act).map_err(invalid)?, problem.act_probability(act).map_err(invalid)?);
    let models: Vec<(String, RefinementModel)> = match &a.model {
        Some(path) => vec![("file".into(), read_json::<ModelDoc>(path).map_err(invalid)?.to_model())],
        None => {
            let all = builtin_models(u0, p0);
            if a.builtin == "all" {
                all.into_iter().map(|(n, m)| (n.to_string(), m)).collect()
            } else {
                let m = all
                    .into_iter()
                    .find(|(n, _)| *n == a.builtin)
                    .ok_or_else(|| CliError::Validation(format!("unknown built-in model {:?}", a.builtin)))?;
                vec![(m.0.to_string(), m.1)]
            }
        }
    };
    for (name, m) in &models {
        m.validate().map_err(|e| CliError::Validation(format!("{name}: {e}")))?;
    }
    let stream = stream_for(&a.common, a.method)?;
    let criterion = a.criterion.criterion();
    if a.common.detail {
        return refine_value_detail(a, &problem, act, &models, stream, exec);
    }
    let mut t = Table::new(&[
        "model", "method", "criterion", "seed", "n", "act", "v0", "v1_mean", "gain", "gain_se", "ci99_lower",
    ]);
    for (k, (name, m)) in models.iter().enumerate() {
        let s = stream.child(k as u64);
        let g = match a.method {
            MethodArg::MonteCarlo => value_of_refinement(&problem, act, m, a.common.n, s, criterion, exec),
            MethodArg::Exhaustive => exhaustive_value_of_refinement(&problem, act, m, criterion),
        }
        .map_err(|e| match e {
            refinery_core::single::SingleError::ModelMismatch { .. } => invalid(e),
            other => failed(format!("{name}: {other}")),
        })?;
        if a.common.verify {
            verify_refine_value(name, &problem, act, m, &g, a, s, exec)?;
        }
        t.push(vec![
            name.as_str().into(),
            a.method.name().into(),
            a.criterion.name().into(),
            seed_cell(&a.common),
            n_cell(&a.common, a.method),
            act.into(),
            g.v0.into(),
            g.v1_mean.into(),
            g.gain().into(),
            g.gain_std_error.into(),
            g.gain_lower(Z99).into(),
        ]);
    }
    Ok(t)
}

#[allow(clippy::too_many_arguments)]
fn verify_refine_value(
    name: &str,
    problem: &DecisionProblem,
    act: usize,
    m: &RefinementModel,
    g: &RefinementGain,
    a: &RefineValueArgs,
    stream: SubStream,
    exec: &PoolExecutor,
) -> Result<(), CliError> {
    let criterion = a.criterion.criterion();
    if m.mode == refinery_core::ReflectionMode::PerSample {
        let n = a.common.n.max(refinery_core::refinement::MIN_CHECK_SAMPLES);
        let rrp = check_rrp(m, n, stream.child(1 << 32), exec).map_err(failed)?;
        check(rrp.pass, || format!("{name}: reflection check failed: {rrp:?}"))?;
    }
    if let Some(space) = m.outcome_space() {
        let v0 = optimal_value(problem, criterion).map_err(failed)?;
        let mut exact = 0.0;
        for (p, o) in space.outcomes() {
            let refined = problem.refine_binary(&refinery_core::SplitSpec::new(act, *o)).map_err(failed)?;
            let v1 = optimal_value(&refined, criterion).map_err(failed)?;
            if criterion == Criterion::Utility {
                check(v1 >= v0, || format!("{name}: refined optimum {v1} below {v0}"))?;
            }
            exact += p * v1;
        }
        let ok = match a.method {
            MethodArg::Exhaustive => (g.v1_mean - exact).abs() <= 1e-12 * exact.abs().max(1.0),
            MethodArg::MonteCarlo => (g.v1_mean - exact).abs() <= 4.0 * g.std_error + 1e-12,
        };
        check(ok, || format!("{name}: E[V1] = {} disagrees with enumeration {exact}", g.v1_mean))?;
    }
    if m.is_degenerate() && m.mode == refinery_core::ReflectionMode::PerSample && criterion == Criterion::Utility {
        check(g.gain() == 0.0, || format!("{name}: degenerate model has gain {}", g.gain()))?;
    }
    Ok(())
}

fn refine_value_detail(
    a: &RefineValueArgs,
    problem: &DecisionProblem,
    act: usize,
    models: &[(String, RefinementModel)],
    stream: SubStream,
    exec: &PoolExecutor,
) -> Result<Table, CliError> {
    let criterion = a.criterion.criterion();
    let mut t = Table::new(&["model", "index", "prob", "u1", "u2", "p1", "p2", "v1"]);
    for (k, (name, m)) in models.iter().enumerate() {
        let outcomes: Vec<(f64, refinery_core::RefinementOutcome)> = match a.method {
            MethodArg::Exhaustive => m
                .outcome_space()
                .ok_or_else(|| CliError::Validation(format!("{name}: exhaustive evaluation needs finite support")))?
                .outcomes()
                .to_vec(),
            MethodArg::MonteCarlo => {
                let s = stream.child(k as u64);
                let w = 1.0 / a.common.n as f64;
                refinery_core::refinement::sample_outcomes(m, a.common.n, s, exec)
                    .map_err(failed)?
                    .into_iter()
                    .map(|o| (w, o))
                    .collect()
            }
        };
        for (i, (p, o)) in outcomes.iter().enumerate() {
            let refined = problem.refine_binary(&refinery_core::SplitSpec::new(act, *o)).map_err(failed)?;
            let v1 = optimal_value(&refined, criterion).map_err(failed)?;
            t.push(vec![name.as_str().into(), i.into(), (*p).into(), o.u1.into(), o.u2.into(), o.p1.into(), o.p2.into(), v1.into()]);
        }
    }
    Ok(t)
}

fn refine_chain(a: &RefineChainArgs, exec: &PoolExecutor) -> Result<Table, CliError> {
    let problem = load_problem(&a.problem)?;
    if a.spreads.is_empty() {
        return Err(CliError::Validation("--spreads needs at least one stage".into()));
    }
    let schedule: Vec<Stage> = a
        .spreads
        .iter()
        .map(|&s| Stage::best(RefinementModel::new(0.0, 0.5, DistSpec::point(a.q), a.family.dist(s))))
        .collect();
    for st in &schedule {
        st.template.validate().map_err(invalid)?;
    }
    let stream = stream_for(&a.common, a.method)?;
    let criterion = a.criterion.criterion();
    let exact = match a.family {
        SpreadFamily::TwoPoint => Some(exhaustive_chain(&problem, &schedule, criterion).map_err(failed)?),
        _ => None,
    };
    let rows: Vec<(f64, f64, f64)> = match a.method {
        MethodArg::Exhaustive => {
            let e = exact.clone().ok_or_else(|| CliError::Validation("exhaustive chains need the two-point family".into()))?;
            e.windows(2).map(|w| (w[0], w[1], 0.0)).collect()
        }
        MethodArg::MonteCarlo => sequential_refinement(&problem, &schedule, a.common.n, stream, criterion, exec)
            .map_err(failed)?
            .iter()
            .map(|g| (g.v0, g.v1_mean, g.gain_std_error))
            .collect(),
    };
    if a.common.verify {
        if let Some(e) = &exact {
            check(e.windows(2).all(|w| w[1] > w[0]), || format!("exhaustive chain not strictly increasing: {e:?}"))?;
            if a.method == MethodArg::MonteCarlo {
                let mc = sequential_refinement(&problem, &schedule, a.common.n, stream, criterion, exec).map_err(failed)?;
                for (k, g) in mc.iter().enumerate() {
                    check((g.v1_mean - e[k + 1]).abs() <= 4.0 * g.std_error + 1e-12, || {
                        format!("stage {k}: E[V] = {} disagrees with enumeration {}", g.v1_mean, e[k + 1])
                    })?;
                }
            }
        }
    }
    let mut t = Table::new(&["stage", "method", "seed", "n", "v_before", "v_after", "gain", "gain_se"]);
    for (k, (before, after, se)) in rows.into_iter().enumerate() {
        t.push(vec![
            k.into(),
            a.method.name().into(),
            seed_cell(&a.common),
            n_cell(&a.common, a.method),
            before.into(),
            after.into(),
            (after - before).into(),
            se.into(),
        ]);
    }
    Ok(t)
}

fn stopping(a: &StoppingArgs) -> Result<Table, CliError> {
    let deltas = match (&a.deltas, &a.geometric) {
        (Some(d), None) => DeltaSequence::Values(d.clone()),
        (None, Some(g)) if g.len() == 2 => DeltaSequence::Geometric { first: g[0], ratio: g[1] },
        (None, Some(_)) => return Err(CliError::Validation("--geometric takes first,ratio".into())),
        _ => return Err(CliError::Validation("give --deltas or --geometric".into())),
    };
    let plan = optimal_stopping(&deltas, a.cost).map_err(invalid)?;
    if a.common.verify {
        let here = plan.net_gain;
        check(here >= 0.0, || format!("negative net gain {here}"))?;
        if let Some(t) = plan.t_star {
            let fewer = if t == 0 { None } else { Some(t - 1) };
            check(plan.net_gain_at(fewer) <= here, || "dropping the last refinement raises the net gain".into())?;
            if t + 1 < plan.per_step.len() {
                check(plan.net_gain_at(Some(t + 1)) <= here, || "one more refinement raises the net gain".into())?;
            }
        }
    }
    if a.common.detail {
        let mut t = Table::new(&["step", "delta", "delta_minus_cost", "refine"]);
        for (i, (d, net)) in plan.per_step.iter().enumerate() {
            t.push(vec![i.into(), (*d).into(), (*net).into(), plan.t_star.is_some_and(|s| i <= s).into()]);
        }
        return Ok(t);
    }
    let mut t = Table::new(&["cost", "t_star", "net_gain", "steps_examined"]);
    let t_star = plan.t_star.map_or(Cell::Text("never".into()), Cell::from);
    t.push(vec![a.cost.into(), t_star, plan.net_gain.into(), plan.per_step.len().into()]);
    Ok(t)
}

fn dilemma(a: &DilemmaArgs, exec: &PoolExecutor) -> Result<Table, CliError> {
    let profile = match &a.profile {
        Some(p) => read_json::<ProfileDoc>(p).map_err(invalid)?.to_profile().map_err(invalid)?,
        None => ValueProfile::from_act_values(&[vec![2.0, 0.0], vec![1.0, 1.0]]).map_err(invalid)?,
    };
    let (coupling_name, joint) = match &a.joint {
        Some(p) => ("file", read_json::<JointDoc>(p).map_err(invalid)?.to_model().map_err(invalid)?),
        None => {
            let q = DistSpec::point(a.q);
            match a.coupling {
                CouplingArg::Explicit => {
                    ("explicit", JointRefinementModel::two_point_joint(q, &a.offsets, &a.pmf).map_err(invalid)?)
                }
                CouplingArg::Independent => (
                    "independent",
                    JointRefinementModel {
                        q,
                        marginals: a.offsets.iter().map(|&o| a.family.dist(o)).collect(),
                        coupling: Coupling::Independent,
                    },
                ),
                CouplingArg::CommonSpread => (
                    "common-spread",
                    JointRefinementModel {
                        q,
                        marginals: a.offsets.iter().map(|&o| a.family.dist(o)).collect(),
                        coupling: Coupling::CommonSpread,
                    },
                ),
            }
        }
    };
    joint.validate(profile.dimension_count()).map_err(invalid)?;
    if !detect_dilemma(&profile, a.a, a.not_a).map_err(invalid)? {
        return Err(CliError::Validation(format!("acts {} and {} do not form a dilemma", a.a, a.not_a)));
    }
    let stream = stream_for(&a.common, a.method)?;
    let base = profile.act_values(a.a).map_err(invalid)?;
    let not_a = profile.act_values(a.not_a).map_err(invalid)?;
    let outcomes = || -> Result<Vec<(f64, JointOutcome)>, CliError> {
        match a.method {
            MethodArg::Exhaustive => {
                let qs = joint.q.finite_support().ok_or_else(|| CliError::Validation("exhaustive needs a finite q".into()))?;
                let spreads =
                    joint.spread_space().ok_or_else(|| CliError::Validation("exhaustive needs finite spreads".into()))?;
                let mut out = Vec::new();
                for &(pq, q) in &qs {
                    for (ps, s) in spreads.outcomes() {
                        out.push((pq * ps, JointOutcome::construct(&base, q, s)));
                    }
                }
                Ok(out)
            }
            MethodArg::MonteCarlo => {
                let w = 1.0 / a.common.n as f64;
                exec_outcomes(&joint, &base, a.common.n, stream, exec, w)
            }
        }
    };
    if a.common.detail {
        let mut t = Table::new(&["index", "prob", "q", "branch1", "branch2", "resolution"]);
        for (i, (p, o)) in outcomes()?.iter().enumerate() {
            let r = match classify(o, &not_a) {
                Resolution::Unresolved => "unresolved",
                Resolution::First => "first",
                Resolution::Second => "second",
            };
            t.push(vec![i.into(), (*p).into(), o.q.into(), joined(&o.branch1), joined(&o.branch2), r.into()]);
        }
        return Ok(t);
    }
    let est = match a.method {
        MethodArg::Exhaustive => exhaustive_resolution_probability(&profile, a.a, a.not_a, &joint),
        MethodArg::MonteCarlo => resolution_probability(&profile, a.a, a.not_a, &joint, a.common.n, stream, exec),
    }
    .map_err(failed)?;
    if a.common.verify {
        check(est.overlaps == 0, || format!("{} outcomes with both branches dominant", est.overlaps))?;
        if a.method == MethodArg::MonteCarlo {
            if let Ok(exact) = exhaustive_resolution_probability(&profile, a.a, a.not_a, &joint) {
                check(est.prob.agrees_with(exact.prob.mean, 4.0, 1e-12), || {
                    format!("probability {} disagrees with enumeration {}", est.prob.mean, exact.prob.mean)
                })?;
            }
        }
        let sample = outcomes()?;
        for (_, o) in sample.iter().take(10_000) {
            let winner = match classify(o, &not_a) {
                Resolution::First => Some((&o.branch1, &o.branch2)),
                Resolution::Second => Some((&o.branch2, &o.branch1)),
                Resolution::Unresolved => None,
            };
            if let Some((c, other)) = winner {
                check(multi_value_dominates(c, &[&not_a, other]), || "classification disagrees with dominance".into())?;
                simplex_invariance(c, &[not_a.as_slice(), other.as_slice()])?;
            }
        }
    }
    let mut t = Table::new(&["seed", "method", "n", "coupling", "prob", "se", "p_first", "p_second", "overlaps"]);
    t.push(vec![
        seed_cell(&a.common),
        a.method.name().into(),
        n_cell(&a.common, a.method),
        coupling_name.into(),
        est.prob.mean.into(),
        est.prob.std_error.into(),
        est.p_first.into(),
        est.p_second.into(),
        est.overlaps.into(),
    ]);
    Ok(t)
}

fn exec_outcomes(
    joint: &JointRefinementModel,
    base: &[f64],
    n: usize,
    stream: SubStream,
    exec: &PoolExecutor,
    w: f64,
) -> Result<Vec<(f64, JointOutcome)>, CliError> {
    use refinery_core::Executor;
    exec.map(n, |i| sample_joint(joint, base, stream, i as u64).map(|o| (w, o)))
        .into_iter()
        .collect::<Result<_, _>>()
        .map_err(failed)
}

/// A dominating value vector must never lose to a rival on the 0.01 simplex
/// grid and must win strictly somewhere.
fn simplex_invariance(c: &[f64], others: &[&[f64]]) -> Result<(), CliError> {
    if c.len() != 2 {
        return Ok(());
    }
    let mut strict = false;
    for k in 0..=100 {
        let w = k as f64 / 100.0;
        let weights = [1.0 - w, w];
        let uc = aggregate_utility(c, &weights).map_err(failed)?;
        for o in others {
            let uo = aggregate_utility(o, &weights).map_err(failed)?;
            check(uc >= uo, || format!("dominating act loses at weight {w}"))?;
            strict |= uc > uo;
        }
    }
    check(strict, || "dominating act never wins strictly".into())
}

fn zerosum(a: &ZerosumArgs, exec: &PoolExecutor) -> Result<Table, CliError> {
    let spec = match &a.payoffs {
        Some(p) if p.len() == 4 => ZeroSumSpec::new(p[0], p[1], p[2], p[3]),
        Some(_) => return Err(CliError::Validation("--payoffs takes v,alpha,beta,gamma".into())),
        None if a.base == "matching-pennies" => ZeroSumSpec::MATCHING_PENNIES,
        None => return Err(CliError::Validation(format!("unknown base game {:?}", a.base))),
    };
    spec.validate().map_err(invalid)?;
    let model = match a.family {
        GameFamily::TwoPoint => PerturbationModel::two_point(a.mag, a.rho),
        GameFamily::Gaussian => PerturbationModel::gaussian(a.mag, a.rho),
    };
    model.validate().map_err(invalid)?;
    if a.method == MethodArg::Exhaustive && a.family == GameFamily::Gaussian {
        return Err(CliError::Validation("exhaustive evaluation needs the two-point family".into()));
    }
    let stream = stream_for(&a.common, a.method)?;
    if a.common.detail {
        return zerosum_detail(a, &spec, &model, stream, exec);
    }
    let r = expected_refined_welfare(&spec, &model, a.method.method(), a.common.n, stream, exec).map_err(failed)?;
    if a.common.verify {
        check(r.unverified_realizations == 0, || format!("{} equilibria failed best-response checks", r.unverified_realizations))?;
        if a.method == MethodArg::MonteCarlo && a.family == GameFamily::TwoPoint {
            let exact = expected_refined_welfare(&spec, &model, Method::Exhaustive, 0, stream, exec).map_err(failed)?;
            check(r.welfare.agrees_with(exact.welfare.mean, 4.0, 1e-12), || {
                format!("E[W*] = {} disagrees with enumeration {}", r.welfare.mean, exact.welfare.mean)
            })?;
        }
        if a.method == MethodArg::Exhaustive {
            let mut oracle = 0.0;
            for (p, eps) in model.enumerate().map_err(failed)? {
                oracle += p * scan_equilibrium_welfare(&refine_game(&spec, &eps)).expect("two columns");
            }
            check((oracle - r.welfare.mean).abs() <= 1e-9, || {
                format!("E[W*] = {} disagrees with the column-scan oracle {oracle}", r.welfare.mean)
            })?;
        }
    }
    let mut t = Table::new(&["seed", "rho", "magnitude", "method", "mean_w", "se", "p_full_agreement", "p_E1"]);
    t.push(vec![
        seed_cell(&a.common),
        a.rho.into(),
        a.mag.into(),
        a.method.name().into(),
        r.welfare.mean.into(),
        r.welfare.std_error.into(),
        r.p_full_agreement.into(),
        r.p_beneficial.into(),
    ]);
    Ok(t)
}

fn zerosum_detail(
    a: &ZerosumArgs,
    spec: &ZeroSumSpec,
    model: &PerturbationModel,
    stream: SubStream,
    exec: &PoolExecutor,
) -> Result<Table, CliError> {
    use refinery_core::Executor;
    let draws = match a.method {
        MethodArg::Exhaustive => model.enumerate().map_err(failed)?,
        MethodArg::MonteCarlo => {
            let w = 1.0 / a.common.n as f64;
            exec.map(a.common.n, |i| (w, model.sample(&mut stream.rng(i as u64))))
        }
    };
    let solved = exec
        .map(draws.len(), |i| solve_realization(spec, &draws[i].1))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(failed)?;
    let mut t = Table::new(&[
        "index", "prob", "e1_00", "e1_01", "e1_10", "e1_11", "e2_00", "e2_01", "e2_10", "e2_11", "welfare", "event", "branch",
        "row_mix", "col_mix", "verified",
    ]);
    for (i, ((p, eps), r)) in draws.iter().zip(&solved).enumerate() {
        if a.common.verify {
            check(r.verified, || format!("realization {i} failed the best-response check"))?;
        }
        let event = match r.event {
            AgreementEvent::Disagreement => "disagreement",
            AgreementEvent::Dominated { .. } => "dominated",
            AgreementEvent::Beneficial { .. } => "beneficial",
        };
        let mut row: Vec<Cell> = vec![i.into(), (*p).into()];
        row.extend(eps.e1.iter().flatten().map(|x| Cell::from(*x)));
        row.extend(eps.e2.iter().flatten().map(|x| Cell::from(*x)));
        row.extend([
            r.welfare.into(),
            event.into(),
            r.event.branch().map_or(Cell::Empty, Cell::from),
            joined(&r.equilibrium.profile.row_mix),
            joined(&r.equilibrium.profile.col_mix),
            r.verified.into(),
        ]);
        t.push(row);
    }
    Ok(t)
}

fn parse_value_function(s: &str) -> Result<ValueFunction, CliError> {
    let v = match s {
        "linear" => ValueFunction::Linear,
        "sqrt" => ValueFunction::sqrt(),
        other => {
            let exponent = other
                .strip_prefix("power:")
                .and_then(|e| e.parse::<f64>().ok())
                .ok_or_else(|| CliError::Validation(format!("unknown value function {other:?}")))?;
            ValueFunction::Power { exponent }
        }
    };
    v.validate().map_err(invalid)?;
    Ok(v)
}

fn bargain_columns() -> Table {
    Table::new(&["rho", "sigma", "family", "gain1_mean", "gain1_se", "gain2_mean", "gain2_se", "baseline1", "baseline2"])
}

fn bargain(a: &BargainArgs, exec: &PoolExecutor) -> Result<Table, CliError> {
    let v = parse_value_function(&a.v)?;
    let weights = match a.weights {
        WeightFamily::TwoPoint => WeightModel::TwoPoint { sigma: a.sigma, rho: a.rho },
        WeightFamily::Uniform => WeightModel::IndependentUniform { sigma: a.sigma },
    };
    let spec = BargainingSpec { d: (a.d, a.d), ..BargainingSpec::new(v.clone(), v.clone(), weights) };
    spec.validate().map_err(invalid)?;
    if a.method == MethodArg::Exhaustive && a.weights == WeightFamily::Uniform {
        return Err(CliError::Validation("exhaustive evaluation needs the two-point weight model".into()));
    }
    let stream = stream_for(&a.common, a.method)?;
    let r = expected_refined_payoffs(&spec, a.method.method(), a.common.n, stream, exec).map_err(failed)?;
    if a.common.verify {
        verify_bargain(&spec, &r, a, stream, exec)?;
    }
    if a.common.detail {
        let mut t = Table::new(&["index", "prob", "w1", "w2", "x1", "x2", "payoff1", "payoff2", "gain1", "gain2"]);
        for (i, real) in r.realizations.iter().enumerate() {
            let (x1, x2) = match real.solution.allocation {
                Allocation::Separate(x1, x2) => (x1, x2),
                Allocation::Bundled(x) => (x, x),
            };
            t.push(vec![
                i.into(),
                real.prob.into(),
                real.weights.0.into(),
                real.weights.1.into(),
                x1.into(),
                x2.into(),
                real.solution.payoffs.0.into(),
                real.solution.payoffs.1.into(),
                real.gains.0.into(),
                real.gains.1.into(),
            ]);
        }
        return Ok(t);
    }
    let mut t = bargain_columns();
    let rho = match a.weights {
        WeightFamily::TwoPoint => Cell::from(a.rho),
        WeightFamily::Uniform => Cell::Empty,
    };
    t.push(vec![
        rho,
        a.sigma.into(),
        v.family().into(),
        r.gain1.mean.into(),
        r.gain1.std_error.into(),
        r.gain2.mean.into(),
        r.gain2.std_error.into(),
        r.baseline.payoffs.0.into(),
        r.baseline.payoffs.1.into(),
    ]);
    Ok(t)
}

/// Grid resolution of the bargaining oracle.
const BARGAIN_GRID: usize = 2001;
/// Realizations checked against the grid under Monte Carlo.
const BARGAIN_GRID_CHECKS: usize = 4;

fn verify_bargain(
    spec: &BargainingSpec,
    r: &BargainingReport,
    a: &BargainArgs,
    stream: SubStream,
    exec: &PoolExecutor,
) -> Result<(), CliError> {
    let strict = spec.v1.is_strictly_concave() && spec.v2.is_strictly_concave();
    for real in r.realizations.iter().take(match a.method {
        MethodArg::Exhaustive => usize::MAX,
        MethodArg::MonteCarlo => BARGAIN_GRID_CHECKS,
    }) {
        let b = spec.realized(real.weights);
        let grid = grid_maximize_2d(
            |x1, x2| {
                let (u1, u2) = b.payoffs(x1, x2);
                if u1 < b.d.0 || u2 < b.d.1 {
                    f64::NEG_INFINITY
                } else {
                    (u1 - b.d.0) * (u2 - b.d.1)
                }
            },
            (0.0, 0.0),
            (1.0, 1.0),
            BARGAIN_GRID,
        )
        .map_err(failed)?;
        check(real.solution.nash_product >= grid.value - 1e-12, || {
            format!("solver product {} below grid product {} at weights {:?}", real.solution.nash_product, grid.value, real.weights)
        })?;
        for gain in [real.gains.0, real.gains.1] {
            check(gain >= -1e-9, || format!("negative gain {gain} at weights {:?}", real.weights))?;
            if strict && real.weights.0 != real.weights.1 {
                check(gain > 0.0, || format!("no strict gain at weights {:?}", real.weights))?;
            }
        }
    }
    if a.method == MethodArg::MonteCarlo && a.weights == WeightFamily::TwoPoint {
        let exact = expected_refined_payoffs(spec, Method::Exhaustive, 0, stream, exec).map_err(failed)?;
        for (mc, ex) in [(r.gain1, exact.gain1.mean), (r.gain2, exact.gain2.mean)] {
            check(mc.agrees_with(ex, 4.0, 1e-12), || format!("gain {} disagrees with enumeration {ex}", mc.mean))?;
        }
    }
    Ok(())
}

fn sweep(a: &SweepArgs) -> Result<Table, CliError> {
    let v = parse_value_function(&a.v)?;
    let spec = BargainingSpec {
        d: (a.d, a.d),
        ..BargainingSpec::new(v.clone(), v.clone(), WeightModel::TwoPoint { sigma: a.sigma, rho: 0.0 })
    };
    spec.validate().map_err(invalid)?;
    for &rho in &a.rhos {
        WeightModel::TwoPoint { sigma: a.sigma, rho }.validate().map_err(invalid)?;
    }
    let rows = correlation_sweep(&spec, a.sigma, &a.rhos).map_err(invalid)?;
    if a.common.verify {
        check(is_strictly_decreasing(&rows, 0.0), || "gains do not strictly fall with correlation".into())?;
    }
    let mut t = bargain_columns();
    for row in rows {
        t.push(vec![
            row.rho.into(),
            a.sigma.into(),
            v.family().into(),
            row.gain1.into(),
            0.0.into(),
            row.gain2.into(),
            0.0.into(),
            row.baseline.0.into(),
            row.baseline.1.into(),
        ]);
    }
    Ok(t)
}
