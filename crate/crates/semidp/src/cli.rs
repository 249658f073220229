//! Command-line front end.
//!
//! Subcommands: `solve` (run a solver on a problem file), `riccati` (fixed
//! points, staircase iterates, and the `δ`-homotopy for linear-quadratic
//! instances), `stopping` (closed-form solution curves, residual checks,
//! and the grid discretization), `counterexample` (the two-state
//! tie-breaking battery), `random-suite` (the seeded invariant battery),
//! and `verify` (fixed-point residual of a value file against a problem).
//!
//! Exit codes: 0 success, 1 validation problem, 2 solver precondition
//! violation, 3 mathematical disagreement, 4 iteration cap. Identical
//! configurations produce byte-identical artifacts; `SEMIDP_THREADS` caps
//! the suite's parallelism.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::cost::Finite;
use crate::instances::{
    build_lq_scalar, build_spath_counterexample, build_stopping_discretization, log_spaced_radii,
    spath_exit_policy, spath_stay_policy, stopping_bellman_residual, stopping_grid_radii,
    stopping_value, StoppingParams, StoppingSolutionKind,
};
use crate::matrix::Mat;
use crate::model::{FiniteProblem, ForcingFunction, ProblemSpec, StationaryPolicy, ValueFunction};
use crate::operators::bellman_residual;
use crate::oracle::{oracle_j_plus, oracle_j_star};
use crate::riccati::{
    p_hat_via_delta_limit, riccati_iterates, solve_riccati_fixed_point, LqProblem, LqSpec,
    RiccatiError,
};
use crate::solvers::{
    compute_j_plus, delta_greedy_policy, j_hat_via_delta_limit, optimistic_policy_iteration,
    perturbed_policy_iteration, policy_iteration, value_iteration, DeltaSchedule, MSchedule, PiTie,
    SolveTrace, SolverError, Termination,
};
use crate::suite::{run_suite, SuiteConfig};
use crate::tolerances::{DEFAULT_MAX_ITER, DEFAULT_VI_TOL};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Precondition(String),
    #[error("{0}")]
    Disagreement(String),
    #[error("{0}")]
    IterationCap(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Precondition(_) => 2,
            CliError::Disagreement(_) => 3,
            CliError::IterationCap(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("io error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(format!("json error: {e}"))
    }
}

impl From<crate::model::ValidationError> for CliError {
    fn from(e: crate::model::ValidationError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::InvalidSchedule(_) => CliError::Validation(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<RiccatiError> for CliError {
    fn from(e: RiccatiError) -> Self {
        match e {
            RiccatiError::IterationCap => CliError::IterationCap(e.to_string()),
            RiccatiError::Divergence { .. } => CliError::Precondition(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<crate::instances::InstanceError> for CliError {
    fn from(e: crate::instances::InstanceError) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "semidp",
    about = "Deterministic optimal-control solvers around the multiple fixed points of the optimality equation",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a solver on a problem file and write the result/trace.
    Solve(SolveArgs),
    /// Riccati fixed points, iterate staircases, and the δ-homotopy.
    Riccati(RiccatiArgs),
    /// Closed-form stopping-problem curves, residuals, and discretization.
    Stopping(StoppingArgs),
    /// The two-state battery where policy iteration depends on tie-breaking.
    Counterexample(CounterexampleArgs),
    /// Seeded random instances, all solvers, oracle cross-checks.
    RandomSuite(RandomSuiteArgs),
    /// Fixed-point residual of a value file against a problem file.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Vi,
    Pi,
    Ppi,
    Opi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitKind {
    Zero,
    Infinity,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TieArg {
    /// Lowest control index among minimizers.
    Lowest,
    /// Keep the incumbent's control when it still minimizes.
    Keep,
    /// Switch to a different minimizing control when one exists.
    Change,
}

impl From<TieArg> for PiTie {
    fn from(t: TieArg) -> PiTie {
        match t {
            TieArg::Lowest => PiTie::LowestIndex,
            TieArg::Keep => PiTie::PreferCurrent,
            TieArg::Change => PiTie::PreferChange,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ForcingArg {
    /// The indicator forcing function (1 off the destination).
    Plus,
    /// The `forcing` array embedded in the problem file.
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Problem JSON file.
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, value_enum, default_value_t = Algo::Vi)]
    pub algo: Algo,
    /// Initial value function (vi/opi).
    #[arg(long, value_enum, default_value_t = InitKind::Zero)]
    pub init: InitKind,
    /// Value JSON file for --init file.
    #[arg(long)]
    pub init_file: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_VI_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// First perturbation weight (ppi).
    #[arg(long, default_value_t = 1.0)]
    pub delta0: f64,
    /// Geometric decay of the perturbation schedule (ppi).
    #[arg(long, default_value_t = 0.5)]
    pub decay: f64,
    /// Schedule length override (ppi); default runs until the weight is
    /// below tol·min(p)/n_states.
    #[arg(long)]
    pub length: Option<usize>,
    /// Backups per round (opi).
    #[arg(long, default_value_t = 1)]
    pub mk: usize,
    #[arg(long, value_enum, default_value_t = TieArg::Lowest)]
    pub tie: TieArg,
    #[arg(long, value_enum, default_value_t = ForcingArg::Plus)]
    pub p: ForcingArg,
    /// Output file; the artifact goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
    /// Cross-check the result against the enumeration oracle (exit 3 on
    /// disagreement beyond 1e-9).
    #[arg(long)]
    pub check_oracle: bool,
}

#[derive(Debug, Args)]
pub struct RiccatiArgs {
    /// Linear-quadratic instance JSON ({"A","B","Q","R","alpha"?}).
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Scalar instance x' = γx + u with unit input matrix.
    #[arg(long)]
    pub scalar_gamma: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub q: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Start matrix: "zero", "identity", or a number (scalar instances).
    #[arg(long, default_value = "identity")]
    pub p0: String,
    /// Fixed perturbation weight for a single solve.
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[arg(long, default_value_t = DEFAULT_VI_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    /// Drive the perturbation to zero instead of a single solve.
    #[arg(long)]
    pub homotopy: bool,
    #[arg(long, default_value_t = 1.0)]
    pub delta0: f64,
    #[arg(long, default_value_t = 0.5)]
    pub decay: f64,
    /// Homotopy schedule length; default runs until the weight is below 1e-12.
    #[arg(long)]
    pub length: Option<usize>,
    /// Emit the iterate staircase as CSV series instead of JSON.
    #[arg(long)]
    pub staircase: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StoppingArgs {
    /// Stop cost c > 0.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Contraction factor γ in (0,1).
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    /// Perturbation weight for the perturbed solution curves.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Anchor radius of the orbit-supported middle solution.
    #[arg(long, default_value_t = 0.3)]
    pub x0: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub r_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub r_max: f64,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Build the grid discretization and compare its unique solution with
    /// the continuous ones.
    #[arg(long)]
    pub discretize: bool,
    /// Grid levels for --discretize.
    #[arg(long, default_value_t = 20)]
    pub levels: usize,
    /// Largest grid radius for --discretize.
    #[arg(long, default_value_t = 2.0)]
    pub grid_r_max: f64,
    /// Export the discretized problem JSON here.
    #[arg(long)]
    pub export: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    /// Export the problem JSON here.
    #[arg(long)]
    pub export: Option<PathBuf>,
    /// Write the full battery results JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RandomSuiteArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    #[arg(long, default_value_t = 6)]
    pub max_states: usize,
    #[arg(long, default_value_t = 3)]
    pub max_controls: usize,
    /// Per-instance pass/fail CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub problem: PathBuf,
    /// Value JSON file ({"values": [...]}).
    #[arg(long)]
    pub value: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => solve(args),
        Command::Riccati(args) => riccati(args),
        Command::Stopping(args) => stopping(args),
        Command::Counterexample(args) => counterexample(args),
        Command::RandomSuite(args) => random_suite(args),
        Command::Verify(args) => verify(args),
    }
}

fn load_problem(path: &Path) -> Result<(FiniteProblem, Option<Vec<f64>>), CliError> {
    let text = fs::read_to_string(path)?;
    let spec: ProblemSpec = serde_json::from_str(&text)?;
    let forcing = spec.forcing.clone();
    Ok((FiniteProblem::new(spec)?, forcing))
}

fn load_value(path: &Path, problem: &FiniteProblem) -> Result<ValueFunction, CliError> {
    let text = fs::read_to_string(path)?;
    let raw: ValueFunction = serde_json::from_str(&text)?;
    Ok(ValueFunction::from_values(problem, raw.iter().collect())?)
}

fn forcing_for(
    arg: ForcingArg,
    problem: &FiniteProblem,
    embedded: &Option<Vec<f64>>,
) -> Result<ForcingFunction, CliError> {
    match arg {
        ForcingArg::Plus => Ok(ForcingFunction::p_plus(problem)),
        ForcingArg::File => {
            let values = embedded.clone().ok_or_else(|| {
                CliError::Validation("--p file requires a \"forcing\" array in the problem file".into())
            })?;
            Ok(ForcingFunction::new(problem, values)?)
        }
    }
}

fn write_artifact(out: &Option<PathBuf>, contents: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            fs::write(path, contents)?;
        }
        None => println!("{contents}"),
    }
    Ok(())
}

fn trace_artifact(
    format: FormatArg,
    algorithm: &str,
    value: &ValueFunction,
    policy: Option<&StationaryPolicy>,
    trace: &SolveTrace,
    residual: crate::cost::ExtendedCost,
) -> Result<String, CliError> {
    match format {
        FormatArg::Json => {
            let doc = serde_json::json!({
                "algorithm": algorithm,
                "final": value,
                "policy": policy,
                "termination": trace.termination,
                "iterations": trace.iterations(),
                "residual": residual,
                "trace": trace,
            });
            Ok(serde_json::to_string_pretty(&doc)?)
        }
        FormatArg::Csv => {
            let mut buf = Vec::new();
            trace.write_csv(&mut buf)?;
            Ok(String::from_utf8(buf).expect("csv is utf8"))
        }
    }
}

fn solve(args: SolveArgs) -> Result<(), CliError> {
    let (problem, embedded_forcing) = load_problem(&args.problem)?;
    let init = |kind: InitKind| -> Result<ValueFunction, CliError> {
        match kind {
            InitKind::Zero => Ok(ValueFunction::zero(&problem)),
            InitKind::Infinity => Ok(ValueFunction::infinity_init(&problem)),
            InitKind::File => {
                let path = args
                    .init_file
                    .as_ref()
                    .ok_or_else(|| CliError::Validation("--init file requires --init-file".into()))?;
                load_value(path, &problem)
            }
        }
    };

    let (name, value, policy, trace) = match args.algo {
        Algo::Vi => {
            let result = value_iteration(&problem, &init(args.init)?, args.tol, args.max_iter);
            ("vi", result.value, None, result.trace)
        }
        Algo::Pi => {
            let mu0 = StationaryPolicy::new(&problem, vec![0; problem.n_states()])?;
            let result = policy_iteration(&problem, &mu0, args.tie.into(), args.max_iter);
            ("pi", result.value, Some(result.policy), result.trace)
        }
        Algo::Ppi => {
            let p = forcing_for(args.p, &problem, &embedded_forcing)?;
            let schedule = match args.length {
                Some(length) => DeltaSchedule::new(args.delta0, args.decay, length)?,
                None => DeltaSchedule::default_for(&problem, &p, args.tol),
            };
            let mu0 = delta_greedy_policy(&problem, &p, args.delta0);
            let result = perturbed_policy_iteration(&problem, &p, &schedule, &mu0, args.tie.into())?;
            ("ppi", result.value, Some(result.policy), result.trace)
        }
        Algo::Opi => {
            let m = MSchedule::constant(args.mk)?;
            let result =
                optimistic_policy_iteration(&problem, &init(args.init)?, &m, args.tie.into(), args.tol)?;
            ("opi", result.value, Some(result.policy), result.trace)
        }
    };

    let residual = bellman_residual(&problem, &value);
    let mut oracle_note = String::new();
    if args.check_oracle {
        let j_star = oracle_j_star(&problem).map_err(|e| CliError::Validation(e.to_string()))?;
        let j_plus = oracle_j_plus(&problem).map_err(|e| CliError::Validation(e.to_string()))?;
        let lo_ok = (0..value.len()).all(|x| match j_star.get(x) {
            crate::cost::ExtendedCost::Infinite => value.get(x).is_infinite(),
            crate::cost::ExtendedCost::Finite(v) => value.get(x) >= Finite(v - 1e-9),
        });
        let hi_ok = (0..value.len()).all(|x| match j_plus.get(x) {
            crate::cost::ExtendedCost::Infinite => true,
            crate::cost::ExtendedCost::Finite(v) => value.get(x) <= Finite(v + 1e-9),
        });
        if !(lo_ok && hi_ok) {
            return Err(CliError::Disagreement(
                "result escapes the oracle envelope [j_star, j_plus]".into(),
            ));
        }
        oracle_note = " oracle=agree".into();
    }

    let artifact = trace_artifact(args.format, name, &value, policy.as_ref(), &trace, residual)?;
    println!(
        "{name} iterations={} termination={:?} residual={}{}{}",
        trace.iterations(),
        trace.termination,
        residual,
        oracle_note,
        args.out.as_ref().map(|p| format!(" out={}", p.display())).unwrap_or_default()
    );
    write_artifact(&args.out, &artifact)?;
    if trace.termination == Termination::IterationCap {
        return Err(CliError::IterationCap(format!(
            "{name} hit the iteration cap after {} iterations",
            trace.iterations()
        )));
    }
    Ok(())
}

fn parse_p0(arg: &str, n: usize) -> Result<Mat, CliError> {
    match arg {
        "zero" => Ok(Mat::zeros(n, n)),
        "identity" => Ok(Mat::identity(n)),
        other => {
            let v: f64 = other
                .parse()
                .map_err(|_| CliError::Validation(format!("--p0 must be zero|identity|number, got {other}")))?;
            if n != 1 {
                return Err(CliError::Validation("numeric --p0 needs a scalar instance".into()));
            }
            Ok(Mat::scalar(v))
        }
    }
}

fn riccati(args: RiccatiArgs) -> Result<(), CliError> {
    let problem: LqProblem = match (&args.problem, args.scalar_gamma) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)?;
            let spec: LqSpec = serde_json::from_str(&text)?;
            LqProblem::from_spec(spec)?
        }
        (None, Some(gamma)) => build_lq_scalar(gamma, args.q, args.r, args.alpha)?,
        _ => {
            return Err(CliError::Validation(
                "give exactly one of --problem or --scalar-gamma".into(),
            ))
        }
    };
    let n = problem.state_dim();

    if args.homotopy {
        let schedule = match args.length {
            Some(length) => DeltaSchedule::new(args.delta0, args.decay, length)?,
            None => DeltaSchedule::until_below(args.delta0, args.decay, 1e-12)?,
        };
        let homotopy = p_hat_via_delta_limit(&problem, &schedule, args.tol)?;
        println!(
            "riccati homotopy steps={} radius={} classification={:?} residual={:e}",
            homotopy.steps.len(),
            homotopy.solution.closed_loop_spectral_radius,
            homotopy.solution.classification,
            homotopy.solution.fixed_point_residual
        );
        write_artifact(&args.out, &serde_json::to_string_pretty(&homotopy)?)?;
        return Ok(());
    }

    let p0 = parse_p0(&args.p0, n)?;
    if args.staircase {
        let iterates = riccati_iterates(&problem, &p0, args.delta, args.tol, args.max_iter)?;
        let mut csv = String::from("series,iteration_or_radius,state_or_blank,value\n");
        for (k, p) in iterates.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    csv.push_str(&format!("riccati_iterate,{k},{i}.{j},{}\n", p[(i, j)]));
                }
            }
        }
        println!("riccati staircase iterations={}", iterates.len() - 1);
        write_artifact(&args.out, &csv)?;
        return Ok(());
    }

    let solution = solve_riccati_fixed_point(&problem, &p0, args.delta, args.tol, args.max_iter)?;
    println!(
        "riccati P[0,0]={} gain[0,0]={} radius={} classification={:?} residual={:e}",
        solution.p[(0, 0)],
        solution.gain[(0, 0)],
        solution.closed_loop_spectral_radius,
        solution.classification,
        solution.fixed_point_residual
    );
    write_artifact(&args.out, &serde_json::to_string_pretty(&solution)?)?;
    Ok(())
}

fn stopping(args: StoppingArgs) -> Result<(), CliError> {
    let params = StoppingParams::new(args.c, args.gamma)?;

    if args.discretize {
        let problem = build_stopping_discretization(&params, args.grid_r_max, args.levels)?;
        if let Some(path) = &args.export {
            fs::write(path, serde_json::to_string_pretty(&problem.to_spec())?)?;
        }
        let from_zero = crate::solvers::compute_j_star_vi(&problem, 1e-12, 10_000).value;
        let from_inf = compute_j_plus(&problem);
        let agreement = from_zero.sup_gap(&from_inf);
        let radii = stopping_grid_radii(&params, args.grid_r_max, args.levels);
        let mut csv = String::from("series,iteration_or_radius,state_or_blank,value\n");
        let mut worst = 0.0_f64;
        for (k, &r) in radii.iter().enumerate() {
            let discrete = from_zero.get(k).as_f64();
            let continuous = stopping_value(&params, &StoppingSolutionKind::JStar, r).as_f64();
            worst = worst.max((discrete - continuous).abs());
            csv.push_str(&format!("discrete_solution,{r},{k},{discrete}\n"));
            csv.push_str(&format!("continuous_smallest,{r},,{continuous}\n"));
            csv.push_str(&format!("continuous_largest,{r},,{}\n", params.c));
        }
        println!(
            "stopping discretization levels={} init_agreement={} max_dev_from_smallest={:e}",
            args.levels, agreement, worst
        );
        write_artifact(&args.out, &csv)?;
        return Ok(());
    }

    let radii = log_spaced_radii(args.r_min, args.r_max, args.samples.max(2));
    let kinds: Vec<(&str, StoppingSolutionKind)> = vec![
        ("j_star", StoppingSolutionKind::JStar),
        ("j_plus", StoppingSolutionKind::JPlus),
        ("j_hat_p_delta", StoppingSolutionKind::JHatPDelta(args.delta)),
        ("j_hat_pplus_delta", StoppingSolutionKind::JHatPPlusDelta(args.delta)),
        ("middle", StoppingSolutionKind::Middle(args.x0)),
    ];
    let mut csv = String::from("series,iteration_or_radius,state_or_blank,value\n");
    let mut summary = String::new();
    for (name, kind) in &kinds {
        for &r in &radii {
            csv.push_str(&format!("{name},{r},,{}\n", stopping_value(&params, kind, r)));
        }
        let residual = stopping_bellman_residual(&params, kind, &radii);
        summary.push_str(&format!(" {name}={residual:e}"));
    }
    println!("stopping residuals:{summary}");
    write_artifact(&args.out, &csv)?;
    Ok(())
}

fn counterexample(args: CounterexampleArgs) -> Result<(), CliError> {
    let problem = build_spath_counterexample();
    if let Some(path) = &args.export {
        fs::write(path, serde_json::to_string_pretty(&problem.to_spec())?)?;
    }

    let from_zero = crate::solvers::compute_j_star_vi(&problem, 1e-12, 100).value;
    let from_inf = compute_j_plus(&problem);
    let p = ForcingFunction::p_plus(&problem);
    let schedule = DeltaSchedule::new(1.0, 0.5, 20)?;
    let ppi = perturbed_policy_iteration(&problem, &p, &schedule, &spath_exit_policy(), PiTie::PreferCurrent)?;
    let stay = policy_iteration(&problem, &spath_stay_policy(), PiTie::LowestIndex, 100);
    let kept = policy_iteration(&problem, &spath_exit_policy(), PiTie::PreferCurrent, 100);
    let switched = policy_iteration(&problem, &spath_exit_policy(), PiTie::PreferChange, 100);
    let opi_above = optimistic_policy_iteration(
        &problem,
        &ValueFunction::from_values(&problem, vec![Finite(0.0), Finite(5.0)])?,
        &MSchedule::default(),
        PiTie::LowestIndex,
        1e-12,
    )?;
    let j_hat = j_hat_via_delta_limit(&problem, &p, &schedule, 0.0);

    let expectations = [
        ("vi_from_zero_smallest", from_zero.get(1) == Finite(0.0)),
        ("vi_from_infinity_largest", from_inf.get(1) == Finite(1.0)),
        ("pi_repeats_unstable_optimum", stay.value.get(1) == Finite(0.0)),
        ("pi_keep_repeats_stable_policy", kept.value.get(1) == Finite(1.0)),
        ("pi_change_finds_unstable_optimum", switched.value.get(1) == Finite(0.0)),
        ("perturbed_pi_limit", ppi.value.get(1) == Finite(1.0)),
        ("optimistic_pi_one_round", opi_above.value.get(1) == Finite(1.0)),
        ("delta_limit_collapse", j_hat.value.get(1) == Finite(1.0)),
    ];
    for (name, ok) in &expectations {
        println!("{} {name}", if *ok { "PASS" } else { "FAIL" });
    }

    let doc = serde_json::json!({
        "problem": problem.to_spec(),
        "vi_from_zero": from_zero,
        "vi_from_infinity": from_inf,
        "pi_from_stay": { "policy": stay.policy, "value": stay.value },
        "pi_from_exit_keep": { "policy": kept.policy, "value": kept.value },
        "pi_from_exit_change": { "policy": switched.policy, "value": switched.value },
        "perturbed_pi": { "policy": ppi.policy, "value": ppi.value, "trace": ppi.trace },
        "optimistic_pi_from_above": { "value": opi_above.value },
        "delta_limit": j_hat.value,
    });
    write_artifact(&args.out, &serde_json::to_string_pretty(&doc)?)?;

    if expectations.iter().any(|(_, ok)| !ok) {
        return Err(CliError::Disagreement("counterexample battery failed".into()));
    }
    Ok(())
}

fn thread_cap() -> usize {
    match std::env::var("SEMIDP_THREADS") {
        Ok(v) => v.parse::<usize>().unwrap_or(1).max(1),
        Err(_) => 1,
    }
}

fn random_suite(args: RandomSuiteArgs) -> Result<(), CliError> {
    if args.max_states < 2 || args.max_controls < 1 {
        return Err(CliError::Validation("--max-states >= 2 and --max-controls >= 1 required".into()));
    }
    let config = SuiteConfig {
        base_seed: args.seed,
        count: args.count,
        max_states: args.max_states,
        max_controls: args.max_controls,
        monotone_pairs_per_instance: 10,
    };
    let report = run_suite(&config, thread_cap());
    let mut csv = String::from("seed,n_states,max_controls,bias,check,pass,detail\n");
    for instance in &report.instances {
        for check in &instance.checks {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                instance.seed,
                instance.n_states,
                instance.max_controls,
                instance.bias,
                check.name,
                check.pass,
                check.detail.replace(',', ";")
            ));
        }
    }
    write_artifact(&args.out, &csv)?;
    println!(
        "random-suite instances={} checks={} all_pass={}",
        report.instances.len(),
        report.total_checks(),
        report.all_pass()
    );
    if let Some((instance, check)) = report.first_failure() {
        return Err(CliError::Disagreement(format!(
            "seed {} failed {}: {}",
            instance.seed, check.name, check.detail
        )));
    }
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<(), CliError> {
    let (problem, _) = load_problem(&args.problem)?;
    let value = load_value(&args.value, &problem)?;
    let residual = bellman_residual(&problem, &value);
    let pass = residual <= Finite(args.tol);
    println!("verify residual={residual} tol={} pass={pass}", args.tol);
    if !pass {
        return Err(CliError::Disagreement(format!(
            "fixed-point residual {residual} exceeds tolerance {}",
            args.tol
        )));
    }
    Ok(())
}
