mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use cutter_core::{
    generate, parse_problem, serialize_problem, solve, GeneratorSpec, LambdaSchedule, Problem,
    ProblemKind, SolveConfig, SolveResult, SolveStatus, StepPolicy, Vector,
};

#[derive(Parser)]
#[command(
    name = "cutter",
    version,
    about = "Extrapolated cyclic projections for convex feasibility"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file and print the final point.
    Solve(SolveArgs),
    /// Run every applicable step policy on the same problem and compare them.
    Bench(BenchArgs),
    /// Write a seeded random problem file.
    Gen(GenArgs),
}

#[derive(Args)]
struct SolverArgs {
    /// Relaxation λ, or a comma-separated schedule that is cycled.
    #[arg(long, default_value = "1.0")]
    lambda: String,
    /// Keeps every λ_k inside [ε, 2 − ε].
    #[arg(long, default_value_t = 1e-2)]
    epsilon: f64,
    /// Stop once ‖Ux − x‖ is at most this.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    /// Record distances to the problem's witness.
    #[arg(long)]
    use_witness: bool,
    /// Starting point: `zero`, `witness`, or comma-separated coordinates.
    #[arg(long, default_value = "zero")]
    x0: String,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    problem: PathBuf,
    /// unit, sigma-max, sigma-specialized, clamped:<α> or floored.
    #[arg(long, default_value = "sigma-max")]
    policy: StepPolicy,
    /// Write a CSV trace of the run here.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, conflicts_with_all = ["seed", "dim", "m", "kind", "conditioning"])]
    problem: Option<PathBuf>,
    /// Per-policy traces are written next to this path as `<stem>-<policy>.csv`.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    gen: GenParams,
}

#[derive(Args)]
struct GenParams {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    /// eq, ineq, convex or mixed.
    #[arg(long)]
    kind: Option<ProblemKind>,
    /// 0 gives near-orthogonal rows, values close to 1 near-parallel ones.
    #[arg(long)]
    conditioning: Option<f64>,
}

impl GenParams {
    fn spec(&self) -> Result<GeneratorSpec> {
        let (Some(seed), Some(dim), Some(m)) = (self.seed, self.dim, self.m) else {
            bail!("--seed, --dim and --m are required to generate a problem");
        };
        let spec = GeneratorSpec {
            seed,
            dim,
            m,
            kind: self.kind.unwrap_or(ProblemKind::LinearEq),
            conditioning: self.conditioning.unwrap_or(0.0),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    gen: GenParams,
    /// Defaults to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Bench(args) => run_bench(args),
        Command::Gen(args) => run_gen(args).map(|()| 0),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn exit_code(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::Converged => 0,
        SolveStatus::MaxIters => 2,
        SolveStatus::Stalled => 3,
    }
}

fn load_problem(path: &Path) -> Result<Problem> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let problem = parse_problem(&text).with_context(|| format!("{}", path.display()))?;
    problem
        .validate()
        .with_context(|| format!("{}", path.display()))?;
    Ok(problem)
}

fn parse_lambda(text: &str) -> Result<LambdaSchedule> {
    let values = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("bad --lambda value {s:?}"))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(match values.as_slice() {
        [single] => LambdaSchedule::Constant(*single),
        _ => LambdaSchedule::Sequence(values),
    })
}

fn starting_point(text: &str, problem: &Problem) -> Result<Vector> {
    match text {
        "zero" => Ok(Vector::zeros(problem.dim())?),
        "witness" => problem
            .witness()
            .cloned()
            .ok_or_else(|| anyhow!("--x0 witness needs a witness line in the problem")),
        coords => {
            let values = coords
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .with_context(|| format!("bad --x0 coordinate {s:?}"))
                })
                .collect::<Result<Vec<_>>>()?;
            let x = Vector::new(values)?;
            if x.dim() != problem.dim() {
                bail!(
                    "--x0 has {} coordinates but the problem has dimension {}",
                    x.dim(),
                    problem.dim()
                );
            }
            Ok(x)
        }
    }
}

/// Everything needed to start a run, checked before any iteration happens.
struct Setup {
    config: SolveConfig,
    x0: Vector,
    z_ref: Option<Vector>,
}

impl SolverArgs {
    fn setup(&self, problem: &Problem, policy: StepPolicy) -> Result<Setup> {
        let config = SolveConfig {
            lambda: parse_lambda(&self.lambda)?,
            epsilon: self.epsilon,
            policy,
            tol_residual: self.tol,
            max_iters: self.max_iters,
            ..SolveConfig::default()
        };
        config.validate()?;
        let z_ref = if self.use_witness {
            let w = problem
                .witness()
                .ok_or_else(|| anyhow!("--use-witness needs a witness line in the problem"))?;
            Some(w.clone())
        } else {
            None
        };
        Ok(Setup {
            config,
            x0: starting_point(&self.x0, problem)?,
            z_ref,
        })
    }
}

fn run(problem: &Problem, setup: &Setup) -> Result<SolveResult> {
    let op = problem.to_operator()?;
    Ok(solve(&op, &setup.x0, &setup.config, setup.z_ref.as_ref())?)
}

fn run_solve(args: SolveArgs) -> Result<u8> {
    let problem = load_problem(&args.problem)?;
    let setup = args.solver.setup(&problem, args.policy)?;
    let result = run(&problem, &setup)?;
    if let Some(path) = &args.trace {
        report::write_trace(path, &result.trace)?;
    }
    println!("status: {}", result.status);
    println!("iterations: {}", result.iterations());
    println!("residual: {:e}", result.final_residual());
    println!("point: {}", result.final_point);
    Ok(exit_code(result.status))
}

fn run_bench(args: BenchArgs) -> Result<u8> {
    let problem = match &args.problem {
        Some(path) => load_problem(path)?,
        None => generate(&args.gen.spec()?)?,
    };
    let op = problem.to_operator()?;
    let mut policies = vec![
        StepPolicy::Unit,
        StepPolicy::SigmaMaxGeneric,
        StepPolicy::Floored,
    ];
    if op.homogeneous_kind().is_some() {
        policies.push(StepPolicy::SigmaMaxSpecialized);
    }
    let setups = policies
        .iter()
        .map(|&p| args.solver.setup(&problem, p))
        .collect::<Result<Vec<_>>>()?;

    let results = std::thread::scope(|scope| {
        let handles: Vec<_> = setups
            .iter()
            .map(|setup| scope.spawn(|| run(&problem, setup)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect::<Result<Vec<_>>>()
    })?;

    if let Some(base) = &args.trace {
        for (policy, result) in policies.iter().zip(&results) {
            report::write_trace(&report::policy_trace_path(base, *policy), &result.trace)?;
        }
    }
    report::print_table(&policies, &results);
    let code = results
        .iter()
        .map(|r| exit_code(r.status))
        .max()
        .unwrap_or(0);
    Ok(code)
}

fn run_gen(args: GenArgs) -> Result<()> {
    let problem = generate(&args.gen.spec()?)?;
    let text = serialize_problem(&problem)?;
    match &args.out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}
