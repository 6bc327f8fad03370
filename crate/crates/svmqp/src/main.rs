use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use svmqp::config::{default_seed, parse_upper, DataSource, ExperimentConfig, SolverKind, SolverSettings, DEFAULT_TEST_SIZE};
use svmqp::dataset::{read_dataset, write_dataset};
use svmqp::experiment::{run_experiment, solve};
use svmqp::report::{emit_report, format_text, to_json, write_csv, write_traces, Format, LabeledReport};
use svmqp::tables::{run_table, table_key};
use svmqp_core::datagen::{gen_checkerboard, gen_halfmoon, HalfmoonSpec};
use svmqp_core::oracle::reference_solution;
use svmqp_core::svm::{assemble_problem, gaussian_kernel};
use svmqp_core::{Matrix, QpProblem};

const EXIT_NOT_CONVERGED: u8 = 2;

#[derive(Parser)]
#[command(name = "svmqp", version, about = "Kernel-SVM dual QP solvers and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset as CSV.
    Gen(GenArgs),
    /// Train a Gaussian-kernel SVM and report solver statistics.
    Train(TrainArgs),
    /// Rerun one of the benchmark tables.
    Bench(BenchArgs),
    /// Compare the CMU solution with an independent reference solver.
    OracleCheck(OracleArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Halfmoon,
    Checkerboard,
}

#[derive(Args)]
struct GenSpec {
    /// Generator used when no --data file is given.
    #[arg(long, value_enum, default_value = "halfmoon")]
    kind: Kind,
    #[arg(long, default_value_t = 500)]
    n: usize,
    /// Half-moon dimension.
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Half-moon shift.
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
}

impl GenSpec {
    fn source(&self) -> DataSource {
        match self.kind {
            Kind::Halfmoon => DataSource::Halfmoon { d: self.d, delta: self.delta, n: self.n },
            Kind::Checkerboard => DataSource::Checkerboard { n: self.n },
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    spec: GenSpec,
    #[arg(long)]
    seed: Option<u64>,
    /// Training set output.
    #[arg(long)]
    out: PathBuf,
    /// Also write this many test points from the same distribution.
    #[arg(long)]
    test_out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TEST_SIZE)]
    test_size: usize,
    /// Write a header row.
    #[arg(long)]
    header: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// Training CSV; without it a dataset is generated.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Evaluation CSV for --data (default: the training set).
    #[arg(long)]
    test_data: Option<PathBuf>,
    #[command(flatten)]
    spec: GenSpec,
    #[arg(long)]
    gamma: f64,
    /// Box bound; `inf` for the hard-margin problem.
    #[arg(long = "C", default_value = "inf", value_parser = parse_c)]
    c: f64,
    #[arg(long, default_value = "cmu", value_parser = parse_solver)]
    solver: SolverKind,
    #[arg(long)]
    seed: Option<u64>,
    /// Absolute active-set tolerance.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    kkt_tol: Option<f64>,
    /// SMO step limit.
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    max_cycles: Option<usize>,
    #[arg(long)]
    reg: Option<f64>,
    #[arg(long)]
    refine_steps: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TEST_SIZE)]
    test_size: usize,
    /// Report destination (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "text", value_parser = parse_format)]
    format: Format,
    /// Write the objective trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Table number (1-5).
    #[arg(long)]
    table: u32,
    /// Reduced problem size; required for table 3.
    #[arg(long)]
    scaled: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Run rows concurrently (wall times then overlap).
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct OracleArgs {
    /// Dataset CSV (at most 12 points use exhaustive enumeration); without
    /// it random instances are checked.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long = "C", default_value = "inf", value_parser = parse_c)]
    c: f64,
    #[arg(long, default_value = "cmu", value_parser = parse_solver)]
    solver: SolverKind,
    /// Random instances to check.
    #[arg(long, default_value_t = 20)]
    count: usize,
    /// Size of random instances.
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Allowed relative objective difference.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    max_iter: Option<usize>,
}

fn parse_c(s: &str) -> Result<f64, String> {
    parse_upper(s).map_err(|e| e.to_string())
}

fn parse_solver(s: &str) -> Result<SolverKind, String> {
    s.parse().map_err(|e: svmqp::HarnessError| e.to_string())
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: svmqp::HarnessError| e.to_string())
}

fn main() -> ExitCode {
    // Exit code 2 is reserved for non-convergence, so usage errors exit 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::Bench(a) => cmd_bench(a),
        Command::OracleCheck(a) => cmd_oracle(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_gen(a: GenArgs) -> anyhow::Result<u8> {
    let seed = a.seed.unwrap_or_else(default_seed);
    let (train, mut sampler) = match a.spec.source() {
        DataSource::Halfmoon { d, delta, n } => gen_halfmoon(&HalfmoonSpec { d, delta, n, seed })?,
        DataSource::Checkerboard { n } => gen_checkerboard(n, seed)?,
        DataSource::File { .. } => unreachable!(),
    };
    write_dataset(&a.out, &train, a.header)?;
    if let Some(path) = &a.test_out {
        write_dataset(path, &sampler.dataset(a.test_size)?, a.header)?;
    }
    Ok(0)
}

fn cmd_train(a: TrainArgs) -> anyhow::Result<u8> {
    let data = match &a.data {
        Some(p) => DataSource::File {
            train: p.to_string_lossy().into_owned(),
            test: a.test_data.as_ref().map(|t| t.to_string_lossy().into_owned()),
        },
        None => a.spec.source(),
    };
    let cfg = ExperimentConfig {
        data,
        gamma: a.gamma,
        upper: a.c,
        solver: a.solver,
        settings: SolverSettings {
            eps_active: a.eps,
            kkt_tol: a.kkt_tol,
            max_iter: a.max_iter,
            max_cycles: a.max_cycles,
            reg: a.reg,
            refine_steps: a.refine_steps,
            ..SolverSettings::default()
        },
        test_size: a.test_size,
        seed: a.seed.unwrap_or_else(default_seed),
    };
    let run = run_experiment(&cfg)?;
    let rows = [LabeledReport { label: cfg.solver.name(), report: &run.report }];
    match &a.out {
        Some(path) => emit_report(path, &rows, a.format)?,
        None => {
            let mut out = std::io::stdout().lock();
            match a.format {
                Format::Json => writeln!(out, "{}", to_json(std::slice::from_ref(&run.report))?)?,
                Format::Csv => write_csv(&mut out, &rows)?,
                Format::Text => write!(out, "{}", format_text("solver", &rows))?,
            }
        }
    }
    if let Some(path) = &a.trace {
        let f = std::fs::File::create(path).with_context(|| path.display().to_string())?;
        write_traces(f, &[(cfg.solver.name(), cfg.solver.name(), &run.trace)])?;
    }
    Ok(if run.report.converged() { 0 } else { EXIT_NOT_CONVERGED })
}

fn cmd_bench(a: BenchArgs) -> anyhow::Result<u8> {
    let seed = a.seed.unwrap_or_else(default_seed);
    let result = run_table(a.table, a.scaled, seed, &a.out, a.parallel)?;
    print!("{}", std::fs::read_to_string(&result.summary_path)?);
    println!("(column key: {}; reports in {})", table_key(a.table), a.out.display());
    Ok(if result.all_expected_converged() { 0 } else { EXIT_NOT_CONVERGED })
}

fn random_instance(rng: &mut ChaCha8Rng, n: usize, upper: f64) -> anyhow::Result<QpProblem> {
    let m = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let mut h = m.transpose().matmul(&m)?;
    h.add_diagonal(1.0);
    let mut z: Vec<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    z[0] = 1.0;
    z[n - 1] = -1.0;
    Ok(QpProblem::svm(h, z, upper)?)
}

fn cmd_oracle(a: OracleArgs) -> anyhow::Result<u8> {
    let seed = a.seed.unwrap_or_else(default_seed);
    let settings = SolverSettings { max_iter: a.max_iter, ..SolverSettings::default() };
    let problems: Vec<QpProblem> = match &a.data {
        Some(path) => {
            let ds = read_dataset(path)?;
            let k = gaussian_kernel(ds.points(), a.gamma)?;
            vec![assemble_problem(&k, ds.labels(), a.c)?]
        }
        None => {
            if a.n < 2 {
                bail!("--n must be at least 2");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..a.count).map(|_| random_instance(&mut rng, a.n, a.c)).collect::<anyhow::Result<_>>()?
        }
    };
    let mut failures = 0;
    for (k, p) in problems.iter().enumerate() {
        let reference = reference_solution(p)?;
        let sol = solve(p, a.solver, &settings, seed)?;
        let rel = (sol.objective - reference.objective).abs() / reference.objective.abs().max(1.0);
        let ok = rel <= a.tol;
        failures += usize::from(!ok);
        println!(
            "{} instance {k:>3} n={:<3} q={:.12e} reference={:.12e} rel_diff={rel:.2e} kkt={:.2e}",
            if ok { "PASS" } else { "FAIL" },
            p.dim(),
            sol.objective,
            reference.objective,
            sol.kkt.rel_residual
        );
    }
    if failures > 0 {
        bail!("{failures} of {} instances differ from the reference by more than {:e}", problems.len(), a.tol);
    }
    Ok(0)
}
