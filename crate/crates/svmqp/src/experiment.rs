use std::path::Path;
use std::time::Instant;

use svmqp_core::cmu::{solve_cmu, CmuOptions};
use svmqp_core::datagen::{gen_checkerboard, gen_halfmoon, HalfmoonSpec};
use svmqp_core::smo::{solve_gsmo, solve_rsmo, SmoOptions};
use svmqp_core::svm::{assemble_problem, gaussian_kernel, recover_bias, Dataset, SvmModel};
use svmqp_core::{Error, QpProblem, Solution, TracePoint};

use crate::config::{DataSource, ExperimentConfig, SolverKind, SolverSettings};
use crate::dataset::read_dataset;
use crate::error::Result;
use crate::report::{DiagnosticsReport, ExperimentReport, SCHEMA_VERSION};

/// Everything a run produces; the report is the serializable part.
#[derive(Clone, Debug)]
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub trace: Vec<TracePoint>,
    pub x: Vec<f64>,
}

/// Training set and evaluation set (`None`: evaluate on the training set).
pub fn load_data(cfg: &ExperimentConfig) -> Result<(Dataset, Option<Dataset>)> {
    match &cfg.data {
        DataSource::Halfmoon { d, delta, n } => {
            let (train, mut sampler) = gen_halfmoon(&HalfmoonSpec { d: *d, delta: *delta, n: *n, seed: cfg.seed })?;
            Ok((train, Some(sampler.dataset(cfg.test_size)?)))
        }
        DataSource::Checkerboard { n } => {
            let (train, mut sampler) = gen_checkerboard(*n, cfg.seed)?;
            Ok((train, Some(sampler.dataset(cfg.test_size)?)))
        }
        DataSource::File { train, test } => {
            let train = read_dataset(Path::new(train))?;
            let test = test.as_deref().map(|t| read_dataset(Path::new(t))).transpose()?;
            Ok((train, test))
        }
    }
}

pub fn cmu_options(s: &SolverSettings) -> CmuOptions {
    let d = CmuOptions::default();
    CmuOptions {
        eps_active: s.eps_active,
        kkt_tol: s.kkt_tol.unwrap_or(d.kkt_tol),
        inactive_cap: s.inactive_cap.unwrap_or(d.inactive_cap),
        reg: s.reg.or(d.reg),
        refine_steps: s.refine_steps.unwrap_or(d.refine_steps),
        max_cycles: s.max_cycles.unwrap_or(d.max_cycles),
        track_objective: s.track_objective.unwrap_or(d.track_objective),
    }
}

pub fn smo_options(s: &SolverSettings, seed: u64) -> SmoOptions {
    let d = SmoOptions::default();
    SmoOptions {
        max_iters: s.max_iter,
        kkt_tol: s.kkt_tol.unwrap_or(d.kkt_tol),
        eps_active: s.eps_active,
        seed,
        check_period: s.check_period,
        ..d
    }
}

pub fn solve(p: &QpProblem, solver: SolverKind, settings: &SolverSettings, seed: u64) -> Result<Solution> {
    Ok(match solver {
        SolverKind::Cmu => solve_cmu(p, &cmu_options(settings))?,
        SolverKind::Gsmo => solve_gsmo(p, &smo_options(settings, seed))?,
        SolverKind::Rsmo => solve_rsmo(p, &smo_options(settings, seed))?,
    })
}

/// Data → kernel → QP → solve → bias → test errors.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentRun> {
    cfg.validate()?;
    let (train, test) = load_data(cfg)?;
    let kernel = gaussian_kernel(train.points(), cfg.gamma)?;
    let p = assemble_problem(&kernel, train.labels(), cfg.upper)?;

    let start = Instant::now();
    let sol = solve(&p, cfg.solver, &cfg.settings, cfg.seed)?;
    let wall_time_s = start.elapsed().as_secs_f64();

    let eps = cfg.settings.eps_active.unwrap_or_else(|| p.default_eps());
    let (bias, bias_discrepancy) = match recover_bias(&kernel, train.labels(), &sol.x, cfg.upper, eps, &sol.kkt) {
        Ok(b) => (b.bias, b.discrepancy),
        Err(Error::DegenerateModel) => (-sol.kkt.mu, None),
        Err(e) => return Err(e.into()),
    };
    let model = SvmModel::new(train.clone(), cfg.gamma, cfg.upper, sol.x.clone(), bias, sol.kkt.mu)?;
    let eval = test.as_ref().unwrap_or(&train);
    let (err_pos, err_neg) = model.classification_errors(eval)?;

    let report = ExperimentReport {
        schema_version: SCHEMA_VERSION,
        version: env!("CARGO_PKG_VERSION").to_string(),
        solver: cfg.solver.name().to_string(),
        status: sol.status.into(),
        cycles: sol.cycles,
        inner_iterations: sol.iterations,
        wall_time_s,
        kkt_rel: sol.kkt.rel_residual,
        q_final: sol.objective,
        x_inf_norm: sol.kkt.x_inf_norm,
        err_pos,
        err_neg,
        test_points: test.as_ref().map_or(0, Dataset::len),
        bias,
        bias_discrepancy,
        support_vectors: model.support_vectors().len(),
        seed: cfg.seed,
        config: cfg.clone(),
        diagnostics: DiagnosticsReport::from(&sol.diagnostics),
    };
    Ok(ExperimentRun { report, trace: sol.trace, x: sol.x })
}
