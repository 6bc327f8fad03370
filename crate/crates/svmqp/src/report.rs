use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use svmqp_core::{Diagnostics, Status, StepKind, TracePoint};

use crate::config::ExperimentConfig;
use crate::error::{csv_err, io_err, HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    Stalled,
    IterationLimit,
}

impl From<Status> for RunStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::Converged => Self::Converged,
            Status::Stalled => Self::Stalled,
            Status::IterationLimit => Self::IterationLimit,
        }
    }
}

impl RunStatus {
    pub fn name(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::Stalled => "stalled",
            Self::IterationLimit => "iteration_limit",
        }
    }
}

/// Serializable copy of the solver's invariant counters.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub max_equality_violation: f64,
    pub max_bound_violation: f64,
    pub directions_checked: usize,
    pub direction_violations: usize,
    pub newton_steps: usize,
    pub newton_increases: usize,
    #[serde(default)]
    pub newton_rejected: usize,
    pub upcycle_steps: usize,
    pub upcycle_increases: usize,
    pub smo_increases: usize,
    pub max_relative_increase: f64,
    pub gradient_refreshes: usize,
}

impl From<&Diagnostics> for DiagnosticsReport {
    fn from(d: &Diagnostics) -> Self {
        Self {
            max_equality_violation: d.max_equality_violation,
            max_bound_violation: d.max_bound_violation,
            directions_checked: d.directions_checked,
            direction_violations: d.direction_violations,
            newton_steps: d.newton_steps,
            newton_increases: d.newton_increases,
            newton_rejected: d.newton_rejected,
            upcycle_steps: d.upcycle_steps,
            upcycle_increases: d.upcycle_increases,
            smo_increases: d.smo_increases,
            max_relative_increase: d.max_relative_increase,
            gradient_refreshes: d.gradient_refreshes,
        }
    }
}

/// One solver run. The JSON field names are the canonical schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub version: String,
    pub solver: String,
    pub status: RunStatus,
    /// Cholesky factorizations; CMU only.
    pub cycles: Option<usize>,
    pub inner_iterations: usize,
    pub wall_time_s: f64,
    pub kkt_rel: f64,
    pub q_final: f64,
    pub x_inf_norm: f64,
    pub err_pos: f64,
    pub err_neg: f64,
    /// Points the errors were measured on; `0` means the training set.
    pub test_points: usize,
    pub bias: f64,
    /// `|bias − free-SV estimate|`, when free support vectors exist.
    pub bias_discrepancy: Option<f64>,
    pub support_vectors: usize,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub diagnostics: DiagnosticsReport,
}

impl ExperimentReport {
    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl std::str::FromStr for Format {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "text" | "txt" => Ok(Self::Text),
            other => Err(HarnessError::Config(format!("unknown format {other:?}"))),
        }
    }
}

/// A report with the row label used in summary tables.
#[derive(Clone, Debug)]
pub struct LabeledReport<'a> {
    pub label: &'a str,
    pub report: &'a ExperimentReport,
}

pub fn to_json(reports: &[ExperimentReport]) -> serde_json::Result<String> {
    if let [one] = reports {
        serde_json::to_string_pretty(one)
    } else {
        serde_json::to_string_pretty(reports)
    }
}

const CSV_HEADER: [&str; 16] = [
    "label",
    "solver",
    "status",
    "cycles",
    "inner_iterations",
    "wall_time_s",
    "kkt_rel",
    "q_final",
    "x_inf_norm",
    "err_pos",
    "err_neg",
    "test_points",
    "bias",
    "support_vectors",
    "seed",
    "gamma",
];

/// One row per report.
pub fn write_csv<W: Write>(w: W, rows: &[LabeledReport<'_>]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for LabeledReport { label, report: r } in rows {
        out.write_record([
            label.to_string(),
            r.solver.clone(),
            r.status.name().to_string(),
            r.cycles.map(|c| c.to_string()).unwrap_or_default(),
            r.inner_iterations.to_string(),
            r.wall_time_s.to_string(),
            r.kkt_rel.to_string(),
            r.q_final.to_string(),
            r.x_inf_norm.to_string(),
            r.err_pos.to_string(),
            r.err_neg.to_string(),
            r.test_points.to_string(),
            r.bias.to_string(),
            r.support_vectors.to_string(),
            r.seed.to_string(),
            r.config.gamma.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Fixed-width table in the column order
/// `label, cycles, iterations, time, KKT violation, q(x_final), ‖x_final‖∞,
/// rel class. errors`.
pub fn format_text(key: &str, rows: &[LabeledReport<'_>]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{key:>8} {:>6} {:>10} {:>9} {:>13} {:>11} {:>11}  {}",
        "cycles", "iterations", "time", "KKT violation", "q(x_final)", "|x_final|", "rel class. errors"
    );
    for LabeledReport { label, report: r } in rows {
        let cycles = r.cycles.map_or_else(|| "-".to_string(), |c| c.to_string());
        let flag = if r.converged() { "" } else { "  (not converged)" };
        let _ = writeln!(
            s,
            "{label:>8} {cycles:>6} {:>10} {:>9.2} {:>13.1e} {:>11.1e} {:>11.1e}  {:.4}, {:.4}{flag}",
            r.inner_iterations, r.wall_time_s, r.kkt_rel, r.q_final, r.x_inf_norm, r.err_pos, r.err_neg
        );
    }
    s
}

pub fn emit_report(path: &Path, rows: &[LabeledReport<'_>], format: Format) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    match format {
        Format::Json => {
            let reports: Vec<ExperimentReport> = rows.iter().map(|r| r.report.clone()).collect();
            let text = to_json(&reports).map_err(|source| HarnessError::Json { path: path.into(), source })?;
            w.write_all(text.as_bytes()).map_err(io_err(path))?;
            w.write_all(b"\n").map_err(io_err(path))?;
        }
        Format::Csv => write_csv(&mut w, rows).map_err(csv_err(path))?,
        Format::Text => w.write_all(format_text("run", rows).as_bytes()).map_err(io_err(path))?,
    }
    w.flush().map_err(io_err(path))
}

pub fn read_report(path: &Path) -> Result<ExperimentReport> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| HarnessError::Json { path: path.into(), source })
}

fn kind_name(k: StepKind) -> &'static str {
    match k {
        StepKind::Start => "start",
        StepKind::UpCycle => "upcycle",
        StepKind::Newton => "newton",
        StepKind::Smo => "smo",
    }
}

/// Plot data: `label,solver,iteration,q,kind`.
pub fn write_traces<W: Write>(w: W, traces: &[(&str, &str, &[TracePoint])]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["label", "solver", "iteration", "q", "kind"])?;
    for (label, solver, points) in traces {
        for t in *points {
            out.write_record([
                label.to_string(),
                solver.to_string(),
                t.iteration.to_string(),
                t.q.to_string(),
                kind_name(t.kind).to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
