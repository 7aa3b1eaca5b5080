//! Trajectory execution and time-series emission.
//!
//! One CSV row per sampled instant, one JSON summary per run. Chain
//! violations do not abort the run: every sampled point is still written,
//! the violation count lands in the summary, and the caller turns a
//! nonzero count into a nonzero exit status. Divergent entropy production
//! serializes as the literal token `inf`, keeping divergence
//! distinguishable from overflow in downstream tooling.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use qsl_core::bounds::{bound_report, BoundError, BoundReport};
use qsl_core::gksl::{evolve, EvolveError};

use crate::scenario::{BuiltScenario, Scenario, ScenarioError};

/// Fixed CSV column order.
pub const CSV_COLUMNS: [&str; 15] = [
    "t",
    "speed_tr",
    "fss",
    "vs",
    "qfi",
    "current_xprime",
    "fisher_term_qfi",
    "entropy_term_qfi",
    "sigma_dot",
    "activity",
    "mobility_m",
    "mobility_mprime",
    "heat_flux",
    "entropy_flux",
    "purity",
];

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("integration failed: {0}")]
    Evolve(#[from] EvolveError),
    #[error("evaluation failed {0}")]
    Bound(#[from] BoundError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Min/max of bound/speed over the finite sampled points.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TightnessRange {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub rows: usize,
    pub chain_violations: usize,
    pub divergent_rows: usize,
    pub tightness_current: TightnessRange,
    pub tightness_qfi: TightnessRange,
    pub tightness_vs: TightnessRange,
    pub tightness_fss: TightnessRange,
    pub runtime_seconds: f64,
}

/// Speeds below this are excluded from tightness ratios (the ratio is
/// unstable against roundoff there).
const SPEED_FLOOR: f64 = 1e-12;

fn range_of(ratios: &[f64]) -> TightnessRange {
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if ratios.is_empty() {
        TightnessRange {
            min: f64::NAN,
            max: f64::NAN,
        }
    } else {
        TightnessRange { min, max }
    }
}

/// Integrate a built scenario and evaluate the bound report at every
/// stride-th point. Chain violations are collected, not fatal.
pub fn sample_reports(built: &BuiltScenario) -> Result<(Vec<BoundReport>, usize), RunError> {
    let trajectory = evolve(&built.model, &built.initial_state, built.t_span, built.dt)?;
    let mut reports = Vec::new();
    let mut violations = 0;
    for point in trajectory.points.iter().step_by(built.stride) {
        match bound_report(&built.model, &point.state, point.time) {
            Ok(report) => reports.push(report),
            Err(BoundError::ChainViolation { link, report, time }) => {
                log::error!("chain violation at t = {time}: {link}");
                violations += 1;
                reports.push(*report);
            }
            Err(other) => return Err(other.into()),
        }
    }
    Ok((reports, violations))
}

fn csv_row(report: &BoundReport) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        report.time,
        report.speed_tr,
        report.fss,
        report.vs,
        report.qfi,
        report.current_xprime,
        report.fisher_term_qfi,
        report.entropy_term_qfi,
        report.sigma_dot,
        report.activity,
        report.mobility_m,
        report.mobility_mprime,
        report.heat_flux,
        report.entropy_flux,
        report.purity,
    )
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), RunError> {
    let mut file = fs::File::create(path).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })?;
    file.write_all(contents).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Sibling path for the JSON summary: `results.csv` → `results.summary.json`.
pub fn summary_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("summary.json")
}

/// Run a scenario, write the CSV and the JSON summary, and return the
/// summary. The caller decides the exit status from `chain_violations`.
pub fn run_and_emit(
    scenario: &Scenario,
    csv_path: &Path,
    stride_override: Option<usize>,
) -> Result<RunSummary, RunError> {
    let start = Instant::now();
    let mut built = scenario.build()?;
    if let Some(stride) = stride_override {
        if stride == 0 {
            return Err(ScenarioError::InvalidStride.into());
        }
        built.stride = stride;
    }
    let (reports, chain_violations) = sample_reports(&built)?;

    let mut csv = String::with_capacity(reports.len() * 200);
    csv.push_str(&CSV_COLUMNS.join(","));
    csv.push('\n');
    let mut ratios: [Vec<f64>; 4] = Default::default();
    let mut divergent_rows = 0;
    for report in &reports {
        csv.push_str(&csv_row(report));
        if !report.is_finite() {
            divergent_rows += 1;
            continue;
        }
        if report.speed_tr > SPEED_FLOOR {
            ratios[0].push(report.current_xprime / report.speed_tr);
            ratios[1].push(report.qfi / report.speed_tr);
            ratios[2].push(report.vs / report.speed_tr);
            ratios[3].push(report.fss / report.speed_tr);
        }
    }
    write_file(csv_path, csv.as_bytes())?;

    let summary = RunSummary {
        rows: reports.len(),
        chain_violations,
        divergent_rows,
        tightness_current: range_of(&ratios[0]),
        tightness_qfi: range_of(&ratios[1]),
        tightness_vs: range_of(&ratios[2]),
        tightness_fss: range_of(&ratios[3]),
        runtime_seconds: start.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file(&summary_path(csv_path), format!("{json}\n").as_bytes())?;
    Ok(summary)
}
