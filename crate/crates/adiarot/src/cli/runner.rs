//! Single-experiment pipeline: build the model, trace gaps, construct
//! schedules, propagate, and write the output files.

use super::config::{ExperimentConfig, ModelKind, ScheduleKind};
use super::csv;
use super::svg::{self, Series};
use crate::evolve::{propagate, EvolutionReport, EvolveError, PropagateOptions};
use crate::models::{
    self, build_cluster, build_history, build_search, build_toric, cluster_target,
    history_target, toric_target, HistoryPath, ModelError, SectorSpec,
};
use crate::opalg::State;
use crate::schedule::{
    linear_schedule, local_adiabatic_schedule_with, search_rate_convention_schedule,
    BoundaryWindow, Schedule, ScheduleError, ScheduleOptions,
};
use crate::spectra::{gap_trace, SpectraError, SpectrumTrace};
use crate::tdham::{StagedHamiltonian, TdhamError};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Failures split by exit code: configuration errors exit 2, numerical
/// failures exit 3.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) | RunError::Io(_) => 3,
        }
    }
}

impl From<ModelError> for RunError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::ZeroFreshLinks(..) | ModelError::Tdham(_) | ModelError::Opalg(_) => {
                RunError::Numerical(e.to_string())
            }
            other => RunError::Config(other.to_string()),
        }
    }
}

impl From<ScheduleError> for RunError {
    fn from(e: ScheduleError) -> Self {
        match e {
            ScheduleError::NonPositiveTime(_)
            | ScheduleError::NonPositiveEpsilon(_)
            | ScheduleError::OverlapOutOfRange(_) => RunError::Config(e.to_string()),
            other => RunError::Numerical(other.to_string()),
        }
    }
}

impl From<SpectraError> for RunError {
    fn from(e: SpectraError) -> Self {
        RunError::Numerical(e.to_string())
    }
}

impl From<EvolveError> for RunError {
    fn from(e: EvolveError) -> Self {
        RunError::Numerical(e.to_string())
    }
}

impl From<TdhamError> for RunError {
    fn from(e: TdhamError) -> Self {
        RunError::Numerical(e.to_string())
    }
}

/// Scalar results of one experiment.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub model: ModelKind,
    /// Size parameter used for sweep aggregation (L, N, or site count).
    pub param: f64,
    /// Minimum first gap over the recorded trace rows.
    pub min_gap: f64,
    /// Duration of the propagated protocol.
    pub total_time: f64,
    /// For the search model, the closed-form rate-convention time whose
    /// scaling follows the inverse square-root-difference law; reported
    /// alongside the exact-coupling time.
    pub rate_convention_time: Option<f64>,
    pub final_fidelity: f64,
    pub norm_drift: f64,
    pub epsilon: f64,
}

/// Removes the file on drop unless committed, so failed runs leave no
/// partial outputs behind.
struct OutputGuard {
    path: PathBuf,
    committed: bool,
}

impl OutputGuard {
    fn write(path: &Path, contents: &str) -> Result<Self, RunError> {
        let mut file = fs::File::create(path)?;
        file.write_all(contents.as_bytes())?;
        Ok(Self {
            path: path.to_path_buf(),
            committed: false,
        })
    }

    fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_file(&self.path);
        }
    }
}

struct BuiltModel {
    hamiltonian: StagedHamiltonian,
    psi0: State,
    target: State,
    param: f64,
    /// Per-stage trace used for scheduling. Lattice rotations schedule
    /// against the effective two-level block (its in-block gap is flat
    /// and the decoupled full-spectrum levels below it carry no
    /// coupling); the other families use their full traces.
    schedule_traces: Vec<SpectrumTrace>,
}

fn build_model(config: &ExperimentConfig) -> Result<BuiltModel, RunError> {
    let model = config
        .model
        .ok_or_else(|| RunError::Config("no model selected".to_string()))?;
    let grid = config.grid.max(2);
    match model {
        ModelKind::Toric => {
            let sector: SectorSpec = config
                .sector
                .parse()
                .map_err(|e: ModelError| RunError::Config(e.to_string()))?;
            let build = build_toric(config.lx, config.ly, sector)?;
            let target = toric_target(config.lx, config.ly, sector)?;
            let block = models::effective_block(2.0, 0.0, std::f64::consts::FRAC_PI_4)?;
            let block_trace = gap_trace(&block, 0, grid, 2)?;
            let traces = (0..build.hamiltonian.num_stages())
                .map(|s| {
                    let mut t = block_trace.clone();
                    t.stage = s;
                    t
                })
                .collect();
            Ok(BuiltModel {
                hamiltonian: build.hamiltonian,
                psi0: build.psi0,
                target,
                param: (config.lx * config.ly) as f64,
                schedule_traces: traces,
            })
        }
        ModelKind::Cluster => {
            let build = build_cluster(config.lx, config.ly)?;
            let target = cluster_target(config.lx, config.ly)?;
            let block = models::effective_block(2.0, 0.0, std::f64::consts::FRAC_PI_4)?;
            let block_trace = gap_trace(&block, 0, grid, 2)?;
            let traces = (0..build.hamiltonian.num_stages())
                .map(|s| {
                    let mut t = block_trace.clone();
                    t.stage = s;
                    t
                })
                .collect();
            Ok(BuiltModel {
                hamiltonian: build.hamiltonian,
                psi0: build.psi0,
                target,
                param: (config.lx * config.ly) as f64,
                schedule_traces: traces,
            })
        }
        ModelKind::History => {
            let path: HistoryPath = config
                .path
                .parse()
                .map_err(|e: ModelError| RunError::Config(e.to_string()))?;
            let build = build_history(config.l, path)?;
            let target = history_target(config.l)?;
            let traces = (0..build.hamiltonian.num_stages())
                .map(|s| gap_trace(&build.hamiltonian, s, grid, 3))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(BuiltModel {
                hamiltonian: build.hamiltonian,
                psi0: build.psi0,
                target,
                param: config.l as f64,
                schedule_traces: traces,
            })
        }
        ModelKind::Search => {
            let a0 = config
                .effective_a0()
                .ok_or_else(|| RunError::Config("search needs --a0 or --n".to_string()))?;
            let build = build_search(a0)?;
            let traces = vec![gap_trace(&build.hamiltonian, 0, grid, 3)?];
            Ok(BuiltModel {
                hamiltonian: build.hamiltonian,
                psi0: build.psi0,
                target: build.target,
                param: config.n.map(|n| n as f64).unwrap_or(1.0 / (a0 * a0)),
                schedule_traces: traces,
            })
        }
    }
}

fn build_schedules(
    config: &ExperimentConfig,
    model: &BuiltModel,
) -> Result<Vec<Schedule>, RunError> {
    let stages = model.hamiltonian.stages();
    match config.schedule.kind {
        ScheduleKind::Linear => {
            let total: f64 = config.schedule.time;
            let range_sum: f64 = stages.iter().map(|s| s.theta_range().abs()).sum();
            stages
                .iter()
                .map(|s| {
                    let share = if range_sum > 0.0 {
                        total * s.theta_range().abs() / range_sum
                    } else {
                        total / stages.len() as f64
                    };
                    linear_schedule(s.theta_start, s.theta_end, share).map_err(RunError::from)
                })
                .collect()
        }
        ScheduleKind::Local => {
            let smoothing = config
                .schedule
                .smoothing
                .unwrap_or(config.model != Some(ModelKind::Search));
            let opts = ScheduleOptions {
                window: smoothing.then(BoundaryWindow::default),
            };
            model
                .schedule_traces
                .iter()
                .map(|trace| {
                    local_adiabatic_schedule_with(
                        trace,
                        config.schedule.epsilon,
                        config.schedule.coupling_floor,
                        &opts,
                    )
                    .map_err(RunError::from)
                })
                .collect()
        }
    }
}

/// Outcome of [`run`]: the summary plus the recorded rows.
#[derive(Debug)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub report: EvolutionReport,
}

/// Execute one experiment: build, trace, schedule, propagate, and write
/// the configured CSV/SVG outputs. Partial files are removed on failure.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let model_kind = config
        .model
        .ok_or_else(|| RunError::Config("no model selected".to_string()))?;
    let model = build_model(config)?;
    let schedules = build_schedules(config, &model)?;

    let opts = PropagateOptions {
        samples_per_stage: config.samples.max(64),
        max_dtheta: config.max_dtheta,
        ..PropagateOptions::default()
    };
    let report = propagate(
        &model.hamiltonian,
        &schedules,
        &model.psi0,
        &model.target,
        &opts,
    )?;

    let min_gap = report
        .overlap_trace
        .iter()
        .map(|r| r.gap1)
        .fold(f64::INFINITY, f64::min);

    let rate_convention_time = if model_kind == ModelKind::Search {
        let a0 = config.effective_a0().unwrap();
        Some(
            search_rate_convention_schedule(a0, config.schedule.epsilon, config.grid.max(2))?
                .total_time,
        )
    } else {
        None
    };

    let summary = RunSummary {
        model: model_kind,
        param: model.param,
        min_gap,
        total_time: report.total_time,
        rate_convention_time,
        final_fidelity: report.target_fidelity,
        norm_drift: report.norm_drift,
        epsilon: config.schedule.epsilon,
    };

    // write outputs; the SVG is a derived view and never alters the CSV
    let mut guards = Vec::new();
    if let Some(out) = &config.out {
        let mut buf = Vec::new();
        csv::write_trace(&mut buf, &report.overlap_trace)?;
        guards.push(OutputGuard::write(out, &String::from_utf8(buf).unwrap())?);
    }
    if let Some(plot) = &config.plot {
        let chart = render_plot(config, &report)?;
        guards.push(OutputGuard::write(plot, &chart)?);
    }
    for g in guards {
        g.commit();
    }

    Ok(RunOutcome { summary, report })
}

/// Gap-versus-normalized-time chart. History runs overlay the configured
/// path against the straight-line comparator; other models plot their
/// own first-gap trace.
fn render_plot(
    config: &ExperimentConfig,
    report: &EvolutionReport,
) -> Result<String, RunError> {
    let total = report.total_time.max(f64::MIN_POSITIVE);
    let own: Vec<(f64, f64)> = report
        .overlap_trace
        .iter()
        .map(|r| (r.t / total, r.gap1))
        .collect();
    let model_kind = config.model.unwrap();
    let mut series = vec![Series {
        label: match model_kind {
            ModelKind::History => config.path.clone(),
            _ => "gap".to_string(),
        },
        points: own,
    }];
    if model_kind == ModelKind::History {
        // straight-line comparator on its natural normalized time s = t/T
        let linear = build_history(config.l, HistoryPath::Linear)?;
        let trace = gap_trace(&linear.hamiltonian, 0, config.grid.max(2), 2)?;
        let pts: Vec<(f64, f64)> = (0..trace.len())
            .map(|i| (trace.thetas[i], trace.gap(i, 1)))
            .collect();
        series.push(Series {
            label: "straight-line".to_string(),
            points: pts,
        });
    }
    Ok(svg::line_chart(
        &format!("{model_kind} first gap"),
        "normalized time",
        "gap",
        &series,
    ))
}
