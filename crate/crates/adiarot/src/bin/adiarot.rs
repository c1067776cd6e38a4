//! Experiment runner for staged adiabatic-rotation protocols.
//!
//! Subcommands build one of the four protocol families, trace gaps,
//! construct schedules, propagate, and write CSV traces plus optional
//! SVG plots; `sweep` runs scaling studies and `verify` runs the
//! property suites. Exit codes: 0 success, 2 configuration error,
//! 3 numerical failure.

use adiarot::cli::{
    run, sweep, verify, ExperimentConfig, ModelKind, RunError, ScheduleKind, SweepSpec,
};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "adiarot",
    about = "staged adiabatic-rotation protocol experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// JSON config file; command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Trace CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG plot output path.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Schedule kind.
    #[arg(long, value_parser = parse_schedule_kind)]
    schedule: Option<ScheduleKind>,
    /// Total time for linear schedules.
    #[arg(long)]
    time: Option<f64>,
    /// Rate prefactor for local schedules.
    #[arg(long)]
    epsilon: Option<f64>,
    /// θ grid points per stage.
    #[arg(long)]
    grid: Option<usize>,
    /// Seed for randomized property suites.
    #[arg(long)]
    seed: Option<u64>,
    /// Stage-boundary rate smoothing for local schedules (on|off).
    #[arg(long, value_parser = parse_on_off)]
    smoothing: Option<bool>,
    /// Recorded samples per stage.
    #[arg(long)]
    samples: Option<usize>,
}

fn parse_schedule_kind(s: &str) -> Result<ScheduleKind, String> {
    match s {
        "linear" => Ok(ScheduleKind::Linear),
        "local" => Ok(ScheduleKind::Local),
        other => Err(format!("expected linear|local, got '{other}'")),
    }
}

fn parse_on_off(s: &str) -> Result<bool, String> {
    match s {
        "on" | "true" | "1" => Ok(true),
        "off" | "false" | "0" => Ok(false),
        other => Err(format!("expected on|off, got '{other}'")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Torus-lattice stabilizer preparation.
    Toric {
        #[arg(long, default_value_t = 2)]
        lx: usize,
        #[arg(long, default_value_t = 2)]
        ly: usize,
        /// Topological sector loops: none|h|v|hv.
        #[arg(long)]
        sector: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Grid graph-state preparation.
    Cluster {
        #[arg(long, default_value_t = 2)]
        lx: usize,
        #[arg(long, default_value_t = 3)]
        ly: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Clock-register chain interpolation.
    History {
        #[arg(long, default_value_t = 6)]
        l: usize,
        /// linear | stepwise | single_rotation.
        #[arg(long)]
        path: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Three-level search sweep.
    Search {
        /// Overlap of the known state with the marked state.
        #[arg(long)]
        a0: Option<f64>,
        /// Search-space size; sets a0 = 1/sqrt(N).
        #[arg(long)]
        n: Option<u64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a parameter sweep and fit scaling exponents.
    Sweep {
        /// Base model: toric|cluster|history|search.
        #[arg(long, value_parser = parse_model)]
        model: ModelKind,
        /// Swept parameter and values, e.g. l=4,6,8 or n=4,16,64.
        #[arg(long)]
        vary: String,
        /// History path for history sweeps.
        #[arg(long)]
        path: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the property suites.
    Verify {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    match s {
        "toric" => Ok(ModelKind::Toric),
        "cluster" => Ok(ModelKind::Cluster),
        "history" => Ok(ModelKind::History),
        "search" => Ok(ModelKind::Search),
        other => Err(format!("unknown model '{other}'")),
    }
}

fn load_config(common: &CommonArgs) -> Result<ExperimentConfig, RunError> {
    let mut config = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text)
                .map_err(|e| RunError::Config(format!("bad config: {e}")))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &common.out {
        config.out = Some(out.clone());
    }
    if let Some(plot) = &common.plot {
        config.plot = Some(plot.clone());
    }
    if let Some(kind) = common.schedule {
        config.schedule.kind = kind;
    }
    if let Some(time) = common.time {
        config.schedule.time = time;
    }
    if let Some(eps) = common.epsilon {
        config.schedule.epsilon = eps;
    }
    if let Some(grid) = common.grid {
        config.grid = grid;
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(smoothing) = common.smoothing {
        config.schedule.smoothing = Some(smoothing);
    }
    if let Some(samples) = common.samples {
        config.samples = samples;
    }
    Ok(config)
}

fn execute(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Toric {
            lx,
            ly,
            sector,
            common,
        } => {
            let mut config = load_config(&common)?;
            config.model = Some(ModelKind::Toric);
            config.lx = lx;
            config.ly = ly;
            if let Some(sector) = sector {
                config.sector = sector;
            }
            print_summary(&run(&config)?.summary);
            Ok(())
        }
        Command::Cluster { lx, ly, common } => {
            let mut config = load_config(&common)?;
            config.model = Some(ModelKind::Cluster);
            config.lx = lx;
            config.ly = ly;
            print_summary(&run(&config)?.summary);
            Ok(())
        }
        Command::History { l, path, common } => {
            let mut config = load_config(&common)?;
            config.model = Some(ModelKind::History);
            config.l = l;
            if let Some(path) = path {
                config.path = path;
            }
            print_summary(&run(&config)?.summary);
            Ok(())
        }
        Command::Search { a0, n, common } => {
            let mut config = load_config(&common)?;
            config.model = Some(ModelKind::Search);
            if a0.is_some() {
                config.a0 = a0;
            }
            if n.is_some() {
                config.n = n;
            }
            print_summary(&run(&config)?.summary);
            Ok(())
        }
        Command::Sweep {
            model,
            vary,
            path,
            common,
        } => {
            let mut config = load_config(&common)?;
            config.model = Some(model);
            if let Some(path) = path {
                config.path = path;
            }
            let spec: SweepSpec = vary.parse().map_err(RunError::Config)?;
            let out = config.out.take();
            let outcome = sweep(&config, &spec, out.as_deref())?;
            for row in &outcome.rows {
                println!(
                    "param={} min_gap={:.6e} total_time={:.6e} fidelity={:.6}",
                    row.param, row.min_gap, row.total_time, row.final_fidelity
                );
            }
            if let Some(slope) = outcome.gap_slope {
                println!("gap_slope={slope:.4}");
            }
            if let Some(slope) = outcome.time_slope {
                println!("time_slope={slope:.4}");
            }
            Ok(())
        }
        Command::Verify { seed } => {
            let mut failed = false;
            for (name, result) in verify::run_all(seed) {
                match result {
                    Ok(()) => println!("ok      {name}"),
                    Err(why) => {
                        failed = true;
                        println!("FAILED  {name}: {why}");
                    }
                }
            }
            if failed {
                Err(RunError::Numerical("property suite failure".to_string()))
            } else {
                Ok(())
            }
        }
    }
}

fn print_summary(summary: &adiarot::cli::RunSummary) {
    println!(
        "model={} param={} min_gap={:.6e} total_time={:.6e} fidelity={:.9} norm_drift={:.3e}",
        summary.model,
        summary.param,
        summary.min_gap,
        summary.total_time,
        summary.final_fidelity,
        summary.norm_drift
    );
    if let Some(t) = summary.rate_convention_time {
        println!("rate_convention_time={t:.6e}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
