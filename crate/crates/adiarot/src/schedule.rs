//! θ(t) schedule construction: uniform-rate, local-adiabatic, and the
//! rotation-search closed-form convention.
//!
//! The local-adiabatic rule sets `dθ/dt = ε·g₁(θ)²/max(c₁(θ), floor)`
//! from a spectrum trace; total time is the trapezoid quadrature of
//! `dt/dθ` over the trace grid. `ε` is an explicit dimensionless rate
//! prefactor (default 0.05) and the rate is linear in it, so halving ε
//! doubles T exactly.

use crate::spectra::{bound_report, SpectraError, SpectrumTrace};
use crate::tdham::StagedHamiltonian;
use thiserror::Error;

/// Default adiabatic rate prefactor.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// Default lower cap on the coupling; a vanishing coupling means the
/// level is decoupled, so the rate is capped rather than sent to
/// infinity.
pub const DEFAULT_COUPLING_FLOOR: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("total time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("rate prefactor epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("first gap vanishes on the grid (g1={gap:.3e} at theta={theta}); protocol failure")]
    VanishingGap { theta: f64, gap: f64 },
    #[error("trace has {0} points; need at least 2")]
    TraceTooShort(usize),
    #[error("search overlap must lie in (0,1), got {0}")]
    OverlapOutOfRange(f64),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
}

/// A monotone map from physical time to θ for one stage.
#[derive(Debug, Clone)]
pub struct Schedule {
    pub stage: usize,
    /// `(t, θ)` samples; `t` strictly increasing, θ monotone.
    pub samples: Vec<(f64, f64)>,
    pub total_time: f64,
    pub epsilon: f64,
}

impl Schedule {
    /// θ at time `t` by linear interpolation between samples.
    pub fn theta_at(&self, t: f64) -> f64 {
        let samples = &self.samples;
        if t <= samples[0].0 {
            return samples[0].1;
        }
        if t >= samples[samples.len() - 1].0 {
            return samples[samples.len() - 1].1;
        }
        let mut lo = 0;
        let mut hi = samples.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if samples[mid].0 <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (t0, th0) = samples[lo];
        let (t1, th1) = samples[hi];
        if t1 == t0 {
            th0
        } else {
            th0 + (th1 - th0) * (t - t0) / (t1 - t0)
        }
    }

    pub fn theta_start(&self) -> f64 {
        self.samples[0].1
    }

    pub fn theta_end(&self) -> f64 {
        self.samples[self.samples.len() - 1].1
    }

    /// Average |dθ/dt| over the stage.
    pub fn mean_rate(&self) -> f64 {
        (self.theta_end() - self.theta_start()).abs() / self.total_time
    }
}

/// Constant-rate schedule: `θ(t) = θ_start + (θ_end−θ_start)·t/T`.
pub fn linear_schedule(
    theta_start: f64,
    theta_end: f64,
    total_time: f64,
) -> Result<Schedule, ScheduleError> {
    if total_time <= 0.0 {
        return Err(ScheduleError::NonPositiveTime(total_time));
    }
    let n = 65;
    let samples = (0..n)
        .map(|i| {
            let x = i as f64 / (n - 1) as f64;
            (
                total_time * x,
                theta_start + (theta_end - theta_start) * x,
            )
        })
        .collect();
    Ok(Schedule {
        stage: 0,
        samples,
        total_time,
        epsilon: 0.0,
    })
}

/// Optional stage-boundary rate window. The local-adiabatic rule alone
/// starts and stops the sweep abruptly, which imprints an O(ε) kick at
/// each stage edge; ramping the rate smoothly to a small floor at the
/// edges removes the kick at the cost of a bounded increase in stage
/// time.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryWindow {
    /// Fraction of the θ range used for each edge ramp.
    pub ramp_fraction: f64,
    /// Smallest window value (keeps stage time finite).
    pub floor: f64,
}

impl Default for BoundaryWindow {
    fn default() -> Self {
        Self {
            ramp_fraction: 0.2,
            floor: 0.02,
        }
    }
}

impl BoundaryWindow {
    fn value(&self, x: f64) -> f64 {
        fn smoothstep(u: f64) -> f64 {
            let u = u.clamp(0.0, 1.0);
            u * u * (3.0 - 2.0 * u)
        }
        let up = smoothstep(x / self.ramp_fraction);
        let down = smoothstep((1.0 - x) / self.ramp_fraction);
        (up * down).max(self.floor)
    }
}

/// Knobs for [`local_adiabatic_schedule_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ScheduleOptions {
    pub window: Option<BoundaryWindow>,
}

/// Local-adiabatic schedule from a spectrum trace:
/// `dθ/dt = ε·g₁(θ)²/max(c₁(θ), coupling_floor)`, with samples on the
/// trace grid and total time from trapezoid quadrature of `dt/dθ`.
///
/// When the trace carries a second excited coupling that exceeds the
/// first at a grid point, a 0.5 safety factor is applied to ε there.
pub fn local_adiabatic_schedule(
    trace: &SpectrumTrace,
    epsilon: f64,
    coupling_floor: f64,
) -> Result<Schedule, ScheduleError> {
    local_adiabatic_schedule_with(trace, epsilon, coupling_floor, &ScheduleOptions::default())
}

/// [`local_adiabatic_schedule`] with boundary smoothing options.
pub fn local_adiabatic_schedule_with(
    trace: &SpectrumTrace,
    epsilon: f64,
    coupling_floor: f64,
    opts: &ScheduleOptions,
) -> Result<Schedule, ScheduleError> {
    let rates = local_rates(trace, epsilon, coupling_floor)?;
    integrate_schedule(trace, rates, epsilon, opts)
}

fn local_rates(
    trace: &SpectrumTrace,
    epsilon: f64,
    coupling_floor: f64,
) -> Result<Vec<f64>, ScheduleError> {
    if epsilon <= 0.0 {
        return Err(ScheduleError::NonPositiveEpsilon(epsilon));
    }
    if trace.len() < 2 {
        return Err(ScheduleError::TraceTooShort(trace.len()));
    }
    let mut rates = Vec::with_capacity(trace.len());
    for i in 0..trace.len() {
        let g1 = trace.gap(i, 1);
        if g1 <= 1e-12 {
            return Err(ScheduleError::VanishingGap {
                theta: trace.thetas[i],
                gap: g1,
            });
        }
        let c1 = trace.couplings[i].first().copied().unwrap_or(0.0);
        let c2 = trace.couplings[i].get(1).copied().unwrap_or(0.0);
        let eps_here = if c2 > c1 { epsilon * 0.5 } else { epsilon };
        rates.push(eps_here * g1 * g1 / c1.max(coupling_floor));
    }
    Ok(rates)
}

fn integrate_schedule(
    trace: &SpectrumTrace,
    mut rates: Vec<f64>,
    epsilon: f64,
    opts: &ScheduleOptions,
) -> Result<Schedule, ScheduleError> {
    let n = trace.len();
    if let Some(window) = &opts.window {
        for (i, r) in rates.iter_mut().enumerate() {
            let x = i as f64 / (n - 1) as f64;
            *r *= window.value(x);
        }
    }
    let mut samples = Vec::with_capacity(n);
    let mut t = 0.0;
    samples.push((0.0, trace.thetas[0]));
    for i in 0..n - 1 {
        let dtheta = (trace.thetas[i + 1] - trace.thetas[i]).abs();
        let dt = dtheta * 0.5 * (1.0 / rates[i] + 1.0 / rates[i + 1]);
        t += dt;
        samples.push((t, trace.thetas[i + 1]));
    }
    Ok(Schedule {
        stage: trace.stage,
        samples,
        total_time: t,
        epsilon,
    })
}

/// Local-adiabatic schedule whose coupling is the refined transition-rate
/// bound (the square root of the per-level refined right-hand side for
/// the first excited level) instead of the raw trace coupling. Only
/// applicable to single-driving-block stages.
pub fn refined_coupling_schedule(
    h: &StagedHamiltonian,
    stage: usize,
    trace: &SpectrumTrace,
    epsilon: f64,
    coupling_floor: f64,
    opts: &ScheduleOptions,
) -> Result<Schedule, ScheduleError> {
    if epsilon <= 0.0 {
        return Err(ScheduleError::NonPositiveEpsilon(epsilon));
    }
    if trace.len() < 2 {
        return Err(ScheduleError::TraceTooShort(trace.len()));
    }
    let mut rates = Vec::with_capacity(trace.len());
    for i in 0..trace.len() {
        let g1 = trace.gap(i, 1);
        if g1 <= 1e-12 {
            return Err(ScheduleError::VanishingGap {
                theta: trace.thetas[i],
                gap: g1,
            });
        }
        let report = bound_report(h, stage, trace.thetas[i], 1)?;
        let c_ref = report.levels[0].rhs_refined.max(0.0).sqrt();
        rates.push(epsilon * g1 * g1 / c_ref.max(coupling_floor));
    }
    integrate_schedule(trace, rates, epsilon, opts)
}

/// Rotation-search schedule in the sine-of-θ convention: with
/// `u = sinθ`, the rate is `du/dt = ε·g(u)²/a₀` where `g = 1 − u·√(1−a₀²)`
/// is the first gap. The cumulative time has the closed form
/// `t(u) = a₀/(ε·b)·[1/(1−b) − 1/(1−b·u)]`, so the total is
/// `T = a₀/(ε·(1−b))`, the inverse-difference-of-square-roots law when
/// `a₀ = 1/√N`. θ runs from π/2 down to 0.
pub fn search_rate_convention_schedule(
    a0: f64,
    epsilon: f64,
    grid_points: usize,
) -> Result<Schedule, ScheduleError> {
    if epsilon <= 0.0 {
        return Err(ScheduleError::NonPositiveEpsilon(epsilon));
    }
    if !(0.0..1.0).contains(&a0) || a0 == 0.0 {
        return Err(ScheduleError::OverlapOutOfRange(a0));
    }
    let n = grid_points.max(2);
    let b = (1.0 - a0 * a0).sqrt();
    let cumulative = |u: f64| a0 / (epsilon * b) * (1.0 / (1.0 - b) - 1.0 / (1.0 - b * u));
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let u = 1.0 - i as f64 / (n - 1) as f64;
        samples.push((cumulative(u), u.asin()));
    }
    let total_time = samples[n - 1].0;
    Ok(Schedule {
        stage: 0,
        samples,
        total_time,
        epsilon,
    })
}
