//! Clock-register chain interpolations: the straight-line comparator,
//! the stepwise per-link rotation, and the single end-rotation.

use super::ModelError;
use crate::opalg::{HilbertLayout, MultiSiteOperator, SiteOperator, State, C64};
use crate::tdham::{DriveSpec, Stage, StagedHamiltonian, ThetaCoefficient};
use nalgebra::DVector;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

/// Evolution path through the clock-register family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistoryPath {
    /// One stage interpolating `(1−s)·H_start + s·H_end` with the stage
    /// parameter `s ∈ [0,1]` itself.
    Linear,
    /// One stage per chain link, each rotating a projector into the
    /// corresponding link term, θ: 0 → π/4.
    Stepwise,
    /// All link terms static; a single rotation on the first two clock
    /// states, θ: π/2 → π/4.
    SingleRotation,
}

impl std::str::FromStr for HistoryPath {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, ModelError> {
        match s {
            "linear" => Ok(HistoryPath::Linear),
            "stepwise" => Ok(HistoryPath::Stepwise),
            "single_rotation" => Ok(HistoryPath::SingleRotation),
            other => Err(ModelError::InvalidPath(other.to_string())),
        }
    }
}

/// A built clock-register protocol.
#[derive(Debug)]
pub struct HistoryBuild {
    pub steps: usize,
    pub path: HistoryPath,
    pub hamiltonian: StagedHamiltonian,
    /// Starting state: the first clock basis state.
    pub psi0: State,
}

fn projector(level: usize, coeff: f64) -> MultiSiteOperator {
    MultiSiteOperator::pauli(coeff, 0, SiteOperator::Projector(level))
}

fn transition(a: usize, b: usize, coeff: f64) -> MultiSiteOperator {
    MultiSiteOperator::pauli(coeff, 0, SiteOperator::Transition(a, b))
}

/// The three terms of one chain-link projector
/// `(|t⟩−|t+1⟩)(⟨t|−⟨t+1|)/2`.
fn link_terms(t: usize) -> [MultiSiteOperator; 3] {
    [
        projector(t, 0.5),
        projector(t + 1, 0.5),
        transition(t, t + 1, -0.5),
    ]
}

/// Build the (L+1)-dimensional clock-register protocol for `steps`
/// circuit steps along the given path; the start state is the first
/// clock basis state in every case.
pub fn build_history(steps: usize, path: HistoryPath) -> Result<HistoryBuild, ModelError> {
    if steps < 1 {
        return Err(ModelError::HistoryTooShort(steps));
    }
    let dim = steps + 1;
    let layout = HilbertLayout::single_level_space(dim);
    let mut psi0 = State::zeros(dim);
    psi0[0] = C64::new(1.0, 0.0);

    let hamiltonian = match path {
        HistoryPath::Stepwise => {
            // stage t rotates |γ_{t+1}⟩⟨γ_{t+1}| into the link term on
            // (t, t+1); earlier stages frozen at π/4, later ones pending
            // at 0, so the sum at the start is exactly Σ_{t≥1} |γ_t⟩⟨γ_t|
            let stages = (0..steps)
                .map(|t| {
                    let mut gm = DVector::zeros(dim);
                    gm[t + 1] = 1.0;
                    let mut gj = DVector::zeros(dim);
                    gj[t] = 1.0;
                    Stage::new(
                        0.0,
                        FRAC_PI_4,
                        vec![
                            (ThetaCoefficient::SinSq(1.0), projector(t, 1.0)),
                            (ThetaCoefficient::CosSq(1.0), projector(t + 1, 1.0)),
                            (ThetaCoefficient::SinCos(-1.0), transition(t, t + 1, 1.0)),
                        ],
                    )
                    .with_drive(DriveSpec {
                        gamma_m: gm,
                        gamma_j: gj,
                        k: 1.0,
                    })
                })
                .collect();
            StagedHamiltonian::new(layout, vec![], stages)?
        }
        HistoryPath::SingleRotation => {
            let mut background = Vec::new();
            for t in 1..steps {
                background.extend(link_terms(t));
            }
            let mut gm = DVector::zeros(dim);
            gm[0] = 1.0;
            let mut gj = DVector::zeros(dim);
            gj[1] = 1.0;
            let stage = Stage::new(
                FRAC_PI_2,
                FRAC_PI_4,
                vec![
                    (ThetaCoefficient::CosSq(1.0), projector(0, 1.0)),
                    (ThetaCoefficient::SinSq(1.0), projector(1, 1.0)),
                    (ThetaCoefficient::SinCos(-1.0), transition(0, 1, 1.0)),
                ],
            )
            .with_drive(DriveSpec {
                gamma_m: gm,
                gamma_j: gj,
                k: 1.0,
            });
            StagedHamiltonian::new(layout, background, vec![stage])?
        }
        HistoryPath::Linear => {
            // stage parameter s ∈ [0,1]: (1−s)·start terms + s·end terms
            let mut active = Vec::new();
            for t in 1..=steps {
                active.push((ThetaCoefficient::Constant(1.0), projector(t, 1.0)));
                active.push((ThetaCoefficient::Linear(-1.0), projector(t, 1.0)));
            }
            for t in 0..steps {
                for term in link_terms(t) {
                    active.push((ThetaCoefficient::Linear(1.0), term));
                }
            }
            let stage = Stage::new(0.0, 1.0, active);
            StagedHamiltonian::new(layout, vec![], vec![stage])?
        }
    };

    Ok(HistoryBuild {
        steps,
        path,
        hamiltonian,
        psi0,
    })
}

/// Uniform superposition over all L+1 clock states.
pub fn history_target(steps: usize) -> Result<State, ModelError> {
    if steps < 1 {
        return Err(ModelError::HistoryTooShort(steps));
    }
    let dim = steps + 1;
    let amp = C64::new(1.0 / (dim as f64).sqrt(), 0.0);
    Ok(DVector::from_element(dim, amp))
}
