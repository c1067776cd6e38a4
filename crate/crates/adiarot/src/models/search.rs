//! Three-level search model: a marked-state projector Hamiltonian plus a
//! rotation between the known superposition and an auxiliary
//! non-computational state, θ: π/2 → 0.

use super::{matrix_terms, ModelError};
use crate::opalg::{HilbertLayout, MultiSiteOperator, SiteOperator, State, C64};
use crate::tdham::{DriveSpec, Stage, StagedHamiltonian, ThetaCoefficient};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::FRAC_PI_2;

/// Effective three-dimensional search build, basis ordered
/// `(|m⟩, |ψ₀⊥⟩, |i⟩)`: the marked state, the computational component
/// orthogonal to it, and the auxiliary start state.
#[derive(Debug)]
pub struct SearchBuild {
    pub a0: f64,
    pub hamiltonian: StagedHamiltonian,
    /// |i⟩
    pub psi0: State,
    /// |m⟩
    pub target: State,
}

/// First gap of the search model: `1 − sinθ·√(1−a₀²)`.
pub fn search_gap(a0: f64, theta: f64) -> f64 {
    1.0 - theta.sin() * (1.0 - a0 * a0).sqrt()
}

/// Closed-form cap on the first-excited ground coupling:
/// `a₀·|sinθ − √(1−a₀²)| / (1 − sinθ·√(1−a₀²))`.
pub fn search_coupling_bound(a0: f64, theta: f64) -> f64 {
    let b = (1.0 - a0 * a0).sqrt();
    a0 * (theta.sin() - b).abs() / (1.0 - theta.sin() * b)
}

/// Build the effective search model for overlap `a₀ = ⟨ψ₀|m⟩ ∈ (0,1)`.
///
/// The background projects onto the computational direction orthogonal
/// to the marked state (zero on |i⟩); the driving block rotates between
/// |ψ₀⟩ and |i⟩. Sweeping θ from π/2 to 0 carries |i⟩ into |m⟩.
pub fn build_search(a0: f64) -> Result<SearchBuild, ModelError> {
    if !(a0 > 0.0 && a0 < 1.0) {
        return Err(ModelError::OverlapOutOfRange(a0));
    }
    let b = (1.0 - a0 * a0).sqrt();
    let layout = HilbertLayout::single_level_space(3);
    let background = vec![MultiSiteOperator::pauli(1.0, 0, SiteOperator::Projector(1))];
    let active = vec![
        // sin²θ · |ψ₀⟩⟨ψ₀| with ψ₀ = a₀|m⟩ + b|ψ₀⊥⟩
        (
            ThetaCoefficient::SinSq(1.0),
            MultiSiteOperator::pauli(a0 * a0, 0, SiteOperator::Projector(0)),
        ),
        (
            ThetaCoefficient::SinSq(1.0),
            MultiSiteOperator::pauli(b * b, 0, SiteOperator::Projector(1)),
        ),
        (
            ThetaCoefficient::SinSq(1.0),
            MultiSiteOperator::pauli(a0 * b, 0, SiteOperator::Transition(0, 1)),
        ),
        // cos²θ · |i⟩⟨i|
        (
            ThetaCoefficient::CosSq(1.0),
            MultiSiteOperator::pauli(1.0, 0, SiteOperator::Projector(2)),
        ),
        // −sinθcosθ · (|ψ₀⟩⟨i| + |i⟩⟨ψ₀|)
        (
            ThetaCoefficient::SinCos(-1.0),
            MultiSiteOperator::pauli(a0, 0, SiteOperator::Transition(0, 2)),
        ),
        (
            ThetaCoefficient::SinCos(-1.0),
            MultiSiteOperator::pauli(b, 0, SiteOperator::Transition(1, 2)),
        ),
    ];
    let gamma_m = DVector::from_column_slice(&[0.0, 0.0, 1.0]);
    let gamma_j = DVector::from_column_slice(&[a0, b, 0.0]);
    let stage = Stage::new(FRAC_PI_2, 0.0, active).with_drive(DriveSpec {
        gamma_m,
        gamma_j,
        k: 1.0,
    });
    let hamiltonian = StagedHamiltonian::new(layout, background, vec![stage])?;

    let mut psi0 = State::zeros(3);
    psi0[2] = C64::new(1.0, 0.0);
    let mut target = State::zeros(3);
    target[0] = C64::new(1.0, 0.0);
    Ok(SearchBuild {
        a0,
        hamiltonian,
        psi0,
        target,
    })
}

/// Full-space search build over `n` computational states plus the
/// auxiliary start state (basis: 0..n computational, index n auxiliary).
#[derive(Debug)]
pub struct SearchFullBuild {
    pub n: usize,
    pub marked: usize,
    pub hamiltonian: StagedHamiltonian,
    pub psi0: State,
    pub target: State,
    /// Isometry columns (|m⟩, |ψ₀⊥⟩, |i⟩) embedding the effective basis.
    pub embedding: DMatrix<f64>,
}

/// Build the search model on the explicit (n+1)-dimensional space with a
/// uniform known state. Exercises the claim that the dynamics never
/// leave the three-dimensional effective subspace.
pub fn build_search_full(n: usize, marked: usize) -> Result<SearchFullBuild, ModelError> {
    if n < 2 {
        return Err(ModelError::SearchSpaceTooSmall(n));
    }
    if marked >= n {
        return Err(ModelError::MarkedOutOfRange(marked, n));
    }
    let dim = n + 1;
    let layout = HilbertLayout::single_level_space(dim);
    let a0 = 1.0 / (n as f64).sqrt();

    // background: identity on the computational space minus the marked
    // projector
    let mut h0 = DMatrix::<f64>::zeros(dim, dim);
    for l in 0..n {
        if l != marked {
            h0[(l, l)] = 1.0;
        }
    }
    let background = matrix_terms(&h0);

    // ψ₀ψ₀ᵀ over the computational block and the transition row to |i⟩
    let mut psi0_proj = DMatrix::<f64>::zeros(dim, dim);
    for l in 0..n {
        for l2 in 0..n {
            psi0_proj[(l, l2)] = 1.0 / n as f64;
        }
    }
    let mut i_proj = DMatrix::<f64>::zeros(dim, dim);
    i_proj[(n, n)] = 1.0;
    let mut cross = DMatrix::<f64>::zeros(dim, dim);
    for l in 0..n {
        cross[(l, n)] = 1.0 / (n as f64).sqrt();
        cross[(n, l)] = cross[(l, n)];
    }

    let mut active: Vec<(ThetaCoefficient, MultiSiteOperator)> = Vec::new();
    for term in matrix_terms(&psi0_proj) {
        active.push((ThetaCoefficient::SinSq(1.0), term));
    }
    for term in matrix_terms(&i_proj) {
        active.push((ThetaCoefficient::CosSq(1.0), term));
    }
    for term in matrix_terms(&cross) {
        active.push((ThetaCoefficient::SinCos(-1.0), term));
    }

    let mut gamma_m = DVector::zeros(dim);
    gamma_m[n] = 1.0;
    let mut gamma_j = DVector::zeros(dim);
    for l in 0..n {
        gamma_j[l] = 1.0 / (n as f64).sqrt();
    }
    let stage = Stage::new(FRAC_PI_2, 0.0, active).with_drive(DriveSpec {
        gamma_m,
        gamma_j,
        k: 1.0,
    });
    let hamiltonian = StagedHamiltonian::new(layout, background, vec![stage])?;

    let mut psi0 = State::zeros(dim);
    psi0[n] = C64::new(1.0, 0.0);
    let mut target = State::zeros(dim);
    target[marked] = C64::new(1.0, 0.0);

    // effective-basis embedding: |m⟩, |ψ₀⊥⟩ = (ψ₀ − a₀ m)/√(1−a₀²), |i⟩
    let b = (1.0 - a0 * a0).sqrt();
    let mut embedding = DMatrix::<f64>::zeros(dim, 3);
    embedding[(marked, 0)] = 1.0;
    for l in 0..n {
        let psi0_component = 1.0 / (n as f64).sqrt();
        let m_component = if l == marked { 1.0 } else { 0.0 };
        embedding[(l, 1)] = (psi0_component - a0 * m_component) / b;
    }
    embedding[(n, 2)] = 1.0;

    Ok(SearchFullBuild {
        n,
        marked,
        hamiltonian,
        psi0,
        target,
        embedding,
    })
}
