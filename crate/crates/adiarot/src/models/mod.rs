//! The four protocol families as staged Hamiltonians with initial states
//! and brute-force target oracles, plus randomized single-block
//! instances for property suites.

mod cluster;
mod history;
mod random;
mod search;
mod toric;

pub use cluster::{build_cluster, cluster_stabilizer, cluster_target, ClusterBuild, ClusterGrid};
pub use history::{build_history, history_target, HistoryBuild, HistoryPath};
pub use random::{random_instance, RandomInstance};
pub use search::{
    build_search, build_search_full, search_coupling_bound, search_gap, SearchBuild,
    SearchFullBuild,
};
pub use toric::{
    build_toric, sequential_plan, toric_target, PlaquetteRotation, SectorSpec, StagePlan,
    ToricBuild, ToricLattice,
};

use crate::opalg::{HilbertLayout, MultiSiteOperator, OpalgError, SiteOperator};
use crate::tdham::{Stage, StagedHamiltonian, TdhamError, ThetaCoefficient};
use nalgebra::DMatrix;
use thiserror::Error;

/// Hard cap on qubit counts accepted by the lattice builders.
pub const MAX_QUBITS: usize = 16;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("lattice must be at least {0}; got {1}x{2}")]
    LatticeTooSmall(usize, usize, usize),
    #[error("{0} qubits exceed the configured limit of {MAX_QUBITS}")]
    LatticeTooLarge(usize),
    #[error("plaquette ({0},{1}) has no fresh links at its turn; invalid stage plan")]
    ZeroFreshLinks(usize, usize),
    #[error("unknown path '{0}'; expected linear, stepwise, or single_rotation")]
    InvalidPath(String),
    #[error("overlap a0 must lie strictly between 0 and 1, got {0}")]
    OverlapOutOfRange(f64),
    #[error("clock register needs at least one step, got {0}")]
    HistoryTooShort(usize),
    #[error("full search space needs at least 2 states, got {0}")]
    SearchSpaceTooSmall(usize),
    #[error("marked state {0} outside the {1}-state space")]
    MarkedOutOfRange(usize, usize),
    #[error(transparent)]
    Tdham(#[from] TdhamError),
    #[error(transparent)]
    Opalg(#[from] OpalgError),
}

/// Express a real symmetric matrix on one abstract level-space site as
/// projector and transition terms.
pub fn matrix_terms(m: &DMatrix<f64>) -> Vec<MultiSiteOperator> {
    let d = m.nrows();
    let mut terms = Vec::new();
    for i in 0..d {
        if m[(i, i)] != 0.0 {
            terms.push(MultiSiteOperator::pauli(
                m[(i, i)],
                0,
                SiteOperator::Projector(i),
            ));
        }
    }
    for i in 0..d {
        for j in i + 1..d {
            if m[(i, j)] != 0.0 {
                terms.push(MultiSiteOperator::pauli(
                    m[(i, j)],
                    0,
                    SiteOperator::Transition(i, j),
                ));
            }
        }
    }
    terms
}

/// The bare two-level driving block as a one-stage Hamiltonian on an
/// abstract two-level space, basis ordered (γ_m, γ_j). Used as the
/// effective-block reference trace when scheduling lattice rotations,
/// whose in-block spectrum is {0, K} with constant coupling K.
pub fn effective_block(
    k: f64,
    theta_start: f64,
    theta_end: f64,
) -> Result<StagedHamiltonian, ModelError> {
    let layout = HilbertLayout::single_level_space(2);
    let stage = Stage::new(
        theta_start,
        theta_end,
        vec![
            (
                ThetaCoefficient::CosSq(k),
                MultiSiteOperator::pauli(1.0, 0, SiteOperator::Projector(0)),
            ),
            (
                ThetaCoefficient::SinSq(k),
                MultiSiteOperator::pauli(1.0, 0, SiteOperator::Projector(1)),
            ),
            (
                ThetaCoefficient::SinCos(-k),
                MultiSiteOperator::pauli(1.0, 0, SiteOperator::Transition(0, 1)),
            ),
        ],
    );
    Ok(StagedHamiltonian::new(layout, vec![], vec![stage])?)
}
