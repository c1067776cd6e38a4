//! Staged, θ-parameterized Hamiltonians with analytic derivatives.
//!
//! A [`StagedHamiltonian`] is an ordered list of stages over a fixed
//! layout. Every stage carries active terms whose coefficients are drawn
//! from a closed set of θ-forms ([`ThetaCoefficient`]); completed stages
//! stay frozen at their final angle, not-yet-started stages sit at their
//! initial angle, and θ-independent background terms are present
//! throughout. Coefficient forms are closed under differentiation, so
//! `dH/dθ` is exact rather than numerical.

use crate::opalg::{assemble, HilbertLayout, MultiSiteOperator, OpalgError, OperatorMatrix};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TdhamError {
    #[error("stage index {0} out of range ({1} stages)")]
    InvalidStage(usize, usize),
    #[error("theta {theta} outside stage range [{start}, {end}]")]
    ThetaOutOfRange { theta: f64, start: f64, end: f64 },
    #[error("driving strength K must be positive, got {0}")]
    NonPositiveK(f64),
    #[error("theta {0} outside [0, pi/2]")]
    ThetaOutsideQuadrant(f64),
    #[error("ground-spec amplitudes must be normalized: sum of squares is {0}")]
    UnnormalizedAmplitudes(f64),
    #[error("rotated component index {0} out of range ({1} amplitudes)")]
    RotatedIndexOutOfRange(usize, usize),
    #[error("stage has zero-width theta range")]
    EmptyThetaRange,
    #[error(transparent)]
    Opalg(#[from] OpalgError),
}

/// Coefficient of one Hamiltonian term as a function of the stage angle.
/// The set is closed under differentiation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaCoefficient {
    /// `p`
    Constant(f64),
    /// `p·sin²θ`
    SinSq(f64),
    /// `p·cos²θ`
    CosSq(f64),
    /// `p·sinθ·cosθ`
    SinCos(f64),
    /// `p·(sin²θ − cos²θ)`
    SinCosDiff(f64),
    /// `p·θ` — used by the straight-line comparator where the stage
    /// parameter is the interpolation fraction itself.
    Linear(f64),
}

impl ThetaCoefficient {
    pub fn eval(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        match *self {
            ThetaCoefficient::Constant(p) => p,
            ThetaCoefficient::SinSq(p) => p * s * s,
            ThetaCoefficient::CosSq(p) => p * c * c,
            ThetaCoefficient::SinCos(p) => p * s * c,
            ThetaCoefficient::SinCosDiff(p) => p * (s * s - c * c),
            ThetaCoefficient::Linear(p) => p * theta,
        }
    }

    /// Exact θ-derivative; stays within the coefficient set.
    pub fn derivative(&self) -> ThetaCoefficient {
        match *self {
            ThetaCoefficient::Constant(_) => ThetaCoefficient::Constant(0.0),
            ThetaCoefficient::SinSq(p) => ThetaCoefficient::SinCos(2.0 * p),
            ThetaCoefficient::CosSq(p) => ThetaCoefficient::SinCos(-2.0 * p),
            ThetaCoefficient::SinCos(p) => ThetaCoefficient::SinCosDiff(-p),
            ThetaCoefficient::SinCosDiff(p) => ThetaCoefficient::SinCos(4.0 * p),
            ThetaCoefficient::Linear(p) => ThetaCoefficient::Constant(p),
        }
    }
}

/// Concrete two-level driving data for stages that consist of exactly one
/// rank-one rotated block: the rotation plane `{γ_m, γ_j}` as state
/// vectors, and the driving strength K. Consumed by the transition-rate
/// bound checks.
#[derive(Debug, Clone)]
pub struct DriveSpec {
    pub gamma_m: DVector<f64>,
    pub gamma_j: DVector<f64>,
    pub k: f64,
}

/// One protocol stage: a monotone θ range and the terms that move in it.
#[derive(Debug, Clone)]
pub struct Stage {
    pub theta_start: f64,
    pub theta_end: f64,
    pub active: Vec<(ThetaCoefficient, MultiSiteOperator)>,
    /// Set by builders whose stage is exactly one driving block.
    pub drive: Option<DriveSpec>,
}

impl Stage {
    pub fn new(
        theta_start: f64,
        theta_end: f64,
        active: Vec<(ThetaCoefficient, MultiSiteOperator)>,
    ) -> Self {
        Self {
            theta_start,
            theta_end,
            active,
            drive: None,
        }
    }

    pub fn with_drive(mut self, drive: DriveSpec) -> Self {
        self.drive = Some(drive);
        self
    }

    pub fn theta_range(&self) -> f64 {
        self.theta_end - self.theta_start
    }

    /// θ at fraction `x ∈ [0,1]` through the stage.
    pub fn theta_at(&self, x: f64) -> f64 {
        self.theta_start + x * (self.theta_end - self.theta_start)
    }

    fn contains(&self, theta: f64) -> bool {
        let (lo, hi) = if self.theta_start <= self.theta_end {
            (self.theta_start, self.theta_end)
        } else {
            (self.theta_end, self.theta_start)
        };
        theta >= lo - 1e-12 && theta <= hi + 1e-12
    }

    fn scaled_terms(&self, theta: f64) -> Vec<MultiSiteOperator> {
        self.active
            .iter()
            .map(|(coeff, op)| op.scaled(coeff.eval(theta)))
            .collect()
    }
}

/// A time-dependent Hamiltonian organized as ordered stages over a fixed
/// layout, with θ-independent background terms. Immutable after
/// construction; all evaluation is pure.
#[derive(Debug)]
pub struct StagedHamiltonian {
    layout: HilbertLayout,
    background: Vec<MultiSiteOperator>,
    stages: Vec<Stage>,
    /// background + completed stages before s (at their θ_end) + pending
    /// stages after s (at their θ_start), pre-assembled per stage.
    static_part: Vec<OperatorMatrix>,
}

impl StagedHamiltonian {
    pub fn new(
        layout: HilbertLayout,
        background: Vec<MultiSiteOperator>,
        stages: Vec<Stage>,
    ) -> Result<Self, TdhamError> {
        for st in &stages {
            if st.theta_range() == 0.0 {
                return Err(TdhamError::EmptyThetaRange);
            }
        }
        let n = stages.len();
        let dim = layout.total_dim();
        let bg = assemble(&background, &layout)?;

        // cumulative frozen prefixes and pending suffixes
        let mut prefix = Vec::with_capacity(n);
        let mut acc = OperatorMatrix::zeros(dim);
        for st in &stages {
            prefix.push(acc.clone());
            let frozen = assemble(&st.scaled_terms(st.theta_end), &layout)?;
            acc = acc.add(&frozen);
        }
        let mut suffix = vec![OperatorMatrix::zeros(dim); n.max(1)];
        suffix.truncate(n);
        let mut acc = OperatorMatrix::zeros(dim);
        for (s, st) in stages.iter().enumerate().rev() {
            suffix[s] = acc.clone();
            let pending = assemble(&st.scaled_terms(st.theta_start), &layout)?;
            acc = acc.add(&pending);
        }

        let static_part = (0..n).map(|s| bg.add(&prefix[s]).add(&suffix[s])).collect();

        Ok(Self {
            layout,
            background,
            stages,
            static_part,
        })
    }

    pub fn layout(&self) -> &HilbertLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn num_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn background(&self) -> &[MultiSiteOperator] {
        &self.background
    }

    fn check_stage(&self, stage: usize) -> Result<&Stage, TdhamError> {
        self.stages
            .get(stage)
            .ok_or(TdhamError::InvalidStage(stage, self.stages.len()))
    }

    /// `H` during `stage` at angle `theta`: background plus frozen,
    /// pending, and active terms.
    pub fn evaluate(&self, stage: usize, theta: f64) -> Result<OperatorMatrix, TdhamError> {
        let st = self.check_stage(stage)?;
        if !st.contains(theta) {
            return Err(TdhamError::ThetaOutOfRange {
                theta,
                start: st.theta_start,
                end: st.theta_end,
            });
        }
        let active = assemble(&st.scaled_terms(theta), &self.layout)?;
        Ok(self.static_part[stage].add(&active))
    }

    /// Exact `dH/dθ` during `stage`: frozen and pending contributions
    /// differentiate to zero, so only active terms remain.
    pub fn derivative(&self, stage: usize, theta: f64) -> Result<OperatorMatrix, TdhamError> {
        let st = self.check_stage(stage)?;
        if !st.contains(theta) {
            return Err(TdhamError::ThetaOutOfRange {
                theta,
                start: st.theta_start,
                end: st.theta_end,
            });
        }
        let terms: Vec<MultiSiteOperator> = st
            .active
            .iter()
            .map(|(coeff, op)| op.scaled(coeff.derivative().eval(theta)))
            .collect();
        Ok(assemble(&terms, &self.layout)?)
    }

    /// The static (non-active) part seen during `stage`.
    pub fn static_part(&self, stage: usize) -> Result<&OperatorMatrix, TdhamError> {
        self.check_stage(stage)?;
        Ok(&self.static_part[stage])
    }

    /// Largest |H_s(θ_end) − H_{s+1}(θ_start)| entry over all stage
    /// boundaries. Zero up to float rounding by construction.
    pub fn continuity_defect(&self) -> Result<f64, TdhamError> {
        let mut worst = 0.0f64;
        for s in 0..self.stages.len().saturating_sub(1) {
            let end = self.evaluate(s, self.stages[s].theta_end)?;
            let start = self.evaluate(s + 1, self.stages[s + 1].theta_start)?;
            let diff = end.add(&start.scale(-1.0));
            let d = match diff {
                OperatorMatrix::Dense(m) => m.iter().map(|z| z.norm()).fold(0.0, f64::max),
                OperatorMatrix::Sparse(m) => m.data.iter().map(|z| z.norm()).fold(0.0, f64::max),
            };
            worst = worst.max(d);
        }
        Ok(worst)
    }
}

/// The rotated rank-one driving block `K·[[cos²θ, −sinθcosθ],
/// [−sinθcosθ, sin²θ]]` on the ordered plane basis `(γ_m, γ_j)`.
/// Rank 1 with eigenvalues {0, K} for every θ.
pub fn driving_block(k: f64, theta: f64) -> Result<DMatrix<f64>, TdhamError> {
    if k <= 0.0 {
        return Err(TdhamError::NonPositiveK(k));
    }
    let (s, c) = theta.sin_cos();
    Ok(DMatrix::from_row_slice(
        2,
        2,
        &[k * c * c, -k * s * c, -k * s * c, k * s * s],
    ))
}

/// Closed-form zero-energy ground state of a single-block rotation:
/// amplitudes `a_i` over the fixed basis components, one of which
/// (`rotated_index`) is coupled to an extra orthogonal state.
#[derive(Debug, Clone)]
pub struct RotatedGroundSpec {
    pub amplitudes: Vec<f64>,
    pub rotated_index: usize,
    pub theta: f64,
}

impl RotatedGroundSpec {
    pub fn new(amplitudes: Vec<f64>, rotated_index: usize, theta: f64) -> Self {
        Self {
            amplitudes,
            rotated_index,
            theta,
        }
    }
}

/// The normalized vector `(a_j·tanθ)|γ_m⟩ + Σ a_i|γ_i⟩` over the basis
/// `[γ_1..γ_n, γ_m]` (extra state last), computed in the overflow-free
/// sine/cosine form so θ = π/2 yields the analytic limit |γ_m⟩.
pub fn rotated_ground_state(spec: &RotatedGroundSpec) -> Result<DVector<f64>, TdhamError> {
    if !(0.0..=FRAC_PI_2 + 1e-12).contains(&spec.theta) {
        return Err(TdhamError::ThetaOutsideQuadrant(spec.theta));
    }
    let norm_sq: f64 = spec.amplitudes.iter().map(|a| a * a).sum();
    if (norm_sq - 1.0).abs() > 1e-12 {
        return Err(TdhamError::UnnormalizedAmplitudes(norm_sq));
    }
    let n = spec.amplitudes.len();
    if spec.rotated_index >= n {
        return Err(TdhamError::RotatedIndexOutOfRange(spec.rotated_index, n));
    }
    let (s, c) = spec.theta.sin_cos();
    let aj = spec.amplitudes[spec.rotated_index];
    let norm = (c * c + aj * aj * s * s).sqrt();
    let mut v = DVector::zeros(n + 1);
    for (i, a) in spec.amplitudes.iter().enumerate() {
        v[i] = a * c / norm;
    }
    v[n] = aj * s / norm;
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalg::{SiteOperator, C64};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    #[test]
    fn driving_block_endpoints_and_quarter_turn() {
        let b = driving_block(1.0, 0.0).unwrap();
        assert_eq!(b, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        let b = driving_block(1.0, FRAC_PI_4).unwrap();
        for (got, want) in b.iter().zip([0.5, -0.5, -0.5, 0.5]) {
            assert!((got - want).abs() < 1e-15);
        }
        assert!(matches!(
            driving_block(0.0, 0.3),
            Err(TdhamError::NonPositiveK(_))
        ));
    }

    #[test]
    fn driving_block_spectrum_is_zero_and_k() {
        for &theta in &[0.0, 0.3, FRAC_PI_4, 1.2, FRAC_PI_2] {
            let b = driving_block(2.0, theta).unwrap();
            let eig = b.symmetric_eigen();
            let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            vals.sort_by(f64::total_cmp);
            assert!(vals[0].abs() < 1e-14);
            assert!((vals[1] - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn driving_block_derivative_matches_explicit_matrix() {
        // analytic derivative of the block at K=1, θ=π/4 is diag(−1, 1)
        let layout = HilbertLayout::single_level_space(2);
        let stage = Stage::new(
            0.0,
            FRAC_PI_2,
            vec![
                (
                    ThetaCoefficient::CosSq(1.0),
                    MultiSiteOperator::pauli(1.0, 0, SiteOperator::Projector(0)),
                ),
                (
                    ThetaCoefficient::SinSq(1.0),
                    MultiSiteOperator::pauli(1.0, 0, SiteOperator::Projector(1)),
                ),
                (
                    ThetaCoefficient::SinCos(-1.0),
                    MultiSiteOperator::pauli(1.0, 0, SiteOperator::Transition(0, 1)),
                ),
            ],
        );
        let h = StagedHamiltonian::new(layout, vec![], vec![stage]).unwrap();
        let d = h.derivative(0, FRAC_PI_4).unwrap().to_dense();
        let want = [
            C64::new(-1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
        ];
        for (got, want) in d.iter().zip(want) {
            assert!((got - want).norm() < 1e-14);
        }
    }

    #[test]
    fn coefficient_derivative_closure() {
        // differentiating twice stays inside {SinCos, SinCosDiff, Constant}
        let all = [
            ThetaCoefficient::Constant(1.3),
            ThetaCoefficient::SinSq(-0.7),
            ThetaCoefficient::CosSq(2.0),
            ThetaCoefficient::SinCos(0.4),
            ThetaCoefficient::SinCosDiff(1.0),
            ThetaCoefficient::Linear(0.8),
        ];
        for c in all {
            let d2 = c.derivative().derivative();
            assert!(matches!(
                d2,
                ThetaCoefficient::SinCos(_)
                    | ThetaCoefficient::SinCosDiff(_)
                    | ThetaCoefficient::Constant(_)
            ));
        }
    }

    #[test]
    fn rotated_ground_examples() {
        // θ = 0 reproduces the input amplitudes exactly
        let spec = RotatedGroundSpec::new(vec![0.6, 0.8], 0, 0.0);
        let v = rotated_ground_state(&spec).unwrap();
        assert_eq!(v.as_slice(), &[0.6, 0.8, 0.0]);

        // n=1, a=(1), θ=π/4 → (|γ1⟩ + |γm⟩)/√2
        let spec = RotatedGroundSpec::new(vec![1.0], 0, FRAC_PI_4);
        let v = rotated_ground_state(&spec).unwrap();
        assert!((v[0] - 1.0 / 2f64.sqrt()).abs() < 1e-14);
        assert!((v[1] - 1.0 / 2f64.sqrt()).abs() < 1e-14);

        // θ = π/2 is the analytic limit: the extra state alone
        let spec = RotatedGroundSpec::new(vec![1.0], 0, FRAC_PI_2);
        let v = rotated_ground_state(&spec).unwrap();
        assert!((v[0]).abs() < 1e-14);
        assert!((v[1] - 1.0).abs() < 1e-14);

        let bad = RotatedGroundSpec::new(vec![0.5, 0.5], 0, 0.3);
        assert!(matches!(
            rotated_ground_state(&bad),
            Err(TdhamError::UnnormalizedAmplitudes(_))
        ));
        let bad = RotatedGroundSpec::new(vec![1.0], 0, PI);
        assert!(matches!(
            rotated_ground_state(&bad),
            Err(TdhamError::ThetaOutsideQuadrant(_))
        ));
    }

    #[test]
    fn uniform_three_component_rotation_matches_null_space() {
        // uniform a_i = 1/√3, rotate component 0, θ = π/4: amplitude 1/2
        // on each of the four basis states, and the vector is a null
        // vector of the assembled block Hamiltonian.
        let a = 1.0 / 3f64.sqrt();
        let spec = RotatedGroundSpec::new(vec![a, a, a], 0, FRAC_PI_4);
        let v = rotated_ground_state(&spec).unwrap();
        for i in 0..4 {
            assert!((v[i] - 0.5).abs() < 1e-12, "component {i}: {}", v[i]);
        }

        // independent route: assemble H(θ) on a 4-level space with the
        // basis ordered [γ1, γ2, γ3, γm] and check H·v = 0. A chain of
        // pair penalties kills exactly the non-uniform directions inside
        // the γ1..γ3 block while leaving γm untouched.
        let layout = HilbertLayout::single_level_space(4);
        let theta = FRAC_PI_4;
        let link = |x: usize, y: usize| {
            vec![
                (
                    ThetaCoefficient::Constant(0.5),
                    MultiSiteOperator::pauli(1.0, 0, SiteOperator::Projector(x)),
                ),
                (
                    ThetaCoefficient::Constant(0.5),
                    MultiSiteOperator::pauli(1.0, 0, SiteOperator::Projector(y)),
                ),
                (
                    ThetaCoefficient::Constant(-0.5),
                    MultiSiteOperator::pauli(1.0, 0, SiteOperator::Transition(x, y)),
                ),
            ]
        };
        let mut active = vec![
            (
                ThetaCoefficient::CosSq(1.0),
                MultiSiteOperator::pauli(1.0, 0, SiteOperator::Projector(3)),
            ),
            (
                ThetaCoefficient::SinSq(1.0),
                MultiSiteOperator::pauli(1.0, 0, SiteOperator::Projector(0)),
            ),
            (
                ThetaCoefficient::SinCos(-1.0),
                MultiSiteOperator::pauli(1.0, 0, SiteOperator::Transition(0, 3)),
            ),
        ];
        for (c, t) in link(0, 1).into_iter().chain(link(1, 2)) {
            active.push((c, t));
        }
        let h = StagedHamiltonian::new(layout, vec![], vec![Stage::new(0.0, FRAC_PI_2, active)])
            .unwrap();
        let m = h.evaluate(0, theta).unwrap();
        let state = nalgebra::DVector::from_iterator(4, v.iter().map(|&x| C64::new(x, 0.0)));
        let hv = m.apply(&state).unwrap();
        assert!(hv.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn stage_bounds_are_enforced() {
        let layout = HilbertLayout::qubits(1);
        let stage = Stage::new(
            0.0,
            FRAC_PI_4,
            vec![(
                ThetaCoefficient::SinSq(1.0),
                MultiSiteOperator::pauli(1.0, 0, SiteOperator::PauliZ),
            )],
        );
        let h = StagedHamiltonian::new(layout, vec![], vec![stage]).unwrap();
        assert!(h.evaluate(0, 0.3).is_ok());
        assert!(matches!(
            h.evaluate(0, 1.0),
            Err(TdhamError::ThetaOutOfRange { .. })
        ));
        assert!(matches!(
            h.evaluate(1, 0.1),
            Err(TdhamError::InvalidStage(1, 1))
        ));
    }

    #[test]
    fn frozen_and_pending_stages_are_static() {
        // two-stage toy protocol: derivative during stage 0 must contain
        // no contribution from stage 1 and vice versa
        let layout = HilbertLayout::qubits(2);
        let mk = |site: usize| {
            Stage::new(
                0.0,
                FRAC_PI_4,
                vec![
                    (
                        ThetaCoefficient::SinSq(1.0),
                        MultiSiteOperator::pauli(1.0, site, SiteOperator::PauliZ),
                    ),
                    (
                        ThetaCoefficient::CosSq(1.0),
                        MultiSiteOperator::pauli(1.0, site, SiteOperator::PauliX),
                    ),
                ],
            )
        };
        let h = StagedHamiltonian::new(layout, vec![], vec![mk(0), mk(1)]).unwrap();
        let d0 = h.derivative(0, 0.2).unwrap().to_dense();
        // dH/dθ during stage 0 acts only on site 0: entries connecting
        // states that differ on site 1 must vanish
        for i in 0..4usize {
            for j in 0..4usize {
                if (i & 1) != (j & 1) {
                    assert!(d0[(i, j)].norm() < 1e-14);
                }
            }
        }
        let defect = h.continuity_defect().unwrap();
        assert!(defect <= 1e-12, "continuity defect {defect}");
    }

    proptest! {
        #[test]
        fn derivative_matches_central_differences(
            theta in 0.05f64..(FRAC_PI_4 - 0.05),
            seed_coeffs in proptest::collection::vec(-1.5f64..1.5, 3)
        ) {
            let layout = HilbertLayout::qubits(2);
            let stage = Stage::new(
                0.0,
                FRAC_PI_4,
                vec![
                    (
                        ThetaCoefficient::SinSq(seed_coeffs[0]),
                        MultiSiteOperator::pauli(1.0, 0, SiteOperator::PauliZ),
                    ),
                    (
                        ThetaCoefficient::SinCos(seed_coeffs[1]),
                        MultiSiteOperator::string(1.0, SiteOperator::PauliX, 0..2),
                    ),
                    (
                        ThetaCoefficient::SinCosDiff(seed_coeffs[2]),
                        MultiSiteOperator::pauli(1.0, 1, SiteOperator::PauliZ),
                    ),
                ],
            );
            let h = StagedHamiltonian::new(layout, vec![], vec![stage]).unwrap();
            let d = h.derivative(0, theta).unwrap().to_dense();
            let step = 1e-4;
            let plus = h.evaluate(0, theta + step).unwrap().to_dense();
            let minus = h.evaluate(0, theta - step).unwrap().to_dense();
            let fd = (plus - minus) / C64::new(2.0 * step, 0.0);
            let worst = (d - fd).iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(worst < 1e-6, "worst deviation {worst}");
        }
    }
}
