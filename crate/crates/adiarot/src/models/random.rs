//! Randomized single-driving-block instances: a random background with a
//! two-fold zero-energy ground space plus one rotated rank-one block.
//! Used by the seeded property suites for the gap-direction and
//! transition-rate bound checks.

use super::{matrix_terms, ModelError};
use crate::opalg::HilbertLayout;
use crate::tdham::{DriveSpec, Stage, StagedHamiltonian, ThetaCoefficient};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use std::f64::consts::FRAC_PI_2;

/// A sampled instance with its construction data.
#[derive(Debug)]
pub struct RandomInstance {
    pub dim: usize,
    pub hamiltonian: StagedHamiltonian,
    /// Overlap of the rotated component with the in-space ground state.
    pub a_j: f64,
    /// First excited energy of the background.
    pub g1_background: f64,
}

/// Sample an instance of dimension `dim ∈ [4, 12]`: a random orthogonal
/// frame, two zero modes (the in-space ground state and the extra
/// state), excited energies in [0.4, 3], and a driving plane tilted a
/// bounded amount away from the ground state.
pub fn random_instance(rng: &mut impl Rng, dim: usize) -> Result<RandomInstance, ModelError> {
    assert!((3..=12).contains(&dim), "instance dimension out of range");
    // random orthogonal frame via QR of a Gaussian matrix
    let gauss = DMatrix::from_fn(dim, dim, |_, _| {
        // Box-Muller from two uniforms
        let u1: f64 = rng.gen::<f64>().max(1e-12);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    });
    let qr = gauss.qr();
    let q = qr.q();

    let psi_a = q.column(0).clone_owned();
    let gamma_m = q.column(1).clone_owned();

    // background: zero on the first two frame vectors, gapped elsewhere
    let mut energies: Vec<f64> = (2..dim).map(|_| 0.4 + 2.6 * rng.gen::<f64>()).collect();
    energies.sort_by(f64::total_cmp);
    let g1_background = energies.first().copied().unwrap_or(0.0);
    let mut h0 = DMatrix::<f64>::zeros(dim, dim);
    for (offset, &e) in energies.iter().enumerate() {
        let col = q.column(2 + offset);
        h0 += e * &col * col.transpose();
    }

    // rotated component: a mixture of the ground state and a direction
    // orthogonal to the ground plane, keeping a_j bounded away from 0
    let a_j = 0.35 + 0.6 * rng.gen::<f64>();
    let mut w: DVector<f64> = DVector::zeros(dim);
    if dim > 2 {
        for i in 2..dim {
            w += q.column(i) * (rng.gen::<f64>() - 0.5);
        }
        let n = w.norm();
        if n > 1e-9 {
            w /= n;
        } else {
            w = q.column(2).clone_owned();
        }
    }
    let gamma_j = &psi_a * a_j + &w * (1.0 - a_j * a_j).sqrt();

    let layout = HilbertLayout::single_level_space(dim);
    let background = matrix_terms(&h0);
    let k_drive = 1.0;
    let gj_proj = &gamma_j * gamma_j.transpose();
    let gm_proj = &gamma_m * gamma_m.transpose();
    let cross = &gamma_j * gamma_m.transpose() + &gamma_m * gamma_j.transpose();
    let mut active = Vec::new();
    for t in matrix_terms(&gj_proj) {
        active.push((ThetaCoefficient::SinSq(k_drive), t));
    }
    for t in matrix_terms(&gm_proj) {
        active.push((ThetaCoefficient::CosSq(k_drive), t));
    }
    for t in matrix_terms(&cross) {
        active.push((ThetaCoefficient::SinCos(-k_drive), t));
    }
    let stage = Stage::new(0.0, FRAC_PI_2, active).with_drive(DriveSpec {
        gamma_m,
        gamma_j,
        k: k_drive,
    });
    let hamiltonian = StagedHamiltonian::new(layout, background, vec![stage])?;
    Ok(RandomInstance {
        dim,
        hamiltonian,
        a_j,
        g1_background,
    })
}
