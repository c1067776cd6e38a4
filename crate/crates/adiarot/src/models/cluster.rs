//! Grid graph-state preparation: per-site rotations of Z projectors into
//! X⊗Z-neighborhood stabilizers, two parallel steps regardless of size.

use super::{ModelError, MAX_QUBITS};
use crate::opalg::{HilbertLayout, MultiSiteOperator, SiteOperator, State, C64};
use crate::tdham::{Stage, StagedHamiltonian, ThetaCoefficient};
use nalgebra::DVector;
use std::f64::consts::FRAC_PI_4;

/// Open-boundary site grid; qubit ids are `y·lx + x`.
#[derive(Debug, Clone, Copy)]
pub struct ClusterGrid {
    pub lx: usize,
    pub ly: usize,
}

impl ClusterGrid {
    pub fn new(lx: usize, ly: usize) -> Result<Self, ModelError> {
        if lx < 1 || ly < 1 || lx * ly < 2 {
            return Err(ModelError::LatticeTooSmall(2, lx, ly));
        }
        if lx * ly > MAX_QUBITS {
            return Err(ModelError::LatticeTooLarge(lx * ly));
        }
        Ok(Self { lx, ly })
    }

    pub fn sites(&self) -> usize {
        self.lx * self.ly
    }

    pub fn site(&self, x: usize, y: usize) -> usize {
        y * self.lx + x
    }

    /// In-bounds nearest neighbors of a site; boundary sites keep only
    /// the neighbors that exist.
    pub fn neighbors(&self, s: usize) -> Vec<usize> {
        let (x, y) = (s % self.lx, s / self.lx);
        let mut out = Vec::with_capacity(4);
        if x > 0 {
            out.push(self.site(x - 1, y));
        }
        if x + 1 < self.lx {
            out.push(self.site(x + 1, y));
        }
        if y > 0 {
            out.push(self.site(x, y - 1));
        }
        if y + 1 < self.ly {
            out.push(self.site(x, y + 1));
        }
        out
    }

    /// All nearest-neighbor edges `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 0..self.ly {
            for x in 0..self.lx {
                let s = self.site(x, y);
                if x + 1 < self.lx {
                    out.push((s, self.site(x + 1, y)));
                }
                if y + 1 < self.ly {
                    out.push((s, self.site(x, y + 1)));
                }
            }
        }
        out
    }

    /// Sites of odd coordinate parity, then even: the two parallel steps.
    pub fn parity_classes(&self) -> [Vec<usize>; 2] {
        let mut odd = Vec::new();
        let mut even = Vec::new();
        for y in 0..self.ly {
            for x in 0..self.lx {
                if (x + y) % 2 == 1 {
                    odd.push(self.site(x, y));
                } else {
                    even.push(self.site(x, y));
                }
            }
        }
        [odd, even]
    }
}

/// The site stabilizer `X_s ⊗ (Z on each neighbor)`.
pub fn cluster_stabilizer(grid: &ClusterGrid, s: usize) -> MultiSiteOperator {
    let mut factors = vec![(s, SiteOperator::PauliX)];
    for nb in grid.neighbors(s) {
        factors.push((nb, SiteOperator::PauliZ));
    }
    MultiSiteOperator::new(1.0, factors)
}

/// A built grid protocol.
#[derive(Debug)]
pub struct ClusterBuild {
    pub grid: ClusterGrid,
    pub hamiltonian: StagedHamiltonian,
    pub psi0: State,
    /// The two parallel site groups, in stage order.
    pub plan: [Vec<usize>; 2],
}

/// Per-site rotation term: `1 + (sin²θ−cos²θ)·Z_s − 2sinθcosθ·X_s⊗Z_N(s)`
/// for every site of one parity class at a time; exactly two stages.
pub fn build_cluster(lx: usize, ly: usize) -> Result<ClusterBuild, ModelError> {
    let grid = ClusterGrid::new(lx, ly)?;
    let layout = HilbertLayout::qubits(grid.sites());
    let plan = grid.parity_classes();

    let mut stages = Vec::new();
    for class in &plan {
        if class.is_empty() {
            continue;
        }
        let mut active = Vec::new();
        for &s in class {
            active.push((
                ThetaCoefficient::Constant(1.0),
                MultiSiteOperator::identity(1.0),
            ));
            active.push((
                ThetaCoefficient::SinCosDiff(1.0),
                MultiSiteOperator::pauli(1.0, s, SiteOperator::PauliZ),
            ));
            active.push((
                ThetaCoefficient::SinCos(-2.0),
                cluster_stabilizer(&grid, s),
            ));
        }
        stages.push(Stage::new(0.0, FRAC_PI_4, active));
    }

    let hamiltonian = StagedHamiltonian::new(layout.clone(), vec![], stages)?;
    let psi0 = layout.basis_state(&vec![0usize; grid.sites()]);
    Ok(ClusterBuild {
        grid,
        hamiltonian,
        psi0,
        plan,
    })
}

/// Edge-phase oracle target: amplitude `2^{−n/2}·(−1)^r` where `r`
/// counts edges whose both endpoints carry a 1.
pub fn cluster_target(lx: usize, ly: usize) -> Result<State, ModelError> {
    let grid = ClusterGrid::new(lx, ly)?;
    let n = grid.sites();
    let edges = grid.edges();
    let dim = 1usize << n;
    let amp = 1.0 / (dim as f64).sqrt();
    let mut v = DVector::zeros(dim);
    for idx in 0..dim {
        // qubit 0 is the most significant bit of the composite index
        let bit = |s: usize| (idx >> (n - 1 - s)) & 1;
        let r = edges.iter().filter(|(a, b)| bit(*a) == 1 && bit(*b) == 1).count();
        let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
        v[idx] = C64::new(sign * amp, 0.0);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalg::assemble;
    use crate::spectra::low_spectrum;

    #[test]
    fn stabilizers_pairwise_commute() {
        let grid = ClusterGrid::new(2, 3).unwrap();
        let layout = HilbertLayout::qubits(6);
        for a in 0..6 {
            for b in (a + 1)..6 {
                let ma = assemble(&[cluster_stabilizer(&grid, a)], &layout)
                    .unwrap()
                    .to_dense();
                let mb = assemble(&[cluster_stabilizer(&grid, b)], &layout)
                    .unwrap()
                    .to_dense();
                let comm = &ma * &mb - &mb * &ma;
                assert!(comm.iter().all(|z| z.norm() < 1e-12), "sites {a},{b}");
            }
        }
    }

    #[test]
    fn two_by_three_plan_is_two_stages_of_three() {
        let build = build_cluster(2, 3).unwrap();
        assert_eq!(build.hamiltonian.num_stages(), 2);
        assert_eq!(build.plan[0].len(), 3);
        assert_eq!(build.plan[1].len(), 3);
    }

    #[test]
    fn active_term_matches_explicit_form() {
        // single site of a 1×2 grid: 1 + (sin²−cos²)Z_s − 2sc·X_s Z_nb,
        // the site factor carrying no divisor
        let build = build_cluster(1, 2).unwrap();
        let theta = 0.31;
        let h = build.hamiltonian.evaluate(0, theta).unwrap().to_dense();
        let layout = HilbertLayout::qubits(2);
        let (s, c) = theta.sin_cos();
        let grid = build.grid;
        let odd_site = build.plan[0][0];
        let mut terms = vec![
            MultiSiteOperator::identity(1.0),
            MultiSiteOperator::pauli(s * s - c * c, odd_site, SiteOperator::PauliZ),
            cluster_stabilizer(&grid, odd_site).scaled(-2.0 * s * c),
        ];
        // even site still pending at θ=0: 1 − Z
        let even_site = build.plan[1][0];
        terms.push(MultiSiteOperator::identity(1.0));
        terms.push(MultiSiteOperator::pauli(-1.0, even_site, SiteOperator::PauliZ));
        let want = assemble(&terms, &layout).unwrap().to_dense();
        assert!((h - want).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn one_by_two_target() {
        // single edge: (|00⟩+|01⟩+|10⟩−|11⟩)/2
        let t = cluster_target(1, 2).unwrap();
        let want = [0.5, 0.5, 0.5, -0.5];
        for (got, want) in t.iter().zip(want) {
            assert!((got.re - want).abs() < 1e-14);
        }
    }

    #[test]
    fn two_by_two_target_signs() {
        let t = cluster_target(2, 2).unwrap();
        let grid = ClusterGrid::new(2, 2).unwrap();
        let edges = grid.edges();
        assert_eq!(edges.len(), 4);
        for idx in 0..16usize {
            let bit = |s: usize| (idx >> (3 - s)) & 1;
            let r = edges
                .iter()
                .filter(|(a, b)| bit(*a) == 1 && bit(*b) == 1)
                .count();
            let want = if r % 2 == 0 { 0.25 } else { -0.25 };
            assert!((t[idx].re - want).abs() < 1e-14, "index {idx}");
        }
    }

    #[test]
    fn target_is_stabilizer_eigenstate() {
        let build = build_cluster(2, 3).unwrap();
        let layout = HilbertLayout::qubits(6);
        let t = cluster_target(2, 3).unwrap();
        for s in 0..6 {
            let k = assemble(&[cluster_stabilizer(&build.grid, s)], &layout).unwrap();
            let kt = k.apply(&t).unwrap();
            assert!((kt - t.clone()).norm() < 1e-10, "stabilizer {s}");
        }
    }

    #[test]
    fn commuting_terms_keep_gap_two() {
        let build = build_cluster(2, 2).unwrap();
        for stage in 0..build.hamiltonian.num_stages() {
            for i in 0..9 {
                let theta = build.hamiltonian.stages()[stage].theta_at(i as f64 / 8.0);
                let m = build.hamiltonian.evaluate(stage, theta).unwrap();
                let (vals, _) = low_spectrum(&m, 2).unwrap();
                assert!(vals[0].abs() < 1e-9, "E0 = {}", vals[0]);
                assert!(
                    (vals[1] - 2.0).abs() < 1e-9,
                    "stage {stage} θ={theta}: gap {}",
                    vals[1] - vals[0]
                );
            }
        }
    }

    #[test]
    fn grid_size_limits() {
        assert!(matches!(
            ClusterGrid::new(1, 1),
            Err(ModelError::LatticeTooSmall(..))
        ));
        assert!(matches!(
            ClusterGrid::new(7, 3),
            Err(ModelError::LatticeTooLarge(21))
        ));
    }
}
