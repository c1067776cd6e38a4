//! Torus-lattice stabilizer preparation: staged rotations of fresh-link
//! Z sums into four-link X strings, star terms carried as constants.
//!
//! Spins live on the links of an `lx × ly` plaquette torus. Each stage
//! rotates a set of link-disjoint plaquettes whose Z part runs over the
//! links not yet entangled by earlier stages, divided by their count;
//! a completed rotation freezes at `1 − X⊗X⊗X⊗X`. One plaquette per
//! torus is redundant (the product of all plaquette strings is the
//! identity) and is skipped.

use super::{ModelError, MAX_QUBITS};
use crate::opalg::{HilbertLayout, MultiSiteOperator, SiteOperator, State, C64};
use crate::tdham::{Stage, StagedHamiltonian, ThetaCoefficient};
use nalgebra::DVector;
use std::collections::HashSet;
use std::f64::consts::FRAC_PI_4;

/// Torus of `lx × ly` plaquettes with spins on the `2·lx·ly` links.
///
/// Link ids: horizontal link of vertex `(x,y)` is `y·lx + x`; vertical
/// link of vertex `(x,y)` is `lx·ly + y·lx + x`.
#[derive(Debug, Clone, Copy)]
pub struct ToricLattice {
    pub lx: usize,
    pub ly: usize,
}

impl ToricLattice {
    pub fn new(lx: usize, ly: usize) -> Result<Self, ModelError> {
        if lx < 2 || ly < 2 {
            return Err(ModelError::LatticeTooSmall(2, lx, ly));
        }
        if 2 * lx * ly > MAX_QUBITS {
            return Err(ModelError::LatticeTooLarge(2 * lx * ly));
        }
        Ok(Self { lx, ly })
    }

    pub fn n_links(&self) -> usize {
        2 * self.lx * self.ly
    }

    pub fn n_plaquettes(&self) -> usize {
        self.lx * self.ly
    }

    pub fn h_link(&self, x: usize, y: usize) -> usize {
        (y % self.ly) * self.lx + (x % self.lx)
    }

    pub fn v_link(&self, x: usize, y: usize) -> usize {
        self.lx * self.ly + (y % self.ly) * self.lx + (x % self.lx)
    }

    /// The four links around plaquette `(x,y)`: bottom, left, top, right.
    pub fn plaquette_links(&self, x: usize, y: usize) -> [usize; 4] {
        [
            self.h_link(x, y),
            self.v_link(x, y),
            self.h_link(x, y + 1),
            self.v_link(x + 1, y),
        ]
    }

    /// The four links meeting vertex `(x,y)`.
    pub fn star_links(&self, x: usize, y: usize) -> [usize; 4] {
        [
            self.h_link(x, y),
            self.h_link(x + self.lx - 1, y),
            self.v_link(x, y),
            self.v_link(x, y + self.ly - 1),
        ]
    }

    /// Bitmask of a plaquette's links.
    pub fn plaquette_mask(&self, x: usize, y: usize) -> u64 {
        self.plaquette_links(x, y)
            .iter()
            .fold(0u64, |m, &l| m | (1 << l))
    }

    /// Links flipped at the start to select a topological sector.
    pub fn sector_mask(&self, sector: SectorSpec) -> u64 {
        let mut mask = 0u64;
        if sector.horizontal {
            for x in 0..self.lx {
                mask |= 1 << self.h_link(x, 0);
            }
        }
        if sector.vertical {
            for y in 0..self.ly {
                mask |= 1 << self.v_link(0, y);
            }
        }
        mask
    }
}

/// Topological sector selector: flip the spins along incontractible
/// loops before the protocol starts. The default (no loops) prepares the
/// reference sector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SectorSpec {
    pub horizontal: bool,
    pub vertical: bool,
}

impl std::str::FromStr for SectorSpec {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, ModelError> {
        match s {
            "" | "none" => Ok(SectorSpec::default()),
            "h" => Ok(SectorSpec {
                horizontal: true,
                vertical: false,
            }),
            "v" => Ok(SectorSpec {
                horizontal: false,
                vertical: true,
            }),
            "hv" | "vh" => Ok(SectorSpec {
                horizontal: true,
                vertical: true,
            }),
            other => Err(ModelError::InvalidPath(other.to_string())),
        }
    }
}

/// One plaquette rotation within a stage.
#[derive(Debug, Clone)]
pub struct PlaquetteRotation {
    pub x: usize,
    pub y: usize,
    pub links: [usize; 4],
    /// Links untouched by earlier stages; the Z sum runs over these.
    pub fresh: Vec<usize>,
}

/// Ordered stages of link-disjoint plaquette rotations.
#[derive(Debug, Clone)]
pub struct StagePlan {
    pub stages: Vec<Vec<PlaquetteRotation>>,
    /// The one redundant plaquette left out.
    pub skipped: (usize, usize),
}

impl StagePlan {
    pub fn rotated_count(&self) -> usize {
        self.stages.iter().map(|s| s.len()).sum()
    }
}

struct PlanBuilder {
    lattice: ToricLattice,
    entangled: HashSet<usize>,
    stages: Vec<Vec<PlaquetteRotation>>,
}

impl PlanBuilder {
    fn new(lattice: ToricLattice) -> Self {
        Self {
            lattice,
            entangled: HashSet::new(),
            stages: Vec::new(),
        }
    }

    fn push_stage(&mut self, plaquettes: &[(usize, usize)]) -> Result<(), ModelError> {
        if plaquettes.is_empty() {
            return Ok(());
        }
        let mut stage = Vec::with_capacity(plaquettes.len());
        let mut stage_links: HashSet<usize> = HashSet::new();
        for &(x, y) in plaquettes {
            let links = self.lattice.plaquette_links(x, y);
            let fresh: Vec<usize> = links
                .iter()
                .copied()
                .filter(|l| !self.entangled.contains(l))
                .collect();
            if fresh.is_empty() {
                return Err(ModelError::ZeroFreshLinks(x, y));
            }
            debug_assert!(
                links.iter().all(|l| stage_links.insert(*l)),
                "plaquettes within one stage must be link-disjoint"
            );
            stage.push(PlaquetteRotation { x, y, links, fresh });
        }
        for rot in &stage {
            for &l in &rot.links {
                self.entangled.insert(l);
            }
        }
        self.stages.push(stage);
        Ok(())
    }
}

/// The default O(lx+ly)-stage plan: every row except the last advances
/// in two (three for odd widths) parallel column steps, then the last
/// row — pinched between its already-entangled neighbors — runs one
/// plaquette at a time, leaving out the final redundant plaquette.
fn default_plan(lattice: ToricLattice) -> Result<StagePlan, ModelError> {
    let (lx, ly) = (lattice.lx, lattice.ly);
    let mut builder = PlanBuilder::new(lattice);
    for y in 0..ly - 1 {
        let evens: Vec<(usize, usize)> = (0..lx)
            .step_by(2)
            .filter(|&x| !(lx % 2 == 1 && x == lx - 1))
            .map(|x| (x, y))
            .collect();
        let odds: Vec<(usize, usize)> = (1..lx).step_by(2).map(|x| (x, y)).collect();
        builder.push_stage(&evens)?;
        builder.push_stage(&odds)?;
        if lx % 2 == 1 {
            builder.push_stage(&[(lx - 1, y)])?;
        }
    }
    for x in 0..lx - 1 {
        builder.push_stage(&[(x, ly - 1)])?;
    }
    Ok(StagePlan {
        stages: builder.stages,
        skipped: (lx - 1, ly - 1),
    })
}

/// Build a plan that rotates the given plaquettes one per stage in
/// order. Fails with [`ModelError::ZeroFreshLinks`] if some plaquette
/// arrives with every link already entangled.
pub fn sequential_plan(
    lattice: ToricLattice,
    order: &[(usize, usize)],
) -> Result<StagePlan, ModelError> {
    let mut builder = PlanBuilder::new(lattice);
    for &(x, y) in order {
        builder.push_stage(&[(x, y)])?;
    }
    let skipped = order.last().map(|&(x, y)| (x, y)).unwrap_or((0, 0));
    Ok(StagePlan {
        stages: builder.stages,
        skipped,
    })
}

/// A built torus protocol.
#[derive(Debug)]
pub struct ToricBuild {
    pub lattice: ToricLattice,
    pub sector: SectorSpec,
    pub hamiltonian: StagedHamiltonian,
    pub psi0: State,
    pub plan: StagePlan,
}

/// Build the staged torus protocol: star terms as constants, one
/// driving term per planned plaquette with the Z sum over its fresh
/// links divided by their count, θ: 0 → π/4 per stage.
pub fn build_toric(lx: usize, ly: usize, sector: SectorSpec) -> Result<ToricBuild, ModelError> {
    let lattice = ToricLattice::new(lx, ly)?;
    let plan = default_plan(lattice)?;
    let layout = HilbertLayout::qubits(lattice.n_links());
    let flip_mask = lattice.sector_mask(sector);
    let sign = |l: usize| if flip_mask >> l & 1 == 1 { -1.0 } else { 1.0 };

    let mut background = Vec::new();
    for y in 0..ly {
        for x in 0..lx {
            background.push(MultiSiteOperator::identity(1.0));
            background.push(MultiSiteOperator::string(
                -1.0,
                SiteOperator::PauliZ,
                lattice.star_links(x, y),
            ));
        }
    }

    let mut stages = Vec::new();
    for group in &plan.stages {
        let mut active = Vec::new();
        for rot in group {
            active.push((
                ThetaCoefficient::Constant(1.0),
                MultiSiteOperator::identity(1.0),
            ));
            let weight = 1.0 / rot.fresh.len() as f64;
            for &l in &rot.fresh {
                active.push((
                    ThetaCoefficient::SinCosDiff(sign(l) * weight),
                    MultiSiteOperator::pauli(1.0, l, SiteOperator::PauliZ),
                ));
            }
            active.push((
                ThetaCoefficient::SinCos(-2.0),
                MultiSiteOperator::string(1.0, SiteOperator::PauliX, rot.links),
            ));
        }
        stages.push(Stage::new(0.0, FRAC_PI_4, active));
    }

    let hamiltonian = StagedHamiltonian::new(layout.clone(), background, stages)?;
    let digits: Vec<usize> = (0..lattice.n_links())
        .map(|l| ((flip_mask >> l) & 1) as usize)
        .collect();
    let psi0 = layout.basis_state(&digits);
    Ok(ToricBuild {
        lattice,
        sector,
        hamiltonian,
        psi0,
        plan,
    })
}

/// Brute-force group-closure oracle: the uniform superposition over the
/// orbit of the sector's base pattern under all plaquette X strings.
pub fn toric_target(lx: usize, ly: usize, sector: SectorSpec) -> Result<State, ModelError> {
    let lattice = ToricLattice::new(lx, ly)?;
    let layout = HilbertLayout::qubits(lattice.n_links());
    let base = lattice.sector_mask(sector);

    // GF(2) row-echelon basis of the plaquette string group
    let mut basis: Vec<u64> = Vec::new();
    for y in 0..ly {
        for x in 0..lx {
            let mut m = lattice.plaquette_mask(x, y);
            for &b in &basis {
                m = m.min(m ^ b);
            }
            if m != 0 {
                basis.push(m);
                basis.sort_unstable_by(|a, b| b.cmp(a));
            }
        }
    }
    let rank = basis.len();
    let orbit_size = 1usize << rank;
    let amp = C64::new(1.0 / (orbit_size as f64).sqrt(), 0.0);
    let n = lattice.n_links();
    let mut v = DVector::zeros(layout.total_dim());
    for combo in 0..orbit_size {
        let mut pattern = base;
        for (bit, mask) in basis.iter().enumerate() {
            if combo >> bit & 1 == 1 {
                pattern ^= mask;
            }
        }
        // link l is digit l, big-endian in the composite index
        let mut index = 0usize;
        for l in 0..n {
            index = index * 2 + ((pattern >> l) & 1) as usize;
        }
        v[index] = amp;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::low_spectrum;

    #[test]
    fn every_link_touches_two_plaquettes_and_two_stars() {
        let lattice = ToricLattice::new(3, 2).unwrap();
        let mut plaquette_count = vec![0usize; lattice.n_links()];
        let mut star_count = vec![0usize; lattice.n_links()];
        for y in 0..2 {
            for x in 0..3 {
                for l in lattice.plaquette_links(x, y) {
                    plaquette_count[l] += 1;
                }
                for l in lattice.star_links(x, y) {
                    star_count[l] += 1;
                }
            }
        }
        assert!(plaquette_count.iter().all(|&c| c == 2));
        assert!(star_count.iter().all(|&c| c == 2));
    }

    #[test]
    fn plaquette_product_is_identity() {
        let lattice = ToricLattice::new(2, 2).unwrap();
        let mut xor = 0u64;
        for y in 0..2 {
            for x in 0..2 {
                xor ^= lattice.plaquette_mask(x, y);
            }
        }
        assert_eq!(xor, 0);
    }

    #[test]
    fn two_by_two_plan_rotates_three_skips_one() {
        let build = build_toric(2, 2, SectorSpec::default()).unwrap();
        assert_eq!(build.plan.rotated_count(), 3);
        assert_eq!(build.plan.skipped, (1, 1));
        let fresh_counts: Vec<usize> = build
            .plan
            .stages
            .iter()
            .flat_map(|s| s.iter().map(|r| r.fresh.len()))
            .collect();
        assert_eq!(fresh_counts, vec![4, 2, 2]);
    }

    #[test]
    fn three_by_two_has_a_three_fresh_link_rotation() {
        // the second plaquette of the first row keeps three fresh links:
        // the single-entangled-link configuration with divisor 3
        let build = build_toric(3, 2, SectorSpec::default()).unwrap();
        let rot = build
            .plan
            .stages
            .iter()
            .flatten()
            .find(|r| (r.x, r.y) == (1, 0))
            .expect("plaquette (1,0) planned");
        assert_eq!(rot.fresh.len(), 3);
    }

    #[test]
    fn stage_count_scales_linearly() {
        let build = build_toric(2, 2, SectorSpec::default()).unwrap();
        assert_eq!(build.plan.stages.len(), 2 * (2 - 1) + (2 - 1));
        let build = build_toric(2, 3, SectorSpec::default()).unwrap();
        assert_eq!(build.plan.stages.len(), 2 * (3 - 1) + (2 - 1));
    }

    #[test]
    fn zero_fresh_detection_in_bad_order() {
        let lattice = ToricLattice::new(2, 2).unwrap();
        let err = sequential_plan(lattice, &[(0, 0), (1, 0), (0, 1), (1, 1)]).unwrap_err();
        assert!(matches!(err, ModelError::ZeroFreshLinks(1, 1)));
        // leaving the redundant plaquette out is fine
        assert!(sequential_plan(lattice, &[(0, 0), (1, 0), (0, 1)]).is_ok());
    }

    #[test]
    fn target_is_uniform_over_the_string_orbit() {
        let lattice = ToricLattice::new(2, 2).unwrap();
        let t = toric_target(2, 2, SectorSpec::default()).unwrap();
        let support: Vec<usize> = (0..t.len()).filter(|&i| t[i].norm() > 1e-12).collect();
        assert_eq!(support.len(), 8);
        let want = 1.0 / (2.0 * 2f64.sqrt());
        for &i in &support {
            assert!((t[i].re - want).abs() < 1e-12);
        }
        // star constraints hold on every support pattern
        let n = lattice.n_links();
        for &idx in &support {
            for y in 0..2 {
                for x in 0..2 {
                    let parity: usize = lattice
                        .star_links(x, y)
                        .iter()
                        .map(|&l| (idx >> (n - 1 - l)) & 1)
                        .sum();
                    assert_eq!(parity % 2, 0, "star ({x},{y}) violated at {idx:#010b}");
                }
            }
        }
        // any plaquette string permutes the support onto itself
        for y in 0..2 {
            for x in 0..2 {
                let mask = lattice.plaquette_mask(x, y);
                // convert link mask to composite-index xor
                let mut index_xor = 0usize;
                for l in 0..n {
                    if mask >> l & 1 == 1 {
                        index_xor |= 1 << (n - 1 - l);
                    }
                }
                for &idx in &support {
                    let flipped = idx ^ index_xor;
                    assert!(t[flipped].norm() > 1e-12, "orbit not closed");
                }
            }
        }
    }

    #[test]
    fn sector_flip_changes_base_pattern_and_stays_zero_energy() {
        let sector = SectorSpec {
            horizontal: false,
            vertical: true,
        };
        let build = build_toric(2, 2, sector).unwrap();
        // initial state is an eigenstate with zero energy of the stage-0
        // Hamiltonian at θ=0
        let h = build.hamiltonian.evaluate(0, 0.0).unwrap();
        let hv = h.apply(&build.psi0).unwrap();
        assert!(hv.norm() < 1e-12);
        // and the sector target's support differs from the reference one
        let t_ref = toric_target(2, 2, SectorSpec::default()).unwrap();
        let t_sec = toric_target(2, 2, sector).unwrap();
        let overlap = t_ref.dotc(&t_sec).norm();
        assert!(overlap < 1e-12, "sectors should be orthogonal");
    }

    #[test]
    fn ground_energy_zero_through_the_protocol() {
        let build = build_toric(2, 2, SectorSpec::default()).unwrap();
        let h = &build.hamiltonian;
        for stage in 0..h.num_stages() {
            for i in 0..5 {
                let theta = h.stages()[stage].theta_at(i as f64 / 4.0);
                let m = h.evaluate(stage, theta).unwrap();
                let (vals, _) = low_spectrum(&m, 1).unwrap();
                assert!(
                    vals[0].abs() < 1e-9,
                    "stage {stage} θ={theta}: E0={}",
                    vals[0]
                );
            }
        }
    }

    #[test]
    fn lattice_size_limits() {
        assert!(matches!(
            ToricLattice::new(1, 2),
            Err(ModelError::LatticeTooSmall(..))
        ));
        assert!(matches!(
            ToricLattice::new(4, 3),
            Err(ModelError::LatticeTooLarge(24))
        ));
    }
}
