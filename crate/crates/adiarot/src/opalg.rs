//! Multi-site operator algebra on declared Hilbert-space layouts.
//!
//! Operators are real-weighted tensor products of single-site factors
//! (qubit Paulis, level projectors, level transitions) over labeled sites.
//! [`assemble`] turns a list of such terms into an explicit Hermitian
//! matrix, dense below [`DENSE_LIMIT`] and compressed-sparse above it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Matrices at or below this dimension are stored dense.
pub const DENSE_LIMIT: usize = 64;

/// Tolerance for the Hermiticity check on assembled matrices.
pub const HERMITICITY_TOL: f64 = 1e-12;

pub type C64 = Complex64;
pub type State = DVector<C64>;

#[derive(Debug, Error)]
pub enum OpalgError {
    #[error("site {0} is not declared in the layout")]
    UnknownSite(usize),
    #[error("factor on site {site} needs local dimension {needed}, layout has {actual}")]
    DimensionMismatch {
        site: usize,
        needed: usize,
        actual: usize,
    },
    #[error("assembled matrix is not Hermitian (max asymmetry {0:.3e}); check transition pairings")]
    NonHermitianAggregate(f64),
    #[error("operator dimension {op} does not match state dimension {state}")]
    ApplyDimensionMismatch { op: usize, state: usize },
    #[error("duplicate site id {0} in layout")]
    DuplicateSite(usize),
    #[error("total dimension {0} exceeds the configured limit {1}")]
    DimensionTooLarge(usize, usize),
}

/// Ordered list of sites with local dimensions. Site 0 is the most
/// significant digit of the composite basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct HilbertLayout {
    sites: Vec<(usize, usize)>,
    total_dim: usize,
}

impl HilbertLayout {
    /// Build a layout from `(site_id, local_dimension)` pairs in order.
    pub fn new(sites: Vec<(usize, usize)>) -> Result<Self, OpalgError> {
        let mut seen = std::collections::HashSet::new();
        let mut total: usize = 1;
        for &(id, dim) in &sites {
            if !seen.insert(id) {
                return Err(OpalgError::DuplicateSite(id));
            }
            total = total
                .checked_mul(dim)
                .ok_or(OpalgError::DimensionTooLarge(usize::MAX, 1 << 24))?;
            if total > (1 << 24) {
                return Err(OpalgError::DimensionTooLarge(total, 1 << 24));
            }
        }
        Ok(Self {
            sites,
            total_dim: total,
        })
    }

    /// `n` qubits with site ids `0..n`.
    pub fn qubits(n: usize) -> Self {
        Self::new((0..n).map(|i| (i, 2)).collect()).expect("qubit layout")
    }

    /// One abstract site of local dimension `d` (site id 0).
    pub fn single_level_space(d: usize) -> Self {
        Self::new(vec![(0, d)]).expect("level-space layout")
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn sites(&self) -> &[(usize, usize)] {
        &self.sites
    }

    fn position_of(&self, site: usize) -> Option<(usize, usize)> {
        self.sites
            .iter()
            .position(|&(id, _)| id == site)
            .map(|p| (p, self.sites[p].1))
    }

    /// Composite index of a basis assignment given per-site digits in
    /// layout order (big-endian: site 0 most significant).
    pub fn index_of(&self, digits: &[usize]) -> usize {
        assert_eq!(digits.len(), self.sites.len());
        let mut idx = 0;
        for (d, &(_, dim)) in digits.iter().zip(&self.sites) {
            debug_assert!(*d < dim);
            idx = idx * dim + d;
        }
        idx
    }

    /// Per-site digits of a composite index, in layout order.
    pub fn digits_of(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.sites.len()];
        for (slot, &(_, dim)) in digits.iter_mut().zip(&self.sites).rev() {
            *slot = index % dim;
            index /= dim;
        }
        digits
    }

    /// Basis state |digits⟩ as a dense vector.
    pub fn basis_state(&self, digits: &[usize]) -> State {
        let mut v = State::zeros(self.total_dim);
        v[self.index_of(digits)] = C64::new(1.0, 0.0);
        v
    }
}

/// A single-site operator factor. Sites not mentioned by a term act as
/// identity. `Transition` is the Hermitian pair |a⟩⟨b| + |b⟩⟨a|;
/// `Ketbra` is the bare |a⟩⟨b| for callers that pair conjugates
/// themselves (the assembly step verifies the aggregate is Hermitian).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SiteOperator {
    PauliX,
    PauliY,
    PauliZ,
    Projector(usize),
    Transition(usize, usize),
    Ketbra(usize, usize),
}

impl SiteOperator {
    /// Minimum local dimension this factor requires.
    fn needed_dim(&self) -> usize {
        match *self {
            SiteOperator::PauliX | SiteOperator::PauliY | SiteOperator::PauliZ => 2,
            SiteOperator::Projector(m) => m + 1,
            SiteOperator::Transition(a, b) | SiteOperator::Ketbra(a, b) => a.max(b) + 1,
        }
    }

    /// Nonzero entries of column `col`, as `(row, amplitude)`.
    fn column(&self, col: usize, out: &mut Vec<(usize, C64)>) {
        out.clear();
        match *self {
            SiteOperator::PauliX => out.push((1 - col, C64::new(1.0, 0.0))),
            SiteOperator::PauliY => {
                if col == 0 {
                    out.push((1, C64::new(0.0, 1.0)));
                } else {
                    out.push((0, C64::new(0.0, -1.0)));
                }
            }
            SiteOperator::PauliZ => {
                out.push((col, C64::new(if col == 0 { 1.0 } else { -1.0 }, 0.0)))
            }
            SiteOperator::Projector(m) => {
                if col == m {
                    out.push((m, C64::new(1.0, 0.0)));
                }
            }
            SiteOperator::Transition(a, b) => {
                if col == b {
                    out.push((a, C64::new(1.0, 0.0)));
                }
                if a != b && col == a {
                    out.push((b, C64::new(1.0, 0.0)));
                }
            }
            SiteOperator::Ketbra(a, b) => {
                if col == b {
                    out.push((a, C64::new(1.0, 0.0)));
                }
            }
        }
    }
}

/// A real-weighted tensor product of single-site operators.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSiteOperator {
    pub coeff: f64,
    /// `(site_id, factor)`, kept sorted by site id; absent sites act as identity.
    factors: Vec<(usize, SiteOperator)>,
}

impl MultiSiteOperator {
    pub fn new(coeff: f64, factors: impl IntoIterator<Item = (usize, SiteOperator)>) -> Self {
        let mut factors: Vec<_> = factors.into_iter().collect();
        factors.sort_by_key(|&(s, _)| s);
        Self { coeff, factors }
    }

    /// The identity term with the given weight.
    pub fn identity(coeff: f64) -> Self {
        Self {
            coeff,
            factors: Vec::new(),
        }
    }

    /// Single Pauli factor shorthand.
    pub fn pauli(coeff: f64, site: usize, op: SiteOperator) -> Self {
        Self::new(coeff, [(site, op)])
    }

    /// A Pauli string: the same operator on every listed site.
    pub fn string(coeff: f64, op: SiteOperator, sites: impl IntoIterator<Item = usize>) -> Self {
        Self::new(coeff, sites.into_iter().map(|s| (s, op)))
    }

    pub fn factors(&self) -> &[(usize, SiteOperator)] {
        &self.factors
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            coeff: self.coeff * factor,
            factors: self.factors.clone(),
        }
    }
}

/// Hermitian matrix in dense or compressed-sparse-row storage.
#[derive(Debug, Clone)]
pub enum OperatorMatrix {
    Dense(DMatrix<C64>),
    Sparse(CsrMatrix),
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        match self {
            OperatorMatrix::Dense(m) => m.nrows(),
            OperatorMatrix::Sparse(m) => m.dim,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        if dim <= DENSE_LIMIT {
            OperatorMatrix::Dense(DMatrix::zeros(dim, dim))
        } else {
            OperatorMatrix::Sparse(CsrMatrix::empty(dim))
        }
    }

    /// Matrix-vector product. Linear; does not normalize.
    pub fn apply(&self, state: &State) -> Result<State, OpalgError> {
        if self.dim() != state.len() {
            return Err(OpalgError::ApplyDimensionMismatch {
                op: self.dim(),
                state: state.len(),
            });
        }
        Ok(self.apply_unchecked(state))
    }

    pub(crate) fn apply_unchecked(&self, state: &State) -> State {
        match self {
            OperatorMatrix::Dense(m) => m * state,
            OperatorMatrix::Sparse(m) => m.matvec(state),
        }
    }

    /// Entry accessor (slow path, intended for tests and small checks).
    pub fn get(&self, i: usize, j: usize) -> C64 {
        match self {
            OperatorMatrix::Dense(m) => m[(i, j)],
            OperatorMatrix::Sparse(m) => m.get(i, j),
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        match self {
            OperatorMatrix::Dense(m) => m.clone(),
            OperatorMatrix::Sparse(m) => m.to_dense(),
        }
    }

    /// True when every entry has negligible imaginary part.
    pub fn is_real(&self) -> bool {
        match self {
            OperatorMatrix::Dense(m) => m.iter().all(|z| z.im.abs() <= 1e-14),
            OperatorMatrix::Sparse(m) => m.data.iter().all(|z| z.im.abs() <= 1e-14),
        }
    }

    /// Largest |A − A†| entry.
    pub fn asymmetry(&self) -> f64 {
        match self {
            OperatorMatrix::Dense(m) => {
                let mut worst = 0.0f64;
                for i in 0..m.nrows() {
                    for j in i..m.ncols() {
                        worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
                    }
                }
                worst
            }
            OperatorMatrix::Sparse(m) => m.asymmetry(),
        }
    }

    /// Sum of two matrices over the same dimension.
    pub fn add(&self, other: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dim(), other.dim(), "operator dimension mismatch");
        match (self, other) {
            (OperatorMatrix::Dense(a), OperatorMatrix::Dense(b)) => OperatorMatrix::Dense(a + b),
            _ => {
                let a = self.to_triplets();
                let b = other.to_triplets();
                OperatorMatrix::Sparse(CsrMatrix::from_triplets(
                    self.dim(),
                    a.into_iter().chain(b),
                ))
            }
        }
    }

    pub fn scale(&self, factor: f64) -> OperatorMatrix {
        let f = C64::new(factor, 0.0);
        match self {
            OperatorMatrix::Dense(m) => OperatorMatrix::Dense(m.map(|z| z * f)),
            OperatorMatrix::Sparse(m) => {
                let mut out = m.clone();
                for z in &mut out.data {
                    *z *= f;
                }
                OperatorMatrix::Sparse(out)
            }
        }
    }

    fn to_triplets(&self) -> Vec<(usize, usize, C64)> {
        match self {
            OperatorMatrix::Dense(m) => {
                let mut t = Vec::new();
                for j in 0..m.ncols() {
                    for i in 0..m.nrows() {
                        if m[(i, j)].norm_sqr() > 0.0 {
                            t.push((i, j, m[(i, j)]));
                        }
                    }
                }
                t
            }
            OperatorMatrix::Sparse(m) => m.triplets(),
        }
    }
}

/// Minimal compressed-sparse-row Hermitian matrix.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub dim: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<u32>,
    pub data: Vec<C64>,
}

impl CsrMatrix {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            indptr: vec![0; dim + 1],
            indices: Vec::new(),
            data: Vec::new(),
        }
    }

    /// Build from `(row, col, value)` triplets, summing duplicates and
    /// dropping entries below 1e-15.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut t: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; dim + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut data: Vec<C64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *data.last_mut().unwrap() += v;
            } else {
                indptr[i + 1] += 1;
                indices.push(j as u32);
                data.push(v);
                last = Some((i, j));
            }
        }
        // drop negligible entries
        let mut k = 0;
        let mut out_indices = Vec::with_capacity(indices.len());
        let mut out_data = Vec::with_capacity(data.len());
        let mut out_indptr = vec![0usize; dim + 1];
        for row in 0..dim {
            let count = indptr[row + 1];
            for _ in 0..count {
                if data[k].norm() > 1e-15 {
                    out_indices.push(indices[k]);
                    out_data.push(data[k]);
                    out_indptr[row + 1] += 1;
                }
                k += 1;
            }
        }
        for row in 0..dim {
            out_indptr[row + 1] += out_indptr[row];
        }
        Self {
            dim,
            indptr: out_indptr,
            indices: out_indices,
            data: out_data,
        }
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn matvec(&self, v: &State) -> State {
        let mut out = State::zeros(self.dim);
        for i in 0..self.dim {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.data[k] * v[self.indices[k] as usize];
            }
            out[i] = acc;
        }
        out
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let lo = self.indptr[i];
        let hi = self.indptr[i + 1];
        match self.indices[lo..hi].binary_search(&(j as u32)) {
            Ok(pos) => self.data[lo + pos],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for k in self.indptr[i]..self.indptr[i + 1] {
                m[(i, self.indices[k] as usize)] = self.data[k];
            }
        }
        m
    }

    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        let mut t = Vec::with_capacity(self.nnz());
        for i in 0..self.dim {
            for k in self.indptr[i]..self.indptr[i + 1] {
                t.push((i, self.indices[k] as usize, self.data[k]));
            }
        }
        t
    }

    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[k] as usize;
                worst = worst.max((self.data[k] - self.get(j, i).conj()).norm());
            }
        }
        worst
    }
}

/// Assemble the sum over `terms` of `coeff × (tensor product over layout
/// sites)` into an explicit Hermitian matrix.
pub fn assemble(
    terms: &[MultiSiteOperator],
    layout: &HilbertLayout,
) -> Result<OperatorMatrix, OpalgError> {
    // validate factors against the layout
    for term in terms {
        for &(site, op) in term.factors() {
            let (_, dim) = layout
                .position_of(site)
                .ok_or(OpalgError::UnknownSite(site))?;
            let needed = op.needed_dim();
            let exact_two = matches!(
                op,
                SiteOperator::PauliX | SiteOperator::PauliY | SiteOperator::PauliZ
            );
            if (exact_two && dim != 2) || needed > dim {
                return Err(OpalgError::DimensionMismatch {
                    site,
                    needed,
                    actual: dim,
                });
            }
        }
    }

    let dim = layout.total_dim();
    let mut triplets: Vec<(usize, usize, C64)> = Vec::new();
    let mut col_entries: Vec<(usize, C64)> = Vec::new();
    let mut digits = vec![0usize; layout.sites.len()];
    for j in 0..dim {
        let base = layout.digits_of(j);
        for term in terms {
            if term.coeff == 0.0 {
                continue;
            }
            digits.copy_from_slice(&base);
            // Each factor maps this column's digit to a set of rows; factors
            // here have at most 2 entries per column, and terms touch few
            // sites, so expand the product over factor choices directly.
            let mut branches: Vec<(Vec<usize>, C64)> =
                vec![(base.clone(), C64::new(term.coeff, 0.0))];
            let mut dead = false;
            for &(site, op) in term.factors() {
                let (pos, _) = layout.position_of(site).expect("validated above");
                op.column(base[pos], &mut col_entries);
                if col_entries.is_empty() {
                    dead = true;
                    break;
                }
                if col_entries.len() == 1 {
                    let (row, amp) = col_entries[0];
                    for b in &mut branches {
                        b.0[pos] = row;
                        b.1 *= amp;
                    }
                } else {
                    let mut next = Vec::with_capacity(branches.len() * col_entries.len());
                    for (d, a) in &branches {
                        for &(row, amp) in &col_entries {
                            let mut nd = d.clone();
                            nd[pos] = row;
                            next.push((nd, a * amp));
                        }
                    }
                    branches = next;
                }
            }
            if dead {
                continue;
            }
            for (d, amp) in branches {
                triplets.push((layout.index_of(&d), j, amp));
            }
        }
    }

    let matrix = if dim <= DENSE_LIMIT {
        let mut m = DMatrix::zeros(dim, dim);
        for (i, j, v) in triplets {
            m[(i, j)] += v;
        }
        OperatorMatrix::Dense(m)
    } else {
        OperatorMatrix::Sparse(CsrMatrix::from_triplets(dim, triplets))
    };

    let asym = matrix.asymmetry();
    if asym > HERMITICITY_TOL {
        return Err(OpalgError::NonHermitianAggregate(asym));
    }
    Ok(matrix)
}

/// Matrix-vector product with dimension checking. See
/// [`OperatorMatrix::apply`].
pub fn apply(op: &OperatorMatrix, state: &State) -> Result<State, OpalgError> {
    op.apply(state)
}
