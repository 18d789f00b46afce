//! Dense multi-qubit state algebra.
//!
//! Every matrix here is stored as a dense `DMatrix<Complex<f64>>` in the
//! lexicographic computational basis, party 0 being the most significant
//! digit. Four-qubit joint states always use the order `C1 ⊗ C2 ⊗ R1 ⊗ R2`
//! (see [`QubitOrder`]).

use std::fmt;

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Entrywise Hermiticity tolerance for validated states.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Allowed deviation of the trace from one.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-9;
/// Hermiticity tolerance for eigenvalue input.
pub const EIGEN_HERMITIAN_TOL: f64 = 1e-10;
/// Largest total dimension accepted by [`tensor`].
pub const MAX_DIM: usize = 1 << 10;

/// Fixed party order for the cavity-reservoir system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QubitOrder {
    C1 = 0,
    C2 = 1,
    R1 = 2,
    R2 = 3,
}

impl QubitOrder {
    pub const ALL: [QubitOrder; 4] = [QubitOrder::C1, QubitOrder::C2, QubitOrder::R1, QubitOrder::R2];
    pub const CAVITIES: [usize; 2] = [QubitOrder::C1 as usize, QubitOrder::C2 as usize];
    pub const RESERVOIRS: [usize; 2] = [QubitOrder::R1 as usize, QubitOrder::R2 as usize];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            QubitOrder::C1 => "C1",
            QubitOrder::C2 => "C2",
            QubitOrder::R1 => "R1",
            QubitOrder::R2 => "R2",
        }
    }
}

/// Validated density matrix together with its subsystem structure.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
    party_dims: Vec<usize>,
}

impl DensityMatrix {
    /// Checks Hermiticity, unit trace and positivity before accepting `entries`.
    pub fn new(entries: CMatrix, party_dims: Vec<usize>) -> Result<Self> {
        check_dims(&entries, &party_dims)?;
        let dev = hermitian_deviation(&entries);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = entries.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min = min_eigenvalue(&entries);
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("minimum eigenvalue {min:.3e} is negative")));
        }
        Ok(Self { entries, party_dims })
    }

    /// Builds a qubit register state; `dim` must be a power of two.
    pub fn qubits(entries: CMatrix) -> Result<Self> {
        let dim = entries.nrows();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::Dimension(format!("{dim} is not a qubit register dimension")));
        }
        let n = dim.trailing_zeros() as usize;
        Self::new(entries, vec![2; n])
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalised) vector.
    pub fn pure(psi: &DVector<C64>, party_dims: Vec<usize>) -> Result<Self> {
        let norm = psi.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let psi = psi / C64::new(norm, 0.0);
        Self::new(&psi * psi.adjoint(), party_dims)
    }

    /// Projector onto a computational basis state given one digit per party.
    pub fn basis(digits: &[usize], party_dims: Vec<usize>) -> Result<Self> {
        if digits.len() != party_dims.len() || digits.iter().zip(&party_dims).any(|(d, n)| d >= n) {
            return Err(Error::Dimension(format!("basis digits {digits:?} do not fit {party_dims:?}")));
        }
        let dim: usize = party_dims.iter().product();
        let idx = compose_index(digits, &party_dims);
        let mut m = CMatrix::zeros(dim, dim);
        m[(idx, idx)] = C64::new(1.0, 0.0);
        Self::new(m, party_dims)
    }

    pub fn maximally_mixed(party_dims: Vec<usize>) -> Result<Self> {
        let dim: usize = party_dims.iter().product();
        let m = CMatrix::identity(dim, dim) / C64::new(dim as f64, 0.0);
        Self::new(m, party_dims)
    }

    /// Wraps a matrix without validation. Callers guarantee the invariants.
    pub(crate) fn from_parts_unchecked(entries: CMatrix, party_dims: Vec<usize>) -> Self {
        debug_assert_eq!(entries.nrows(), party_dims.iter().product::<usize>());
        Self { entries, party_dims }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn parties(&self) -> usize {
        self.party_dims.len()
    }

    pub fn party_dims(&self) -> &[usize] {
        &self.party_dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        sorted_eigenvalues(&self.entries)
    }

    /// Convex combination `w·self + (1−w)·other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<Self> {
        if self.party_dims != other.party_dims {
            return Err(Error::Dimension("mixing states with different party structure".into()));
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidParameter(format!("mixing weight {w} outside [0, 1]")));
        }
        let m = self.entries.map(|z| z * w) + other.entries.map(|z| z * (1.0 - w));
        Ok(Self::from_parts_unchecked(m, self.party_dims.clone()))
    }

    /// Expectation value `Tr(Aρ)` (real part).
    pub fn expectation(&self, op: &CMatrix) -> f64 {
        trace_product(op, &self.entries)
    }
}

/// One side `M` of a split `M|M̄` of the party set.
///
/// Stored canonically: the member set always contains party 0, so `M|M̄` and
/// `M̄|M` compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bipartition {
    parties: usize,
    members: Vec<usize>,
}

impl Bipartition {
    pub fn new(parties: usize, members: &[usize]) -> Result<Self> {
        if parties < 2 {
            return Err(Error::InvalidBipartition(format!("{parties} parties cannot be split")));
        }
        let mut set: Vec<usize> = members.to_vec();
        set.sort_unstable();
        set.dedup();
        if set.len() != members.len() {
            return Err(Error::InvalidBipartition(format!("repeated party in {members:?}")));
        }
        if set.iter().any(|&p| p >= parties) {
            return Err(Error::InvalidBipartition(format!("{members:?} exceeds {parties} parties")));
        }
        if set.is_empty() || set.len() == parties {
            return Err(Error::InvalidBipartition("member set must be a nonempty proper subset".into()));
        }
        if set[0] != 0 {
            set = (0..parties).filter(|p| !set.contains(p)).collect();
        }
        Ok(Self { parties, members: set })
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn complement(&self) -> Vec<usize> {
        (0..self.parties).filter(|p| !self.members.contains(p)).collect()
    }

    pub fn contains(&self, party: usize) -> bool {
        self.members.contains(&party)
    }
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |s: &[usize]| s.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "{}|{}", side(&self.members), side(&self.complement()))
    }
}

fn check_dims(m: &CMatrix, party_dims: &[usize]) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!("{}x{} matrix is not square", m.nrows(), m.ncols())));
    }
    if party_dims.is_empty() || party_dims.contains(&0) {
        return Err(Error::Dimension(format!("bad party dimensions {party_dims:?}")));
    }
    let prod: usize = party_dims.iter().product();
    if prod != m.nrows() {
        return Err(Error::Dimension(format!(
            "party dimensions {party_dims:?} multiply to {prod}, matrix is {}",
            m.nrows()
        )));
    }
    Ok(())
}

/// Largest `|m_ij − conj(m_ji)|`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// `(M + M†)/2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// `Re Tr(AB)`.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            let x = a[(i, k)];
            let y = b[(k, i)];
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

/// Splits a flat index into per-party digits (party 0 most significant).
pub fn split_index(mut index: usize, party_dims: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; party_dims.len()];
    for (slot, &d) in digits.iter_mut().zip(party_dims).rev() {
        *slot = index % d;
        index /= d;
    }
    digits
}

pub fn compose_index(digits: &[usize], party_dims: &[usize]) -> usize {
    digits.iter().zip(party_dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Kronecker product; party lists are concatenated.
pub fn tensor(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    let dim = a.dim().checked_mul(b.dim()).filter(|&d| d <= MAX_DIM);
    if dim.is_none() {
        return Err(Error::Dimension(format!(
            "tensor product of {} and {} exceeds the maximum dimension {MAX_DIM}",
            a.dim(),
            b.dim()
        )));
    }
    let mut dims = a.party_dims.clone();
    dims.extend_from_slice(&b.party_dims);
    Ok(DensityMatrix::from_parts_unchecked(a.entries.kronecker(&b.entries), dims))
}

/// Reduced state on `keep` (returned in ascending party order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.is_empty() || keep.iter().any(|&p| p >= rho.parties()) {
        return Err(Error::InvalidBipartition(format!(
            "cannot keep parties {keep:?} of a {}-party state",
            rho.parties()
        )));
    }
    let dims = rho.party_dims();
    let kept_dims: Vec<usize> = keep.iter().map(|&p| dims[p]).collect();
    let traced: Vec<usize> = (0..dims.len()).filter(|p| !keep.contains(p)).collect();
    let out_dim: usize = kept_dims.iter().product();
    let mut out = CMatrix::zeros(out_dim, out_dim);

    let digits: Vec<Vec<usize>> = (0..rho.dim()).map(|i| split_index(i, dims)).collect();
    let reduced: Vec<usize> = digits
        .iter()
        .map(|d| compose_index(&keep.iter().map(|&p| d[p]).collect::<Vec<_>>(), &kept_dims))
        .collect();
    let m = rho.matrix();
    for p in 0..rho.dim() {
        for q in 0..rho.dim() {
            if traced.iter().all(|&t| digits[p][t] == digits[q][t]) {
                out[(reduced[p], reduced[q])] += m[(p, q)];
            }
        }
    }
    Ok(DensityMatrix::from_parts_unchecked(out, kept_dims))
}

/// Image of entry `(row, col)` under transposition of the parties in `members`.
pub fn transposed_entry(row: usize, col: usize, party_dims: &[usize], members: &[usize]) -> (usize, usize) {
    let mut r = split_index(row, party_dims);
    let mut c = split_index(col, party_dims);
    for &p in members {
        std::mem::swap(&mut r[p], &mut c[p]);
    }
    (compose_index(&r, party_dims), compose_index(&c, party_dims))
}

/// Entry permutation of the partial transpose over `members`, listed row-major:
/// `perm[row * dim + col]` is the flat position that entry moves to.
pub fn transpose_permutation(party_dims: &[usize], members: &[usize]) -> Vec<usize> {
    let dim: usize = party_dims.iter().product();
    let mut perm = Vec::with_capacity(dim * dim);
    for row in 0..dim {
        for col in 0..dim {
            let (r, c) = transposed_entry(row, col, party_dims, members);
            perm.push(r * dim + c);
        }
    }
    perm
}

/// Partial transpose of an arbitrary matrix over the parties in `members`.
pub fn partial_transpose_matrix(m: &CMatrix, party_dims: &[usize], members: &[usize]) -> CMatrix {
    let dim = m.nrows();
    let mut out = CMatrix::zeros(dim, dim);
    for row in 0..dim {
        for col in 0..dim {
            let (r, c) = transposed_entry(row, col, party_dims, members);
            out[(r, c)] = m[(row, col)];
        }
    }
    out
}

/// `ρ^{T_M}`: Hermitian with unit trace, generally not positive.
pub fn partial_transpose(rho: &DensityMatrix, cut: &Bipartition) -> Result<CMatrix> {
    if cut.parties() != rho.parties() {
        return Err(Error::InvalidBipartition(format!(
            "cut over {} parties applied to a {}-party state",
            cut.parties(),
            rho.parties()
        )));
    }
    Ok(partial_transpose_matrix(rho.matrix(), rho.party_dims(), cut.members()))
}

/// Reorders tensor factors: party `order[k]` of the input becomes party `k`.
pub fn permute_parties(m: &CMatrix, party_dims: &[usize], order: &[usize]) -> CMatrix {
    let dim = m.nrows();
    let new_dims: Vec<usize> = order.iter().map(|&p| party_dims[p]).collect();
    let map: Vec<usize> = (0..dim)
        .map(|i| {
            let d = split_index(i, party_dims);
            compose_index(&order.iter().map(|&p| d[p]).collect::<Vec<_>>(), &new_dims)
        })
        .collect();
    let mut out = CMatrix::zeros(dim, dim);
    for p in 0..dim {
        for q in 0..dim {
            out[(map[p], map[q])] = m[(p, q)];
        }
    }
    out
}

fn sorted_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub(crate) fn min_eigenvalue(m: &CMatrix) -> f64 {
    sorted_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// Real eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension("eigenvalues of a non-square matrix".into()));
    }
    let dev = hermitian_deviation(m);
    if dev > EIGEN_HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    Ok(sorted_eigenvalues(m))
}

/// Trace distance `½‖A − B‖₁` between two Hermitian matrices.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * sorted_eigenvalues(&(a - b)).iter().map(|x| x.abs()).sum::<f64>()
}
