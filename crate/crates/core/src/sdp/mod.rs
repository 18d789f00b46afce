//! Semidefinite programs over Hermitian matrices.
//!
//! Problems are stated in inequality form
//!
//! ```text
//! maximize   bᵀy
//! subject to S_k = C_k − A_k(y) ⪰ 0,   k = 1..K
//! ```
//!
//! with `y ∈ ℝᵐ` and each `S_k` a Hermitian `n_k × n_k` matrix. The paired
//! problem is
//!
//! ```text
//! minimize   Σ_k ⟨C_k, X_k⟩
//! subject to Σ_k A_k*(X_k) = b,   X_k ⪰ 0
//! ```
//!
//! where `⟨A, B⟩ = Re Tr(A†B)`. Each `A_k` is stored sparsely over a local
//! orthonormal basis of Hermitian matrices ([`HermitianUnit`]), so a block only
//! carries the coordinates it actually touches.

mod qr;
mod solver;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::qstate::{CMatrix, C64};

pub use solver::{solve, solve_from};

/// One element of the orthonormal basis of `n × n` Hermitian matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HermitianUnit {
    /// `E_pp`
    Diag(usize),
    /// `(E_pq + E_qp)/√2`, `p < q`
    Re(usize, usize),
    /// `i(E_pq − E_qp)/√2`, `p < q`
    Im(usize, usize),
}

impl HermitianUnit {
    /// Nonzero entries `(row, col, value)`.
    pub fn entries(&self) -> ([(usize, usize, C64); 2], usize) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let zero = (0, 0, C64::new(0.0, 0.0));
        match *self {
            HermitianUnit::Diag(p) => ([(p, p, C64::new(1.0, 0.0)), zero], 1),
            HermitianUnit::Re(p, q) => ([(p, q, C64::new(s, 0.0)), (q, p, C64::new(s, 0.0))], 2),
            HermitianUnit::Im(p, q) => ([(p, q, C64::new(0.0, s)), (q, p, C64::new(0.0, -s))], 2),
        }
    }

    /// `⟨B, M⟩ = Re Tr(B M)` for Hermitian `M`.
    pub fn coordinate(&self, m: &CMatrix) -> f64 {
        let (entries, len) = self.entries();
        entries[..len].iter().map(|&(r, c, v)| (v * m[(c, r)]).re).sum()
    }

    /// `m += w·B`.
    pub fn accumulate(&self, m: &mut CMatrix, w: f64) {
        let (entries, len) = self.entries();
        for &(r, c, v) in &entries[..len] {
            m[(r, c)] += v * w;
        }
    }

    /// The units spanning Hermitian matrices supported on the entries `(p, q)`,
    /// `p ≤ q`, of `pattern`.
    pub fn spanning(pattern: &[(usize, usize)]) -> Vec<HermitianUnit> {
        let mut units = Vec::new();
        for &(p, q) in pattern {
            match p.cmp(&q) {
                std::cmp::Ordering::Equal => units.push(HermitianUnit::Diag(p)),
                std::cmp::Ordering::Less => {
                    units.push(HermitianUnit::Re(p, q));
                    units.push(HermitianUnit::Im(p, q));
                }
                std::cmp::Ordering::Greater => {}
            }
        }
        units
    }

    /// Image under an entry permutation `entry ↦ perm(entry)` that commutes
    /// with transposition, returned with the sign it picks up.
    pub fn permuted(&self, perm: impl Fn(usize, usize) -> (usize, usize)) -> (HermitianUnit, f64) {
        match *self {
            HermitianUnit::Diag(p) => {
                let (r, c) = perm(p, p);
                debug_assert_eq!(r, c);
                (HermitianUnit::Diag(r), 1.0)
            }
            HermitianUnit::Re(p, q) => {
                let (r, c) = perm(p, q);
                (HermitianUnit::Re(r.min(c), r.max(c)), 1.0)
            }
            HermitianUnit::Im(p, q) => {
                let (r, c) = perm(p, q);
                if r < c {
                    (HermitianUnit::Im(r, c), 1.0)
                } else {
                    (HermitianUnit::Im(c, r), -1.0)
                }
            }
        }
    }
}

/// Coordinates of a Hermitian matrix in the given basis.
pub fn coordinates(units: &[HermitianUnit], m: &CMatrix) -> Vec<f64> {
    units.iter().map(|u| u.coordinate(m)).collect()
}

/// Hermitian matrix with the given coordinates.
pub fn from_coordinates(dim: usize, units: &[HermitianUnit], coords: &[f64]) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    for (u, &w) in units.iter().zip(coords) {
        u.accumulate(&mut m, w);
    }
    m
}

/// One linear matrix inequality `C − A(y) ⪰ 0`.
#[derive(Debug, Clone)]
pub struct LmiBlock {
    dim: usize,
    constant: CMatrix,
    basis: Vec<HermitianUnit>,
    lookup: HashMap<HermitianUnit, usize>,
    /// For each basis element, the `(variable, coefficient)` pairs of `A`.
    terms: Vec<Vec<(usize, f64)>>,
}

impl LmiBlock {
    pub fn new(constant: CMatrix) -> Self {
        assert_eq!(constant.nrows(), constant.ncols(), "LMI constant must be square");
        Self {
            dim: constant.nrows(),
            constant,
            basis: Vec::new(),
            lookup: HashMap::new(),
            terms: Vec::new(),
        }
    }

    /// Adds `coeff · y[var] · unit` to `A(y)`.
    pub fn add_term(&mut self, var: usize, unit: HermitianUnit, coeff: f64) {
        let c = *self.lookup.entry(unit).or_insert_with(|| {
            self.basis.push(unit);
            self.terms.push(Vec::new());
            self.basis.len() - 1
        });
        match self.terms[c].iter_mut().find(|(v, _)| *v == var) {
            Some(slot) => slot.1 += coeff,
            None => self.terms[c].push((var, coeff)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constant(&self) -> &CMatrix {
        &self.constant
    }

    pub fn basis(&self) -> &[HermitianUnit] {
        &self.basis
    }

    pub(crate) fn terms(&self) -> &[Vec<(usize, f64)>] {
        &self.terms
    }

    /// `A(y)` as a matrix.
    pub fn apply(&self, y: &[f64]) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (unit, terms) in self.basis.iter().zip(&self.terms) {
            let w: f64 = terms.iter().map(|&(v, a)| a * y[v]).sum();
            if w != 0.0 {
                unit.accumulate(&mut m, w);
            }
        }
        m
    }

    /// `out += A*(M)`.
    pub fn apply_adjoint(&self, m: &CMatrix, out: &mut [f64]) {
        for (unit, terms) in self.basis.iter().zip(&self.terms) {
            let coord = unit.coordinate(m);
            for &(v, a) in terms {
                out[v] += a * coord;
            }
        }
    }

    /// `C − A(y)`.
    pub fn slack(&self, y: &[f64]) -> CMatrix {
        &self.constant - self.apply(y)
    }
}

/// Inequality-form SDP. `groups` partitions `y` into consecutive ranges;
/// variables from groups that never share a block give zero Schur blocks,
/// which the factorization skips.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub objective: Vec<f64>,
    pub groups: Vec<usize>,
    pub blocks: Vec<LmiBlock>,
}

impl SdpProblem {
    pub fn new(objective: Vec<f64>, groups: Vec<usize>, blocks: Vec<LmiBlock>) -> Self {
        Self { objective, groups, blocks }
    }

    /// Single dense variable group.
    pub fn dense(objective: Vec<f64>, blocks: Vec<LmiBlock>) -> Self {
        let m = objective.len();
        Self::new(objective, vec![m], blocks)
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn dual_objective(&self, y: &[f64]) -> f64 {
        self.objective.iter().zip(y).map(|(b, y)| b * y).sum()
    }

    pub(crate) fn check(&self) -> Result<(), String> {
        let m = self.num_vars();
        if self.groups.iter().sum::<usize>() != m || self.groups.contains(&0) {
            return Err(format!("groups {:?} do not partition {m} variables", self.groups));
        }
        if self.blocks.is_empty() {
            return Err("no LMI blocks".into());
        }
        for (k, block) in self.blocks.iter().enumerate() {
            if crate::qstate::hermitian_deviation(&block.constant) > 1e-12 {
                return Err(format!("block {k} has a non-Hermitian constant"));
            }
            for unit in &block.basis {
                let (e, len) = unit.entries();
                if e[..len].iter().any(|&(r, c, _)| r >= block.dim || c >= block.dim) {
                    return Err(format!("block {k} basis element {unit:?} out of range"));
                }
            }
            if block.terms.iter().flatten().any(|&(v, _)| v >= m) {
                return Err(format!("block {k} references a variable beyond {m}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    MaxIterations,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::NumericalFailure => "numerical_failure",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Relative infeasibilities and duality gap of an iterate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Residuals {
    /// `‖b − A*(X)‖ / (1 + ‖b‖)`
    pub primal: f64,
    /// `‖C − S − A(y)‖ / (1 + ‖C‖)`
    pub dual: f64,
    /// `max(|pobj − dobj|, ⟨X, S⟩) / (1 + |dobj|)`
    pub gap: f64,
}

impl fmt::Display for Residuals {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "primal {:.2e}, dual {:.2e}, gap {:.2e}", self.primal, self.dual, self.gap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdpSettings {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub max_iterations: usize,
    /// Keep the per-iteration log in [`SdpSolution::history`].
    pub record_history: bool,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iterations: 100,
            record_history: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub residuals: Residuals,
    pub mu: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

/// Primal-dual point. `x` and `s` hold one matrix per block.
#[derive(Debug, Clone)]
pub struct Iterate {
    pub x: Vec<CMatrix>,
    pub y: Vec<f64>,
    pub s: Vec<CMatrix>,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub iterate: Iterate,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub residuals: Residuals,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
}
