//! Genuine multipartite entanglement via fully decomposable witnesses.
//!
//! For a state `ρ` the monotone is `E(ρ) = max(0, −min Tr(Wρ))` over all
//! Hermitian `W` that split, for every bipartition `M|M̄`, as
//! `W = P_M + Q_M^{T_M}` with `0 ⪯ P_M ⪯ I` and `0 ⪯ Q_M ⪯ I`. A negative
//! minimum certifies that `ρ` is not a mixture of states that are PPT across
//! some cut.
//!
//! `P_M` is eliminated through `P_M = W − Q_M^{T_M}`, leaving `W` and one `Q_M`
//! per cut as the SDP variables.
//!
//! When `ρ` is invariant under local diagonal phases `⊗_j diag(e^{i k θ_j})`
//! (all states produced by the channel are) the optimal `W` can be averaged
//! over that group, so `W` only needs the entries `(p, q)` whose digit
//! difference lies in the integer lattice generated by the support of `ρ`. The
//! matrices then split into sectors and every LMI becomes block diagonal. A
//! real `ρ` further allows a real `W`. Both reductions are exact; they can be
//! switched off through [`WitnessOptions::exploit_symmetry`].

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::evolve_joint;
use crate::error::{Error, Result};
use crate::families::{build, FamilySpec};
use crate::qstate::{
    hermitian_eigenvalues, partial_transpose_matrix, split_index, transposed_entry, Bipartition, CMatrix, DensityMatrix,
};
use crate::sdp::{self, HermitianUnit, LmiBlock, Residuals, SdpProblem, SdpSettings, SolveStatus};

/// Values below this are reported as zero in curves.
pub const ZERO_THRESHOLD: f64 = 1e-6;

/// Certification passes when every check residual is at most this.
pub const CERTIFY_TOL: f64 = 1e-6;

/// All canonical bipartitions of `parties` parties, `2^{parties−1} − 1` of them.
pub fn enumerate_bipartitions(parties: usize) -> Result<Vec<Bipartition>> {
    if parties < 2 {
        return Err(Error::InvalidBipartition(format!("{parties} parties cannot be split")));
    }
    if parties > 16 {
        return Err(Error::InvalidBipartition(format!("{parties} parties is too many to enumerate")));
    }
    let rest = parties - 1;
    (0..(1usize << rest) - 1)
        .map(|mask| {
            let mut members = vec![0];
            members.extend((0..rest).filter(|b| mask >> b & 1 == 1).map(|b| b + 1));
            Bipartition::new(parties, &members)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessOptions {
    pub settings: SdpSettings,
    /// Restrict the variables to the phase- and conjugation-invariant subspace.
    pub exploit_symmetry: bool,
    /// Entries of `ρ` at most this large in modulus count as zero when the
    /// symmetry group is determined.
    pub support_tol: f64,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        Self { settings: SdpSettings::default(), exploit_symmetry: true, support_tol: 1e-13 }
    }
}

#[derive(Debug, Clone)]
pub struct WitnessProblem {
    rho: DensityMatrix,
    cuts: Vec<Bipartition>,
}

impl WitnessProblem {
    pub fn new(rho: DensityMatrix, cuts: Vec<Bipartition>) -> Result<Self> {
        if rho.parties() < 2 {
            return Err(Error::Dimension("a witness problem needs at least two parties".into()));
        }
        if cuts.is_empty() {
            return Err(Error::InvalidBipartition("no cuts given".into()));
        }
        for (i, cut) in cuts.iter().enumerate() {
            if cut.parties() != rho.parties() {
                return Err(Error::InvalidBipartition(format!(
                    "cut {cut} is over {} parties, the state has {}",
                    cut.parties(),
                    rho.parties()
                )));
            }
            if cuts[..i].contains(cut) {
                return Err(Error::InvalidBipartition(format!("cut {cut} listed twice")));
            }
        }
        Ok(Self { rho, cuts })
    }

    /// Problem over every bipartition of the state's parties.
    pub fn all_cuts(rho: DensityMatrix) -> Result<Self> {
        let cuts = enumerate_bipartitions(rho.parties())?;
        Self::new(rho, cuts)
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn rho(&self) -> &DensityMatrix {
        &self.rho
    }

    pub fn cuts(&self) -> &[Bipartition] {
        &self.cuts
    }

    pub fn solve(&self, options: &WitnessOptions) -> Result<WitnessSolution> {
        let layout = Layout::new(self, options);
        let problem = layout.sdp(self);
        let sol = sdp::solve(&problem, &options.settings)?;
        Ok(layout.extract(self, &sol))
    }
}

/// `W = P + Q^{T_M}` for one cut.
#[derive(Debug, Clone)]
pub struct CutDecomposition {
    pub cut: Bipartition,
    pub p: CMatrix,
    pub q: CMatrix,
}

#[derive(Debug, Clone)]
pub struct WitnessSolution {
    /// `min Tr(Wρ)` as attained by the returned witness.
    pub optimum: f64,
    pub witness: CMatrix,
    pub decomposition: Vec<CutDecomposition>,
    pub status: SolveStatus,
    pub residuals: Residuals,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct GmeValue {
    /// `max(0, −optimum)`.
    pub value: f64,
    /// Present when `value > 0`.
    pub witness: Option<CMatrix>,
    pub solution: WitnessSolution,
}

/// `E(ρ)` over all bipartitions with default options.
pub fn gme_negativity(rho: &DensityMatrix) -> Result<GmeValue> {
    gme_negativity_with(rho, &WitnessOptions::default())
}

/// Like [`gme_negativity`]; any status other than `Optimal` is an error.
pub fn gme_negativity_with(rho: &DensityMatrix, options: &WitnessOptions) -> Result<GmeValue> {
    let solution = WitnessProblem::all_cuts(rho.clone())?.solve(options)?;
    into_value(solution)
}

fn into_value(solution: WitnessSolution) -> Result<GmeValue> {
    if solution.status != SolveStatus::Optimal {
        return Err(Error::Solver {
            status: solution.status,
            iterations: solution.iterations,
            residuals: solution.residuals,
        });
    }
    let value = (-solution.optimum).max(0.0);
    let witness = (value > 0.0).then(|| solution.witness.clone());
    Ok(GmeValue { value, witness, solution })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationCheck {
    pub name: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub checks: Vec<CertificationCheck>,
    /// `Tr(Wρ)` recomputed from the witness.
    pub expectation: f64,
    pub passed: bool,
}

impl CertificationReport {
    pub fn worst(&self) -> Option<&CertificationCheck> {
        self.checks.iter().max_by(|a, b| a.residual.total_cmp(&b.residual))
    }
}

/// Re-checks a witness from its matrices alone: the split of `W` for every
/// cut, the spectra of `P_M` and `Q_M`, and the reported optimum.
pub fn certify_witness(rho: &DensityMatrix, solution: &WitnessSolution) -> CertificationReport {
    let mut checks = Vec::new();
    let mut push = |name: String, residual: f64| {
        checks.push(CertificationCheck { name, residual: if residual.is_nan() { f64::INFINITY } else { residual } })
    };
    let w = &solution.witness;
    let shape_ok = w.nrows() == rho.dim() && w.ncols() == rho.dim();
    push("witness shape".into(), if shape_ok { 0.0 } else { f64::INFINITY });
    if !shape_ok {
        return CertificationReport { checks, expectation: f64::NAN, passed: false };
    }
    push("witness hermiticity".into(), crate::qstate::hermitian_deviation(w));

    let bound_violation = |m: &CMatrix| -> (f64, f64) {
        match hermitian_eigenvalues(&crate::qstate::hermitian_part(m)) {
            Ok(ev) => {
                let lo = ev.first().copied().unwrap_or(0.0);
                let hi = ev.last().copied().unwrap_or(0.0);
                ((-lo).max(0.0), (hi - 1.0).max(0.0))
            }
            Err(_) => (f64::INFINITY, f64::INFINITY),
        }
    };
    for d in &solution.decomposition {
        let shape = d.p.shape() == w.shape() && d.q.shape() == w.shape() && d.cut.parties() == rho.parties();
        if !shape {
            push(format!("cut {}: shape", d.cut), f64::INFINITY);
            continue;
        }
        let qt = partial_transpose_matrix(&d.q, rho.party_dims(), d.cut.members());
        push(format!("cut {}: ‖W − P − Q^T‖", d.cut), (w - &d.p - qt).norm());
        let (p_lo, p_hi) = bound_violation(&d.p);
        let (q_lo, q_hi) = bound_violation(&d.q);
        push(format!("cut {}: P ⪰ 0", d.cut), p_lo);
        push(format!("cut {}: P ⪯ I", d.cut), p_hi);
        push(format!("cut {}: Q ⪰ 0", d.cut), q_lo);
        push(format!("cut {}: Q ⪯ I", d.cut), q_hi);
    }
    let expectation = crate::qstate::trace_product(w, rho.matrix());
    push("|Tr(Wρ) − optimum|".into(), (expectation - solution.optimum).abs());

    let passed = !solution.decomposition.is_empty() && checks.iter().all(|c| c.residual <= CERTIFY_TOL);
    CertificationReport { checks, expectation, passed }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmePoint {
    pub kt: f64,
    /// `E` with values below [`ZERO_THRESHOLD`] set to zero; `None` when the
    /// solver did not reach `Optimal`.
    pub value: Option<f64>,
    /// `min Tr(Wρ)` as returned by the solver.
    pub raw_optimum: f64,
    pub status: SolveStatus,
    pub residuals: Residuals,
    pub iterations: usize,
}

/// `E` of the joint four-qubit state along a `κt` grid with default options.
pub fn gme_curve(spec: &FamilySpec, grid: &[f64]) -> Result<Vec<GmePoint>> {
    gme_curve_with(spec, grid, &WitnessOptions::default(), None)
}

/// Grid points are solved independently and in parallel. Solver failures are
/// kept as points with `value: None`; only invalid input is an error.
pub fn gme_curve_with(
    spec: &FamilySpec,
    grid: &[f64],
    options: &WitnessOptions,
    cuts: Option<&[Bipartition]>,
) -> Result<Vec<GmePoint>> {
    let x = build(spec)?;
    let cuts = match cuts {
        Some(c) => c.to_vec(),
        None => enumerate_bipartitions(4)?,
    };
    grid.par_iter()
        .map(|&kt| {
            let rho = evolve_joint(&x, kt)?;
            let sol = WitnessProblem::new(rho, cuts.clone())?.solve(options)?;
            Ok(point_from(kt, &sol))
        })
        .collect()
}

pub(crate) fn point_from(kt: f64, sol: &WitnessSolution) -> GmePoint {
    let value = (sol.status == SolveStatus::Optimal).then(|| {
        let e = (-sol.optimum).max(0.0);
        if e < ZERO_THRESHOLD {
            0.0
        } else {
            e
        }
    });
    GmePoint {
        kt,
        value,
        raw_optimum: sol.optimum,
        status: sol.status,
        residuals: sol.residuals,
        iterations: sol.iterations,
    }
}

/// Integer lattice in echelon form, for membership tests.
#[derive(Debug, Clone, Default)]
struct Lattice {
    /// Rows with strictly increasing pivot columns; entries left of a pivot are zero.
    rows: Vec<(usize, Vec<i64>)>,
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        if a < 0 {
            (-a, -1, 0)
        } else {
            (a, 1, 0)
        }
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

impl Lattice {
    fn insert(&mut self, mut v: Vec<i64>) {
        for col in 0..v.len() {
            if v[col] == 0 {
                continue;
            }
            match self.rows.iter().position(|(c, _)| *c >= col) {
                Some(i) if self.rows[i].0 == col => {
                    let r = &self.rows[i].1;
                    let (g, a, b) = ext_gcd(r[col], v[col]);
                    let (rc, vc) = (r[col] / g, v[col] / g);
                    let combined: Vec<i64> = r.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
                    let reduced: Vec<i64> = r.iter().zip(&v).map(|(x, y)| rc * y - vc * x).collect();
                    self.rows[i].1 = combined;
                    v = reduced;
                }
                other => {
                    let at = other.unwrap_or(self.rows.len());
                    self.rows.insert(at, (col, v));
                    return;
                }
            }
        }
    }

    fn contains(&self, v: &[i64]) -> bool {
        let mut v = v.to_vec();
        for (col, r) in &self.rows {
            if v[..*col].iter().any(|&x| x != 0) {
                return false;
            }
            if v[*col] % r[*col] != 0 {
                return false;
            }
            let k = v[*col] / r[*col];
            for (x, y) in v.iter_mut().zip(r) {
                *x -= k * y;
            }
        }
        v.iter().all(|&x| x == 0)
    }
}

/// Variable layout and sector structure of one witness problem.
struct Layout {
    dim: usize,
    /// Index sectors of `W` (and of each `P_M`).
    w_sectors: Vec<Vec<usize>>,
    w_units: Vec<HermitianUnit>,
    /// Per cut: sectors of `Q_M` and its units.
    q_sectors: Vec<Vec<Vec<usize>>>,
    q_units: Vec<Vec<HermitianUnit>>,
}

fn sectors_of(dim: usize, same: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut sectors: Vec<Vec<usize>> = Vec::new();
    for p in 0..dim {
        match sectors.iter_mut().find(|s| same(s[0], p)) {
            Some(s) => s.push(p),
            None => sectors.push(vec![p]),
        }
    }
    sectors
}

fn units_over(sectors: &[Vec<usize>], real: bool) -> Vec<HermitianUnit> {
    let mut pattern = Vec::new();
    for s in sectors {
        for (i, &p) in s.iter().enumerate() {
            for &q in &s[i..] {
                pattern.push((p, q));
            }
        }
    }
    pattern.sort_unstable();
    HermitianUnit::spanning(&pattern)
        .into_iter()
        .filter(|u| !(real && matches!(u, HermitianUnit::Im(..))))
        .collect()
}

impl Layout {
    fn new(wp: &WitnessProblem, options: &WitnessOptions) -> Self {
        let rho = wp.rho.matrix();
        let dims = wp.rho.party_dims();
        let dim = wp.dim();
        let digits: Vec<Vec<i64>> = (0..dim)
            .map(|i| split_index(i, dims).into_iter().map(|d| d as i64).collect())
            .collect();
        let diff = |p: usize, q: usize| -> Vec<i64> { digits[p].iter().zip(&digits[q]).map(|(a, b)| a - b).collect() };

        let (real, lattice) = if options.exploit_symmetry {
            let mut lattice = Lattice::default();
            let mut real = true;
            for p in 0..dim {
                for q in p + 1..dim {
                    let z = rho[(p, q)];
                    if z.norm() > options.support_tol {
                        lattice.insert(diff(p, q));
                    }
                    if z.im.abs() > options.support_tol {
                        real = false;
                    }
                }
            }
            (real, Some(lattice))
        } else {
            (false, None)
        };

        let w_sectors = match &lattice {
            Some(l) => sectors_of(dim, |p, q| l.contains(&diff(p, q))),
            None => vec![(0..dim).collect()],
        };
        let w_units = units_over(&w_sectors, real);

        let mut q_sectors = Vec::new();
        let mut q_units = Vec::new();
        for cut in &wp.cuts {
            let members = cut.members();
            let sectors = match &lattice {
                Some(l) => sectors_of(dim, |p, q| {
                    let (r, c) = transposed_entry(p, q, dims, members);
                    l.contains(&diff(r, c))
                }),
                None => vec![(0..dim).collect()],
            };
            q_units.push(units_over(&sectors, real));
            q_sectors.push(sectors);
        }
        Self { dim, w_sectors, w_units, q_sectors, q_units }
    }

    /// Variable offsets: the `Q_M` groups in cut order, then `W`.
    fn q_offset(&self, cut: usize) -> usize {
        self.q_units[..cut].iter().map(Vec::len).sum()
    }

    fn w_offset(&self) -> usize {
        self.q_units.iter().map(Vec::len).sum()
    }

    fn sdp(&self, wp: &WitnessProblem) -> SdpProblem {
        let dims = wp.rho.party_dims();
        let rho = wp.rho.matrix();
        let w_off = self.w_offset();
        let nvars = w_off + self.w_units.len();

        let mut objective = vec![0.0; nvars];
        for (j, u) in self.w_units.iter().enumerate() {
            objective[w_off + j] = -u.coordinate(rho);
        }
        let mut groups: Vec<usize> = self.q_units.iter().map(Vec::len).collect();
        groups.push(self.w_units.len());

        let local = |sectors: &[Vec<usize>]| -> HashMap<usize, (usize, usize)> {
            let mut m = HashMap::new();
            for (s, idx) in sectors.iter().enumerate() {
                for (l, &p) in idx.iter().enumerate() {
                    m.insert(p, (s, l));
                }
            }
            m
        };
        let relabel = |u: HermitianUnit, pos: &HashMap<usize, (usize, usize)>| -> (usize, HermitianUnit) {
            let loc = |p: usize| pos[&p];
            match u {
                HermitianUnit::Diag(p) => (loc(p).0, HermitianUnit::Diag(loc(p).1)),
                // sectors list indices in increasing order, so local order is kept
                HermitianUnit::Re(p, q) => (loc(p).0, HermitianUnit::Re(loc(p).1, loc(q).1)),
                HermitianUnit::Im(p, q) => (loc(p).0, HermitianUnit::Im(loc(p).1, loc(q).1)),
            }
        };
        let w_pos = local(&self.w_sectors);

        let mut blocks = Vec::new();
        for (k, cut) in wp.cuts.iter().enumerate() {
            let members = cut.members();
            let q_off = self.q_offset(k);
            let pt = |r: usize, c: usize| transposed_entry(r, c, dims, members);

            // P_M = W − Q^{T_M} ⪰ 0 and I − P_M ⪰ 0, one pair per W sector
            let mut lower: Vec<LmiBlock> =
                self.w_sectors.iter().map(|s| LmiBlock::new(CMatrix::zeros(s.len(), s.len()))).collect();
            let mut upper: Vec<LmiBlock> =
                self.w_sectors.iter().map(|s| LmiBlock::new(CMatrix::identity(s.len(), s.len()))).collect();
            for (j, &u) in self.w_units.iter().enumerate() {
                let (s, lu) = relabel(u, &w_pos);
                lower[s].add_term(w_off + j, lu, -1.0);
                upper[s].add_term(w_off + j, lu, 1.0);
            }
            for (j, &v) in self.q_units[k].iter().enumerate() {
                let (vt, sign) = v.permuted(pt);
                let (s, lu) = relabel(vt, &w_pos);
                lower[s].add_term(q_off + j, lu, sign);
                upper[s].add_term(q_off + j, lu, -sign);
            }
            blocks.extend(lower);
            blocks.extend(upper);

            // 0 ⪯ Q_M ⪯ I per Q sector
            let q_pos = local(&self.q_sectors[k]);
            let sectors = &self.q_sectors[k];
            let mut lower: Vec<LmiBlock> =
                sectors.iter().map(|s| LmiBlock::new(CMatrix::zeros(s.len(), s.len()))).collect();
            let mut upper: Vec<LmiBlock> =
                sectors.iter().map(|s| LmiBlock::new(CMatrix::identity(s.len(), s.len()))).collect();
            for (j, &v) in self.q_units[k].iter().enumerate() {
                let (s, lu) = relabel(v, &q_pos);
                lower[s].add_term(q_off + j, lu, -1.0);
                upper[s].add_term(q_off + j, lu, 1.0);
            }
            blocks.extend(lower);
            blocks.extend(upper);
        }
        SdpProblem::new(objective, groups, blocks)
    }

    fn extract(&self, wp: &WitnessProblem, sol: &sdp::SdpSolution) -> WitnessSolution {
        let y = &sol.iterate.y;
        let w_off = self.w_offset();
        let witness = sdp::from_coordinates(self.dim, &self.w_units, &y[w_off..]);
        let dims = wp.rho.party_dims();
        let decomposition = wp
            .cuts
            .iter()
            .enumerate()
            .map(|(k, cut)| {
                let off = self.q_offset(k);
                let q = sdp::from_coordinates(self.dim, &self.q_units[k], &y[off..off + self.q_units[k].len()]);
                let p = &witness - partial_transpose_matrix(&q, dims, cut.members());
                CutDecomposition { cut: cut.clone(), p, q }
            })
            .collect();
        let optimum = crate::qstate::trace_product(&witness, wp.rho.matrix());
        WitnessSolution {
            optimum,
            witness,
            decomposition,
            status: sol.status,
            residuals: sol.residuals,
            iterations: sol.iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::FamilySpec;
    use crate::negativity::xstate_negativity;
    use crate::qstate::C64;

    #[test]
    fn bipartition_counts() {
        assert_eq!(enumerate_bipartitions(2).unwrap().len(), 1);
        let three: Vec<String> = enumerate_bipartitions(3).unwrap().iter().map(|c| c.to_string()).collect();
        assert_eq!(three.len(), 3);
        for want in ["0|1,2", "0,1|2", "0,2|1"] {
            assert!(three.contains(&want.to_string()), "{three:?}");
        }
        let four = enumerate_bipartitions(4).unwrap();
        assert_eq!(four.len(), 7);
        assert_eq!(four.iter().filter(|c| c.members().len() == 2).count(), 3);
        assert!(enumerate_bipartitions(1).is_err());
    }

    #[test]
    fn lattice_membership() {
        let mut l = Lattice::default();
        l.insert(vec![1, 1, 0, 0]);
        l.insert(vec![1, -1, 0, 0]);
        assert!(l.contains(&[2, 0, 0, 0]));
        assert!(l.contains(&[0, 2, 0, 0]));
        assert!(!l.contains(&[1, 0, 0, 0]));
        assert!(!l.contains(&[0, 0, 1, 0]));
        l.insert(vec![0, 1, -1, 0]);
        assert!(l.contains(&[1, 0, 1, 0]));
        assert!(!l.contains(&[1, 0, 0, 0]));
        assert!(l.contains(&[0, 0, 0, 0]));
    }

    #[test]
    fn maximally_mixed_state_is_not_gme() {
        let rho = DensityMatrix::maximally_mixed(vec![2; 4]).unwrap();
        let v = gme_negativity(&rho).unwrap();
        assert!(v.value < 1e-7, "{}", v.value);
        let report = certify_witness(&rho, &v.solution);
        assert!(report.passed, "{report:?}");
        assert!(report.expectation >= -1e-6);
    }

    #[test]
    fn bell_state_matches_negativity() {
        let x = build(&FamilySpec::Werner { p: 1.0 }).unwrap();
        let v = gme_negativity(&x.to_density()).unwrap();
        assert!((v.value - 0.5).abs() < 1e-7, "{}", v.value);
        assert!(v.witness.is_some());
    }

    #[test]
    fn werner_optimum_is_minus_negativity() {
        for i in 0..=10 {
            let p = i as f64 / 10.0;
            let x = build(&FamilySpec::Werner { p }).unwrap();
            let sol = WitnessProblem::all_cuts(x.to_density()).unwrap().solve(&WitnessOptions::default()).unwrap();
            assert_eq!(sol.status, SolveStatus::Optimal);
            let want = -xstate_negativity(&x);
            assert!((sol.optimum.min(0.0) - want).abs() < 1e-7, "p = {p}: {} vs {want}", sol.optimum);
        }
    }

    #[test]
    fn symmetry_reduction_does_not_change_the_optimum() {
        let s = 10f64.sqrt();
        let x = build(&FamilySpec::PureSuperposition { alpha: 1.0 / s, beta: 3.0 / s }).unwrap();
        let rho = evolve_joint(&x, 0.7).unwrap();
        let full = WitnessOptions { exploit_symmetry: false, ..Default::default() };
        let a = gme_negativity_with(&rho, &WitnessOptions::default()).unwrap();
        let b = gme_negativity_with(&rho, &full).unwrap();
        assert!((a.value - b.value).abs() < 1e-6, "{} vs {}", a.value, b.value);
        assert!(certify_witness(&rho, &a.solution).passed);
        assert!(certify_witness(&rho, &b.solution).passed);
    }

    #[test]
    fn tampered_witness_fails_certification() {
        let s = 10f64.sqrt();
        let x = build(&FamilySpec::PureSuperposition { alpha: 1.0 / s, beta: 3.0 / s }).unwrap();
        let rho = evolve_joint(&x, 0.7).unwrap();
        let v = gme_negativity(&rho).unwrap();
        let report = certify_witness(&rho, &v.solution);
        assert!(report.passed, "{:?}", report.worst());
        assert!((report.expectation + 0.3).abs() < 0.01, "{}", report.expectation);

        let mut tampered = v.solution.clone();
        tampered.witness[(0, 0)] += C64::new(0.1, 0.0);
        let report = certify_witness(&rho, &tampered);
        assert!(!report.passed);
    }
}
