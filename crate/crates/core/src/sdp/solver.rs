//! Infeasible primal-dual interior-point method with Mehrotra
//! predictor-corrector steps along the Nesterov-Todd direction.
//!
//! Each block is rescaled by `D` with `D⁻¹ X D⁻ᴴ = Dᴴ S D = V` diagonal, so
//! the linearised complementarity condition is solved entrywise and step
//! lengths come from diagonal scalings of the scaled directions. The Newton
//! system for `dy` is the normal equation `GᵀG dy = r_p − Gᵀu` of the scaled
//! operator `G: y ↦ (Dᴴ A_k(y) D)_k`. It is solved through a block-sparse QR
//! of `G` rather than a Cholesky factor of `GᵀG`: near degenerate optima the
//! scalings spread over many orders of magnitude and squaring the condition
//! number costs the last digits the stopping test needs.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector};

use super::qr::{RowBlock, SparseQr};
use super::{coordinates, HermitianUnit, Iterate, IterationRecord, Residuals, SdpProblem, SdpSettings, SdpSolution, SolveStatus};
use crate::error::{Error, Result};
use crate::qstate::{hermitian_part, trace_product, CMatrix, C64};

/// Steps below this length on both sides count as stagnation.
const MIN_STEP: f64 = 1e-10;

/// Iterations without a new best point before giving up.
const STALL_ITERATIONS: usize = 6;

/// Step shortening when a full step leaves the cone through roundoff.
const BACKTRACK_TRIES: usize = 8;
const BACKTRACK_FACTOR: f64 = 0.7;

/// Correction rounds applied to each Newton direction.
const REFINEMENT_ROUNDS: usize = 2;

pub fn solve(problem: &SdpProblem, settings: &SdpSettings) -> Result<SdpSolution> {
    problem.check().map_err(Error::InvalidParameter)?;
    let start = initial_iterate(problem);
    run(problem, settings, start)
}

/// Starts from a caller-supplied interior point (`X ≻ 0`, `S ≻ 0`).
pub fn solve_from(problem: &SdpProblem, settings: &SdpSettings, start: Iterate) -> Result<SdpSolution> {
    problem.check().map_err(Error::InvalidParameter)?;
    let nb = problem.blocks.len();
    if start.x.len() != nb || start.s.len() != nb || start.y.len() != problem.num_vars() {
        return Err(Error::Dimension("warm start does not match the problem shape".into()));
    }
    for (k, block) in problem.blocks.iter().enumerate() {
        for m in [&start.x[k], &start.s[k]] {
            if m.nrows() != block.dim() || Cholesky::new(hermitian_part(m)).is_none() {
                return Err(Error::InvalidParameter(format!("warm start block {k} is not positive definite")));
            }
        }
    }
    run(problem, settings, start)
}

/// Scaled identities, sized from the data norms.
fn initial_iterate(problem: &SdpProblem) -> Iterate {
    let m = problem.num_vars();
    let mut x = Vec::new();
    let mut s = Vec::new();
    for block in &problem.blocks {
        let n = block.dim() as f64;
        let mut col_norm = vec![0.0f64; m];
        for terms in block.terms() {
            for &(v, a) in terms {
                col_norm[v] += a * a;
            }
        }
        let col_norm: Vec<f64> = col_norm.into_iter().map(f64::sqrt).collect();
        let ratio = problem
            .objective
            .iter()
            .zip(&col_norm)
            .map(|(b, a)| (1.0 + b.abs()) / (1.0 + a))
            .fold(0.0, f64::max);
        let max_a = col_norm.iter().copied().fold(0.0, f64::max);
        let xi = 10f64.max(n.sqrt()).max(n * ratio);
        let eta = 10f64.max(n.sqrt()).max(max_a).max(block.constant().norm());
        let eye = CMatrix::identity(block.dim(), block.dim());
        x.push(scale(&eye, xi));
        s.push(scale(&eye, eta));
    }
    Iterate { x, y: vec![0.0; m], s }
}

fn inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

fn scale(m: &CMatrix, f: f64) -> CMatrix {
    m.map(|z| z * f)
}

/// NT scaling of one block.
struct Scaling {
    d: CMatrix,
    /// Diagonal of `V`.
    v: Vec<f64>,
}

impl Scaling {
    fn new(x: &CMatrix, s: &CMatrix) -> Option<Self> {
        // S = L Lᴴ, Lᴴ X L = U Λ Uᴴ, D = L⁻ᴴ U Λ^{1/4}
        let ls = Cholesky::new(hermitian_part(s))?.unpack();
        let m = hermitian_part(&(ls.adjoint() * x * &ls));
        let eig = m.symmetric_eigen();
        if eig.eigenvalues.iter().any(|&l| l.is_nan() || l <= 0.0) {
            return None;
        }
        let mut d = ls.adjoint().solve_upper_triangular(&eig.eigenvectors)?;
        for (j, &l) in eig.eigenvalues.iter().enumerate() {
            let f = l.sqrt().sqrt();
            for z in d.column_mut(j).iter_mut() {
                *z *= f;
            }
        }
        let v = eig.eigenvalues.iter().map(|l| l.sqrt()).collect();
        Some(Self { d, v })
    }

    /// `Dᴴ M D`, the scaled image of a dual-side matrix.
    fn dual_scaled(&self, m: &CMatrix) -> CMatrix {
        hermitian_part(&(self.d.adjoint() * m * &self.d))
    }

    /// `Dᴴ B D` for a basis element `B`, using its two-entry sparsity.
    fn unit_scaled(&self, unit: &HermitianUnit) -> CMatrix {
        let n = self.d.nrows();
        let (entries, len) = unit.entries();
        let mut t = CMatrix::zeros(n, n);
        for &(p, q, v) in &entries[..len] {
            for b in 0..n {
                let dq = v * self.d[(q, b)];
                for a in 0..n {
                    t[(a, b)] += self.d[(p, a)].conj() * dq;
                }
            }
        }
        t
    }

    /// `D M Dᴴ`, mapping a scaled primal matrix back.
    fn primal_unscaled(&self, m: &CMatrix) -> CMatrix {
        hermitian_part(&(&self.d * m * self.d.adjoint()))
    }

    /// Largest `α` with `V + α·dM ⪰ 0`; infinite if unbounded.
    fn max_step(&self, dm: &CMatrix) -> f64 {
        let n = self.v.len();
        let inv: Vec<f64> = self.v.iter().map(|v| 1.0 / v.sqrt()).collect();
        let m = CMatrix::from_fn(n, n, |i, j| dm[(i, j)] * (inv[i] * inv[j]));
        let lmin = hermitian_part(&m).symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        if lmin < 0.0 {
            -1.0 / lmin
        } else {
            f64::INFINITY
        }
    }

    /// `V + α·dM`.
    fn stepped(&self, dm: &CMatrix, alpha: f64) -> CMatrix {
        let mut m = scale(dm, alpha);
        for (i, &v) in self.v.iter().enumerate() {
            m[(i, i)] += v;
        }
        m
    }
}

struct Direction {
    dx: Vec<CMatrix>,
    dy: Vec<f64>,
    ds: Vec<CMatrix>,
    /// Scaled counterparts `D⁻¹ dX D⁻ᴴ` and `Dᴴ dS D`.
    dx_scaled: Vec<CMatrix>,
    ds_scaled: Vec<CMatrix>,
}

/// Column layout of the scaled operator `G`, one row block per LMI block.
struct Workspace<'a> {
    problem: &'a SdpProblem,
    /// Per block: touched groups in ascending order.
    block_groups: Vec<Vec<usize>>,
    /// Per block: column of each touched variable inside its row block.
    block_cols: Vec<BTreeMap<usize, usize>>,
    /// Orthonormal Hermitian basis used as row coordinates, by dimension.
    row_basis: BTreeMap<usize, Vec<HermitianUnit>>,
}

impl<'a> Workspace<'a> {
    fn new(problem: &'a SdpProblem) -> Self {
        let mut offsets = Vec::with_capacity(problem.groups.len());
        let mut var_group = Vec::with_capacity(problem.num_vars());
        let mut acc = 0;
        for (g, &n) in problem.groups.iter().enumerate() {
            offsets.push(acc);
            var_group.extend(std::iter::repeat_n(g, n));
            acc += n;
        }
        let mut block_groups = Vec::with_capacity(problem.blocks.len());
        let mut block_cols = Vec::with_capacity(problem.blocks.len());
        let mut row_basis = BTreeMap::new();
        for block in &problem.blocks {
            let mut groups: Vec<usize> = block.terms().iter().flatten().map(|&(v, _)| var_group[v]).collect();
            groups.sort_unstable();
            groups.dedup();
            let mut cols = BTreeMap::new();
            let mut base = 0;
            for &g in &groups {
                for l in 0..problem.groups[g] {
                    cols.insert(offsets[g] + l, base + l);
                }
                base += problem.groups[g];
            }
            block_groups.push(groups);
            block_cols.push(cols);
            let n = block.dim();
            row_basis.entry(n).or_insert_with(|| {
                let pattern: Vec<(usize, usize)> = (0..n).flat_map(|p| (p..n).map(move |q| (p, q))).collect();
                HermitianUnit::spanning(&pattern)
            });
        }
        Self { problem, block_groups, block_cols, row_basis }
    }

    fn factor(&self, scalings: &[Scaling]) -> SparseQr {
        let rows = self
            .problem
            .blocks
            .iter()
            .enumerate()
            .map(|(k, block)| {
                let basis = &self.row_basis[&block.dim()];
                let width: usize = self.block_groups[k].iter().map(|&g| self.problem.groups[g]).sum();
                let mut g = DMatrix::zeros(basis.len(), width);
                for (unit, terms) in block.basis().iter().zip(block.terms()) {
                    if terms.is_empty() {
                        continue;
                    }
                    let h = coordinates(basis, &scalings[k].unit_scaled(unit));
                    for &(v, a) in terms {
                        let c = self.block_cols[k][&v];
                        for (r, hv) in h.iter().enumerate() {
                            g[(r, c)] += a * hv;
                        }
                    }
                }
                RowBlock { groups: self.block_groups[k].clone(), rows: g }
            })
            .collect();
        SparseQr::factor(&self.problem.groups, rows)
    }

    /// Row coordinates of one matrix per block.
    fn rows_of(&self, ms: &[CMatrix]) -> Vec<DVector<f64>> {
        ms.iter().map(|m| DVector::from_vec(coordinates(&self.row_basis[&m.nrows()], m))).collect()
    }
}

/// `(GᵀG)⁻¹ r` through the triangular factor.
fn normal_solve(qr: &SparseQr, r: &[f64]) -> Vec<f64> {
    qr.solve_r(&qr.solve_rt(r))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct State<'a> {
    problem: &'a SdpProblem,
    x: Vec<CMatrix>,
    y: Vec<f64>,
    s: Vec<CMatrix>,
    rp: Vec<f64>,
    rd: Vec<CMatrix>,
}

impl<'a> State<'a> {
    fn refresh_residuals(&mut self) {
        let p = self.problem;
        let mut aty = vec![0.0; p.num_vars()];
        for (block, x) in p.blocks.iter().zip(&self.x) {
            block.apply_adjoint(x, &mut aty);
        }
        self.rp = p.objective.iter().zip(&aty).map(|(b, a)| b - a).collect();
        self.rd = p
            .blocks
            .iter()
            .zip(&self.s)
            .map(|(block, s)| block.slack(&self.y) - s)
            .collect();
    }

    /// `b − A*(Σ dX)` for a candidate primal direction.
    fn primal_defect(&self, dx: &[CMatrix]) -> Vec<f64> {
        let mut at = vec![0.0; self.problem.num_vars()];
        for (block, d) in self.problem.blocks.iter().zip(dx) {
            block.apply_adjoint(d, &mut at);
        }
        self.rp.iter().zip(&at).map(|(r, a)| r - a).collect()
    }

    fn direction(
        &self,
        ws: &Workspace,
        qr: &SparseQr,
        scalings: &[Scaling],
        sigma_mu: f64,
        pred: Option<&Direction>,
    ) -> Direction {
        let p = self.problem;
        let nb = p.blocks.len();

        // V ∘ (dX̃ + dS̃) = σμI − V² − dX̃ₚ ∘ dS̃ₚ, solved entrywise for R̃ = dX̃ + dS̃
        let r_scaled: Vec<CMatrix> = (0..nb)
            .map(|k| {
                let v = &scalings[k].v;
                let n = v.len();
                let mut t = CMatrix::zeros(n, n);
                for i in 0..n {
                    t[(i, i)] = C64::new(sigma_mu - v[i] * v[i], 0.0);
                }
                if let Some(d) = pred {
                    t -= hermitian_part(&(&d.dx_scaled[k] * &d.ds_scaled[k]));
                }
                CMatrix::from_fn(n, n, |i, j| t[(i, j)] * (2.0 / (v[i] + v[j])))
            })
            .collect();

        // dX = D (R̃ − dS̃) Dᴴ with dS = R_d − A(dy)
        let primal_of = |ds: &[CMatrix]| -> (Vec<CMatrix>, Vec<CMatrix>, Vec<CMatrix>) {
            let ds_scaled: Vec<CMatrix> = (0..nb).map(|k| scalings[k].dual_scaled(&ds[k])).collect();
            let dx_scaled: Vec<CMatrix> = (0..nb).map(|k| &r_scaled[k] - &ds_scaled[k]).collect();
            let dx = (0..nb).map(|k| scalings[k].primal_unscaled(&dx_scaled[k])).collect();
            (dx, dx_scaled, ds_scaled)
        };
        // A*(dX) = r_p reads Gᵀ(u + G dy) = r_p with u = R̃ − Dᴴ R_d D,
        // so dy = R⁻¹(R⁻ᵀ r_p − Q₁ᵀ u)
        let u: Vec<CMatrix> = (0..nb).map(|k| &r_scaled[k] - scalings[k].dual_scaled(&self.rd[k])).collect();
        let qtu = qr.q1t(&ws.rows_of(&u));
        let t = qr.solve_rt(&self.rp);
        let dy = qr.solve_r(&t.iter().zip(&qtu).map(|(a, b)| a - b).collect::<Vec<_>>());

        // correct dy while A*(dX) gets closer to the primal residual
        let build = |dy: Vec<f64>| {
            let ds: Vec<CMatrix> = (0..nb).map(|k| hermitian_part(&(&self.rd[k] - p.blocks[k].apply(&dy)))).collect();
            let (dx, dx_scaled, ds_scaled) = primal_of(&ds);
            let defect = self.primal_defect(&dx);
            (Direction { dx, dy, ds, dx_scaled, ds_scaled }, defect)
        };
        let (mut best, mut defect) = build(dy);
        for _ in 0..REFINEMENT_ROUNDS {
            let delta = normal_solve(qr, &defect);
            let (cand, cand_defect) = build(best.dy.iter().zip(&delta).map(|(a, d)| a + d).collect());
            if norm(&cand_defect) >= norm(&defect) {
                break;
            }
            best = cand;
            defect = cand_defect;
        }
        best
    }

    /// Near the optimum long Newton steps leave A*(X) drifting off b. Pulls X
    /// back with the least-norm correction in the old scaling, X staying ≻ 0.
    fn restore_primal(&mut self, qr: &SparseQr, scalings: &[Scaling], target: f64) {
        self.refresh_residuals();
        let before = norm(&self.rp);
        if before <= target {
            return;
        }
        let z = normal_solve(qr, &self.rp);
        let dx: Vec<CMatrix> = self
            .problem
            .blocks
            .iter()
            .zip(scalings)
            .map(|(block, sc)| sc.primal_unscaled(&sc.dual_scaled(&block.apply(&z))))
            .collect();
        let x: Vec<CMatrix> = self.x.iter().zip(&dx).map(|(x, d)| hermitian_part(&(x + d))).collect();
        if !x.iter().zip(&self.s).all(|(x, s)| Scaling::new(x, s).is_some()) {
            return;
        }
        let old = std::mem::replace(&mut self.x, x);
        self.refresh_residuals();
        if norm(&self.rp) >= before {
            self.x = old;
        }
    }

    fn measure(&self, b_norm: f64, c_norm: f64) -> (f64, f64, f64, Residuals) {
        let pobj: f64 = self.problem.blocks.iter().zip(&self.x).map(|(b, x)| trace_product(b.constant(), x)).sum();
        let dobj = self.problem.dual_objective(&self.y);
        let xs: f64 = self.x.iter().zip(&self.s).map(|(x, s)| inner(x, s)).sum();
        let rd_norm = self.rd.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt();
        let rp_norm = self.rp.iter().map(|v| v * v).sum::<f64>().sqrt();
        let residuals = Residuals {
            primal: rp_norm / (1.0 + b_norm),
            dual: rd_norm / (1.0 + c_norm),
            gap: (pobj - dobj).abs().max(xs) / (1.0 + dobj.abs()),
        };
        (pobj, dobj, xs, residuals)
    }
}

fn max_steps(scalings: &[Scaling], dms: &[CMatrix]) -> f64 {
    scalings.iter().zip(dms).map(|(sc, dm)| sc.max_step(dm)).fold(f64::INFINITY, f64::min)
}

/// Best point seen so far, returned when the run ends short of the tolerances.
struct Best {
    merit: f64,
    iteration: usize,
    iterate: Iterate,
    pobj: f64,
    dobj: f64,
    residuals: Residuals,
}

fn run(problem: &SdpProblem, settings: &SdpSettings, start: Iterate) -> Result<SdpSolution> {
    let n_total: f64 = problem.blocks.iter().map(|b| b.dim() as f64).sum();
    let b_norm = problem.objective.iter().map(|v| v * v).sum::<f64>().sqrt();
    let c_norm = problem.blocks.iter().map(|b| b.constant().norm_squared()).sum::<f64>().sqrt();

    let ws = Workspace::new(problem);
    let mut st = State {
        problem,
        x: start.x.iter().map(hermitian_part).collect(),
        y: start.y,
        s: start.s.iter().map(hermitian_part).collect(),
        rp: Vec::new(),
        rd: Vec::new(),
    };
    let mut history = Vec::new();
    let mut last_steps = (0.0, 0.0);
    let mut iteration = 0;
    let mut best: Option<Best> = None;

    let (status, pobj, dobj, residuals) = loop {
        st.refresh_residuals();
        let (pobj, dobj, xs, residuals) = st.measure(b_norm, c_norm);
        let mu = xs / n_total;
        if settings.record_history {
            history.push(IterationRecord {
                iteration,
                primal_objective: pobj,
                dual_objective: dobj,
                residuals,
                mu,
                step_primal: last_steps.0,
                step_dual: last_steps.1,
            });
        }
        let stop = |status| (status, pobj, dobj, residuals);
        let merit = (residuals.primal.max(residuals.dual) / settings.feas_tol).max(residuals.gap / settings.gap_tol);
        if best.as_ref().is_none_or(|b: &Best| merit < b.merit) {
            best = Some(Best {
                merit,
                iteration,
                iterate: Iterate { x: st.x.clone(), y: st.y.clone(), s: st.s.clone() },
                pobj,
                dobj,
                residuals,
            });
        }

        if !(pobj.is_finite() && dobj.is_finite() && mu.is_finite()) {
            break stop(SolveStatus::NumericalFailure);
        }
        if residuals.primal <= settings.feas_tol && residuals.dual <= settings.feas_tol && residuals.gap <= settings.gap_tol {
            break stop(SolveStatus::Optimal);
        }
        if iteration >= settings.max_iterations {
            break stop(SolveStatus::MaxIterations);
        }
        if best.as_ref().is_some_and(|b| iteration >= b.iteration + STALL_ITERATIONS) {
            break stop(SolveStatus::NumericalFailure);
        }

        let Some(scalings) = st.x.iter().zip(&st.s).map(|(x, s)| Scaling::new(x, s)).collect::<Option<Vec<_>>>() else {
            break stop(SolveStatus::NumericalFailure);
        };
        let qr = ws.factor(&scalings);

        let pred = st.direction(&ws, &qr, &scalings, 0.0, None);
        let ap = max_steps(&scalings, &pred.dx_scaled).min(1.0);
        let ad = max_steps(&scalings, &pred.ds_scaled).min(1.0);
        let xs_pred: f64 = scalings
            .iter()
            .enumerate()
            .map(|(k, sc)| inner(&sc.stepped(&pred.dx_scaled[k], ap), &sc.stepped(&pred.ds_scaled[k], ad)))
            .sum();
        let expon = 1f64.max(3.0 * ap.min(ad).powi(2));
        let sigma = (xs_pred / xs).max(0.0).powf(expon).min(1.0);

        let corr = st.direction(&ws, &qr, &scalings, sigma * mu, Some(&pred));
        let ap = max_steps(&scalings, &corr.dx_scaled);
        let ad = max_steps(&scalings, &corr.ds_scaled);
        if ap.is_nan() || ad.is_nan() {
            break stop(SolveStatus::NumericalFailure);
        }
        let gamma = 0.9 + 0.09 * ap.min(ad).min(1.0);
        let ap = (gamma * ap).min(1.0);
        let ad = (gamma * ad).min(1.0);
        if ap < MIN_STEP && ad < MIN_STEP {
            break stop(SolveStatus::NumericalFailure);
        }

        // roundoff can leave a full step just outside the cone; back off until both sides factor
        let (mut ap, mut ad) = (ap, ad);
        let mut next = None;
        for _ in 0..BACKTRACK_TRIES {
            let x: Vec<CMatrix> = st.x.iter().zip(&corr.dx).map(|(x, d)| hermitian_part(&(x + scale(d, ap)))).collect();
            let s: Vec<CMatrix> = st.s.iter().zip(&corr.ds).map(|(s, d)| hermitian_part(&(s + scale(d, ad)))).collect();
            if x.iter().zip(&s).all(|(x, s)| Scaling::new(x, s).is_some()) {
                next = Some((x, s));
                break;
            }
            ap *= BACKTRACK_FACTOR;
            ad *= BACKTRACK_FACTOR;
        }
        let Some((x, s)) = next else {
            break stop(SolveStatus::NumericalFailure);
        };
        st.x = x;
        st.s = s;
        for (y, d) in st.y.iter_mut().zip(&corr.dy) {
            *y += ad * d;
        }
        st.restore_primal(&qr, &scalings, settings.feas_tol / 10.0 * (1.0 + b_norm));
        last_steps = (ap, ad);
        iteration += 1;
    };

    let last = Iterate { x: st.x, y: st.y, s: st.s };
    let (iterate, pobj, dobj, residuals) = match best {
        Some(b) if status != SolveStatus::Optimal => (b.iterate, b.pobj, b.dobj, b.residuals),
        _ => (last, pobj, dobj, residuals),
    };
    Ok(SdpSolution {
        status,
        iterate,
        primal_objective: pobj,
        dual_objective: dobj,
        residuals,
        iterations: iteration,
        history,
    })
}
