//! Block-sparse QR for least-squares Newton systems.
//!
//! The scaled constraint operator `G` arrives as row blocks, each touching a
//! few variable groups. Groups are eliminated in order: every pending row
//! block whose first group is `j` is stacked into a dense front, the front is
//! factored by Householder QR, its leading rows become block row `j` of `R`
//! and the remaining triangle is passed on as a new row block. This avoids
//! forming `GᵀG`, whose condition number is the square of `G`'s.

use nalgebra::{DMatrix, DVector, QR};

/// Diagonal entries of `R` below this fraction of their column's norm in `G`
/// count as zero and the matching solution components are set to zero. Only
/// structurally empty columns should trip it: small but genuine pivots carry
/// the directions that matter near a degenerate optimum.
const PIVOT_TOL: f64 = 1e-14;

/// Rows of `G` over the union of `groups` (sorted ascending), laid out
/// group after group.
#[derive(Debug, Clone)]
pub(crate) struct RowBlock {
    pub groups: Vec<usize>,
    pub rows: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy)]
enum Source {
    Input(usize),
    Front(usize),
}

struct Front {
    sources: Vec<Source>,
    /// Rows contributed by each source, in stacking order.
    counts: Vec<usize>,
    /// Rows of the stacked matrix, after zero padding.
    height: usize,
    qr: QR<f64, nalgebra::Dyn, nalgebra::Dyn>,
    /// Rows of the triangle handed on to a later front.
    leftover: usize,
}

pub(crate) struct SparseQr {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    /// `R` block row per group: `(g, R_jg)` with the diagonal block first.
    r_rows: Vec<Vec<(usize, DMatrix<f64>)>>,
    fronts: Vec<Front>,
    /// Zeroed pivots, by global variable index.
    dead: Vec<bool>,
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut u: Vec<usize> = a.iter().chain(b).copied().collect();
    u.sort_unstable();
    u.dedup();
    u
}

impl SparseQr {
    pub fn factor(sizes: &[usize], inputs: Vec<RowBlock>) -> Self {
        let g = sizes.len();
        let mut offsets = Vec::with_capacity(g);
        let mut acc = 0;
        for &n in sizes {
            offsets.push(acc);
            acc += n;
        }

        let mut col_norm = vec![0.0f64; acc];
        for b in &inputs {
            let mut c = 0;
            for &gi in &b.groups {
                for l in 0..sizes[gi] {
                    col_norm[offsets[gi] + l] += b.rows.column(c + l).norm_squared();
                }
                c += sizes[gi];
            }
        }

        let mut pending: Vec<(Source, RowBlock)> =
            inputs.into_iter().enumerate().map(|(i, b)| (Source::Input(i), b)).collect();
        let mut r_rows = Vec::with_capacity(g);
        let mut fronts = Vec::with_capacity(g);
        let mut dead = vec![false; acc];

        for j in 0..g {
            let (mine, rest): (Vec<_>, Vec<_>) = pending.into_iter().partition(|(_, b)| b.groups[0] == j);
            pending = rest;
            let groups = mine.iter().fold(vec![j], |u, (_, b)| union(&u, &b.groups));
            let width: usize = groups.iter().map(|&gi| sizes[gi]).sum();
            let col_of = |gi: usize| -> usize { groups.iter().take_while(|&&h| h != gi).map(|&h| sizes[h]).sum() };

            let stacked: usize = mine.iter().map(|(_, b)| b.rows.nrows()).sum();
            let height = stacked.max(sizes[j]);
            let mut m = DMatrix::zeros(height, width);
            let mut r0 = 0;
            for (_, b) in &mine {
                let mut c = 0;
                for &gi in &b.groups {
                    let dst = col_of(gi);
                    m.view_mut((r0, dst), (b.rows.nrows(), sizes[gi])).copy_from(&b.rows.view((0, c), (b.rows.nrows(), sizes[gi])));
                    c += sizes[gi];
                }
                r0 += b.rows.nrows();
            }

            let qr = QR::new(m);
            let r = qr.r();
            let nj = sizes[j];
            for l in 0..nj {
                let idx = offsets[j] + l;
                if r[(l, l)].abs() <= PIVOT_TOL * col_norm[idx].sqrt() {
                    dead[idx] = true;
                }
            }
            let mut row = Vec::with_capacity(groups.len());
            for &gi in &groups {
                row.push((gi, r.view((0, col_of(gi)), (nj, sizes[gi])).into_owned()));
            }
            r_rows.push(row);

            let leftover = r.nrows().saturating_sub(nj);
            if leftover > 0 && groups.len() > 1 {
                let rows = r.view((nj, nj), (leftover, width - nj)).into_owned();
                pending.push((Source::Front(j), RowBlock { groups: groups[1..].to_vec(), rows }));
            }
            fronts.push(Front {
                sources: mine.iter().map(|(s, _)| *s).collect(),
                counts: mine.iter().map(|(_, b)| b.rows.nrows()).collect(),
                height,
                qr,
                leftover: if groups.len() > 1 { leftover } else { 0 },
            });
        }
        Self { sizes: sizes.to_vec(), offsets, r_rows, fronts, dead }
    }

    /// `Q₁ᵀ u`, with `u` given per input row block.
    pub fn q1t(&self, u: &[DVector<f64>]) -> Vec<f64> {
        let mut carried: Vec<Option<DVector<f64>>> = vec![None; self.fronts.len()];
        let mut out = vec![0.0; self.offsets.last().map_or(0, |o| o + self.sizes[self.sizes.len() - 1])];
        for (j, f) in self.fronts.iter().enumerate() {
            let mut v = DVector::zeros(f.height);
            let mut r0 = 0;
            for (s, &n) in f.sources.iter().zip(&f.counts) {
                let part = match *s {
                    Source::Input(i) => &u[i],
                    Source::Front(k) => carried[k].as_ref().expect("front order"),
                };
                v.rows_mut(r0, n).copy_from(part);
                r0 += n;
            }
            f.qr.q_tr_mul(&mut v);
            let nj = self.sizes[j];
            out[self.offsets[j]..self.offsets[j] + nj].copy_from_slice(v.rows(0, nj).as_slice());
            if f.leftover > 0 {
                carried[j] = Some(v.rows(nj, f.leftover).into_owned());
            }
        }
        out
    }

    /// Solves `R z = c`.
    pub fn solve_r(&self, c: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; c.len()];
        for j in (0..self.sizes.len()).rev() {
            let (o, nj) = (self.offsets[j], self.sizes[j]);
            let mut rhs = DVector::from_column_slice(&c[o..o + nj]);
            for (gi, b) in &self.r_rows[j][1..] {
                let og = self.offsets[*gi];
                rhs.gemv(-1.0, b, &DVector::from_column_slice(&z[og..og + self.sizes[*gi]]), 1.0);
            }
            let rjj = &self.r_rows[j][0].1;
            for l in (0..nj).rev() {
                if self.dead[o + l] {
                    continue;
                }
                let mut v = rhs[l];
                for k in l + 1..nj {
                    v -= rjj[(l, k)] * z[o + k];
                }
                z[o + l] = v / rjj[(l, l)];
            }
        }
        z
    }

    /// Solves `Rᵀ t = b`.
    pub fn solve_rt(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = b.to_vec();
        let mut t = vec![0.0; b.len()];
        for j in 0..self.sizes.len() {
            let (o, nj) = (self.offsets[j], self.sizes[j]);
            let rjj = &self.r_rows[j][0].1;
            for l in 0..nj {
                if self.dead[o + l] {
                    continue;
                }
                let mut v = rhs[o + l];
                for k in 0..l {
                    v -= rjj[(k, l)] * t[o + k];
                }
                t[o + l] = v / rjj[(l, l)];
            }
            let tj = DVector::from_column_slice(&t[o..o + nj]);
            for (gi, b) in &self.r_rows[j][1..] {
                let og = self.offsets[*gi];
                let upd = b.tr_mul(&tj);
                for (k, x) in upd.iter().enumerate() {
                    rhs[og + k] -= x;
                }
            }
        }
        t
    }
}
