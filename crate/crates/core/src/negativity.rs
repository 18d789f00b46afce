//! Bipartite negativity.

use crate::channel::{cavity_reduced, reservoir_reduced, XState};
use crate::error::Result;
use crate::families::{build, FamilySpec};
use crate::qstate::{hermitian_eigenvalues, partial_transpose, Bipartition, DensityMatrix};

/// Eigenvalues of the partial transpose in `[−NEGATIVE_EIGEN_TOL, 0)` are
/// treated as zero.
pub const NEGATIVE_EIGEN_TOL: f64 = 1e-9;

/// Sum of `|λ|` over the negative eigenvalues of `ρ^{T_M}`.
pub fn negativity(rho: &DensityMatrix, cut: &Bipartition) -> Result<f64> {
    let pt = partial_transpose(rho, cut)?;
    let ev = hermitian_eigenvalues(&pt)?;
    Ok(ev.iter().filter(|&&l| l < -NEGATIVE_EIGEN_TOL).map(|l| -l).sum())
}

/// Closed-form negativity of a two-qubit X-state.
///
/// The partial transpose splits into the `{|01⟩,|10⟩}` block carrying `ρ14`
/// and the `{|00⟩,|11⟩}` block carrying `ρ23`; each contributes its negative
/// eigenvalue, if any.
pub fn xstate_negativity(x: &XState) -> f64 {
    let block = |a: f64, b: f64, off: f64| {
        let half_gap = (a - b) / 2.0;
        ((half_gap * half_gap + off).sqrt() - (a + b) / 2.0).max(0.0)
    };
    block(x.rho22, x.rho33, x.rho14.norm_sqr()) + block(x.rho11, x.rho44, x.rho23.norm_sqr())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub kt: f64,
    pub e_cc: f64,
    pub e_rr: f64,
}

/// Cavity-cavity and reservoir-reservoir negativity along a `κt` grid.
pub fn negativity_curve(spec: &FamilySpec, grid: &[f64]) -> Result<Vec<CurvePoint>> {
    let x = build(spec)?;
    grid.iter()
        .map(|&kt| {
            Ok(CurvePoint {
                kt,
                e_cc: xstate_negativity(&cavity_reduced(&x, kt)?),
                e_rr: xstate_negativity(&reservoir_reduced(&x, kt)?),
            })
        })
        .collect()
}
