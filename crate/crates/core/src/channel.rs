//! Cavity-to-reservoir amplitude transfer in the large-reservoir limit.
//!
//! Each cavity qubit `C_i` exchanges its excitation with the collective
//! single-excitation mode of its own reservoir `R_i`:
//!
//! ```text
//! |0⟩_C|0̄⟩_R → |0⟩_C|0̄⟩_R
//! |1⟩_C|0̄⟩_R → ξ|1⟩_C|0̄⟩_R + χ|0⟩_C|1̄⟩_R,   ξ = e^{−κt/2},  χ = √(1 − e^{−κt})
//! ```
//!
//! Time enters only through the dimensionless product `kt = κt`.

use nalgebra::Matrix4;

use crate::error::{Error, Result};
use crate::qstate::{permute_parties, CMatrix, DensityMatrix, C64};

/// Tolerance for the X-state population and positivity constraints.
pub const XSTATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitudes {
    pub kt: f64,
    pub xi: f64,
    pub chi: f64,
}

pub fn amplitudes(kt: f64) -> Result<Amplitudes> {
    if !kt.is_finite() || kt < 0.0 {
        return Err(Error::InvalidParameter(format!("kt must be finite and nonnegative, got {kt}")));
    }
    Ok(Amplitudes {
        kt,
        xi: (-0.5 * kt).exp(),
        chi: (-(-kt).exp_m1()).sqrt(),
    })
}

/// Two-qubit state with support on the diagonal and anti-diagonal only.
///
/// Basis order `|00⟩, |01⟩, |10⟩, |11⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XState {
    pub rho11: f64,
    pub rho22: f64,
    pub rho33: f64,
    pub rho44: f64,
    pub rho14: C64,
    pub rho23: C64,
}

impl XState {
    pub fn new(rho11: f64, rho22: f64, rho33: f64, rho44: f64, rho14: C64, rho23: C64) -> Result<Self> {
        let x = Self { rho11, rho22, rho33, rho44, rho14, rho23 };
        x.validate()?;
        Ok(x)
    }

    pub fn validate(&self) -> Result<()> {
        let pops = [self.rho11, self.rho22, self.rho33, self.rho44];
        if pops.iter().chain([self.rho14.re, self.rho14.im, self.rho23.re, self.rho23.im].iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidState("non-finite X-state entry".into()));
        }
        if pops.iter().any(|&p| p < -XSTATE_TOL) {
            return Err(Error::InvalidState(format!("negative population in {pops:?}")));
        }
        let sum: f64 = pops.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("populations sum to {sum}")));
        }
        if self.rho23.norm_sqr() > self.rho22 * self.rho33 + XSTATE_TOL {
            return Err(Error::InvalidState("|ρ23|² exceeds ρ22·ρ33".into()));
        }
        if self.rho14.norm_sqr() > self.rho11 * self.rho44 + XSTATE_TOL {
            return Err(Error::InvalidState("|ρ14|² exceeds ρ11·ρ44".into()));
        }
        Ok(())
    }

    pub fn to_matrix(&self) -> CMatrix {
        let r = |v: f64| C64::new(v, 0.0);
        let z = C64::new(0.0, 0.0);
        let m = Matrix4::new(
            r(self.rho11), z, z, self.rho14,
            z, r(self.rho22), self.rho23, z,
            z, self.rho23.conj(), r(self.rho33), z,
            self.rho14.conj(), z, z, r(self.rho44),
        );
        CMatrix::from_iterator(4, 4, m.iter().copied())
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_parts_unchecked(self.to_matrix(), vec![2, 2])
    }

    /// Reads an X-state out of a 4×4 matrix; entries outside the X pattern
    /// must vanish to within `tol`.
    pub fn from_matrix(m: &CMatrix, tol: f64) -> Result<Self> {
        if m.nrows() != 4 || m.ncols() != 4 {
            return Err(Error::Dimension(format!("X-state needs a 4x4 matrix, got {}x{}", m.nrows(), m.ncols())));
        }
        for i in 0..4 {
            for j in 0..4 {
                let on_pattern = i == j || i + j == 3;
                if !on_pattern && m[(i, j)].norm() > tol {
                    return Err(Error::InvalidState(format!("entry ({i},{j}) breaks the X pattern")));
                }
            }
        }
        Self::new(m[(0, 0)].re, m[(1, 1)].re, m[(2, 2)].re, m[(3, 3)].re, m[(0, 3)], m[(1, 2)])
    }
}

/// Single cavity-reservoir unitary on `C ⊗ R`, basis `|c r⟩`.
fn pair_unitary(a: &Amplitudes) -> CMatrix {
    let r = |v: f64| C64::new(v, 0.0);
    let mut u = CMatrix::zeros(4, 4);
    u[(0, 0)] = r(1.0);
    // |10⟩ → ξ|10⟩ + χ|01⟩
    u[(2, 2)] = r(a.xi);
    u[(1, 2)] = r(a.chi);
    // orthogonal completion on the single-excitation sector
    u[(2, 1)] = r(-a.chi);
    u[(1, 1)] = r(a.xi);
    u[(3, 3)] = r(1.0);
    u
}

/// Joint four-qubit state at `kt`, in the order `C1, C2, R1, R2`.
pub fn evolve_joint(x: &XState, kt: f64) -> Result<DensityMatrix> {
    x.validate()?;
    let amp = amplitudes(kt)?;
    let dims = [2, 2, 2, 2];

    let mut initial = CMatrix::zeros(16, 16);
    let cav = x.to_matrix();
    // reservoirs in |00⟩: only the R1 = R2 = 0 entries are populated
    for i in 0..4 {
        for j in 0..4 {
            initial[(i * 4, j * 4)] = cav[(i, j)];
        }
    }

    // C1 C2 R1 R2 → C1 R1 C2 R2; the permutation is its own inverse
    let order = [0, 2, 1, 3];
    let paired = permute_parties(&initial, &dims, &order);
    let u = pair_unitary(&amp);
    let uu = u.kronecker(&u);
    let evolved = &uu * paired * uu.adjoint();
    let mut out = permute_parties(&evolved, &dims, &order);
    out = (&out + out.adjoint()).map(|z| z * 0.5);
    Ok(DensityMatrix::from_parts_unchecked(out, dims.to_vec()))
}

/// Cavity-cavity state at `kt` in closed form.
pub fn cavity_reduced(x: &XState, kt: f64) -> Result<XState> {
    x.validate()?;
    let a = amplitudes(kt)?;
    Ok(reduced_with(x, a.xi * a.xi, a.chi * a.chi))
}

/// Reservoir-reservoir state at `kt`: the cavity formula with `ξ ↔ χ`.
pub fn reservoir_reduced(x: &XState, kt: f64) -> Result<XState> {
    x.validate()?;
    let a = amplitudes(kt)?;
    Ok(reduced_with(x, a.chi * a.chi, a.xi * a.xi))
}

/// `keep` is the squared amplitude left on the observed pair, `lost` the
/// squared amplitude transferred away (`keep + lost = 1`).
fn reduced_with(x: &XState, keep: f64, lost: f64) -> XState {
    XState {
        rho11: x.rho11 + (x.rho22 + x.rho33 + x.rho44 * lost) * lost,
        rho22: (x.rho22 + x.rho44 * lost) * keep,
        rho33: (x.rho33 + x.rho44 * lost) * keep,
        rho44: x.rho44 * keep * keep,
        rho14: x.rho14 * keep,
        rho23: x.rho23 * keep,
    }
}

/// Number operator `Σ_k |1⟩⟨1|_k` on `n` qubits.
pub fn excitation_number(n: usize) -> CMatrix {
    let dim = 1 << n;
    CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        dim,
        (0..dim).map(|i| C64::new(i.count_ones() as f64, 0.0)),
    ))
}
