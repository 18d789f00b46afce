#![allow(dead_code)]

use gmedyn::channel::XState;
use gmedyn::families::FamilySpec;
use gmedyn::qstate::{permute_parties, tensor, Bipartition, CMatrix, DensityMatrix, C64};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `G Gᴴ / Tr` with a `dim × rank` complex Gaussian-ish `G`.
pub fn random_density(rng: &mut ChaCha8Rng, party_dims: &[usize], rank: usize) -> DensityMatrix {
    let dim: usize = party_dims.iter().product();
    let g = CMatrix::from_fn(dim, rank, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let mut m = &g * g.adjoint();
    let tr = m.trace().re;
    m /= C64::new(tr, 0.0);
    // symmetrize away roundoff
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    DensityMatrix::new(m, party_dims.to_vec()).expect("random density matrix")
}

pub fn random_xstate(rng: &mut ChaCha8Rng) -> XState {
    let w: Vec<f64> = (0..4).map(|_| -rng.gen_range(1e-9f64..1.0).ln()).collect();
    let s: f64 = w.iter().sum();
    let p: Vec<f64> = w.iter().map(|v| v / s).collect();
    let phase = |rng: &mut ChaCha8Rng| C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
    let r14 = (p[0] * p[3]).sqrt() * rng.gen_range(0.0..1.0) * phase(rng);
    let r23 = (p[1] * p[2]).sqrt() * rng.gen_range(0.0..1.0) * phase(rng);
    XState::new(p[0], p[1], p[2], p[3], r14, r23).expect("random X-state")
}

/// A uniformly chosen valid spec of one of the five families.
pub fn random_family(rng: &mut ChaCha8Rng) -> FamilySpec {
    let u: f64 = rng.gen_range(0.0..1.0);
    match rng.gen_range(0..5) {
        0 => FamilySpec::pure_from_alpha2(u).unwrap(),
        1 => FamilySpec::Werner { p: u },
        2 => FamilySpec::MixedA { a: u },
        3 => FamilySpec::MixedC { c: u },
        _ => FamilySpec::NoisySC { f: u },
    }
}

pub fn all_families() -> Vec<FamilySpec> {
    vec![
        FamilySpec::pure_from_alpha2(0.1).unwrap(),
        FamilySpec::Werner { p: 0.45 },
        FamilySpec::MixedA { a: 1.0 },
        FamilySpec::MixedC { c: 0.6 },
        FamilySpec::NoisySC { f: 0.999 },
    ]
}

/// `ρ_M ⊗ ρ_M̄` with the factors put back into party order.
pub fn product_across(rng: &mut ChaCha8Rng, cut: &Bipartition, rank: usize) -> DensityMatrix {
    let m = cut.members().to_vec();
    let rest = cut.complement();
    let a = random_density(rng, &vec![2; m.len()], rank);
    let b = random_density(rng, &vec![2; rest.len()], rank);
    let joint = tensor(&a, &b).unwrap();
    // factor k of `joint` is party `stacked[k]`; invert that placement
    let stacked: Vec<usize> = m.iter().chain(&rest).copied().collect();
    let mut order = vec![0; stacked.len()];
    for (k, &p) in stacked.iter().enumerate() {
        order[p] = k;
    }
    let dims = vec![2; stacked.len()];
    DensityMatrix::new(permute_parties(joint.matrix(), &dims, &order), dims).unwrap()
}

/// Convex mixture of states that are each separable across some cut.
pub fn biseparable(rng: &mut ChaCha8Rng, cuts: &[Bipartition], terms: usize) -> DensityMatrix {
    let mut acc: Option<DensityMatrix> = None;
    let mut total = 0.0;
    for _ in 0..terms {
        let cut = &cuts[rng.gen_range(0..cuts.len())];
        let rank = rng.gen_range(1..=2);
        let term = product_across(rng, cut, rank);
        let w: f64 = rng.gen_range(0.1..1.0);
        total += w;
        acc = Some(match acc {
            None => term,
            Some(prev) => prev.mix(&term, 1.0 - w / total).unwrap(),
        });
    }
    acc.unwrap()
}
