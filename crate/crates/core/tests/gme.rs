mod common;

use gmedyn::channel::evolve_joint;
use gmedyn::families::{build, FamilySpec};
use gmedyn::gme::{certify_witness, enumerate_bipartitions, gme_negativity, WitnessProblem};
use gmedyn::negativity::negativity;
use gmedyn::qstate::{hermitian_part, trace_product, Bipartition, CMatrix, DensityMatrix, C64};
use gmedyn::sdp::{solve, solve_from, HermitianUnit, Iterate, LmiBlock, SdpProblem, SdpSettings, SolveStatus};
use rand::Rng;

fn c(v: f64) -> C64 {
    C64::new(v, 0.0)
}

/// Applies single-qubit Kraus operators to `qubit` of an `n`-qubit state.
fn local_channel(rho: &DensityMatrix, qubit: usize, kraus: &[CMatrix]) -> DensityMatrix {
    let n = rho.parties();
    let mut out = CMatrix::zeros(rho.dim(), rho.dim());
    for k in kraus {
        let mut op = CMatrix::identity(1, 1);
        for q in 0..n {
            let f = if q == qubit { k.clone() } else { CMatrix::identity(2, 2) };
            op = op.kronecker(&f);
        }
        out += &op * rho.matrix() * op.adjoint();
    }
    DensityMatrix::new(hermitian_part(&out), rho.party_dims().to_vec()).unwrap()
}

fn damping(gamma: f64) -> Vec<CMatrix> {
    vec![
        CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c((1.0 - gamma).sqrt())]),
        CMatrix::from_row_slice(2, 2, &[c(0.0), c(gamma.sqrt()), c(0.0), c(0.0)]),
    ]
}

fn random_unitary(rng: &mut impl Rng) -> CMatrix {
    let (a, b, g): (f64, f64, f64) = (rng.gen_range(0.0..6.3), rng.gen_range(0.0..6.3), rng.gen_range(0.0..1.6));
    let e = |t: f64| C64::from_polar(1.0, t);
    CMatrix::from_row_slice(2, 2, &[e(a) * g.cos(), -e(b) * g.sin(), e(-b) * g.sin(), e(-a) * g.cos()])
}

fn value(rho: &DensityMatrix) -> f64 {
    gme_negativity(rho).unwrap().value
}

#[test]
fn two_qubit_monotone_is_the_negativity() {
    let mut rng = common::rng(200);
    let cut = Bipartition::new(2, &[0]).unwrap();
    for i in 0..200 {
        let rho = common::random_density(&mut rng, &[2, 2], 1 + i % 4);
        let e = value(&rho);
        let n = negativity(&rho, &cut).unwrap();
        assert!((e - n).abs() <= 1e-6, "state {i}: {e} vs {n}");
    }
}

#[test]
fn ghz_reaches_the_upper_bound() {
    let mut psi = nalgebra::DVector::zeros(8);
    psi[0] = c(0.5f64.sqrt());
    psi[7] = c(0.5f64.sqrt());
    let ghz = DensityMatrix::pure(&psi, vec![2; 3]).unwrap();
    assert!((value(&ghz) - 0.5).abs() < 1e-6);

    let mut rng = common::rng(5);
    for parties in [2, 3] {
        for _ in 0..10 {
            let e = value(&common::random_density(&mut rng, &vec![2; parties], 1));
            assert!(e <= 0.5 + 1e-7, "{e}");
        }
    }
}

#[test]
fn witnesses_are_sound_on_biseparable_states() {
    let x = build(&FamilySpec::pure_from_alpha2(0.1).unwrap()).unwrap();
    let rho = evolve_joint(&x, 0.7).unwrap();
    let g = gme_negativity(&rho).unwrap();
    let w = g.witness.clone().expect("entangled plateau state");
    assert!(certify_witness(&rho, &g.solution).passed);

    let cuts = enumerate_bipartitions(4).unwrap();
    let mut rng = common::rng(100);
    for i in 0..100 {
        let sigma = common::biseparable(&mut rng, &cuts, 1 + i % 4);
        let t = trace_product(&w, sigma.matrix());
        assert!(t >= -1e-6, "state {i}: Tr(Wσ) = {t}");
    }
    // and biseparable states themselves carry no monotone
    let cuts3 = enumerate_bipartitions(3).unwrap();
    for _ in 0..5 {
        let sigma = common::biseparable(&mut rng, &cuts3, 3);
        assert!(value(&sigma) < 1e-6);
    }
}

#[test]
fn convex_on_random_three_qubit_pairs() {
    let mut rng = common::rng(31);
    for _ in 0..6 {
        let a = common::random_density(&mut rng, &[2, 2, 2], 1);
        let b = common::random_density(&mut rng, &[2, 2, 2], 2);
        let lambda: f64 = rng.gen_range(0.1..0.9);
        let mixed = value(&a.mix(&b, lambda).unwrap());
        let bound = lambda * value(&a) + (1.0 - lambda) * value(&b);
        assert!(mixed <= bound + 1e-6, "{mixed} > {bound}");
    }
}

#[test]
fn local_operations_do_not_increase_the_monotone() {
    let mut rng = common::rng(9);
    for _ in 0..4 {
        let rho = common::random_density(&mut rng, &[2, 2, 2], 1);
        let e = value(&rho);
        let q = rng.gen_range(0..3);
        let damped = local_channel(&rho, q, &damping(rng.gen_range(0.1..0.9)));
        assert!(value(&damped) <= e + 1e-6);
        let rotated = local_channel(&rho, q, &[random_unitary(&mut rng)]);
        assert!((value(&rotated) - e).abs() <= 1e-6);
    }
    // family joint states under extra damping of one reservoir qubit
    for spec in [FamilySpec::pure_from_alpha2(0.1).unwrap(), FamilySpec::Werner { p: 0.75 }] {
        let x = build(&spec).unwrap();
        for i in 1..=5 {
            let rho = evolve_joint(&x, 0.3 * i as f64).unwrap();
            let damped = local_channel(&rho, 2, &damping(0.4));
            assert!(value(&damped) <= value(&rho) + 1e-6, "{spec} at {}", 0.3 * i as f64);
        }
    }
}

#[test]
fn identity_bound_problem_has_optimum_zero() {
    // min Tr(W diag(1,0)) over 0 ⪯ W ⪯ I, as max −y₀ with W = Σ yᵢ Uᵢ
    let units = [HermitianUnit::Diag(0), HermitianUnit::Diag(1), HermitianUnit::Re(0, 1), HermitianUnit::Im(0, 1)];
    let mut lower = LmiBlock::new(CMatrix::zeros(2, 2));
    let mut upper = LmiBlock::new(CMatrix::identity(2, 2));
    for (v, u) in units.iter().enumerate() {
        lower.add_term(v, *u, -1.0);
        upper.add_term(v, *u, 1.0);
    }
    let problem = SdpProblem::dense(vec![-1.0, 0.0, 0.0, 0.0], vec![lower, upper]);
    let sol = solve(&problem, &SdpSettings::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!(sol.dual_objective.abs() < 1e-7 && sol.primal_objective.abs() < 1e-7);
}

fn positive_definite(rng: &mut impl Rng, n: usize) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    hermitian_part(&(&g * g.adjoint() + CMatrix::identity(n, n)))
}

/// `C = S₀ + A(y₀)`, `b = A*(X₀)` with `X₀, S₀ ≻ 0`: both sides feasible.
fn feasible_problem(rng: &mut impl Rng) -> (SdpProblem, Iterate) {
    let m = rng.gen_range(2..6);
    let y0: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut b = vec![0.0; m];
    let (mut blocks, mut x0, mut s0) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..rng.gen_range(1..4) {
        let n = rng.gen_range(2..5);
        let pattern: Vec<(usize, usize)> = (0..n).flat_map(|p| (p..n).map(move |q| (p, q))).collect();
        let mut terms = Vec::new();
        for v in 0..m {
            for u in HermitianUnit::spanning(&pattern) {
                if rng.gen_bool(0.5) {
                    terms.push((v, u, rng.gen_range(-1.0..1.0)));
                }
            }
        }
        let mut linear = LmiBlock::new(CMatrix::zeros(n, n));
        for &(v, u, a) in &terms {
            linear.add_term(v, u, a);
        }
        let s = positive_definite(rng, n);
        let mut block = LmiBlock::new(hermitian_part(&(&s + linear.apply(&y0))));
        for &(v, u, a) in &terms {
            block.add_term(v, u, a);
        }
        let x = positive_definite(rng, n);
        block.apply_adjoint(&x, &mut b);
        s0.push(hermitian_part(&block.slack(&y0)));
        x0.push(x);
        blocks.push(block);
    }
    (SdpProblem::dense(b, blocks), Iterate { x: x0, y: y0, s: s0 })
}

#[test]
fn weak_duality_along_feasible_runs() {
    let mut rng = common::rng(77);
    let settings = SdpSettings { record_history: true, ..SdpSettings::default() };
    for case in 0..20 {
        let (problem, start) = feasible_problem(&mut rng);
        let sol = solve_from(&problem, &settings, start).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal, "case {case}");
        assert!(!sol.history.is_empty());
        for rec in &sol.history {
            let scale = 1.0 + rec.primal_objective.abs();
            assert!(
                rec.dual_objective <= rec.primal_objective + 1e-9 * scale,
                "case {case} iteration {}: {} > {}",
                rec.iteration,
                rec.dual_objective,
                rec.primal_objective
            );
        }
    }
}

#[test]
fn restricted_cut_problems_are_relaxations() {
    // fewer cuts means a larger witness set, so the monotone can only grow
    let x = build(&FamilySpec::Werner { p: 0.75 }).unwrap();
    let rho = evolve_joint(&x, 0.7).unwrap();
    let full = value(&rho);
    let cuts = enumerate_bipartitions(4).unwrap();
    let some = WitnessProblem::new(rho, cuts[..3].to_vec()).unwrap().solve(&Default::default()).unwrap();
    assert_eq!(some.status, SolveStatus::Optimal);
    assert!(-some.optimum >= full - 1e-6);
}
