use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::assembly::{assemble_system, build_basis, whiten, BasisFamily};
use crate::model::{validate_problem, DomainSpec, OperatorSpec, PotentialSpec};
use crate::synthetic;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn helmholtz(n: usize, v: f64) -> CompanionSystem {
    let op = OperatorSpec::laplacian(1).unwrap();
    let p = validate_problem(&op, &DomainSpec::Interval, &PotentialSpec::Constant(v)).unwrap();
    let basis = build_basis(&p, n, BasisFamily::ClampedPolynomial).unwrap();
    build_companion(whiten(assemble_system(&p, &basis).unwrap()).unwrap()).unwrap()
}

#[test]
fn toy_blocks() {
    let cs = build_companion(synthetic::toy()).unwrap();
    assert_eq!(cs.k[(0, 0)], 1.25);
    assert_eq!(cs.s[(0, 0)], 0.5);
    assert_eq!(cs.d.data(), &[1.25, -0.5, 0.5, 0.0]);
}

#[test]
fn zero_b_gives_rotation() {
    let w = WhitenedSystem::synthetic(Mat::identity(3), Mat::zeros(3, 3)).unwrap();
    let cs = build_companion(w).unwrap();
    let expected = Mat::from_blocks(&Mat::zeros(3, 3), &Mat::identity(3).scale(-1.0), &Mat::identity(3), &Mat::zeros(3, 3));
    assert!((&cs.d - &expected).max_abs() < 1e-15);
}

#[test]
fn toy_spectrum() {
    let cs = build_companion(synthetic::toy()).unwrap();
    let sp = extract_spectrum(&cs, &SolveOptions::default()).unwrap();
    let l = sp.lambdas();
    assert_eq!(l.len(), 2);
    assert!((l[0] - c(1.0, 0.0)).norm() < 1e-12);
    assert!((l[1] - c(4.0, 0.0)).norm() < 1e-12);
    for e in &sp.eigenvalues {
        assert!(e.qep_residual < 1e-12);
        assert!((e.lambda * e.mu - 1.0).norm() < 1e-12);
        assert_eq!(e.multiplicity, 1);
    }
    assert_eq!(sp.clusters.len(), 2);
}

#[test]
fn helmholtz_mode_at_four_pi_squared() {
    let cs = helmholtz(48, 3.0);
    let sp = extract_spectrum(&cs, &SolveOptions::default()).unwrap();
    let target = 4.0 * PI * PI;
    let (i, e) = sp
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1.lambda - target).norm().total_cmp(&(b.1.lambda - target).norm()))
        .unwrap();
    assert!((e.lambda - target).norm() / target < 1e-4, "{}", e.lambda);
    assert!(e.qep_residual < 1e-8, "{}", e.qep_residual);
    let st = recover_state(&cs, e.mu, &sp.vectors[i]).unwrap();
    assert!((norm2(&st.u) - 1.0).abs() < 1e-12);
    let (v, w) = (st.v.unwrap(), st.w.unwrap());
    for k in 0..v.len() {
        assert!((v[k] - w[k] + st.u[k]).norm() <= 4.0 * f64::EPSILON * (w[k].norm() + st.u[k].norm()));
    }
    assert!(st.r_v.unwrap() < 1e-3, "r_v {}", st.r_v.unwrap());
    assert!(st.r_w.unwrap() < 1e-3, "r_w {}", st.r_w.unwrap());
}

#[test]
fn reciprocal_correspondence_helmholtz() {
    let cs = helmholtz(32, 3.0);
    let sp = extract_spectrum(&cs, &SolveOptions::default()).unwrap();
    let direct = pencil_linearization_roots(&cs.whitened).unwrap();
    let gap = match_multisets(&sp.lambdas(), &direct, 1e-4).expect("cluster structures agree");
    assert!(gap < 1e-7, "{gap}");
}

#[test]
fn lidskii_and_conjugates_on_random_systems() {
    for seed in 0..5 {
        let cs = build_companion(synthetic::random(12, seed).unwrap()).unwrap();
        let sp = extract_spectrum(&cs, &SolveOptions::default()).unwrap();
        let tr = cs.k.trace();
        assert!((sp.mu_sum() - tr).norm() / (1.0 + tr.abs()) < 1e-8);
        assert!(conjugate_pairing_defect(&sp.all_mu) < 1e-8);
    }
}

#[test]
fn recover_state_errors() {
    let cs = build_companion(synthetic::toy()).unwrap();
    let y = vec![c(1.0, 0.0), c(0.0, 0.0)];
    assert!(matches!(recover_state(&cs, c(1.0, 0.0), &y), Err(Error::NotAnEigenvector(_))));
    assert!(matches!(recover_state(&cs, c(0.0, 0.0), &y), Err(Error::ZeroEigenvalue(_))));
    assert!(matches!(recover_state(&cs, c(1.0, 0.0), &y[..1]), Err(Error::DimensionMismatch { .. })));
    let sp = extract_spectrum(&cs, &SolveOptions::default()).unwrap();
    let st = recover_state(&cs, sp.eigenvalues[0].mu, &sp.vectors[0]).unwrap();
    assert!(st.r_t < 1e-14);
    assert!(st.v.is_none());
}

#[test]
fn chain_residual_on_defective_pencil() {
    let w = synthetic::defective(2);
    let u0 = vec![c(1.0, 0.0), c(0.0, 0.0)];
    let u1 = vec![c(0.3, -0.2), c(5.0, 1.0)];
    let r = jordan_chain_residual(&w, c(1.0, 0.0), &[u0, u1]).unwrap();
    assert_eq!(r, vec![0.0, 0.0]);
    assert!(matches!(jordan_chain_residual(&w, c(1.0, 0.0), &[]), Err(Error::EmptyChain)));
}

#[test]
fn toy_admits_no_length_two_chain() {
    let w = synthetic::toy();
    for lambda in [1.0, 4.0] {
        for u1 in [-1.0, 0.3, 1.0] {
            let r = jordan_chain_residual(&w, c(lambda, 0.0), &[vec![c(1.0, 0.0)], vec![c(u1, 0.0)]]).unwrap();
            assert!(r[0] < 1e-14);
            assert!(r[1] > 1e-6);
        }
    }
}

#[test]
fn toy_chains_are_trivial() {
    let cs = build_companion(synthetic::toy()).unwrap();
    let sp = extract_spectrum(&cs, &SolveOptions::default()).unwrap();
    for id in 0..sp.clusters.len() {
        let chains = jordan_chains(&cs, &sp, id).unwrap();
        assert_eq!(chains.len(), 1);
        assert_eq!(chains[0].len(), 1);
    }
}

#[test]
fn defective_pencil_has_long_chains() {
    let cs = build_companion(synthetic::defective(2)).unwrap();
    let sp = extract_spectrum(&cs, &SolveOptions::default()).unwrap();
    assert_eq!(sp.clusters.len(), 1);
    assert_eq!(sp.eigenvalues[0].multiplicity, 4);
    let chains = jordan_chains(&cs, &sp, 0).unwrap();
    assert_eq!(chains.len(), 2);
    for ch in &chains {
        assert_eq!(ch.len(), 2);
        assert!((ch.lambda - 1.0).norm() < 1e-6);
        assert!(ch.residuals.iter().all(|&r| r < 1e-10), "{:?}", ch.residuals);
    }
}

#[test]
fn resolvent_formula_toy() {
    let cs = build_companion(synthetic::toy()).unwrap();
    let spec = [c(1.0, 0.0), c(4.0, 0.0)];
    assert!(resolvent_block_check(&cs, c(2.0, 0.0), &spec).unwrap() < 1e-12);
    assert!(resolvent_block_check(&cs, c(0.0, 0.0), &spec).unwrap() < 1e-12);
    assert!(matches!(resolvent_block_check(&cs, c(1.0, 0.0), &spec), Err(Error::NearSpectrum { .. })));
}

#[test]
fn resolvent_formula_helmholtz() {
    let cs = helmholtz(16, 3.0);
    let sp = extract_spectrum(&cs, &SolveOptions::default()).unwrap();
    for lambda in [c(10.0, 3.0), c(-5.0, 0.0), c(100.0, -20.0)] {
        let d = resolvent_block_check(&cs, lambda, &sp.lambdas()).unwrap();
        assert!(d < 1e-8, "{lambda}: {d}");
    }
}

#[test]
fn clustering_is_transitive() {
    let v = [c(1.0, 0.0), c(1.0 + 6e-5, 0.0), c(1.0 + 1.2e-4, 0.0), c(2.0, 0.0), c(0.0, 1.0)];
    assert_eq!(cluster_labels(&v, 1e-4), vec![0, 0, 0, 1, 2]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reciprocal_product_is_one(seed in 0u64..1000, n in 2usize..9) {
        let cs = build_companion(synthetic::random(n, seed).unwrap()).unwrap();
        prop_assert!(cs.k.asymmetry() < 1e-10);
        let sp = extract_spectrum(&cs, &SolveOptions::default()).unwrap();
        prop_assert_eq!(sp.eigenvalues.len(), 2 * n);
        for e in &sp.eigenvalues {
            prop_assert!((e.lambda * e.mu - 1.0).norm() < 1e-12);
        }
        prop_assert!(conjugate_pairing_defect(&sp.all_mu) < 1e-8);
    }
}
