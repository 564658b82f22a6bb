mod common;

use nalgebra::DMatrix;
use rai_core::stochastic::{
    check_sia, is_primitive, positive_power_within_wielandt, schur_stability_by_reachability, spectral_radius,
    stochastic_completion, RowStochasticMatrix, SiaReason, SubstochasticMatrix,
};
use rai_core::Matrix;

fn dense(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.n(), m.n(), |i, j| m.get(i, j))
}

fn eigen_radius(m: &Matrix) -> f64 {
    dense(m).complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `W^(2^s)` by repeated squaring.
fn high_power(w: &Matrix, s: usize) -> Matrix {
    (0..s).fold(w.clone(), |p, _| p.mul(&p))
}

#[test]
fn sia_verdict_matches_matrix_powers() {
    let mut rng = common::rng(11);
    let (mut yes, mut no) = (0, 0);
    for trial in 0..300 {
        let n = 2 + trial % 5;
        let w = common::stochastic(&mut rng, n, 0.35);
        let v = check_sia(&w);
        let p = high_power(w.matrix(), 18);
        let rank_one = (1..n).all(|i| (0..n).all(|j| (p.get(i, j) - p.get(0, j)).abs() < 1e-9));
        assert_eq!(v.is_sia, rank_one, "{:?}", w.matrix().rows());
        if let Some(pi) = v.pi {
            yes += 1;
            for j in 0..n {
                assert!((pi[j] - p.get(0, j)).abs() < 1e-9);
            }
        } else {
            no += 1;
        }
    }
    assert!(yes > 30 && no > 30, "{yes} {no}");
}

#[test]
fn sia_reasons_for_known_negatives() {
    let cycle =
        RowStochasticMatrix::from_rows(vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]).unwrap();
    assert_eq!(check_sia(&cycle).reason, SiaReason::PeriodicSource);
    assert_eq!(check_sia(&RowStochasticMatrix::identity(2)).reason, SiaReason::MultipleSources);
}

#[test]
fn primitivity_agrees_with_wielandt_powers() {
    let mut rng = common::rng(12);
    for trial in 0..300 {
        let w = common::stochastic(&mut rng, 2 + trial % 6, 0.3);
        assert_eq!(is_primitive(&w), positive_power_within_wielandt(&w));
    }
}

#[test]
fn spectral_radius_matches_eigenvalues() {
    let mut rng = common::rng(13);
    for trial in 0..200 {
        let a = common::substochastic(&mut rng, 2 + trial % 7, 0.4, 0.3);
        let ours = spectral_radius(&a);
        let oracle = eigen_radius(a.matrix());
        assert!((ours - oracle).abs() < 1e-7, "{ours} vs {oracle}");
    }
}

#[test]
fn reachability_verdict_matches_eigenvalues() {
    let mut rng = common::rng(14);
    let (mut stable, mut unstable) = (0, 0);
    for trial in 0..200 {
        let a = common::substochastic(&mut rng, 2 + trial % 7, 0.3, 0.25);
        let report = schur_stability_by_reachability(&a);
        let rho = eigen_radius(a.matrix());
        assert_eq!(report.stable, rho < 1.0 - 1e-9, "rho {rho}");
        if report.stable {
            stable += 1;
        } else {
            unstable += 1;
            assert!((rho - 1.0).abs() < 1e-9);
        }
    }
    assert!(stable > 20 && unstable > 20, "{stable} {unstable}");
}

#[test]
fn completion_is_stochastic_and_dominates() {
    let mut rng = common::rng(15);
    for _ in 0..50 {
        let a = common::substochastic(&mut rng, 5, 0.5, 0.5);
        let w = stochastic_completion(&a);
        for i in 0..5 {
            assert!((w.matrix().row_sum(i) - 1.0).abs() < 1e-12);
            for j in 0..5 {
                assert!(w.get(i, j) >= a.matrix().get(i, j) - 1e-15);
            }
        }
    }
}

#[test]
fn substochastic_rejects_excess_mass() {
    assert!(SubstochasticMatrix::from_rows(vec![vec![0.7, 0.7], vec![0.0, 0.5]]).is_err());
}
