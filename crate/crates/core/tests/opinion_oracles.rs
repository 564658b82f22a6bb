mod common;

use proptest::prelude::*;
use rai_core::opinion::{
    hk_weights, modulus_consensus_verdict, recover_structural_balance, run_altafini, run_hk, HkConfig, SignedMatrix,
    SignedMatrixSequence,
};
use rai_core::rai::run_degroot;
use rai_core::sequences::MatrixSequence;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn confidence_weights_match_enumeration(x in prop::collection::vec(-3.0f64..3.0, 1..10), eps in 0.1f64..2.0) {
        let n = x.len();
        let w = hk_weights(&x, eps).unwrap();
        for i in 0..n {
            let hood: Vec<usize> = (0..n).filter(|&j| (x[i] - x[j]).abs() < eps).collect();
            for j in 0..n {
                let expected = if hood.contains(&j) { 1.0 / hood.len() as f64 } else { 0.0 };
                prop_assert_eq!(w.get(i, j), expected);
                prop_assert_eq!(w.get(i, j) > 0.0, w.get(j, i) > 0.0);
            }
            prop_assert!(w.get(i, i) >= 1.0 / n as f64);
        }
    }

    #[test]
    fn pure_runs_freeze_into_separated_clusters(x0 in prop::collection::vec(0.0f64..6.0, 1..13), eps in prop_oneof![Just(0.5), Just(1.0)]) {
        let n = x0.len();
        let run = run_hk(&x0, &HkConfig::pure(n, eps), 10 * n * n * n).unwrap();
        prop_assert!(run.stationary_at.is_some());
        prop_assert!(run.report.gap_respected);
        let x = run.trajectory.final_state();
        for i in 0..n {
            for j in 0..n {
                let gap = (x[i] - x[j]).abs();
                prop_assert!(gap == 0.0 || gap >= eps - 1e-6, "gap {}", gap);
            }
        }
        prop_assert!(run.truth_gap.feasibility().feasible);
    }

    #[test]
    fn gauge_transform_commutes_with_the_recursion(seed in any::<u64>(), n in 2usize..7, signs in any::<u8>()) {
        let mut rng = common::rng(seed);
        let w = common::primitive(&mut rng, n);
        let d: Vec<i8> = (0..n).map(|i| if signs >> i & 1 == 1 { -1 } else { 1 }).collect();
        let a = SignedMatrix::gauge_transform(&w, &d).unwrap();
        let x0 = common::uniform_vec(&mut rng, n, -4.0, 4.0);
        let dx0: Vec<f64> = x0.iter().zip(&d).map(|(v, &s)| f64::from(s) * v).collect();
        let signed = run_altafini(&SignedMatrixSequence::constant(a.clone()), &x0, 150).unwrap();
        let plain = run_degroot(&MatrixSequence::constant(w), &dx0, 150).unwrap();
        for (x, y) in signed.trajectory.states().zip(plain.states()) {
            for i in 0..n {
                prop_assert_eq!(x[i], f64::from(d[i]) * y[i]);
            }
        }
        prop_assert!(signed.companion_feasible);
        let gauge = recover_structural_balance(&SignedMatrixSequence::constant(a), 20).unwrap().gauge.unwrap();
        let flip = gauge[0] * d[0];
        prop_assert!(gauge.iter().zip(&d).all(|(g, d)| *g == flip * d));
        prop_assert!(modulus_consensus_verdict(&signed.trajectory).unwrap().modulus_consensus);
    }
}
