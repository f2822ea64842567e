use expmoment_core::curie_weiss::{self, CWParams};
use expmoment_core::estimators::{self, FiniteSupportPrior};
use expmoment_core::exponents::{self, BaConfig, DistortionMatrix, ExponentOptions, LambdaFunctional, OracleMode};
use expmoment_core::numfmt::fmt12;
use expmoment_core::probability::{binary_entropy, entropy, tilted_measure};
use expmoment_core::strategy;
use expmoment_core::{FiniteCostTable, FiniteDistribution};
use proptest::prelude::*;

fn dist(v: &[f64]) -> FiniteDistribution {
    FiniteDistribution::new(v.to_vec()).unwrap()
}

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}

#[test]
fn frozen_values() {
    let lossless = exponents::lossless_exponent(&dist(&[0.7, 0.3]), 1.0).unwrap();
    close(lossless, 0.650508505098256, 1e-13);
    let code = estimators::optimal_code_distribution(&dist(&[0.5, 0.25, 0.25]), 1.0).unwrap();
    close(code.log_moment, 1.0695999934791407, 1e-13);
    let cw = curie_weiss::cw_exponent(CWParams::new(0.0, 1.0).unwrap());
    close(cw.exponent, 0.3265238874269239, 1e-12);
    close(cw.dominant_m.abs(), 0.9575040240772687, 1e-10);
    close(curie_weiss::alpha0(0.5), 0.5493061443340548, 1e-14);
    close(
        exponents::binary_rate_distortion(0.5, 0.11).unwrap(),
        0.34663184364127916,
        1e-13,
    );
    close(entropy(&dist(&[0.8, 0.2])), 0.5004024235381879, 1e-15);
}

#[test]
fn optimal_code_is_certified_and_matches_the_exponent() {
    let p = dist(&[0.6, 0.25, 0.1, 0.05]);
    for alpha in [0.2, 1.0, 3.0] {
        let code = estimators::optimal_code_distribution(&p, alpha).unwrap();
        let exp = exponents::lossless_exponent(&p, alpha).unwrap();
        close(code.log_moment, exp, 1e-12);

        let lengths: Vec<f64> = code.code.iter().map(|s| -s.ln()).collect();
        let tilt = tilted_measure(&p, &lengths, alpha).unwrap();
        close(tilt.log_z, code.log_moment, 1e-12);
        // The tilted measure of the optimal code is the code itself.
        assert!(tilt.q.l1_distance(&code.code) < 1e-12);
    }
}

#[test]
fn code_grid_optimum_approaches_the_continuous_optimum() {
    let p = dist(&[0.55, 0.3, 0.15]);
    let exact = exponents::lossless_exponent(&p, 1.0).unwrap();
    let mut prev = f64::INFINITY;
    for n in [20, 60, 180] {
        let (table, _) = estimators::code_length_table(3, n).unwrap();
        let (_, best) = strategy::brute_force_optimum(&p, &table, 1.0).unwrap();
        assert!(best >= exact - 1e-12);
        assert!(best - exact <= prev);
        prev = best - exact;
    }
    assert!(prev < 1e-3);
}

#[test]
fn gibbs_scan_finds_the_tilted_measure() {
    let p = dist(&[0.3, 0.45, 0.25]);
    let table = FiniteCostTable::from_rows(vec![vec![0.2, 1.1], vec![0.9, 0.4], vec![1.5, 0.1]]).unwrap();
    for s in 0..2 {
        let g = strategy::gibbs_variational(&p, &table, s, 0.7, 400).unwrap();
        let t = tilted_measure(&p, table.column(s), 0.7).unwrap();
        assert!(g.argmax.l1_distance(&t.q) < 3.0 * 3.0 / 400.0);
        assert!(g.value <= t.log_z + 1e-12);
    }
}

#[test]
fn guessing_sweep_agrees_with_its_oracle() {
    let p = dist(&[0.6, 0.3, 0.1]);
    let rows = exponents::guessing_sweep(&p, &[0.5, 2.0], &[0.2, 0.8, 1.05], true).unwrap();
    assert_eq!(rows.len(), 6);
    for r in rows {
        let gap = r.oracle_gap.unwrap();
        assert!(gap.abs() < 2e-3, "{r:?}");
    }
}

#[test]
fn binary_rate_distortion_matches_blahut_arimoto() {
    let cfg = BaConfig::default();
    let ham = DistortionMatrix::hamming(2);
    for (q0, d) in [(0.5, 0.11), (0.3, 0.05), (0.2, 0.15)] {
        let q = dist(&[q0, 1.0 - q0]);
        let pt = exponents::rate_distortion(&q, &ham, d, cfg).unwrap();
        close(pt.rate, binary_entropy(q0).unwrap() - binary_entropy(d).unwrap(), 1e-8);
        let back = exponents::distortion_rate(&q, &ham, pt.rate, cfg).unwrap();
        close(back.distortion, d, 1e-7);
    }
}

#[test]
fn rate_distortion_exponent_reduces_to_lossless_at_zero_distortion() {
    let p = dist(&[0.7, 0.3]);
    let lam = LambdaFunctional::RateDistortion {
        distortion: DistortionMatrix::hamming(2),
        d: 0.0,
    };
    let opts = ExponentOptions {
        oracle: OracleMode::Off,
        ..ExponentOptions::default()
    };
    let r = exponents::generic_exponent(&p, &lam, 1.0, opts).unwrap();
    close(r.value, exponents::lossless_exponent(&p, 1.0).unwrap(), 1e-6);
}

#[test]
fn finite_n_curie_weiss_converges() {
    let params = CWParams::new(0.3, 0.8).unwrap();
    let limit = curie_weiss::cw_exponent(params).exponent;
    let errs: Vec<f64> = [100, 400, 1600]
        .iter()
        .map(|&n| (curie_weiss::cw_exact_finite_n(params, n).unwrap() - limit).abs())
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    assert!(errs[2] < 5e-3);
}

#[test]
fn bayes_multistart_keeps_the_best_root() {
    let prior = FiniteSupportPrior::new(vec![1.0, -1.0], dist(&[0.5, 0.5]), vec![1.0, 0.2]).unwrap();
    let ms = estimators::bayes_linear_multistart(&prior, 0.25, &[-2.0, 0.0, 2.0], Default::default()).unwrap();
    let best = ms.roots[ms.best].1;
    assert!(ms.roots.iter().all(|r| r.1 <= best));
    for (s, _) in &ms.roots {
        close(estimators::bayes_linear_map(&prior, 0.25, *s).unwrap(), *s, 1e-9);
    }
}

fn parse_round_trip(x: f64) -> f64 {
    fmt12(x).parse().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn cost_table_csv_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e3..1e3f64, 3), 1..5)) {
        let t = FiniteCostTable::from_rows(rows.clone()).unwrap();
        let back = FiniteCostTable::parse_csv(&t.to_csv()).unwrap();
        prop_assert_eq!(back.n_symbols(), rows.len());
        for (x, row) in rows.iter().enumerate() {
            for (s, v) in row.iter().enumerate() {
                prop_assert!((back.get(x, s) - parse_round_trip(*v)).abs() <= 1e-300_f64.max(v.abs() * 1e-15));
            }
        }
    }

    #[test]
    fn distortion_csv_round_trip(rows in prop::collection::vec(prop::collection::vec(0.0..5.0f64, 2), 2..4)) {
        let mut rows = rows;
        for (x, row) in rows.iter_mut().enumerate() {
            row[x % 2] = 0.0;
        }
        let d = DistortionMatrix::from_rows(rows.clone()).unwrap();
        let back = DistortionMatrix::parse_csv(&d.to_csv()).unwrap();
        for (x, row) in rows.iter().enumerate() {
            for (y, v) in row.iter().enumerate() {
                prop_assert!((back.get(x, y) - v).abs() <= 1e-11 * v.abs().max(1e-12));
            }
        }
    }

    #[test]
    fn prior_csv_round_trip(w in prop::collection::vec(0.01..1.0f64, 2..5), phi0 in -2.0..2.0f64) {
        let n = w.len();
        let support: Vec<f64> = (0..n).map(|i| i as f64 - 1.5).collect();
        let phi: Vec<f64> = support.iter().map(|y| phi0 * y + 0.1).collect();
        let prior = FiniteSupportPrior::new(support, FiniteDistribution::from_weights(w).unwrap(), phi).unwrap();
        let back = FiniteSupportPrior::parse_csv(&prior.to_csv()).unwrap();
        prop_assert!(back.weights().l1_distance(prior.weights()) < 1e-10);
        for (a, b) in back.phi().iter().zip(prior.phi()) {
            prop_assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn lossless_exponent_lies_between_entropy_bounds(w in prop::collection::vec(0.01..1.0f64, 2..5), alpha in 0.01..4.0f64) {
        let p = FiniteDistribution::from_weights(w).unwrap();
        let v = exponents::lossless_exponent(&p, alpha).unwrap();
        let h = entropy(&p);
        let ln_m = (p.len() as f64).ln();
        prop_assert!(v >= alpha * h - 1e-12);
        prop_assert!(v <= alpha * ln_m + 1e-12);
    }
}
