mod common;

use copos::fuzzy::DEFAULT_SAMPLING_PERIOD;
use copos::synthesis::{
    decrement, lcplf_stability, synthesize_pdc, verify_closed_loop, LcplfOptions, SynthesisOptions,
    SynthesisOutcome, VerifyOptions,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

use common::{default_design, design_problem, oracle_schur_margin, oracle_spectral_radius};

#[test]
fn default_design_replays_independently() {
    let (_, res) = default_design();
    assert!(res.passed());
    let problem = design_problem(DEFAULT_SAMPLING_PERIOD);
    let q = &res.q;
    assert!(q.iter().all(|&v| v > 0.0));
    // Gains are recovered as K_j = M_j Q^-1.
    for (kj, mj) in res.k.iter().zip(&res.m) {
        let recovered = DMatrix::from_fn(2, 4, |r, c| mj[(r, c)] / q[c]);
        assert!((kj - recovered).abs().max() <= 1e-9 * (1.0 + kj.abs().max()));
    }
    for i in 0..8 {
        for j in 0..8 {
            let g = &problem.a[i] + &problem.b[i] * &res.k[j];
            let step: Vec<f64> = (0..4)
                .map(|h| (0..4).map(|t| g[(h, t)] * q[t]).sum::<f64>() - q[h])
                .collect();
            assert!(step.iter().all(|&v| v < 0.0), "pair ({i},{j}): {step:?}");
            for h in 0..2 {
                assert!(g.row(h).iter().all(|&v| v >= -1e-9), "pair ({i},{j}) row {h}");
            }
            let margin = oracle_schur_margin(&g, DEFAULT_SAMPLING_PERIOD);
            assert!(margin < 0.0, "pair ({i},{j}) oracle margin {margin}");
            let report = &res.report.pairs[i * 8 + j];
            let lib_margin = report.spectral_radius.powi(2) - 1.0;
            assert!((lib_margin - margin).abs() <= 1e-3 * margin.abs(), "{lib_margin} vs {margin}");
        }
    }
}

#[test]
fn zero_gains_fail_verification() {
    let problem = design_problem(DEFAULT_SAMPLING_PERIOD);
    let k = vec![DMatrix::zeros(2, 4); 8];
    let opts = VerifyOptions { rows: vec![0, 1], eps: 1e-6, q_max: 1e6 };
    let report = verify_closed_loop(&problem, &k, None, &opts).unwrap();
    // The integrators are undriven, so an eigenvalue sits on the unit circle.
    assert!(!report.all_schur);
    assert!(!report.passed());
}

#[test]
fn perturbed_gain_is_caught() {
    let (_, res) = default_design();
    let problem = design_problem(DEFAULT_SAMPLING_PERIOD);
    let opts = VerifyOptions { rows: vec![0, 1], eps: 1e-6, q_max: 1e6 };
    let mut k = res.k.clone();
    k[3][(0, 0)] += 1e3;
    let report = verify_closed_loop(&problem, &k, Some(&res.q), &opts).unwrap();
    assert!(!report.all_rows_nonnegative);
    assert!(!report.passed());

    let mut k = res.k.clone();
    k[3][(0, 0)] -= 1e3;
    let report = verify_closed_loop(&problem, &k, Some(&res.q), &opts).unwrap();
    assert!(!report.decrement_ok());
    assert!(!report.all_schur);
    assert!(!report.passed());
}

#[test]
fn strict_paper_mode_keeps_nonpositive_m_or_reports_infeasible() {
    let problem = design_problem(DEFAULT_SAMPLING_PERIOD);
    match synthesize_pdc(&problem, &SynthesisOptions::strict_paper()).unwrap() {
        SynthesisOutcome::Feasible(res) => {
            assert!(res.m.iter().all(|m| m.iter().all(|&v| v <= 1e-9)));
            assert!(res.report.decrement_ok() && res.report.all_rows_nonnegative);
        }
        SynthesisOutcome::Infeasible(f) => assert!(!f.tight.is_empty() || f.phase1_infeasibility > 0.0),
    }
}

#[test]
fn coarse_sampling_period_is_infeasible() {
    let problem = design_problem(1.0);
    let out = synthesize_pdc(&problem, &SynthesisOptions::default()).unwrap();
    assert!(matches!(out, SynthesisOutcome::Infeasible(_)));
}

fn nonnegative(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(0.0f64..1.0, n * n).prop_map(move |v| DMatrix::from_row_slice(n, n, &v))
}

proptest! {
    #[test]
    fn common_lcplf_implies_schur_for_every_vertex(
        mats in (2usize..=4).prop_flat_map(|n| prop::collection::vec(nonnegative(n), 1..4)),
        scale in 0.1f64..0.6,
    ) {
        let mats: Vec<DMatrix<f64>> = mats.into_iter().map(|m| m * scale).collect();
        let opts = LcplfOptions { dual: true, ..LcplfOptions::default() };
        if let Some(cert) = lcplf_stability(&mats, &opts).unwrap() {
            for g in &mats {
                prop_assert!(decrement(g, &cert.p).iter().all(|&v| v < 0.0));
                prop_assert!(oracle_spectral_radius(g) < 1.0);
            }
        } else {
            // No certificate: some vertex, or a convex mix, is not Schur. For a single
            // vertex the nonnegative-matrix theory makes this exact.
            if mats.len() == 1 {
                prop_assert!(oracle_spectral_radius(&mats[0]) >= 1.0 - 1e-6);
            }
        }
    }

    #[test]
    fn certificate_is_invariant_to_transposition_for_a_single_vertex(a in (2usize..=4).prop_flat_map(nonnegative)) {
        let primal = lcplf_stability(std::slice::from_ref(&a), &LcplfOptions::default()).unwrap();
        let dual = lcplf_stability(std::slice::from_ref(&a), &LcplfOptions { dual: true, ..LcplfOptions::default() }).unwrap();
        prop_assert_eq!(primal.is_some(), dual.is_some());
    }
}
