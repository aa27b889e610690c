mod common;

use copos::fuzzy::{
    build_vertices, membership, premise_bounds, premise_values, Domain, ExtremaMode, RULES,
};
use copos::model::{derivatives, State};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::table1;

fn premise_matrices(theta: [f64; 3]) -> (DMatrix<f64>, DMatrix<f64>) {
    (
        DMatrix::from_row_slice(2, 2, &[theta[0], 0.0, 0.0, theta[1]]),
        DMatrix::from_row_slice(2, 2, &[theta[2], 0.0, 0.0, 1.0]),
    )
}

#[test]
fn blended_vertices_equal_premise_matrices_on_random_states() {
    let p = table1();
    let dom = Domain::default();
    let bounds = premise_bounds(&p, &dom, ExtremaMode::Global).unwrap();
    let sys = build_vertices(&bounds).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst, mut worst_sum) = (0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let s = State::new(rng.gen_range(dom.x1_min..=dom.x1_max), rng.gen_range(dom.x2_min..=dom.x2_max));
        let theta = premise_values(&p, s).unwrap();
        let mem = membership(&theta, &bounds).unwrap();
        assert!(!mem.clamped);
        worst_sum = worst_sum.max((mem.h.iter().sum::<f64>() - 1.0).abs());
        let (a, b) = sys.blend(&mem.h).unwrap();
        let (ad, bd) = premise_matrices(theta);
        worst = worst.max((a - ad).abs().max()).max((b - bd).abs().max());
    }
    assert!(worst < 1e-10, "max matrix error {worst:e}");
    assert!(worst_sum < 1e-12, "max simplex error {worst_sum:e}");
}

#[test]
fn premise_form_reproduces_the_vector_field() {
    let p = table1();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let s = State::new(rng.gen_range(0.1..1000.0), rng.gen_range(0.0..5.0));
        let (u1, u2) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
        let (a, b) = premise_matrices(premise_values(&p, s).unwrap());
        let ustar = p.alpha + p.k_x2 * s.x2 * u2;
        let f = a * DVector::from_vec(vec![s.x1, s.x2]) + b * DVector::from_vec(vec![u1, ustar]);
        let (f1, f2) = derivatives(&p, s, u1, u2).unwrap();
        assert!((f[0] - f1).abs() < 1e-9 * (1.0 + f1.abs()), "{s:?}");
        assert!((f[1] - f2).abs() < 1e-12 * (1.0 + f2.abs()), "{s:?}");
    }
}

#[test]
fn endpoint_vertices_carry_the_listed_entries() {
    let bounds = premise_bounds(&table1(), &Domain::default(), ExtremaMode::Endpoint).unwrap();
    let sys = build_vertices(&bounds).unwrap();
    let mut entries: Vec<f64> = sys
        .a
        .iter()
        .chain(&sys.b)
        .flat_map(|m| m.iter().copied().collect::<Vec<_>>())
        .collect();
    entries.sort_by(f64::total_cmp);
    entries.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    for want in [5.0178, -5.1391, -0.3740, -8.3121, -0.1, -1000.0] {
        assert!(
            entries.iter().any(|v| (v - want).abs() < 1e-3),
            "{want} missing from {entries:?}"
        );
    }
}

#[test]
fn endpoint_bounds_miss_the_interior_peak() {
    let p = table1();
    let bounds = premise_bounds(&p, &Domain::default(), ExtremaMode::Endpoint).unwrap();
    let theta = premise_values(&p, State::new(0.5 / p.beta, 1.0)).unwrap();
    assert!(theta[1] > bounds.sectors[1].max);
    assert!(membership(&theta, &bounds).unwrap().clamped);
}

#[test]
fn global_peak_matches_grid_maximum() {
    let p = table1();
    let dom = Domain::default();
    let global = premise_bounds(&p, &dom, ExtremaMode::Global).unwrap();
    let n = 200_000;
    let grid_max = (0..=n)
        .map(|k| {
            let x1 = dom.x1_min + (dom.x1_max - dom.x1_min) * k as f64 / n as f64;
            p.mu_i * (x1 - p.beta * x1 * x1) - p.delta
        })
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((global.sectors[1].max - grid_max).abs() < 1e-7);
    assert!((global.sectors[1].max - 0.0838).abs() < 5e-5);
    let endpoint = premise_bounds(&p, &dom, ExtremaMode::Endpoint).unwrap();
    assert!(global.encloses(&endpoint));
}

proptest! {
    #[test]
    fn membership_is_on_the_simplex_for_any_premise(
        t1 in -20.0f64..20.0,
        t2 in -20.0f64..20.0,
        t3 in -2000.0f64..100.0,
    ) {
        let bounds = premise_bounds(&table1(), &Domain::default(), ExtremaMode::Endpoint).unwrap();
        let mem = membership(&[t1, t2, t3], &bounds).unwrap();
        prop_assert_eq!(mem.h.len(), RULES);
        prop_assert!(mem.h.iter().all(|&h| (0.0..=1.0).contains(&h)));
        prop_assert!((mem.h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let inside = bounds.sectors.iter().zip([t1, t2, t3]).all(|(s, v)| s.min <= v && v <= s.max);
        prop_assert_eq!(mem.clamped, !inside);
    }

    #[test]
    fn blended_premise_is_recovered_inside_the_sector(
        x1 in 0.1f64..1000.0,
        x2 in 0.0f64..5.0,
    ) {
        let p = table1();
        let bounds = premise_bounds(&p, &Domain::default(), ExtremaMode::Global).unwrap();
        let theta = premise_values(&p, State::new(x1, x2)).unwrap();
        let sys = build_vertices(&bounds).unwrap();
        let mem = membership(&theta, &bounds).unwrap();
        let (a, b) = sys.blend(&mem.h).unwrap();
        prop_assert!((a[(0, 0)] - theta[0]).abs() < 1e-10);
        prop_assert!((a[(1, 1)] - theta[1]).abs() < 1e-12);
        prop_assert!((b[(0, 0)] - theta[2]).abs() < 1e-9);
    }
}
