use copos::lp::{solve, LinearProgram, LpStatus, Relation, Sense};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random program with a planted interior point, boxed to `[0, 10]`.
fn random_feasible(rng: &mut ChaCha8Rng, m: usize, n: usize) -> (LinearProgram, Vec<f64>) {
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..9.5)).collect();
    let coeffs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let sense = if rng.gen_bool(0.5) { Sense::Maximize } else { Sense::Minimize };
    let mut lp = LinearProgram::new(n).with_objective(sense, coeffs);
    for j in 0..n {
        lp.set_bounds(j, 0.0, 10.0);
    }
    for _ in 0..m {
        let row: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let lhs: f64 = row.iter().zip(&x0).map(|(a, x)| a * x).sum();
        match rng.gen_range(0..5) {
            0 => lp.add(row, Relation::Eq, lhs),
            1 | 2 => lp.add(row, Relation::Le, lhs + rng.gen_range(0.0..3.0)),
            _ => lp.add(row, Relation::Ge, lhs - rng.gen_range(0.0..3.0)),
        };
    }
    (lp, x0)
}

#[test]
fn random_bounded_programs_are_solved_feasibly() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..200 {
        let (lp, x0) = random_feasible(&mut rng, 10, 10);
        let out = solve(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal, "case {case}");
        let x = out.solution.as_ref().unwrap();
        assert!(lp.max_violation(x) <= 1e-9, "case {case}: violation {}", lp.max_violation(x));
        // The planted point is feasible, so the optimum is at least as good.
        let (got, planted) = (lp.objective_at(x).unwrap(), lp.objective_at(&x0).unwrap());
        match lp.objective.sense {
            Sense::Maximize => assert!(got >= planted - 1e-9, "case {case}"),
            _ => assert!(got <= planted + 1e-9, "case {case}"),
        }
    }
}

#[test]
fn primal_and_dual_optima_coincide() {
    // max c'x, Ax <= b, x >= 0   vs   min b'y, A'y >= c, y >= 0
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..100 {
        let (m, n) = (rng.gen_range(2..9), rng.gen_range(2..9));
        let a: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.gen_range(0.1..5.0)).collect()).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.gen_range(1.0..10.0)).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..3.0)).collect();
        let mut primal = LinearProgram::new(n).with_objective(Sense::Maximize, c.clone());
        for (row, &bi) in a.iter().zip(&b) {
            primal.add(row.clone(), Relation::Le, bi);
        }
        let mut dual = LinearProgram::new(m).with_objective(Sense::Minimize, b.clone());
        for j in 0..n {
            dual.add(a.iter().map(|row| row[j]).collect(), Relation::Ge, c[j]);
        }
        let (p, d) = (solve(&primal).unwrap(), solve(&dual).unwrap());
        let (pv, dv) = (p.objective_value.unwrap(), d.objective_value.unwrap());
        assert!((pv - dv).abs() <= 1e-8 * (1.0 + pv.abs()), "case {case}: {pv} vs {dv}");
        // Weak duality for the returned pair, evaluated directly.
        let x = p.solution.unwrap();
        let y = d.solution.unwrap();
        let cx: f64 = c.iter().zip(&x).map(|(c, x)| c * x).sum();
        let by: f64 = b.iter().zip(&y).map(|(b, y)| b * y).sum();
        assert!(cx <= by + 1e-8, "case {case}");
    }
}

/// Best objective over every feasible intersection of two constraint lines.
fn vertex_enumeration(lines: &[([f64; 2], f64)], c: [f64; 2], maximize: bool) -> Option<f64> {
    let feasible = |x: [f64; 2]| lines.iter().all(|(a, b)| a[0] * x[0] + a[1] * x[1] <= b + 1e-9);
    let mut best: Option<f64> = None;
    for (i, (a, b)) in lines.iter().enumerate() {
        for (p, q) in &lines[i + 1..] {
            let det = a[0] * p[1] - a[1] * p[0];
            if det.abs() < 1e-12 {
                continue;
            }
            let x = [(b * p[1] - a[1] * q) / det, (a[0] * q - b * p[0]) / det];
            if !feasible(x) {
                continue;
            }
            let v = c[0] * x[0] + c[1] * x[1];
            best = Some(match best {
                None => v,
                Some(w) if maximize => w.max(v),
                Some(w) => w.min(v),
            });
        }
    }
    best
}

#[test]
fn two_variable_optimum_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut solved = 0;
    for case in 0..200 {
        let c = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let maximize = rng.gen_bool(0.5);
        let sense = if maximize { Sense::Maximize } else { Sense::Minimize };
        let mut lp = LinearProgram::new(2).with_objective(sense, c.to_vec());
        let mut lines = Vec::new();
        for j in 0..2 {
            lp.set_bounds(j, -5.0, 5.0);
            let mut e = [0.0; 2];
            e[j] = 1.0;
            lines.push((e, 5.0));
            e[j] = -1.0;
            lines.push((e, 5.0));
        }
        for _ in 0..rng.gen_range(1..6) {
            let a = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
            let b = rng.gen_range(-3.0..6.0);
            lp.add(a.to_vec(), Relation::Le, b);
            lines.push((a, b));
        }
        let out = solve(&lp).unwrap();
        match vertex_enumeration(&lines, c, maximize) {
            Some(v) => {
                assert_eq!(out.status, LpStatus::Optimal, "case {case}");
                let got = out.objective_value.unwrap();
                assert!((got - v).abs() <= 1e-9, "case {case}: {got} vs {v}");
                solved += 1;
            }
            None => assert_eq!(out.status, LpStatus::Infeasible, "case {case}"),
        }
    }
    assert!(solved > 100);
}

#[test]
fn planted_contradiction_is_reported_infeasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..50 {
        let (mut lp, _) = random_feasible(&mut rng, 8, 6);
        let row: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
        lp.add(row.clone(), Relation::Le, 1.0);
        lp.add(row, Relation::Ge, 1.5);
        let out = solve(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Infeasible);
        assert!(out.diagnostics.phase1_infeasibility > 0.0);
    }
}

#[test]
fn repeated_solves_are_bit_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (lp, _) = random_feasible(&mut rng, 10, 10);
    let a = solve(&lp).unwrap();
    let b = solve(&lp).unwrap();
    assert_eq!(a.solution, b.solution);
    assert_eq!(a.diagnostics.pivots, b.diagnostics.pivots);
}

proptest! {
    #[test]
    fn row_scaling_does_not_change_the_answer(seed in 0u64..500, scale in 1e-3f64..1e3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lp, _) = random_feasible(&mut rng, 6, 5);
        let mut scaled = lp.clone();
        for c in &mut scaled.constraints {
            for v in &mut c.coeffs {
                *v *= scale;
            }
            c.rhs *= scale;
        }
        let (a, b) = (solve(&lp).unwrap(), solve(&scaled).unwrap());
        prop_assert_eq!(a.status, b.status);
        let (va, vb) = (a.objective_value.unwrap(), b.objective_value.unwrap());
        prop_assert!((va - vb).abs() <= 1e-7 * (1.0 + va.abs()));
        prop_assert!(lp.max_violation(b.solution.as_ref().unwrap()) <= 1e-9 * (1.0 + scale));
    }
}
