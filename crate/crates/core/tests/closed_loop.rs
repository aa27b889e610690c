mod common;

use copos::model::{integrate_rk4, State};
use copos::sim::{
    recover_inputs, run_batch, run_closed_loop, summarize, write_csv, DoseCaps, PlantMode, Scenario,
    SimOptions, Therapy, CSV_HEADER,
};
use proptest::prelude::*;

use common::{default_design, table1};

#[test]
fn untreated_run_matches_open_loop_integration() {
    let (system, res) = default_design();
    let p = table1();
    let sc = Scenario::new("open_loop", Therapy::None);
    let traj = run_closed_loop(&sc, &system, &res.k, &p, &SimOptions::default()).unwrap();
    let dt = sc.controller_period / sc.rk4_substeps as f64;
    let oracle = integrate_rk4(&p, sc.x0, |_, _| (0.0, 0.0), sc.duration, dt).unwrap();
    for (k, s) in traj.states.iter().enumerate() {
        let o = oracle.states[k * sc.rk4_substeps];
        assert!((s.x1 - o.x1).abs() <= 1e-9 && (s.x2 - o.x2).abs() <= 1e-9, "sample {k}");
    }
    assert!(traj.u_applied.iter().all(|u| *u == [0.0, 0.0]));
    let m = summarize(&traj, &p).unwrap();
    assert_eq!(m.time_to_benign, None);
    assert_eq!((m.total_chemo_dose, m.total_immuno_dose), (0.0, 0.0));
}

#[test]
fn trajectories_satisfy_recording_invariants() {
    let (system, res) = default_design();
    let p = table1();
    let caps = DoseCaps::default();
    for traj in run_batch(&Scenario::standard_set(), &system, &res.k, &p, &SimOptions::default()) {
        let traj = traj.unwrap();
        let n = traj.len();
        assert_eq!(n, traj.scenario.steps() + 1);
        for len in [traj.states.len(), traj.e_i.len(), traj.u_raw.len(), traj.u_applied.len(), traj.memberships.len(), traj.clamped.len()] {
            assert_eq!(len, n);
        }
        assert!(traj.states.iter().all(State::is_positive));
        let mut flags = 0;
        for k in 0..n {
            let [u1, u2] = traj.u_applied[k];
            assert!((0.0..=caps.u1).contains(&u1) && (0.0..=caps.u2).contains(&u2));
            // Replaying the reconstruction gives the recorded doses and flags.
            let raw = traj.u_raw[k];
            let replay = recover_inputs((raw[0], raw[1]), traj.states[k], &p, &caps);
            assert_eq!([replay.u1, replay.u2], traj.u_applied[k]);
            assert_eq!(replay.clamped, traj.clamped[k]);
            let discrepancy = [raw[0] != u1, replay.u2_unclamped != u2];
            assert_eq!(discrepancy, traj.clamped[k]);
            flags += discrepancy.iter().filter(|&&f| f).count();
            assert!((traj.memberships[k].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(flags, traj.clamp_events);
        match traj.scenario.therapy {
            Therapy::ChemoOnly => assert!(traj.u_applied.iter().all(|u| u[1] == 0.0)),
            Therapy::ImmunoOnly => assert!(traj.u_applied.iter().all(|u| u[0] == 0.0)),
            _ => {}
        }
        let m = summarize(&traj, &p).unwrap();
        let peak = traj.states.iter().map(|s| s.x1).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(m.max_tumor, peak);
        assert_eq!(m.terminal_state, *traj.states.last().unwrap());
    }
}

#[test]
fn plant_modes_agree_on_the_combined_outcome() {
    let (system, res) = default_design();
    let p = table1();
    let continuous = Scenario::new("combined", Therapy::Combined);
    let mut discrete = continuous.clone();
    discrete.plant = PlantMode::DiscreteEuler;
    let out = run_batch(&[continuous, discrete], &system, &res.k, &p, &SimOptions::default());
    let a = out[0].as_ref().unwrap().terminal();
    let b = out[1].as_ref().unwrap().terminal();
    assert!((a.x1 - b.x1).abs() <= 0.05 * a.x1, "{a:?} vs {b:?}");
    assert!((a.x2 - b.x2).abs() <= 0.05 * a.x2, "{a:?} vs {b:?}");
}

#[test]
fn untreated_discrete_model_tracks_rk4() {
    let (system, res) = default_design();
    let p = table1();
    let mut sc = Scenario::new("open_loop", Therapy::None);
    sc.duration = 10.0;
    let rk = run_closed_loop(&sc, &system, &res.k, &p, &SimOptions::default()).unwrap();
    sc.plant = PlantMode::DiscreteEuler;
    let eu = run_closed_loop(&sc, &system, &res.k, &p, &SimOptions::default()).unwrap();
    for (a, b) in rk.states.iter().zip(&eu.states) {
        assert!((a.x1 - b.x1).abs() <= 0.02 * a.x1 && (a.x2 - b.x2).abs() <= 0.02 * a.x2.max(1e-3));
    }
}

#[test]
fn batch_results_are_ordered_and_repeatable() {
    let (system, res) = default_design();
    let p = table1();
    let set = Scenario::standard_set();
    let a = run_batch(&set, &system, &res.k, &p, &SimOptions::default());
    let b = run_batch(&set, &system, &res.k, &p, &SimOptions::default());
    for ((sc, ta), tb) in set.iter().zip(&a).zip(&b) {
        let (ta, tb) = (ta.as_ref().unwrap(), tb.as_ref().unwrap());
        assert_eq!(ta.scenario.name, sc.name);
        assert_eq!(ta, tb);
    }
}

#[test]
fn csv_export_keeps_every_stride_and_the_last_sample() {
    let (system, res) = default_design();
    let mut sc = Scenario::new("combined", Therapy::Combined);
    sc.duration = 1.0;
    let traj = run_closed_loop(&sc, &system, &res.k, &table1(), &SimOptions::default()).unwrap();
    let mut buf = Vec::new();
    write_csv(&traj, &mut buf, 7).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    let expected = (0..traj.len()).filter(|k| k % 7 == 0 || *k == traj.len() - 1).count();
    assert_eq!(lines.len() - 1, expected);
    let last: Vec<f64> = lines.last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last.len(), 17);
    assert_eq!(last[1], traj.terminal().x1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn random_initial_states_stay_positive_and_bounded(
        x1 in 1.0f64..1000.0,
        x2 in 0.0f64..3.0,
        therapy in prop::sample::select(vec![Therapy::None, Therapy::ChemoOnly, Therapy::ImmunoOnly, Therapy::Combined]),
    ) {
        let (system, res) = default_design();
        let mut sc = Scenario::new("random", therapy);
        sc.x0 = State::new(x1, x2.max(1e-3));
        sc.duration = 5.0;
        let traj = run_closed_loop(&sc, &system, &res.k, &table1(), &SimOptions::default()).unwrap();
        prop_assert!(traj.states.iter().all(|s| s.is_positive() && s.is_finite()));
        prop_assert!(traj.u_applied.iter().all(|u| (0.0..=1.0).contains(&u[0]) && (0.0..=1.0).contains(&u[1])));
    }
}
