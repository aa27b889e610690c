//! Closed-loop treatment simulation under the PDC law.
//!
//! At every controller period the premises are evaluated on the measured
//! state, the memberships blend the rule gains into a raw input
//! `(u1, u2*)`, the physical doses are recovered from `u2* = alpha + k_x2 x2 u2`
//! and clamped to their caps, and the plant is advanced with the doses held.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::{self, AugmentedVertexSystem, RULES};
use crate::model::{self, ModelParams, State, POSITIVITY_FLOOR};

/// Guard on `x2` in the input recovery denominator.
pub const EPS_DEN: f64 = 1e-6;
/// Integrator states are clamped to `[-WINDUP_LIMIT, WINDUP_LIMIT]`.
pub const WINDUP_LIMIT: f64 = 1e6;
/// Saddle abscissa used for `time_to_benign` when no saddle is found.
pub const FALLBACK_BENIGN_THRESHOLD: f64 = 356.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Therapy {
    None,
    ChemoOnly,
    ImmunoOnly,
    Combined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlantMode {
    /// Nonlinear model, RK4 substeps within each controller period.
    #[default]
    ContinuousRk4,
    /// Euler map of the T–S model at the controller period.
    DiscreteEuler,
}

fn default_controller_period() -> f64 {
    1e-3
}

fn default_substeps() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub therapy: Therapy,
    pub x0: State,
    /// Reference `(tumor, effector)`.
    pub z_r: [f64; 2],
    /// Days.
    pub duration: f64,
    #[serde(default = "default_controller_period")]
    pub controller_period: f64,
    #[serde(default)]
    pub plant: PlantMode,
    #[serde(default = "default_substeps")]
    pub rk4_substeps: usize,
}

impl Scenario {
    pub fn new(name: &str, therapy: Therapy) -> Self {
        Scenario {
            name: name.to_string(),
            therapy,
            x0: State::new(600.0, 0.1),
            z_r: [50.0, 1.6],
            duration: 60.0,
            controller_period: default_controller_period(),
            plant: PlantMode::default(),
            rk4_substeps: default_substeps(),
        }
    }

    /// The four treatment scenarios: none, chemotherapy only, immunotherapy
    /// only and combined, from `(600, 0.1)` toward `(50, 1.6)` over 60 days.
    pub fn standard_set() -> Vec<Scenario> {
        vec![
            Scenario::new("open_loop", Therapy::None),
            Scenario::new("chemo_only", Therapy::ChemoOnly),
            Scenario::new("immuno_only", Therapy::ImmunoOnly),
            Scenario::new("combined", Therapy::Combined),
        ]
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.controller_period).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !self.x0.is_positive() || !self.x0.is_finite() {
            return Err(Error::Domain(format!(
                "scenario {}: x0 must be in the positive orthant",
                self.name
            )));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::Domain(format!("scenario {}: duration must be positive", self.name)));
        }
        if !(self.controller_period > 0.0 && self.controller_period <= self.duration) {
            return Err(Error::Domain(format!(
                "scenario {}: controller period must be in (0, duration]",
                self.name
            )));
        }
        if self.rk4_substeps == 0 {
            return Err(Error::Domain(format!("scenario {}: rk4_substeps must be >= 1", self.name)));
        }
        if self.z_r.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("scenario {}: non-finite reference", self.name)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoseCaps {
    pub u1: f64,
    pub u2: f64,
}

impl Default for DoseCaps {
    fn default() -> Self {
        DoseCaps { u1: 1.0, u2: 1.0 }
    }
}

/// Membership-weighted state feedback `sum_i h_i K_i xbar`.
pub fn pdc_control(h: &[f64], k: &[DMatrix<f64>], xbar: &DVector<f64>) -> Result<DVector<f64>> {
    if h.len() != k.len() || k.is_empty() {
        return Err(Error::Dimension(format!("{} weights for {} gains", h.len(), k.len())));
    }
    let (m, n) = k[0].shape();
    if xbar.len() != n || k.iter().any(|ki| ki.shape() != (m, n)) {
        return Err(Error::Dimension(format!(
            "gains must all be {m}x{n} for a state of length {}",
            xbar.len()
        )));
    }
    let mut u = DVector::zeros(m);
    for (w, ki) in h.iter().zip(k) {
        if *w != 0.0 {
            u += (ki * xbar) * *w;
        }
    }
    Ok(u)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AppliedInputs {
    pub u1: f64,
    pub u2: f64,
    /// `u2` before clamping.
    pub u2_unclamped: f64,
    pub clamped: [bool; 2],
}

/// Inverts `u2* = alpha + k_x2 x2 u2` and clamps both doses to `[0, cap]`.
pub fn recover_inputs(raw: (f64, f64), s: State, params: &ModelParams, caps: &DoseCaps) -> AppliedInputs {
    let u2 = (raw.1 - params.alpha) / (params.k_x2 * s.x2.max(EPS_DEN));
    let u1c = raw.0.clamp(0.0, caps.u1);
    let u2c = u2.clamp(0.0, caps.u2);
    AppliedInputs {
        u1: u1c,
        u2: u2c,
        u2_unclamped: u2,
        clamped: [u1c != raw.0, u2c != u2],
    }
}

fn mask(therapy: Therapy, raw: (f64, f64), alpha: f64) -> (f64, f64) {
    match therapy {
        Therapy::Combined => raw,
        Therapy::ChemoOnly => (raw.0, alpha),
        Therapy::ImmunoOnly => (0.0, raw.1),
        Therapy::None => (0.0, alpha),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub scenario: Scenario,
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// Integrator states `(e_I1, e_I2)`.
    pub e_i: Vec<[f64; 2]>,
    /// Controller output `(u1, u2*)` after therapy masking.
    pub u_raw: Vec<[f64; 2]>,
    /// Physical doses `(u1, u2)`.
    pub u_applied: Vec<[f64; 2]>,
    /// Per sample, whether each dose was clamped.
    pub clamped: Vec<[bool; 2]>,
    pub memberships: Vec<[f64; RULES]>,
    pub clamp_events: usize,
    pub windup_events: usize,
    /// Samples at which a premise fell outside its sector.
    pub premise_clamp_events: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn terminal(&self) -> State {
        *self.states.last().expect("trajectory has at least one sample")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimOptions {
    pub caps: DoseCaps,
    pub windup_limit: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            caps: DoseCaps::default(),
            windup_limit: WINDUP_LIMIT,
        }
    }
}

fn diverged(t: f64, reason: impl Into<String>) -> Error {
    Error::Diverged {
        time: t,
        reason: reason.into(),
    }
}

/// Simulates one scenario with the rule gains `k` designed for `system`.
pub fn run_closed_loop(
    scenario: &Scenario,
    system: &AugmentedVertexSystem,
    k: &[DMatrix<f64>],
    params: &ModelParams,
    opts: &SimOptions,
) -> Result<Trajectory> {
    scenario.validate()?;
    params.validate()?;
    let n = system.states();
    if system.rules() != RULES || n != 4 || system.b.first().map(DMatrix::ncols) != Some(2) {
        return Err(Error::Dimension(format!(
            "expected an {RULES}-rule system with 4 states and 2 inputs"
        )));
    }
    if k.len() != RULES || k.iter().any(|ki| ki.shape() != (2, n)) {
        return Err(Error::Dimension(format!("expected {RULES} gains of shape 2x{n}")));
    }
    let bounds = &system.premise_bounds;
    bounds.validate()?;
    // Continuous plant vertices for the discrete-plant mode.
    let continuous: Option<(Vec<DMatrix<f64>>, Vec<DMatrix<f64>>)> = match scenario.plant {
        PlantMode::ContinuousRk4 => None,
        PlantMode::DiscreteEuler => {
            let inv_t = match system.sampling_period {
                Some(t) => 1.0 / t,
                None => 1.0,
            };
            let eye = DMatrix::<f64>::identity(n, n);
            let a = system
                .a
                .iter()
                .map(|ad| {
                    let ac = if system.is_discrete() { (ad - &eye) * inv_t } else { ad.clone() };
                    ac.view((0, 0), (2, 2)).clone_owned()
                })
                .collect();
            let b = system
                .b
                .iter()
                .map(|bd| (bd * inv_t).view((0, 0), (2, 2)).clone_owned())
                .collect();
            Some((a, b))
        }
    };

    let tc = scenario.controller_period;
    let steps = scenario.steps();
    let sub_dt = tc / scenario.rk4_substeps as f64;
    let mut traj = Trajectory {
        scenario: scenario.clone(),
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        e_i: Vec::with_capacity(steps + 1),
        u_raw: Vec::with_capacity(steps + 1),
        u_applied: Vec::with_capacity(steps + 1),
        clamped: Vec::with_capacity(steps + 1),
        memberships: Vec::with_capacity(steps + 1),
        clamp_events: 0,
        windup_events: 0,
        premise_clamp_events: 0,
    };
    let mut s = scenario.x0;
    let mut e = [0.0f64; 2];
    for step in 0..=steps {
        let t = step as f64 * tc;
        let theta = fuzzy::premise_values(params, s)?;
        let mem = fuzzy::membership(&theta, bounds)?;
        traj.premise_clamp_events += usize::from(mem.clamped);
        let xbar = DVector::from_vec(vec![s.x1, s.x2, e[0], e[1]]);
        let u = pdc_control(&mem.h, k, &xbar)?;
        let raw = mask(scenario.therapy, (u[0], u[1]), params.alpha);
        if !(raw.0.is_finite() && raw.1.is_finite()) {
            return Err(diverged(t, format!("non-finite control {raw:?}")));
        }
        let applied = recover_inputs(raw, s, params, &opts.caps);
        traj.clamp_events += applied.clamped.iter().filter(|&&c| c).count();
        traj.times.push(t);
        traj.states.push(s);
        traj.e_i.push(e);
        traj.u_raw.push([raw.0, raw.1]);
        traj.u_applied.push([applied.u1, applied.u2]);
        traj.clamped.push(applied.clamped);
        traj.memberships.push(mem.h);
        if step == steps {
            break;
        }

        let next = match &continuous {
            None => {
                let mut x = s;
                for _ in 0..scenario.rk4_substeps {
                    x = model::rk4_step(params, x, (applied.u1, applied.u2), sub_dt).map_err(|err| match err {
                        Error::StepRejected { reason, .. } => diverged(t, reason),
                        other => diverged(t, other.to_string()),
                    })?;
                }
                x
            }
            Some((a, b)) => {
                let (ab, bb) = (fuzzy::blend(&mem.h, a)?, fuzzy::blend(&mem.h, b)?);
                let ustar = params.alpha + params.k_x2 * s.x2 * applied.u2;
                let x = DVector::from_vec(vec![s.x1, s.x2]);
                let uv = DVector::from_vec(vec![applied.u1, ustar]);
                let xn = &x + (&ab * &x + &bb * &uv) * tc;
                State::new(xn[0].max(POSITIVITY_FLOOR), xn[1].max(POSITIVITY_FLOOR))
            }
        };
        if !next.is_finite() {
            return Err(diverged(t, format!("non-finite state {next:?}")));
        }
        for (ei, (zr, z)) in e.iter_mut().zip(scenario.z_r.iter().zip([s.x1, s.x2])) {
            let v = *ei + tc * (zr - z);
            let c = v.clamp(-opts.windup_limit, opts.windup_limit);
            traj.windup_events += usize::from(c != v);
            *ei = c;
        }
        s = next;
    }
    Ok(traj)
}

/// Runs scenarios in parallel; results keep the input order.
pub fn run_batch(
    scenarios: &[Scenario],
    system: &AugmentedVertexSystem,
    k: &[DMatrix<f64>],
    params: &ModelParams,
    opts: &SimOptions,
) -> Vec<Result<Trajectory>> {
    scenarios
        .par_iter()
        .map(|sc| run_closed_loop(sc, system, k, params, opts))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeMetrics {
    pub scenario: String,
    pub therapy: Therapy,
    pub max_tumor: f64,
    /// Threshold used for `time_to_benign` (saddle abscissa).
    pub benign_threshold: f64,
    /// Day at which `x1` last crosses the threshold downward, if it then stays below.
    pub time_to_benign: Option<f64>,
    pub terminal_state: State,
    pub total_chemo_dose: f64,
    pub total_immuno_dose: f64,
    /// Euclidean norm of `z - z_r` at the final sample.
    pub tracking_error: f64,
    pub clamp_events: usize,
    pub windup_events: usize,
    pub premise_clamp_events: usize,
}

/// Saddle abscissa separating benign and malignant basins.
pub fn benign_threshold(params: &ModelParams) -> f64 {
    model::default_equilibria(params)
        .ok()
        .and_then(|eq| {
            eq.iter()
                .find(|e| e.kind == model::EquilibriumKind::Saddle)
                .map(|e| e.point.x1)
        })
        .unwrap_or(FALLBACK_BENIGN_THRESHOLD)
}

fn trapezoid(t: &[f64], y: impl Iterator<Item = f64>) -> f64 {
    let y: Vec<f64> = y.collect();
    t.windows(2)
        .zip(y.windows(2))
        .map(|(tw, yw)| 0.5 * (tw[1] - tw[0]) * (yw[0] + yw[1]))
        .sum()
}

/// Downward crossing time of `threshold` after which `x` stays below it.
pub fn settling_crossing(times: &[f64], x: &[f64], threshold: f64) -> Option<f64> {
    let last_above = x.iter().rposition(|&v| v >= threshold)?;
    if last_above + 1 >= x.len() {
        return None;
    }
    let (ta, tb) = (times[last_above], times[last_above + 1]);
    let (xa, xb) = (x[last_above], x[last_above + 1]);
    Some(ta + (xa - threshold) / (xa - xb) * (tb - ta))
}

pub fn summarize(traj: &Trajectory, params: &ModelParams) -> Result<OutcomeMetrics> {
    if traj.is_empty() {
        return Err(Error::Domain("empty trajectory".into()));
    }
    let threshold = benign_threshold(params);
    let x1: Vec<f64> = traj.states.iter().map(|s| s.x1).collect();
    let term = traj.terminal();
    let z_r = traj.scenario.z_r;
    Ok(OutcomeMetrics {
        scenario: traj.scenario.name.clone(),
        therapy: traj.scenario.therapy,
        max_tumor: x1.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        benign_threshold: threshold,
        time_to_benign: settling_crossing(&traj.times, &x1, threshold),
        terminal_state: term,
        total_chemo_dose: trapezoid(&traj.times, traj.u_applied.iter().map(|u| u[0])),
        total_immuno_dose: trapezoid(&traj.times, traj.u_applied.iter().map(|u| u[1])),
        tracking_error: (term.x1 - z_r[0]).hypot(term.x2 - z_r[1]),
        clamp_events: traj.clamp_events,
        windup_events: traj.windup_events,
        premise_clamp_events: traj.premise_clamp_events,
    })
}

pub const CSV_HEADER: &str = "t,x1,x2,eI1,eI2,u1_raw,u2star_raw,u1,u2,h1,h2,h3,h4,h5,h6,h7,h8";

/// Writes every `stride`-th sample plus the final one, with round-trip
/// float formatting.
pub fn write_csv<W: Write>(traj: &Trajectory, mut out: W, stride: usize) -> io::Result<()> {
    let stride = stride.max(1);
    writeln!(out, "{CSV_HEADER}")?;
    let last = traj.len().saturating_sub(1);
    for k in (0..traj.len()).filter(|&k| k % stride == 0 || k == last) {
        let s = traj.states[k];
        let e = traj.e_i[k];
        let r = traj.u_raw[k];
        let u = traj.u_applied[k];
        write!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            traj.times[k], s.x1, s.x2, e[0], e[1], r[0], r[1], u[0], u[1]
        )?;
        for h in traj.memberships[k] {
            write!(out, ",{h}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
