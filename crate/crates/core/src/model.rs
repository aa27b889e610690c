//! Reformed Stepanova tumor–immune dynamics.
//!
//! State `x1` is the tumor cell count (units of 10^6 cells) and `x2` the
//! effector-cell density. Inputs are the chemotherapy dose `u1` and the
//! immunotherapy dose `u2`, both normalized so that 1 is the full dose rate.
//!
//! ```text
//! x1' = mu_c x1 F(x1) - gamma x1 x2 - k_x1 x1 u1,      F(x1) = -ln(x1 / x_inf)
//! x2' = mu_I (x1 - beta x1^2) x2 - delta x2 + alpha + k_x2 x2 u2
//! ```

use nalgebra::{Complex, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound applied to both states during integration. The Gompertz term is
/// singular at `x1 = 0`.
pub const POSITIVITY_FLOOR: f64 = 1e-12;

/// Bisection tolerance on `x1` when refining equilibria.
pub const EQUILIBRIUM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Tumor growth coefficient.
    pub mu_c: f64,
    /// Tumor-stimulated proliferation rate of effector cells.
    pub mu_i: f64,
    /// Tumor/effector interaction rate.
    pub gamma: f64,
    /// Inverse threshold for tumor suppression.
    pub beta: f64,
    /// Natural death rate of effector cells (1/day).
    pub delta: f64,
    /// Influx rate of effector cells (1/day).
    pub alpha: f64,
    /// Carrying capacity of the tumor (10^6 cells).
    pub x_inf: f64,
    /// Maximum chemotherapy dose-rate coefficient.
    pub k_x1: f64,
    /// Maximum immunotherapy dose-rate coefficient.
    pub k_x2: f64,
}

impl ModelParams {
    pub const PRESET_NAME: &'static str = "stepanova-table1";

    /// Parameter set of the reformed Stepanova model used throughout the crate.
    pub fn stepanova_table1() -> Self {
        ModelParams {
            mu_c: 0.5599,
            mu_i: 0.00484,
            gamma: 1.0,
            beta: 0.00264,
            delta: 0.37451,
            alpha: 0.1181,
            x_inf: 780.0,
            k_x1: 1.0,
            k_x2: 1.0,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            Self::PRESET_NAME => Some(Self::stepanova_table1()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mu_c", self.mu_c),
            ("mu_i", self.mu_i),
            ("gamma", self.gamma),
            ("beta", self.beta),
            ("delta", self.delta),
            ("alpha", self.alpha),
            ("x_inf", self.x_inf),
            ("k_x1", self.k_x1),
            ("k_x2", self.k_x2),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and strictly positive, got {value}"
                )));
            }
        }
        Ok(())
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::stepanova_table1()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x1: f64,
    pub x2: f64,
}

impl State {
    pub const fn new(x1: f64, x2: f64) -> Self {
        State { x1, x2 }
    }

    pub fn is_positive(&self) -> bool {
        self.x1 > 0.0 && self.x2 > 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    fn floored(self) -> Self {
        State {
            x1: self.x1.max(POSITIVITY_FLOOR),
            x2: self.x2.max(POSITIVITY_FLOOR),
        }
    }

    fn axpy(self, h: f64, d: (f64, f64)) -> Self {
        State {
            x1: self.x1 + h * d.0,
            x2: self.x2 + h * d.1,
        }
    }
}

/// Gompertz growth factor `-ln(x1 / x_inf)`.
pub fn gompertz(x1: f64, params: &ModelParams) -> Result<f64> {
    if !(x1 > 0.0) {
        return Err(Error::Domain(format!(
            "Gompertz term requires x1 > 0, got {x1}"
        )));
    }
    Ok(-(x1 / params.x_inf).ln())
}

/// Right-hand side of the tumor equation.
pub fn tumor_rate(params: &ModelParams, s: State, u1: f64) -> Result<f64> {
    let f = gompertz(s.x1, params)?;
    Ok(params.mu_c * s.x1 * f - params.gamma * s.x1 * s.x2 - params.k_x1 * s.x1 * u1)
}

/// Right-hand side of the effector equation. Defined on the closed orthant.
pub fn effector_rate(params: &ModelParams, s: State, u2: f64) -> f64 {
    params.mu_i * (s.x1 - params.beta * s.x1 * s.x1) * s.x2 - params.delta * s.x2
        + params.alpha
        + params.k_x2 * s.x2 * u2
}

pub fn derivatives(params: &ModelParams, s: State, u1: f64, u2: f64) -> Result<(f64, f64)> {
    Ok((tumor_rate(params, s, u1)?, effector_rate(params, s, u2)))
}

/// Analytic Jacobian of the unforced model.
pub fn jacobian(params: &ModelParams, s: State) -> Result<Matrix2<f64>> {
    let f = gompertz(s.x1, params)?;
    let p = params;
    Ok(Matrix2::new(
        p.mu_c * (f - 1.0) - p.gamma * s.x2,
        -p.gamma * s.x1,
        p.mu_i * (1.0 - 2.0 * p.beta * s.x1) * s.x2,
        p.mu_i * (s.x1 - p.beta * s.x1 * s.x1) - p.delta,
    ))
}

/// Eigenvalues of a real 2x2 matrix in closed form, larger real part first.
pub fn eigenvalues_2x2(m: &Matrix2<f64>) -> [Complex<f64>; 2] {
    let half_trace = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let disc = half_trace * half_trace - det;
    if disc >= 0.0 {
        let r = disc.sqrt();
        [
            Complex::new(half_trace + r, 0.0),
            Complex::new(half_trace - r, 0.0),
        ]
    } else {
        let r = (-disc).sqrt();
        [Complex::new(half_trace, r), Complex::new(half_trace, -r)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquilibriumKind {
    StableNodeBenign,
    StableNodeMalignant,
    Saddle,
    /// Both eigenvalue real parts nonnegative; only occurs for modified parameters.
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub point: State,
    pub kind: EquilibriumKind,
    pub eigenvalues: [Complex<f64>; 2],
}

/// Effector density on the nullcline `x1' = 0` (with `x1 != 0`, no therapy).
pub fn tumor_nullcline_x2(params: &ModelParams, x1: f64) -> f64 {
    params.mu_c / params.gamma * (params.x_inf / x1).ln()
}

/// Locates the interior equilibria of the unforced model.
///
/// Substitutes the tumor nullcline into the effector equation, scans the
/// resulting scalar residual on a uniform grid over `x1_scan`, bisects every
/// sign change and classifies each root by its Jacobian eigenvalues. Roots
/// are returned in increasing `x1`. An empty list means the residual never
/// changes sign on the scan interval.
pub fn find_equilibria(
    params: &ModelParams,
    x1_scan: (f64, f64),
    grid: usize,
) -> Result<Vec<Equilibrium>> {
    params.validate()?;
    let (lo, hi) = x1_scan;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::Domain(format!(
            "scan interval must satisfy 0 < lo < hi < inf, got ({lo}, {hi})"
        )));
    }
    if grid < 100 {
        return Err(Error::Domain(format!("grid must be >= 100, got {grid}")));
    }

    let residual = |x1: f64| {
        let x2 = tumor_nullcline_x2(params, x1);
        effector_rate(params, State::new(x1, x2), 0.0)
    };

    let step = (hi - lo) / grid as f64;
    let mut roots = Vec::new();
    let mut a = lo;
    let mut fa = residual(a);
    for k in 1..=grid {
        let b = if k == grid { hi } else { lo + step * k as f64 };
        let fb = residual(b);
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            roots.push(bisect(&residual, a, b, fa));
        }
        a = b;
        fa = fb;
    }
    if fa == 0.0 {
        roots.push(hi);
    }

    let mut out = Vec::with_capacity(roots.len());
    for x1 in roots {
        let point = State::new(x1, tumor_nullcline_x2(params, x1));
        let eig = eigenvalues_2x2(&jacobian(params, point)?);
        out.push((point, eig));
    }

    let saddle_x1 = out
        .iter()
        .find(|(_, eig)| is_saddle(eig))
        .map(|(p, _)| p.x1);
    Ok(out
        .into_iter()
        .map(|(point, eigenvalues)| {
            let kind = classify(point.x1, &eigenvalues, saddle_x1, params.x_inf);
            Equilibrium {
                point,
                kind,
                eigenvalues,
            }
        })
        .collect())
}

/// Default scan used by [`find_equilibria`] callers: `(1, x_inf - 1)` with 2000 cells.
pub fn default_equilibria(params: &ModelParams) -> Result<Vec<Equilibrium>> {
    find_equilibria(params, (1.0, params.x_inf - 1.0), 2000)
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    while b - a > EQUILIBRIUM_TOL {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

fn is_saddle(eig: &[Complex<f64>; 2]) -> bool {
    (eig[0].re > 0.0 && eig[1].re < 0.0) || (eig[0].re < 0.0 && eig[1].re > 0.0)
}

fn classify(
    x1: f64,
    eig: &[Complex<f64>; 2],
    saddle_x1: Option<f64>,
    x_inf: f64,
) -> EquilibriumKind {
    if is_saddle(eig) {
        return EquilibriumKind::Saddle;
    }
    if eig[0].re < 0.0 && eig[1].re < 0.0 {
        let split = saddle_x1.unwrap_or(0.5 * x_inf);
        if x1 < split {
            EquilibriumKind::StableNodeBenign
        } else {
            EquilibriumKind::StableNodeMalignant
        }
    } else {
        EquilibriumKind::Unstable
    }
}

/// Open-loop integration result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RkTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    /// Input `(u1, u2)` returned by the policy at each sample; held over the following step.
    pub inputs: Vec<(f64, f64)>,
}

impl RkTrajectory {
    pub fn terminal(&self) -> State {
        *self.states.last().expect("trajectory has at least the initial state")
    }
}

/// One classic fourth-order Runge–Kutta step with inputs held constant.
///
/// Stage states and the result are floored at [`POSITIVITY_FLOOR`].
pub fn rk4_step(params: &ModelParams, s: State, u: (f64, f64), dt: f64) -> Result<State> {
    let f = |x: State| derivatives(params, x.floored(), u.0, u.1);
    let k1 = f(s)?;
    let k2 = f(s.axpy(0.5 * dt, k1))?;
    let k3 = f(s.axpy(0.5 * dt, k2))?;
    let k4 = f(s.axpy(dt, k3))?;
    let next = State {
        x1: s.x1 + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        x2: s.x2 + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    };
    for k in [k1, k2, k3, k4] {
        if !(k.0.is_finite() && k.1.is_finite()) {
            return Err(Error::StepRejected {
                time: f64::NAN,
                reason: format!("non-finite stage derivative {k:?}"),
            });
        }
    }
    if !next.is_finite() {
        return Err(Error::StepRejected {
            time: f64::NAN,
            reason: format!("non-finite state {next:?}"),
        });
    }
    Ok(next.floored())
}

/// Fixed-step RK4 integration of the model under a state-feedback policy.
///
/// The policy is sampled at the start of every step and held for its duration.
pub fn integrate_rk4<P>(
    params: &ModelParams,
    x0: State,
    mut policy: P,
    t_end: f64,
    dt: f64,
) -> Result<RkTrajectory>
where
    P: FnMut(f64, &State) -> (f64, f64),
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    if !(t_end >= dt) {
        return Err(Error::Domain(format!(
            "t_end ({t_end}) must be at least dt ({dt})"
        )));
    }
    if !x0.is_positive() {
        return Err(Error::Domain(format!(
            "initial state must be in the positive orthant, got {x0:?}"
        )));
    }
    let steps = (t_end / dt).round() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut inputs = Vec::with_capacity(steps + 1);

    let mut s = x0;
    for k in 0..steps {
        let t = k as f64 * dt;
        let u = policy(t, &s);
        times.push(t);
        states.push(s);
        inputs.push(u);
        s = rk4_step(params, s, u, dt).map_err(|e| match e {
            Error::StepRejected { reason, .. } => Error::StepRejected { time: t, reason },
            other => other,
        })?;
    }
    let t = steps as f64 * dt;
    inputs.push(policy(t, &s));
    times.push(t);
    states.push(s);
    Ok(RkTrajectory {
        times,
        states,
        inputs,
    })
}
