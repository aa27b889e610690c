//! Positivity checks, linear co-positive Lyapunov analysis and LP-based
//! synthesis of PDC state-feedback gains for discrete positive T–S systems.
//!
//! Synthesis searches for a diagonal `Q = diag(q) >> 0` and matrices `M_j` with
//!
//! ```text
//! [(A_i - I) Q + B_i M_j] 1 << 0          for every rule pair (i, j)
//! (A_i Q + B_i M_j)_{ht} >= 0             for the configured rows h, all t
//! M_j <= 0                                (optional)
//! ```
//!
//! and returns `K_j = M_j Q^-1`. With `p = Q 1` the closed-loop vertices
//! `A_i + B_i K_j` then satisfy `(A_i + B_i K_j - I) p << 0`.
//!
//! The conditions are sufficient. They are also stated as necessary in the
//! literature, but the sign restriction on `M_j` is not implied by the
//! necessity argument, so it is off by default.

use log::{debug, info};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::AugmentedVertexSystem;
use crate::linalg;
use crate::lp::{self, LinearProgram, LpDiagnostics, LpStatus, Relation, RowOrigin};
pub use crate::spectral::spectral_radius;

/// Tolerance for the replayed row-nonnegativity test.
pub const POSITIVITY_TOL: f64 = 1e-9;
/// Tolerance for `K_j Q = M_j`.
pub const GAIN_TOL: f64 = 1e-9;

pub fn is_nonnegative(m: &DMatrix<f64>) -> bool {
    m.iter().all(|&v| v >= 0.0)
}

/// Off-diagonal entries nonnegative.
pub fn is_metzler(m: &DMatrix<f64>) -> bool {
    m.is_square()
        && (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] >= 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeDomain {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub time_domain: TimeDomain,
    pub a: Vec<bool>,
    pub b: Vec<bool>,
}

impl PositivityReport {
    pub fn all_positive(&self) -> bool {
        self.a.iter().chain(&self.b).all(|&ok| ok)
    }
}

/// Discrete time: `A_i`, `B_i` elementwise nonnegative. Continuous time:
/// `A_i` Metzler, `B_i` nonnegative.
pub fn check_positivity(
    a: &[DMatrix<f64>],
    b: &[DMatrix<f64>],
    time_domain: TimeDomain,
) -> PositivityReport {
    let test_a = match time_domain {
        TimeDomain::Discrete => is_nonnegative,
        TimeDomain::Continuous => is_metzler,
    };
    PositivityReport {
        time_domain,
        a: a.iter().map(test_a).collect(),
        b: b.iter().map(is_nonnegative).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LcplfOptions {
    pub eps: f64,
    pub q_max: f64,
    /// Test the dual system (transposed vertices) instead of the system itself.
    pub dual: bool,
}

impl Default for LcplfOptions {
    fn default() -> Self {
        LcplfOptions {
            eps: 1e-6,
            q_max: 1e6,
            dual: false,
        }
    }
}

/// Linear Lyapunov vector `p` with `V(x) = p' x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub p: Vec<f64>,
    /// Per vertex, the largest entry of the decrement vector; all negative.
    pub margins: Vec<f64>,
    pub dual: bool,
}

/// Decrement vector `(G - I) p`.
pub fn decrement(g: &DMatrix<f64>, p: &[f64]) -> Vec<f64> {
    (0..g.nrows())
        .map(|h| (0..g.ncols()).map(|t| g[(h, t)] * p[t]).sum::<f64>() - p[h])
        .collect()
}

fn max_entry(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Searches for a common linear co-positive Lyapunov function.
///
/// For `x+ = G_i x` on the positive orthant, `V = p' x` decreases along every
/// vertex iff `(G_i' - I) p << 0`. With `dual` the vertices are transposed,
/// so the LP enforces `(A_i - I) p << 0`. Returns `None` when no such `p` exists.
pub fn lcplf_stability(
    a_list: &[DMatrix<f64>],
    opts: &LcplfOptions,
) -> Result<Option<StabilityCertificate>> {
    let n = match a_list.first() {
        Some(a) => a.nrows(),
        None => return Err(Error::Dimension("empty vertex list".into())),
    };
    if a_list.iter().any(|a| a.shape() != (n, n)) {
        return Err(Error::Dimension("vertex matrices must be square and equal-sized".into()));
    }
    // Rows of the constraint matrix are rows of (G' - I) with G = A (primal)
    // or G = A' (dual).
    let tested: Vec<DMatrix<f64>> = a_list
        .iter()
        .map(|a| if opts.dual { a.clone() } else { a.transpose() })
        .collect();
    let mut prog = LinearProgram::new(n);
    for t in 0..n {
        prog.set_bounds(t, opts.eps, opts.q_max);
    }
    for g in &tested {
        for h in 0..n {
            let mut row: Vec<f64> = g.row(h).iter().copied().collect();
            row[h] -= 1.0;
            prog.push(lp::strictify(row, lp::StrictRelation::Lt, 0.0, opts.eps)?);
        }
    }
    let out = lp::solve(&prog)?;
    if out.status != LpStatus::Optimal {
        return Ok(None);
    }
    let p = out.solution.expect("optimal outcome carries a solution");
    let margins = tested.iter().map(|g| max_entry(&decrement(g, &p))).collect();
    Ok(Some(StabilityCertificate {
        p,
        margins,
        dual: opts.dual,
    }))
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowSelection {
    /// Physical (non-integrator) state rows.
    #[default]
    Plant,
    All,
    Rows(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthesisOptions {
    /// Margin used for every strict inequality.
    pub eps: f64,
    /// Upper bound on the entries of `Q`.
    pub q_max: f64,
    /// Require `M_j <= 0` elementwise.
    pub enforce_nonpositive_m: bool,
    /// Rows of `A_i Q + B_i M_j` required to be nonnegative.
    pub positivity_rows: RowSelection,
    /// Extra conditions for integrator states (see [`build_synthesis_lp`]).
    pub integral_action: bool,
    /// Lower bound `w` on `q_e / q_h` for each integrator `e` of output `h`;
    /// the sampling period is used when `w` is smaller.
    pub integrator_weight: f64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            eps: 1e-6,
            q_max: 1e6,
            enforce_nonpositive_m: false,
            positivity_rows: RowSelection::Plant,
            integral_action: true,
            integrator_weight: 1.0,
        }
    }
}

impl SynthesisOptions {
    /// Literal conditions only: `M_j <= 0` on, no integral-action conditions.
    pub fn strict_paper() -> Self {
        SynthesisOptions {
            enforce_nonpositive_m: true,
            integral_action: false,
            ..SynthesisOptions::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParams(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.integrator_weight >= 0.0 && self.integrator_weight.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "integrator_weight must be finite and nonnegative, got {}",
                self.integrator_weight
            )));
        }
        if !(self.q_max > self.eps && self.q_max.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "q_max must exceed eps, got {}",
                self.q_max
            )));
        }
        Ok(())
    }
}

/// Discrete vertex set `(A_i, B_i)` to design for.
///
/// States `0..plant_states` are physical; the next `integrators` states
/// integrate the tracking error of outputs `0..integrators`, discretized with
/// `sampling_period`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignProblem {
    pub a: Vec<DMatrix<f64>>,
    pub b: Vec<DMatrix<f64>>,
    pub plant_states: usize,
    pub integrators: usize,
    pub sampling_period: Option<f64>,
}

impl DesignProblem {
    /// Plain vertex set without integrators.
    pub fn new(a: Vec<DMatrix<f64>>, b: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = a.first().map_or(0, DMatrix::nrows);
        let p = DesignProblem {
            a,
            b,
            plant_states: n,
            integrators: 0,
            sampling_period: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn from_augmented(system: &AugmentedVertexSystem) -> Result<Self> {
        if !system.is_discrete() {
            return Err(Error::Domain("synthesis needs a discretized system".into()));
        }
        let integrators = system.plant_states();
        let p = DesignProblem {
            a: system.a.clone(),
            b: system.b.clone(),
            plant_states: system.states() - integrators,
            integrators,
            sampling_period: system.sampling_period,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn states(&self) -> usize {
        self.a.first().map_or(0, DMatrix::nrows)
    }

    pub fn inputs(&self) -> usize {
        self.b.first().map_or(0, DMatrix::ncols)
    }

    pub fn rules(&self) -> usize {
        self.a.len()
    }

    fn validate(&self) -> Result<()> {
        let (n, m) = (self.states(), self.inputs());
        if self.a.is_empty() || self.a.len() != self.b.len() {
            return Err(Error::Dimension(format!(
                "{} A vertices and {} B vertices",
                self.a.len(),
                self.b.len()
            )));
        }
        if n == 0 || m == 0 {
            return Err(Error::Dimension("empty state or input dimension".into()));
        }
        if self.a.iter().any(|a| a.shape() != (n, n)) || self.b.iter().any(|b| b.shape() != (n, m)) {
            return Err(Error::Dimension("vertex matrices have inconsistent shapes".into()));
        }
        if self.plant_states + self.integrators != n {
            return Err(Error::Dimension(format!(
                "{} plant states + {} integrators != {n}",
                self.plant_states, self.integrators
            )));
        }
        Ok(())
    }

    pub fn rows(&self, sel: &RowSelection) -> Result<Vec<usize>> {
        let n = self.states();
        match sel {
            RowSelection::Plant => Ok((0..self.plant_states).collect()),
            RowSelection::All => Ok((0..n).collect()),
            RowSelection::Rows(rows) => {
                if let Some(bad) = rows.iter().find(|&&r| r >= n) {
                    return Err(Error::Dimension(format!("positivity row {bad} out of 0..{n}")));
                }
                let mut rows = rows.clone();
                rows.sort_unstable();
                rows.dedup();
                Ok(rows)
            }
        }
    }

    /// Entries `(h, plant_states + h)` linking output `h` to its integrator.
    fn coupling_entries(&self) -> Vec<(usize, usize)> {
        (0..self.integrators.min(self.plant_states))
            .map(|h| (h, self.plant_states + h))
            .collect()
    }
}

/// Meaning of one row of the synthesis LP, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ConstraintTag {
    Decrease { i: usize, j: usize, row: usize },
    Positivity { i: usize, j: usize, row: usize, col: usize },
    Coupling { i: usize, j: usize, row: usize, col: usize },
    IntegratorWeight { output: usize, integrator: usize },
}

impl std::fmt::Display for ConstraintTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // Rule indices are shown 1-based.
        match *self {
            ConstraintTag::Decrease { i, j, row } => {
                write!(f, "decrease (i={}, j={}) row {row}", i + 1, j + 1)
            }
            ConstraintTag::Positivity { i, j, row, col } => {
                write!(f, "positivity (i={}, j={}) entry ({row},{col})", i + 1, j + 1)
            }
            ConstraintTag::Coupling { i, j, row, col } => {
                write!(f, "integral coupling (i={}, j={}) entry ({row},{col})", i + 1, j + 1)
            }
            ConstraintTag::IntegratorWeight { output, integrator } => {
                write!(f, "integrator weight q{integrator} >= w q{output}")
            }
        }
    }
}

/// Variable layout: `q_0..q_{n-1}` then `M_j[z][t]` row-major per rule.
#[derive(Debug, Clone, Copy)]
struct Layout {
    n: usize,
    m: usize,
}

impl Layout {
    fn q(&self, t: usize) -> usize {
        t
    }

    fn mvar(&self, j: usize, z: usize, t: usize) -> usize {
        self.n + j * self.m * self.n + z * self.n + t
    }

    fn len(&self, r: usize) -> usize {
        self.n + r * self.m * self.n
    }

    fn describe(&self, var: usize) -> String {
        if var < self.n {
            format!("q{var}")
        } else {
            let k = var - self.n;
            let j = k / (self.m * self.n);
            let z = (k % (self.m * self.n)) / self.n;
            let t = k % self.n;
            format!("M{}[{z},{t}]", j + 1)
        }
    }
}

/// Coefficients of entry `(h, t)` of `A Q + B M_j` (plus `shift` on the `q_t`
/// coefficient), written into `row`.
fn entry_coeffs(row: &mut [f64], lay: Layout, a: &DMatrix<f64>, b: &DMatrix<f64>, j: usize, h: usize, t: usize, shift: f64) {
    row[lay.q(t)] += a[(h, t)] + shift;
    for z in 0..lay.m {
        row[lay.mvar(j, z, t)] += b[(h, z)];
    }
}

/// Assembles the synthesis LP; `tags[k]` describes constraint `k`.
///
/// With `integral_action`, two families are added for every output `h` that
/// has an integrator state `e = plant_states + h`:
///
/// * `(A_i Q + B_i M_j)_{h,e} >= eps`: the integrator feeds back into its
///   output row with positive weight;
/// * `q_e >= max(w, T) q_h` with `w = integrator_weight`: the integrator's
///   Lyapunov weight is at least the sampling period times the output's.
///
/// The augmented closed loop cannot be nonnegative (its integrator rows carry
/// `-T`), so the decrease condition alone does not imply Schur stability. For
/// an output/integrator block `[[a, b], [-T, 1]]` with `a >= 0`, `b > 0`, the
/// decrease of row `h` together with `q_e >= T q_h` gives `a + T b < 1`, which
/// with the other two inequalities is exactly Jury's test. Since the decrease
/// bounds `b` by `(1 - a) q_h / q_e`, a larger `w` also caps the integral gain,
/// which keeps the loop well damped when the controller runs slower than `T`.
pub fn build_synthesis_lp(
    problem: &DesignProblem,
    opts: &SynthesisOptions,
) -> Result<(LinearProgram, Vec<ConstraintTag>)> {
    opts.validate()?;
    let (n, m, r) = (problem.states(), problem.inputs(), problem.rules());
    let lay = Layout { n, m };
    let rows = problem.rows(&opts.positivity_rows)?;
    let coupling = if opts.integral_action {
        problem.coupling_entries()
    } else {
        Vec::new()
    };
    let nv = lay.len(r);
    let mut prog = LinearProgram::new(nv);
    for t in 0..n {
        prog.set_bounds(lay.q(t), opts.eps, opts.q_max);
    }
    for v in n..nv {
        let hi = if opts.enforce_nonpositive_m { 0.0 } else { f64::INFINITY };
        prog.set_bounds(v, f64::NEG_INFINITY, hi);
    }

    let pairs: Vec<(usize, usize)> = (0..r).flat_map(|i| (0..r).map(move |j| (i, j))).collect();
    let blocks: Vec<Vec<(lp::Constraint, ConstraintTag)>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (a, b) = (&problem.a[i], &problem.b[i]);
            let mut out = Vec::new();
            for h in 0..n {
                let mut row = vec![0.0; nv];
                for t in 0..n {
                    entry_coeffs(&mut row, lay, a, b, j, h, t, if t == h { -1.0 } else { 0.0 });
                }
                out.push((
                    lp::Constraint::new(row, Relation::Le, -opts.eps),
                    ConstraintTag::Decrease { i, j, row: h },
                ));
            }
            for &h in &rows {
                for t in 0..n {
                    let mut row = vec![0.0; nv];
                    entry_coeffs(&mut row, lay, a, b, j, h, t, 0.0);
                    out.push((
                        lp::Constraint::new(row, Relation::Ge, 0.0),
                        ConstraintTag::Positivity { i, j, row: h, col: t },
                    ));
                }
            }
            for &(h, t) in &coupling {
                let mut row = vec![0.0; nv];
                entry_coeffs(&mut row, lay, a, b, j, h, t, 0.0);
                out.push((
                    lp::Constraint::new(row, Relation::Ge, opts.eps),
                    ConstraintTag::Coupling { i, j, row: h, col: t },
                ));
            }
            out
        })
        .collect();
    let mut tags = Vec::new();
    for (c, tag) in blocks.into_iter().flatten() {
        prog.push(c);
        tags.push(tag);
    }
    if let (true, Some(period)) = (opts.integral_action, problem.sampling_period) {
        for (h, e) in problem.coupling_entries() {
            let mut row = vec![0.0; nv];
            row[lay.q(e)] = 1.0;
            row[lay.q(h)] = -opts.integrator_weight.max(period);
            prog.add(row, Relation::Ge, 0.0);
            tags.push(ConstraintTag::IntegratorWeight { output: h, integrator: e });
        }
    }
    Ok((prog, tags))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightConstraint {
    pub constraint: String,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisFailure {
    pub status: LpStatus,
    pub phase1_infeasibility: f64,
    /// Constraints carrying the largest phase-1 residuals.
    pub tight: Vec<TightConstraint>,
    pub lp: LpDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    /// Diagonal of `Q`.
    pub q: Vec<f64>,
    #[serde(with = "linalg::rows_list")]
    pub m: Vec<DMatrix<f64>>,
    #[serde(with = "linalg::rows_list")]
    pub k: Vec<DMatrix<f64>>,
    pub certificate: StabilityCertificate,
    pub report: ClosedLoopReport,
    /// Largest `|K_j Q - M_j|` entry.
    pub gain_residual: f64,
    pub options: SynthesisOptions,
    pub lp: LpDiagnostics,
}

impl SynthesisResult {
    pub fn passed(&self) -> bool {
        self.report.passed() && self.gain_residual <= GAIN_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "outcome")]
pub enum SynthesisOutcome {
    Feasible(Box<SynthesisResult>),
    Infeasible(SynthesisFailure),
}

/// Solves the synthesis LP and verifies the resulting closed loop.
pub fn synthesize_pdc(problem: &DesignProblem, opts: &SynthesisOptions) -> Result<SynthesisOutcome> {
    let (prog, tags) = build_synthesis_lp(problem, opts)?;
    let (n, m, r) = (problem.states(), problem.inputs(), problem.rules());
    let lay = Layout { n, m };
    info!(
        "synthesis LP: {} variables, {} constraints",
        prog.n_vars,
        prog.constraints.len()
    );
    let out = lp::solve(&prog)?;
    debug!("synthesis LP diagnostics: {:?}", out.diagnostics);
    if out.status != LpStatus::Optimal {
        let tight = out
            .diagnostics
            .tight_rows
            .iter()
            .map(|t| TightConstraint {
                constraint: match t.origin {
                    RowOrigin::Constraint(k) => tags[k].to_string(),
                    RowOrigin::LowerBound(v) => format!("lower bound of {}", lay.describe(v)),
                    RowOrigin::UpperBound(v) => format!("upper bound of {}", lay.describe(v)),
                },
                residual: t.residual,
            })
            .collect();
        return Ok(SynthesisOutcome::Infeasible(SynthesisFailure {
            status: out.status,
            phase1_infeasibility: out.diagnostics.phase1_infeasibility,
            tight,
            lp: out.diagnostics,
        }));
    }
    let x = out.solution.as_deref().expect("optimal outcome carries a solution");
    let q: Vec<f64> = (0..n).map(|t| x[lay.q(t)]).collect();
    let mats: Vec<DMatrix<f64>> = (0..r)
        .map(|j| DMatrix::from_fn(m, n, |z, t| x[lay.mvar(j, z, t)]))
        .collect();
    let k: Vec<DMatrix<f64>> = mats
        .iter()
        .map(|mj| DMatrix::from_fn(m, n, |z, t| mj[(z, t)] / q[t]))
        .collect();
    let gain_residual = k
        .iter()
        .zip(&mats)
        .map(|(kj, mj)| {
            DMatrix::from_fn(m, n, |z, t| kj[(z, t)] * q[t] - mj[(z, t)])
                .abs()
                .max()
        })
        .fold(0.0, f64::max);
    let verify = VerifyOptions {
        rows: problem.rows(&opts.positivity_rows)?,
        eps: opts.eps,
        q_max: opts.q_max,
    };
    let report = verify_closed_loop(problem, &k, Some(&q), &verify)?;
    let certificate = StabilityCertificate {
        margins: report.pairs.iter().map(|pr| pr.decrement_margin.unwrap_or(f64::NAN)).collect(),
        p: q.clone(),
        dual: true,
    };
    Ok(SynthesisOutcome::Feasible(Box::new(SynthesisResult {
        q,
        m: mats,
        k,
        certificate,
        report,
        gain_residual,
        options: opts.clone(),
        lp: out.diagnostics,
    })))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Rows required to be nonnegative.
    pub rows: Vec<usize>,
    /// Margin for the independent Lyapunov search.
    pub eps: f64,
    pub q_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub i: usize,
    pub j: usize,
    #[serde(with = "linalg::rows")]
    pub matrix: DMatrix<f64>,
    pub rows_nonnegative: bool,
    /// Smallest entry within the checked rows.
    pub min_entry: f64,
    pub spectral_radius: f64,
    /// Largest entry of `(A_i + B_i K_j - I) p` for the supplied `p`.
    pub decrement_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopReport {
    pub rows_checked: Vec<usize>,
    pub pairs: Vec<PairReport>,
    pub worst_spectral_radius: f64,
    pub all_schur: bool,
    pub all_rows_nonnegative: bool,
    /// Largest decrement entry over all pairs for the supplied `p`.
    pub worst_decrement: Option<f64>,
    /// Lyapunov vector found afresh for the closed-loop vertex set.
    pub independent_certificate: Option<StabilityCertificate>,
}

impl ClosedLoopReport {
    pub fn decrement_ok(&self) -> bool {
        self.worst_decrement.is_none_or(|d| d < 0.0)
    }

    pub fn passed(&self) -> bool {
        self.all_schur
            && self.all_rows_nonnegative
            && self.decrement_ok()
            && self.independent_certificate.is_some()
    }
}

/// Recomputes every closed-loop vertex `A_i + B_i K_j` and checks row
/// nonnegativity, spectral radius and (if `p` is given) the Lyapunov decrement.
/// A new Lyapunov vector is also searched for from scratch.
pub fn verify_closed_loop(
    problem: &DesignProblem,
    k: &[DMatrix<f64>],
    p: Option<&[f64]>,
    opts: &VerifyOptions,
) -> Result<ClosedLoopReport> {
    let (n, m, r) = (problem.states(), problem.inputs(), problem.rules());
    if k.len() != r || k.iter().any(|kj| kj.shape() != (m, n)) {
        return Err(Error::Dimension(format!(
            "expected {r} gains of shape {m}x{n}"
        )));
    }
    if p.is_some_and(|p| p.len() != n) {
        return Err(Error::Dimension(format!("Lyapunov vector must have length {n}")));
    }
    if opts.rows.iter().any(|&h| h >= n) {
        return Err(Error::Dimension("positivity row out of range".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..r).flat_map(|i| (0..r).map(move |j| (i, j))).collect();
    let reports: Vec<PairReport> = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<PairReport> {
            let g = &problem.a[i] + &problem.b[i] * &k[j];
            let min_entry = opts
                .rows
                .iter()
                .flat_map(|&h| g.row(h).iter().copied().collect::<Vec<_>>())
                .fold(f64::INFINITY, f64::min);
            Ok(PairReport {
                i,
                j,
                rows_nonnegative: min_entry >= -POSITIVITY_TOL,
                min_entry,
                spectral_radius: spectral_radius(&g)?,
                decrement_margin: p.map(|p| max_entry(&decrement(&g, p))),
                matrix: g,
            })
        })
        .collect::<Result<_>>()?;
    let closed: Vec<DMatrix<f64>> = reports.iter().map(|pr| pr.matrix.clone()).collect();
    let independent_certificate = lcplf_stability(
        &closed,
        &LcplfOptions {
            eps: opts.eps,
            q_max: opts.q_max,
            dual: true,
        },
    )?;
    let worst_spectral_radius = reports.iter().map(|pr| pr.spectral_radius).fold(0.0, f64::max);
    Ok(ClosedLoopReport {
        rows_checked: opts.rows.clone(),
        all_schur: worst_spectral_radius < 1.0,
        all_rows_nonnegative: reports.iter().all(|pr| pr.rows_nonnegative),
        worst_decrement: p.map(|_| {
            reports
                .iter()
                .filter_map(|pr| pr.decrement_margin)
                .fold(f64::NEG_INFINITY, f64::max)
        }),
        worst_spectral_radius,
        pairs: reports,
        independent_certificate,
    })
}
