//! Dense linear programs and a two-phase simplex solver.
//!
//! Programs are small (tens of variables, hundreds of rows), so everything is
//! kept dense. Strict elementwise inequalities are expressed with an explicit
//! margin through [`strictify`].

mod simplex;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use simplex::solve;

/// Replay tolerance used to accept a solution against the original rows.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sense {
    Minimize,
    Maximize,
    /// Any feasible point; the objective is ignored.
    Feasibility,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }

    /// Amount by which `lhs rel rhs` is violated (0 when satisfied).
    pub fn violation(self, lhs: f64, rhs: f64) -> f64 {
        match self {
            Relation::Le => (lhs - rhs).max(0.0),
            Relation::Ge => (rhs - lhs).max(0.0),
            Relation::Eq => (lhs - rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrictRelation {
    /// `a x << b`
    Lt,
    /// `a x >> b`
    Gt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub sense: Sense,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Constraint {
            coeffs,
            relation,
            rhs,
        }
    }

    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, v)| a * v).sum()
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        self.relation.violation(self.lhs(x), self.rhs)
    }
}

/// Turns a strict inequality into a non-strict one with margin `eps`:
/// `a x << b` becomes `a x <= b - eps`, `a x >> b` becomes `a x >= b + eps`.
pub fn strictify(coeffs: Vec<f64>, relation: StrictRelation, rhs: f64, eps: f64) -> Result<Constraint> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::MalformedLp(format!("strict margin must be positive, got {eps}")));
    }
    Ok(match relation {
        StrictRelation::Lt => Constraint::new(coeffs, Relation::Le, rhs - eps),
        StrictRelation::Gt => Constraint::new(coeffs, Relation::Ge, rhs + eps),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub objective: Objective,
    pub constraints: Vec<Constraint>,
    /// Per-variable `(lower, upper)`; infinities allowed.
    pub var_bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// Feasibility program with nonnegative variables.
    pub fn new(n_vars: usize) -> Self {
        LinearProgram {
            n_vars,
            objective: Objective {
                sense: Sense::Feasibility,
                coeffs: vec![0.0; n_vars],
            },
            constraints: Vec::new(),
            var_bounds: vec![(0.0, f64::INFINITY); n_vars],
        }
    }

    pub fn with_objective(mut self, sense: Sense, coeffs: Vec<f64>) -> Self {
        self.objective = Objective { sense, coeffs };
        self
    }

    pub fn push(&mut self, c: Constraint) -> usize {
        self.constraints.push(c);
        self.constraints.len() - 1
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> usize {
        self.push(Constraint::new(coeffs, relation, rhs))
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.var_bounds[var] = (lower, upper);
    }

    pub fn free(&mut self, var: usize) {
        self.set_bounds(var, f64::NEG_INFINITY, f64::INFINITY);
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars;
        if self.var_bounds.len() != n {
            return Err(Error::MalformedLp(format!(
                "{} variable bounds for {n} variables",
                self.var_bounds.len()
            )));
        }
        if self.objective.sense != Sense::Feasibility {
            if self.objective.coeffs.len() != n {
                return Err(Error::MalformedLp(format!(
                    "objective has {} coefficients for {n} variables",
                    self.objective.coeffs.len()
                )));
            }
            if self.objective.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::MalformedLp("non-finite objective coefficient".into()));
            }
        }
        for (k, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::MalformedLp(format!(
                    "constraint {k} has {} coefficients for {n} variables",
                    c.coeffs.len()
                )));
            }
            if c.coeffs.iter().any(|a| !a.is_finite()) || !c.rhs.is_finite() {
                return Err(Error::MalformedLp(format!("constraint {k} has non-finite data")));
            }
        }
        for (j, &(lo, hi)) in self.var_bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY || lo > hi {
                return Err(Error::MalformedLp(format!("variable {j} has bounds ({lo}, {hi})")));
            }
        }
        Ok(())
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| c.violation(x));
        let bounds = self
            .var_bounds
            .iter()
            .zip(x)
            .map(|(&(lo, hi), &v)| (lo - v).max(v - hi).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }

    pub fn objective_at(&self, x: &[f64]) -> Option<f64> {
        match self.objective.sense {
            Sense::Feasibility => None,
            _ => Some(self.objective.coeffs.iter().zip(x).map(|(c, v)| c * v).sum()),
        }
    }
}

fn write_terms(f: &mut fmt::Formatter<'_>, coeffs: &[f64]) -> fmt::Result {
    let mut any = false;
    for (j, &a) in coeffs.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        if any {
            write!(f, " {} {:?} x{j}", if a < 0.0 { '-' } else { '+' }, a.abs())?;
        } else {
            write!(f, "{a:?} x{j}")?;
        }
        any = true;
    }
    if !any {
        write!(f, "0")?;
    }
    Ok(())
}

/// One objective line, one line per constraint, one line per bounded variable.
impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.objective.sense {
            Sense::Feasibility => writeln!(f, "feasibility")?,
            sense => {
                write!(
                    f,
                    "{} ",
                    if sense == Sense::Minimize { "minimize" } else { "maximize" }
                )?;
                write_terms(f, &self.objective.coeffs)?;
                writeln!(f)?;
            }
        }
        writeln!(f, "subject to")?;
        for (k, c) in self.constraints.iter().enumerate() {
            write!(f, "c{k}: ")?;
            write_terms(f, &c.coeffs)?;
            writeln!(f, " {} {:?}", c.relation.symbol(), c.rhs)?;
        }
        writeln!(f, "bounds")?;
        for (j, &(lo, hi)) in self.var_bounds.iter().enumerate() {
            writeln!(f, "{lo:?} <= x{j} <= {hi:?}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Where a row of the solved standard form came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowOrigin {
    Constraint(usize),
    LowerBound(usize),
    UpperBound(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowResidual {
    pub origin: RowOrigin,
    pub residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LpDiagnostics {
    pub pivots: usize,
    /// Bland's rule took over after a run of degenerate pivots.
    pub bland: bool,
    pub rows_in: usize,
    pub rows_after_presolve: usize,
    pub singleton_rows: usize,
    pub duplicate_rows: usize,
    /// Phase-1 objective at termination (sum of artificial values).
    pub phase1_infeasibility: f64,
    /// Rows still carrying artificial value when infeasible, largest first.
    pub tight_rows: Vec<RowResidual>,
    /// Replayed violation of the returned point against the original program.
    pub max_violation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpOutcome {
    pub status: LpStatus,
    pub solution: Option<Vec<f64>>,
    pub objective_value: Option<f64>,
    pub diagnostics: LpDiagnostics,
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}
