//! Exact Takagi–Sugeno representation of the transformed tumor–immune model.
//!
//! After the change of input `u2* = alpha + k_x2 x2 u2` the model reads
//! `X' = A(t1, t2) X + B(t3) U` with
//!
//! ```text
//! A = diag(t1, t2),  B = diag(t3, 1),  U = (u1, u2*)
//! t1 = -mu_c ln(x1 / x_inf) - gamma x2
//! t2 =  mu_I (x1 - beta x1^2) - delta
//! t3 = -k_x1 x1
//! ```
//!
//! Each premise is written as a convex combination of its extrema over a
//! bounded domain (sector nonlinearity), which gives eight vertex models whose
//! membership-weighted blend reproduces `A` and `B` exactly inside the domain.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{ModelParams, State};

/// Number of fuzzy rules (2 sectors for each of 3 premises).
pub const RULES: usize = 8;

/// Tolerance on `sum(h) = 1` accepted by [`blend`].
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Default sampling period (days) used for Euler discretization.
pub const DEFAULT_SAMPLING_PERIOD: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
}

impl Default for Domain {
    /// `x1 in [0.1, 1000]`, `x2 in [0, 5]`. The lower `x1` bound keeps the
    /// logarithmic premise finite.
    fn default() -> Self {
        Domain {
            x1_min: 0.1,
            x1_max: 1000.0,
            x2_min: 0.0,
            x2_max: 5.0,
        }
    }
}

impl Domain {
    /// Rejects empty or sign-violating boxes. Equal bounds are accepted here and
    /// surface later as a degenerate sector.
    pub fn validate(&self) -> Result<()> {
        let all = [self.x1_min, self.x1_max, self.x2_min, self.x2_max];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite domain bound in {self:?}")));
        }
        if !(self.x1_min > 0.0) {
            return Err(Error::Domain(format!(
                "x1_min must be > 0, got {}",
                self.x1_min
            )));
        }
        if self.x1_min > self.x1_max || self.x2_min < 0.0 || self.x2_min > self.x2_max {
            return Err(Error::Domain(format!("empty or invalid domain {self:?}")));
        }
        Ok(())
    }

    pub fn contains(&self, s: State) -> bool {
        (self.x1_min..=self.x1_max).contains(&s.x1) && (self.x2_min..=self.x2_max).contains(&s.x2)
    }

    fn corners(&self) -> [State; 4] {
        [
            State::new(self.x1_min, self.x2_min),
            State::new(self.x1_min, self.x2_max),
            State::new(self.x1_max, self.x2_min),
            State::new(self.x1_max, self.x2_max),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtremaMode {
    /// Extrema over the four domain corners.
    #[default]
    Endpoint,
    /// True extrema over the whole box.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub min: f64,
    pub max: f64,
}

impl Sector {
    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.min, self.max)
    }

    fn contains(&self, other: &Sector) -> bool {
        self.min <= other.min && other.max <= self.max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PremiseBounds {
    pub sectors: [Sector; 3],
    pub mode: ExtremaMode,
}

impl PremiseBounds {
    pub fn validate(&self) -> Result<()> {
        for (premise, s) in self.sectors.iter().enumerate() {
            if !(s.min.is_finite() && s.max.is_finite()) {
                return Err(Error::Domain(format!(
                    "non-finite sector for premise {premise}: {s:?}"
                )));
            }
            if !(s.max > s.min) {
                return Err(Error::DegenerateSector {
                    premise,
                    value: s.min,
                });
            }
        }
        Ok(())
    }

    /// True when every sector of `self` encloses the matching sector of `other`.
    pub fn encloses(&self, other: &PremiseBounds) -> bool {
        self.sectors
            .iter()
            .zip(&other.sectors)
            .all(|(a, b)| a.contains(b))
    }
}

/// Premise triple `(t1, t2, t3)`.
pub type Premises = [f64; 3];

pub fn premise_values(params: &ModelParams, s: State) -> Result<Premises> {
    if !(s.x1 > 0.0) {
        return Err(Error::Domain(format!(
            "premise evaluation requires x1 > 0, got {}",
            s.x1
        )));
    }
    let t1 = -params.mu_c * (s.x1 / params.x_inf).ln() - params.gamma * s.x2;
    let t2 = params.mu_i * (s.x1 - params.beta * s.x1 * s.x1) - params.delta;
    let t3 = -params.k_x1 * s.x1;
    Ok([t1, t2, t3])
}

/// Computes the sector of every premise over `domain`.
pub fn premise_bounds(
    params: &ModelParams,
    domain: &Domain,
    mode: ExtremaMode,
) -> Result<PremiseBounds> {
    domain.validate()?;
    let mut sectors = [Sector {
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
    }; 3];
    for corner in domain.corners() {
        let theta = premise_values(params, corner)?;
        for (s, v) in sectors.iter_mut().zip(theta) {
            s.min = s.min.min(v);
            s.max = s.max.max(v);
        }
    }
    if mode == ExtremaMode::Global {
        // t1 and t3 are monotone in both arguments, so only the concave t2 can
        // peak inside the box, at x1 = 1 / (2 beta).
        let peak = 0.5 / params.beta;
        if domain.x1_min < peak && peak < domain.x1_max {
            let t2 = premise_values(params, State::new(peak, domain.x2_min))?[1];
            sectors[1].max = sectors[1].max.max(t2);
        }
    }
    let bounds = PremiseBounds { sectors, mode };
    bounds.validate()?;
    Ok(bounds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Corner {
    Max,
    Min,
}

/// Sector corner of each premise for rules 1..8. Rule 1 sits at all maxima,
/// the first premise varies slowest.
pub const RULE_CORNERS: [[Corner; 3]; RULES] = {
    use Corner::{Max, Min};
    [
        [Max, Max, Max],
        [Max, Max, Min],
        [Max, Min, Max],
        [Max, Min, Min],
        [Min, Max, Max],
        [Min, Max, Min],
        [Min, Min, Max],
        [Min, Min, Min],
    ]
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub h: [f64; RULES],
    /// At least one premise fell outside its sector and was clamped.
    pub clamped: bool,
}

/// Normalized rule weights for a premise triple.
///
/// Premises outside their sectors are clamped first, so `h` always lies on
/// the simplex.
pub fn membership(theta: &Premises, bounds: &PremiseBounds) -> Result<Membership> {
    bounds.validate()?;
    let mut grade_max = [0.0; 3];
    let mut clamped = false;
    for (k, (&v, s)) in theta.iter().zip(&bounds.sectors).enumerate() {
        let c = s.clamp(v);
        clamped |= c != v;
        grade_max[k] = (c - s.min) / s.width();
    }
    let mut h = [0.0; RULES];
    for (hi, corner) in h.iter_mut().zip(RULE_CORNERS.iter()) {
        *hi = corner
            .iter()
            .zip(grade_max)
            .map(|(c, g)| match c {
                Corner::Max => g,
                Corner::Min => 1.0 - g,
            })
            .product();
    }
    Ok(Membership { h, clamped })
}

fn check_simplex(h: &[f64]) -> Result<()> {
    let sum: f64 = h.iter().sum();
    let min = h.iter().copied().fold(f64::INFINITY, f64::min);
    if (sum - 1.0).abs() > SIMPLEX_TOL || min < -SIMPLEX_TOL || !sum.is_finite() {
        return Err(Error::SimplexViolation { sum, min });
    }
    Ok(())
}

/// Convex combination `sum_i h_i M_i`.
pub fn blend(h: &[f64], mats: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    if h.len() != mats.len() || mats.is_empty() {
        return Err(Error::Dimension(format!(
            "{} weights for {} matrices",
            h.len(),
            mats.len()
        )));
    }
    check_simplex(h)?;
    let shape = mats[0].shape();
    let mut out = DMatrix::zeros(shape.0, shape.1);
    for (w, m) in h.iter().zip(mats) {
        if m.shape() != shape {
            return Err(Error::Dimension(format!(
                "vertex shape {:?} differs from {:?}",
                m.shape(),
                shape
            )));
        }
        out += m * *w;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexSystem {
    #[serde(with = "linalg::rows_list")]
    pub a: Vec<DMatrix<f64>>,
    #[serde(with = "linalg::rows_list")]
    pub b: Vec<DMatrix<f64>>,
    #[serde(with = "linalg::rows")]
    pub c: DMatrix<f64>,
    pub premise_bounds: PremiseBounds,
}

impl VertexSystem {
    pub fn rules(&self) -> usize {
        self.a.len()
    }

    pub fn blend(&self, h: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        Ok((blend(h, &self.a)?, blend(h, &self.b)?))
    }
}

/// Vertex models `A_i = diag(t1, t2)`, `B_i = diag(t3, 1)` at the sector corners.
pub fn build_vertices(bounds: &PremiseBounds) -> Result<VertexSystem> {
    bounds.validate()?;
    let pick = |k: usize, c: Corner| match c {
        Corner::Max => bounds.sectors[k].max,
        Corner::Min => bounds.sectors[k].min,
    };
    let mut a = Vec::with_capacity(RULES);
    let mut b = Vec::with_capacity(RULES);
    for corner in RULE_CORNERS {
        a.push(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            pick(0, corner[0]),
            pick(1, corner[1]),
        ])));
        b.push(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            pick(2, corner[2]),
            1.0,
        ])));
    }
    Ok(VertexSystem {
        a,
        b,
        c: DMatrix::identity(2, 2),
        premise_bounds: *bounds,
    })
}

/// Vertex system augmented with the integral of the tracking error.
///
/// State order is `(x1, x2, e_I1, e_I2)`. In continuous time
/// `Xbar' = Abar_i Xbar + Bbar_i U + Dbar Zr` with `Zr = (0, 0, z_r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedVertexSystem {
    #[serde(with = "linalg::rows_list")]
    pub a: Vec<DMatrix<f64>>,
    #[serde(with = "linalg::rows_list")]
    pub b: Vec<DMatrix<f64>>,
    #[serde(with = "linalg::rows")]
    pub d: DMatrix<f64>,
    #[serde(with = "linalg::rows")]
    pub c: DMatrix<f64>,
    pub premise_bounds: PremiseBounds,
    /// Sampling period in days when the system has been discretized.
    pub sampling_period: Option<f64>,
}

impl AugmentedVertexSystem {
    pub fn is_discrete(&self) -> bool {
        self.sampling_period.is_some()
    }

    pub fn rules(&self) -> usize {
        self.a.len()
    }

    pub fn states(&self) -> usize {
        self.a.first().map_or(0, DMatrix::nrows)
    }

    /// Number of physical (non-integrator) states.
    pub fn plant_states(&self) -> usize {
        self.c.nrows()
    }

    pub fn blend(&self, h: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        Ok((blend(h, &self.a)?, blend(h, &self.b)?))
    }
}

pub fn augment(system: &VertexSystem) -> Result<AugmentedVertexSystem> {
    let n = system.c.ncols();
    let p = system.c.nrows();
    let m = system.b.first().map_or(0, DMatrix::ncols);
    if system.a.len() != system.b.len() {
        return Err(Error::Dimension("A and B vertex counts differ".into()));
    }
    let na = n + p;
    let mut a = Vec::with_capacity(system.rules());
    let mut b = Vec::with_capacity(system.rules());
    for (ai, bi) in system.a.iter().zip(&system.b) {
        if ai.shape() != (n, n) || bi.shape() != (n, m) {
            return Err(Error::Dimension(format!(
                "vertex shapes {:?}/{:?} inconsistent with C {:?}",
                ai.shape(),
                bi.shape(),
                system.c.shape()
            )));
        }
        let mut abar = DMatrix::zeros(na, na);
        abar.view_mut((0, 0), (n, n)).copy_from(ai);
        abar.view_mut((n, 0), (p, n)).copy_from(&(-&system.c));
        let mut bbar = DMatrix::zeros(na, m);
        bbar.view_mut((0, 0), (n, m)).copy_from(bi);
        a.push(abar);
        b.push(bbar);
    }
    let mut d = DMatrix::zeros(na, na);
    d.view_mut((n, n), (p, p)).fill_with_identity();
    let mut c = DMatrix::zeros(p, na);
    c.view_mut((0, 0), (p, n)).copy_from(&system.c);
    Ok(AugmentedVertexSystem {
        a,
        b,
        d,
        c,
        premise_bounds: system.premise_bounds,
        sampling_period: None,
    })
}

/// Forward-Euler discretization: `Ad = I + T Abar`, `Bd = T Bbar`, `Dd = T Dbar`.
pub fn discretize_euler(
    system: &AugmentedVertexSystem,
    period: f64,
) -> Result<AugmentedVertexSystem> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::Domain(format!(
            "sampling period must be positive, got {period}"
        )));
    }
    if system.is_discrete() {
        return Err(Error::Domain("system is already discrete".into()));
    }
    let n = system.states();
    let eye = DMatrix::<f64>::identity(n, n);
    Ok(AugmentedVertexSystem {
        a: system.a.iter().map(|a| &eye + a * period).collect(),
        b: system.b.iter().map(|b| b * period).collect(),
        d: &system.d * period,
        c: system.c.clone(),
        premise_bounds: system.premise_bounds,
        sampling_period: Some(period),
    })
}

/// Full pipeline: bounds, vertices, augmentation and Euler discretization.
pub fn discrete_design_system(
    params: &ModelParams,
    domain: &Domain,
    mode: ExtremaMode,
    period: f64,
) -> Result<(VertexSystem, AugmentedVertexSystem, AugmentedVertexSystem)> {
    let bounds = premise_bounds(params, domain, mode)?;
    let vertices = build_vertices(&bounds)?;
    let continuous = augment(&vertices)?;
    let discrete = discretize_euler(&continuous, period)?;
    Ok((vertices, continuous, discrete))
}
