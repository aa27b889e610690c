//! Presolve, standard-form conversion and the two-phase tableau simplex.

use std::collections::HashMap;

use log::debug;
use nalgebra::{DMatrix, DVector};

use super::{
    LinearProgram, LpDiagnostics, LpOutcome, LpStatus, Relation, RowOrigin, RowResidual, Sense,
};
use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const OPTIMALITY_TOL: f64 = 1e-10;
const PHASE1_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;
/// Consecutive degenerate pivots after which Bland's rule is used for good.
const DEGENERATE_STREAK: usize = 50;
const MAX_PIVOTS: usize = 200_000;
const TIGHT_ROWS_REPORTED: usize = 10;

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<f64>,
    relation: Relation,
    rhs: f64,
    origin: RowOrigin,
    /// Factor that maps a residual of this row back to original units.
    scale: f64,
}

#[derive(Debug, Clone, Copy)]
struct Bound {
    value: f64,
    origin: RowOrigin,
}

struct Presolved {
    rows: Vec<Row>,
    lower: Vec<Bound>,
    upper: Vec<Bound>,
}

fn bits_key(coeffs: &[f64]) -> Vec<u64> {
    coeffs
        .iter()
        .map(|&a| if a == 0.0 { 0 } else { a.to_bits() })
        .collect()
}

/// Row scaling, empty rows, singleton rows to bounds, exact duplicates.
fn presolve(lp: &LinearProgram, diag: &mut LpDiagnostics) -> std::result::Result<Presolved, Vec<RowResidual>> {
    let n = lp.n_vars;
    let mut lower: Vec<Bound> = (0..n)
        .map(|j| Bound {
            value: lp.var_bounds[j].0,
            origin: RowOrigin::LowerBound(j),
        })
        .collect();
    let mut upper: Vec<Bound> = (0..n)
        .map(|j| Bound {
            value: lp.var_bounds[j].1,
            origin: RowOrigin::UpperBound(j),
        })
        .collect();
    let mut rows: Vec<Row> = Vec::new();
    let mut seen: HashMap<(Vec<u64>, bool), usize> = HashMap::new();

    for (k, c) in lp.constraints.iter().enumerate() {
        let origin = RowOrigin::Constraint(k);
        let scale = c.coeffs.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        if scale == 0.0 {
            let v = c.relation.violation(0.0, c.rhs);
            if v > PHASE1_TOL {
                return Err(vec![RowResidual { origin, residual: v }]);
            }
            continue;
        }
        let mut nz = c.coeffs.iter().enumerate().filter(|(_, a)| **a != 0.0);
        let first = nz.next();
        if let (Some((j, &a)), None) = (first, nz.next()) {
            diag.singleton_rows += 1;
            let v = c.rhs / a;
            let rel = match (c.relation, a < 0.0) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (r, _) => r,
            };
            if matches!(rel, Relation::Le | Relation::Eq) && v < upper[j].value {
                upper[j] = Bound { value: v, origin };
            }
            if matches!(rel, Relation::Ge | Relation::Eq) && v > lower[j].value {
                lower[j] = Bound { value: v, origin };
            }
            continue;
        }
        // Inequalities are keyed in `<=` form so that opposite-signed copies of
        // the same row are recognized.
        let (sign, relation) = match c.relation {
            Relation::Ge => (-1.0, Relation::Le),
            r => (1.0, r),
        };
        let coeffs: Vec<f64> = c.coeffs.iter().map(|a| sign * a / scale).collect();
        let rhs = sign * c.rhs / scale;
        let key = (bits_key(&coeffs), relation == Relation::Eq);
        if let Some(&idx) = seen.get(&key) {
            diag.duplicate_rows += 1;
            let kept: &mut Row = &mut rows[idx];
            match relation {
                Relation::Eq => {
                    let gap = (kept.rhs - rhs).abs();
                    if gap > PHASE1_TOL {
                        return Err(vec![
                            RowResidual { origin: kept.origin, residual: gap * kept.scale },
                            RowResidual { origin, residual: gap * scale },
                        ]);
                    }
                }
                _ => {
                    if rhs < kept.rhs {
                        kept.rhs = rhs;
                        kept.origin = origin;
                        kept.scale = scale;
                    }
                }
            }
            continue;
        }
        seen.insert(key, rows.len());
        rows.push(Row {
            coeffs,
            relation,
            rhs,
            origin,
            scale,
        });
    }

    for j in 0..n {
        let (lo, hi) = (lower[j], upper[j]);
        let tol = 1e-12 * lo.value.abs().max(hi.value.abs()).max(1.0);
        if lo.value > hi.value + tol {
            let gap = lo.value - hi.value;
            return Err(vec![
                RowResidual { origin: lo.origin, residual: gap },
                RowResidual { origin: hi.origin, residual: gap },
            ]);
        }
        if lo.value > hi.value {
            upper[j].value = lo.value;
        }
    }
    Ok(Presolved { rows, lower, upper })
}

/// How an original variable is expressed through nonnegative columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = lo + x'`
    Shift { col: usize, lo: f64 },
    /// `x = hi - x'`
    Mirror { col: usize, hi: f64 },
    /// `x = x+ - x-`
    Split { pos: usize, neg: usize },
}

struct StandardForm {
    /// Row-major `m x n_cols` constraint matrix with `rhs >= 0`.
    a: Vec<f64>,
    b: Vec<f64>,
    origins: Vec<RowOrigin>,
    scales: Vec<f64>,
    n_cols: usize,
    /// First artificial column.
    art_start: usize,
    basis: Vec<usize>,
    maps: Vec<VarMap>,
}

fn standard_form(pre: &Presolved) -> StandardForm {
    let n = pre.lower.len();
    let mut maps = Vec::with_capacity(n);
    let mut n_struct = 0;
    let mut extra_rows = Vec::new();
    for j in 0..n {
        let (lo, hi) = (pre.lower[j].value, pre.upper[j].value);
        if lo.is_finite() {
            maps.push(VarMap::Shift { col: n_struct, lo });
            if hi.is_finite() {
                extra_rows.push((n_struct, hi - lo, pre.upper[j].origin));
            }
            n_struct += 1;
        } else if hi.is_finite() {
            maps.push(VarMap::Mirror { col: n_struct, hi });
            n_struct += 1;
        } else {
            maps.push(VarMap::Split {
                pos: n_struct,
                neg: n_struct + 1,
            });
            n_struct += 2;
        }
    }

    struct StdRow {
        coeffs: Vec<f64>,
        relation: Relation,
        rhs: f64,
        origin: RowOrigin,
        scale: f64,
    }
    let mut std_rows: Vec<StdRow> = Vec::with_capacity(pre.rows.len() + extra_rows.len());
    for row in &pre.rows {
        let mut coeffs = vec![0.0; n_struct];
        let mut rhs = row.rhs;
        for (j, &a) in row.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            match maps[j] {
                VarMap::Shift { col, lo } => {
                    coeffs[col] += a;
                    rhs -= a * lo;
                }
                VarMap::Mirror { col, hi } => {
                    coeffs[col] -= a;
                    rhs -= a * hi;
                }
                VarMap::Split { pos, neg } => {
                    coeffs[pos] += a;
                    coeffs[neg] -= a;
                }
            }
        }
        std_rows.push(StdRow {
            coeffs,
            relation: row.relation,
            rhs,
            origin: row.origin,
            scale: row.scale,
        });
    }
    for (col, width, origin) in extra_rows {
        let mut coeffs = vec![0.0; n_struct];
        coeffs[col] = 1.0;
        std_rows.push(StdRow {
            coeffs,
            relation: Relation::Le,
            rhs: width,
            origin,
            scale: 1.0,
        });
    }
    for r in &mut std_rows {
        if r.rhs < 0.0 {
            r.rhs = -r.rhs;
            r.coeffs.iter_mut().for_each(|a| *a = -*a);
            r.relation = match r.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let m = std_rows.len();
    let n_slack = std_rows.iter().filter(|r| r.relation != Relation::Eq).count();
    let n_art = std_rows.iter().filter(|r| r.relation != Relation::Le).count();
    let art_start = n_struct + n_slack;
    let n_cols = art_start + n_art;
    let mut a = vec![0.0; m * n_cols];
    let mut b = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let (mut slack, mut art) = (n_struct, art_start);
    for (i, r) in std_rows.iter().enumerate() {
        let row = &mut a[i * n_cols..(i + 1) * n_cols];
        row[..n_struct].copy_from_slice(&r.coeffs);
        match r.relation {
            Relation::Le => {
                row[slack] = 1.0;
                basis.push(slack);
                slack += 1;
            }
            Relation::Ge => {
                row[slack] = -1.0;
                slack += 1;
                row[art] = 1.0;
                basis.push(art);
                art += 1;
            }
            Relation::Eq => {
                row[art] = 1.0;
                basis.push(art);
                art += 1;
            }
        }
        b.push(r.rhs);
    }
    StandardForm {
        a,
        b,
        origins: std_rows.iter().map(|r| r.origin).collect(),
        scales: std_rows.iter().map(|r| r.scale).collect(),

        n_cols,
        art_start,
        basis,
        maps,
    }
}

enum LoopEnd {
    Optimal,
    Unbounded,
}

/// Dense tableau: `m` constraint rows followed by the reduced-cost row; the
/// last column holds the right-hand side (`-z` in the cost row).
struct Tableau {
    t: Vec<f64>,
    m: usize,
    width: usize,
    basis: Vec<usize>,
    /// Column index limit for entering variables.
    allowed: usize,
    pivots: usize,
    bland: bool,
    degenerate_run: usize,
}

impl Tableau {
    fn new(sf: &StandardForm) -> Self {
        let m = sf.b.len();
        let width = sf.n_cols + 1;
        let mut t = vec![0.0; (m + 1) * width];
        for i in 0..m {
            t[i * width..i * width + sf.n_cols].copy_from_slice(&sf.a[i * sf.n_cols..(i + 1) * sf.n_cols]);
            t[i * width + sf.n_cols] = sf.b[i];
        }
        Tableau {
            t,
            m,
            width,
            basis: sf.basis.clone(),
            allowed: sf.n_cols,
            pivots: 0,
            bland: false,
            degenerate_run: 0,
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.t[i * self.width + self.width - 1]
    }

    fn cost_row(&mut self) -> &mut [f64] {
        let w = self.width;
        &mut self.t[self.m * w..(self.m + 1) * w]
    }

    /// Sets the cost row to `c - c_B B^-1 A` for column costs `c`.
    fn price(&mut self, cost: &[f64]) {
        let w = self.width;
        let mut row = vec![0.0; w];
        row[..cost.len()].copy_from_slice(cost);
        for i in 0..self.m {
            let cb = cost.get(self.basis[i]).copied().unwrap_or(0.0);
            if cb == 0.0 {
                continue;
            }
            let src = &self.t[i * w..(i + 1) * w];
            for (r, s) in row.iter_mut().zip(src) {
                *r -= cb * s;
            }
        }
        self.cost_row().copy_from_slice(&row);
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(r, e);
        let prow: Vec<f64> = self.t[r * w..(r + 1) * w].iter().map(|v| v * inv).collect();
        for i in 0..=self.m {
            let row = &mut self.t[i * w..(i + 1) * w];
            if i == r {
                row.copy_from_slice(&prow);
                row[e] = 1.0;
                continue;
            }
            let f = row[e];
            if f == 0.0 {
                continue;
            }
            for (v, p) in row.iter_mut().zip(&prow) {
                *v -= f * p;
            }
            row[e] = 0.0;
        }
        self.basis[r] = e;
        self.pivots += 1;
    }

    fn entering(&self) -> Option<usize> {
        let cost = &self.t[self.m * self.width..];
        if self.bland {
            return (0..self.allowed).find(|&j| cost[j] < -OPTIMALITY_TOL);
        }
        let mut best: Option<(usize, f64)> = None;
        for (j, &d) in cost.iter().enumerate().take(self.allowed) {
            if d < -OPTIMALITY_TOL && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        best.map(|(j, _)| j)
    }

    fn leaving(&self, e: usize) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for i in 0..self.m {
            let a = self.at(i, e);
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = self.rhs(i).max(0.0) / a;
            let better = match best {
                None => true,
                Some((bi, br, ba)) => {
                    let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                    if !tie {
                        ratio < br
                    } else if self.bland {
                        self.basis[i] < self.basis[bi]
                    } else {
                        a > ba
                    }
                }
            };
            if better {
                best = Some((i, ratio, a));
            }
        }
        best.map(|(i, r, _)| (i, r))
    }

    fn run(&mut self) -> Result<LoopEnd> {
        loop {
            let Some(e) = self.entering() else {
                return Ok(LoopEnd::Optimal);
            };
            let Some((r, step)) = self.leaving(e) else {
                return Ok(LoopEnd::Unbounded);
            };
            if step <= DEGENERATE_STEP {
                self.degenerate_run += 1;
                if self.degenerate_run >= DEGENERATE_STREAK && !self.bland {
                    debug!("simplex: switching to Bland's rule after {} degenerate pivots", self.degenerate_run);
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
            }
            self.pivot(r, e);
            if self.pivots >= MAX_PIVOTS {
                return Err(Error::IterationLimit(self.pivots));
            }
        }
    }

    fn remove_row(&mut self, r: usize) {
        let w = self.width;
        self.t.drain(r * w..(r + 1) * w);
        self.basis.remove(r);
        self.m -= 1;
    }
}

/// Solves `B x_B = b` from the original standard-form data to shed the
/// round-off accumulated by the tableau updates.
fn refactorize(sf: &StandardForm, rows: &[usize], basis: &[usize]) -> Option<Vec<f64>> {
    let m = rows.len();
    if m == 0 {
        return Some(Vec::new());
    }
    let bmat = DMatrix::from_fn(m, m, |i, k| sf.a[rows[i] * sf.n_cols + basis[k]]);
    let rhs = DVector::from_iterator(m, rows.iter().map(|&i| sf.b[i]));
    let xb = bmat.lu().solve(&rhs)?;
    if xb.iter().any(|v| !v.is_finite() || *v < -1e-7) {
        return None;
    }
    Some(xb.iter().map(|v| v.max(0.0)).collect())
}

/// Two-phase simplex on the standard-form conversion of `lp`.
///
/// Returns `Infeasible` or `Unbounded` as statuses; errors only on malformed
/// input or if the pivot limit is hit. Identical input gives bit-identical output.
pub fn solve(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.validate()?;
    let mut diag = LpDiagnostics {
        rows_in: lp.constraints.len(),
        ..LpDiagnostics::default()
    };
    let infeasible = |mut diag: LpDiagnostics, tight: Vec<RowResidual>| {
        diag.tight_rows = tight;
        LpOutcome {
            status: LpStatus::Infeasible,
            solution: None,
            objective_value: None,
            diagnostics: diag,
        }
    };

    let pre = match presolve(lp, &mut diag) {
        Ok(p) => p,
        Err(tight) => {
            diag.phase1_infeasibility = tight.iter().map(|r| r.residual).fold(0.0, f64::max);
            return Ok(infeasible(diag, tight));
        }
    };
    diag.rows_after_presolve = pre.rows.len();
    let sf = standard_form(&pre);
    let mut tab = Tableau::new(&sf);
    // Original standard-form row behind each tableau row.
    let mut row_ids: Vec<usize> = (0..tab.m).collect();

    if sf.art_start < sf.n_cols {
        let mut cost = vec![0.0; sf.n_cols];
        cost[sf.art_start..].iter_mut().for_each(|c| *c = 1.0);
        tab.price(&cost);
        tab.run()?;
        let w = -tab.t[tab.m * tab.width + tab.width - 1];
        diag.phase1_infeasibility = w.max(0.0);
        if w > PHASE1_TOL {
            let mut tight: Vec<RowResidual> = (0..tab.m)
                .filter(|&i| tab.basis[i] >= sf.art_start && tab.rhs(i) > PHASE1_TOL)
                .map(|i| RowResidual {
                    origin: sf.origins[row_ids[i]],
                    residual: tab.rhs(i) * sf.scales[row_ids[i]],
                })
                .collect();
            tight.sort_by(|a, b| b.residual.total_cmp(&a.residual));
            tight.truncate(TIGHT_ROWS_REPORTED);
            diag.pivots = tab.pivots;
            diag.bland = tab.bland;
            return Ok(infeasible(diag, tight));
        }
        // Drive remaining artificials out of the basis; rows with no
        // usable pivot are linearly dependent and dropped.
        let mut i = 0;
        while i < tab.m {
            if tab.basis[i] < sf.art_start {
                i += 1;
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..sf.art_start {
                let a = tab.at(i, j).abs();
                if a > PIVOT_TOL && best.is_none_or(|(_, ba)| a > ba) {
                    best = Some((j, a));
                }
            }
            match best {
                Some((j, _)) => {
                    tab.pivot(i, j);
                    i += 1;
                }
                None => {
                    tab.remove_row(i);
                    row_ids.remove(i);
                }
            }
        }
        tab.allowed = sf.art_start;
    }

    let n = lp.n_vars;
    let mut status = LpStatus::Optimal;
    if lp.objective.sense != Sense::Feasibility {
        let sign = if lp.objective.sense == Sense::Maximize { -1.0 } else { 1.0 };
        let mut cost = vec![0.0; sf.n_cols];
        for (j, &c) in lp.objective.coeffs.iter().enumerate() {
            let c = sign * c;
            match sf.maps[j] {
                VarMap::Shift { col, .. } => cost[col] += c,
                VarMap::Mirror { col, .. } => cost[col] -= c,
                VarMap::Split { pos, neg } => {
                    cost[pos] += c;
                    cost[neg] -= c;
                }
            }
        }
        tab.price(&cost);
        if let LoopEnd::Unbounded = tab.run()? {
            status = LpStatus::Unbounded;
        }
    }
    diag.pivots = tab.pivots;
    diag.bland = tab.bland;
    if status == LpStatus::Unbounded {
        return Ok(LpOutcome {
            status,
            solution: None,
            objective_value: None,
            diagnostics: diag,
        });
    }

    let xb = refactorize(&sf, &row_ids, &tab.basis)
        .unwrap_or_else(|| (0..tab.m).map(|i| tab.rhs(i).max(0.0)).collect());
    let mut xs = vec![0.0; sf.n_cols];
    for (k, &col) in tab.basis.iter().enumerate() {
        xs[col] = xb[k];
    }
    let mut x: Vec<f64> = sf
        .maps
        .iter()
        .map(|m| match *m {
            VarMap::Shift { col, lo } => lo + xs[col],
            VarMap::Mirror { col, hi } => hi - xs[col],
            VarMap::Split { pos, neg } => xs[pos] - xs[neg],
        })
        .collect();
    for (v, (lo, hi)) in x.iter_mut().zip(pre.lower.iter().zip(&pre.upper)) {
        *v = v.clamp(lo.value, hi.value);
    }
    debug_assert_eq!(x.len(), n);
    diag.max_violation = Some(lp.max_violation(&x));
    Ok(LpOutcome {
        status,
        objective_value: lp.objective_at(&x),
        solution: Some(x),
        diagnostics: diag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::LinearProgram;

    #[test]
    fn maximize_single_bounded_variable() {
        let mut lp = LinearProgram::new(1).with_objective(Sense::Maximize, vec![1.0]);
        lp.add(vec![1.0], Relation::Le, 3.0);
        let out = solve(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert_eq!(out.solution.unwrap(), vec![3.0]);
        assert_eq!(out.objective_value, Some(3.0));
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut lp = LinearProgram::new(1);
        lp.free(0);
        lp.add(vec![1.0], Relation::Ge, 1.0);
        lp.add(vec![1.0], Relation::Le, 0.0);
        let out = solve(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Infeasible);
        assert!(out.solution.is_none());
        assert_eq!(out.diagnostics.tight_rows.len(), 2);
    }

    #[test]
    fn two_variable_textbook_optimum() {
        let mut lp = LinearProgram::new(2).with_objective(Sense::Maximize, vec![1.0, 1.0]);
        lp.add(vec![1.0, 2.0], Relation::Le, 4.0);
        lp.add(vec![3.0, 1.0], Relation::Le, 6.0);
        let out = solve(&lp).unwrap();
        let x = out.solution.unwrap();
        assert!((x[0] - 1.6).abs() < 1e-12 && (x[1] - 1.2).abs() < 1e-12, "{x:?}");
        assert!((out.objective_value.unwrap() - 2.8).abs() < 1e-12);
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::new(2).with_objective(Sense::Maximize, vec![1.0, 0.0]);
        lp.add(vec![1.0, -1.0], Relation::Le, 1.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_rows_and_redundancy() {
        let mut lp = LinearProgram::new(3).with_objective(Sense::Minimize, vec![1.0, 2.0, 3.0]);
        lp.add(vec![1.0, 1.0, 1.0], Relation::Eq, 3.0);
        lp.add(vec![2.0, 2.0, 2.0], Relation::Eq, 6.0);
        lp.add(vec![1.0, -1.0, 0.0], Relation::Ge, -1.0);
        let out = solve(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        let x = out.solution.unwrap();
        assert!((x[0] - 3.0).abs() < 1e-12, "{x:?}");
        assert!(out.diagnostics.max_violation.unwrap() < 1e-12);
    }

    #[test]
    fn free_and_mirrored_variables() {
        let mut lp = LinearProgram::new(2).with_objective(Sense::Minimize, vec![1.0, -1.0]);
        lp.free(0);
        lp.set_bounds(1, f64::NEG_INFINITY, 2.0);
        lp.add(vec![1.0, 0.0], Relation::Ge, -5.0);
        lp.add(vec![1.0, 1.0], Relation::Le, 10.0);
        let out = solve(&lp).unwrap();
        let x = out.solution.unwrap();
        assert!((x[0] + 5.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12, "{x:?}");
    }

    #[test]
    fn zero_row_handling() {
        let mut lp = LinearProgram::new(1);
        lp.add(vec![0.0], Relation::Le, 1.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Optimal);
        lp.add(vec![0.0], Relation::Ge, 1.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn duplicate_rows_keep_the_tighter_copy() {
        let mut lp = LinearProgram::new(2).with_objective(Sense::Maximize, vec![1.0, 1.0]);
        lp.add(vec![1.0, 1.0], Relation::Le, 4.0);
        lp.add(vec![2.0, 2.0], Relation::Le, 6.0);
        lp.add(vec![-1.0, -1.0], Relation::Ge, -5.0);
        let out = solve(&lp).unwrap();
        assert_eq!(out.diagnostics.duplicate_rows, 2);
        assert!((out.objective_value.unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example cycles under textbook Dantzig pricing.
        let mut lp = LinearProgram::new(4)
            .with_objective(Sense::Minimize, vec![-0.75, 150.0, -0.02, 6.0]);
        lp.add(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0);
        lp.add(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0);
        lp.add(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0);
        let out = solve(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective_value.unwrap() + 0.05).abs() < 1e-12);
    }
}
