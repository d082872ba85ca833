//! Linear programs over real identifiers indexed `0..n`.
//!
//! [`solve_lp`] is a dense two-phase tableau simplex using Bland's rule for
//! both the entering and the leaving variable, so it terminates on
//! degenerate instances. Identifiers are free in sign; every bound is a
//! constraint. Sizes here are tiny (a few dozen identifiers), so nothing is
//! sparse and nothing is warm-started.

use std::collections::BTreeMap;
use std::fmt;

use itertools::Itertools;

use crate::error::{Error, Result};

/// Feasibility tolerance on constraint satisfaction.
pub const FEAS_TOL: f64 = 1e-7;
/// Smallest magnitude accepted as a pivot element.
pub const PIVOT_TOL: f64 = 1e-10;
/// Pivot candidates must reach this fraction of their column's largest
/// positive entry.
const REL_PIVOT_TOL: f64 = 1e-7;
/// Relative relaxation applied to every row while pivoting.
const PERTURBATION: f64 = 1e-8;
/// Basic values this slightly negative are roundoff and reset to zero.
const RHS_FLUSH_TOL: f64 = 1e-9;
/// Tableau entries below this magnitude are flushed to zero after a pivot.
const ZERO_TOL: f64 = 1e-12;
/// Reduced costs above `-RC_TOL` count as non-improving.
const RC_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearExpr {
    terms: BTreeMap<usize, f64>,
    constant: f64,
}

impl LinearExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        LinearExpr {
            terms: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn var(i: usize) -> Self {
        let mut e = Self::new();
        e.add_term(i, 1.0);
        e
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (usize, f64)>, constant: f64) -> Self {
        let mut e = Self::constant(constant);
        for (i, c) in terms {
            e.add_term(i, c);
        }
        e
    }

    /// Adds `c * x_i`, dropping the term if it cancels to exactly zero.
    pub fn add_term(&mut self, i: usize, c: f64) {
        let slot = self.terms.entry(i).or_insert(0.0);
        *slot += c;
        if *slot == 0.0 {
            self.terms.remove(&i);
        }
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.terms.iter().map(|(&i, &c)| (i, c))
    }

    pub fn coefficient(&self, i: usize) -> f64 {
        self.terms.get(&i).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.constant
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.terms.keys().next_back().copied()
    }

    pub fn plus(&self, other: &LinearExpr) -> LinearExpr {
        let mut out = self.clone();
        for (i, c) in other.terms() {
            out.add_term(i, c);
        }
        out.constant += other.constant;
        out
    }

    pub fn minus(&self, other: &LinearExpr) -> LinearExpr {
        self.plus(&other.scaled(-1.0))
    }

    pub fn scaled(&self, k: f64) -> LinearExpr {
        LinearExpr::from_terms(self.terms().map(|(i, c)| (i, c * k)), self.constant * k)
    }

    pub fn eval(&self, point: &[f64]) -> f64 {
        self.constant + self.terms().map(|(i, c)| c * point[i]).sum::<f64>()
    }

    /// Coefficients and constant agree within `tol`.
    pub fn approx_eq(&self, other: &LinearExpr, tol: f64) -> bool {
        let diff = self.minus(other);
        diff.constant.abs() <= tol && diff.terms().all(|(_, c)| c.abs() <= tol)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

/// Where a constraint came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstraintLabel {
    Structural,
    Bound,
    UserResponse,
    Other,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint {
    pub expr: LinearExpr,
    pub sense: Sense,
    pub rhs: f64,
    pub label: ConstraintLabel,
}

impl LinearConstraint {
    pub fn new(expr: LinearExpr, sense: Sense, rhs: f64, label: ConstraintLabel) -> Self {
        LinearConstraint {
            expr,
            sense,
            rhs,
            label,
        }
    }

    pub fn le(expr: LinearExpr, rhs: f64, label: ConstraintLabel) -> Self {
        Self::new(expr, Sense::Le, rhs, label)
    }

    pub fn ge(expr: LinearExpr, rhs: f64, label: ConstraintLabel) -> Self {
        Self::new(expr, Sense::Ge, rhs, label)
    }

    pub fn eq(expr: LinearExpr, rhs: f64, label: ConstraintLabel) -> Self {
        Self::new(expr, Sense::Eq, rhs, label)
    }

    /// Amount by which `point` violates the constraint (0 when satisfied).
    pub fn violation(&self, point: &[f64]) -> f64 {
        let lhs = self.expr.eval(point);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }

    pub fn is_satisfied(&self, point: &[f64], tol: f64) -> bool {
        self.violation(point) <= tol
    }

    /// Largest identifier index mentioned.
    pub fn max_index(&self) -> Option<usize> {
        self.expr.max_index()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Objective value, including the objective's constant. NaN unless
    /// optimal.
    pub objective: f64,
    pub point: Vec<f64>,
    /// Rate of change of the optimal objective per unit increase of each
    /// constraint's right-hand side. Diagnostic only.
    pub duals: Vec<f64>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn without_point(status: LpStatus, dim: usize, rows: usize) -> Self {
        LpSolution {
            status,
            objective: f64::NAN,
            point: vec![f64::NAN; dim],
            duals: vec![0.0; rows],
        }
    }
}

fn dimension(objective: Option<&LinearExpr>, constraints: &[LinearConstraint]) -> usize {
    objective
        .and_then(LinearExpr::max_index)
        .into_iter()
        .chain(constraints.iter().filter_map(LinearConstraint::max_index))
        .max()
        .map_or(0, |m| m + 1)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum RowKind {
    Le,
    Ge,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Reduced costs `c_B B^-1 A_j - c_j`; the last entry is the objective.
    obj: Vec<f64>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for x in self.rows[r].iter_mut() {
            *x /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (x, &pr) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * pr;
                    if x.abs() < ZERO_TOL {
                        *x = 0.0;
                    }
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (x, &pr) in self.obj.iter_mut().zip(&pivot_row) {
                *x -= f * pr;
            }
            self.obj[c] = 0.0;
        }
        for row in self.rows.iter_mut() {
            let b = &mut row[self.width];
            if *b < 0.0 && *b > -RHS_FLUSH_TOL {
                *b = 0.0;
            }
        }
        self.basis[r] = c;
    }

    fn set_costs(&mut self, costs: &[f64]) {
        let mut obj = vec![0.0; self.width + 1];
        for (j, o) in obj.iter_mut().enumerate().take(self.width) {
            *o = -costs[j];
        }
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = costs[b];
            if cb != 0.0 {
                for (o, &t) in obj.iter_mut().zip(&self.rows[i]) {
                    *o += cb * t;
                }
            }
        }
        self.obj = obj;
    }

    /// Runs Bland's rule over columns allowed by `allowed` until optimal or
    /// until the objective reaches `target`. Returns false when unbounded.
    fn optimize(&mut self, allowed: impl Fn(usize) -> bool, target: f64) -> bool {
        let mut iterations = 0usize;
        loop {
            iterations += 1;
            assert!(iterations < 1_000_000, "simplex did not terminate");
            if self.obj[self.width] >= target {
                return true;
            }
            let Some(enter) = (0..self.width).find(|&j| allowed(j) && self.obj[j] < -RC_TOL)
            else {
                return true;
            };
            // pivots far below the column's largest entry amplify roundoff
            let col_max = self
                .rows
                .iter()
                .map(|row| row[enter])
                .fold(0.0, f64::max);
            let threshold = PIVOT_TOL.max(REL_PIVOT_TOL * col_max);
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][enter];
                if a <= threshold {
                    continue;
                }
                // roundoff can leave a degenerate row slightly negative;
                // a negative ratio would undo Bland's progress guarantee
                let ratio = self.rhs(i).max(0.0) / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let tol = 1e-12 * (1.0 + br.abs());
                        if ratio < br - tol
                            || (ratio <= br + tol && self.basis[i] < self.basis[bi])
                        {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return false,
            }
        }
    }
}

pub fn solve_lp(
    objective: &LinearExpr,
    direction: Direction,
    constraints: &[LinearConstraint],
) -> LpSolution {
    let dim = dimension(Some(objective), constraints);
    solve_lp_in(dim, objective, direction, constraints)
}

/// [`solve_lp`] with an explicit number of identifiers.
pub fn solve_lp_in(
    dim: usize,
    objective: &LinearExpr,
    direction: Direction,
    constraints: &[LinearConstraint],
) -> LpSolution {
    assert!(dimension(Some(objective), constraints) <= dim);
    // internal rows: (origin constraint, sign applied, kind, coefficients,
    // perturbed rhs, exact rhs). Every row is relaxed by a tiny distinct
    // amount so that ratio ties, and with them long degenerate pivot runs
    // amplifying roundoff, do not occur; the final basis is then
    // re-evaluated at the exact right-hand sides.
    let mut rows: Vec<(usize, f64, RowKind, Vec<f64>, f64, f64)> = Vec::new();
    for (ci, c) in constraints.iter().enumerate() {
        let mut a = vec![0.0; dim];
        for (i, k) in c.expr.terms() {
            a[i] = k;
        }
        let b = c.rhs - c.expr.constant_term();
        let kinds: &[RowKind] = match c.sense {
            Sense::Le => &[RowKind::Le],
            Sense::Ge => &[RowKind::Ge],
            Sense::Eq => &[RowKind::Le, RowKind::Ge],
        };
        for &kind in kinds {
            let k = rows.len() as f64 * 0.618_033_988_749_895;
            let delta = PERTURBATION * (1.0 + b.abs()) * (1.0 + k.fract()) / 2.0;
            let bp = if kind == RowKind::Le { b + delta } else { b - delta };
            if bp < 0.0 {
                let flipped = if kind == RowKind::Le { RowKind::Ge } else { RowKind::Le };
                rows.push((ci, -1.0, flipped, a.iter().map(|x| -x).collect(), -bp, -b));
            } else {
                rows.push((ci, 1.0, kind, a.clone(), bp, b));
            }
        }
    }
    let m = rows.len();
    let n_ge = rows.iter().filter(|r| r.2 == RowKind::Ge).count();
    let slack_start = 2 * dim;
    let art_start = slack_start + m;
    let width = art_start + n_ge;
    let mut tab = Tableau {
        rows: Vec::with_capacity(m),
        basis: Vec::with_capacity(m),
        obj: Vec::new(),
        width,
    };
    let mut slack_sign = Vec::with_capacity(m);
    let mut next_art = art_start;
    for (r, (_, _, kind, a, b, _)) in rows.iter().enumerate() {
        let mut row = vec![0.0; width + 1];
        for (j, &x) in a.iter().enumerate() {
            row[2 * j] = x;
            row[2 * j + 1] = -x;
        }
        row[width] = *b;
        match kind {
            RowKind::Le => {
                row[slack_start + r] = 1.0;
                tab.basis.push(slack_start + r);
                slack_sign.push(1.0);
            }
            RowKind::Ge => {
                row[slack_start + r] = -1.0;
                row[next_art] = 1.0;
                tab.basis.push(next_art);
                next_art += 1;
                slack_sign.push(-1.0);
            }
        }
        tab.rows.push(row);
    }

    // phase 1: maximize -(sum of artificials)
    if n_ge > 0 {
        let costs: Vec<f64> = (0..width)
            .map(|j| if j >= art_start { -1.0 } else { 0.0 })
            .collect();
        tab.set_costs(&costs);
        tab.optimize(|_| true, -ZERO_TOL);
        if tab.obj[width] < -FEAS_TOL {
            return LpSolution::without_point(LpStatus::Infeasible, dim, constraints.len());
        }
        // artificials left in the basis sit at zero (up to tolerance);
        // swap each for the best-conditioned real column of its row
        for i in 0..m {
            if tab.basis[i] >= art_start {
                tab.rows[i][width] = 0.0;
                let best = (0..art_start)
                    .max_by(|&a, &b| tab.rows[i][a].abs().total_cmp(&tab.rows[i][b].abs()));
                if let Some(j) = best.filter(|&j| tab.rows[i][j].abs() > PIVOT_TOL) {
                    tab.pivot(i, j);
                }
            }
        }
    }

    // phase 2
    let sign = match direction {
        Direction::Maximize => 1.0,
        Direction::Minimize => -1.0,
    };
    let mut costs = vec![0.0; width];
    for (i, c) in objective.terms() {
        costs[2 * i] = sign * c;
        costs[2 * i + 1] = -sign * c;
    }
    tab.set_costs(&costs);
    if !tab.optimize(|j| j < art_start, f64::INFINITY) {
        return LpSolution::without_point(LpStatus::Unbounded, dim, constraints.len());
    }

    // the slack block of the final tableau is B^-1 up to the slack signs
    let mut col_value = vec![0.0; width];
    for (i, &b) in tab.basis.iter().enumerate() {
        col_value[b] = rows
            .iter()
            .enumerate()
            .map(|(r, row)| tab.rows[i][slack_start + r] * slack_sign[r] * row.5)
            .sum();
    }
    let point: Vec<f64> = (0..dim)
        .map(|j| col_value[2 * j] - col_value[2 * j + 1])
        .collect();
    let mut duals = vec![0.0; constraints.len()];
    for (r, (ci, row_sign, _, _, _, _)) in rows.iter().enumerate() {
        let y = slack_sign[r] * tab.obj[slack_start + r];
        duals[*ci] += sign * row_sign * y;
    }
    LpSolution {
        status: LpStatus::Optimal,
        objective: objective.eval(&point),
        point,
        duals,
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting; `None`
/// when numerically singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for i in (col + 1)..n {
            let f = a[i][col] / a[col][col];
            if f != 0.0 {
                let (upper, lower) = a.split_at_mut(i);
                for (x, &p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                    *x -= f * p;
                }
                b[i] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Every basic feasible point of the polytope: each choice of `n`
/// constraint hyperplanes with a unique intersection that satisfies all
/// constraints. Exponential; meant as a test oracle for small `n`.
pub fn enumerate_vertices(
    constraints: &[LinearConstraint],
    dim_limit: usize,
) -> Result<Vec<Vec<f64>>> {
    let dim = dimension(None, constraints);
    enumerate_vertices_in(dim, constraints, dim_limit)
}

pub fn enumerate_vertices_in(
    dim: usize,
    constraints: &[LinearConstraint],
    dim_limit: usize,
) -> Result<Vec<Vec<f64>>> {
    if dim > dim_limit {
        return Err(Error::DimensionLimit {
            dim,
            limit: dim_limit,
        });
    }
    let planes: Vec<(Vec<f64>, f64)> = constraints
        .iter()
        .map(|c| {
            let mut a = vec![0.0; dim];
            for (i, k) in c.expr.terms() {
                a[i] = k;
            }
            (a, c.rhs - c.expr.constant_term())
        })
        .collect();
    let feasible = |x: &[f64]| {
        constraints.iter().all(|c| {
            let scale = 1.0 + c.rhs.abs() + c.expr.terms().map(|(_, k)| k.abs()).sum::<f64>();
            c.violation(x) <= 1e-9 * scale
        })
    };
    let mut out: Vec<Vec<f64>> = Vec::new();
    for combo in (0..planes.len()).combinations(dim) {
        let a = combo.iter().map(|&k| planes[k].0.clone()).collect();
        let b = combo.iter().map(|&k| planes[k].1).collect();
        let Some(x) = solve_square(a, b) else {
            continue;
        };
        if !feasible(&x) {
            continue;
        }
        let dup = out.iter().any(|y| {
            y.iter()
                .zip(&x)
                .all(|(p, q)| (p - q).abs() <= 1e-9 * (1.0 + p.abs()))
        });
        if !dup {
            out.push(x);
        }
    }
    Ok(out)
}
