//! Dense two-phase revised simplex for `min c.t  s.t.  A t >= b, t >= 0`.
//!
//! Problems here have at most a few hundred rows and columns, so the basis
//! inverse is stored explicitly and updated by elementary row operations,
//! with a fresh inversion every [`REFACTOR_EVERY`] pivots. Pricing and the
//! ratio test both use Bland's rule, which rules out cycling.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const REFACTOR_EVERY: usize = 50;
const PIVOT_LIMIT: usize = 200_000;
const COND_LIMIT: f64 = 1e12;

/// `min <objective, t>` subject to `<a_i, t> >= b_i` and `t >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<(Vec<f64>, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Basis condition estimate exceeded `1e12` or the pivot limit was hit.
    IllConditioned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub t: Vec<f64>,
    pub value: f64,
    pub status: LpStatus,
    /// Nonnegative multipliers of the `>=` rows at the final basis.
    pub duals: Vec<f64>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>) -> Self {
        Self { objective, rows: Vec::new() }
    }

    pub fn row(mut self, a: Vec<f64>, b: f64) -> Self {
        self.rows.push((a, b));
        self
    }
}

struct Tableau {
    /// Columns of the equality system, stored column-major.
    cols: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    binv: Vec<Vec<f64>>,
    pivots_since_refactor: usize,
}

impl Tableau {
    fn m(&self) -> usize {
        self.rhs.len()
    }

    fn binv_times(&self, v: &[f64]) -> Vec<f64> {
        self.binv.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    fn basic_values(&self) -> Vec<f64> {
        self.binv_times(&self.rhs)
    }

    fn prices(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m();
        let mut y = vec![0.0; m];
        for (i, &bj) in self.basis.iter().enumerate() {
            let c = cost[bj];
            if c != 0.0 {
                for k in 0..m {
                    y[k] += c * self.binv[i][k];
                }
            }
        }
        y
    }

    fn pivot(&mut self, row: usize, entering: usize, u: &[f64]) -> std::result::Result<(), LpStatus> {
        let m = self.m();
        let p = u[row];
        let pivot_row: Vec<f64> = self.binv[row].iter().map(|v| v / p).collect();
        for i in 0..m {
            if i == row || u[i] == 0.0 {
                continue;
            }
            let f = u[i];
            for k in 0..m {
                self.binv[i][k] -= f * pivot_row[k];
            }
        }
        self.binv[row] = pivot_row;
        self.basis[row] = entering;
        self.pivots_since_refactor += 1;
        if self.pivots_since_refactor >= REFACTOR_EVERY {
            self.refactor(true)?;
        }
        Ok(())
    }

    /// Inverts the basis afresh. `check_cond` rejects bases whose condition
    /// estimate exceeds [`COND_LIMIT`].
    fn refactor(&mut self, check_cond: bool) -> std::result::Result<(), LpStatus> {
        let m = self.m();
        let b = DMatrix::from_fn(m, m, |i, j| self.cols[self.basis[j]][i]);
        let inv = b.clone().try_inverse().ok_or(LpStatus::IllConditioned)?;
        let norm1 = |mat: &DMatrix<f64>| {
            (0..m).map(|j| mat.column(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
        };
        if check_cond && norm1(&b) * norm1(&inv) > COND_LIMIT {
            return Err(LpStatus::IllConditioned);
        }
        self.binv = (0..m).map(|i| (0..m).map(|j| inv[(i, j)]).collect()).collect();
        self.pivots_since_refactor = 0;
        Ok(())
    }

    /// Minimizes `cost` over the current feasible basis. Columns flagged in
    /// `blocked` never enter.
    fn optimize(&mut self, cost: &[f64], blocked: &[bool]) -> LpStatus {
        let scale = cost.iter().fold(1.0_f64, |a, c| a.max(c.abs()));
        let tol = 1e-10 * scale;
        for _ in 0..PIVOT_LIMIT {
            let y = self.prices(cost);
            let in_basis = {
                let mut f = vec![false; self.cols.len()];
                for &b in &self.basis {
                    f[b] = true;
                }
                f
            };
            let entering = (0..self.cols.len()).find(|&j| {
                !in_basis[j] && !blocked[j] && {
                    let d = cost[j] - self.cols[j].iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
                    d < -tol
                }
            });
            let Some(j) = entering else {
                // Confirm optimality against a fresh inverse.
                if self.pivots_since_refactor == 0 {
                    return LpStatus::Optimal;
                }
                if let Err(status) = self.refactor(false) {
                    return status;
                }
                continue;
            };
            let u = self.binv_times(&self.cols[j]);
            let xb = self.basic_values();
            let umax = u.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.m() {
                if u[i] > 1e-9 * umax.max(1e-2) {
                    let ratio = xb[i].max(0.0) / u[i];
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-13 || (ratio <= br + 1e-13 && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    }
                }
            }
            let Some((row, _)) = best else { return LpStatus::Unbounded };
            if let Err(status) = self.pivot(row, j, &u) {
                return status;
            }
        }
        LpStatus::IllConditioned
    }
}

/// Solves a small dense LP to optimality.
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution> {
    let n = p.objective.len();
    if n == 0 {
        return Err(Error::Lp("needs at least one variable".into()));
    }
    for (a, b) in &p.rows {
        if a.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: a.len() });
        }
        if !b.is_finite() || a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Lp("non-finite coefficient".into()));
        }
    }
    if p.objective.iter().any(|v| !v.is_finite()) {
        return Err(Error::Lp("non-finite objective".into()));
    }
    let m = p.rows.len();
    if m == 0 {
        let status = if p.objective.iter().any(|&c| c < 0.0) { LpStatus::Unbounded } else { LpStatus::Optimal };
        return Ok(LpSolution { t: vec![0.0; n], value: 0.0, status, duals: Vec::new() });
    }

    // Row i reads  a_i.t - s_i = b_i. Rows with b_i <= 0 are negated so the
    // surplus enters the starting basis; the rest get an artificial column.
    let sign: Vec<f64> = p.rows.iter().map(|(_, b)| if *b <= 0.0 { -1.0 } else { 1.0 }).collect();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| sign[i] * p.rows[i].0[j]).collect()).collect();
    for i in 0..m {
        let mut c = vec![0.0; m];
        c[i] = -sign[i];
        cols.push(c);
    }
    let mut basis = vec![0; m];
    let mut artificial = vec![false; n + m];
    for i in 0..m {
        if sign[i] < 0.0 {
            basis[i] = n + i;
        } else {
            let mut c = vec![0.0; m];
            c[i] = 1.0;
            basis[i] = cols.len();
            cols.push(c);
            artificial.push(true);
        }
    }
    let total = cols.len();
    let rhs: Vec<f64> = p.rows.iter().zip(&sign).map(|((_, b), s)| s * b).collect();
    let binv = (0..m).map(|i| (0..m).map(|k| if i == k { 1.0 } else { 0.0 }).collect()).collect();
    let mut tab = Tableau { cols, rhs, basis, binv, pivots_since_refactor: 0 };

    let ill = |n: usize, m: usize| LpSolution {
        t: vec![0.0; n],
        value: f64::NAN,
        status: LpStatus::IllConditioned,
        duals: vec![0.0; m],
    };

    if artificial.iter().any(|&a| a) {
        let cost1: Vec<f64> = (0..total).map(|j| if artificial[j] { 1.0 } else { 0.0 }).collect();
        match tab.optimize(&cost1, &vec![false; total]) {
            LpStatus::Optimal => {}
            LpStatus::IllConditioned => return Ok(ill(n, m)),
            LpStatus::Unbounded => return Err(Error::Lp("phase one reported unbounded".into())),
            LpStatus::Infeasible => unreachable!(),
        }
        let xb = tab.basic_values();
        let infeas: f64 = tab.basis.iter().zip(&xb).filter(|(b, _)| artificial[**b]).map(|(_, v)| *v).sum();
        let bscale = tab.rhs.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        if infeas > 1e-9 * bscale {
            return Ok(LpSolution { t: vec![0.0; n], value: f64::NAN, status: LpStatus::Infeasible, duals: vec![0.0; m] });
        }
        // Drive zero-level artificials out of the basis where possible.
        for row in 0..m {
            if !artificial[tab.basis[row]] {
                continue;
            }
            let binv_row = tab.binv[row].clone();
            let in_basis: Vec<usize> = tab.basis.clone();
            let cand = (0..n + m).find(|&j| {
                !in_basis.contains(&j) && binv_row.iter().zip(&tab.cols[j]).map(|(a, b)| a * b).sum::<f64>().abs() > 1e-9
            });
            if let Some(j) = cand {
                let u = tab.binv_times(&tab.cols[j]);
                if tab.pivot(row, j, &u).is_err() {
                    return Ok(ill(n, m));
                }
            }
        }
    }

    let mut cost2 = p.objective.clone();
    cost2.resize(total, 0.0);
    let status = tab.optimize(&cost2, &artificial);
    if status != LpStatus::Optimal {
        return Ok(LpSolution { t: vec![0.0; n], value: f64::NAN, status, duals: vec![0.0; m] });
    }
    let xb = tab.basic_values();
    let mut t = vec![0.0; n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            t[b] = xb[i].max(0.0);
        }
    }
    let value = p.objective.iter().zip(&t).map(|(c, v)| c * v).sum();
    let y = tab.prices(&cost2);
    let duals = y.iter().zip(&sign).map(|(v, s)| (v * s).max(0.0)).collect();
    Ok(LpSolution { t, value, status: LpStatus::Optimal, duals })
}

/// Minimal-mass domination by a nonnegative measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureLp {
    /// Unnormalized weights over the support.
    pub nu: Vec<f64>,
    pub mass: f64,
    /// Optimal multipliers of the rows; they weight the hardest inputs and
    /// feed the lower-bound family.
    pub row_weights: Vec<f64>,
}

/// Solves `min sum_j nu_j` over `nu >= 0` with `sum_j g[i][j] nu_j >= h[i]`.
///
/// `g` holds one row per constraint and one column per support point. The
/// problem is solved through its dual `max h.w  s.t.  G^T w <= 1, w >= 0`,
/// whose slack basis is feasible from the start; `nu` is recovered from the
/// dual multipliers. Rows with `h_i <= 0` hold for every `nu` and are dropped.
pub fn min_measure_mass(g: &[Vec<f64>], h: &[f64], support_len: usize) -> Result<MeasureLp> {
    if g.len() != h.len() {
        return Err(Error::DimensionMismatch { expected: g.len(), found: h.len() });
    }
    let mut kept = Vec::new();
    let mut scales = Vec::new();
    for (i, (row, &hi)) in g.iter().zip(h).enumerate() {
        if row.len() != support_len {
            return Err(Error::DimensionMismatch { expected: support_len, found: row.len() });
        }
        if row.iter().any(|&v| v < 0.0 || !v.is_finite()) || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!("row {i} has negative or non-finite coefficients")));
        }
        if hi <= 0.0 {
            continue;
        }
        let s = row.iter().cloned().fold(0.0, f64::max);
        if s == 0.0 {
            return Err(Error::SupportCannotDominate { row: i });
        }
        kept.push(i);
        scales.push(s);
    }
    let mut row_weights = vec![0.0; g.len()];
    if kept.is_empty() {
        return Ok(MeasureLp { nu: vec![0.0; support_len], mass: 0.0, row_weights });
    }
    let objective: Vec<f64> = kept.iter().zip(&scales).map(|(&i, s)| -h[i] / s).collect();
    let mut lp = LpProblem::new(objective);
    for j in 0..support_len {
        let a: Vec<f64> = kept.iter().zip(&scales).map(|(&i, s)| -g[i][j] / s).collect();
        lp.rows.push((a, -1.0));
    }
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Unbounded => {
            return Err(Error::Lp("measure program unbounded; support cannot dominate".into()))
        }
        s => return Err(Error::Lp(format!("measure program ended {s:?}"))),
    }
    for ((&i, s), w) in kept.iter().zip(&scales).zip(&sol.t) {
        row_weights[i] = w / s;
    }
    let nu = sol.duals;
    let mass: f64 = nu.iter().sum();
    Ok(MeasureLp { nu, mass, row_weights })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable_bound() {
        let s = solve_lp(&LpProblem::new(vec![1.0]).row(vec![1.0], 3.0)).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.t[0] - 3.0).abs() < 1e-12 && (s.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_variable_vertex() {
        let p = LpProblem::new(vec![1.0, 1.0]).row(vec![1.0, 2.0], 2.0).row(vec![2.0, 1.0], 2.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value - 4.0 / 3.0).abs() < 1e-12);
        assert!((s.t[0] - 2.0 / 3.0).abs() < 1e-12 && (s.t[1] - 2.0 / 3.0).abs() < 1e-12);
        // Complementary slackness: b.y equals the optimum.
        assert!((2.0 * s.duals[0] + 2.0 * s.duals[1] - s.value).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let s = solve_lp(&LpProblem::new(vec![1.0]).row(vec![-1.0], 1.0)).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        let s = solve_lp(&LpProblem::new(vec![-1.0]).row(vec![1.0], 1.0)).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn measure_mass_examples() {
        let r = min_measure_mass(&[vec![1.0]], &[1.0], 1).unwrap();
        assert!((r.mass - 1.0).abs() < 1e-12 && (r.nu[0] - 1.0).abs() < 1e-12);
        let r = min_measure_mass(&[], &[], 3).unwrap();
        assert_eq!((r.nu, r.mass), (vec![0.0; 3], 0.0));
        assert_eq!(
            min_measure_mass(&[vec![0.0, 0.0]], &[1.0], 2),
            Err(Error::SupportCannotDominate { row: 0 })
        );
    }
}
