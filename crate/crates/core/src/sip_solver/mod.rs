//! Finite LPs and the cutting-plane scheme for semi-infinite measure programs.
//!
//! Every summing constant in this crate is the value of a program of the form
//!
//! ```text
//! minimize  sum_j nu_j   over nu >= 0 on a support set S
//! subject to  lhs(x)^r <= sum_j nu_j g_j(x)^r   for every input x,
//! ```
//!
//! with `C = (sum nu)^{1/r}` and Pietsch measure `nu / sum nu`. The driver
//! keeps a finite set of inputs, solves the finite LP, asks an oracle for the
//! worst violated input, and repeats. The upper bound uses the oracle's
//! supremum ratio `R`: `nu` scaled by `R` dominates every input, so
//! `(mass * R)^{1/r}` is a valid constant whenever `R` is exact. The lower
//! bound comes from the LP's row multipliers, which form a finite family
//! certificate in the summing inequality.

pub mod lp;
pub(crate) mod tuple;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use lp::{min_measure_mass, solve_lp, LpProblem, LpSolution, LpStatus, MeasureLp};

/// Driver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SipConfig {
    pub max_iter: usize,
    pub tol_gap: f64,
    pub tol_duality: f64,
    /// Violated points added per iteration.
    pub cuts_per_iter: usize,
}

impl Default for SipConfig {
    fn default() -> Self {
        Self { max_iter: 200, tol_gap: 1e-6, tol_duality: 1e-6, cuts_per_iter: 8 }
    }
}

/// Oracle answer for the current measure.
#[derive(Debug, Clone)]
pub struct Separation<P> {
    /// Candidate inputs with their ratio `lhs^r / sum_j nu_j g_j^r`, best first.
    pub points: Vec<(P, f64)>,
    /// Supremum of that ratio over all inputs (`inf` if some input with
    /// positive `lhs` is invisible to the measure).
    pub sup_ratio: f64,
    /// Whether `sup_ratio` is a proven supremum rather than a search result.
    pub exact: bool,
}

/// Upper estimate of `sup_{x* in ball} sum_i g(x_i, x*)^r` for a family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Denominator {
    pub value: f64,
    /// True when `value` provably dominates the supremum.
    pub certified: bool,
}

/// A semi-infinite measure program.
pub trait SemiInfiniteProgram: Sync {
    type Point: Clone + Send + Sync;

    fn exponent(&self) -> f64;
    fn support_len(&self) -> usize;
    /// Left-hand side, unpowered (e.g. `||T x||`).
    fn lhs(&self, x: &Self::Point) -> f64;
    /// Integrand `g_j(x)` at every support point, unpowered.
    fn integrands(&self, x: &Self::Point) -> Vec<f64>;
    /// The input scaled by `t > 0`; `lhs` and every integrand scale by `t`.
    fn scale(&self, x: &Self::Point, t: f64) -> Self::Point;
    fn initial_points(&self) -> Vec<Self::Point>;
    /// Most violated inputs for `nu`. `hints` are the inputs carrying weight
    /// in the last measure program, good starting points for a local search.
    fn separate(&self, nu: &[f64], hints: &[Self::Point]) -> Separation<Self::Point>;
    fn family_denominator(&self, family: &[Self::Point]) -> Denominator;
}

/// One driver iteration: running lower bound, running upper bound, and the
/// oracle's relative violation `R - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub lower: f64,
    pub upper: f64,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SipFlag {
    /// `max_iter` reached with the gap still above `tol_gap`.
    GapOpen,
    /// The oracle ratio came from a search, so the upper bound is not proven.
    HeuristicOracle,
    /// A family denominator could not be certified, so the lower bound is not proven.
    ApproxDenominator,
    /// Lower bound exceeded upper bound by more than `tol_duality`.
    DualityViolation,
}

#[derive(Debug, Clone)]
pub struct CuttingPlaneReport<P> {
    /// Unnormalized weights of the best upper-bound iterate (already scaled by `R`).
    pub weights: Vec<f64>,
    pub upper_bound: f64,
    pub lower_bound: f64,
    /// Family certifying `lower_bound`.
    pub lb_family: Vec<P>,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    pub flags: Vec<SipFlag>,
    /// Constraint inputs accumulated by the driver.
    pub points: Vec<P>,
}

impl<P> CuttingPlaneReport<P> {
    pub fn has_flag(&self, f: &SipFlag) -> bool {
        self.flags.contains(f)
    }

    pub fn converged(&self) -> bool {
        !self.has_flag(&SipFlag::GapOpen)
    }
}

fn pow(v: f64, r: f64) -> f64 {
    if r == 1.0 {
        v
    } else {
        v.powf(r)
    }
}

/// Rows equal up to a positive factor, to 1e-12 relative.
fn same_row(g0: &[f64], h0: f64, g: &[f64], h: f64) -> bool {
    if h0 <= 0.0 || h <= 0.0 {
        return false;
    }
    g0.iter().zip(g).all(|(a, b)| (a / h0 - b / h).abs() <= 1e-12 * (a / h0).abs().max(b / h).max(1e-300))
}

/// Largest ratio `h_i / Σ_j ν_j g_ij` over the accumulated rows.
fn row_ratio(rows_g: &[Vec<f64>], rows_h: &[f64], nu: &[f64]) -> f64 {
    rows_g
        .iter()
        .zip(rows_h)
        .filter(|(_, &h)| h > 0.0)
        .map(|(g, &h)| {
            let den: f64 = g.iter().zip(nu).map(|(a, b)| a * b).sum();
            if den > 0.0 { h / den } else { f64::INFINITY }
        })
        .fold(0.0, f64::max)
}

/// Number of recent measures averaged for the stabilized upper bound.
const AVERAGE_WINDOW: usize = 8;

/// Runs the cutting-plane scheme to convergence or `cfg.max_iter`.
pub fn cutting_plane<S: SemiInfiniteProgram>(prog: &S, cfg: &SipConfig) -> Result<CuttingPlaneReport<S::Point>> {
    let r = prog.exponent();
    if !(r >= 1.0) {
        return Err(Error::InvalidParameter(format!("exponent {r} must be >= 1")));
    }
    let n_support = prog.support_len();
    let mut points = prog.initial_points();
    if points.is_empty() {
        return Err(Error::InvalidParameter("cutting plane needs initial points".into()));
    }
    let mut rows_g: Vec<Vec<f64>> = Vec::new();
    let mut rows_h: Vec<f64> = Vec::new();
    for x in &points {
        rows_g.push(prog.integrands(x).iter().map(|&v| pow(v, r)).collect());
        rows_h.push(pow(prog.lhs(x), r));
    }

    let mut best_ub = f64::INFINITY;
    let mut best_weights = vec![0.0; n_support];
    let mut best_lb = 0.0_f64;
    let mut lb_family: Vec<S::Point> = Vec::new();
    let mut history = Vec::new();
    let mut flags = Vec::new();
    let mut heuristic = false;
    let mut approx_den = false;
    let mut converged = false;
    let mut iterations = 0;

    // Rows carrying weight in the last solve, and the row count it saw.
    let mut prev_active: Vec<bool> = Vec::new();
    let mut recent: std::collections::VecDeque<Vec<f64>> = std::collections::VecDeque::new();
    for _ in 0..cfg.max_iter {
        iterations += 1;
        let mut solved = min_measure_mass(&rows_g, &rows_h, n_support);
        if matches!(solved, Err(Error::Lp(_))) && !prev_active.is_empty() {
            // Ill-conditioned basis: drop the rows that were slack last time
            // and solve again.
            let keep: Vec<bool> = (0..points.len()).map(|i| prev_active.get(i).copied().unwrap_or(true)).collect();
            let mut it = keep.iter();
            points.retain(|_| *it.next().unwrap());
            let mut it = keep.iter();
            rows_g.retain(|_| *it.next().unwrap());
            let mut it = keep.iter();
            rows_h.retain(|_| *it.next().unwrap());
            solved = min_measure_mass(&rows_g, &rows_h, n_support);
        }
        let lp = match solved {
            Ok(lp) => lp,
            // Still singular after pruning: keep the bounds found so far.
            Err(Error::Lp(_)) if best_ub.is_finite() => break,
            Err(Error::SupportCannotDominate { row }) => {
                // An input no support point sees: either the class is violated
                // outright or the support is too small.
                let den = prog.family_denominator(&points[row..=row]);
                if den.value == 0.0 {
                    return Err(Error::ClassViolated { numerator: prog.lhs(&points[row]) });
                }
                return Err(Error::SupportCannotDominate { row });
            }
            Err(e) => return Err(e),
        };

        prev_active = lp.row_weights.iter().map(|w| *w > 0.0).collect();

        // Lower bound from the row multipliers.
        let family: Vec<S::Point> = points
            .iter()
            .zip(&lp.row_weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(x, w)| prog.scale(x, w.powf(1.0 / r)))
            .collect();
        if !family.is_empty() {
            let num: f64 = family.iter().map(|x| pow(prog.lhs(x), r)).sum();
            let den = prog.family_denominator(&family);
            if den.value > 0.0 {
                let lb = (num / den.value).powf(1.0 / r);
                if lb > best_lb {
                    best_lb = lb;
                    lb_family = family;
                    approx_den |= !den.certified;
                }
            }
        }

        let hints: Vec<S::Point> =
            points.iter().zip(&lp.row_weights).filter(|(_, w)| **w > 0.0).map(|(x, _)| x.clone()).collect();
        let sep = prog.separate(&lp.nu, &hints);
        heuristic |= !sep.exact;
        let ratio = sep.sup_ratio.max(1.0);
        let ub = (lp.mass * ratio).powf(1.0 / r);
        if ub < best_ub {
            best_ub = ub;
            best_weights = lp.nu.iter().map(|v| v * ratio).collect();
        }
        // LP vertices jump between near-optimal measures; their running
        // average often dominates with a much smaller ratio.
        recent.push_back(lp.nu.clone());
        if recent.len() > AVERAGE_WINDOW {
            recent.pop_front();
        }
        if recent.len() == AVERAGE_WINDOW && best_ub - best_lb > cfg.tol_gap * best_ub.max(1.0) {
            let mut avg = vec![0.0; n_support];
            for nu in &recent {
                avg.iter_mut().zip(nu).for_each(|(a, v)| *a += v / AVERAGE_WINDOW as f64);
            }
            let avg_sep = prog.separate(&avg, &hints);
            heuristic |= !avg_sep.exact;
            let ratio = avg_sep.sup_ratio.max(row_ratio(&rows_g, &rows_h, &avg));
            let mass: f64 = avg.iter().sum();
            let ub = (mass * ratio).powf(1.0 / r);
            if ub < best_ub {
                best_ub = ub;
                best_weights = avg.iter().map(|v| v * ratio).collect();
            }
        }
        let violation = sep.sup_ratio - 1.0;
        history.push(IterationRecord { lower: best_lb, upper: best_ub, violation });

        // A lower bound above the upper one means a missed cut or a loose
        // denominator, so keep cutting.
        let crossed = best_lb > best_ub + cfg.tol_duality * best_ub.max(1.0);
        if best_ub.is_finite() && !crossed && best_ub - best_lb <= cfg.tol_gap * best_ub.max(1.0) {
            converged = true;
            break;
        }
        if violation <= cfg.tol_gap {
            // The measure is optimal for the current rows and nothing violates
            // it; what remains is the lower-bound model's own slack.
            break;
        }
        let mut added = 0;
        for (x, rho) in sep.points {
            if added >= cfg.cuts_per_iter || !(rho > 1.0 + cfg.tol_gap) {
                break;
            }
            let g: Vec<f64> = prog.integrands(&x).iter().map(|&v| pow(v, r)).collect();
            let h = pow(prog.lhs(&x), r);
            if rows_g.iter().zip(&rows_h).any(|(g0, &h0)| same_row(g0, h0, &g, h)) {
                continue;
            }
            rows_g.push(g);
            rows_h.push(h);
            points.push(x);
            added += 1;
        }
        if added == 0 {
            break;
        }
    }

    if !converged {
        flags.push(SipFlag::GapOpen);
    }
    if heuristic {
        flags.push(SipFlag::HeuristicOracle);
    }
    if approx_den {
        flags.push(SipFlag::ApproxDenominator);
    }
    if best_lb > best_ub + cfg.tol_duality * best_ub.max(1.0) {
        flags.push(SipFlag::DualityViolation);
    }
    Ok(CuttingPlaneReport {
        weights: best_weights,
        upper_bound: best_ub,
        lower_bound: best_lb,
        lb_family,
        iterations,
        history,
        flags,
        points,
    })
}
