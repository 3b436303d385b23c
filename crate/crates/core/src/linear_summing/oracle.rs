//! The semi-infinite program behind [`summing_constant`](super::summing_constant)
//! and its separation oracles.
//!
//! The oracle maximizes `||T x||^r / Σ_j ν_j Φ(x, s_j)^r` over `x ≠ 0`. Three
//! cases are solved exactly:
//!
//! * identity `Φ`, `r = 1`: the denominator is a polyhedral seminorm, so the
//!   convex numerator peaks at a ray of the hyperplane arrangement
//!   `{<x, s_j> = 0}`;
//! * identity `Φ`, `r = 2`, Euclidean or polyhedral codomain: a generalized
//!   eigenvalue problem against `M = Σ ν_j s_j s_j^T`;
//! * `|<x,·>|^2/||x||`, `r = 1`, polyhedral domain and codomain: the ratio
//!   is `max_{g, f} <T^T g, x><f, x> / x^T M x`, again an eigenvalue problem.
//! * identity `Φ`, any other `r > 1`, polyhedral codomain: with `g` running
//!   over the codomain's dual vertices the supremum is
//!   `max_g 1 / min {Σ_j ν_j |<x, s_j>|^r : <x, T^T g> = 1}`, a smooth convex
//!   program solved by damped Newton steps.
//!
//! Everything else goes through a seeded multistart compass search.

use std::sync::atomic::{AtomicU64, Ordering};

use super::{phi_family_sup, PhiKind, PhiMap, SummingConfig};
use crate::linalg::{self, dot};
use crate::operators::LinearMap;
use crate::optimize;
use crate::sip_solver::{Denominator, SemiInfiniteProgram, Separation};

/// Largest arrangement enumeration attempted by the exact ray oracle.
const RAY_BUDGET: usize = 200_000;

pub(crate) struct LinearProgram<'a> {
    t: &'a LinearMap,
    phi: &'a PhiMap,
    r: f64,
    support: Vec<Vec<f64>>,
    cfg: &'a SummingConfig,
    calls: AtomicU64,
    t_scale: f64,
}

impl<'a> LinearProgram<'a> {
    pub(crate) fn new(t: &'a LinearMap, phi: &'a PhiMap, r: f64, support: Vec<Vec<f64>>, cfg: &'a SummingConfig) -> Self {
        let t_scale = linalg::max_abs(&t.matrix).max(1e-300);
        Self { t, phi, r, support, cfg, calls: AtomicU64::new(0), t_scale }
    }

    fn n(&self) -> usize {
        self.t.domain.dim()
    }

    fn denominator(&self, nu: &[f64], x: &[f64]) -> f64 {
        let norm = if self.phi.needs_norm() { self.phi.base.norm_of(x) } else { 0.0 };
        self.support
            .iter()
            .zip(nu)
            .filter(|(_, w)| **w > 0.0)
            .map(|(s, w)| w * self.phi.eval_with_norm(x, norm, s).powf(self.r))
            .sum()
    }

    fn ratio(&self, nu: &[f64], x: &[f64]) -> f64 {
        let image = self.t.image_norm(x);
        let num = image.powf(self.r);
        let den = self.denominator(nu, x);
        // Below this the image is mostly rounding error.
        if image <= 1e-7 * self.t_scale * linalg::max_abs(x) {
            0.0
        } else if den <= 0.0 {
            f64::INFINITY
        } else {
            num / den
        }
    }

    /// Unit vector of `ker` on which `T` does not vanish, if any.
    fn invisible_direction(&self, kernel: &[Vec<f64>]) -> Option<Vec<f64>> {
        kernel.iter().find(|k| self.t.image_norm(k) > 1e-10 * self.t_scale).cloned()
    }

    fn finish(&self, nu: &[f64], mut cands: Vec<Vec<f64>>, exact: bool) -> Separation<Vec<f64>> {
        let mut seen = std::collections::HashSet::new();
        cands.retain(|x| {
            let mut y = x.clone();
            optimize::normalize(&mut y);
            if y.iter().find(|v| v.abs() > 1e-12).map_or(false, |v| *v < 0.0) {
                y.iter_mut().for_each(|v| *v = -*v);
            }
            seen.insert(linalg::round_key(&y))
        });
        let mut scored: Vec<(Vec<f64>, f64)> = cands.into_iter().map(|x| {
            let r = self.ratio(nu, &x);
            (x, r)
        }).collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1));
        let sup_ratio = scored.first().map_or(0.0, |s| s.1);
        Separation { points: scored, sup_ratio, exact }
    }

    fn active_support(&self, nu: &[f64]) -> Vec<(Vec<f64>, f64)> {
        self.support.iter().zip(nu).filter(|(_, w)| **w > 0.0).map(|(s, w)| (s.clone(), *w)).collect()
    }

    /// Identity `Φ`, `r = 1`.
    fn rays_oracle(&self, nu: &[f64]) -> Option<Separation<Vec<f64>>> {
        let n = self.n();
        let active: Vec<Vec<f64>> = self.active_support(nu).into_iter().map(|(s, _)| s).collect();
        let kernel = linalg::null_space(&active, n, 1e-11);
        if let Some(k) = self.invisible_direction(&kernel) {
            return Some(self.finish(nu, vec![k], true));
        }
        let d = n - kernel.len();
        if linalg::binomial(active.len(), d.saturating_sub(1)) > RAY_BUDGET {
            return None;
        }
        let mut cands = Vec::new();
        linalg::for_each_subset(active.len(), d.saturating_sub(1), |subset| {
            let mut rows: Vec<Vec<f64>> = subset.iter().map(|&i| active[i].clone()).collect();
            rows.extend(kernel.iter().cloned());
            let ns = linalg::null_space(&rows, n, 1e-10);
            if ns.len() == 1 {
                cands.push(ns[0].clone());
            }
        });
        Some(self.finish(nu, cands, true))
    }

    /// Range basis `W = Q Λ^{-1/2}` of `M = Σ ν_j s_j s_j^T` and its kernel.
    fn metric(&self, nu: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let n = self.n();
        let mut m = vec![vec![0.0; n]; n];
        for (s, w) in self.active_support(nu) {
            for i in 0..n {
                for j in 0..n {
                    m[i][j] += w * s[i] * s[j];
                }
            }
        }
        let eig = linalg::sym_eigen(&m);
        let top = eig.iter().map(|e| e.0).fold(0.0, f64::max);
        let mut w_cols = Vec::new();
        let mut kernel = Vec::new();
        for (lam, v) in eig {
            if lam > 1e-12 * top.max(1e-300) {
                w_cols.push(linalg::scaled(&v, 1.0 / lam.sqrt()));
            } else {
                kernel.push(v);
            }
        }
        (w_cols, kernel)
    }

    /// Identity `Φ`, `r = 2`.
    fn quadratic_oracle(&self, nu: &[f64]) -> Option<Separation<Vec<f64>>> {
        let cod = &self.t.codomain;
        let euclid = cod.lq_exponent() == Some(2.0);
        if !euclid && !cod.is_polyhedral() {
            return None;
        }
        let (w_cols, kernel) = self.metric(nu);
        if let Some(k) = self.invisible_direction(&kernel) {
            return Some(self.finish(nu, vec![k], true));
        }
        let lift = |z: &[f64]| -> Vec<f64> {
            let mut x = vec![0.0; self.n()];
            for (c, w) in z.iter().zip(&w_cols) {
                for i in 0..x.len() {
                    x[i] += c * w[i];
                }
            }
            x
        };
        let tw: Vec<Vec<f64>> = w_cols.iter().map(|w| self.t.apply(w)).collect();
        let d = w_cols.len();
        let mut cands = Vec::new();
        if euclid {
            let g: Vec<Vec<f64>> = (0..d).map(|a| (0..d).map(|b| dot(&tw[a], &tw[b])).collect()).collect();
            let eig = linalg::sym_eigen(&g);
            if let Some((_, z)) = eig.iter().max_by(|a, b| a.0.total_cmp(&b.0)) {
                cands.push(lift(z));
            }
        } else {
            for f in cod.facets().unwrap() {
                let z: Vec<f64> = tw.iter().map(|c| dot(c, f)).collect();
                cands.push(lift(&z));
            }
        }
        Some(self.finish(nu, cands, true))
    }

    /// `|<x,·>|^2 / ||x||`, `r = 1`.
    fn square_oracle(&self, nu: &[f64]) -> Option<Separation<Vec<f64>>> {
        let dom = &self.t.domain;
        let cod = &self.t.codomain;
        if !dom.is_polyhedral() || !cod.is_polyhedral() {
            return None;
        }
        let (w_cols, kernel) = self.metric(nu);
        if !kernel.is_empty() {
            // Denominator blind along the kernel while ||x|| grows: unbounded.
            if let Some(k) = self.invisible_direction(&kernel) {
                return Some(self.finish(nu, vec![k], true));
            }
            let x1 = (0..self.n()).map(|i| linalg::unit(self.n(), i)).find(|e| self.t.image_norm(e) > 0.0)?;
            let x = linalg::add(&linalg::project_out(&x1, &kernel), &linalg::scaled(&kernel[0], 1e6));
            let mut s = self.finish(nu, vec![x], true);
            s.sup_ratio = f64::INFINITY;
            return Some(s);
        }
        let n = self.n();
        let d = w_cols.len();
        let lift = |z: &[f64]| -> Vec<f64> {
            let mut x = vec![0.0; n];
            for (c, w) in z.iter().zip(&w_cols) {
                for i in 0..n {
                    x[i] += c * w[i];
                }
            }
            x
        };
        let gs = cod.facets().unwrap();
        let fs = dom.facets().unwrap();
        let mut cands = Vec::new();
        for g in gs.iter().step_by(2) {
            let a = self.t.apply_t(g);
            let aw: Vec<f64> = w_cols.iter().map(|w| dot(&a, w)).collect();
            for f in fs {
                let fw: Vec<f64> = w_cols.iter().map(|w| dot(f, w)).collect();
                let c: Vec<Vec<f64>> =
                    (0..d).map(|i| (0..d).map(|j| 0.5 * (aw[i] * fw[j] + aw[j] * fw[i])).collect()).collect();
                let eig = linalg::sym_eigen(&c);
                if let Some((_, z)) = eig.iter().max_by(|a, b| a.0.total_cmp(&b.0)) {
                    cands.push(lift(z));
                }
            }
        }
        Some(self.finish(nu, cands, true))
    }

    /// Identity `Φ`, `r > 1`, polyhedral codomain.
    fn power_oracle(&self, nu: &[f64]) -> Option<Separation<Vec<f64>>> {
        let cod = &self.t.codomain;
        // Weights at rounding level would only make the Newton systems singular.
        let top = nu.iter().cloned().fold(0.0, f64::max);
        let active: Vec<(Vec<f64>, f64)> = self.active_support(nu).into_iter().filter(|(_, w)| *w > 1e-12 * top).collect();
        let kernel = linalg::null_space(&active.iter().map(|(s, _)| s.clone()).collect::<Vec<_>>(), self.n(), 1e-11);
        if let Some(k) = self.invisible_direction(&kernel) {
            return Some(self.finish(nu, vec![k], true));
        }
        let mut seen = std::collections::HashSet::new();
        let mut cands = Vec::new();
        for g in cod.facets()? {
            let a = self.t.apply_t(g);
            if linalg::max_abs(&a) <= 1e-12 * self.t_scale {
                continue;
            }
            let key = linalg::round_key(&a);
            if seen.contains(&linalg::round_key(&linalg::scaled(&a, -1.0))) || !seen.insert(key) {
                continue;
            }
            cands.push(min_power_on_hyperplane(&active, &kernel, &a, self.r));
        }
        Some(self.finish(nu, cands, true))
    }

    fn heuristic_oracle(&self, nu: &[f64], hints: &[Vec<f64>]) -> Separation<Vec<f64>> {
        let n = self.n();
        let call = self.calls.fetch_add(1, Ordering::Relaxed);
        let mut rng = optimize::rng(self.cfg.seed.wrapping_add(call.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
        let mut cands = self.initial_points();
        cands.extend(hints.iter().cloned());
        // Every integrand vanishes on the anchor's kernel.
        if let PhiKind::Anchored { x0 } = &self.phi.kind {
            cands.extend(linalg::null_space(&[x0.clone()], n, 1e-12));
        }
        // Rays of the active arrangement, capped.
        let active: Vec<Vec<f64>> = self.active_support(nu).into_iter().map(|(s, _)| s).collect();
        if linalg::binomial(active.len(), n.saturating_sub(1)) <= 2000 {
            linalg::for_each_subset(active.len(), n.saturating_sub(1), |subset| {
                let rows: Vec<Vec<f64>> = subset.iter().map(|&i| active[i].clone()).collect();
                let ns = linalg::null_space(&rows, n, 1e-10);
                if ns.len() == 1 {
                    cands.push(ns[0].clone());
                }
            });
        }
        let f = |x: &[f64]| self.ratio(nu, x);
        let project = |x: &mut Vec<f64>| optimize::normalize(x);
        let opts = optimize::CompassOptions { initial_step: 0.2, min_step: 1e-10, max_evals: 6000 };
        let mut out = optimize::multistart_maximize(cands, &f, &project, self.cfg.top_k, opts);
        let randoms: Vec<Vec<f64>> = (0..self.cfg.restarts).map(|_| optimize::random_vector(&mut rng, n)).collect();
        out.extend(optimize::multistart_maximize(randoms, &f, &project, self.cfg.restarts, opts));
        let pts = out.into_iter().map(|(x, _)| x).collect();
        self.finish(nu, pts, false)
    }
}

impl SemiInfiniteProgram for LinearProgram<'_> {
    type Point = Vec<f64>;

    fn exponent(&self) -> f64 {
        self.r
    }

    fn support_len(&self) -> usize {
        self.support.len()
    }

    fn lhs(&self, x: &Vec<f64>) -> f64 {
        self.t.image_norm(x)
    }

    fn integrands(&self, x: &Vec<f64>) -> Vec<f64> {
        let norm = if self.phi.needs_norm() { self.phi.base.norm_of(x) } else { 0.0 };
        self.support.iter().map(|s| self.phi.eval_with_norm(x, norm, s)).collect()
    }

    fn scale(&self, x: &Vec<f64>, t: f64) -> Vec<f64> {
        linalg::scaled(x, t)
    }

    fn initial_points(&self) -> Vec<Vec<f64>> {
        let dom = &self.t.domain;
        let n = dom.dim();
        let mut pts: Vec<Vec<f64>> = (0..n).map(|i| linalg::unit(n, i)).collect();
        let res = if n <= 2 { 8 } else { 1 };
        pts.extend(dom.primal_sphere_points(res));
        let mut seen = std::collections::HashSet::new();
        pts.retain(|p| {
            let neg = linalg::round_key(&linalg::scaled(p, -1.0));
            !seen.contains(&neg) && seen.insert(linalg::round_key(p))
        });
        pts.truncate(64);
        pts
    }

    fn separate(&self, nu: &[f64], hints: &[Vec<f64>]) -> Separation<Vec<f64>> {
        let exact = if self.phi.is_identity_like() && self.r == 1.0 {
            self.rays_oracle(nu)
        } else if self.phi.is_identity_like() && self.r == 2.0 {
            self.quadratic_oracle(nu)
        } else if matches!(self.phi.kind, PhiKind::SquareOverNorm) && self.r == 1.0 {
            self.square_oracle(nu)
        } else if self.phi.is_identity_like() && self.r > 1.0 {
            self.power_oracle(nu)
        } else {
            None
        };
        exact.unwrap_or_else(|| self.heuristic_oracle(nu, hints))
    }

    fn family_denominator(&self, family: &[Vec<f64>]) -> Denominator {
        phi_family_sup(self.phi, self.r, family)
    }
}

/// Minimizer of `Σ_j w_j |<x, s_j>|^r` over `<x, a> = 1`, `r > 1`, with `x`
/// kept orthogonal to `kernel` (the common null space of the `s_j`, which
/// must also annihilate `a`).
///
/// Newton on `(t^2 + ε^2)^{r/2}` with `ε` shrunk geometrically to a
/// negligible floor, each stage warm-started from the last.
pub(crate) fn min_power_on_hyperplane(terms: &[(Vec<f64>, f64)], kernel: &[Vec<f64>], a: &[f64], r: f64) -> Vec<f64> {
    let n = a.len();
    let x0 = linalg::scaled(a, 1.0 / dot(a, a));
    let mut fixed = vec![a.to_vec()];
    fixed.extend(kernel.iter().cloned());
    let basis = linalg::null_space(&fixed, n, 1e-12);
    let d = basis.len();
    let c: Vec<f64> = terms.iter().map(|(s, _)| dot(&x0, s)).collect();
    let b: Vec<Vec<f64>> = terms.iter().map(|(s, _)| basis.iter().map(|z| dot(z, s)).collect()).collect();
    let w: Vec<f64> = terms.iter().map(|(_, w)| *w).collect();
    let values = |z: &[f64]| -> Vec<f64> { c.iter().zip(&b).map(|(cj, bj)| cj + dot(bj, z)).collect() };
    let objective = |z: &[f64], eps: f64| -> f64 {
        values(z).iter().zip(&w).map(|(t, wj)| wj * (t * t + eps * eps).powf(r / 2.0)).sum()
    };
    let scale = c.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
    let floor = 1e-13 * scale;
    let mut eps = if r >= 2.0 { 0.0 } else { 0.1 * scale };
    let mut z = vec![0.0; d];
    loop {
        for _ in 0..100 {
            let t = values(&z);
            let mut grad = vec![0.0; d];
            let mut hess = vec![vec![0.0; d]; d];
            for ((tj, bj), wj) in t.iter().zip(&b).zip(&w) {
                let q = tj * tj + eps * eps;
                if q == 0.0 {
                    continue;
                }
                let g1 = wj * r * q.powf(r / 2.0 - 1.0) * tj;
                let h1 = wj * r * q.powf(r / 2.0 - 2.0) * ((r - 1.0) * tj * tj + eps * eps);
                for k in 0..d {
                    grad[k] += g1 * bj[k];
                    for l in 0..d {
                        hess[k][l] += h1 * bj[k] * bj[l];
                    }
                }
            }
            let trace: f64 = (0..d).map(|k| hess[k][k]).sum::<f64>().max(1e-300);
            for k in 0..d {
                hess[k][k] += 1e-10 * trace;
            }
            let Some(step) = linalg::solve(&hess, &grad) else { break };
            let decrement = dot(&grad, &step);
            let f0 = objective(&z, eps);
            if !(decrement > 1e-15 * f0) {
                break;
            }
            let mut alpha = 1.0;
            let mut moved = false;
            while alpha > 1e-12 {
                let trial: Vec<f64> = z.iter().zip(&step).map(|(zi, si)| zi - alpha * si).collect();
                if objective(&trial, eps) <= f0 - 0.25 * alpha * decrement {
                    z = trial;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if eps <= floor {
            break;
        }
        eps = if eps * 0.1 < floor { 0.0 } else { eps * 0.1 };
        if eps == 0.0 {
            // Final plain stage only where the Hessian stays bounded.
            eps = floor;
        }
    }
    let mut x = x0;
    for (zk, bk) in z.iter().zip(&basis) {
        for i in 0..n {
            x[i] += zk * bk[i];
        }
    }
    x
}

