//! Φ-abstract p-summing linear operators: two-sided bounds on the summing
//! constant, Pietsch measures, and domination checks.
//!
//! For a homogeneous bounded `Φ` the constant is the least `C` with
//!
//! ```text
//! (sum_i ||T x_i||^r)^{1/r} <= C sup_{x* in B_{X*}} (sum_i Φ(x_i, x*)^r)^{1/r}
//! ```
//!
//! for every finite family, equivalently (by LP duality at finite scale) the
//! least `C` admitting a probability measure `μ` on the dual ball with
//! `||T x|| <= C (∫ Φ(x, ·)^r dμ)^{1/r}`.

mod oracle;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, dot};
use crate::operators::LinearMap;
use crate::optimize;
use crate::sip_solver::{cutting_plane, Denominator, IterationRecord, SipConfig, SipFlag};
use crate::spaces::{BallRequest, FiniteSpace, TOL_BALL};

pub(crate) use oracle::LinearProgram;

/// Tolerance on probability weights summing to one.
pub const TOL_PROB: f64 = 1e-10;

/// Which homogeneous map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PhiKind {
    /// `|<x, x*>|`.
    Identity,
    /// `||x||^σ |<x, x*>|^{1-σ}`, `0 <= σ < 1`.
    SigmaInterp { sigma: f64 },
    /// `|<x, x*>|^2 / ||x||` (zero at `x = 0`).
    SquareOverNorm,
    /// `|<x, x0*>|^{1/2} |<x, x*>|^{1/2}` with `||x0*|| = 1`.
    Anchored { x0: Vec<f64> },
}

/// A bounded positively homogeneous map on the functions `<x, ·>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiMap {
    pub kind: PhiKind,
    pub base: FiniteSpace,
}

impl PhiMap {
    pub fn identity(base: FiniteSpace) -> Self {
        Self { kind: PhiKind::Identity, base }
    }

    pub fn sigma_interp(base: FiniteSpace, sigma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&sigma) {
            return Err(Error::InvalidParameter(format!("sigma = {sigma} must lie in [0, 1)")));
        }
        Ok(Self { kind: PhiKind::SigmaInterp { sigma }, base })
    }

    pub fn square_over_norm(base: FiniteSpace) -> Self {
        Self { kind: PhiKind::SquareOverNorm, base }
    }

    pub fn anchored(base: FiniteSpace, x0: Vec<f64>) -> Result<Self> {
        let n = base.dual_norm(&x0)?;
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("anchor must have dual norm 1, has {n}")));
        }
        Ok(Self { kind: PhiKind::Anchored { x0 }, base })
    }

    /// `Φ(<x, ·>)(x*)`.
    pub fn eval(&self, x: &[f64], xstar: &[f64]) -> f64 {
        let norm = match self.kind {
            PhiKind::SigmaInterp { .. } | PhiKind::SquareOverNorm => self.base.norm_of(x),
            _ => 0.0,
        };
        self.eval_with_norm(x, norm, xstar)
    }

    /// Same as [`eval`](Self::eval) with `||x||` supplied by the caller.
    pub fn eval_with_norm(&self, x: &[f64], norm: f64, xstar: &[f64]) -> f64 {
        let t = dot(x, xstar).abs();
        match &self.kind {
            PhiKind::Identity => t,
            PhiKind::SigmaInterp { sigma } => {
                if *sigma == 0.0 {
                    t
                } else if t == 0.0 {
                    0.0
                } else {
                    norm.powf(*sigma) * t.powf(1.0 - sigma)
                }
            }
            PhiKind::SquareOverNorm => {
                if norm == 0.0 {
                    0.0
                } else {
                    t * t / norm
                }
            }
            PhiKind::Anchored { x0 } => (dot(x, x0).abs() * t).sqrt(),
        }
    }

    /// Whether `Φ(<x, ·>)` depends on `||x||`.
    pub(crate) fn needs_norm(&self) -> bool {
        matches!(self.kind, PhiKind::SigmaInterp { sigma } if sigma > 0.0) || matches!(self.kind, PhiKind::SquareOverNorm)
    }

    /// Degree of positive homogeneity of `x* -> Φ(x, x*)^r`.
    pub fn dual_degree(&self, r: f64) -> f64 {
        match &self.kind {
            PhiKind::Identity => r,
            PhiKind::SigmaInterp { sigma } => (1.0 - sigma) * r,
            PhiKind::SquareOverNorm => 2.0 * r,
            PhiKind::Anchored { .. } => 0.5 * r,
        }
    }

    /// Whether `x* -> Φ(x, x*)^r` is convex, so measures may live on extreme points.
    pub fn convex_power(&self, r: f64) -> bool {
        self.dual_degree(r) >= 1.0 - 1e-12
    }

    /// Constant `K` with `Φ(x, x*) <= K ||x||` on the dual ball.
    pub fn bound(&self) -> f64 {
        1.0
    }

    /// Behaves like the identity map (σ = 0 interpolation included).
    pub(crate) fn is_identity_like(&self) -> bool {
        matches!(self.kind, PhiKind::Identity) || matches!(self.kind, PhiKind::SigmaInterp { sigma } if sigma == 0.0)
    }
}

/// `Φ(<x, ·>)(x*)`.
pub fn phi_eval(phi: &PhiMap, x: &[f64], xstar: &[f64]) -> f64 {
    phi.eval(x, xstar)
}

/// Finitely supported probability measure on a dual ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub support: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(support: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        check_dim(support.len(), weights.len())?;
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidParameter("measure weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > TOL_PROB {
            return Err(Error::InvalidParameter(format!("measure weights sum to {total}, not 1")));
        }
        Ok(Self { support, weights })
    }

    pub fn delta(point: Vec<f64>) -> Self {
        Self { support: vec![point], weights: vec![1.0] }
    }

    pub fn uniform(support: Vec<Vec<f64>>) -> Self {
        let w = 1.0 / support.len() as f64;
        let weights = vec![w; support.len()];
        Self { support, weights }
    }

    /// Normalizes nonnegative weights, dropping zero atoms. `None` if all vanish.
    pub fn from_unnormalized(support: &[Vec<f64>], nu: &[f64]) -> Option<Self> {
        let total: f64 = nu.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        let mut s = Vec::new();
        let mut w = Vec::new();
        for (p, &v) in support.iter().zip(nu) {
            if v > 0.0 {
                s.push(p.clone());
                w.push(v / total);
            }
        }
        Some(Self { support: s, weights: w })
    }

    /// `(Σ_j μ_j Φ(x, s_j)^r)^{1/r}`.
    pub fn lr_norm(&self, phi: &PhiMap, r: f64, x: &[f64]) -> f64 {
        let norm = if phi.needs_norm() { phi.base.norm_of(x) } else { 0.0 };
        let s: f64 = self.support.iter().zip(&self.weights).map(|(p, w)| w * phi.eval_with_norm(x, norm, p).powf(r)).sum();
        s.powf(1.0 / r)
    }

    /// Checks support membership in the dual ball of `space`.
    pub fn validate_in(&self, space: &FiniteSpace) -> Result<()> {
        for p in &self.support {
            if space.dual_norm(p)? > 1.0 + TOL_BALL {
                return Err(Error::InvalidParameter("measure support leaves the dual ball".into()));
            }
        }
        Ok(())
    }
}

/// Two-sided estimate of a summing constant with its certificates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummingReport {
    pub r: f64,
    pub lower_bound: f64,
    /// Family whose ratio gives `lower_bound`.
    pub lb_certificate: Vec<Vec<f64>>,
    pub upper_bound: f64,
    /// Pietsch measure: `||T x|| <= upper_bound (∫ Φ(x, ·)^r dμ)^{1/r}`.
    pub measure: DiscreteMeasure,
    pub gap: f64,
    pub flags: Vec<SipFlag>,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
}

impl SummingReport {
    /// Both bounds are proven and meet within `tol`.
    pub fn certified(&self, tol: f64) -> bool {
        self.gap <= tol * self.upper_bound.max(1.0)
            && !self.flags.iter().any(|f| matches!(f, SipFlag::HeuristicOracle | SipFlag::ApproxDenominator | SipFlag::DualityViolation))
    }

    pub fn has_flag(&self, f: &SipFlag) -> bool {
        self.flags.contains(f)
    }
}

/// Settings for [`summing_constant`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SummingConfig {
    pub sip: SipConfig,
    /// Dual mesh resolution for planar non-polyhedral spaces.
    pub mesh_resolution: usize,
    /// Cube-grid resolution of the dual mesh in dimension >= 3.
    pub grid_resolution: usize,
    /// Random restarts of the heuristic oracle.
    pub restarts: usize,
    /// Structured candidates refined per heuristic oracle call.
    pub top_k: usize,
    pub seed: u64,
}

impl Default for SummingConfig {
    fn default() -> Self {
        Self {
            sip: SipConfig::default(),
            mesh_resolution: 32,
            grid_resolution: 3,
            restarts: 32,
            top_k: 8,
            seed: optimize::DEFAULT_SEED,
        }
    }
}

impl SummingConfig {
    pub(crate) fn mesh_for(&self, dim: usize) -> usize {
        if dim <= 2 {
            self.mesh_resolution
        } else {
            self.grid_resolution
        }
    }
}

/// Supremum over the dual ball of a function `g` that is positively
/// homogeneous of degree `degree` (and convex when `convex`).
///
/// Exact over extreme points for polyhedral spaces with convex `g`; for
/// planar spaces with convex `g` a fine mesh maximum divided by
/// `coverage^degree` is a proven upper bound; otherwise a refined mesh
/// maximum is returned uncertified.
pub fn sup_over_dual_ball(space: &FiniteSpace, degree: f64, convex: bool, g: impl Fn(&[f64]) -> f64 + Sync) -> Denominator {
    if convex {
        if let Some(v) = space.dual_vertices() {
            let value = v.iter().map(|p| g(p)).fold(0.0, f64::max);
            return Denominator { value, certified: true };
        }
        if space.dim() <= 2 {
            let m = space.dual_ball_points(BallRequest::Mesh(256)).expect("mesh resolution is positive");
            if let Some(rho) = m.coverage {
                let value = m.points.iter().map(|p| g(p)).fold(0.0, f64::max) / rho.powf(degree);
                return Denominator { value, certified: true };
            }
        }
    }
    let res = if space.dim() <= 2 { 128 } else { 6 };
    let m = space.dual_ball_points(BallRequest::Mesh(res)).expect("mesh resolution is positive");
    let project = |y: &mut Vec<f64>| {
        let n = space.dual_norm_of(y);
        if n > 0.0 {
            y.iter_mut().for_each(|v| *v /= n);
        }
    };
    let refined = optimize::multistart_maximize(
        m.points,
        &g,
        &project,
        4,
        optimize::CompassOptions { initial_step: 0.05, min_step: 1e-10, max_evals: 4000 },
    );
    Denominator { value: refined.first().map_or(0.0, |r| r.1), certified: false }
}

/// `sup_{x*} (Σ_i |<x_i, x*>|^p)^{1/p}`: exact for polyhedral spaces, a mesh
/// lower bound otherwise.
pub fn weak_p_norm(family: &[Vec<f64>], p: f64, space: &FiniteSpace) -> Result<f64> {
    if family.is_empty() {
        return Ok(0.0);
    }
    for x in family {
        check_dim(space.dim(), x.len())?;
    }
    let g = |xs: &[f64]| family.iter().map(|x| dot(x, xs).abs().powf(p)).sum::<f64>();
    let d = if space.is_polyhedral() {
        sup_over_dual_ball(space, p, true, g)
    } else {
        // Lower-bound semantics: never divide by the coverage here.
        sup_over_dual_ball(space, p, false, g)
    };
    Ok(d.value.powf(1.0 / p))
}

/// Denominator `sup_{x*} Σ_i Φ(x_i, x*)^r` for a family.
pub(crate) fn phi_family_sup(phi: &PhiMap, r: f64, family: &[Vec<f64>]) -> Denominator {
    let norms: Vec<f64> = family.iter().map(|x| if phi.needs_norm() { phi.base.norm_of(x) } else { 0.0 }).collect();
    let g = |xs: &[f64]| family.iter().zip(&norms).map(|(x, &n)| phi.eval_with_norm(x, n, xs).powf(r)).sum::<f64>();
    sup_over_dual_ball(&phi.base, phi.dual_degree(r), phi.convex_power(r), g)
}

/// `(Σ_i ||T x_i||^r)^{1/r} / sup_{x*} (Σ_i Φ(x_i, x*)^r)^{1/r}`.
///
/// Any family gives a lower bound for the summing constant; the denominator
/// is computed as in [`sup_over_dual_ball`].
pub fn family_lower_bound(t: &LinearMap, phi: &PhiMap, r: f64, family: &[Vec<f64>]) -> Result<f64> {
    if family.is_empty() {
        return Err(Error::InvalidParameter("family must be nonempty".into()));
    }
    for x in family {
        check_dim(t.domain.dim(), x.len())?;
    }
    let num: f64 = family.iter().map(|x| t.image_norm(x).powf(r)).sum();
    if num == 0.0 {
        return Ok(0.0);
    }
    let den = phi_family_sup(phi, r, family);
    if den.value <= 0.0 {
        return Err(Error::ClassViolated { numerator: num.powf(1.0 / r) });
    }
    Ok((num / den.value).powf(1.0 / r))
}

fn check_setup(t: &LinearMap, phi: &PhiMap, r: f64) -> Result<()> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("exponent r = {r} must be finite and >= 1")));
    }
    if phi.base != t.domain {
        return Err(Error::InvalidParameter("Φ must act on the operator's domain".into()));
    }
    Ok(())
}

/// Dual support used for the measure: extreme points when `Φ^r` is convex
/// and the domain is polyhedral, a dual mesh otherwise. Points are kept up
/// to sign since every `Φ` here is even in `x*`.
pub(crate) fn measure_support(phi: &PhiMap, r: f64, cfg: &SummingConfig) -> Result<(Vec<Vec<f64>>, bool)> {
    let space = &phi.base;
    let exact = phi.convex_power(r) && space.is_polyhedral();
    let req = if exact { BallRequest::Exact } else { BallRequest::Mesh(cfg.mesh_for(space.dim())) };
    let mut pts = space.dual_ball_points(req)?.points;
    if let PhiKind::Anchored { x0 } = &phi.kind {
        pts.insert(0, x0.clone());
    }
    let mut seen = std::collections::HashSet::new();
    pts.retain(|p| {
        let neg = linalg::round_key(&linalg::scaled(p, -1.0));
        !seen.contains(&neg) && seen.insert(linalg::round_key(p))
    });
    Ok((pts, exact))
}

/// Computes the summing constant of `T` for `Φ` at exponent `r` by the
/// cutting-plane scheme.
pub fn summing_constant(t: &LinearMap, phi: &PhiMap, r: f64, cfg: &SummingConfig) -> Result<SummingReport> {
    check_setup(t, phi, r)?;
    let (support, _) = measure_support(phi, r, cfg)?;
    if t.is_zero() {
        return Ok(SummingReport {
            r,
            lower_bound: 0.0,
            lb_certificate: Vec::new(),
            upper_bound: 0.0,
            measure: DiscreteMeasure::delta(support[0].clone()),
            gap: 0.0,
            flags: Vec::new(),
            iterations: 0,
            history: Vec::new(),
        });
    }
    let prog = LinearProgram::new(t, phi, r, support.clone(), cfg);
    let rep = cutting_plane(&prog, &cfg.sip)?;
    let measure = DiscreteMeasure::from_unnormalized(&support, &rep.weights)
        .unwrap_or_else(|| DiscreteMeasure::delta(support[0].clone()));
    Ok(SummingReport {
        r,
        lower_bound: rep.lower_bound,
        lb_certificate: rep.lb_family,
        upper_bound: rep.upper_bound,
        measure,
        gap: rep.upper_bound - rep.lower_bound,
        flags: rep.flags,
        iterations: rep.iterations,
        history: rep.history,
    })
}

/// Outcome of a sampled inequality check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub max_residual: f64,
    pub pass: bool,
}

impl ResidualReport {
    pub(crate) fn from_residuals(residuals: impl Iterator<Item = f64>, tol: f64) -> Self {
        let max_residual = residuals.fold(f64::NEG_INFINITY, f64::max).max(0.0);
        Self { max_residual, pass: max_residual <= tol }
    }
}

/// Default absolute tolerance of the domination checks.
pub const TOL_CHECK: f64 = 1e-10;

/// Max over samples of `||T x|| - C (Σ_j μ_j Φ(x, s_j)^r)^{1/r}`.
pub fn check_domination(
    t: &LinearMap,
    phi: &PhiMap,
    r: f64,
    mu: &DiscreteMeasure,
    c: f64,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<ResidualReport> {
    check_setup(t, phi, r)?;
    for x in samples {
        check_dim(t.domain.dim(), x.len())?;
    }
    Ok(ResidualReport::from_residuals(samples.iter().map(|x| t.image_norm(x) - c * mu.lr_norm(phi, r, x)), tol))
}

/// Checks `||T x|| <= C ∫ |<x, ·>| d((δ_{x0*} + η) / 2)` on samples, the
/// arithmetic-geometric mean step that turns an anchored domination into an
/// absolutely summing one.
pub fn example3_mixing_check(
    t: &LinearMap,
    x0: &[f64],
    eta: &DiscreteMeasure,
    c: f64,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<ResidualReport> {
    check_dim(t.domain.dim(), x0.len())?;
    let mut support = vec![x0.to_vec()];
    support.extend(eta.support.iter().cloned());
    let mut weights = vec![0.5];
    weights.extend(eta.weights.iter().map(|w| 0.5 * w));
    let mixed = DiscreteMeasure { support, weights };
    let id = PhiMap::identity(t.domain.clone());
    check_domination(t, &id, 1.0, &mixed, c, samples, tol)
}

/// Deterministic random sample vectors on the unit sphere of `space`.
pub fn sample_sphere(space: &FiniteSpace, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = optimize::rng(seed);
    (0..count)
        .map(|_| {
            let v = optimize::random_vector(&mut rng, space.dim());
            let n = space.norm_of(&v);
            linalg::scaled(&v, 1.0 / n)
        })
        .collect()
}

#[cfg(test)]
mod tests;
