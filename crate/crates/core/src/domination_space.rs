//! The domination space of a Φ-abstract p-summing operator at finite scale.
//!
//! Given a measure `μ` on the dual ball and the gauge
//! `g(x) = (Σ_j μ_j Φ(x, s_j)^r)^{1/r}`, the seminorm is
//!
//! ```text
//! ||x||_Φ = inf { Σ_i g(x_i) : x = Σ_i x_i }
//! ```
//!
//! and the quotient by its null space carries `T̂([x]) = T x`. Finite quotients
//! are complete, so no completion step is needed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::linear_summing::{sample_sphere, weak_p_norm, DiscreteMeasure, PhiKind, PhiMap, ResidualReport, SummingReport};
use crate::operators::LinearMap;
use crate::optimize::{self, CompassOptions};
use crate::spaces::FiniteSpace;

/// Relative threshold below which a seminorm value counts as zero.
pub const TOL_NULL: f64 = 1e-8;

/// Decomposition search settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeminormConfig {
    /// Largest number of pieces tried.
    pub k_max: usize,
    /// Multi-starts shared over the piece counts `2..=k_max`.
    pub starts: usize,
    pub subgradient_steps: usize,
    pub seed: u64,
}

impl Default for SeminormConfig {
    fn default() -> Self {
        Self { k_max: 4, starts: 64, subgradient_steps: 150, seed: optimize::DEFAULT_SEED }
    }
}

/// A decomposition `x = Σ pieces` and its cost `Σ g(piece)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub value: f64,
    pub pieces: Vec<Vec<f64>>,
}

/// The quotient model: gauge data plus the null space of the seminorm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationSpaceModel {
    pub base: FiniteSpace,
    pub phi: PhiMap,
    pub measure: DiscreteMeasure,
    pub r: f64,
    /// Orthonormal basis of `{x : ||x||_Φ = 0}`.
    pub null_basis: Vec<Vec<f64>>,
    /// Largest sampled `||x||_Φ / ||x||`; at most the bound of Φ.
    pub continuity_constant: f64,
    pub cfg: SeminormConfig,
}

/// Sampled summary for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub null_dim: usize,
    pub continuity_constant: f64,
    /// `(x, ||x||_Φ)` on a few sample points.
    pub table: Vec<(Vec<f64>, f64)>,
}

impl DominationSpaceModel {
    /// `(Σ_j μ_j Φ(x, s_j)^r)^{1/r}`.
    pub fn gauge(&self, x: &[f64]) -> f64 {
        self.measure.lr_norm(&self.phi, self.r, x)
    }

    pub fn seminorm(&self, x: &[f64]) -> Result<f64> {
        Ok(self.decompose(x, &[])?.value)
    }

    /// Best decomposition found, also trying each seed (any number of pieces).
    pub fn decompose(&self, x: &[f64], seeds: &[Vec<Vec<f64>>]) -> Result<Decomposition> {
        check_dim(self.base.dim(), x.len())?;
        for s in seeds {
            for p in s {
                check_dim(self.base.dim(), p.len())?;
            }
        }
        let mut best = search(self, x)?;
        for s in seeds {
            let value: f64 = s.iter().map(|p| self.gauge(p)).sum();
            if value < best.value {
                best = Decomposition { value, pieces: s.clone() };
            }
        }
        Ok(best)
    }

    pub fn null_dim(&self) -> usize {
        self.null_basis.len()
    }

    /// Canonical representative of `[x]`: the component orthogonal to the null space.
    pub fn representative(&self, x: &[f64]) -> Vec<f64> {
        linalg::project_out(x, &self.null_basis)
    }

    pub fn summary(&self, samples: usize) -> Result<ModelSummary> {
        let xs = sample_sphere(&self.base, samples, self.cfg.seed);
        let table = xs
            .into_iter()
            .map(|x| {
                let v = self.seminorm(&x)?;
                Ok((x, v))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelSummary { null_dim: self.null_dim(), continuity_constant: self.continuity_constant, table })
    }
}

/// `||x||_Φ` with decompositions of at most `k_max` pieces.
pub fn seminorm(x: &[f64], model: &DominationSpaceModel, k_max: usize) -> Result<f64> {
    if k_max == 0 {
        return Err(Error::InvalidParameter("k_max must be at least 1".into()));
    }
    let mut m = model.clone();
    m.cfg.k_max = k_max;
    m.seminorm(x)
}

fn search(model: &DominationSpaceModel, x: &[f64]) -> Result<Decomposition> {
    let cfg = &model.cfg;
    if cfg.k_max == 0 {
        return Err(Error::InvalidParameter("k_max must be at least 1".into()));
    }
    let scale = linalg::max_abs(x);
    let trivial = Decomposition { value: model.gauge(x), pieces: vec![x.to_vec()] };
    // The gauge is itself a seminorm for the identity, so one piece is optimal.
    if scale == 0.0 || trivial.value == 0.0 || cfg.k_max == 1 || model.phi.is_identity_like() {
        return Ok(trivial);
    }
    // Work on a sign- and scale-normalized copy so that the result is exactly
    // homogeneous in x.
    let lead = x.iter().find(|v| **v != 0.0).copied().unwrap_or(1.0);
    let factor = scale * lead.signum();
    let u = linalg::scaled(x, 1.0 / factor);
    let n = u.len();

    let mut starts: Vec<(usize, Vec<f64>)> = Vec::new();
    let ks: Vec<usize> = (2..=cfg.k_max).collect();
    let per_k = (cfg.starts / ks.len()).max(1);
    let mut rng = optimize::rng(cfg.seed);
    for &k in &ks {
        let m = (k - 1) * n;
        // Coordinate split: piece i carries coordinate i.
        let mut split = vec![0.0; m];
        for i in 0..(k - 1).min(n) {
            split[i * n + i] = u[i];
        }
        starts.push((k, split));
        for _ in 1..per_k {
            let z: Vec<f64> = optimize::random_vector(&mut rng, m).into_iter().map(|v| 0.5 * v).collect();
            starts.push((k, z));
        }
    }

    let results: Vec<(f64, usize, Vec<f64>)> = starts
        .par_iter()
        .enumerate()
        .map(|(i, (k, z0))| {
            let (z, v) = minimize_pieces(model, &u, *k, z0, cfg.subgradient_steps);
            (v, i, z)
        })
        .collect();
    let best = results.into_iter().min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out = Decomposition { value: model.gauge(&u), pieces: vec![u.clone()] };
    if let Some((v, i, z)) = best {
        if v < out.value {
            out = Decomposition { value: v, pieces: unpack(&u, &z, starts[i].0) };
        }
    }
    Ok(Decomposition {
        value: out.value * factor.abs(),
        pieces: out.pieces.iter().map(|p| linalg::scaled(p, factor)).collect(),
    })
}

fn unpack(x: &[f64], z: &[f64], k: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut pieces: Vec<Vec<f64>> = z.chunks(n).map(|c| c.to_vec()).collect();
    let mut last = x.to_vec();
    for p in &pieces {
        last = linalg::sub(&last, p);
    }
    pieces.push(last);
    debug_assert_eq!(pieces.len(), k);
    pieces
}

fn pieces_cost(model: &DominationSpaceModel, x: &[f64], z: &[f64]) -> f64 {
    let n = x.len();
    let mut last = x.to_vec();
    let mut total = 0.0;
    for c in z.chunks(n) {
        total += model.gauge(c);
        for (l, v) in last.iter_mut().zip(c) {
            *l -= v;
        }
    }
    total + model.gauge(&last)
}

/// Subgradient descent with diminishing steps, then a compass polish.
fn minimize_pieces(model: &DominationSpaceModel, x: &[f64], k: usize, z0: &[f64], steps: usize) -> (Vec<f64>, f64) {
    let f = |z: &[f64]| pieces_cost(model, x, z);
    let m = z0.len();
    debug_assert_eq!(m, (k - 1) * x.len());
    let mut z = z0.to_vec();
    let mut best = (z.clone(), f(&z));
    let h = 1e-7;
    for t in 0..steps {
        let mut grad = vec![0.0; m];
        for i in 0..m {
            let mut a = z.clone();
            let mut b = z.clone();
            a[i] += h;
            b[i] -= h;
            grad[i] = (f(&a) - f(&b)) / (2.0 * h);
        }
        let gn = linalg::norm2(&grad);
        if gn == 0.0 || !gn.is_finite() {
            break;
        }
        let step = 0.5 / ((t + 1) as f64).sqrt();
        for (zi, gi) in z.iter_mut().zip(&grad) {
            *zi -= step * gi / gn;
        }
        let v = f(&z);
        if v < best.1 {
            best = (z.clone(), v);
        }
    }
    let neg = |z: &[f64]| -f(z);
    let (zc, vc) = optimize::compass_maximize(
        &best.0,
        &neg,
        &|_: &mut Vec<f64>| {},
        CompassOptions { initial_step: 0.05, min_step: 1e-12, max_evals: 3000 },
    );
    if -vc < best.1 {
        (zc, -vc)
    } else {
        best
    }
}

/// Null space of the seminorm: the span of the gauge's zero set.
fn gauge_null_space(phi: &PhiMap, measure: &DiscreteMeasure) -> Vec<Vec<f64>> {
    let n = phi.base.dim();
    let active: Vec<Vec<f64>> =
        measure.support.iter().zip(&measure.weights).filter(|(_, w)| **w > 0.0).map(|(s, _)| s.clone()).collect();
    let common = linalg::null_space(&active, n, 1e-12);
    match &phi.kind {
        // Φ(x, s) = 0 iff <x, x0*> = 0 or <x, s> = 0.
        PhiKind::Anchored { x0 } => {
            let mut gens = linalg::null_space(&[x0.clone()], n, 1e-12);
            gens.extend(common);
            linalg::span_basis(&gens, n, 1e-12)
        }
        _ => common,
    }
}

/// Builds the model, detecting the null space and the continuity constant.
pub fn build_model(
    x: &FiniteSpace,
    phi: &PhiMap,
    measure: &DiscreteMeasure,
    r: f64,
    cfg: SeminormConfig,
) -> Result<DominationSpaceModel> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("exponent r = {r} must be finite and >= 1")));
    }
    if phi.base != *x {
        return Err(Error::InvalidParameter("Φ must act on the base space".into()));
    }
    for s in &measure.support {
        check_dim(x.dim(), s.len())?;
    }
    let candidates = gauge_null_space(phi, measure);
    let mut model = DominationSpaceModel {
        base: x.clone(),
        phi: phi.clone(),
        measure: measure.clone(),
        r,
        null_basis: Vec::new(),
        continuity_constant: 0.0,
        cfg,
    };
    // Keep only candidates whose combinations on a small grid really vanish.
    let mut grid = candidates.clone();
    for (i, a) in candidates.iter().enumerate() {
        for b in &candidates[i + 1..] {
            grid.push(linalg::add(a, b));
            grid.push(linalg::sub(a, b));
        }
    }
    let mut null = Vec::new();
    for v in &grid {
        if model.seminorm(v)? <= TOL_NULL * x.norm_of(v) {
            null.push(v.clone());
        }
    }
    model.null_basis = linalg::span_basis(&null, x.dim(), 1e-10);
    let samples = sample_sphere(x, 24, cfg.seed ^ 0x9e37);
    let mut c: f64 = 0.0;
    for s in &samples {
        c = c.max(model.seminorm(s)? / x.norm_of(s));
    }
    model.continuity_constant = c;
    Ok(model)
}

/// `T = T̂ ∘ i`, with `T̂([x]) = T(rep x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factorization {
    pub model: DominationSpaceModel,
    pub t: LinearMap,
    /// `||T̂([x])|| <= norm_bound ||[x]||_Φ`.
    pub norm_bound: f64,
}

impl Factorization {
    /// `T̂` applied to the class of `x`.
    pub fn apply_hat(&self, x: &[f64]) -> Vec<f64> {
        self.t.apply(&self.model.representative(x))
    }
}

/// Builds `T̂` from a certified summing report computed with `phi`.
pub fn build_factorization(
    t: &LinearMap,
    phi: &PhiMap,
    report: &SummingReport,
    tol_duality: f64,
    cfg: SeminormConfig,
) -> Result<Factorization> {
    if report.gap > tol_duality * report.upper_bound.max(1.0) {
        return Err(Error::Uncertified(format!("gap {} exceeds tolerance", report.gap)));
    }
    let model = build_model(&t.domain, phi, &report.measure, report.r, cfg)?;
    let scale = t.op_norm(crate::operators::OpNormMode::Exact).unwrap_or(1.0).max(1.0);
    for nvec in &model.null_basis {
        let leak = t.image_norm(nvec);
        if leak > 1e-8 * scale {
            return Err(Error::ClassViolated { numerator: leak });
        }
    }
    Ok(Factorization { model, t: t.clone(), norm_bound: report.upper_bound })
}

/// The two diagram residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramReport {
    /// `max ||T x - T̂([x])||`.
    pub commute: f64,
    /// `max (||T̂([x])|| - norm_bound ||x||_Φ)_+`.
    pub bound: f64,
    pub pass: bool,
}

pub fn verify_diagram(f: &Factorization, samples: &[Vec<f64>], tol: f64) -> Result<DiagramReport> {
    let mut commute: f64 = 0.0;
    let mut bound: f64 = 0.0;
    for x in samples {
        check_dim(f.t.domain.dim(), x.len())?;
        let tx = f.t.apply(x);
        let hat = f.apply_hat(x);
        commute = commute.max(linalg::max_abs(&linalg::sub(&tx, &hat)));
        let lhs = f.t.codomain.norm_of(&hat);
        if lhs > 0.0 {
            bound = bound.max(lhs - f.norm_bound * f.model.seminorm(x)?);
        }
    }
    Ok(DiagramReport { commute, bound, pass: commute <= tol && bound <= tol })
}

/// Well-definedness: moving a representative along the null space does not
/// change `T̂`.
pub fn check_well_defined(f: &Factorization, samples: &[Vec<f64>], tol: f64) -> Result<ResidualReport> {
    let mut res = Vec::new();
    for x in samples {
        check_dim(f.t.domain.dim(), x.len())?;
        for (i, nvec) in f.model.null_basis.iter().enumerate() {
            let shifted = linalg::add(x, &linalg::scaled(nvec, 1.0 + i as f64));
            res.push(linalg::max_abs(&linalg::sub(&f.t.apply(&shifted), &f.t.apply(x))));
        }
    }
    Ok(ResidualReport::from_residuals(res.into_iter().chain(std::iter::once(0.0)), tol))
}

/// Largest ratio `(Σ ||x_i||_Φ^p)^{1/p} / sup_{x*} (Σ |<x_i, x*>|^p)^{1/p}`
/// over the families, a lower bound for the p-concavity constant of the
/// quotient map. Families with zero denominator are skipped.
pub fn p_concavity_ratio(model: &DominationSpaceModel, p: f64, families: &[Vec<Vec<f64>>]) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must be >= 1")));
    }
    let mut best: f64 = 0.0;
    for fam in families {
        let den = weak_p_norm(fam, p, &model.base)?;
        if den <= 0.0 {
            continue;
        }
        let mut num = 0.0;
        for x in fam {
            num += model.seminorm(x)?.powf(p);
        }
        best = best.max(num.powf(1.0 / p) / den);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_summing::{summing_constant, SummingConfig};

    fn quick() -> SeminormConfig {
        SeminormConfig { starts: 16, ..SeminormConfig::default() }
    }

    #[test]
    fn identity_seminorm_is_the_gauge() {
        let sp = FiniteSpace::l1(2);
        let mu = DiscreteMeasure::uniform(vec![vec![1.0, 1.0], vec![1.0, -1.0]]);
        let m = build_model(&sp, &PhiMap::identity(sp.clone()), &mu, 2.0, quick()).unwrap();
        assert_eq!(m.null_dim(), 0);
        let x = vec![0.3, -0.8];
        assert_eq!(m.seminorm(&x).unwrap(), m.gauge(&x));
        assert_eq!(m.seminorm(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn delta_measure_kills_the_orthogonal_line() {
        let sp = FiniteSpace::l1(2);
        let m = build_model(&sp, &PhiMap::identity(sp.clone()), &DiscreteMeasure::delta(vec![1.0, 0.0]), 1.0, quick())
            .unwrap();
        assert_eq!(m.null_dim(), 1);
        assert!(m.null_basis[0][0].abs() < 1e-12 && (m.null_basis[0][1].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_seminorm_matches_a_grid_search() {
        let sp = FiniteSpace::linf(2);
        let phi = PhiMap::sigma_interp(sp.clone(), 0.5).unwrap();
        let cfg = SeminormConfig { k_max: 2, ..SeminormConfig::default() };
        let m = build_model(&sp, &phi, &DiscreteMeasure::delta(vec![1.0, 0.0]), 2.0, cfg).unwrap();
        let x = [1.0, 1.0];
        let got = m.seminorm(&x).unwrap();
        let mut grid = f64::INFINITY;
        let steps = 2000;
        for i in 0..=steps {
            for j in 0..=steps {
                let a = [-1.0 + 2.0 * i as f64 / steps as f64 * 1.5, -1.0 + 2.0 * j as f64 / steps as f64 * 1.5];
                let b = [x[0] - a[0], x[1] - a[1]];
                grid = grid.min(m.gauge(&a) + m.gauge(&b));
            }
        }
        assert!((got - grid).abs() < 1e-6, "{got} vs {grid}");
    }

    #[test]
    fn rank_one_factorization() {
        let dom = FiniteSpace::l1(2);
        let astar = vec![1.0, -0.5];
        let y = vec![2.0, 1.0];
        let t = LinearMap::rank_one(dom.clone(), FiniteSpace::l2(2), &astar, &y).unwrap();
        let rep = summing_constant(&t, &PhiMap::identity(dom.clone()), 1.0, &SummingConfig::default()).unwrap();
        let f = build_factorization(&t, &PhiMap::identity(dom.clone()), &rep, 1e-6, quick()).unwrap();
        assert!((f.norm_bound - 5f64.sqrt()).abs() < 1e-8);
        let samples = sample_sphere(&dom, 100, 7);
        let d = verify_diagram(&f, &samples, 1e-9).unwrap();
        assert!(d.pass, "{d:?}");
        assert!(check_well_defined(&f, &samples, 1e-9).unwrap().pass);
        let mut broken = f.clone();
        broken.norm_bound /= 2.0;
        assert!(verify_diagram(&broken, &samples, 1e-9).unwrap().bound > 0.0);
    }
}
