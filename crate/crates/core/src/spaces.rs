//! Finite-dimensional real normed spaces with computable dual balls.
//!
//! Two families are supported: `l_q^n` for `q` in `[1, inf]`, and polytope
//! norms `||x|| = max_j |<x, f_j>|` given by a finite symmetric facet set.
//! `l_1` and `l_inf` are treated as polyhedral with their canonical facets, so
//! every supremum of a convex function over their dual balls is a finite
//! maximum over extreme points.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, dot, round_key};

/// Tolerance for dual-ball membership checks.
pub const TOL_BALL: f64 = 1e-9;

/// Upper limit on `C(pairs, dim) * 2^dim` linear solves during vertex enumeration.
const VERTEX_BUDGET: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum NormKind {
    /// `l_q` norm; `q = f64::INFINITY` is the max norm.
    Lq(f64),
    /// `||x|| = max_j |<x, f_j>|` over the (negation-closed, pruned) facet list.
    Polytope(Vec<Vec<f64>>),
}

/// A finite-dimensional real normed space in its canonical basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceSpec", into = "SpaceSpec")]
pub struct FiniteSpace {
    dim: usize,
    kind: NormKind,
    label: String,
    /// Extreme points of the unit ball, when polyhedral.
    primal_vertices: Option<Vec<Vec<f64>>>,
    /// Extreme points of the dual unit ball, when polyhedral.
    dual_vertices: Option<Vec<Vec<f64>>>,
}

/// Serialized form of a [`FiniteSpace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub kind: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Exponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub facets: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub label: String,
}

/// A real exponent that may be written as the string `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Exponent {
    Num(f64),
    Text(String),
}

impl Exponent {
    pub fn value(&self) -> Result<f64> {
        match self {
            Exponent::Num(v) => Ok(*v),
            Exponent::Text(s) if s.eq_ignore_ascii_case("inf") => Ok(f64::INFINITY),
            Exponent::Text(s) => Err(Error::InvalidParameter(format!("bad exponent `{s}`"))),
        }
    }
}

impl TryFrom<SpaceSpec> for FiniteSpace {
    type Error = Error;

    fn try_from(spec: SpaceSpec) -> Result<Self> {
        let space = match spec.kind.as_str() {
            "lq" => {
                let q = spec
                    .q
                    .as_ref()
                    .ok_or_else(|| Error::InvalidParameter("lq space needs `q`".into()))?
                    .value()?;
                FiniteSpace::lq(spec.dim, q)?
            }
            "polytope" => {
                let facets = spec
                    .facets
                    .ok_or_else(|| Error::InvalidParameter("polytope space needs `facets`".into()))?;
                for f in &facets {
                    check_dim(spec.dim, f.len())?;
                }
                FiniteSpace::polytope(spec.dim, facets)?
            }
            other => return Err(Error::InvalidParameter(format!("unknown space kind `{other}`"))),
        };
        Ok(if spec.label.is_empty() { space } else { space.with_label(&spec.label) })
    }
}

impl From<FiniteSpace> for SpaceSpec {
    fn from(s: FiniteSpace) -> Self {
        match &s.kind {
            NormKind::Lq(q) => SpaceSpec {
                kind: "lq".into(),
                dim: s.dim,
                q: Some(if q.is_infinite() { Exponent::Text("inf".into()) } else { Exponent::Num(*q) }),
                facets: None,
                label: s.label.clone(),
            },
            NormKind::Polytope(f) => SpaceSpec {
                kind: "polytope".into(),
                dim: s.dim,
                q: None,
                facets: Some(f.clone()),
                label: s.label.clone(),
            },
        }
    }
}

/// How a dual ball was discretized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exactness {
    /// Every extreme point of the dual ball is present.
    ExtremeExact,
    /// Deterministic angular/grid mesh of the dual sphere.
    Mesh { resolution: usize },
}

/// Finite point model of the dual unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualBallModel {
    pub points: Vec<Vec<f64>>,
    pub exactness: Exactness,
    /// Largest `rho` with `rho * B_{X*}` inside the convex hull of `points`,
    /// when known. Sup of a sublinear function over the ball is at most the
    /// max over `points` divided by `rho`.
    pub coverage: Option<f64>,
}

/// Which dual-ball model to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BallRequest {
    Exact,
    Mesh(usize),
}

impl FiniteSpace {
    /// `l_q^dim`; `q` may be `f64::INFINITY`.
    pub fn lq(dim: usize, q: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if !(q >= 1.0) {
            return Err(Error::InvalidParameter(format!("q = {q} must lie in [1, inf]")));
        }
        let label = if q.is_infinite() { format!("linf^{dim}") } else { format!("l{q}^{dim}") };
        let (primal_vertices, dual_vertices) = if q == 1.0 {
            if dim > 16 {
                return Err(Error::Budget(format!("l1^{dim} has too many dual extreme points")));
            }
            (Some(signed_basis(dim)), Some(sign_vectors(dim)))
        } else if q.is_infinite() {
            if dim > 16 {
                return Err(Error::Budget(format!("linf^{dim} has too many extreme points")));
            }
            (Some(sign_vectors(dim)), Some(signed_basis(dim)))
        } else {
            (None, None)
        };
        Ok(Self { dim, kind: NormKind::Lq(q), label, primal_vertices, dual_vertices })
    }

    pub fn l1(dim: usize) -> Self {
        Self::lq(dim, 1.0).expect("valid l1 space")
    }

    pub fn l2(dim: usize) -> Self {
        Self::lq(dim, 2.0).expect("valid l2 space")
    }

    pub fn linf(dim: usize) -> Self {
        Self::lq(dim, f64::INFINITY).expect("valid linf space")
    }

    /// Polytope norm `||x|| = max_j |<x, f_j>|`.
    ///
    /// The facet list is closed under negation, zero and duplicate facets are
    /// dropped, and facets that do not support a facet of the unit ball are
    /// pruned (they never attain the maximum).
    pub fn polytope(dim: usize, facets: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let mut pairs: Vec<Vec<f64>> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for f in facets {
            check_dim(dim, f.len())?;
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("facet entries must be finite".into()));
            }
            if linalg::max_abs(&f) == 0.0 {
                continue;
            }
            let neg: Vec<f64> = f.iter().map(|v| -v).collect();
            if seen.contains(&round_key(&f)) || seen.contains(&round_key(&neg)) {
                continue;
            }
            seen.insert(round_key(&f));
            pairs.push(f);
        }
        if linalg::rank(&pairs, dim, 1e-12) < dim {
            return Err(Error::InvalidParameter(
                "facets do not define a norm (unit ball is unbounded)".into(),
            ));
        }
        let vertices = enumerate_vertices(dim, &pairs)?;
        // A facet normal is an extreme point of the dual ball iff the face it
        // exposes on the primal ball has full affine dimension.
        let mut kept = Vec::new();
        for f in &pairs {
            let on_face: Vec<Vec<f64>> =
                vertices.iter().filter(|v| dot(v, f) >= 1.0 - 1e-9).cloned().collect();
            if linalg::rank(&on_face, dim, 1e-9) == dim {
                kept.push(f.clone());
            }
        }
        let mut dual: Vec<Vec<f64>> = Vec::with_capacity(2 * kept.len());
        for f in &kept {
            dual.push(f.clone());
            dual.push(f.iter().map(|v| -v).collect());
        }
        Ok(Self {
            dim,
            label: format!("polytope^{dim}"),
            kind: NormKind::Polytope(dual.clone()),
            primal_vertices: Some(vertices),
            dual_vertices: Some(dual),
        })
    }

    /// Polytope norm from facets and a generating set of the primal ball that
    /// are already known (used for projective tensor balls, whose vertices are
    /// elementary tensors of factor vertices). Both lists are closed under
    /// negation here; no pruning is done.
    pub(crate) fn polytope_from_parts(dim: usize, facets: Vec<Vec<f64>>, vertices: Vec<Vec<f64>>) -> Self {
        let close = |mut pts: Vec<Vec<f64>>| {
            let negs: Vec<Vec<f64>> = pts.iter().map(|p| linalg::scaled(p, -1.0)).collect();
            pts.extend(negs);
            dedup(&mut pts);
            pts
        };
        let facets = close(facets);
        Self {
            dim,
            label: format!("polytope^{dim}"),
            kind: NormKind::Polytope(facets.clone()),
            primal_vertices: Some(close(vertices)),
            dual_vertices: Some(facets),
        }
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.to_string();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_polyhedral(&self) -> bool {
        self.primal_vertices.is_some()
    }

    /// `Some(q)` for `l_q` spaces.
    pub fn lq_exponent(&self) -> Option<f64> {
        match self.kind {
            NormKind::Lq(q) => Some(q),
            NormKind::Polytope(_) => None,
        }
    }

    /// Extreme points of the unit ball (polyhedral spaces only).
    pub fn primal_vertices(&self) -> Option<&[Vec<f64>]> {
        self.primal_vertices.as_deref()
    }

    /// Extreme points of the dual unit ball (polyhedral spaces only).
    pub fn dual_vertices(&self) -> Option<&[Vec<f64>]> {
        self.dual_vertices.as_deref()
    }

    /// Facets `f` with `||x|| = max_f <x, f>`, for polyhedral spaces.
    pub fn facets(&self) -> Option<&[Vec<f64>]> {
        self.dual_vertices()
    }

    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.norm_of(x))
    }

    /// Norm without the dimension check.
    pub(crate) fn norm_of(&self, x: &[f64]) -> f64 {
        match &self.kind {
            NormKind::Lq(q) => lq_norm(x, *q),
            NormKind::Polytope(f) => f.iter().map(|f| dot(x, f).abs()).fold(0.0, f64::max),
        }
    }

    pub fn dual_norm(&self, xstar: &[f64]) -> Result<f64> {
        check_dim(self.dim, xstar.len())?;
        Ok(self.dual_norm_of(xstar))
    }

    pub(crate) fn dual_norm_of(&self, xstar: &[f64]) -> f64 {
        match &self.kind {
            NormKind::Lq(q) => lq_norm(xstar, conjugate(*q)),
            NormKind::Polytope(_) => self
                .primal_vertices
                .as_ref()
                .expect("polytope spaces cache their vertices")
                .iter()
                .map(|v| dot(v, xstar).abs())
                .fold(0.0, f64::max),
        }
    }

    /// Finite model of `B_{X*}`.
    pub fn dual_ball_points(&self, request: BallRequest) -> Result<DualBallModel> {
        match request {
            BallRequest::Exact => {
                let pts = self.dual_vertices.clone().ok_or_else(|| {
                    Error::RequiresPolyhedral(format!("{} has no finite dual extreme point set", self.label))
                })?;
                Ok(DualBallModel { points: pts, exactness: Exactness::ExtremeExact, coverage: Some(1.0) })
            }
            BallRequest::Mesh(resolution) => {
                if resolution == 0 {
                    return Err(Error::InvalidParameter("mesh resolution must be >= 1".into()));
                }
                let mut points: Vec<Vec<f64>> = self.dual_vertices.clone().unwrap_or_default();
                for d in sphere_directions(self.dim, resolution) {
                    let n = self.dual_norm_of(&d);
                    points.push(d.iter().map(|v| v / n).collect());
                }
                dedup(&mut points);
                let coverage = if self.dual_vertices.is_some() {
                    Some(1.0)
                } else {
                    hull_inner_radius(&points, |p| self.dual_norm_of(p))
                };
                Ok(DualBallModel { points, exactness: Exactness::Mesh { resolution }, coverage })
            }
        }
    }

    /// Deterministic points on the primal unit sphere: the extreme points when
    /// polyhedral, followed by a normalized direction mesh.
    pub fn primal_sphere_points(&self, resolution: usize) -> Vec<Vec<f64>> {
        let mut points: Vec<Vec<f64>> = self.primal_vertices.clone().unwrap_or_default();
        for d in sphere_directions(self.dim, resolution.max(1)) {
            let n = self.norm_of(&d);
            points.push(d.iter().map(|v| v / n).collect());
        }
        dedup(&mut points);
        points
    }

    /// Inner radius of the primal mesh hull, for turning mesh maxima of
    /// sublinear functions into upper bounds.
    pub fn primal_mesh_coverage(&self, resolution: usize) -> Option<f64> {
        if self.is_polyhedral() {
            return Some(1.0);
        }
        hull_inner_radius(&self.primal_sphere_points(resolution), |p| self.norm_of(p))
    }

    /// A functional of dual norm one attaining `<x, x*> = ||x||`.
    ///
    /// Polyhedral spaces pick the lexicographically smallest maximizing dual
    /// extreme point.
    pub fn norming_functional(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        let n = self.norm_of(x);
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        if let Some(dv) = &self.dual_vertices {
            let best = dv.iter().map(|p| dot(x, p)).fold(f64::NEG_INFINITY, f64::max);
            let tol = 1e-12 * n.max(1.0);
            let mut cands: Vec<&Vec<f64>> = dv.iter().filter(|p| dot(x, p) >= best - tol).collect();
            cands.sort_by(|a, b| lex_cmp(a, b));
            return Ok(cands[0].clone());
        }
        let q = self.lq_exponent().expect("non-polyhedral spaces are l_q");
        let scale = n.powf(q - 1.0);
        Ok(x.iter().map(|v| v.signum() * v.abs().powf(q - 1.0) / scale).collect())
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

/// Conjugate exponent `q' = q / (q - 1)`.
pub fn conjugate(q: f64) -> f64 {
    if q == 1.0 {
        f64::INFINITY
    } else if q.is_infinite() {
        1.0
    } else {
        q / (q - 1.0)
    }
}

/// `(sum |x_i|^q)^{1/q}`, computed with a max-rescaling for stability.
pub fn lq_norm(x: &[f64], q: f64) -> f64 {
    if q == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    let m = linalg::max_abs(x);
    if q.is_infinite() || m == 0.0 {
        return m;
    }
    if q == 2.0 {
        return m * x.iter().map(|v| (v / m) * (v / m)).sum::<f64>().sqrt();
    }
    m * x.iter().map(|v| (v.abs() / m).powf(q)).sum::<f64>().powf(1.0 / q)
}

fn signed_basis(n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        out.push(linalg::unit(n, i));
        out.push(linalg::scaled(&linalg::unit(n, i), -1.0));
    }
    out
}

fn sign_vectors(n: usize) -> Vec<Vec<f64>> {
    (0..1usize << n)
        .map(|mask| (0..n).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect())
        .collect()
}

fn dedup(points: &mut Vec<Vec<f64>>) {
    let mut seen = std::collections::HashSet::new();
    points.retain(|p| seen.insert(round_key(p)));
}

/// Vertices of `{x : |<x, f>| <= 1 for f in pairs}` by brute-force basis
/// enumeration. `pairs` holds one representative per `+-f` pair.
pub(crate) fn enumerate_vertices(dim: usize, pairs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let work = linalg::binomial(pairs.len(), dim).saturating_mul(1usize << dim.min(60));
    if work > VERTEX_BUDGET {
        return Err(Error::Budget(format!(
            "vertex enumeration over {} facet pairs in dimension {dim}",
            pairs.len()
        )));
    }
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    linalg::for_each_subset(pairs.len(), dim, |subset| {
        let a: Vec<Vec<f64>> = subset.iter().map(|&i| pairs[i].clone()).collect();
        if linalg::rank(&a, dim, 1e-10) < dim {
            return;
        }
        for mask in 0..1usize << dim {
            let b: Vec<f64> = (0..dim).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
            let Some(x) = linalg::solve(&a, &b) else { continue };
            if pairs.iter().all(|f| dot(&x, f).abs() <= 1.0 + 1e-9) && seen.insert(round_key(&x)) {
                out.push(x);
            }
        }
    });
    Ok(out)
}

/// Deterministic, seed-free directions on the sphere of `R^dim`.
///
/// Dimension 2 uses `2 * resolution` equally spaced angles; higher dimensions
/// use the integer points of the cube surface `max_i |c_i| = resolution`.
/// Both are nested when the resolution doubles.
pub fn sphere_directions(dim: usize, resolution: usize) -> Vec<Vec<f64>> {
    match dim {
        0 => Vec::new(),
        1 => vec![vec![1.0], vec![-1.0]],
        2 => {
            let n = 2 * resolution;
            (0..n)
                .map(|k| {
                    let g = gcd(k, n);
                    let (num, den) = (k / g, n / g);
                    let theta = 2.0 * PI * num as f64 / den as f64;
                    vec![theta.cos(), theta.sin()]
                })
                .collect()
        }
        _ => {
            let r = resolution as i64;
            let side = (2 * r + 1) as usize;
            let total = side.pow(dim as u32);
            let mut out = Vec::new();
            for idx in 0..total {
                let mut rem = idx;
                let mut c = Vec::with_capacity(dim);
                for _ in 0..dim {
                    c.push((rem % side) as i64 - r);
                    rem /= side;
                }
                if c.iter().any(|v| v.abs() == r) {
                    out.push(c.iter().map(|&v| v as f64 / r as f64).collect());
                }
            }
            out
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

/// Inner radius (w.r.t. `gauge`) of the convex hull of planar points that lie
/// on the gauge's unit sphere. `None` outside dimension 1 and 2.
pub fn hull_inner_radius(points: &[Vec<f64>], gauge: impl Fn(&[f64]) -> f64) -> Option<f64> {
    let dim = points.first()?.len();
    match dim {
        1 => Some(1.0),
        2 => {
            let mut by_angle: Vec<(f64, &Vec<f64>)> =
                points.iter().map(|p| (p[1].atan2(p[0]), p)).collect();
            by_angle.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut rho = f64::INFINITY;
            for k in 0..by_angle.len() {
                let (ta, a) = by_angle[k];
                let (tb, b) = by_angle[(k + 1) % by_angle.len()];
                let gap = if k + 1 == by_angle.len() { tb + 2.0 * PI - ta } else { tb - ta };
                if gap >= PI - 1e-12 {
                    return None;
                }
                // The gauge is convex along the segment: ternary search its minimum.
                let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
                let seg = |t: f64| gauge(&[a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                for _ in 0..100 {
                    let m1 = lo + (hi - lo) / 3.0;
                    let m2 = hi - (hi - lo) / 3.0;
                    if seg(m1) <= seg(m2) {
                        hi = m2;
                    } else {
                        lo = m1;
                    }
                }
                rho = rho.min(seg(0.5 * (lo + hi)));
            }
            Some(rho)
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn norms_of_the_reference_vectors() {
        assert!(close(FiniteSpace::l1(2).norm(&[3.0, -4.0]).unwrap(), 7.0));
        assert!(close(FiniteSpace::linf(2).norm(&[3.0, -4.0]).unwrap(), 4.0));
        let hex = FiniteSpace::polytope(2, vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert!(close(hex.norm(&[1.0, 1.0]).unwrap(), 2.0));
        assert_eq!(hex.primal_vertices().unwrap().len(), 6);
        assert!(matches!(
            FiniteSpace::l1(2).norm(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn dual_norms() {
        assert!(close(FiniteSpace::l1(2).dual_norm(&[1.0, -1.0]).unwrap(), 1.0));
        assert!(close(FiniteSpace::l2(3).dual_norm(&[1.0, 2.0, 2.0]).unwrap(), 3.0));
        let box_ = FiniteSpace::polytope(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(close(box_.dual_norm(&[1.0, 1.0]).unwrap(), 2.0));
    }

    #[test]
    fn dual_ball_models() {
        let m = FiniteSpace::linf(2).dual_ball_points(BallRequest::Exact).unwrap();
        assert_eq!(m.points.len(), 4);
        assert!(m.points.contains(&vec![1.0, 0.0]) && m.points.contains(&vec![0.0, -1.0]));
        let m = FiniteSpace::l1(2).dual_ball_points(BallRequest::Exact).unwrap();
        assert_eq!(m.points.len(), 4);
        assert!(m.points.iter().all(|p| p.iter().all(|v| v.abs() == 1.0)));
        let m = FiniteSpace::l2(2).dual_ball_points(BallRequest::Mesh(8)).unwrap();
        assert_eq!(m.points.len(), 16);
        assert!(m.points.iter().all(|p| close(linalg::norm2(p), 1.0)));
        assert!(close(m.coverage.unwrap(), (PI / 16.0).cos()));
        assert!(matches!(
            FiniteSpace::l2(2).dual_ball_points(BallRequest::Exact),
            Err(Error::RequiresPolyhedral(_))
        ));
    }

    #[test]
    fn norming_functionals() {
        assert_eq!(FiniteSpace::l1(2).norming_functional(&[2.0, -3.0]).unwrap(), vec![1.0, -1.0]);
        let f = FiniteSpace::l2(2).norming_functional(&[3.0, 4.0]).unwrap();
        assert!(close(f[0], 0.6) && close(f[1], 0.8));
        assert_eq!(FiniteSpace::linf(2).norming_functional(&[5.0, 2.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(FiniteSpace::l2(2).norming_functional(&[0.0, 0.0]), Err(Error::ZeroVector));
    }

    #[test]
    fn canonical_facets_reproduce_lq_norms() {
        let x = [0.3, -1.7, 2.2];
        let l1 = FiniteSpace::polytope(3, sign_vectors(3)).unwrap();
        let linf = FiniteSpace::polytope(3, signed_basis(3)).unwrap();
        assert!(close(l1.norm_of(&x), FiniteSpace::l1(3).norm_of(&x)));
        assert!(close(linf.norm_of(&x), FiniteSpace::linf(3).norm_of(&x)));
        assert!(close(l1.dual_norm_of(&x), FiniteSpace::l1(3).dual_norm_of(&x)));
    }

    #[test]
    fn redundant_facets_are_pruned() {
        let s = FiniteSpace::polytope(
            2,
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5], vec![2.0, 0.0], vec![-1.0, 0.0]],
        )
        .unwrap();
        // (1,0) is dominated by (2,0); (0.5,0.5) is inside the hull of the rest.
        assert_eq!(s.dual_vertices().unwrap().len(), 4);
        assert!(close(s.norm_of(&[1.0, 1.0]), 2.0));
        assert!(FiniteSpace::polytope(2, vec![vec![1.0, 0.0]]).is_err());
    }

    #[test]
    fn meshes_are_nested_under_doubling_and_symmetric() {
        for dim in [2, 3] {
            let coarse = FiniteSpace::l2(dim).dual_ball_points(BallRequest::Mesh(4)).unwrap();
            let fine = FiniteSpace::l2(dim).dual_ball_points(BallRequest::Mesh(8)).unwrap();
            let keys: std::collections::HashSet<_> = fine.points.iter().map(|p| round_key(p)).collect();
            assert!(coarse.points.iter().all(|p| keys.contains(&round_key(p))));
            let own: std::collections::HashSet<_> = coarse.points.iter().map(|p| round_key(p)).collect();
            for p in &coarse.points {
                assert!(own.contains(&round_key(&linalg::scaled(p, -1.0))));
            }
        }
    }

    #[test]
    fn mesh_sup_converges_monotonically_on_l2() {
        let x = [0.37, -0.91];
        let space = FiniteSpace::l2(2);
        let mut last = 0.0;
        for r in [8, 16, 32] {
            let m = space.dual_ball_points(BallRequest::Mesh(r)).unwrap();
            let s = m.points.iter().map(|p| dot(&x, p).abs()).fold(0.0, f64::max);
            assert!(s >= last - 1e-12);
            assert!(s <= space.norm_of(&x) + 1e-12);
            last = s;
        }
        assert!(space.norm_of(&x) - last < 1e-2);
    }
}
