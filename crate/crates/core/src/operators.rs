//! Linear and multilinear maps, tensor coordinates, the span `V_m` of
//! elementary tensors, the forms ball, and the projective norm.
//!
//! Tensors over `X_1 x ... x X_m` are flat row-major arrays indexed by
//! `(i_1, ..., i_m)`. A multilinear map into `Y` stores its coefficients with
//! the codomain index last: `coeffs[flat(i_1..i_m) * dim Y + k]`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, dot};
use crate::optimize;
use crate::sip_solver::{solve_lp, LpProblem, LpStatus};
use crate::spaces::{BallRequest, FiniteSpace};

/// Coordinate equality tolerance for elements of `V_m`.
pub const TOL_EQ: f64 = 1e-10;
/// Gap above which a projective norm bracket is reported as possibly loose.
pub const TOL_PI_GAP: f64 = 1e-6;

/// Linear map stored as a row-major `codomain.dim x domain.dim` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearMap {
    pub domain: FiniteSpace,
    pub codomain: FiniteSpace,
    pub matrix: Vec<f64>,
}

impl LinearMap {
    pub fn new(domain: FiniteSpace, codomain: FiniteSpace, matrix: Vec<f64>) -> Result<Self> {
        check_dim(domain.dim() * codomain.dim(), matrix.len())?;
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("matrix entries must be finite".into()));
        }
        Ok(Self { domain, codomain, matrix })
    }

    pub fn from_rows(domain: FiniteSpace, codomain: FiniteSpace, rows: &[Vec<f64>]) -> Result<Self> {
        check_dim(codomain.dim(), rows.len())?;
        let matrix = rows.iter().flat_map(|r| r.iter().cloned()).collect();
        Self::new(domain, codomain, matrix)
    }

    pub fn identity(space: FiniteSpace) -> Self {
        let n = space.dim();
        let matrix = (0..n * n).map(|k| if k / n == k % n { 1.0 } else { 0.0 }).collect();
        Self { domain: space.clone(), codomain: space, matrix }
    }

    /// `x -> <x, a*> y`.
    pub fn rank_one(domain: FiniteSpace, codomain: FiniteSpace, astar: &[f64], y: &[f64]) -> Result<Self> {
        check_dim(domain.dim(), astar.len())?;
        check_dim(codomain.dim(), y.len())?;
        let matrix = y.iter().flat_map(|yi| astar.iter().map(move |a| yi * a)).collect();
        Self::new(domain, codomain, matrix)
    }

    pub fn zero(domain: FiniteSpace, codomain: FiniteSpace) -> Self {
        let matrix = vec![0.0; domain.dim() * codomain.dim()];
        Self { domain, codomain, matrix }
    }

    pub fn rows(&self) -> usize {
        self.codomain.dim()
    }

    pub fn cols(&self) -> usize {
        self.domain.dim()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.matrix[i * self.cols()..(i + 1) * self.cols()]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        linalg::mat_vec(&self.matrix, self.rows(), self.cols(), x)
    }

    pub fn apply_t(&self, y: &[f64]) -> Vec<f64> {
        linalg::mat_t_vec(&self.matrix, self.rows(), self.cols(), y)
    }

    /// `||T x||_Y`.
    pub fn image_norm(&self, x: &[f64]) -> f64 {
        self.codomain.norm_of(&self.apply(x))
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self { matrix: linalg::scaled(&self.matrix, t), ..self.clone() }
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|&v| v == 0.0)
    }

    /// Operator norm: exact over the domain's extreme points when polyhedral,
    /// otherwise a lower bound from a mesh of the unit sphere.
    pub fn op_norm(&self, mode: OpNormMode) -> Result<f64> {
        let pts = match (mode, self.domain.primal_vertices()) {
            (OpNormMode::Exact, Some(v)) => v.to_vec(),
            (OpNormMode::Exact, None) => {
                return Err(Error::RequiresPolyhedral(format!("op_norm on {}", self.domain.label())))
            }
            (OpNormMode::Mesh(r), _) => self.domain.primal_sphere_points(r),
        };
        Ok(pts.iter().map(|x| self.image_norm(x)).fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpNormMode {
    Exact,
    Mesh(usize),
}

/// Product index bookkeeping for `X_1 (x) ... (x) X_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorSpace {
    pub factors: Vec<FiniteSpace>,
}

impl TensorSpace {
    pub fn new(factors: Vec<FiniteSpace>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter("need at least one factor".into()));
        }
        Ok(Self { factors })
    }

    pub fn order(&self) -> usize {
        self.factors.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.dim()).collect()
    }

    /// Dimension of the tensor product.
    pub fn total(&self) -> usize {
        self.factors.iter().map(|f| f.dim()).product()
    }

    pub fn is_polyhedral(&self) -> bool {
        self.factors.iter().all(|f| f.is_polyhedral())
    }

    pub fn check_vectors(&self, xs: &[Vec<f64>]) -> Result<()> {
        check_dim(self.order(), xs.len())?;
        for (f, x) in self.factors.iter().zip(xs) {
            check_dim(f.dim(), x.len())?;
        }
        Ok(())
    }

    /// Coordinates of `x^1 (x) ... (x) x^m`.
    pub fn outer(&self, xs: &[Vec<f64>]) -> Vec<f64> {
        outer(xs)
    }

    /// `prod_j ||x^j||`.
    pub fn norm_product(&self, xs: &[Vec<f64>]) -> f64 {
        self.factors.iter().zip(xs).map(|(f, x)| f.norm_of(x)).product()
    }

    /// Contracts a tensor with every vector except the `skip`-th, leaving a
    /// vector over factor `skip`.
    pub fn contract_except(&self, coords: &[f64], xs: &[Vec<f64>], skip: usize) -> Vec<f64> {
        let dims = self.dims();
        let mut out = vec![0.0; dims[skip]];
        let mut idx = vec![0usize; dims.len()];
        for &c in coords {
            if c != 0.0 {
                let mut w = c;
                for (j, &i) in idx.iter().enumerate() {
                    if j != skip {
                        w *= xs[j][i];
                    }
                }
                out[idx[skip]] += w;
            }
            advance(&mut idx, &dims);
        }
        out
    }

    /// Forms-ball model; see [`FormsBall`].
    pub fn forms_ball(&self, cfg: &FormsConfig) -> Result<FormsBall> {
        FormsBall::build(self, cfg)
    }

    /// The projective tensor product as a polytope space (polyhedral factors only).
    ///
    /// Its unit ball is the absolutely convex hull of elementary tensors of
    /// factor vertices and its facets are the extreme points of the forms ball.
    pub fn projective_space(&self, cfg: &FormsConfig) -> Result<FiniteSpace> {
        if !self.is_polyhedral() {
            return Err(Error::RequiresPolyhedral("projective tensor space".into()));
        }
        let forms = self.forms_ball(cfg)?;
        if !forms.exact {
            return Err(Error::Budget("forms-ball vertex enumeration".into()));
        }
        let vertices = self.elementary_vertices();
        Ok(FiniteSpace::polytope_from_parts(self.total(), forms.points, vertices)
            .with_label(&self.factors.iter().map(|f| f.label()).collect::<Vec<_>>().join(" (x)pi ")))
    }

    /// Elementary tensors of factor vertices, deduplicated up to sign.
    pub fn elementary_vertices(&self) -> Vec<Vec<f64>> {
        let sets: Vec<Vec<Vec<f64>>> = self
            .factors
            .iter()
            .map(|f| f.primal_vertices().map(|v| half_up_to_sign(v)).unwrap_or_default())
            .collect();
        let mut out: Vec<Vec<f64>> = cartesian(&sets).iter().map(|xs| outer(xs)).collect();
        dedup_sign(&mut out);
        out
    }
}

/// Coordinates of an elementary tensor.
pub fn outer(xs: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![1.0];
    for x in xs {
        let mut next = Vec::with_capacity(out.len() * x.len());
        for a in &out {
            for b in x {
                next.push(a * b);
            }
        }
        out = next;
    }
    out
}

fn advance(idx: &mut [usize], dims: &[usize]) {
    for j in (0..dims.len()).rev() {
        idx[j] += 1;
        if idx[j] < dims[j] {
            return;
        }
        idx[j] = 0;
    }
}

/// All tuples picking one element from each set.
pub fn cartesian(sets: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<f64>>> {
    let mut out: Vec<Vec<Vec<f64>>> = vec![Vec::new()];
    for s in sets {
        let mut next = Vec::with_capacity(out.len() * s.len());
        for prefix in &out {
            for v in s {
                let mut p = prefix.clone();
                p.push(v.clone());
                next.push(p);
            }
        }
        out = next;
    }
    out
}

fn half_up_to_sign(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = points.to_vec();
    dedup_sign(&mut out);
    out
}

fn dedup_sign(points: &mut Vec<Vec<f64>>) {
    let mut seen = std::collections::HashSet::new();
    points.retain(|p| {
        let neg = linalg::scaled(p, -1.0);
        if seen.contains(&linalg::round_key(&neg)) {
            return false;
        }
        seen.insert(linalg::round_key(p))
    });
}

/// m-linear map `X_1 x ... x X_m -> Y` with codomain-last coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultilinearMap {
    pub domains: Vec<FiniteSpace>,
    pub codomain: FiniteSpace,
    pub coeffs: Vec<f64>,
}

impl MultilinearMap {
    pub fn new(domains: Vec<FiniteSpace>, codomain: FiniteSpace, coeffs: Vec<f64>) -> Result<Self> {
        if domains.is_empty() {
            return Err(Error::InvalidParameter("multilinear map needs m >= 1".into()));
        }
        let total: usize = domains.iter().map(|d| d.dim()).product();
        check_dim(total * codomain.dim(), coeffs.len())?;
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("coefficients must be finite".into()));
        }
        Ok(Self { domains, codomain, coeffs })
    }

    /// `(x^1, ..., x^m) -> form(x^1, ..., x^m) u` for a scalar form given by its coefficient tensor.
    pub fn from_form(domains: Vec<FiniteSpace>, codomain: FiniteSpace, form: &[f64], u: &[f64]) -> Result<Self> {
        check_dim(codomain.dim(), u.len())?;
        let coeffs = form.iter().flat_map(|f| u.iter().map(move |v| f * v)).collect();
        Self::new(domains, codomain, coeffs)
    }

    pub fn zero(domains: Vec<FiniteSpace>, codomain: FiniteSpace) -> Self {
        let total: usize = domains.iter().map(|d| d.dim()).product();
        let coeffs = vec![0.0; total * codomain.dim()];
        Self { domains, codomain, coeffs }
    }

    pub fn order(&self) -> usize {
        self.domains.len()
    }

    pub fn tensor_space(&self) -> TensorSpace {
        TensorSpace { factors: self.domains.clone() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self { coeffs: linalg::scaled(&self.coeffs, t), ..self.clone() }
    }

    /// Applies the linearization to tensor coordinates.
    pub fn apply_tensor(&self, coords: &[f64]) -> Vec<f64> {
        let ny = self.codomain.dim();
        let mut out = vec![0.0; ny];
        for (t, &c) in coords.iter().enumerate() {
            if c != 0.0 {
                for k in 0..ny {
                    out[k] += c * self.coeffs[t * ny + k];
                }
            }
        }
        out
    }

    pub fn apply(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.tensor_space().check_vectors(xs)?;
        Ok(self.apply_tensor(&outer(xs)))
    }

    pub(crate) fn apply_unchecked(&self, xs: &[Vec<f64>]) -> Vec<f64> {
        self.apply_tensor(&outer(xs))
    }

    /// The linear map `x^j -> T(x^1, .., x^j, .., x^m)` with the other
    /// arguments fixed, as a row-major `dim Y x dim X_j` matrix.
    pub fn partial_matrix(&self, xs: &[Vec<f64>], j: usize) -> Vec<f64> {
        let ny = self.codomain.dim();
        let nj = self.domains[j].dim();
        let mut m = vec![0.0; ny * nj];
        for i in 0..nj {
            let mut args = xs.to_vec();
            args[j] = linalg::unit(nj, i);
            let col = self.apply_unchecked(&args);
            for k in 0..ny {
                m[k * nj + i] = col[k];
            }
        }
        m
    }

    /// Operator norm; exact over products of extreme points when every domain
    /// is polyhedral, a mesh lower bound otherwise.
    pub fn op_norm(&self, mode: OpNormMode) -> Result<f64> {
        let sets: Vec<Vec<Vec<f64>>> = match mode {
            OpNormMode::Exact => self
                .domains
                .iter()
                .map(|d| {
                    d.primal_vertices()
                        .map(half_up_to_sign)
                        .ok_or_else(|| Error::RequiresPolyhedral(format!("op_norm on {}", d.label())))
                })
                .collect::<Result<_>>()?,
            OpNormMode::Mesh(r) => self.domains.iter().map(|d| half_up_to_sign(&d.primal_sphere_points(r))).collect(),
        };
        Ok(cartesian(&sets)
            .iter()
            .map(|xs| self.codomain.norm_of(&self.apply_unchecked(xs)))
            .fold(0.0, f64::max))
    }

    /// The linearization `T_L` on tensor coordinates.
    pub fn linearize(&self) -> Linearization {
        let ny = self.codomain.dim();
        let total = self.coeffs.len() / ny;
        let mut matrix = vec![0.0; ny * total];
        for t in 0..total {
            for k in 0..ny {
                matrix[k * total + t] = self.coeffs[t * ny + k];
            }
        }
        Linearization { space: self.tensor_space(), codomain: self.codomain.clone(), matrix }
    }
}

/// `T_L` as a `dim Y x prod dim X_j` matrix on tensor coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linearization {
    pub space: TensorSpace,
    pub codomain: FiniteSpace,
    pub matrix: Vec<f64>,
}

impl Linearization {
    pub fn apply(&self, coords: &[f64]) -> Vec<f64> {
        linalg::mat_vec(&self.matrix, self.codomain.dim(), self.space.total(), coords)
    }

    /// `T_L` as a linear map on the projective tensor space (polyhedral factors).
    pub fn to_linear_map(&self, cfg: &FormsConfig) -> Result<LinearMap> {
        let domain = self.space.projective_space(cfg)?;
        LinearMap::new(domain, self.codomain.clone(), self.matrix.clone())
    }
}

/// Linearization of a multilinear map.
pub fn linearize(t: &MultilinearMap) -> Linearization {
    t.linearize()
}

/// Coordinates of an element of the tensor product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorElement {
    pub space: TensorSpace,
    pub coords: Vec<f64>,
}

impl TensorElement {
    pub fn new(space: TensorSpace, coords: Vec<f64>) -> Result<Self> {
        check_dim(space.total(), coords.len())?;
        Ok(Self { space, coords })
    }
}

/// One term `lambda * x^1 (x) ... (x) x^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmTerm {
    pub lambda: f64,
    pub vectors: Vec<Vec<f64>>,
}

impl VmTerm {
    pub fn new(lambda: f64, vectors: Vec<Vec<f64>>) -> Self {
        Self { lambda, vectors }
    }
}

/// Element of `V_m`: a finite sum of elementary tensor functionals, kept
/// both as its term list and as tensor coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmElement {
    pub terms: Vec<VmTerm>,
    pub coords: Vec<f64>,
}

impl VmElement {
    /// Coordinates-only equality within [`TOL_EQ`].
    pub fn equivalent(&self, other: &VmElement) -> bool {
        self.coords.len() == other.coords.len()
            && self.coords.iter().zip(&other.coords).all(|(a, b)| (a - b).abs() <= TOL_EQ)
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|k| VmTerm { lambda: k.lambda * t, vectors: k.vectors.clone() }).collect(),
            coords: linalg::scaled(&self.coords, t),
        }
    }

    /// Concatenation of term lists; coordinates add.
    pub fn concat(&self, other: &VmElement) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { terms, coords: linalg::add(&self.coords, &other.coords) }
    }

    /// `<v, phi>` for a scalar form given by coefficients.
    pub fn pair(&self, form: &[f64]) -> f64 {
        dot(&self.coords, form)
    }
}

/// Builds an element of `V_m` from its terms.
pub fn embed_vm(space: &TensorSpace, terms: Vec<VmTerm>) -> Result<VmElement> {
    let mut coords = vec![0.0; space.total()];
    for t in &terms {
        space.check_vectors(&t.vectors)?;
        for (c, o) in coords.iter_mut().zip(outer(&t.vectors)) {
            *c += t.lambda * o;
        }
    }
    Ok(VmElement { terms, coords })
}

/// `sum_k lambda_k phi(x^{1,k}, ..., x^{m,k})` for a scalar form `phi`.
pub fn vm_eval(v: &VmElement, phi: &MultilinearMap) -> Result<f64> {
    check_dim(1, phi.codomain.dim())?;
    check_dim(v.coords.len(), phi.coeffs.len())?;
    Ok(dot(&v.coords, &phi.coeffs))
}

/// Settings of the forms-ball model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FormsConfig {
    /// Dual mesh resolution per non-polyhedral factor.
    pub mesh_resolution: usize,
    /// Extra seeded dense forms when the ball is not enumerated exactly.
    pub dense_forms: usize,
    pub seed: u64,
}

impl Default for FormsConfig {
    fn default() -> Self {
        Self { mesh_resolution: 8, dense_forms: 32, seed: optimize::DEFAULT_SEED }
    }
}

/// Finite model of the unit ball of m-linear forms, as coefficient tensors.
///
/// With every factor polyhedral the ball is the polytope
/// `{phi : |phi(v^1, .., v^m)| <= 1 for vertices v^j}` and its extreme points
/// are enumerated (`exact`). Otherwise the model holds rank-one products of
/// dual mesh points plus seeded dense forms scaled to operator norm at most
/// one, so every point is feasible and suprema over it are lower bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormsBall {
    pub points: Vec<Vec<f64>>,
    pub exact: bool,
}

impl FormsBall {
    fn build(space: &TensorSpace, cfg: &FormsConfig) -> Result<Self> {
        let d = space.total();
        if space.is_polyhedral() {
            if space.factors.iter().all(|f| f.lq_exponent() == Some(1.0)) && d <= 14 {
                // Products of cross-polytopes: the forms ball is the max-norm cube.
                let pts = (0..1usize << d)
                    .map(|mask| (0..d).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect())
                    .collect();
                return Ok(Self { points: pts, exact: true });
            }
            if space.order() == 1 {
                let pts = space.factors[0].dual_vertices().expect("polyhedral").to_vec();
                return Ok(Self { points: pts, exact: true });
            }
            let pairs = space.elementary_vertices();
            if let Ok(verts) = crate::spaces::enumerate_vertices(d, &pairs) {
                return Ok(Self { points: verts, exact: true });
            }
        }
        let sets: Vec<Vec<Vec<f64>>> = space
            .factors
            .iter()
            .map(|f| {
                let req = if f.is_polyhedral() { BallRequest::Exact } else { BallRequest::Mesh(cfg.mesh_resolution) };
                f.dual_ball_points(req).map(|m| m.points)
            })
            .collect::<Result<_>>()?;
        let mut points: Vec<Vec<f64>> = cartesian(&sets).iter().map(|xs| outer(xs)).collect();
        let mut rng = optimize::rng(cfg.seed);
        for _ in 0..cfg.dense_forms {
            let phi = optimize::random_vector(&mut rng, d);
            if let Some(bound) = form_norm_upper(space, &phi, cfg.mesh_resolution) {
                if bound > 0.0 {
                    points.push(linalg::scaled(&phi, 1.0 / bound));
                }
            }
        }
        Ok(Self { points, exact: false })
    }

    /// `max_phi |<v, phi>|` over the model.
    pub fn sup_pairing(&self, coords: &[f64]) -> f64 {
        self.points.iter().map(|p| dot(coords, p).abs()).fold(0.0, f64::max)
    }
}

/// Upper bound on the operator norm of a scalar form, when one is computable:
/// exact for polyhedral factors and for bilinear forms on two Euclidean
/// factors, mesh-with-coverage for planar factors.
pub fn form_norm_upper(space: &TensorSpace, phi: &[f64], resolution: usize) -> Option<f64> {
    if space.is_polyhedral() {
        let sets: Vec<Vec<Vec<f64>>> =
            space.factors.iter().map(|f| half_up_to_sign(f.primal_vertices().unwrap())).collect();
        return Some(cartesian(&sets).iter().map(|xs| dot(&outer(xs), phi).abs()).fold(0.0, f64::max));
    }
    if space.order() == 2 && space.factors.iter().all(|f| f.lq_exponent() == Some(2.0)) {
        let (a, b) = (space.factors[0].dim(), space.factors[1].dim());
        let m = nalgebra::DMatrix::from_row_slice(a, b, phi);
        return Some(m.singular_values().iter().cloned().fold(0.0, f64::max));
    }
    let mut rho = 1.0;
    let mut sets = Vec::new();
    for f in &space.factors {
        rho *= f.primal_mesh_coverage(4 * resolution)?;
        sets.push(half_up_to_sign(&f.primal_sphere_points(4 * resolution)));
    }
    let mesh_max = cartesian(&sets).iter().map(|xs| dot(&outer(xs), phi).abs()).fold(0.0, f64::max);
    Some(mesh_max / rho)
}

/// Two-sided estimate of the projective norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectiveNorm {
    pub upper: f64,
    pub lower: f64,
    /// Representation achieving `upper`.
    pub representation: Vec<VmTerm>,
    pub possibly_loose: bool,
}

/// Representation cost `sum_k |lambda_k| prod_j ||x^{j,k}||`.
pub fn representation_cost(space: &TensorSpace, terms: &[VmTerm]) -> f64 {
    terms.iter().map(|t| t.lambda.abs() * space.norm_product(&t.vectors)).sum()
}

/// Projective norm with no extra seeds.
pub fn projective_norm(v: &TensorElement, r_max: usize) -> Result<ProjectiveNorm> {
    projective_norm_seeded(v, r_max, &[], &FormsConfig::default())
}

/// Projective norm bracket.
///
/// Upper side: the best of the canonical basis representation, every given
/// seed representation, an exact LP over elementary vertex tensors when all
/// factors are polyhedral, and alternating minimization from 16 seeded
/// restarts. Lower side: the best pairing with a point of the forms-ball model.
pub fn projective_norm_seeded(
    v: &TensorElement,
    r_max: usize,
    seeds: &[Vec<VmTerm>],
    cfg: &FormsConfig,
) -> Result<ProjectiveNorm> {
    if r_max == 0 {
        return Err(Error::InvalidParameter("r_max must be >= 1".into()));
    }
    let space = &v.space;
    let dims = space.dims();
    if linalg::max_abs(&v.coords) == 0.0 {
        return Ok(ProjectiveNorm { upper: 0.0, lower: 0.0, representation: Vec::new(), possibly_loose: false });
    }
    let forms = space.forms_ball(cfg)?;
    let mut lower = forms.sup_pairing(&v.coords);
    if !forms.exact {
        lower = lower.max(refine_lower(space, &v.coords, &forms, cfg));
    }

    let mut candidates: Vec<Vec<VmTerm>> = Vec::new();
    candidates.push(canonical_representation(&dims, &v.coords));
    for s in seeds {
        let e = embed_vm(space, s.clone())?;
        if e.coords.iter().zip(&v.coords).all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + b.abs())) {
            candidates.push(s.clone());
        }
    }
    if space.is_polyhedral() {
        if let Some(rep) = lp_representation(space, &v.coords)? {
            candidates.push(rep);
        }
    } else {
        if space.order() == 2 {
            candidates.push(svd_representation(&dims, &v.coords));
        }
        let mut rng = optimize::rng(cfg.seed ^ 0x9e37_79b9);
        let width = r_max.max(1);
        for restart in 0..16 {
            let start = if restart == 0 {
                candidates.last().cloned().unwrap()
            } else {
                match random_representation(space, &v.coords, width, &mut rng) {
                    Some(s) => s,
                    None => continue,
                }
            };
            candidates.push(alternating_minimization(space, start, 30));
        }
    }
    let mut best: Option<(f64, Vec<VmTerm>)> = None;
    for c in candidates {
        if c.len() > r_max && best.is_some() {
            continue;
        }
        let cost = representation_cost(space, &c);
        if best.as_ref().map_or(true, |(b, _)| cost < *b) {
            best = Some((cost, c));
        }
    }
    let (upper, representation) = best.expect("canonical representation always exists");
    if forms.exact {
        // The model holds every extreme point of the dual ball: lower is exact.
        lower = lower.min(upper);
    }
    let possibly_loose = upper - lower > TOL_PI_GAP * upper.max(1.0);
    Ok(ProjectiveNorm { upper, lower, representation, possibly_loose })
}

/// One term per nonzero coordinate, on basis vectors.
fn canonical_representation(dims: &[usize], coords: &[f64]) -> Vec<VmTerm> {
    let mut out = Vec::new();
    let mut idx = vec![0usize; dims.len()];
    for &c in coords {
        if c != 0.0 {
            let vectors = idx.iter().zip(dims).map(|(&i, &n)| linalg::unit(n, i)).collect();
            out.push(VmTerm::new(c, vectors));
        }
        advance(&mut idx, dims);
    }
    out
}

/// A short representation of a coordinate tensor: singular value terms for
/// bilinear tensors, basis terms otherwise. The cached coordinates are the
/// given ones.
pub fn vm_from_coords(space: &TensorSpace, coords: &[f64]) -> VmElement {
    let dims = space.dims();
    let terms = if space.order() == 2 { svd_representation(&dims, coords) } else { canonical_representation(&dims, coords) };
    VmElement { terms, coords: coords.to_vec() }
}

/// Improves the dual side beyond the forms model by ascent on
/// `<v, phi> / ||phi||_upper`, started from the best model forms and, for
/// bilinear tensors, from the polar factor `U V^T` of the coefficient matrix.
fn refine_lower(space: &TensorSpace, coords: &[f64], forms: &FormsBall, cfg: &FormsConfig) -> f64 {
    let res = cfg.mesh_resolution;
    let ratio = |phi: &[f64]| -> f64 {
        match form_norm_upper(space, phi, res) {
            Some(b) if b > 0.0 => dot(coords, phi).abs() / b,
            _ => 0.0,
        }
    };
    let mut starts: Vec<Vec<f64>> = Vec::new();
    if space.order() == 2 {
        let dims = space.dims();
        let m = nalgebra::DMatrix::from_row_slice(dims[0], dims[1], coords);
        let svd = m.svd(true, true);
        let polar = svd.u.unwrap() * svd.v_t.unwrap();
        starts.push((0..dims[0]).flat_map(|i| (0..dims[1]).map(move |j| (i, j))).map(|(i, j)| polar[(i, j)]).collect());
    }
    let mut scored: Vec<(f64, &Vec<f64>)> = forms.points.iter().map(|p| (dot(coords, p).abs(), p)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    starts.extend(scored.iter().take(2).map(|(_, p)| (*p).clone()));
    let opts = optimize::CompassOptions { initial_step: 0.1, min_step: 1e-9, max_evals: 800 };
    starts
        .iter()
        .map(|s0| optimize::compass_maximize(s0, &ratio, &|_: &mut Vec<f64>| {}, opts).1)
        .fold(0.0, f64::max)
}

/// Exact minimal representation over elementary vertex tensors:
/// `min sum |c_k|  s.t.  sum c_k u_k = v`.
fn lp_representation(space: &TensorSpace, coords: &[f64]) -> Result<Option<Vec<VmTerm>>> {
    let sets: Vec<Vec<Vec<f64>>> =
        space.factors.iter().map(|f| half_up_to_sign(f.primal_vertices().unwrap())).collect();
    let tuples = cartesian(&sets);
    let atoms: Vec<Vec<f64>> = tuples.iter().map(|xs| outer(xs)).collect();
    let k = atoms.len();
    let d = coords.len();
    let mut lp = LpProblem::new(vec![1.0; 2 * k]);
    for i in 0..d {
        let a: Vec<f64> = (0..2 * k).map(|j| if j < k { atoms[j][i] } else { -atoms[j - k][i] }).collect();
        lp.rows.push((a.clone(), coords[i]));
        lp.rows.push((linalg::scaled(&a, -1.0), -coords[i]));
    }
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Ok(None);
    }
    let mut terms = Vec::new();
    for j in 0..k {
        let c = sol.t[j] - sol.t[j + k];
        if c.abs() > 1e-14 {
            terms.push(VmTerm::new(c, tuples[j].clone()));
        }
    }
    Ok(Some(terms))
}

fn svd_representation(dims: &[usize], coords: &[f64]) -> Vec<VmTerm> {
    let m = nalgebra::DMatrix::from_row_slice(dims[0], dims[1], coords);
    let svd = m.svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > 1e-14)
        .map(|(k, s)| {
            VmTerm::new(*s, vec![u.column(k).iter().cloned().collect(), vt.row(k).iter().cloned().collect()])
        })
        .collect()
}

/// Random factors for all but the first slot, first slot solved by least
/// squares; `None` if the random factors fail to reproduce `coords`.
fn random_representation(
    space: &TensorSpace,
    coords: &[f64],
    width: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Option<Vec<VmTerm>> {
    let dims = space.dims();
    let mut terms: Vec<VmTerm> = (0..width)
        .map(|_| {
            let vectors = dims.iter().map(|&n| optimize::random_vector(rng, n)).collect();
            VmTerm::new(1.0, vectors)
        })
        .collect();
    let x0 = refit_factor(space, coords, &terms, 0)?;
    for (t, x) in terms.iter_mut().zip(x0) {
        t.vectors[0] = x;
    }
    Some(terms)
}

/// Least-squares solution for factor `j` of every term given the others;
/// `None` if the fit leaves a residual.
fn refit_factor(space: &TensorSpace, coords: &[f64], terms: &[VmTerm], j: usize) -> Option<Vec<Vec<f64>>> {
    let (a, nj) = factor_system(space, terms, j);
    let d = coords.len();
    let cols = terms.len() * nj;
    let m = nalgebra::DMatrix::from_fn(d, cols, |r, c| a[r][c]);
    let b = nalgebra::DVector::from_column_slice(coords);
    let sol = m.clone().svd(true, true).solve(&b, 1e-12).ok()?;
    let resid = (&m * &sol - &b).norm();
    if resid > 1e-9 * (1.0 + b.norm()) {
        return None;
    }
    Some((0..terms.len()).map(|k| (0..nj).map(|i| sol[k * nj + i]).collect()).collect())
}

/// The linear system `coords = A vec(x^{j,1}, .., x^{j,R})` with the other factors fixed.
fn factor_system(space: &TensorSpace, terms: &[VmTerm], j: usize) -> (Vec<Vec<f64>>, usize) {
    let nj = space.factors[j].dim();
    let d = space.total();
    let mut a = vec![vec![0.0; terms.len() * nj]; d];
    for (k, t) in terms.iter().enumerate() {
        for i in 0..nj {
            let mut vs = t.vectors.clone();
            vs[j] = linalg::unit(nj, i);
            let col = outer(&vs);
            for r in 0..d {
                a[r][k * nj + i] = t.lambda * col[r];
            }
        }
    }
    (a, nj)
}

/// Alternating minimization of the representation cost, one factor at a time.
/// Each block is a weighted sum of norms minimized over an affine set, done
/// by subgradient steps in null-space coordinates. Only improving updates
/// are kept, so the cost never increases.
fn alternating_minimization(space: &TensorSpace, start: Vec<VmTerm>, sweeps: usize) -> Vec<VmTerm> {
    let mut terms = start;
    let mut cost = representation_cost(space, &terms);
    for _ in 0..sweeps {
        let before = cost;
        for j in 0..space.order() {
            let (a, nj) = factor_system(space, &terms, j);
            let cols = terms.len() * nj;
            let basis = linalg::null_space(&a, cols, 1e-10);
            if basis.is_empty() {
                continue;
            }
            let x0: Vec<f64> = terms.iter().flat_map(|t| t.vectors[j].iter().cloned()).collect();
            let weights: Vec<f64> = terms
                .iter()
                .map(|t| {
                    t.lambda.abs()
                        * t.vectors.iter().enumerate().filter(|(k, _)| *k != j).map(|(k, x)| space.factors[k].norm_of(x)).product::<f64>()
                })
                .collect();
            let f = |x: &[f64]| -> f64 {
                (0..terms.len()).map(|k| weights[k] * space.factors[j].norm_of(&x[k * nj..(k + 1) * nj])).sum()
            };
            let mut best_x = x0.clone();
            let mut best_f = f(&x0);
            let mut x = x0.clone();
            let mut step = 0.1 * (1.0 + linalg::norm2(&x0));
            for it in 0..200 {
                let mut g = vec![0.0; cols];
                for k in 0..terms.len() {
                    let xk = &x[k * nj..(k + 1) * nj];
                    if linalg::max_abs(xk) > 0.0 {
                        if let Ok(s) = space.factors[j].norming_functional(xk) {
                            for i in 0..nj {
                                g[k * nj + i] = weights[k] * s[i];
                            }
                        }
                    }
                }
                let gz: Vec<f64> = basis.iter().map(|b| dot(b, &g)).collect();
                let gn = linalg::norm2(&gz);
                if gn < 1e-14 {
                    break;
                }
                for (bz, b) in gz.iter().zip(&basis) {
                    for i in 0..cols {
                        x[i] -= step / gn * bz * b[i];
                    }
                }
                let fx = f(&x);
                if fx < best_f {
                    best_f = fx;
                    best_x = x.clone();
                }
                if it % 20 == 19 {
                    step *= 0.5;
                    x = best_x.clone();
                }
            }
            if best_f < cost_block(&terms, &weights, space, j, nj) - 1e-15 {
                for (k, t) in terms.iter_mut().enumerate() {
                    t.vectors[j] = best_x[k * nj..(k + 1) * nj].to_vec();
                }
                cost = representation_cost(space, &terms);
            }
        }
        if before - cost <= 1e-12 * before {
            break;
        }
    }
    terms
}

fn cost_block(terms: &[VmTerm], weights: &[f64], space: &TensorSpace, j: usize, _nj: usize) -> f64 {
    terms.iter().zip(weights).map(|(t, w)| w * space.factors[j].norm_of(&t.vectors[j])).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l1() -> FiniteSpace {
        FiniteSpace::l1(2)
    }

    #[test]
    fn operator_norms() {
        let phi = MultilinearMap::new(vec![l1(), l1()], FiniteSpace::l1(1), vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(phi.op_norm(OpNormMode::Exact).unwrap(), 1.0);
        let zero = MultilinearMap::zero(vec![l1(), l1()], FiniteSpace::l1(1));
        assert_eq!(zero.op_norm(OpNormMode::Exact).unwrap(), 0.0);
        assert_eq!(LinearMap::identity(l1()).op_norm(OpNormMode::Exact).unwrap(), 1.0);
        assert!(LinearMap::identity(FiniteSpace::l2(2)).op_norm(OpNormMode::Exact).is_err());
    }

    #[test]
    fn linearization_reads_off_coefficients() {
        // T(x, y) = x_1 y_1 u with u = (2, -1).
        let t = MultilinearMap::from_form(vec![l1(), l1()], FiniteSpace::linf(2), &[1.0, 0.0, 0.0, 0.0], &[2.0, -1.0])
            .unwrap();
        let tl = t.linearize();
        assert_eq!(tl.apply(&[3.0, 5.0, 7.0, 11.0]), vec![6.0, -3.0]);
        assert_eq!(tl.matrix, vec![2.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0]);
        let z = MultilinearMap::zero(vec![l1(), l1()], FiniteSpace::linf(2)).linearize();
        assert!(z.matrix.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn vm_elements() {
        let s = TensorSpace::new(vec![l1(), l1()]).unwrap();
        let e1 = vec![1.0, 0.0];
        let e2 = vec![0.0, 1.0];
        let v = embed_vm(&s, vec![VmTerm::new(1.0, vec![e1.clone(), e1.clone()])]).unwrap();
        assert_eq!(v.coords, vec![1.0, 0.0, 0.0, 0.0]);
        let z = embed_vm(&s, vec![VmTerm::new(1.0, vec![e1.clone(), e1.clone()]), VmTerm::new(-1.0, vec![e1.clone(), e1.clone()])])
            .unwrap();
        assert!(z.coords.iter().all(|&c| c == 0.0));
        let diag = embed_vm(&s, vec![VmTerm::new(1.0, vec![e1.clone(), e1.clone()]), VmTerm::new(1.0, vec![e2.clone(), e2.clone()])])
            .unwrap();
        assert_eq!(diag.coords, vec![1.0, 0.0, 0.0, 1.0]);
        let x1y1 = MultilinearMap::new(vec![l1(), l1()], FiniteSpace::l1(1), vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let x1y2 = MultilinearMap::new(vec![l1(), l1()], FiniteSpace::l1(1), vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(vm_eval(&v, &x1y1).unwrap(), 1.0);
        assert_eq!(vm_eval(&z, &x1y1).unwrap(), 0.0);
        assert_eq!(vm_eval(&diag, &x1y2).unwrap(), 0.0);
    }

    #[test]
    fn projective_norm_examples() {
        let s = TensorSpace::new(vec![l1(), l1()]).unwrap();
        let x = vec![0.3, -0.5];
        let y = vec![1.2, 0.4];
        let v = TensorElement::new(s.clone(), outer(&[x.clone(), y.clone()])).unwrap();
        let p = projective_norm(&v, 4).unwrap();
        assert!((p.upper - 0.8 * 1.6).abs() < 1e-9 && (p.lower - 0.8 * 1.6).abs() < 1e-9);
        let v = TensorElement::new(s.clone(), vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let p = projective_norm(&v, 4).unwrap();
        assert!((p.upper - 2.0).abs() < 1e-9 && (p.lower - 2.0).abs() < 1e-9);
        let v = TensorElement::new(s, vec![0.0; 4]).unwrap();
        assert_eq!(projective_norm(&v, 4).unwrap().upper, 0.0);
    }

    #[test]
    fn euclidean_projective_norm_is_nuclear() {
        let s = TensorSpace::new(vec![FiniteSpace::l2(2), FiniteSpace::l2(2)]).unwrap();
        let v = TensorElement::new(s, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let p = projective_norm(&v, 4).unwrap();
        assert!((p.upper - 2.0).abs() < 1e-9, "{p:?}");
        assert!(p.lower <= p.upper + 1e-12);
        assert!(p.lower > 1.9, "{p:?}");
    }

    #[test]
    fn projective_space_of_l1_factors_is_l1() {
        let s = TensorSpace::new(vec![l1(), l1()]).unwrap();
        let x = s.projective_space(&FormsConfig::default()).unwrap();
        let v = [0.5, -1.0, 2.0, 0.25];
        assert!((x.norm_of(&v) - 3.75).abs() < 1e-12);
        assert_eq!(x.dual_vertices().unwrap().len(), 16);
    }
}
