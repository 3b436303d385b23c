//! Multilinear classes: strongly Φ-abstract p-summing maps (dominated on the
//! ball of m-linear forms) and (Φ_1, .., Φ_m)-abstract (p_1, .., p_m)-summing
//! maps (dominated by a product of one measure per factor).
//!
//! The strongly constant of `T` is the linear constant of `T_L` on the
//! projective tensor product, whose dual ball is the ball of forms. It is
//! computed twice: on the projective tensor space as a polytope (polyhedral
//! factors) and by a direct search over tensor inputs.

use std::sync::atomic::AtomicU64;

use serde::{Deserialize, Serialize};

use crate::domination_space::{build_factorization, DiagramReport, Factorization, SeminormConfig};
use crate::domination_space::{build_model, DominationSpaceModel};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, dot};
use crate::linear_summing::{
    measure_support, phi_family_sup, sample_sphere, summing_constant, DiscreteMeasure, PhiMap, SummingConfig,
    SummingReport,
};
use crate::operators::{
    embed_vm, outer, vm_from_coords, FormsBall, FormsConfig, LinearMap, MultilinearMap, TensorSpace,
    VmElement, VmTerm,
};
use crate::optimize::{self, CompassOptions};
use crate::sip_solver::tuple::{Tuple, TupleProgram, TupleSearch};
use crate::sip_solver::{cutting_plane, Denominator, SemiInfiniteProgram, Separation, SipFlag};
use crate::spaces::FiniteSpace;

/// Homogeneous maps on `V_m`, evaluated at a form `φ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TensorPhi {
    /// `|<v, φ>|`.
    Identity,
    /// `π(v)^σ |<v, φ>|^{1-σ}`.
    SigmaInterp { sigma: f64 },
    /// `inf Σ_k |λ_k| |φ(x_k)|^{1-σ} Π_j ||x_k^j||^σ` over representations of `v`.
    ///
    /// Terms with `φ(x_k) = 0` cost nothing and a single term with
    /// `φ(x) = <v, φ>` reaches `Π ||x^j|| = |<v, φ>| / ||φ||`, so the infimum
    /// is `|<v, φ>| ||φ||^{-σ}`.
    FactorableSigma { sigma: f64 },
}

impl TensorPhi {
    pub fn validate(&self) -> Result<()> {
        match self {
            TensorPhi::Identity => Ok(()),
            TensorPhi::SigmaInterp { sigma } | TensorPhi::FactorableSigma { sigma } => {
                if (0.0..1.0).contains(sigma) {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("sigma = {sigma} must lie in [0, 1)")))
                }
            }
        }
    }

    /// `Φ(v)(φ)` given `π(v)` and `||φ||`.
    pub fn eval(&self, coords: &[f64], pi: f64, form: &[f64], form_norm: f64) -> f64 {
        let t = dot(coords, form).abs();
        match self {
            TensorPhi::Identity => t,
            TensorPhi::SigmaInterp { sigma } => {
                if t == 0.0 {
                    0.0
                } else {
                    pi.powf(*sigma) * t.powf(1.0 - sigma)
                }
            }
            TensorPhi::FactorableSigma { sigma } => {
                if form_norm == 0.0 {
                    0.0
                } else {
                    t * form_norm.powf(-sigma)
                }
            }
        }
    }

    fn needs_pi(&self) -> bool {
        matches!(self, TensorPhi::SigmaInterp { sigma } if *sigma > 0.0)
    }

    pub fn convex_power(&self, r: f64) -> bool {
        match self {
            TensorPhi::SigmaInterp { sigma } => (1.0 - sigma) * r >= 1.0 - 1e-12,
            _ => r >= 1.0,
        }
    }

    /// The matching linear `Φ` on a space whose norm is `π`. Forms-ball
    /// supports sit on the unit sphere, where the factorable map is the
    /// identity.
    pub fn as_linear(&self, space: FiniteSpace) -> Result<PhiMap> {
        match self {
            TensorPhi::Identity | TensorPhi::FactorableSigma { .. } => Ok(PhiMap::identity(space)),
            TensorPhi::SigmaInterp { sigma } => PhiMap::sigma_interp(space, *sigma),
        }
    }
}

/// Rows `v_i = Σ_k λ_i^k x_i^{1,k} ⊗ .. ⊗ x_i^{m,k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFamily {
    pub rows: Vec<Vec<VmTerm>>,
}

impl CoefficientFamily {
    pub fn new(space: &TensorSpace, rows: Vec<Vec<VmTerm>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidParameter("coefficient family needs a row".into()));
        }
        for row in &rows {
            for term in row {
                space.check_vectors(&term.vectors)?;
            }
        }
        Ok(Self { rows })
    }

    /// One term with `λ = 1` per row.
    pub fn plain(space: &TensorSpace, rows: &[Tuple]) -> Result<Self> {
        Self::new(space, rows.iter().map(|xs| vec![VmTerm::new(1.0, xs.clone())]).collect())
    }

    pub fn elements(&self, space: &TensorSpace) -> Result<Vec<VmElement>> {
        self.rows.iter().map(|r| embed_vm(space, r.clone())).collect()
    }
}

/// Settings shared by the multilinear computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MultilinearConfig {
    pub summing: SummingConfig,
    pub forms: FormsConfig,
    /// Alternation cycles for product-measure certificates.
    pub cycles: usize,
    /// Allowed disagreement between the two strongly computations.
    pub cross_tol: f64,
    pub seminorm: SeminormConfig,
}

impl Default for MultilinearConfig {
    fn default() -> Self {
        Self {
            summing: SummingConfig::default(),
            forms: FormsConfig::default(),
            cycles: 20,
            cross_tol: 1e-3,
            seminorm: SeminormConfig::default(),
        }
    }
}

/// A family ratio with the status of its denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyBound {
    pub value: f64,
    /// The forms-ball supremum was exact, so `value` is a proven lower bound.
    pub certified: bool,
}

pub(crate) fn forms_support(forms: &FormsBall) -> Vec<Vec<f64>> {
    let mut pts = forms.points.clone();
    let mut seen = std::collections::HashSet::new();
    pts.retain(|p| {
        let neg = linalg::round_key(&linalg::scaled(p, -1.0));
        !seen.contains(&neg) && seen.insert(linalg::round_key(p))
    });
    pts
}

/// `π(v)`: exact through the forms-ball vertices when they are enumerated.
fn pi_value(space: &TensorSpace, forms: &FormsBall, coords: &[f64], cfg: &FormsConfig) -> f64 {
    if forms.exact {
        forms.sup_pairing(coords)
    } else {
        let v = crate::operators::TensorElement { space: space.clone(), coords: coords.to_vec() };
        crate::operators::projective_norm_seeded(&v, 4, &[], cfg).map(|p| p.upper).unwrap_or(f64::INFINITY)
    }
}

fn strongly_denominator(
    space: &TensorSpace,
    phi: &TensorPhi,
    r: f64,
    elems: &[Vec<f64>],
    forms: &FormsBall,
    cfg: &FormsConfig,
) -> Denominator {
    let pis: Vec<f64> =
        elems.iter().map(|c| if phi.needs_pi() { pi_value(space, forms, c, cfg) } else { 0.0 }).collect();
    let value = forms
        .points
        .iter()
        .map(|f| elems.iter().zip(&pis).map(|(c, &pi)| phi.eval(c, pi, f, 1.0).powf(r)).sum::<f64>())
        .fold(0.0, f64::max);
    Denominator { value, certified: forms.exact && phi.convex_power(r) }
}

pub(crate) fn check_r(r: f64) -> Result<()> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("exponent r = {r} must be finite and >= 1")));
    }
    Ok(())
}

/// `(Σ_i ||T_L v_i||^r)^{1/r} / sup_φ (Σ_i Φ(v_i)(φ)^r)^{1/r}` over the forms model.
pub fn strongly_family_lower_bound(
    t: &MultilinearMap,
    phi: &TensorPhi,
    r: f64,
    fam: &CoefficientFamily,
    cfg: &MultilinearConfig,
) -> Result<FamilyBound> {
    check_r(r)?;
    phi.validate()?;
    let space = t.tensor_space();
    let elems: Vec<Vec<f64>> = fam.elements(&space)?.into_iter().map(|e| e.coords).collect();
    let lin = t.linearize();
    let num: f64 = elems.iter().map(|c| t.codomain.norm_of(&lin.apply(c)).powf(r)).sum();
    let forms = space.forms_ball(&cfg.forms)?;
    if num == 0.0 {
        return Ok(FamilyBound { value: 0.0, certified: forms.exact });
    }
    let den = strongly_denominator(&space, phi, r, &elems, &forms, &cfg.forms);
    if den.value <= 0.0 {
        return Err(Error::ClassViolated { numerator: num.powf(1.0 / r) });
    }
    Ok(FamilyBound { value: (num / den.value).powf(1.0 / r), certified: den.certified })
}

/// Strongly constant with both computations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StronglyReport {
    /// The linearized computation when available, else the direct one.
    pub report: SummingReport,
    /// `T_L` on the projective tensor space as a polytope.
    pub linearized: Option<SummingReport>,
    /// Cutting plane over tensor inputs with the forms-ball support.
    pub direct: SummingReport,
    /// Difference of the two upper bounds (0 without a linearized run).
    pub disagreement: f64,
    pub agree: bool,
}

struct StronglyProgram<'a> {
    space: TensorSpace,
    lin: crate::operators::Linearization,
    phi: &'a TensorPhi,
    r: f64,
    forms: FormsBall,
    support: Vec<Vec<f64>>,
    cfg: &'a MultilinearConfig,
    t_scale: f64,
    calls: AtomicU64,
}

impl StronglyProgram<'_> {
    fn image(&self, coords: &[f64]) -> f64 {
        self.lin.codomain.norm_of(&self.lin.apply(coords))
    }

    fn pi(&self, coords: &[f64]) -> f64 {
        if self.phi.needs_pi() {
            pi_value(&self.space, &self.forms, coords, &self.cfg.forms)
        } else {
            0.0
        }
    }

    fn ratio(&self, nu: &[f64], coords: &[f64]) -> f64 {
        let image = self.image(coords);
        if image <= 1e-7 * self.t_scale * linalg::max_abs(coords) {
            return 0.0;
        }
        let pi = self.pi(coords);
        let den: f64 = self
            .support
            .iter()
            .zip(nu)
            .filter(|(_, w)| **w > 0.0)
            .map(|(f, w)| w * self.phi.eval(coords, pi, f, 1.0).powf(self.r))
            .sum();
        if den <= 0.0 {
            f64::INFINITY
        } else {
            image.powf(self.r) / den
        }
    }

    fn tensor_candidates(&self) -> Vec<Vec<f64>> {
        let d = self.space.total();
        let mut out: Vec<Vec<f64>> = (0..d).map(|i| linalg::unit(d, i)).collect();
        if self.space.is_polyhedral() {
            out.extend(self.space.elementary_vertices());
        } else {
            let sets: Vec<Vec<Vec<f64>>> = self
                .space
                .factors
                .iter()
                .map(|f| f.primal_sphere_points(if f.dim() <= 2 { 4 } else { 1 }))
                .collect();
            out.extend(crate::operators::cartesian(&sets).iter().map(|xs| outer(xs)));
        }
        out
    }
}

impl SemiInfiniteProgram for StronglyProgram<'_> {
    type Point = VmElement;

    fn exponent(&self) -> f64 {
        self.r
    }

    fn support_len(&self) -> usize {
        self.support.len()
    }

    fn lhs(&self, v: &VmElement) -> f64 {
        self.image(&v.coords)
    }

    fn integrands(&self, v: &VmElement) -> Vec<f64> {
        let pi = self.pi(&v.coords);
        self.support.iter().map(|f| self.phi.eval(&v.coords, pi, f, 1.0)).collect()
    }

    fn scale(&self, v: &VmElement, t: f64) -> VmElement {
        v.scaled(t)
    }

    fn initial_points(&self) -> Vec<VmElement> {
        let mut c = self.tensor_candidates();
        c.truncate(64);
        c.iter().map(|x| vm_from_coords(&self.space, x)).collect()
    }

    fn separate(&self, nu: &[f64], hints: &[VmElement]) -> Separation<VmElement> {
        use std::sync::atomic::Ordering;
        let call = self.calls.fetch_add(1, Ordering::Relaxed);
        let d = self.space.total();
        let mut cands = self.tensor_candidates();
        cands.extend(hints.iter().map(|v| v.coords.clone()));
        let mut rng = optimize::rng(self.cfg.summing.seed.wrapping_add(call.wrapping_mul(0x9e37_79b9_7f4a_7c15)));
        for _ in 0..self.cfg.summing.restarts {
            cands.push(optimize::random_vector(&mut rng, d));
        }
        let f = |c: &[f64]| self.ratio(nu, c);
        let project = |y: &mut Vec<f64>| {
            let m = linalg::max_abs(y);
            if m > 0.0 {
                y.iter_mut().for_each(|v| *v /= m);
            }
        };
        let found = optimize::multistart_maximize(
            cands,
            &f,
            &project,
            self.cfg.summing.top_k,
            CompassOptions { initial_step: 0.1, min_step: 1e-11, max_evals: 6000 },
        );
        let sup_ratio = found.first().map_or(0.0, |p| p.1).max(0.0);
        Separation {
            points: found.into_iter().map(|(c, v)| (vm_from_coords(&self.space, &c), v)).collect(),
            sup_ratio,
            exact: false,
        }
    }

    fn family_denominator(&self, family: &[VmElement]) -> Denominator {
        let elems: Vec<Vec<f64>> = family.iter().map(|v| v.coords.clone()).collect();
        strongly_denominator(&self.space, self.phi, self.r, &elems, &self.forms, &self.cfg.forms)
    }
}

fn zero_report(r: f64, support: &[Vec<f64>]) -> SummingReport {
    SummingReport {
        r,
        lower_bound: 0.0,
        lb_certificate: Vec::new(),
        upper_bound: 0.0,
        measure: DiscreteMeasure::delta(support[0].clone()),
        gap: 0.0,
        flags: Vec::new(),
        iterations: 0,
        history: Vec::new(),
    }
}

/// The strongly Φ-abstract r-summing constant of `T`.
pub fn strongly_constant(t: &MultilinearMap, phi: &TensorPhi, r: f64, cfg: &MultilinearConfig) -> Result<StronglyReport> {
    check_r(r)?;
    phi.validate()?;
    if t.order() == 1 {
        let lt = LinearMap::new(t.domains[0].clone(), t.codomain.clone(), t.linearize().matrix)?;
        let rep = summing_constant(&lt, &phi.as_linear(lt.domain.clone())?, r, &cfg.summing)?;
        return Ok(StronglyReport { report: rep.clone(), linearized: Some(rep.clone()), direct: rep, disagreement: 0.0, agree: true });
    }
    let space = t.tensor_space();
    let forms = space.forms_ball(&cfg.forms)?;
    let support = forms_support(&forms);
    let lin = t.linearize();
    let t_scale = linalg::max_abs(&lin.matrix).max(1e-300);

    let direct = if t.is_zero() {
        zero_report(r, &support)
    } else {
        let prog = StronglyProgram {
            space: space.clone(),
            lin: lin.clone(),
            phi,
            r,
            forms: forms.clone(),
            support: support.clone(),
            cfg,
            t_scale,
            calls: AtomicU64::new(0),
        };
        let rep = cutting_plane(&prog, &cfg.summing.sip)?;
        let measure = DiscreteMeasure::from_unnormalized(&support, &rep.weights)
            .unwrap_or_else(|| DiscreteMeasure::delta(support[0].clone()));
        SummingReport {
            r,
            lower_bound: rep.lower_bound,
            lb_certificate: rep.lb_family.iter().map(|v| v.coords.clone()).collect(),
            upper_bound: rep.upper_bound,
            measure,
            gap: rep.upper_bound - rep.lower_bound,
            flags: rep.flags,
            iterations: rep.iterations,
            history: rep.history,
        }
    };

    let linearized = if space.is_polyhedral() && forms.exact {
        let lt = lin.to_linear_map(&cfg.forms)?;
        Some(summing_constant(&lt, &phi.as_linear(lt.domain.clone())?, r, &cfg.summing)?)
    } else {
        None
    };
    let disagreement = linearized.as_ref().map_or(0.0, |l| (l.upper_bound - direct.upper_bound).abs());
    let scale = direct.upper_bound.max(1.0);
    Ok(StronglyReport {
        report: linearized.clone().unwrap_or_else(|| direct.clone()),
        linearized,
        direct,
        disagreement,
        agree: disagreement <= cfg.cross_tol * scale,
    })
}

/// `T = T̂ ∘ i ∘ i_m` through the domination space over `V_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StronglyFactorization {
    pub t: MultilinearMap,
    /// The linear factorization of `T_L` on the projective tensor space.
    pub linear: Factorization,
}

impl StronglyFactorization {
    /// `T̂([i_m(x^1, .., x^m)])`.
    pub fn apply(&self, xs: &[Vec<f64>]) -> Vec<f64> {
        self.linear.apply_hat(&outer(xs))
    }
}

/// Builds the factorization from a certified strongly report (polyhedral factors).
pub fn strongly_factorization(
    t: &MultilinearMap,
    phi: &TensorPhi,
    report: &StronglyReport,
    cfg: &MultilinearConfig,
) -> Result<StronglyFactorization> {
    let space = t.tensor_space();
    if !space.is_polyhedral() {
        return Err(Error::RequiresPolyhedral("strongly factorization".into()));
    }
    let rep = &report.report;
    if rep.gap > cfg.summing.sip.tol_duality * rep.upper_bound.max(1.0) {
        return Err(Error::Uncertified(format!("gap {} exceeds tolerance", rep.gap)));
    }
    let lt = t.linearize().to_linear_map(&cfg.forms)?;
    let lphi = phi.as_linear(lt.domain.clone())?;
    let linear = build_factorization(&lt, &lphi, rep, cfg.summing.sip.tol_duality, cfg.seminorm)?;
    Ok(StronglyFactorization { t: t.clone(), linear })
}

/// Random unit tuples, one sphere sample per factor.
pub fn sample_tuples(factors: &[FiniteSpace], count: usize, seed: u64) -> Vec<Tuple> {
    let per: Vec<Vec<Vec<f64>>> =
        factors.iter().enumerate().map(|(j, f)| sample_sphere(f, count, seed.wrapping_add(j as u64 * 7919))).collect();
    (0..count).map(|i| per.iter().map(|s| s[i].clone()).collect()).collect()
}

/// Pointwise `||T(x) - T̂([i_m x])||` and the quotient bound on elementary inputs.
pub fn verify_strongly_factorization(f: &StronglyFactorization, samples: &[Tuple], tol: f64) -> Result<DiagramReport> {
    let mut commute: f64 = 0.0;
    let mut bound: f64 = 0.0;
    for xs in samples {
        let tx = f.t.apply(xs)?;
        let hat = f.apply(xs);
        commute = commute.max(linalg::max_abs(&linalg::sub(&tx, &hat)));
        let lhs = f.t.codomain.norm_of(&hat);
        if lhs > 0.0 {
            bound = bound.max(lhs - f.linear.norm_bound * f.linear.model.seminorm(&outer(xs))?);
        }
    }
    Ok(DiagramReport { commute, bound, pass: commute <= tol && bound <= tol })
}

/// Checks `1/p = Σ_j 1/p_j` and `p_j >= 1`.
pub fn check_exponents(p: f64, ps: &[f64]) -> Result<()> {
    if ps.iter().any(|&q| !(q >= 1.0) || !q.is_finite()) || !(p > 0.0) {
        return Err(Error::InvalidParameter("exponents must be finite with p_j >= 1".into()));
    }
    let rhs: f64 = ps.iter().map(|q| 1.0 / q).sum();
    let lhs = 1.0 / p;
    if (lhs - rhs).abs() > 1e-12 {
        return Err(Error::ExponentIdentity { lhs, rhs });
    }
    Ok(())
}

fn check_multi(t: &MultilinearMap, phis: &[PhiMap], p: f64, ps: &[f64]) -> Result<()> {
    check_dim(t.order(), phis.len())?;
    check_dim(t.order(), ps.len())?;
    check_exponents(p, ps)?;
    for (phi, d) in phis.iter().zip(&t.domains) {
        if phi.base != *d {
            return Err(Error::InvalidParameter("each Φ_j must act on the j-th domain".into()));
        }
    }
    Ok(())
}

/// `(Σ_i ||T(x_i)||^p)^{1/p} / Π_j sup_{x*} (Σ_i Φ_j(x_i^j, x*)^{p_j})^{1/p_j}`.
pub fn multi_ideal_lower_bound(t: &MultilinearMap, phis: &[PhiMap], p: f64, ps: &[f64], families: &[Tuple]) -> Result<f64> {
    check_multi(t, phis, p, ps)?;
    if families.is_empty() {
        return Ok(0.0);
    }
    let mut num = 0.0;
    for xs in families {
        num += t.codomain.norm_of(&t.apply(xs)?).powf(p);
    }
    if num == 0.0 {
        return Ok(0.0);
    }
    let mut den = 1.0;
    for (j, (phi, &pj)) in phis.iter().zip(ps).enumerate() {
        let col: Vec<Vec<f64>> = families.iter().map(|xs| xs[j].clone()).collect();
        den *= phi_family_sup(phi, pj, &col).value.powf(1.0 / pj);
    }
    if den <= 0.0 {
        return Err(Error::ClassViolated { numerator: num.powf(1.0 / p) });
    }
    Ok(num.powf(1.0 / p) / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiFlag {
    /// A cycle raised the constant; the best earlier certificate is kept.
    NotDecreasing,
    /// The cycle limit was reached before the constant settled.
    CycleLimit,
    /// Some single-measure program ended with its gap open.
    GapOpen,
    /// The separation search is heuristic.
    HeuristicOracle,
}

/// `||T(x)|| <= c Π_j (∫ Φ_j(x^j, ·)^{p_j} dμ_j)^{1/p_j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiMeasureCertificate {
    pub c: f64,
    pub measures: Vec<DiscreteMeasure>,
    pub lower_bound: f64,
    pub cycles: usize,
    /// Constant after each single-measure solve.
    pub history: Vec<f64>,
    pub flags: Vec<MultiFlag>,
}

impl MultiMeasureCertificate {
    /// Max over samples of `||T(x)|| - c Π_j (∫ Φ_j^{p_j} dμ_j)^{1/p_j}`.
    pub fn residual(&self, t: &MultilinearMap, phis: &[PhiMap], ps: &[f64], samples: &[Tuple]) -> Result<f64> {
        let mut worst = f64::NEG_INFINITY;
        for xs in samples {
            let lhs = t.codomain.norm_of(&t.apply(xs)?);
            let rhs: f64 = self.measures.iter().zip(phis).zip(ps).zip(xs).map(|(((m, phi), &pj), x)| m.lr_norm(phi, pj, x)).product();
            worst = worst.max(lhs - self.c * rhs);
        }
        Ok(worst.max(0.0))
    }
}

pub(crate) fn tuple_search(cfg: &SummingConfig) -> TupleSearch {
    TupleSearch { restarts: cfg.restarts, top_k: cfg.top_k, seed: cfg.seed }
}

/// Product-measure certificate by alternating single-measure programs,
/// starting from uniform measures and cycling `j = 1..m`. The result is an
/// upper bound; global optimality is not claimed.
pub fn multi_ideal_upper_bound(
    t: &MultilinearMap,
    phis: &[PhiMap],
    p: f64,
    ps: &[f64],
    cfg: &MultilinearConfig,
) -> Result<MultiMeasureCertificate> {
    check_multi(t, phis, p, ps)?;
    let m = t.order();
    let supports: Vec<Vec<Vec<f64>>> =
        phis.iter().zip(ps).map(|(phi, &pj)| measure_support(phi, pj, &cfg.summing).map(|s| s.0)).collect::<Result<_>>()?;
    if m == 1 {
        let lt = LinearMap::new(t.domains[0].clone(), t.codomain.clone(), t.linearize().matrix)?;
        let rep = summing_constant(&lt, &phis[0], ps[0], &cfg.summing)?;
        let mut flags = Vec::new();
        if rep.has_flag(&SipFlag::GapOpen) {
            flags.push(MultiFlag::GapOpen);
        }
        if rep.has_flag(&SipFlag::HeuristicOracle) {
            flags.push(MultiFlag::HeuristicOracle);
        }
        return Ok(MultiMeasureCertificate {
            c: rep.upper_bound,
            measures: vec![rep.measure],
            lower_bound: rep.lower_bound,
            cycles: 1,
            history: vec![rep.upper_bound],
            flags,
        });
    }
    let mut measures: Vec<DiscreteMeasure> = supports.iter().map(|s| DiscreteMeasure::uniform(s.clone())).collect();
    if t.is_zero() {
        return Ok(MultiMeasureCertificate { c: 0.0, measures, lower_bound: 0.0, cycles: 0, history: Vec::new(), flags: Vec::new() });
    }
    let t_scale = linalg::max_abs(&t.coeffs);
    let mut flags = Vec::new();
    let mut history = Vec::new();
    let mut best: Option<(f64, Vec<DiscreteMeasure>)> = None;
    let mut lower: f64 = 0.0;
    let mut prev_cycle = f64::INFINITY;
    let mut cycles = 0;
    let mut settled = false;
    for _ in 0..cfg.cycles.max(1) {
        cycles += 1;
        let mut c_cycle = f64::INFINITY;
        for j in 0..m {
            let fixed = measures.clone();
            let lhs = move |xs: &[Vec<f64>]| -> f64 {
                let image = t.codomain.norm_of(&t.apply_unchecked(xs));
                if image <= 1e-7 * t_scale {
                    return 0.0;
                }
                let mut den = 1.0;
                for k in 0..m {
                    if k != j {
                        den *= fixed[k].lr_norm(&phis[k], ps[k], &xs[k]);
                    }
                }
                if den <= 0.0 {
                    f64::INFINITY
                } else {
                    image / den
                }
            };
            let support_j = supports[j].clone();
            let phi_j = &phis[j];
            let pj = ps[j];
            let prog = TupleProgram {
                factors: t.domains.clone(),
                r: pj,
                support_len: support_j.len(),
                scale_index: j,
                lhs: Box::new(lhs),
                integrands: Box::new(move |xs: &[Vec<f64>]| support_j.iter().map(|s| phi_j.eval(&xs[j], s)).collect()),
                family_den: Box::new(move |fam: &[Tuple]| {
                    let col: Vec<Vec<f64>> = fam.iter().map(|xs| xs[j].clone()).collect();
                    phi_family_sup(phi_j, pj, &col)
                }),
                lhs_scale: 0.0,
                search: tuple_search(&cfg.summing),
                calls: AtomicU64::new((cycles * m + j) as u64 * 1000),
            };
            let rep = cutting_plane(&prog, &cfg.summing.sip)?;
            if rep.has_flag(&SipFlag::GapOpen) && !flags.contains(&MultiFlag::GapOpen) {
                flags.push(MultiFlag::GapOpen);
            }
            if let Some(mu) = DiscreteMeasure::from_unnormalized(&supports[j], &rep.weights) {
                measures[j] = mu;
            }
            let c = rep.upper_bound;
            history.push(c);
            c_cycle = c;
            if best.as_ref().map_or(true, |(b, _)| c < *b) {
                best = Some((c, measures.clone()));
            }
            // Global lower bound from the LP-weighted constraint points: row i
            // gets x_i^k scaled by w_i^{1/p_k}.
            let fam: Vec<Tuple> = rep
                .lb_family
                .iter()
                .map(|xs| {
                    let wj = phis[j].base.norm_of(&xs[j]).powf(pj);
                    xs.iter()
                        .enumerate()
                        .map(|(k, x)| if k == j { x.clone() } else { linalg::scaled(x, wj.powf(1.0 / ps[k])) })
                        .collect()
                })
                .collect();
            if !fam.is_empty() {
                lower = lower.max(multi_ideal_lower_bound(t, phis, p, ps, &fam).unwrap_or(0.0));
            }
            for xs in rep.points.iter().take(64) {
                lower = lower.max(multi_ideal_lower_bound(t, phis, p, ps, std::slice::from_ref(xs)).unwrap_or(0.0));
            }
        }
        if c_cycle > prev_cycle * (1.0 + 1e-8) && !flags.contains(&MultiFlag::NotDecreasing) {
            flags.push(MultiFlag::NotDecreasing);
        }
        if (prev_cycle - c_cycle).abs() <= 1e-8 * c_cycle.max(1e-300) {
            settled = true;
            break;
        }
        prev_cycle = c_cycle;
    }
    if !settled {
        flags.push(MultiFlag::CycleLimit);
    }
    flags.push(MultiFlag::HeuristicOracle);
    let (c, measures) = best.expect("at least one solve ran");
    Ok(MultiMeasureCertificate { c, measures, lower_bound: lower, cycles, history, flags })
}

/// `T = T̂ ∘ (u_1, .., u_m)` through one domination space per factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiFactorization {
    pub t: MultilinearMap,
    pub models: Vec<DominationSpaceModel>,
    pub c: f64,
}

/// Residuals of a product factorization on sample tuples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiFactorizationReport {
    /// `max ||T(x) - T̂(u_1 x^1, .., u_m x^m)||`.
    pub pointwise: f64,
    /// `max_j max (||u_j x^j|| - (∫ Φ_j^{p_j} dμ_j)^{1/p_j})_+`.
    pub per_factor: f64,
    /// `max (||T̂(u x)|| - c Π_j ||u_j x^j||)_+`.
    pub domination: f64,
    pub pass: bool,
}

impl MultiFactorization {
    /// `T̂` on the classes of `xs`.
    pub fn apply_hat(&self, xs: &[Vec<f64>]) -> Vec<f64> {
        let reps: Vec<Vec<f64>> = self.models.iter().zip(xs).map(|(m, x)| m.representative(x)).collect();
        self.t.apply_unchecked(&reps)
    }

    pub fn verify(&self, samples: &[Tuple], tol: f64) -> Result<MultiFactorizationReport> {
        let (mut pointwise, mut per_factor, mut domination) = (0.0f64, 0.0f64, 0.0f64);
        for xs in samples {
            let tx = self.t.apply(xs)?;
            let hat = self.apply_hat(xs);
            pointwise = pointwise.max(linalg::max_abs(&linalg::sub(&tx, &hat)));
            let mut prod = 1.0;
            for (m, x) in self.models.iter().zip(xs) {
                let s = m.seminorm(x)?;
                per_factor = per_factor.max(s - m.gauge(x));
                prod *= s;
            }
            domination = domination.max(self.t.codomain.norm_of(&hat) - self.c * prod);
        }
        let pass = pointwise <= tol && per_factor <= tol && domination <= tol;
        Ok(MultiFactorizationReport { pointwise, per_factor, domination, pass })
    }
}

/// Builds the quotient maps `u_j` and `T̂` from a certificate.
pub fn factor_multilinear(
    t: &MultilinearMap,
    cert: &MultiMeasureCertificate,
    phis: &[PhiMap],
    ps: &[f64],
    cfg: &MultilinearConfig,
) -> Result<MultiFactorization> {
    check_dim(t.order(), cert.measures.len())?;
    check_dim(t.order(), phis.len())?;
    check_dim(t.order(), ps.len())?;
    if cert.flags.contains(&MultiFlag::GapOpen) {
        return Err(Error::Uncertified("a single-measure program left its gap open".into()));
    }
    let mut models = Vec::new();
    for ((phi, mu), &pj) in phis.iter().zip(&cert.measures).zip(ps) {
        models.push(build_model(&phi.base, phi, mu, pj, cfg.seminorm)?);
    }
    // T̂ is well defined only if T vanishes whenever one argument is null.
    let scale = linalg::max_abs(&t.coeffs).max(1.0);
    for (j, model) in models.iter().enumerate() {
        for nvec in &model.null_basis {
            let sets: Vec<Vec<Vec<f64>>> = t
                .domains
                .iter()
                .enumerate()
                .map(|(k, d)| if k == j { vec![nvec.clone()] } else { (0..d.dim()).map(|i| linalg::unit(d.dim(), i)).collect() })
                .collect();
            for xs in crate::operators::cartesian(&sets) {
                let leak = linalg::max_abs(&t.apply_unchecked(&xs));
                if leak > 1e-8 * scale {
                    return Err(Error::ClassViolated { numerator: leak });
                }
            }
        }
    }
    Ok(MultiFactorization { t: t.clone(), models, c: cert.c })
}

#[cfg(test)]
mod tests;
