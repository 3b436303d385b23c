//! The σ-interpolated multilinear classes: Dimant strongly (p,σ)-continuous
//! maps, dominated through `δ_{pσ}`, and the factorable strongly
//! (p,σ)-continuous maps, which are strongly Φ-abstract summing for a tensor
//! `Φ`. Every class runs at the single exponent `r = p/(1-σ)`.

use std::sync::atomic::AtomicU64;

use serde::{Deserialize, Serialize};

use crate::domination_space::{build_factorization, verify_diagram};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, dot};
use crate::linear_summing::{check_domination, sample_sphere, summing_constant, DiscreteMeasure, PhiMap, SummingReport};
use crate::multilinear_summing::{
    forms_support, sample_tuples, strongly_constant, tuple_search, FamilyBound, MultilinearConfig, TensorPhi,
};
use crate::operators::{outer, FormsBall, LinearMap, MultilinearMap};
use crate::sip_solver::tuple::{Tuple, TupleProgram};
use crate::sip_solver::{cutting_plane, Denominator, SipFlag};
use crate::spaces::FiniteSpace;

/// Rows `(x_i^1, .., x_i^m)` of plain tuples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlainFamily {
    pub rows: Vec<Tuple>,
}

impl PlainFamily {
    pub fn new(factors: &[FiniteSpace], rows: Vec<Tuple>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidParameter("plain family needs a row".into()));
        }
        for row in &rows {
            check_dim(factors.len(), row.len())?;
            for (f, x) in factors.iter().zip(row) {
                check_dim(f.dim(), x.len())?;
            }
        }
        Ok(Self { rows })
    }
}

/// Two-sided estimate of a (p,σ) constant. The measure lives on the forms ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaReport {
    pub p: f64,
    pub sigma: f64,
    /// `p / (1 - σ)`.
    pub r: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub measure: DiscreteMeasure,
    pub gap: f64,
    pub flags: Vec<SipFlag>,
    pub iterations: usize,
}

impl SigmaReport {
    fn from_summing(p: f64, sigma: f64, rep: SummingReport) -> Self {
        Self {
            p,
            sigma,
            r: rep.r,
            lower_bound: rep.lower_bound,
            upper_bound: rep.upper_bound,
            measure: rep.measure,
            gap: rep.gap,
            flags: rep.flags,
            iterations: rep.iterations,
        }
    }

    fn to_summing(&self) -> SummingReport {
        SummingReport {
            r: self.r,
            lower_bound: self.lower_bound,
            lb_certificate: Vec::new(),
            upper_bound: self.upper_bound,
            measure: self.measure.clone(),
            gap: self.gap,
            flags: self.flags.clone(),
            iterations: self.iterations,
            history: Vec::new(),
        }
    }

    pub fn has_flag(&self, f: &SipFlag) -> bool {
        self.flags.contains(f)
    }
}

/// `r = p / (1 - σ)` after validating `p >= 1` and `0 <= σ < 1`.
pub fn sigma_exponent(p: f64, sigma: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p = {p} must be finite and >= 1")));
    }
    if !(0.0..1.0).contains(&sigma) {
        return Err(Error::InvalidParameter(format!("sigma = {sigma} must lie in [0, 1)")));
    }
    Ok(p / (1.0 - sigma))
}

/// `|φ(x)|^{1-σ} Π ||x^j||^σ`, never below `|φ(x)|`. On the forms ball
/// `|φ(x)| <= Π ||x^j||` so the floor only absorbs rounding.
fn interp(phi_x: f64, prod: f64, sigma: f64) -> f64 {
    if sigma == 0.0 || phi_x == 0.0 {
        return phi_x;
    }
    phi_x.max(phi_x.powf(1.0 - sigma) * prod.powf(sigma))
}

fn row_terms(factors: &[FiniteSpace], row: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let prod = factors.iter().zip(row).map(|(f, x)| f.norm_of(x)).product();
    (outer(row), prod)
}

fn sup_sum(forms: &FormsBall, rows: &[(Vec<f64>, f64)], r: f64, sigma: f64) -> f64 {
    forms
        .points
        .iter()
        .map(|f| rows.iter().map(|(c, prod)| interp(dot(c, f).abs(), *prod, sigma).powf(r)).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `sup_φ (Σ_i |φ(x_i)|^r)^{1/r}` over the forms model.
pub fn strongly_denominator(factors: &[FiniteSpace], fam: &PlainFamily, r: f64, forms: &FormsBall) -> f64 {
    let rows: Vec<(Vec<f64>, f64)> = fam.rows.iter().map(|row| row_terms(factors, row)).collect();
    sup_sum(forms, &rows, r, 0.0).powf(1.0 / r)
}

/// `δ_{pσ}` over the forms model: exact on polyhedral factors, a lower
/// estimate otherwise. Panics if it falls below the strongly denominator at
/// `p/(1-σ)`.
pub fn delta_p_sigma(factors: &[FiniteSpace], fam: &PlainFamily, p: f64, sigma: f64, forms: &FormsBall) -> Result<f64> {
    let r = sigma_exponent(p, sigma)?;
    let rows: Vec<(Vec<f64>, f64)> = fam.rows.iter().map(|row| row_terms(factors, row)).collect();
    let delta = sup_sum(forms, &rows, r, sigma).powf(1.0 / r);
    let strongly = sup_sum(forms, &rows, r, 0.0).powf(1.0 / r);
    assert!(strongly <= delta, "strongly denominator {strongly} exceeds delta {delta}");
    Ok(delta)
}

/// `(Σ_i ||T(x_i)||^r)^{1/r} / δ_{pσ}(x)`.
pub fn dimant_family_lower_bound(
    t: &MultilinearMap,
    p: f64,
    sigma: f64,
    fam: &PlainFamily,
    cfg: &MultilinearConfig,
) -> Result<FamilyBound> {
    let r = sigma_exponent(p, sigma)?;
    let forms = t.tensor_space().forms_ball(&cfg.forms)?;
    let num: f64 = fam.rows.iter().map(|row| t.apply(row).map(|y| t.codomain.norm_of(&y).powf(r))).sum::<Result<f64>>()?;
    if num == 0.0 {
        return Ok(FamilyBound { value: 0.0, certified: forms.exact });
    }
    let delta = delta_p_sigma(&t.domains, fam, p, sigma, &forms)?;
    if delta <= 0.0 {
        return Err(Error::ClassViolated { numerator: num.powf(1.0 / r) });
    }
    Ok(FamilyBound { value: num.powf(1.0 / r) / delta, certified: forms.exact })
}

fn zero_report(p: f64, sigma: f64, r: f64, support: &[Vec<f64>]) -> SigmaReport {
    SigmaReport {
        p,
        sigma,
        r,
        lower_bound: 0.0,
        upper_bound: 0.0,
        measure: DiscreteMeasure::delta(support[0].clone()),
        gap: 0.0,
        flags: Vec::new(),
        iterations: 0,
    }
}

/// The Dimant strongly (p,σ)-continuous constant: cutting plane on
/// `||T(x)||^r <= Σ_φ ν_φ (|φ(x)|^{1-σ} Π ||x^j||^σ)^r` over unit tuples.
pub fn dimant_constant(t: &MultilinearMap, p: f64, sigma: f64, cfg: &MultilinearConfig) -> Result<SigmaReport> {
    let r = sigma_exponent(p, sigma)?;
    if t.order() == 1 {
        let lt = LinearMap::new(t.domains[0].clone(), t.codomain.clone(), t.linearize().matrix)?;
        let phi = PhiMap::sigma_interp(lt.domain.clone(), sigma)?;
        return Ok(SigmaReport::from_summing(p, sigma, summing_constant(&lt, &phi, r, &cfg.summing)?));
    }
    let forms = t.tensor_space().forms_ball(&cfg.forms)?;
    let support = forms_support(&forms);
    if t.is_zero() {
        return Ok(zero_report(p, sigma, r, &support));
    }
    let factors = t.domains.clone();
    let exact = forms.exact;
    let prog = TupleProgram {
        factors: factors.clone(),
        r,
        support_len: support.len(),
        scale_index: 0,
        lhs: Box::new(|xs: &[Vec<f64>]| t.codomain.norm_of(&t.apply_unchecked(xs))),
        integrands: Box::new(|xs: &[Vec<f64>]| {
            let (c, prod) = row_terms(&factors, xs);
            support.iter().map(|f| interp(dot(&c, f).abs(), prod, sigma)).collect()
        }),
        family_den: Box::new(|fam: &[Tuple]| {
            let rows: Vec<(Vec<f64>, f64)> = fam.iter().map(|row| row_terms(&factors, row)).collect();
            Denominator { value: sup_sum(&forms, &rows, r, sigma), certified: exact }
        }),
        lhs_scale: linalg::max_abs(&t.coeffs),
        search: tuple_search(&cfg.summing),
        calls: AtomicU64::new(0),
    };
    let rep = cutting_plane(&prog, &cfg.summing.sip)?;
    let measure =
        DiscreteMeasure::from_unnormalized(&support, &rep.weights).unwrap_or_else(|| DiscreteMeasure::delta(support[0].clone()));
    Ok(SigmaReport {
        p,
        sigma,
        r,
        lower_bound: rep.lower_bound,
        upper_bound: rep.upper_bound,
        measure,
        gap: rep.upper_bound - rep.lower_bound,
        flags: rep.flags,
        iterations: rep.iterations,
    })
}

/// The strongly p-summing constant (plain families), i.e. Dimant at `σ = 0`.
pub fn strongly_p_summing_constant(t: &MultilinearMap, p: f64, cfg: &MultilinearConfig) -> Result<SigmaReport> {
    dimant_constant(t, p, 0.0, cfg)
}

/// Outcome of comparing two computed constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    /// The value expected to be smaller.
    pub smaller: f64,
    /// Its lower bound, when it matters.
    pub smaller_lower: f64,
    pub larger: f64,
    pub pass: bool,
}

/// `||T||_{q,σ} <= ||T||_{p,σ}` for `p <= q`, on both bounds of the left side.
pub fn sigma_monotonicity_check(
    t: &MultilinearMap,
    p: f64,
    q: f64,
    sigma: f64,
    cfg: &MultilinearConfig,
    tol: f64,
) -> Result<OrderingReport> {
    if q < p {
        return Err(Error::InvalidParameter(format!("monotonicity needs p <= q, got p = {p}, q = {q}")));
    }
    let at_p = dimant_constant(t, p, sigma, cfg)?;
    let at_q = dimant_constant(t, q, sigma, cfg)?;
    let pass = at_q.upper_bound <= at_p.upper_bound + tol && at_q.lower_bound <= at_p.upper_bound + tol;
    Ok(OrderingReport { smaller: at_q.upper_bound, smaller_lower: at_q.lower_bound, larger: at_p.upper_bound, pass })
}

/// Strongly `p/(1-σ)`-summing maps are Dimant (p,σ)-continuous with no larger constant.
pub fn inclusion_check(t: &MultilinearMap, p: f64, sigma: f64, cfg: &MultilinearConfig, tol: f64) -> Result<OrderingReport> {
    let r = sigma_exponent(p, sigma)?;
    let dimant = dimant_constant(t, p, sigma, cfg)?;
    let strongly = strongly_p_summing_constant(t, r, cfg)?;
    Ok(OrderingReport {
        smaller: dimant.upper_bound,
        smaller_lower: dimant.lower_bound,
        larger: strongly.upper_bound,
        pass: dimant.upper_bound <= strongly.upper_bound + tol,
    })
}

/// The factorable strongly (p,σ)-continuous constant.
pub fn factorable_constant(t: &MultilinearMap, p: f64, sigma: f64, cfg: &MultilinearConfig) -> Result<SigmaReport> {
    let r = sigma_exponent(p, sigma)?;
    let rep = strongly_constant(t, &TensorPhi::FactorableSigma { sigma }, r, cfg)?;
    Ok(SigmaReport::from_summing(p, sigma, rep.report))
}

/// Upper bounds of the Dimant constant along `sigmas`. A diagnostic only.
pub fn sigma_profile(t: &MultilinearMap, p: f64, sigmas: &[f64], cfg: &MultilinearConfig) -> Result<Vec<(f64, f64)>> {
    sigmas.iter().map(|&s| dimant_constant(t, p, s, cfg).map(|rep| (s, rep.upper_bound))).collect()
}

/// Residuals of the three equivalent statements for a factorable certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalFactorizationRecord {
    /// Worst `||(T_L v_i)||_r - C sup_φ (Σ_i Φ(v_i)(φ)^r)^{1/r}` over sampled families.
    pub inequality_residual: f64,
    /// Worst `||T_L v|| - C (∫ Φ(v)^r dμ)^{1/r}`.
    pub domination_residual: f64,
    /// Worst commutation or norm-bound defect of `T_L = T̂ ∘ i_{p,σ}`.
    pub diagram_residual: f64,
    pub gap: f64,
}

impl FinalFactorizationRecord {
    pub fn pass(&self, tol: f64) -> bool {
        self.inequality_residual <= tol && self.domination_residual <= tol && self.diagram_residual <= tol
    }
}

/// Builds the `L_{p,σ}(η)` factorization from a certified factorable report
/// and checks all three statements on samples.
pub fn final_factorization(
    t: &MultilinearMap,
    report: &SigmaReport,
    cfg: &MultilinearConfig,
    samples: usize,
    seed: u64,
) -> Result<FinalFactorizationRecord> {
    let r = sigma_exponent(report.p, report.sigma)?;
    let space = t.tensor_space();
    if !space.is_polyhedral() {
        return Err(Error::RequiresPolyhedral("final factorization".into()));
    }
    if report.gap > cfg.summing.sip.tol_duality * report.upper_bound.max(1.0) {
        return Err(Error::Uncertified(format!("gap {} exceeds tolerance", report.gap)));
    }
    let lt = t.linearize().to_linear_map(&cfg.forms)?;
    let phi = TensorPhi::FactorableSigma { sigma: report.sigma }.as_linear(lt.domain.clone())?;
    let f = build_factorization(&lt, &phi, &report.to_summing(), cfg.summing.sip.tol_duality, cfg.seminorm)?;
    let c = report.upper_bound;

    let mut vs = sample_sphere(&lt.domain, samples, seed);
    vs.extend(sample_tuples(&t.domains, samples, seed.wrapping_add(1)).iter().map(|xs| outer(xs)));

    let forms = space.forms_ball(&cfg.forms)?;
    let mut inequality: f64 = 0.0;
    for fam in vs.chunks(3) {
        let lhs: f64 = fam.iter().map(|v| lt.image_norm(v).powf(r)).sum::<f64>().powf(1.0 / r);
        let den = forms
            .points
            .iter()
            .map(|g| fam.iter().map(|v| dot(v, g).abs().powf(r)).sum::<f64>())
            .fold(0.0, f64::max)
            .powf(1.0 / r);
        inequality = inequality.max(lhs - c * den);
    }
    let domination = check_domination(&lt, &phi, r, &report.measure, c, &vs, 0.0)?.max_residual;
    let diagram = verify_diagram(&f, &vs, 0.0)?;
    Ok(FinalFactorizationRecord {
        inequality_residual: inequality.max(0.0),
        domination_residual: domination,
        diagram_residual: diagram.commute.max(diagram.bound).max(0.0),
        gap: report.gap,
    })
}

#[cfg(test)]
mod tests;
