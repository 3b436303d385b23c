//! Task dispatch and result records.

use serde::{Deserialize, Serialize};
use summing_core::{
    build_factorization, criterion_name, dimant_constant, factor_multilinear, factorable_constant, final_factorization,
    multi_ideal_upper_bound, run_suite, sample_sphere, sample_tuples, strongly_constant, strongly_p_summing_constant,
    summing_constant, verify_diagram, CriterionResult, DiagramReport, DiscreteMeasure, FinalFactorizationRecord,
    MultiFactorizationReport, MultiMeasureCertificate, PhiMap, SigmaReport, StronglyReport, SuiteConfig, SummingReport,
};

use crate::config::{ExperimentConfig, Task};
use crate::error::CliError;

/// How a finished task ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// Bounds met within `tol_duality`.
    Certified,
    GapOpen,
    /// Some acceptance criterion failed.
    Failed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Certified => 0,
            Status::GapOpen | Status::Failed => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskResult {
    Summing(SummingReport),
    Strongly {
        /// Plain families, `σ = 0`.
        plain: SigmaReport,
        /// Tensor inputs with the configured `Φ`.
        phi: StronglyReport,
    },
    MultiIdeal(MultiMeasureCertificate),
    Dimant(SigmaReport),
    Factorable(SigmaReport),
    Factorize(FactorizeResult),
    VerifySuite(Vec<CriterionResult>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FactorizeResult {
    Linear { report: SummingReport, diagram: DiagramReport },
    MultiIdeal { certificate: MultiMeasureCertificate, factorization: MultiFactorizationReport },
    Factorable { report: SigmaReport, record: FinalFactorizationRecord },
}

fn closed(lower: f64, upper: f64, tol: f64) -> Status {
    if upper.is_finite() && upper - lower <= tol * upper.max(1.0) {
        Status::Certified
    } else {
        Status::GapOpen
    }
}

impl TaskResult {
    pub fn status(&self, tol: f64) -> Status {
        match self {
            TaskResult::Summing(r) | TaskResult::Factorize(FactorizeResult::Linear { report: r, .. }) => {
                closed(r.lower_bound, r.upper_bound, tol)
            }
            TaskResult::Strongly { plain, phi } => {
                let a = closed(plain.lower_bound, plain.upper_bound, tol);
                let b = closed(phi.report.lower_bound, phi.report.upper_bound, tol);
                if a == Status::Certified && b == Status::Certified { a } else { Status::GapOpen }
            }
            TaskResult::MultiIdeal(c) | TaskResult::Factorize(FactorizeResult::MultiIdeal { certificate: c, .. }) => {
                closed(c.lower_bound, c.c, tol)
            }
            TaskResult::Dimant(r) | TaskResult::Factorable(r) | TaskResult::Factorize(FactorizeResult::Factorable { report: r, .. }) => {
                closed(r.lower_bound, r.upper_bound, tol)
            }
            TaskResult::VerifySuite(rows) => {
                if rows.iter().all(|r| r.pass) {
                    Status::Certified
                } else {
                    Status::Failed
                }
            }
        }
    }

    /// Named measures, for CSV flattening.
    pub fn measures(&self) -> Vec<(String, &DiscreteMeasure)> {
        let mut out = Vec::new();
        match self {
            TaskResult::Summing(r) | TaskResult::Factorize(FactorizeResult::Linear { report: r, .. }) => {
                out.push(("measure".to_string(), &r.measure))
            }
            TaskResult::Strongly { plain, phi } => {
                out.push(("plain".to_string(), &plain.measure));
                out.push(("phi".to_string(), &phi.report.measure));
            }
            TaskResult::MultiIdeal(c) | TaskResult::Factorize(FactorizeResult::MultiIdeal { certificate: c, .. }) => {
                for (j, m) in c.measures.iter().enumerate() {
                    out.push((format!("factor{}", j + 1), m));
                }
            }
            TaskResult::Dimant(r) | TaskResult::Factorable(r) | TaskResult::Factorize(FactorizeResult::Factorable { report: r, .. }) => {
                out.push(("measure".to_string(), &r.measure))
            }
            TaskResult::VerifySuite(_) => {}
        }
        out
    }
}

/// Pass/fail table of the acceptance suite.
pub fn suite_table(rows: &[CriterionResult]) -> String {
    let mut s = format!("{:>2}  {:<6} {:<32} {:>14} {:>10}\n", "id", "status", "criterion", "measured", "tolerance");
    for r in rows {
        s.push_str(&format!(
            "{:>2}  {:<6} {:<32} {:>14.6e} {:>10.1e}  {}\n",
            r.id,
            if r.pass { "PASS" } else { "FAIL" },
            criterion_name(r.id),
            r.measured,
            r.tolerance,
            r.detail
        ));
    }
    s
}

pub fn run_suite_with(seed: u64, tolerance_scale: f64, filter: &[u32]) -> Vec<CriterionResult> {
    run_suite(&SuiteConfig { seed, tolerance_scale }, filter)
}

pub fn execute(cfg: &ExperimentConfig) -> Result<TaskResult, CliError> {
    let mc = &cfg.solver.core;
    let e = &cfg.exponents;
    Ok(match cfg.task {
        Task::Summing => {
            let t = cfg.linear()?;
            TaskResult::Summing(summing_constant(&t, &cfg.phi_on(t.domain.clone())?, e.p, &mc.summing)?)
        }
        Task::Strongly => {
            let t = cfg.multilinear()?;
            TaskResult::Strongly {
                plain: strongly_p_summing_constant(&t, e.p, mc)?,
                phi: strongly_constant(&t, &cfg.tensor_phi()?, e.p, mc)?,
            }
        }
        Task::MultiIdeal => {
            let t = cfg.multilinear()?;
            let phis = t.domains.iter().map(|d| cfg.phi_on(d.clone())).collect::<Result<Vec<PhiMap>, _>>()?;
            TaskResult::MultiIdeal(multi_ideal_upper_bound(&t, &phis, e.p, &e.p_j, mc)?)
        }
        Task::Dimant => TaskResult::Dimant(dimant_constant(&cfg.multilinear()?, e.p, e.sigma, mc)?),
        Task::Factorable => TaskResult::Factorable(factorable_constant(&cfg.multilinear()?, e.p, e.sigma, mc)?),
        Task::Factorize => TaskResult::Factorize(factorize(cfg)?),
        Task::VerifySuite => TaskResult::VerifySuite(run_suite_with(cfg.seed(), cfg.solver.tolerance_scale, &cfg.filter)),
    })
}

/// Linear operators get the domination-space diagram; multilinear ones the
/// product factorization when `p_j` is given, else the factorable one.
fn factorize(cfg: &ExperimentConfig) -> Result<FactorizeResult, CliError> {
    let mc = &cfg.solver.core;
    let e = &cfg.exponents;
    let seed = cfg.seed();
    let t = cfg.multilinear()?;
    if t.order() == 1 {
        let lt = cfg.linear()?;
        let phi = cfg.phi_on(lt.domain.clone())?;
        let report = summing_constant(&lt, &phi, e.p, &mc.summing)?;
        let f = build_factorization(&lt, &phi, &report, mc.summing.sip.tol_duality, mc.seminorm)?;
        let diagram = verify_diagram(&f, &sample_sphere(&lt.domain, cfg.solver.samples, seed), mc.summing.sip.tol_duality)?;
        return Ok(FactorizeResult::Linear { report, diagram });
    }
    if !e.p_j.is_empty() {
        let phis = t.domains.iter().map(|d| cfg.phi_on(d.clone())).collect::<Result<Vec<PhiMap>, _>>()?;
        let certificate = multi_ideal_upper_bound(&t, &phis, e.p, &e.p_j, mc)?;
        let f = factor_multilinear(&t, &certificate, &phis, &e.p_j, mc)?;
        let factorization = f.verify(&sample_tuples(&t.domains, cfg.solver.samples, seed), mc.summing.sip.tol_duality)?;
        return Ok(FactorizeResult::MultiIdeal { certificate, factorization });
    }
    let report = factorable_constant(&t, e.p, e.sigma, mc)?;
    let record = final_factorization(&t, &report, mc, cfg.solver.samples, seed)?;
    Ok(FactorizeResult::Factorable { report, record })
}
