//! Experiment documents: parsing, validation and name resolution.
//!
//! Operator coefficients are codomain-last. Entry `(i_1, .., i_m, k)` sits at
//! index `((i_1 n_2 + i_2) n_3 + ..) dim Y + k`, so a linear map `X -> Y` is
//! stored as its transpose, one row of `dim Y` values per basis vector of `X`.

use serde::{Deserialize, Serialize};
use summing_core::{FiniteSpace, LinearMap, MultilinearConfig, MultilinearMap, PhiKind, PhiMap, SpaceSpec, TensorPhi};

use crate::error::CliError;

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Summing,
    Strongly,
    MultiIdeal,
    Dimant,
    Factorable,
    Factorize,
    VerifySuite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSpace {
    pub name: String,
    #[serde(flatten)]
    pub spec: SpaceSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub name: String,
    pub domains: Vec<String>,
    pub codomain: String,
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Exponents {
    pub p: f64,
    /// Per-factor exponents of a multi-ideal task.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub p_j: Vec<f64>,
    pub sigma: f64,
}

impl Default for Exponents {
    fn default() -> Self {
        Self { p: 1.0, p_j: Vec::new(), sigma: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    #[serde(flatten)]
    pub core: MultilinearConfig,
    /// Samples drawn when checking factorizations.
    pub samples: usize,
    /// Multiplies every acceptance tolerance in `verify-suite`.
    pub tolerance_scale: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { core: MultilinearConfig::default(), samples: 100, tolerance_scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    #[serde(default)]
    pub spaces: Vec<NamedSpace>,
    #[serde(default)]
    pub operators: Vec<OperatorSpec>,
    pub task: Task,
    /// Operator the task acts on; defaults to the only one declared.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<String>,
    #[serde(default = "identity_phi")]
    pub phi: PhiKind,
    #[serde(default)]
    pub exponents: Exponents,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Criteria run by `verify-suite`; empty means all.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub filter: Vec<u32>,
}

fn identity_phi() -> PhiKind {
    PhiKind::Identity
}

/// 1-based line of the first occurrence of `needle` in `text`.
fn line_of(text: &str, needle: &str) -> usize {
    text.find(needle).map_or(1, |at| text[..at].matches('\n').count() + 1)
}

impl ExperimentConfig {
    /// Parses and validates `text`; messages carry the line they refer to.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| CliError::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
        cfg.validate(text)?;
        Ok(cfg)
    }

    fn validate(&self, text: &str) -> Result<(), CliError> {
        let invalid = |needle: &str, message: String| CliError::Invalid { line: line_of(text, needle), message };
        if self.schema != SCHEMA {
            return Err(invalid("\"schema\"", format!("unsupported schema {}, expected {SCHEMA}", self.schema)));
        }
        for (i, s) in self.spaces.iter().enumerate() {
            if self.spaces[..i].iter().any(|o| o.name == s.name) {
                return Err(invalid(&format!("\"{}\"", s.name), format!("space `{}` declared twice", s.name)));
            }
            FiniteSpace::try_from(s.spec.clone())
                .map_err(|e| invalid(&format!("\"{}\"", s.name), format!("space `{}`: {e}", s.name)))?;
        }
        for op in &self.operators {
            for d in op.domains.iter().chain(std::iter::once(&op.codomain)) {
                if !self.spaces.iter().any(|s| &s.name == d) {
                    return Err(invalid(&format!("\"{d}\""), format!("operator `{}` refers to unknown space `{d}`", op.name)));
                }
            }
            self.build_operator(op).map_err(|e| invalid(&format!("\"{}\"", op.name), format!("operator `{}`: {e}", op.name)))?;
        }
        if self.task != Task::VerifySuite {
            let op = self.target().map_err(|e| invalid("\"operator\"", e.to_string()))?;
            let m = op.domains.len();
            if self.exponents.p < 1.0 {
                return Err(invalid("\"p\"", format!("p = {} must be >= 1", self.exponents.p)));
            }
            match self.task {
                Task::Summing if m != 1 => {
                    return Err(invalid("\"task\"", format!("summing needs a linear operator, `{}` has {m} domains", op.name)))
                }
                Task::MultiIdeal if self.exponents.p_j.len() != m => {
                    return Err(invalid("\"p_j\"", format!("multi-ideal needs {m} exponents p_j")));
                }
                _ => {}
            }
            if !self.exponents.p_j.is_empty() && self.exponents.p_j.len() == m {
                let rhs: f64 = self.exponents.p_j.iter().map(|q| 1.0 / q).sum();
                let lhs = 1.0 / self.exponents.p;
                if (lhs - rhs).abs() > 1e-12 {
                    return Err(invalid("\"p_j\"", format!("exponent identity violated: 1/p = {lhs}, sum of 1/p_j = {rhs}")));
                }
            }
        }
        Ok(())
    }

    pub fn space(&self, name: &str) -> Result<FiniteSpace, CliError> {
        let s = self
            .spaces
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| CliError::Unresolved(format!("space `{name}`")))?;
        let space = FiniteSpace::try_from(s.spec.clone())?;
        Ok(if s.spec.label.is_empty() { space.with_label(name) } else { space })
    }

    /// The operator named by `operator`, or the single declared one.
    pub fn target(&self) -> Result<&OperatorSpec, CliError> {
        match &self.operator {
            Some(name) => {
                self.operators.iter().find(|o| &o.name == name).ok_or_else(|| CliError::Unresolved(format!("operator `{name}`")))
            }
            None if self.operators.len() == 1 => Ok(&self.operators[0]),
            None => Err(CliError::Unresolved("`operator` must name one of several operators".into())),
        }
    }

    pub fn build_operator(&self, op: &OperatorSpec) -> Result<MultilinearMap, CliError> {
        let domains = op.domains.iter().map(|d| self.space(d)).collect::<Result<Vec<_>, _>>()?;
        Ok(MultilinearMap::new(domains, self.space(&op.codomain)?, op.coeffs.clone())?)
    }

    pub fn multilinear(&self) -> Result<MultilinearMap, CliError> {
        self.build_operator(self.target()?)
    }

    pub fn linear(&self) -> Result<LinearMap, CliError> {
        let t = self.multilinear()?;
        if t.order() != 1 {
            return Err(CliError::Unresolved("task needs a linear operator".into()));
        }
        Ok(LinearMap::new(t.domains[0].clone(), t.codomain.clone(), t.linearize().matrix)?)
    }

    pub fn phi_on(&self, base: FiniteSpace) -> Result<PhiMap, CliError> {
        Ok(match &self.phi {
            PhiKind::Identity => PhiMap::identity(base),
            PhiKind::SigmaInterp { sigma } => PhiMap::sigma_interp(base, *sigma)?,
            PhiKind::SquareOverNorm => PhiMap::square_over_norm(base),
            PhiKind::Anchored { x0 } => PhiMap::anchored(base, x0.clone())?,
        })
    }

    pub fn tensor_phi(&self) -> Result<TensorPhi, CliError> {
        match &self.phi {
            PhiKind::Identity => Ok(TensorPhi::Identity),
            PhiKind::SigmaInterp { sigma } => Ok(TensorPhi::SigmaInterp { sigma: *sigma }),
            other => Err(CliError::Unresolved(format!("phi {other:?} has no tensor version"))),
        }
    }

    /// Replaces every seed with `seed`.
    pub fn reseed(&mut self, seed: u64) {
        let c = &mut self.solver.core;
        c.summing.seed = seed;
        c.forms.seed = seed;
        c.seminorm.seed = seed;
    }

    pub fn seed(&self) -> u64 {
        self.solver.core.summing.seed
    }
}
