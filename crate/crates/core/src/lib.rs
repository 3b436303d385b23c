//! Numerical toolkit for summing operators between finite-dimensional normed
//! spaces.

pub mod dimant_sigma;
pub mod domination_space;
pub mod error;
pub mod linalg;
pub mod linear_summing;
pub mod multilinear_summing;
pub mod operators;
pub mod optimize;
pub mod sip_solver;
pub mod spaces;
pub mod verify;

pub use dimant_sigma::{
    delta_p_sigma, dimant_constant, dimant_family_lower_bound, factorable_constant, final_factorization, inclusion_check,
    sigma_exponent, sigma_monotonicity_check, sigma_profile, strongly_p_summing_constant, FinalFactorizationRecord,
    OrderingReport, PlainFamily, SigmaReport,
};
pub use domination_space::{
    build_factorization, build_model, verify_diagram, DiagramReport, DominationSpaceModel, Factorization,
    SeminormConfig,
};
pub use error::{Error, Result};
pub use linear_summing::{
    check_domination, example3_mixing_check, family_lower_bound, sample_sphere, summing_constant, DiscreteMeasure,
    PhiKind, PhiMap, SummingConfig, SummingReport,
};
pub use multilinear_summing::{
    factor_multilinear, multi_ideal_lower_bound, multi_ideal_upper_bound, sample_tuples, strongly_constant,
    strongly_factorization, CoefficientFamily, MultiFactorization, MultiFactorizationReport, MultiFlag,
    MultiMeasureCertificate, MultilinearConfig, StronglyReport, TensorPhi,
};
pub use operators::{
    embed_vm, linearize, projective_norm, vm_eval, FormsBall, FormsConfig, LinearMap, MultilinearMap, OpNormMode,
    ProjectiveNorm, TensorElement, TensorSpace, VmElement, VmTerm,
};
pub use sip_solver::{cutting_plane, min_measure_mass, solve_lp, LpProblem, LpStatus, SipConfig, SipFlag};
pub use spaces::{BallRequest, DualBallModel, Exactness, Exponent, FiniteSpace, NormKind, SpaceSpec};
pub use verify::{criterion_name, run_suite, CriterionResult, SuiteConfig, CRITERIA};
