//! Test-function families, empirical operator norms and checks of the
//! dominance, reduction, Hedberg-type and boundedness inequalities.

mod empirical;
mod family;
mod pointwise;
mod reduction;
mod theorem;

pub use empirical::{empirical_ratio, max_ratio, sharpen, RatioResult, SHARPEN_ITERATIONS, SHARPEN_STEP};
pub use family::{generate_family, FamilySpec, FunctionFamily, Member, DEFAULT_RANDOM_COUNT, POWER_BETAS};
pub use pointwise::{
    maximal_dominance_failures, modified_maximal_lp_ratio, riesz_maximal_domination, verify_hedberg,
    verify_hedberg_function, verify_weak_type, DominationReport, HedbergReport, PointwiseWorst, WeakTypeReport,
};
pub use reduction::{
    delta, dominance_constant, phi_closed, verify_dominance, DominanceConstant, DominanceReport, GrandPair, Pairing,
    PerEps, ReductionReport, RefinementStep, ARITHMETIC_SLACK, DIVERGENCE_SLOPE, REFINEMENT_SLACK, UNIFORMITY_LIMIT,
};
pub use theorem::{
    certify_boundedness, Calibration, CertParams, CertReport, FamilySummary, Hypothesis, SpaceSummary, Structural,
    TheoremId, DEFAULT_REFINEMENTS, SIGMA_CAP,
};
