//! Tracked quantities, CSV records and the a priori estimate auditors.

mod audits;
mod inequality;
mod record;

pub use audits::{
    audit_c_monotonicity, audit_dissipation_identity, audit_rho_infty_trend,
    energy_growth_ratios, mass_drift, max_circulation, tail_fraction, worst_negativity,
    DissipationAudit, MonotonicityReport, MonotonicityViolation, RhoInftyReport,
    DEFAULT_RHO_BOUND, TOL_MONO, TOL_NEG,
};
pub use inequality::{
    audit_inequality, brezis_wainger_ratio, calderon_zygmund_ratio, gagliardo_nirenberg_ratio,
    ladyzhenskaya_ratio, log_gradu_ratio, Inequality,
};
pub use record::{
    compute_record, fmt_float, validate_q_list, DiagnosticsRecord, InequalityRatios, QNorms,
    Recorder, C_EXPONENTS, DEFAULT_Q,
};
