//! Sensitivity analysis for reversals of a positive exposure–outcome
//! association under adjustment for one unmeasured binary covariate.
//!
//! The crate evaluates six classical and odds-ratio based conditions on
//! 2×2×2 tables, detects Simpson-type and adjusted-risk reversals, and
//! estimates how well each condition predicts each reversal by Monte Carlo
//! over random tables.

pub mod conditions;
pub mod error;
pub mod reversals;
pub mod sampling;
pub mod simulation;
pub mod tables;
pub mod verify;

pub use conditions::{
    canonicalize_w, evaluate_conditions, odds_ratio_factor, required_or_wx, Condition,
    ConditionProfile, ThresholdResult,
};
pub use error::{Error, Result};
pub use reversals::{
    adjusted_relative_risk, adjusted_risk_difference, detect_simpson, ls_coefficients, ls_oracle,
    reversal_profile, LeastSquares, Reversal, ReversalProfile,
};
pub use sampling::{
    counts_from_point, counts_from_point_with, sample_simplex, CellRounding, Filter, Orientation,
    SamplerConfig, SimplexPoint,
};
pub use simulation::{
    analyze_case, evaluate_table, run_conditional, run_unconditional, CaseReport, Estimate,
    Family, SimulationReport, TableEvaluation, TallyGrid,
};
pub use tables::{measures, CollapsedTable, ContingencyTable, Margin, MeasureSet, Pair};
