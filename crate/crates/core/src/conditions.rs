//! The six reversal-detection conditions and the inversion of the Odds Ratio
//! Condition used for case-study thresholds.
//!
//! Every condition is a strict inequality; equality means "condition
//! absent". The Cornfield Condition requires both RR_XW and RR_WY to exceed
//! RR_XY, i.e. `min(RR_XW, RR_WY) > RR_XY`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tables::{ContingencyTable, MeasureSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Cornfield,
    RiskRatio,
    RiskDifference,
    Pearson,
    Mixed,
    OddsRatio,
}

impl Condition {
    pub const ALL: [Condition; 6] = [
        Condition::Cornfield,
        Condition::RiskRatio,
        Condition::RiskDifference,
        Condition::Pearson,
        Condition::Mixed,
        Condition::OddsRatio,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Condition::Cornfield => "Cornfield",
            Condition::RiskRatio => "Risk Ratio",
            Condition::RiskDifference => "Risk Difference",
            Condition::Pearson => "Pearson Correlation",
            Condition::Mixed => "Mixed",
            Condition::OddsRatio => "Odds Ratio",
        }
    }

    /// Machine-friendly name used in CSV output.
    pub fn key(self) -> &'static str {
        match self {
            Condition::Cornfield => "cornfield",
            Condition::RiskRatio => "risk_ratio",
            Condition::RiskDifference => "risk_difference",
            Condition::Pearson => "pearson",
            Condition::Mixed => "mixed",
            Condition::OddsRatio => "odds_ratio",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Outcome of all six conditions on one table together with both sides of
/// every comparison.
///
/// The Risk Difference Condition is the conjunction of two comparisons,
/// `min(RD_XW, RD_WY) > RD_XY` and `max(RD_XW, RD_WY) > sqrt(RD_XY)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionProfile {
    pub cornfield: bool,
    pub risk_ratio: bool,
    pub risk_difference: bool,
    pub pearson: bool,
    pub mixed: bool,
    pub odds_ratio: bool,

    pub cornfield_lhs: f64,
    /// NaN when `RR_XW + RR_WY - 1 <= 0`.
    pub risk_ratio_lhs: f64,
    pub risk_difference_min_lhs: f64,
    pub risk_difference_max_lhs: f64,
    pub pearson_lhs: f64,
    pub mixed_lhs: f64,
    pub odds_ratio_lhs: f64,

    pub rr_xy: f64,
    pub rd_xy: f64,
    pub sqrt_rd_xy: f64,
    pub r_xy: f64,
}

impl ConditionProfile {
    pub fn holds(&self, condition: Condition) -> bool {
        match condition {
            Condition::Cornfield => self.cornfield,
            Condition::RiskRatio => self.risk_ratio,
            Condition::RiskDifference => self.risk_difference,
            Condition::Pearson => self.pearson,
            Condition::Mixed => self.mixed,
            Condition::OddsRatio => self.odds_ratio,
        }
    }

    /// Left-hand side of the (first) comparison of a condition.
    pub fn lhs(&self, condition: Condition) -> f64 {
        match condition {
            Condition::Cornfield => self.cornfield_lhs,
            Condition::RiskRatio => self.risk_ratio_lhs,
            Condition::RiskDifference => self.risk_difference_min_lhs,
            Condition::Pearson => self.pearson_lhs,
            Condition::Mixed => self.mixed_lhs,
            Condition::OddsRatio => self.odds_ratio_lhs,
        }
    }

    /// Right-hand side of the (first) comparison of a condition.
    pub fn rhs(&self, condition: Condition) -> f64 {
        match condition {
            Condition::Cornfield | Condition::RiskRatio | Condition::Mixed => self.rr_xy,
            Condition::RiskDifference => self.rd_xy,
            Condition::Pearson | Condition::OddsRatio => self.r_xy,
        }
    }
}

/// `(sqrt(or) - 1) / (sqrt(or) + 1)`, the largest correlation a 2×2 margin
/// with odds ratio `or` can carry.
pub fn odds_ratio_factor(or: f64) -> f64 {
    let s = or.sqrt();
    (s - 1.0) / (s + 1.0)
}

/// Relabels W so that its association with Y is non-negative.
///
/// The output satisfies `RD_WY >= 0`, equivalently `OR_WY >= 1` and
/// `r(W,Y) >= 0`. Reversal predicates do not change.
pub fn canonicalize_w(table: &ContingencyTable) -> Result<ContingencyTable> {
    let wy = table.margin_wy();
    if wy.row_total(0) == 0 || wy.row_total(1) == 0 {
        return Err(Error::degenerate("(W,Y)", "W is constant"));
    }
    // sign(RD_WY) = sign(n(w1,y1) * n(w0) - n(w0,y1) * n(w1))
    let lhs = wy.counts[1][1] as u128 * wy.row_total(0) as u128;
    let rhs = wy.counts[0][1] as u128 * wy.row_total(1) as u128;
    Ok(if lhs < rhs { table.flip_w() } else { *table })
}

/// Evaluates the six conditions.
///
/// Requires a non-negative X–Y association; a negative one is reported as
/// [`Error::NegativeAssociation`].
pub fn evaluate_conditions(ms: &MeasureSet) -> Result<ConditionProfile> {
    if ms.rd_xy < 0.0 {
        return Err(Error::NegativeAssociation(ms.rd_xy));
    }
    let sqrt_rd_xy = ms.rd_xy.sqrt();

    let cornfield_lhs = ms.rr_xw.min(ms.rr_wy);

    let rr_denominator = ms.rr_xw + ms.rr_wy - 1.0;
    let risk_ratio_lhs = if rr_denominator > 0.0 {
        ms.rr_xw * ms.rr_wy / rr_denominator
    } else {
        f64::NAN
    };

    let rd_min = ms.rd_xw.min(ms.rd_wy);
    let rd_max = ms.rd_xw.max(ms.rd_wy);

    let pearson_lhs = ms.r_xw * ms.r_wy;

    let (sqrt_or, sqrt_rr) = (ms.or_xw.sqrt(), ms.rr_wy.sqrt());
    let mixed_lhs = ((sqrt_or * sqrt_rr + 1.0) / (sqrt_or + sqrt_rr)).powi(2);

    let odds_ratio_lhs = odds_ratio_factor(ms.or_wx()) * odds_ratio_factor(ms.or_wy);

    Ok(ConditionProfile {
        cornfield: cornfield_lhs > ms.rr_xy,
        risk_ratio: risk_ratio_lhs > ms.rr_xy,
        risk_difference: rd_min > ms.rd_xy && rd_max > sqrt_rd_xy,
        pearson: pearson_lhs > ms.r_xy,
        mixed: mixed_lhs > ms.rr_xy,
        odds_ratio: odds_ratio_lhs > ms.r_xy,
        cornfield_lhs,
        risk_ratio_lhs,
        risk_difference_min_lhs: rd_min,
        risk_difference_max_lhs: rd_max,
        pearson_lhs,
        mixed_lhs,
        odds_ratio_lhs,
        rr_xy: ms.rr_xy,
        rd_xy: ms.rd_xy,
        sqrt_rd_xy,
        r_xy: ms.r_xy,
    })
}

/// Smallest OR_WX for which the Odds Ratio Condition can hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    /// `(sqrt(OR_WY) - 1) / (sqrt(OR_WY) + 1)` at the bound.
    pub t_y: f64,
    /// `r_XY / t_y`.
    pub q: f64,
    /// `None` when no finite OR_WX satisfies the condition (`q >= 1`).
    pub required_or_wx: Option<f64>,
}

impl ThresholdResult {
    pub fn is_attainable(&self) -> bool {
        self.required_or_wx.is_some()
    }
}

/// Solves the Odds Ratio Condition at equality for OR_WX, given the observed
/// correlation `r_xy` and an upper bound on OR_WY.
pub fn required_or_wx(r_xy: f64, or_wy_bound: f64) -> Result<ThresholdResult> {
    if !(r_xy > 0.0 && r_xy < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "r_XY must lie in (0, 1), got {r_xy}"
        )));
    }
    if !(or_wy_bound.is_finite() && or_wy_bound > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "the OR_WY bound must be a finite value greater than 1, got {or_wy_bound}"
        )));
    }
    let t_y = odds_ratio_factor(or_wy_bound);
    let q = r_xy / t_y;
    let required_or_wx = (q < 1.0).then(|| ((1.0 + q) / (1.0 - q)).powi(2));
    Ok(ThresholdResult {
        t_y,
        q,
        required_or_wx,
    })
}
