//! Reversal phenomena and the least-squares fit of Y on {1, X, W}.
//!
//! Simpson comparisons and the sign of the adjusted risk difference are
//! decided by exact integer cross-multiplication, so tables with tied
//! stratum risks never register a spurious reversal.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tables::{ContingencyTable, Margin};

/// Slopes within this distance of zero are not reversals.
pub const LS_TIE_TOLERANCE: f64 = 1e-12;

/// Reversal phenomena tallied by the simulations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reversal {
    StrongSimpson,
    AdjustedRiskDifference,
    WeakSimpson,
}

impl Reversal {
    pub const ALL: [Reversal; 3] = [
        Reversal::StrongSimpson,
        Reversal::AdjustedRiskDifference,
        Reversal::WeakSimpson,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Reversal::StrongSimpson => "Strong Simpson",
            Reversal::AdjustedRiskDifference => "Adjusted Risk Difference",
            Reversal::WeakSimpson => "Weak Simpson",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Reversal::StrongSimpson => "strong_simpson",
            Reversal::AdjustedRiskDifference => "adjusted_risk_difference",
            Reversal::WeakSimpson => "weak_simpson",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Reversal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReversalProfile {
    /// Both strata reverse the aggregate association.
    pub strong_simpson: bool,
    /// At least one stratum reverses the aggregate association.
    pub weak_simpson: bool,
    pub ard_reversal: bool,
    pub ls_reversal: bool,
    /// Number of W-strata (0, 1 or 2) in which `P(Y=1|X=1,W=w) < P(Y=1|X=0,W=w)`.
    pub reversed_strata: u8,
    pub adjusted_rd: f64,
    pub beta_x_given_w: f64,
}

impl ReversalProfile {
    pub fn holds(&self, reversal: Reversal) -> bool {
        match reversal {
            Reversal::StrongSimpson => self.strong_simpson,
            Reversal::AdjustedRiskDifference => self.ard_reversal,
            Reversal::WeakSimpson => self.weak_simpson,
        }
    }
}

/// Coefficients of the least-squares fit `Y ~ beta_0 + beta_x X + beta_w W`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeastSquares {
    pub beta_x_given_w: f64,
    pub beta_w_given_x: f64,
    pub beta_0: f64,
}

fn require_strata(table: &ContingencyTable) -> Result<()> {
    for x in 0..2 {
        for w in 0..2 {
            if table.stratum_total(x, w) == 0 {
                return Err(Error::degenerate(
                    format!("stratum (x={x},w={w})"),
                    "is empty",
                ));
            }
        }
    }
    Ok(())
}

/// `P(Y=1|X=1,W=w) < P(Y=1|X=0,W=w)`, decided exactly.
fn stratum_reversed(table: &ContingencyTable, w: usize) -> bool {
    let exposed = table.get(1, w, 1) as u128 * table.stratum_total(0, w) as u128;
    let unexposed = table.get(0, w, 1) as u128 * table.stratum_total(1, w) as u128;
    exposed < unexposed
}

/// Returns `(strong, weak)`: strong when both strata reverse, weak when at
/// least one does.
pub fn detect_simpson(table: &ContingencyTable) -> Result<(bool, bool)> {
    require_strata(table)?;
    let (r0, r1) = (stratum_reversed(table, 0), stratum_reversed(table, 1));
    Ok((r0 && r1, r0 || r1))
}

/// `P(W=1)(P11 - P01) + P(W=0)(P10 - P00)`.
pub fn adjusted_risk_difference(table: &ContingencyTable) -> Result<f64> {
    let p = table.stratum_risks()?;
    let n = table.total() as f64;
    let weight = |w: usize| (table.stratum_total(0, w) + table.stratum_total(1, w)) as f64 / n;
    Ok(weight(1) * (p[1][1] - p[0][1]) + weight(0) * (p[1][0] - p[0][0]))
}

/// Ratio of the stratum-weighted exposed and unexposed risks.
pub fn adjusted_relative_risk(table: &ContingencyTable) -> Result<f64> {
    let p = table.stratum_risks()?;
    let weight = |w: usize| (table.stratum_total(0, w) + table.stratum_total(1, w)) as f64;
    let exposed = weight(0) * p[1][0] + weight(1) * p[1][1];
    let unexposed = weight(0) * p[0][0] + weight(1) * p[0][1];
    if unexposed == 0.0 {
        return Err(Error::degenerate(
            "adjusted risk",
            "is zero among the unexposed",
        ));
    }
    Ok(exposed / unexposed)
}

/// Exact sign of the adjusted risk difference, or `None` if the integer
/// expression overflows.
///
/// Multiplying the ARD by `N * T00 * T10 * T01 * T11` (all positive) leaves
/// `sum_w T_w * (e_w * T0w - u_w * T1w) * T0w' * T1w'`, where `w'` is the
/// other stratum, `T_w` the stratum size and `e_w`, `u_w` the exposed and
/// unexposed case counts.
pub(crate) fn ard_sign_exact(table: &ContingencyTable) -> Option<std::cmp::Ordering> {
    let t = |x, w| table.stratum_total(x, w) as i128;
    let mut acc: i128 = 0;
    for w in 0..2 {
        let other = 1 - w;
        let size = t(0, w) + t(1, w);
        let diff = (table.get(1, w, 1) as i128)
            .checked_mul(t(0, w))?
            .checked_sub((table.get(0, w, 1) as i128).checked_mul(t(1, w))?)?;
        let term = size
            .checked_mul(diff)?
            .checked_mul(t(0, other))?
            .checked_mul(t(1, other))?;
        acc = acc.checked_add(term)?;
    }
    Some(acc.cmp(&0))
}

fn ard_is_negative(table: &ContingencyTable, ard: f64) -> bool {
    match ard_sign_exact(table) {
        Some(ordering) => ordering.is_lt(),
        None => ard < 0.0,
    }
}

/// `|r| = 1` on a margin with non-constant variables iff one diagonal is empty.
fn is_collinear(m: &Margin) -> bool {
    let [[n00, n01], [n10, n11]] = m.counts;
    (n00 == 0 && n11 == 0) || (n01 == 0 && n10 == 0)
}

/// Least-squares coefficients from correlations and standard deviations:
/// `beta_x = (s_Y / s_X) (r_XY - r_WX r_WY) / (1 - r_WX^2)`, symmetrically for
/// `beta_w`, and the intercept from the means.
pub fn ls_coefficients(table: &ContingencyTable) -> Result<LeastSquares> {
    let xy = table.margin_xy();
    let xw = table.margin_xw();
    let wy = table.margin_wy();
    let r_xy = xy.correlation()?;
    let r_wx = xw.correlation()?;
    let r_wy = wy.correlation()?;
    if is_collinear(&xw) {
        return Err(Error::CollinearPredictors);
    }

    let n = table.total() as f64;
    let mean_x = xy.row_total(1) as f64 / n;
    let mean_w = wy.row_total(1) as f64 / n;
    let mean_y = xy.column_total(1) as f64 / n;
    let sd = |p: f64| (p * (1.0 - p)).sqrt();
    let (s_x, s_w, s_y) = (sd(mean_x), sd(mean_w), sd(mean_y));

    let shared = 1.0 - r_wx * r_wx;
    let beta_x_given_w = (s_y / s_x) * (r_xy - r_wx * r_wy) / shared;
    let beta_w_given_x = (s_y / s_w) * (r_wy - r_wx * r_xy) / shared;
    let beta_0 = mean_y - beta_x_given_w * mean_x - beta_w_given_x * mean_w;
    Ok(LeastSquares {
        beta_x_given_w,
        beta_w_given_x,
        beta_0,
    })
}

/// Least-squares coefficients by minimizing the cell-weighted sum of
/// squares directly.
///
/// Each stratum `(x, w)` with `T_xw` observations and `S_xw` cases
/// contributes `T_xw (P̂_xw - P_xw)^2` plus a constant, so the minimizer
/// solves the 3×3 normal equations
/// `sum T_xw z z' beta = sum S_xw z` with `z = (1, x, w)`.
pub fn ls_oracle(table: &ContingencyTable) -> Result<LeastSquares> {
    // Variables must vary for the model to be identifiable at all.
    for (margin, name) in [
        (table.margin_xy(), "X"),
        (table.margin_wy(), "W"),
    ] {
        if margin.row_total(0) == 0 || margin.row_total(1) == 0 {
            return Err(Error::degenerate(
                margin.pair.to_string(),
                format!("{name} is constant"),
            ));
        }
    }
    let y = table.margin_xy();
    if y.column_total(0) == 0 || y.column_total(1) == 0 {
        return Err(Error::degenerate("(X,Y)", "Y is constant"));
    }

    let n = table.total() as f64;
    let mut gram = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for x in 0..2 {
        for w in 0..2 {
            let weight = table.stratum_total(x, w) as f64 / n;
            let cases = table.get(x, w, 1) as f64 / n;
            let z = [1.0, x as f64, w as f64];
            for i in 0..3 {
                rhs[i] += cases * z[i];
                for j in 0..3 {
                    gram[i][j] += weight * z[i] * z[j];
                }
            }
        }
    }
    let [beta_0, beta_x_given_w, beta_w_given_x] =
        solve3(gram, rhs).ok_or(Error::CollinearPredictors)?;
    Ok(LeastSquares {
        beta_x_given_w,
        beta_w_given_x,
        beta_0,
    })
}

/// Gaussian elimination with partial pivoting. `None` if singular.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= scale * 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let factor = a[row][col] / a[col][col];
            let pivot_row = a[col];
            for (v, p) in a[row].iter_mut().zip(pivot_row).skip(col) {
                *v -= factor * p;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

/// Evaluates every reversal predicate on a table.
pub fn reversal_profile(table: &ContingencyTable) -> Result<ReversalProfile> {
    require_strata(table)?;
    let r0 = stratum_reversed(table, 0);
    let r1 = stratum_reversed(table, 1);
    let adjusted_rd = adjusted_risk_difference(table)?;
    let ls = ls_coefficients(table)?;
    Ok(ReversalProfile {
        strong_simpson: r0 && r1,
        weak_simpson: r0 || r1,
        ard_reversal: ard_is_negative(table, adjusted_rd),
        ls_reversal: ls.beta_x_given_w < -LS_TIE_TOLERANCE,
        reversed_strata: r0 as u8 + r1 as u8,
        adjusted_rd,
        beta_x_given_w: ls.beta_x_given_w,
    })
}
