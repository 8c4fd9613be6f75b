//! Empirical checks of the implications between reversals and conditions,
//! the correlation/odds-ratio bound on 2×2 margins, and agreement of the
//! two least-squares routes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::conditions::{evaluate_conditions, odds_ratio_factor};
use crate::error::Result;
use crate::reversals::{adjusted_relative_risk, ard_sign_exact, ls_coefficients, ls_oracle, reversal_profile, LS_TIE_TOLERANCE};
use crate::sampling::{batch_rng, sample_unconditional, SamplerConfig};
use crate::tables::{measures, ContingencyTable, Margin, Pair};

/// Relative tolerance for calling the correlation bound attained.
pub const LEMMA_EQUALITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImplicationCheck {
    pub name: String,
    /// Tables on which the premise held.
    pub premises: u64,
    /// Tables excluded as numerical ties.
    pub ties: u64,
    pub counterexamples: u64,
    pub first_counterexample: Option<ContingencyTable>,
}

impl ImplicationCheck {
    fn new(name: &str) -> Self {
        ImplicationCheck {
            name: name.to_string(),
            premises: 0,
            ties: 0,
            counterexamples: 0,
            first_counterexample: None,
        }
    }

    fn observe(&mut self, premise: bool, conclusion: bool, table: &ContingencyTable) {
        if !premise {
            return;
        }
        self.premises += 1;
        if !conclusion {
            self.counterexamples += 1;
            self.first_counterexample.get_or_insert(*table);
        }
    }

    pub fn passed(&self) -> bool {
        self.counterexamples == 0
    }
}

/// Outcome of checking `r <= (sqrt(OR) - 1)/(sqrt(OR) + 1)` on margins with
/// positive association.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub margins: u64,
    /// `r` exceeds the bound.
    pub violations: u64,
    /// `r` equals the bound.
    pub equalities: u64,
    /// Equality on a margin without `a = d` and `b = c`.
    pub unexpected_equalities: u64,
    /// A margin with `a = d` and `b = c` that misses equality.
    pub missed_equalities: u64,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.unexpected_equalities == 0 && self.missed_equalities == 0
    }

    /// Checks one margin; margins without positive association are skipped.
    pub fn observe(&mut self, margin: &Margin) {
        if margin.cross_difference() <= 0 {
            return;
        }
        let (Ok(r), Ok(or)) = (margin.correlation(), margin.odds_ratio()) else {
            return;
        };
        self.margins += 1;
        let bound = odds_ratio_factor(or);
        let symmetric = {
            let (a, b, c, d) = margin.letters();
            a == d && b == c
        };
        let equal = (r - bound).abs() <= LEMMA_EQUALITY_TOLERANCE * bound.abs().max(1e-300);
        if r > bound && !equal {
            self.violations += 1;
        }
        if equal {
            self.equalities += 1;
            if !symmetric {
                self.unexpected_equalities += 1;
            }
        } else if symmetric {
            self.missed_equalities += 1;
        }
    }

    fn merge(&mut self, other: &LemmaReport) {
        self.margins += other.margins;
        self.violations += other.violations;
        self.equalities += other.equalities;
        self.unexpected_equalities += other.unexpected_equalities;
        self.missed_equalities += other.missed_equalities;
    }
}

/// Every 2×2 margin with cell counts in `1..=max_count`.
pub fn lemma_exhaustive(max_count: u64) -> LemmaReport {
    let mut report = LemmaReport::default();
    for a in 1..=max_count {
        for b in 1..=max_count {
            for c in 1..=max_count {
                for d in 1..=max_count {
                    report.observe(&Margin::from_letters(Pair::XY, a, b, c, d));
                }
            }
        }
    }
    report
}

/// `n` random margins with counts uniform on `1..=max_count`, oriented to a
/// positive association.
pub fn lemma_random(n: u64, max_count: u64, seed: u64) -> LemmaReport {
    let mut rng = batch_rng(seed, u64::MAX);
    let mut report = LemmaReport::default();
    let mut drawn = 0;
    while drawn < n {
        let mut letter = || rng.random_range(1..=max_count);
        let m = Margin::from_letters(Pair::XY, letter(), letter(), letter(), letter());
        let m = match m.cross_difference() {
            0 => continue,
            d if d < 0 => m.flip_explanatory(),
            _ => m,
        };
        report.observe(&m);
        drawn += 1;
    }
    report
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub tables: u64,
    pub max_abs_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub tables: u64,
    pub implications: Vec<ImplicationCheck>,
    pub lemma_exhaustive: LemmaReport,
    pub lemma_random: LemmaReport,
    pub least_squares: OracleReport,
}

impl VerifyReport {
    pub fn counterexamples(&self) -> u64 {
        self.implications.iter().map(|c| c.counterexamples).sum::<u64>()
            + self.lemma_exhaustive.violations
            + self.lemma_random.violations
    }

    pub fn passed(&self, ls_tolerance: f64) -> bool {
        self.implications.iter().all(ImplicationCheck::passed)
            && self.lemma_exhaustive.passed()
            && self.lemma_random.passed()
            && self.least_squares.max_abs_difference <= ls_tolerance
    }
}

/// Runs every implication over sampled tables.
///
/// The correlation bound is checked on all margins with counts `1..=6`,
/// on the three margins of every sampled table, and on as many random
/// margins as there are tables.
pub fn verify_theorems(cfg: &SamplerConfig) -> Result<VerifyReport> {
    let (tables, _) = sample_unconditional(cfg)?;
    let mut checks: Vec<ImplicationCheck> = [
        "strong simpson => adjusted risk difference reversal",
        "adjusted risk difference reversal => weak simpson",
        "strong simpson => least-squares reversal",
        "least-squares reversal => pearson condition",
        "pearson condition => least-squares reversal",
        "pearson condition => odds ratio condition",
        "strong simpson => odds ratio condition",
        "strong simpson => mixed condition",
        "adjusted risk difference reversal <=> adjusted relative risk < 1",
    ]
    .iter()
    .map(|name| ImplicationCheck::new(name))
    .collect();

    let mut lemma_tables = LemmaReport::default();
    let mut ls = OracleReport::default();
    for table in &tables {
        let ms = measures(table)?;
        let cond = evaluate_conditions(&ms)?;
        let rev = reversal_profile(table)?;
        let arr = adjusted_relative_risk(table)?;

        checks[0].observe(rev.strong_simpson, rev.ard_reversal, table);
        checks[1].observe(rev.ard_reversal, rev.weak_simpson, table);
        checks[2].observe(rev.strong_simpson, rev.ls_reversal, table);

        let gap = ms.r_xy - ms.r_wx() * ms.r_wy;
        let tie = gap.abs() <= LS_TIE_TOLERANCE || rev.beta_x_given_w.abs() <= LS_TIE_TOLERANCE;
        if tie {
            checks[3].ties += 1;
            checks[4].ties += 1;
        } else {
            checks[3].observe(rev.ls_reversal, cond.pearson, table);
            checks[4].observe(cond.pearson, rev.ls_reversal, table);
        }

        checks[5].observe(cond.pearson, cond.odds_ratio, table);
        checks[6].observe(rev.strong_simpson, cond.odds_ratio, table);
        checks[7].observe(rev.strong_simpson, cond.mixed, table);
        let ard_tie = match ard_sign_exact(table) {
            Some(ordering) => ordering.is_eq(),
            None => (arr - 1.0).abs() <= LS_TIE_TOLERANCE,
        };
        if ard_tie {
            checks[8].ties += 1;
        } else {
            checks[8].observe(true, rev.ard_reversal == (arr < 1.0), table);
        }

        for m in [table.margin_xy(), table.margin_xw(), table.margin_wy()] {
            let m = if m.cross_difference() < 0 { m.flip_explanatory() } else { m };
            lemma_tables.observe(&m);
        }

        let closed = ls_coefficients(table)?;
        let oracle = ls_oracle(table)?;
        ls.tables += 1;
        ls.max_abs_difference = ls
            .max_abs_difference
            .max((closed.beta_x_given_w - oracle.beta_x_given_w).abs());
    }

    let mut random = lemma_random(tables.len() as u64, 1_000, cfg.seed);
    random.merge(&lemma_tables);
    Ok(VerifyReport {
        seed: cfg.seed,
        tables: tables.len() as u64,
        implications: checks,
        lemma_exhaustive: lemma_exhaustive(6),
        lemma_random: random,
        least_squares: ls,
    })
}
