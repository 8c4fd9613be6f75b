//! Monte Carlo estimates of P(reversal | condition) and
//! P(no reversal | no condition), and the single-table case analysis.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::{evaluate_conditions, required_or_wx, Condition, ConditionProfile, ThresholdResult};
use crate::error::{Error, Result};
use crate::reversals::{ls_coefficients, ls_oracle, reversal_profile, LeastSquares, Reversal, ReversalProfile};
use crate::sampling::{
    conditional_batch, unconditional_batch, validate_collapsed, SampleStats, SamplerConfig,
};
use crate::tables::{measures, CollapsedTable, ContingencyTable, MeasureSet};

/// Everything computed for one table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableEvaluation {
    pub table: ContingencyTable,
    pub measures: MeasureSet,
    pub conditions: ConditionProfile,
    pub reversals: ReversalProfile,
    pub least_squares: LeastSquares,
    pub least_squares_oracle: LeastSquares,
}

/// Measures, conditions and reversals of a table in its given W labeling.
pub fn evaluate_table(table: &ContingencyTable) -> Result<TableEvaluation> {
    let ms = measures(table)?;
    Ok(TableEvaluation {
        table: *table,
        measures: ms,
        conditions: evaluate_conditions(&ms)?,
        reversals: reversal_profile(table)?,
        least_squares: ls_coefficients(table)?,
        least_squares_oracle: ls_oracle(table)?,
    })
}

/// Joint counts of one (condition, reversal) pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    /// condition and reversal
    pub n11: u64,
    /// condition, no reversal
    pub n10: u64,
    /// no condition, reversal
    pub n01: u64,
    /// neither
    pub n00: u64,
}

impl Tally {
    pub fn total(&self) -> u64 {
        self.n11 + self.n10 + self.n01 + self.n00
    }

    fn record(&mut self, condition: bool, reversal: bool) {
        match (condition, reversal) {
            (true, true) => self.n11 += 1,
            (true, false) => self.n10 += 1,
            (false, true) => self.n01 += 1,
            (false, false) => self.n00 += 1,
        }
    }

    fn merge(&mut self, other: &Tally) {
        self.n11 += other.n11;
        self.n10 += other.n10;
        self.n01 += other.n01;
        self.n00 += other.n00;
    }
}

/// Sufficient statistics of a simulation run.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TallyGrid {
    /// Indexed `[condition][reversal]`.
    pub cells: [[Tally; 3]; 6],
    pub accepted: u64,
    pub rejected: u64,
}

impl TallyGrid {
    pub fn record(&mut self, conditions: &ConditionProfile, reversals: &ReversalProfile) {
        for c in Condition::ALL {
            for r in Reversal::ALL {
                self.cells[c.index()][r.index()].record(conditions.holds(c), reversals.holds(r));
            }
        }
        self.accepted += 1;
    }

    pub fn get(&self, condition: Condition, reversal: Reversal) -> Tally {
        self.cells[condition.index()][reversal.index()]
    }

    pub fn merge(mut self, other: TallyGrid) -> TallyGrid {
        for (row, other_row) in self.cells.iter_mut().zip(other.cells.iter()) {
            for (cell, o) in row.iter_mut().zip(other_row) {
                cell.merge(o);
            }
        }
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self
    }

    fn from_tables<I>(tables: I, stats: SampleStats) -> Result<TallyGrid>
    where
        I: IntoIterator<Item = Result<ContingencyTable>>,
    {
        let mut grid = TallyGrid::default();
        for table in tables {
            let table = table?;
            let ms = measures(&table)?;
            grid.record(&evaluate_conditions(&ms)?, &reversal_profile(&table)?);
        }
        grid.rejected = stats.rejected;
        Ok(grid)
    }
}

/// The two conditional-probability families reported per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// P(reversal | condition)
    ReversalGivenCondition,
    /// P(no reversal | no condition)
    NoReversalGivenNoCondition,
}

impl Family {
    pub const ALL: [Family; 2] = [
        Family::ReversalGivenCondition,
        Family::NoReversalGivenNoCondition,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Family::ReversalGivenCondition => "reversal_given_condition",
            Family::NoReversalGivenNoCondition => "no_reversal_given_no_condition",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Family::ReversalGivenCondition => "P(reversal | condition)",
            Family::NoReversalGivenNoCondition => "P(not reversal | not condition)",
        }
    }
}

/// A conditional proportion with its standard error `sqrt(p(1-p)/n)`,
/// `n` being the size of the conditioning subgroup. Both are `None` when
/// the subgroup is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub p_hat: Option<f64>,
    pub se: Option<f64>,
    pub successes: u64,
    pub n: u64,
}

impl Estimate {
    pub fn from_counts(successes: u64, n: u64) -> Estimate {
        if n == 0 {
            return Estimate {
                p_hat: None,
                se: None,
                successes,
                n,
            };
        }
        let p = successes as f64 / n as f64;
        Estimate {
            p_hat: Some(p),
            se: Some((p * (1.0 - p) / n as f64).sqrt()),
            successes,
            n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub condition: Condition,
    pub reversal: Reversal,
    pub family: Family,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Protocol {
    Unconditional,
    Conditional { source: CollapsedTable },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub protocol: Protocol,
    pub config: SamplerConfig,
    pub accepted: u64,
    pub rejected: u64,
    pub tallies: TallyGrid,
    pub rows: Vec<ReportRow>,
}

impl SimulationReport {
    pub fn from_tallies(protocol: Protocol, config: SamplerConfig, tallies: TallyGrid) -> Self {
        let mut rows = Vec::with_capacity(36);
        for family in Family::ALL {
            for c in Condition::ALL {
                for r in Reversal::ALL {
                    let t = tallies.get(c, r);
                    let estimate = match family {
                        Family::ReversalGivenCondition => Estimate::from_counts(t.n11, t.n11 + t.n10),
                        Family::NoReversalGivenNoCondition => {
                            Estimate::from_counts(t.n00, t.n01 + t.n00)
                        }
                    };
                    rows.push(ReportRow {
                        condition: c,
                        reversal: r,
                        family,
                        estimate,
                    });
                }
            }
        }
        SimulationReport {
            protocol,
            config,
            accepted: tallies.accepted,
            rejected: tallies.rejected,
            tallies,
            rows,
        }
    }

    pub fn estimate(&self, condition: Condition, reversal: Reversal, family: Family) -> Estimate {
        self.rows
            .iter()
            .find(|row| row.condition == condition && row.reversal == reversal && row.family == family)
            .map(|row| row.estimate)
            .expect("every cell has a row")
    }
}

/// Tables 1 and 2 protocol: tables uniform on the 7-simplex with OR_XY > 1.
pub fn run_unconditional(cfg: &SamplerConfig) -> Result<SimulationReport> {
    cfg.validate()?;
    let tallies = run_batches(cfg, |index, target| {
        let mut sampler = unconditional_batch(cfg, index, target);
        let grid = TallyGrid::from_tables(sampler.by_ref(), SampleStats::default())?;
        Ok(TallyGrid {
            rejected: sampler.stats().rejected,
            ..grid
        })
    })?;
    Ok(SimulationReport::from_tallies(Protocol::Unconditional, *cfg, tallies))
}

/// Tables 4 and 5 protocol: tables uniform over all splits of `collapsed`.
pub fn run_conditional(collapsed: &CollapsedTable, cfg: &SamplerConfig) -> Result<SimulationReport> {
    cfg.validate()?;
    validate_collapsed(collapsed)?;
    let tallies = run_batches(cfg, |index, target| {
        let mut sampler = conditional_batch(*collapsed, cfg, index, target)?;
        let grid = TallyGrid::from_tables(sampler.by_ref(), SampleStats::default())?;
        Ok(TallyGrid {
            rejected: sampler.stats().rejected,
            ..grid
        })
    })?;
    Ok(SimulationReport::from_tallies(
        Protocol::Conditional { source: *collapsed },
        *cfg,
        tallies,
    ))
}

fn run_batches<F>(cfg: &SamplerConfig, batch: F) -> Result<TallyGrid>
where
    F: Fn(u64, u64) -> Result<TallyGrid> + Sync,
{
    let grids: Vec<TallyGrid> = cfg
        .batch_targets()
        .into_par_iter()
        .enumerate()
        .map(|(index, target)| batch(index as u64, target))
        .collect::<Result<_>>()?;
    Ok(grids.into_iter().fold(TallyGrid::default(), TallyGrid::merge))
}

/// Sensitivity analysis of an observed 2×2 table against an unmeasured
/// confounder whose association with Y is bounded by `or_wy_bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub collapsed: CollapsedTable,
    pub or_wy_bound: f64,
    pub r_xy: f64,
    pub rr_xy: f64,
    pub rd_xy: f64,
    pub or_xy: f64,
    pub threshold: ThresholdResult,
    pub simulation: Option<SimulationReport>,
}

pub fn analyze_case(
    collapsed: &CollapsedTable,
    or_wy_bound: f64,
    simulate: Option<&SamplerConfig>,
) -> Result<CaseReport> {
    let margin = collapsed.margin();
    let or_xy = margin.odds_ratio()?;
    if margin.cross_difference() <= 0 {
        return Err(Error::InvalidArgument(format!(
            "the observed table must have OR_XY > 1, got {or_xy:.4}"
        )));
    }
    let r_xy = margin.correlation()?;
    let threshold = required_or_wx(r_xy, or_wy_bound)?;
    let simulation = simulate
        .map(|cfg| run_conditional(collapsed, cfg))
        .transpose()?;
    Ok(CaseReport {
        collapsed: *collapsed,
        or_wy_bound,
        r_xy,
        rr_xy: margin.relative_risk()?,
        rd_xy: margin.risk_difference()?,
        or_xy,
        threshold,
        simulation,
    })
}
