//! Random table generators for the two simulation protocols.
//!
//! Randomness contract: every sample is produced by a [`ChaCha8Rng`] seeded
//! from the configured 64-bit seed, with one ChaCha stream per batch of
//! accepted tables. Batch `i` always uses stream `i` and always accepts the
//! same number of tables, so the concatenation of batches in index order is
//! the same table stream on every platform and at any thread count.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::conditions::canonicalize_w;
use crate::error::{Error, Result};
use crate::reversals::ls_coefficients;
use crate::tables::{measures, CollapsedTable, ContingencyTable};

/// Smallest sample size for which simulation estimates are reported
/// without `allow_small`.
pub const MIN_SAMPLE: u64 = 30_001;

/// Relative distance below which `p_i / m` is treated as an integer.
pub const INTEGER_RATIO_TOLERANCE: f64 = 1e-9;

/// Accepted tables per random stream.
pub const BATCH_SIZE: u64 = 2_048;

/// A point of the open 7-simplex, in flat `(x, w, y)` cell order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexPoint {
    p: [f64; 8],
}

impl SimplexPoint {
    /// Normalizes positive weights onto the simplex.
    pub fn from_weights(weights: [f64; 8]) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidArgument(
                "simplex weights must be positive and finite".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        Ok(SimplexPoint {
            p: weights.map(|w| w / total),
        })
    }

    pub fn coords(&self) -> &[f64; 8] {
        &self.p
    }

    pub fn min(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// How a simplex point is turned into integer cell counts. Both rules divide
/// every coordinate by the smallest one first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellRounding {
    /// `ceil(p_i / m)`; the smallest cell gets count 1.
    Ceiling,
    /// Smallest integer strictly greater than `p_i / m`; the smallest cell
    /// gets count 2.
    StrictlyGreater,
}

/// Which association filter a sampled table must pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Filter {
    OrXyGt1,
    OrXyAndOrWyGt1,
}

/// Labeling of W used when a table is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Keep W as sampled.
    AsSampled,
    /// Relabel W so that `RD_WY >= 0` (see [`canonicalize_w`]).
    Canonical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub filter: Filter,
    pub orientation: Orientation,
    pub rounding: CellRounding,
    pub target_accepted: u64,
    /// `None` means `10 * target_accepted + 1000`.
    pub max_rejections: Option<u64>,
    /// Permits `target_accepted < MIN_SAMPLE`.
    pub allow_small: bool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            seed: 42,
            filter: Filter::OrXyGt1,
            orientation: Orientation::AsSampled,
            rounding: CellRounding::Ceiling,
            target_accepted: 50_000,
            max_rejections: None,
            allow_small: false,
        }
    }
}

impl SamplerConfig {
    pub fn rejection_budget(&self) -> u64 {
        self.max_rejections
            .unwrap_or_else(|| self.target_accepted.saturating_mul(10).saturating_add(1_000))
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_accepted == 0 {
            return Err(Error::InvalidArgument("target sample size is zero".into()));
        }
        if !self.allow_small && self.target_accepted < MIN_SAMPLE {
            return Err(Error::InvalidArgument(format!(
                "target sample size {} is below {MIN_SAMPLE}; allow small samples explicitly",
                self.target_accepted
            )));
        }
        Ok(())
    }

    /// Accepted-table targets of each batch, in stream order.
    pub fn batch_targets(&self) -> Vec<u64> {
        let full = self.target_accepted / BATCH_SIZE;
        let rest = self.target_accepted % BATCH_SIZE;
        let mut out = vec![BATCH_SIZE; full as usize];
        if rest > 0 {
            out.push(rest);
        }
        out
    }

    /// Rejection allowance of one batch, proportional to its target.
    pub fn batch_budget(&self, batch_target: u64) -> u64 {
        let share = self.rejection_budget() as u128 * batch_target as u128;
        share.div_ceil(self.target_accepted.max(1) as u128) as u64
    }
}

/// Generator for batch `index` of a run seeded with `seed`.
pub fn batch_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform draw on the open 7-simplex as eight unit exponentials normalized
/// by their sum (the flat Dirichlet law).
pub fn sample_simplex<R: Rng + ?Sized>(rng: &mut R) -> SimplexPoint {
    let mut weights = [0.0f64; 8];
    for w in &mut weights {
        *w = loop {
            let v: f64 = rng.sample(Exp1);
            if v > 0.0 {
                break v;
            }
        };
    }
    let total: f64 = weights.iter().sum();
    SimplexPoint {
        p: weights.map(|w| w / total),
    }
}

/// Cell counts from a simplex point using the smallest integer strictly
/// greater than `p_i / m`, with `m` the smallest coordinate.
pub fn counts_from_point(p: &SimplexPoint) -> ContingencyTable {
    counts_from_point_with(p, CellRounding::StrictlyGreater)
}

pub fn counts_from_point_with(p: &SimplexPoint, rounding: CellRounding) -> ContingencyTable {
    let m = p.min();
    let cells = p.p.map(|pi| {
        let ratio = pi / m;
        // Ratios within rounding error of an integer count as that integer.
        let nearest = ratio.round();
        let integral = (ratio - nearest).abs() <= INTEGER_RATIO_TOLERANCE * nearest;
        let count = match (rounding, integral) {
            (CellRounding::Ceiling, true) => nearest,
            (CellRounding::Ceiling, false) => ratio.ceil(),
            (CellRounding::StrictlyGreater, true) => nearest + 1.0,
            (CellRounding::StrictlyGreater, false) => ratio.floor() + 1.0,
        };
        count as u64
    });
    ContingencyTable::new(cells).expect("every cell is at least one")
}

/// `OR > 1` on a margin, decided exactly as `bc > ad`.
fn positive_association(cross_difference: i128) -> bool {
    cross_difference > 0
}

pub fn passes_filter(table: &ContingencyTable, filter: Filter) -> bool {
    let xy = positive_association(table.margin_xy().cross_difference());
    match filter {
        Filter::OrXyGt1 => xy,
        Filter::OrXyAndOrWyGt1 => xy && positive_association(table.margin_wy().cross_difference()),
    }
}

/// All measures, condition inputs and least-squares quantities exist.
pub fn is_measure_complete(table: &ContingencyTable) -> bool {
    measures(table).is_ok() && ls_coefficients(table).is_ok()
}

fn orient(table: ContingencyTable, orientation: Orientation) -> Option<ContingencyTable> {
    match orientation {
        Orientation::AsSampled => Some(table),
        Orientation::Canonical => canonicalize_w(&table).ok(),
    }
}

/// Acceptance bookkeeping shared by both samplers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleStats {
    pub accepted: u64,
    pub rejected: u64,
}

/// Stream of tables drawn uniformly from the 7-simplex, turned into counts
/// and filtered.
pub struct UnconditionalSampler<R> {
    rng: R,
    cfg: SamplerConfig,
    target: u64,
    budget: u64,
    stats: SampleStats,
}

impl<R: Rng> UnconditionalSampler<R> {
    pub fn new(cfg: SamplerConfig, rng: R) -> Self {
        Self::with_limits(cfg, rng, cfg.target_accepted, cfg.rejection_budget())
    }

    pub fn with_limits(cfg: SamplerConfig, rng: R, target: u64, budget: u64) -> Self {
        UnconditionalSampler {
            rng,
            cfg,
            target,
            budget,
            stats: SampleStats::default(),
        }
    }

    pub fn stats(&self) -> SampleStats {
        self.stats
    }
}

impl<R: Rng> Iterator for UnconditionalSampler<R> {
    type Item = Result<ContingencyTable>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.stats.accepted >= self.target {
            return None;
        }
        loop {
            let point = sample_simplex(&mut self.rng);
            let table = counts_from_point_with(&point, self.cfg.rounding);
            let accepted = orient(table, self.cfg.orientation)
                .filter(|t| passes_filter(t, self.cfg.filter) && is_measure_complete(t));
            if let Some(t) = accepted {
                self.stats.accepted += 1;
                return Some(Ok(t));
            }
            self.stats.rejected += 1;
            if self.stats.rejected > self.budget {
                self.stats.accepted = self.target;
                return Some(Err(Error::RejectionBudgetExceeded {
                    accepted: self.stats.accepted,
                    target: self.target,
                    rejected: self.stats.rejected,
                }));
            }
        }
    }
}

/// Checks that a collapsed table can seed the conditional sampler.
pub fn validate_collapsed(collapsed: &CollapsedTable) -> Result<()> {
    if collapsed.cells().contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "every cell of the collapsed table must be positive, got {collapsed}"
        )));
    }
    let m = collapsed.margin();
    if m.cross_difference() <= 0 {
        return Err(Error::InvalidArgument(format!(
            "collapsed table must have OR_XY > 1, got OR_XY = {:.4}",
            m.odds_ratio()?
        )));
    }
    Ok(())
}

/// Stream of tables drawn uniformly from all 2×2×2 tables that collapse to
/// a fixed 2×2 table.
///
/// Each `(x, y)` count is split independently, the W=1 share being uniform
/// on `{0, ..., m[x][y]}`. Splits that leave a needed margin empty are
/// rejected.
pub struct ConditionalSampler<R> {
    rng: R,
    collapsed: CollapsedTable,
    cfg: SamplerConfig,
    target: u64,
    budget: u64,
    stats: SampleStats,
}

impl<R: Rng> ConditionalSampler<R> {
    pub fn new(collapsed: CollapsedTable, cfg: SamplerConfig, rng: R) -> Result<Self> {
        Self::with_limits(
            collapsed,
            cfg,
            rng,
            cfg.target_accepted,
            cfg.rejection_budget(),
        )
    }

    pub fn with_limits(
        collapsed: CollapsedTable,
        cfg: SamplerConfig,
        rng: R,
        target: u64,
        budget: u64,
    ) -> Result<Self> {
        validate_collapsed(&collapsed)?;
        Ok(ConditionalSampler {
            rng,
            collapsed,
            cfg,
            target,
            budget,
            stats: SampleStats::default(),
        })
    }

    pub fn stats(&self) -> SampleStats {
        self.stats
    }

    fn draw_split(&mut self) -> [u64; 8] {
        let mut cells = [0u64; 8];
        for x in 0..2 {
            for y in 0..2 {
                let m = self.collapsed.get(x, y);
                let k = self.rng.random_range(0..=m);
                cells[4 * x + 2 + y] = k;
                cells[4 * x + y] = m - k;
            }
        }
        cells
    }
}

impl<R: Rng> Iterator for ConditionalSampler<R> {
    type Item = Result<ContingencyTable>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.stats.accepted >= self.target {
            return None;
        }
        loop {
            let cells = self.draw_split();
            let accepted = ContingencyTable::new(cells)
                .ok()
                .filter(is_measure_complete)
                .and_then(|t| orient(t, self.cfg.orientation))
                .filter(|t| passes_filter(t, self.cfg.filter));
            if let Some(t) = accepted {
                self.stats.accepted += 1;
                return Some(Ok(t));
            }
            self.stats.rejected += 1;
            if self.stats.rejected > self.budget {
                self.stats.accepted = self.target;
                return Some(Err(Error::RejectionBudgetExceeded {
                    accepted: self.stats.accepted,
                    target: self.target,
                    rejected: self.stats.rejected,
                }));
            }
        }
    }
}

/// Unconditional sampler for one batch of a run.
pub fn unconditional_batch(cfg: &SamplerConfig, index: u64, target: u64) -> UnconditionalSampler<ChaCha8Rng> {
    UnconditionalSampler::with_limits(*cfg, batch_rng(cfg.seed, index), target, cfg.batch_budget(target))
}

/// Conditional sampler for one batch of a run.
pub fn conditional_batch(
    collapsed: CollapsedTable,
    cfg: &SamplerConfig,
    index: u64,
    target: u64,
) -> Result<ConditionalSampler<ChaCha8Rng>> {
    ConditionalSampler::with_limits(
        collapsed,
        *cfg,
        batch_rng(cfg.seed, index),
        target,
        cfg.batch_budget(target),
    )
}

/// Every table of an unconditional run, in stream order.
pub fn sample_unconditional(cfg: &SamplerConfig) -> Result<(Vec<ContingencyTable>, SampleStats)> {
    collect_batches(cfg, |index, target| Ok(unconditional_batch(cfg, index, target)))
}

/// Every table of a conditional run, in stream order.
pub fn sample_conditional(
    collapsed: &CollapsedTable,
    cfg: &SamplerConfig,
) -> Result<(Vec<ContingencyTable>, SampleStats)> {
    validate_collapsed(collapsed)?;
    collect_batches(cfg, |index, target| conditional_batch(*collapsed, cfg, index, target))
}

trait Batch: Iterator<Item = Result<ContingencyTable>> {
    fn batch_stats(&self) -> SampleStats;
}

impl<R: Rng> Batch for UnconditionalSampler<R> {
    fn batch_stats(&self) -> SampleStats {
        self.stats
    }
}

impl<R: Rng> Batch for ConditionalSampler<R> {
    fn batch_stats(&self) -> SampleStats {
        self.stats
    }
}

fn collect_batches<B, F>(cfg: &SamplerConfig, make: F) -> Result<(Vec<ContingencyTable>, SampleStats)>
where
    B: Batch,
    F: Fn(u64, u64) -> Result<B> + Sync,
{
    use rayon::prelude::*;

    let parts: Vec<(Vec<ContingencyTable>, SampleStats)> = cfg
        .batch_targets()
        .into_par_iter()
        .enumerate()
        .map(|(index, target)| {
            let mut sampler = make(index as u64, target)?;
            let tables = sampler.by_ref().collect::<Result<Vec<_>>>()?;
            Ok((tables, sampler.batch_stats()))
        })
        .collect::<Result<_>>()?;

    let mut stats = SampleStats::default();
    let mut tables = Vec::with_capacity(cfg.target_accepted as usize);
    for (part, s) in parts {
        tables.extend(part);
        stats.accepted += s.accepted;
        stats.rejected += s.rejected;
    }
    Ok((tables, stats))
}
