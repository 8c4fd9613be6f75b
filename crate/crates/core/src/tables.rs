//! Cell-count tables and the association measures computed from them.
//!
//! A [`ContingencyTable`] holds the eight counts of a 2×2×2 observation of
//! exposure `X`, covariate `W` and outcome `Y`. Cells are stored in the flat
//! order `(x, w, y)` with `y` varying fastest, so the index of a cell is
//! `4x + 2w + y`. Every text form of a table uses this order.
//!
//! Measures are formed from counts with integer products and only turn into
//! floating point at the final division or square root. Any zero denominator
//! is reported as [`Error::DegenerateTable`]; no measure is ever infinite.

use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Full 2×2×2 table of counts indexed by `(x, w, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContingencyTable {
    cells: [u64; 8],
}

/// 2×2 table of counts indexed by `(x, y)`, flat order with `y` fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CollapsedTable {
    cells: [u64; 4],
}

/// Which pair of variables a [`Margin`] cross-classifies. The first variable
/// is the explanatory one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pair {
    XY,
    XW,
    WX,
    WY,
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Pair::XY => "(X,Y)",
            Pair::XW => "(X,W)",
            Pair::WX => "(W,X)",
            Pair::WY => "(W,Y)",
        };
        f.write_str(s)
    }
}

/// Index of a cell in the flat `(x, w, y)` order.
#[inline]
pub const fn cell_index(x: usize, w: usize, y: usize) -> usize {
    4 * x + 2 * w + y
}

fn parse_counts<const N: usize>(s: &str) -> Result<[u64; N]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(Error::Parse(format!(
            "expected {N} comma-separated counts, found {}",
            parts.len()
        )));
    }
    let mut out = [0u64; N];
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = part
            .parse()
            .map_err(|_| Error::Parse(format!("`{part}` is not a non-negative integer")))?;
    }
    Ok(out)
}

fn write_counts(f: &mut fmt::Formatter<'_>, cells: &[u64]) -> fmt::Result {
    for (i, c) in cells.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{c}")?;
    }
    Ok(())
}

impl ContingencyTable {
    /// Builds a table from counts in flat `(x, w, y)` order. Fails on an
    /// all-zero table.
    pub fn new(cells: [u64; 8]) -> Result<Self> {
        if cells.iter().all(|&c| c == 0) {
            return Err(Error::degenerate("table", "has no observations"));
        }
        Ok(ContingencyTable { cells })
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize, usize) -> u64) -> Result<Self> {
        let mut cells = [0u64; 8];
        for (i, slot) in cells.iter_mut().enumerate() {
            *slot = f((i >> 2) & 1, (i >> 1) & 1, i & 1);
        }
        Self::new(cells)
    }

    pub fn cells(&self) -> &[u64; 8] {
        &self.cells
    }

    #[inline]
    pub fn get(&self, x: usize, w: usize, y: usize) -> u64 {
        self.cells[cell_index(x, w, y)]
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().sum()
    }

    /// Number of observations with `X = x` and `W = w`.
    pub fn stratum_total(&self, x: usize, w: usize) -> u64 {
        self.get(x, w, 0) + self.get(x, w, 1)
    }

    pub fn collapse(&self) -> CollapsedTable {
        let mut cells = [0u64; 4];
        for x in 0..2 {
            for y in 0..2 {
                cells[2 * x + y] = self.get(x, 0, y) + self.get(x, 1, y);
            }
        }
        CollapsedTable { cells }
    }

    /// Cross-classification of X (rows) against Y (columns), summed over W.
    pub fn margin_xy(&self) -> Margin {
        self.margin(Pair::XY, |x, _, y| (x, y))
    }

    pub fn margin_xw(&self) -> Margin {
        self.margin(Pair::XW, |x, w, _| (x, w))
    }

    pub fn margin_wy(&self) -> Margin {
        self.margin(Pair::WY, |_, w, y| (w, y))
    }

    fn margin(&self, pair: Pair, key: impl Fn(usize, usize, usize) -> (usize, usize)) -> Margin {
        let mut counts = [[0u64; 2]; 2];
        for (i, &c) in self.cells.iter().enumerate() {
            let (a, b) = key((i >> 2) & 1, (i >> 1) & 1, i & 1);
            counts[a][b] += c;
        }
        Margin { pair, counts }
    }

    /// Swaps the two levels of W.
    pub fn flip_w(&self) -> Self {
        self.relabel(|x, w, y| (x, 1 - w, y))
    }

    /// Swaps the two levels of X.
    pub fn flip_x(&self) -> Self {
        self.relabel(|x, w, y| (1 - x, w, y))
    }

    /// Swaps the two levels of Y.
    pub fn flip_y(&self) -> Self {
        self.relabel(|x, w, y| (x, w, 1 - y))
    }

    fn relabel(&self, map: impl Fn(usize, usize, usize) -> (usize, usize, usize)) -> Self {
        let mut cells = [0u64; 8];
        for (i, &c) in self.cells.iter().enumerate() {
            let (x, w, y) = map((i >> 2) & 1, (i >> 1) & 1, i & 1);
            cells[cell_index(x, w, y)] = c;
        }
        ContingencyTable { cells }
    }

    /// P(Y=1 | X=x, W=w) for all four strata, indexed `[x][w]`.
    pub fn stratum_risks(&self) -> Result<[[f64; 2]; 2]> {
        let mut p = [[0.0; 2]; 2];
        for (x, row) in p.iter_mut().enumerate() {
            for (w, slot) in row.iter_mut().enumerate() {
                let total = self.stratum_total(x, w);
                if total == 0 {
                    return Err(Error::degenerate(
                        format!("stratum (x={x},w={w})"),
                        "is empty",
                    ));
                }
                *slot = self.get(x, w, 1) as f64 / total as f64;
            }
        }
        Ok(p)
    }
}

impl Add for ContingencyTable {
    type Output = ContingencyTable;

    fn add(self, rhs: Self) -> Self {
        let mut cells = self.cells;
        for (c, r) in cells.iter_mut().zip(rhs.cells) {
            *c += r;
        }
        ContingencyTable { cells }
    }
}

impl FromStr for ContingencyTable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(parse_counts::<8>(s)?)
    }
}

impl fmt::Display for ContingencyTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_counts(f, &self.cells)
    }
}

impl CollapsedTable {
    /// Counts in flat `(x, y)` order: `[x0y0, x0y1, x1y0, x1y1]`.
    pub fn new(cells: [u64; 4]) -> Self {
        CollapsedTable { cells }
    }

    /// Builds a table from counts listed column by column as an exposure
    /// table is usually printed: `(x=0,y=1), (x=1,y=1), (x=0,y=0), (x=1,y=0)`.
    pub fn from_column_order(counts: [u64; 4]) -> Self {
        let [x0y1, x1y1, x0y0, x1y0] = counts;
        CollapsedTable {
            cells: [x0y0, x0y1, x1y0, x1y1],
        }
    }

    /// Inverse of [`CollapsedTable::from_column_order`].
    pub fn column_order(&self) -> [u64; 4] {
        [self.get(0, 1), self.get(1, 1), self.get(0, 0), self.get(1, 0)]
    }

    pub fn cells(&self) -> &[u64; 4] {
        &self.cells
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u64 {
        self.cells[2 * x + y]
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().sum()
    }

    pub fn margin(&self) -> Margin {
        Margin {
            pair: Pair::XY,
            counts: [
                [self.get(0, 0), self.get(0, 1)],
                [self.get(1, 0), self.get(1, 1)],
            ],
        }
    }
}

impl FromStr for CollapsedTable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(Self::new(parse_counts::<4>(s)?))
    }
}

impl fmt::Display for CollapsedTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_counts(f, &self.cells)
    }
}

/// A 2×2 cross-classification of an explanatory variable A against a
/// response B, stored as `counts[a][b]`.
///
/// In the usual letter naming `a = #(A=0,B=1)`, `b = #(A=1,B=1)`,
/// `c = #(A=0,B=0)` and `d = #(A=1,B=0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Margin {
    pub pair: Pair,
    pub counts: [[u64; 2]; 2],
}

impl Margin {
    pub fn from_letters(pair: Pair, a: u64, b: u64, c: u64, d: u64) -> Self {
        Margin {
            pair,
            counts: [[c, a], [d, b]],
        }
    }

    /// `(a, b, c, d)`.
    pub fn letters(&self) -> (u64, u64, u64, u64) {
        let [[c, a], [d, b]] = self.counts;
        (a, b, c, d)
    }

    pub fn row_total(&self, a_level: usize) -> u64 {
        self.counts[a_level][0] + self.counts[a_level][1]
    }

    pub fn column_total(&self, b_level: usize) -> u64 {
        self.counts[0][b_level] + self.counts[1][b_level]
    }

    /// Exchanges the roles of A and B.
    pub fn transpose(&self) -> Margin {
        let pair = match self.pair {
            Pair::XY => Pair::XY,
            Pair::XW => Pair::WX,
            Pair::WX => Pair::XW,
            Pair::WY => Pair::WY,
        };
        let n = self.counts;
        Margin {
            pair,
            counts: [[n[0][0], n[1][0]], [n[0][1], n[1][1]]],
        }
    }

    /// Swaps the two levels of A.
    pub fn flip_explanatory(&self) -> Margin {
        Margin {
            pair: self.pair,
            counts: [self.counts[1], self.counts[0]],
        }
    }

    /// `bc - ad`, the exact cross-product difference. Positive iff the
    /// association between A and B is positive.
    pub fn cross_difference(&self) -> i128 {
        let (a, b, c, d) = self.letters();
        b as i128 * c as i128 - a as i128 * d as i128
    }

    /// P(B=1 | A=level).
    pub fn risk(&self, level: usize) -> Result<f64> {
        let total = self.row_total(level);
        if total == 0 {
            return Err(Error::degenerate(
                self.pair.to_string(),
                format!("has no observations at explanatory level {level}"),
            ));
        }
        Ok(self.counts[level][1] as f64 / total as f64)
    }

    pub fn relative_risk(&self) -> Result<f64> {
        let (a, b, _, _) = self.letters();
        let (n0, n1) = (self.row_total(0), self.row_total(1));
        if n0 == 0 || n1 == 0 {
            return Err(Error::degenerate(
                self.pair.to_string(),
                "explanatory variable is constant",
            ));
        }
        if a == 0 {
            return Err(Error::degenerate(
                self.pair.to_string(),
                "has zero risk at explanatory level 0 (relative risk undefined)",
            ));
        }
        Ok((b as u128 * n0 as u128) as f64 / (a as u128 * n1 as u128) as f64)
    }

    pub fn risk_difference(&self) -> Result<f64> {
        Ok(self.risk(1)? - self.risk(0)?)
    }

    pub fn odds_ratio(&self) -> Result<f64> {
        let (a, b, c, d) = self.letters();
        if a == 0 || d == 0 {
            return Err(Error::degenerate(
                self.pair.to_string(),
                "has a zero cell in the odds-ratio denominator",
            ));
        }
        Ok((b as u128 * c as u128) as f64 / (a as u128 * d as u128) as f64)
    }

    /// Pearson correlation of the 0/1 indicators,
    /// `(bc - ad) / sqrt((a+c)(b+d)(a+b)(c+d))`.
    pub fn correlation(&self) -> Result<f64> {
        let (a, b, c, d) = self.letters();
        let rows = (a + c) as u128 * (b + d) as u128;
        let cols = (a + b) as u128 * (c + d) as u128;
        if rows == 0 {
            return Err(Error::degenerate(
                self.pair.to_string(),
                "explanatory variable is constant",
            ));
        }
        if cols == 0 {
            return Err(Error::degenerate(
                self.pair.to_string(),
                "response variable is constant",
            ));
        }
        Ok(self.cross_difference() as f64 / ((rows as f64).sqrt() * (cols as f64).sqrt()))
    }
}

/// Every bivariate and conditional measure the conditions and reversal
/// predicates consume.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureSet {
    /// P(Y=1 | X=x, W=w), indexed `[x][w]`.
    pub p_y_given_xw: [[f64; 2]; 2],
    pub rr_xy: f64,
    pub rr_xw: f64,
    pub rr_wy: f64,
    pub rd_xy: f64,
    pub rd_xw: f64,
    pub rd_wy: f64,
    pub or_xy: f64,
    /// Symmetric in its variables, so this is also OR_WX.
    pub or_xw: f64,
    pub or_wy: f64,
    pub r_xy: f64,
    /// Symmetric in its variables, so this is also r(W,X).
    pub r_xw: f64,
    pub r_wy: f64,
    pub p_w1: f64,
    /// `(P11 - P01) - (P10 - P00)` on the risk-difference scale.
    pub interaction: f64,
}

impl MeasureSet {
    pub fn or_wx(&self) -> f64 {
        self.or_xw
    }

    pub fn r_wx(&self) -> f64 {
        self.r_xw
    }
}

/// Computes the full [`MeasureSet`] of a table.
pub fn measures(table: &ContingencyTable) -> Result<MeasureSet> {
    let p = table.stratum_risks()?;
    let xy = table.margin_xy();
    let xw = table.margin_xw();
    let wy = table.margin_wy();
    Ok(MeasureSet {
        p_y_given_xw: p,
        rr_xy: xy.relative_risk()?,
        rr_xw: xw.relative_risk()?,
        rr_wy: wy.relative_risk()?,
        rd_xy: xy.risk_difference()?,
        rd_xw: xw.risk_difference()?,
        rd_wy: wy.risk_difference()?,
        or_xy: xy.odds_ratio()?,
        or_xw: xw.odds_ratio()?,
        or_wy: wy.odds_ratio()?,
        r_xy: xy.correlation()?,
        r_xw: xw.correlation()?,
        r_wy: wy.correlation()?,
        p_w1: xw.column_total(1) as f64 / table.total() as f64,
        interaction: (p[1][1] - p[0][1]) - (p[1][0] - p[0][0]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kidney() -> ContingencyTable {
        "71,192,6,81,25,55,36,234".parse().unwrap()
    }

    #[test]
    fn collapse_examples() {
        let ones = ContingencyTable::new([1; 8]).unwrap();
        assert_eq!(ones.collapse().cells(), &[2, 2, 2, 2]);

        let t = ContingencyTable::new([7, 5, 3, 2, 2, 3, 3, 3]).unwrap();
        assert_eq!(t.collapse().cells(), &[10, 7, 5, 6]);

        assert_eq!(kidney().collapse().get(1, 1), 289);
    }

    #[test]
    fn cell_order_is_x_w_y() {
        let t = kidney();
        assert_eq!(t.get(1, 1, 1), 234);
        assert_eq!(t.get(1, 1, 0), 36);
        assert_eq!(t.get(0, 1, 1), 81);
        assert_eq!(t.get(0, 0, 0), 71);
        assert_eq!(cell_index(1, 0, 1), 5);
    }

    #[test]
    fn text_form_round_trips() {
        let t = kidney();
        assert_eq!(t.to_string(), "71,192,6,81,25,55,36,234");
        assert_eq!(t.to_string().parse::<ContingencyTable>().unwrap(), t);
        let c: CollapsedTable = " 1, 2,3 ,4".parse().unwrap();
        assert_eq!(c.to_string(), "1,2,3,4");
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            "1,2,3".parse::<ContingencyTable>(),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            "1,2,3,-4".parse::<CollapsedTable>(),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            "0,0,0,0,0,0,0,0".parse::<ContingencyTable>(),
            Err(Error::DegenerateTable { .. })
        ));
    }

    #[test]
    fn column_order_maps_to_flat_order() {
        let c = CollapsedTable::from_column_order([501, 91, 16533, 1784]);
        assert_eq!(c.get(0, 1), 501);
        assert_eq!(c.get(1, 1), 91);
        assert_eq!(c.get(0, 0), 16533);
        assert_eq!(c.get(1, 0), 1784);
        assert_eq!(c.column_order(), [501, 91, 16533, 1784]);
    }

    #[test]
    fn exposure_table_measures() {
        let m = CollapsedTable::from_column_order([501, 91, 16533, 1784]).margin();
        assert!((m.correlation().unwrap() - 0.0328).abs() <= 1e-4);
        assert!((m.correlation().unwrap() - 0.032_816_665_3).abs() < 1e-9);
        assert!((m.odds_ratio().unwrap() - 1.683_295_964_1).abs() < 1e-9);
        assert!((m.relative_risk().unwrap() - 1.650_133_333_3).abs() < 1e-9);
        assert!((m.risk_difference().unwrap() - 0.019_121_568_6).abs() < 1e-9);
    }

    #[test]
    fn hand_evaluated_margin() {
        let m = Margin::from_letters(Pair::XY, 1, 3, 3, 1);
        assert_eq!(m.odds_ratio().unwrap(), 9.0);
        assert_eq!(m.correlation().unwrap(), 0.5);
    }

    #[test]
    fn independent_margin() {
        let m = Margin::from_letters(Pair::XY, 1, 1, 1, 1);
        assert_eq!(m.correlation().unwrap(), 0.0);
        assert_eq!(m.odds_ratio().unwrap(), 1.0);
        assert_eq!(m.relative_risk().unwrap(), 1.0);
        assert_eq!(m.risk_difference().unwrap(), 0.0);
    }

    #[test]
    fn kidney_measures() {
        let ms = measures(&kidney()).unwrap();
        assert!((ms.r_xy - 0.057_452_943_2).abs() < 1e-9);
        assert!((ms.r_xw - 0.522_961_745_7).abs() < 1e-9);
        assert!((ms.r_wy - 0.203_855_091_1).abs() < 1e-9);
        assert!((ms.or_xw - 10.202_586_206_9).abs() < 1e-9);
        assert!((ms.or_wy - 2.914_979_757_1).abs() < 1e-9);
        assert!((ms.rr_xw - 3.103_448_275_9).abs() < 1e-9);
        assert!((ms.rd_wy - 0.162_236_323_1).abs() < 1e-9);
        assert!((ms.p_w1 - 0.51).abs() < 1e-15);
        assert!((ms.interaction - (-0.021_829_793_3)).abs() < 1e-9);
        assert!((ms.p_y_given_xw[1][1] - 234.0 / 270.0).abs() < 1e-15);
    }

    #[test]
    fn or_is_symmetric_exactly() {
        let t = kidney();
        let xw = t.margin_xw();
        assert_eq!(xw.odds_ratio().unwrap(), xw.transpose().odds_ratio().unwrap());
        assert_eq!(xw.correlation().unwrap(), xw.transpose().correlation().unwrap());
        assert_eq!(xw.transpose().pair, Pair::WX);
    }

    #[test]
    fn degenerate_margins_are_named() {
        // W constant at 0.
        let t = ContingencyTable::new([3, 4, 0, 0, 5, 6, 0, 0]).unwrap();
        match measures(&t) {
            Err(Error::DegenerateTable { margin, .. }) => assert!(margin.contains("w=1")),
            other => panic!("expected degenerate table, got {other:?}"),
        }
        let m = Margin::from_letters(Pair::WY, 0, 3, 4, 5);
        match m.relative_risk() {
            Err(Error::DegenerateTable { margin, .. }) => assert_eq!(margin, "(W,Y)"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(m.odds_ratio().is_err());
        assert!(Margin::from_letters(Pair::XY, 0, 0, 4, 5).correlation().is_err());
    }

    #[test]
    fn zero_numerators_are_allowed() {
        let m = Margin::from_letters(Pair::XY, 2, 0, 3, 4);
        assert_eq!(m.odds_ratio().unwrap(), 0.0);
        assert_eq!(m.relative_risk().unwrap(), 0.0);
    }

    #[test]
    fn flips_are_involutions() {
        let t = kidney();
        assert_eq!(t.flip_w().flip_w(), t);
        assert_eq!(t.flip_x().flip_x(), t);
        assert_eq!(t.flip_w().get(1, 0, 1), 234);
        assert_eq!(t.flip_w().collapse(), t.collapse());
    }
}
