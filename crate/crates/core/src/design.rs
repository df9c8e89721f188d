//! Lagged covariates for one pair of nodes.
//!
//! For a pair `i < j` the covariate vector built from slice `Y_t` is
//!
//! ```text
//! [ y_ij, y_ji,
//!   y_ik (k), y_kj (k), y_jk (k), y_ki (k),
//!   y_ij*y_ji,
//!   y_ik*y_kj (k), y_jk*y_ki (k) ]
//! ```
//!
//! where each `(k)` block runs over the third nodes `k != i, j` in ascending
//! order. That gives `d = 3 + 6(n-2)` columns. This order is a stable
//! contract: coefficient files and [`CoefficientBlock`] rows follow it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{DyadOutcome, NetworkSeries};

/// Which term of the linear predictor a coefficient multiplies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectKind {
    Intercept,
    /// `y_ij`
    PersistenceSelf,
    /// `y_ji`
    PersistenceOther,
    /// `y_ik`
    DiversifyOut,
    /// `y_kj`
    DiversifyIn,
    /// `y_jk`
    DiversifyOutOther,
    /// `y_ki`
    DiversifyInOther,
    /// `y_ij * y_ji`
    InterReciprocity,
    /// `y_ik * y_kj`
    DisintermediationFwd,
    /// `y_jk * y_ki`
    DisintermediationRev,
}

/// Coarse grouping used when summarising which effects matter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectCategory {
    Persistence,
    Reciprocity,
    Diversification,
    Disintermediation,
}

impl EffectCategory {
    pub const ALL: [EffectCategory; 4] = [
        Self::Persistence,
        Self::Reciprocity,
        Self::Diversification,
        Self::Disintermediation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Persistence => "persistence",
            Self::Reciprocity => "reciprocity",
            Self::Diversification => "substitution_diversification",
            Self::Disintermediation => "disintermediation",
        }
    }
}

impl EffectKind {
    pub fn category(self) -> Option<EffectCategory> {
        use EffectKind::*;
        match self {
            Intercept => None,
            PersistenceSelf | PersistenceOther => Some(EffectCategory::Persistence),
            InterReciprocity => Some(EffectCategory::Reciprocity),
            DiversifyOut | DiversifyIn | DiversifyOutOther | DiversifyInOther => {
                Some(EffectCategory::Diversification)
            }
            DisintermediationFwd | DisintermediationRev => Some(EffectCategory::Disintermediation),
        }
    }

    pub fn has_third_node(self) -> bool {
        !matches!(
            self,
            Self::Intercept
                | Self::PersistenceSelf
                | Self::PersistenceOther
                | Self::InterReciprocity
        )
    }
}

/// A covariate column label: the effect plus the third node it refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EffectFamily {
    pub kind: EffectKind,
    /// Zero-based third node for the `k`-indexed families.
    pub third_node: Option<usize>,
}

/// Number of covariate columns per class, `3 + 6(n-2)`.
pub fn covariate_count(n: usize) -> usize {
    3 + 6 * n.saturating_sub(2)
}

fn third_nodes(n: usize, i: usize, j: usize) -> impl Iterator<Item = usize> + Clone {
    (0..n).filter(move |&k| k != i && k != j)
}

/// Column labels, in design order, for pair `(i, j)` of an `n`-node network.
pub fn column_effects(n: usize, i: usize, j: usize) -> Vec<EffectFamily> {
    use EffectKind::*;
    let plain = |kind| EffectFamily {
        kind,
        third_node: None,
    };
    let ks = third_nodes(n, i, j);
    let block = |kind| {
        ks.clone().map(move |k| EffectFamily {
            kind,
            third_node: Some(k),
        })
    };
    let mut cols = Vec::with_capacity(covariate_count(n));
    cols.push(plain(PersistenceSelf));
    cols.push(plain(PersistenceOther));
    cols.extend(block(DiversifyOut));
    cols.extend(block(DiversifyIn));
    cols.extend(block(DiversifyOutOther));
    cols.extend(block(DiversifyInOther));
    cols.push(plain(InterReciprocity));
    cols.extend(block(DisintermediationFwd));
    cols.extend(block(DisintermediationRev));
    cols
}

/// Position of `effect` in the design order of pair `(i, j)`; `None` for
/// the intercept or an invalid third node.
pub fn column_index(n: usize, i: usize, j: usize, effect: EffectFamily) -> Option<usize> {
    use EffectKind::*;
    let m = n.checked_sub(2)?;
    let offset = |block: usize| -> Option<usize> {
        let k = effect.third_node?;
        if k >= n || k == i || k == j {
            return None;
        }
        let pos = k - usize::from(k > i) - usize::from(k > j);
        Some(2 + block * m + pos + usize::from(block >= 4))
    };
    match (effect.kind, effect.third_node) {
        (PersistenceSelf, None) => Some(0),
        (PersistenceOther, None) => Some(1),
        (InterReciprocity, None) => Some(2 + 4 * m),
        (DiversifyOut, _) => offset(0),
        (DiversifyIn, _) => offset(1),
        (DiversifyOutOther, _) => offset(2),
        (DiversifyInOther, _) => offset(3),
        (DisintermediationFwd, _) => offset(4),
        (DisintermediationRev, _) => offset(5),
        _ => None,
    }
}

/// Value of one covariate for pair `(i, j)` on slice `t`; 1 for the intercept.
pub fn effect_value(
    series: &NetworkSeries,
    t: usize,
    i: usize,
    j: usize,
    effect: EffectFamily,
) -> u8 {
    effect_value_with(|a, b| series.bit(t, a, b), i, j, effect)
}

pub(crate) fn effect_value_with(
    y: impl Fn(usize, usize) -> u8,
    i: usize,
    j: usize,
    effect: EffectFamily,
) -> u8 {
    use EffectKind::*;
    let k = effect.third_node.unwrap_or(0);
    match effect.kind {
        Intercept => 1,
        PersistenceSelf => y(i, j),
        PersistenceOther => y(j, i),
        DiversifyOut => y(i, k),
        DiversifyIn => y(k, j),
        DiversifyOutOther => y(j, k),
        DiversifyInOther => y(k, i),
        InterReciprocity => y(i, j) * y(j, i),
        DisintermediationFwd => y(i, k) * y(k, j),
        DisintermediationRev => y(j, k) * y(k, i),
    }
}

/// Covariate vector for pair `(i, j)` evaluated on slice `t`.
pub fn covariate_row(series: &NetworkSeries, t: usize, i: usize, j: usize) -> Vec<u8> {
    let n = series.n();
    let y = |a, b| series.bit(t, a, b);
    let ks = third_nodes(n, i, j);
    let mut row = Vec::with_capacity(covariate_count(n));
    row.push(y(i, j));
    row.push(y(j, i));
    row.extend(ks.clone().map(|k| y(i, k)));
    row.extend(ks.clone().map(|k| y(k, j)));
    row.extend(ks.clone().map(|k| y(j, k)));
    row.extend(ks.clone().map(|k| y(k, i)));
    row.push(y(i, j) * y(j, i));
    row.extend(ks.clone().map(|k| y(i, k) * y(k, j)));
    row.extend(ks.map(|k| y(j, k) * y(k, i)));
    row
}

/// Binary design for one pair: rows built from `Y_1..Y_{T-1}`, responses
/// taken from `Y_2..Y_T`.
///
/// Columns are stored sparse as the sorted rows where the entry is 1.
#[derive(Clone, Debug)]
pub struct DyadDesign {
    pair: (usize, usize),
    rows: usize,
    columns: Vec<EffectFamily>,
    support: Vec<Vec<u32>>,
    responses: Vec<DyadOutcome>,
}

impl DyadDesign {
    pub fn build(series: &NetworkSeries, i: usize, j: usize) -> Result<Self> {
        let n = series.n();
        if i >= j || j >= n {
            return Err(Error::InvalidPair { i, j });
        }
        if series.len() < 2 {
            return Err(Error::TooFewSlices {
                needed: 2,
                got: series.len(),
            });
        }
        let rows = series.len() - 1;
        let d = covariate_count(n);
        let mut support = vec![Vec::new(); d];
        for t in 0..rows {
            for (k, &v) in covariate_row(series, t, i, j).iter().enumerate() {
                if v == 1 {
                    support[k].push(t as u32);
                }
            }
        }
        let responses = (1..series.len()).map(|t| series.outcome(t, i, j)).collect();
        Ok(Self {
            pair: (i, j),
            rows,
            columns: column_effects(n, i, j),
            support,
            responses,
        })
    }

    /// Assembles a design from explicit dense rows; used for synthetic
    /// instances that do not come from a network.
    pub fn from_rows(
        pair: (usize, usize),
        columns: Vec<EffectFamily>,
        rows: &[Vec<u8>],
        responses: Vec<DyadOutcome>,
    ) -> Result<Self> {
        if rows.len() != responses.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows but {} responses",
                rows.len(),
                responses.len()
            )));
        }
        let d = columns.len();
        let mut support = vec![Vec::new(); d];
        for (t, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "row {t} has {} entries, expected {d}",
                    row.len()
                )));
            }
            for (k, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => support[k].push(t as u32),
                    other => {
                        return Err(Error::NonBinary {
                            t,
                            row: t,
                            col: k,
                            value: other.to_string(),
                        })
                    }
                }
            }
        }
        Ok(Self {
            pair,
            rows: rows.len(),
            columns,
            support,
            responses,
        })
    }

    pub fn pair(&self) -> (usize, usize) {
        self.pair
    }

    /// Number of observations, `T - 1`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of covariate columns `d`.
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[EffectFamily] {
        &self.columns
    }

    pub fn responses(&self) -> &[DyadOutcome] {
        &self.responses
    }

    /// Rows where column `k` equals 1.
    pub fn support(&self, k: usize) -> &[u32] {
        &self.support[k]
    }

    pub fn value(&self, t: usize, k: usize) -> u8 {
        u8::from(self.support[k].binary_search(&(t as u32)).is_ok())
    }

    /// Column `k` as a dense 0/1 vector of length `T - 1`.
    pub fn column(&self, k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for &t in &self.support[k] {
            out[t as usize] = 1.0;
        }
        out
    }

    pub fn row(&self, t: usize) -> Vec<u8> {
        (0..self.width()).map(|k| self.value(t, k)).collect()
    }

    /// All-zero or all-one column; such columns carry no information beyond
    /// the intercept.
    pub fn is_constant(&self, k: usize) -> bool {
        let len = self.support[k].len();
        len == 0 || len == self.rows
    }

    /// Dense `(T-1) x |cols|` matrix of the selected columns.
    pub fn submatrix(&self, cols: &[usize]) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.rows, cols.len());
        for (c, &k) in cols.iter().enumerate() {
            for &t in &self.support[k] {
                m[(t as usize, c)] = 1.0;
            }
        }
        m
    }
}

/// Intercepts and slope coefficients of one pair.
///
/// `theta[r][k]` is the coefficient of design column `k` in the predictor of
/// class `r` (`r = 0, 1, 2` for the three natural parameters).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientBlock {
    pub intercepts: [f64; 3],
    pub theta: [Vec<f64>; 3],
}

impl CoefficientBlock {
    pub fn zeros(width: usize) -> Self {
        Self {
            intercepts: [0.0; 3],
            theta: [vec![0.0; width], vec![0.0; width], vec![0.0; width]],
        }
    }

    pub fn width(&self) -> usize {
        self.theta[0].len()
    }

    /// `(class, column)` of every nonzero slope.
    pub fn nonzero(&self) -> Vec<(usize, usize)> {
        (0..3)
            .flat_map(|r| {
                self.theta[r]
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(move |(k, _)| (r, k))
            })
            .collect()
    }

    /// Columns with a nonzero slope in at least one class, ascending.
    pub fn active_columns(&self) -> Vec<usize> {
        (0..self.width())
            .filter(|&k| (0..3).any(|r| self.theta[r][k] != 0.0))
            .collect()
    }

    pub fn l1_norm(&self) -> f64 {
        self.theta.iter().flatten().map(|v| v.abs()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.intercepts
            .iter()
            .chain(self.theta.iter().flatten())
            .all(|v| v.is_finite())
    }

    pub(crate) fn check_width(&self, width: usize) -> Result<()> {
        if self.theta.iter().any(|row| row.len() != width) {
            return Err(Error::DimensionMismatch(format!(
                "coefficient rows have length {}, design has {width} columns",
                self.width()
            )));
        }
        Ok(())
    }
}

/// Number of penalised effects of each category, summed over the 3 classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EffectCounts {
    pub persistence: usize,
    pub reciprocity: usize,
    pub diversification: usize,
    pub disintermediation: usize,
    /// Set when `n < 3`, so the third-node families are empty.
    pub no_third_nodes: bool,
}

impl EffectCounts {
    pub fn total(&self) -> usize {
        self.persistence + self.reciprocity + self.diversification + self.disintermediation
    }

    pub fn get(&self, category: EffectCategory) -> usize {
        match category {
            EffectCategory::Persistence => self.persistence,
            EffectCategory::Reciprocity => self.reciprocity,
            EffectCategory::Diversification => self.diversification,
            EffectCategory::Disintermediation => self.disintermediation,
        }
    }
}

pub fn effect_counts(n: usize) -> EffectCounts {
    let m = n.saturating_sub(2);
    EffectCounts {
        persistence: 6,
        reciprocity: 3,
        diversification: 12 * m,
        disintermediation: 6 * m,
        no_third_nodes: n < 3,
    }
}

/// Total parameter count of the model, `n(n-1)/2 * (9 + 18(n-2))`.
pub fn total_parameter_count(n: usize) -> u64 {
    let n = n as u64;
    let m = n.saturating_sub(2);
    n * n.saturating_sub(1) / 2 * (9 + 18 * m)
}
