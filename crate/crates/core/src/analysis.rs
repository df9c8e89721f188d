//! Which effects could matter.
//!
//! With more covariates than observations the active columns are confounded
//! with many inactive ones, so individual zeros say little. A column whose
//! projection onto the span of the active columns vanishes lies in the
//! orthogonal complement of that span: nothing the fit picked up can stand
//! in for it, and it is marked as showing no evidence of significance. Every
//! other column, active ones included, is potentially significant.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::design::{effect_counts, CoefficientBlock, DyadDesign, EffectCategory, EffectFamily};
use crate::error::{Error, Result};
use crate::selection::{active_submatrix, column_space_basis};

/// Relative projection norm below which a column counts as orthogonal.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectStatus {
    PotentiallySignificant,
    NoEvidence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnStatus {
    pub column: usize,
    pub effect: EffectFamily,
    pub status: EffectStatus,
}

/// Classification of every design column of one pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSignificance {
    pub pair: (usize, usize),
    pub columns: Vec<ColumnStatus>,
    /// Rank of the active submatrix.
    pub rank: usize,
    pub nonzero_slopes: usize,
}

impl PairSignificance {
    pub fn potentially_significant(&self, category: EffectCategory) -> usize {
        self.columns
            .iter()
            .filter(|c| {
                c.effect.kind.category() == Some(category)
                    && c.status == EffectStatus::PotentiallySignificant
            })
            .count()
    }

    pub fn category_size(&self, category: EffectCategory) -> usize {
        self.columns
            .iter()
            .filter(|c| c.effect.kind.category() == Some(category))
            .count()
    }
}

pub fn classify_effects(
    design: &DyadDesign,
    coef: &CoefficientBlock,
    tol: f64,
) -> Result<PairSignificance> {
    coef.check_width(design.width())?;
    let active = coef.active_columns();
    let basis = column_space_basis(&active_submatrix(design, coef));
    let mut is_active = vec![false; design.width()];
    for &k in &active {
        is_active[k] = true;
    }
    let columns = design
        .columns()
        .iter()
        .enumerate()
        .map(|(k, &effect)| {
            let status = if is_active[k] {
                EffectStatus::PotentiallySignificant
            } else {
                let support = design.support(k);
                let norm = (support.len() as f64).sqrt();
                // Q^T c, with c the 0/1 column.
                let proj_sq: f64 = (0..basis.ncols())
                    .map(|b| {
                        let dot: f64 = support.iter().map(|&t| basis[(t as usize, b)]).sum();
                        dot * dot
                    })
                    .sum();
                if norm == 0.0 || proj_sq.sqrt() <= tol * norm {
                    EffectStatus::NoEvidence
                } else {
                    EffectStatus::PotentiallySignificant
                }
            };
            ColumnStatus {
                column: k,
                effect,
                status,
            }
        })
        .collect();
    Ok(PairSignificance {
        pair: design.pair(),
        columns,
        rank: basis.ncols(),
        nonzero_slopes: coef.nonzero().len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub category: EffectCategory,
    /// Penalised coefficients of this category per pair, over all classes.
    pub effects: usize,
    /// Qualifying pairs with no potentially significant effect here.
    pub pairs_without: usize,
    pub pairs: usize,
}

impl CategoryRow {
    /// Percentage of qualifying pairs without this category; `None` when no
    /// pair qualifies.
    pub fn percent_non_present(&self) -> Option<f64> {
        (self.pairs > 0).then(|| 100.0 * self.pairs_without as f64 / self.pairs as f64)
    }
}

/// Per-pair share of second-order effects showing no evidence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderShare {
    pub pair: (usize, usize),
    pub diversification_no_evidence_pct: f64,
    pub disintermediation_no_evidence_pct: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignificanceTable {
    /// Pairs with at least one nonzero slope.
    pub qualifying_pairs: usize,
    pub total_pairs: usize,
    pub rows: Vec<CategoryRow>,
    /// Rank of the active submatrix -> number of qualifying pairs.
    pub rank_histogram: BTreeMap<usize, usize>,
    pub second_order: Vec<SecondOrderShare>,
}

fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// Summarises pair reports, restricted to pairs with a nonzero slope.
pub fn aggregate_table(reports: &[PairSignificance], n: usize) -> Result<SignificanceTable> {
    if reports.is_empty() {
        return Err(Error::EmptyReport);
    }
    let qualifying: Vec<&PairSignificance> =
        reports.iter().filter(|r| r.nonzero_slopes > 0).collect();
    let counts = effect_counts(n);
    let rows = EffectCategory::ALL
        .iter()
        .map(|&category| CategoryRow {
            category,
            effects: counts.get(category),
            pairs_without: qualifying
                .iter()
                .filter(|r| r.potentially_significant(category) == 0)
                .count(),
            pairs: qualifying.len(),
        })
        .collect();
    let mut rank_histogram = BTreeMap::new();
    for r in &qualifying {
        *rank_histogram.entry(r.rank).or_insert(0) += 1;
    }
    let second_order = qualifying
        .iter()
        .map(|r| {
            let share = |cat| {
                let size = r.category_size(cat);
                pct(size - r.potentially_significant(cat), size)
            };
            SecondOrderShare {
                pair: r.pair,
                diversification_no_evidence_pct: share(EffectCategory::Diversification),
                disintermediation_no_evidence_pct: share(EffectCategory::Disintermediation),
            }
        })
        .collect();
    Ok(SignificanceTable {
        qualifying_pairs: qualifying.len(),
        total_pairs: reports.len(),
        rows,
        rank_histogram,
        second_order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::column_effects;
    use crate::network::DyadOutcome;

    /// n = 3, columns in design order:
    /// 0 y_ij, 1 y_ji, 2 y_ik, 3 y_kj, 4 y_jk, 5 y_ki, 6 recip, 7 fwd, 8 rev.
    fn design_from_columns(cols: &[Vec<u8>]) -> DyadDesign {
        let rows = cols[0].len();
        let x: Vec<Vec<u8>> = (0..rows)
            .map(|t| cols.iter().map(|c| c[t]).collect())
            .collect();
        DyadDesign::from_rows(
            (0, 1),
            column_effects(3, 0, 1),
            &x,
            vec![DyadOutcome::NN; rows],
        )
        .unwrap()
    }

    fn inner(a: &[u8], b: &[u8]) -> u32 {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| u32::from(x) * u32::from(y))
            .sum()
    }

    #[test]
    fn empty_active_set_means_no_evidence_everywhere() {
        let cols: Vec<Vec<u8>> = (0..9)
            .map(|k| (0..6).map(|t| u8::from((t + k) % 3 == 0)).collect())
            .collect();
        let d = design_from_columns(&cols);
        let rep = classify_effects(&d, &CoefficientBlock::zeros(9), DEFAULT_TOLERANCE).unwrap();
        assert!(rep
            .columns
            .iter()
            .all(|c| c.status == EffectStatus::NoEvidence));
        assert_eq!(rep.rank, 0);
    }

    #[test]
    fn disjoint_support_columns_are_orthogonal() {
        // Active column 0 lives on rows 0..3; columns with support in 3..6
        // have zero inner product with it.
        let on =
            |rows: &[usize]| -> Vec<u8> { (0..6).map(|t| u8::from(rows.contains(&t))).collect() };
        let cols = vec![
            on(&[0, 1, 2]),
            on(&[0, 1, 2]),
            on(&[3, 4]),
            on(&[1, 4]),
            on(&[5]),
            on(&[]),
            on(&[2]),
            on(&[3, 4, 5]),
            on(&[0, 5]),
        ];
        let d = design_from_columns(&cols);
        let mut coef = CoefficientBlock::zeros(9);
        coef.theta[1][0] = 0.7;
        let rep = classify_effects(&d, &coef, DEFAULT_TOLERANCE).unwrap();
        for (k, col) in cols.iter().enumerate() {
            let orthogonal = k != 0 && inner(col, &cols[0]) == 0;
            let expected = if orthogonal {
                EffectStatus::NoEvidence
            } else {
                EffectStatus::PotentiallySignificant
            };
            assert_eq!(rep.columns[k].status, expected, "column {k}");
        }
        assert_eq!(rep.columns[1].status, EffectStatus::PotentiallySignificant);
    }

    #[test]
    fn aggregate_counts_and_empty() {
        assert!(matches!(aggregate_table(&[], 3), Err(Error::EmptyReport)));
        let on =
            |rows: &[usize]| -> Vec<u8> { (0..4).map(|t| u8::from(rows.contains(&t))).collect() };
        let cols = vec![
            on(&[0, 1]),
            on(&[2, 3]),
            on(&[2]),
            on(&[3]),
            on(&[2, 3]),
            on(&[2]),
            on(&[3]),
            on(&[2]),
            on(&[3]),
        ];
        let d = design_from_columns(&cols);
        let mut coef = CoefficientBlock::zeros(9);
        coef.theta[0][0] = 1.0;
        let rep = classify_effects(&d, &coef, DEFAULT_TOLERANCE).unwrap();
        let null = PairSignificance {
            nonzero_slopes: 0,
            ..rep.clone()
        };
        let table = aggregate_table(&[rep, null], 3).unwrap();
        assert_eq!(table.qualifying_pairs, 1);
        assert_eq!(table.total_pairs, 2);
        let pct: Vec<_> = table
            .rows
            .iter()
            .map(|r| r.percent_non_present().unwrap())
            .collect();
        // Only persistence is active; everything else sits on rows 2..4.
        assert_eq!(pct, vec![0.0, 100.0, 100.0, 100.0]);
        assert_eq!(table.rows[2].effects, 12);
        assert_eq!(table.rank_histogram.get(&1), Some(&1));
        assert_eq!(table.second_order[0].diversification_no_evidence_pct, 100.0);
    }

    #[test]
    fn all_null_pairs_leave_no_qualifiers() {
        let cols: Vec<Vec<u8>> = (0..9).map(|_| vec![1, 0, 1]).collect();
        let d = design_from_columns(&cols);
        let rep = classify_effects(&d, &CoefficientBlock::zeros(9), DEFAULT_TOLERANCE).unwrap();
        let table = aggregate_table(&[rep], 3).unwrap();
        assert_eq!(table.qualifying_pairs, 0);
        assert!(table.rows.iter().all(|r| r.percent_non_present().is_none()));
    }
}
