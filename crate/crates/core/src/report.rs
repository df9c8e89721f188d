//! Serialised outputs.
//!
//! Files use one-based node indices, slice indices and class numbers; the
//! in-memory types stay zero-based. Floats are written in shortest
//! round-trip form so reading a file back reproduces every value bit for
//! bit.

use serde::{Deserialize, Serialize};

use crate::analysis::{EffectStatus, PairSignificance, SignificanceTable};
use crate::design::{
    column_effects, column_index, covariate_count, CoefficientBlock, EffectFamily, EffectKind,
};
use crate::error::{Error, Result};
use crate::network::{pair_count, pairs};
use crate::optimizer::PairFit;
use crate::prediction::{PredictionSet, RocCurve, RollingReport};
use crate::selection::PathResult;
use crate::simulate::{GroundTruth, SimDesign};

fn one_based(pair: (usize, usize)) -> [usize; 2] {
    [pair.0 + 1, pair.1 + 1]
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(header)?;
    for row in rows {
        wtr.write_record(&row)?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// One coefficient; intercepts carry `effect = intercept`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub pair: [usize; 2],
    /// 1, 2 or 3.
    pub class: usize,
    pub effect: EffectKind,
    pub third_node: Option<usize>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFile {
    pub n: usize,
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    /// Nonzero entries only, pairs in lexicographic order.
    pub entries: Vec<CoefficientEntry>,
}

impl CoefficientFile {
    pub fn from_blocks(n: usize, lambda: Option<f64>, blocks: &[CoefficientBlock]) -> Result<Self> {
        if blocks.len() != pair_count(n) {
            return Err(Error::DimensionMismatch(format!(
                "{} blocks for {} pairs",
                blocks.len(),
                pair_count(n)
            )));
        }
        let mut entries = Vec::new();
        for ((i, j), block) in pairs(n).zip(blocks) {
            block.check_width(covariate_count(n))?;
            let labels = column_effects(n, i, j);
            for r in 0..3 {
                if block.intercepts[r] != 0.0 {
                    entries.push(CoefficientEntry {
                        pair: one_based((i, j)),
                        class: r + 1,
                        effect: EffectKind::Intercept,
                        third_node: None,
                        value: block.intercepts[r],
                    });
                }
            }
            for (r, c) in block.nonzero() {
                entries.push(CoefficientEntry {
                    pair: one_based((i, j)),
                    class: r + 1,
                    effect: labels[c].kind,
                    third_node: labels[c].third_node.map(|k| k + 1),
                    value: block.theta[r][c],
                });
            }
        }
        Ok(Self {
            n,
            lambda,
            labels: None,
            entries,
        })
    }

    pub fn to_blocks(&self) -> Result<Vec<CoefficientBlock>> {
        let n = self.n;
        let d = covariate_count(n);
        let mut blocks = vec![CoefficientBlock::zeros(d); pair_count(n)];
        for e in &self.entries {
            let bad = || Error::Parse(format!("invalid coefficient entry {e:?}"));
            let [a, b] = e.pair;
            if a == 0 || a >= b || b > n || !(1..=3).contains(&e.class) || !e.value.is_finite() {
                return Err(bad());
            }
            let (i, j) = (a - 1, b - 1);
            let p = pair_position(n, i, j);
            let r = e.class - 1;
            if e.effect == EffectKind::Intercept {
                if e.third_node.is_some() {
                    return Err(bad());
                }
                blocks[p].intercepts[r] = e.value;
                continue;
            }
            let third_node = match (e.effect.has_third_node(), e.third_node) {
                (true, Some(k)) if k >= 1 => Some(k - 1),
                (false, None) => None,
                _ => return Err(bad()),
            };
            let c = column_index(
                n,
                i,
                j,
                EffectFamily {
                    kind: e.effect,
                    third_node,
                },
            )
            .ok_or_else(bad)?;
            blocks[p].theta[r][c] = e.value;
        }
        Ok(blocks)
    }
}

/// Lexicographic index of pair `i < j`.
pub fn pair_position(n: usize, i: usize, j: usize) -> usize {
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

pub fn coefficients_json(file: &CoefficientFile) -> Result<String> {
    Ok(serde_json::to_string_pretty(file)?)
}

pub fn parse_coefficients(json: &str) -> Result<CoefficientFile> {
    Ok(serde_json::from_str(json)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairDiagnostics {
    pub pair: [usize; 2],
    pub lambda: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub cap_hit: bool,
    pub kkt_violation: f64,
    pub objective: f64,
    pub loglik: f64,
    pub active: usize,
}

impl From<&PairFit> for PairDiagnostics {
    fn from(f: &PairFit) -> Self {
        Self {
            pair: one_based(f.pair),
            lambda: f.lambda,
            sweeps: f.sweeps,
            converged: f.converged,
            cap_hit: f.cap_hit,
            kkt_violation: f.kkt_violation,
            objective: f.objective,
            loglik: f.loglik,
            active: f.active_len(),
        }
    }
}

/// JSON lines, one record per pair.
pub fn diagnostics_jsonl(fits: &[PairFit]) -> Result<String> {
    let mut out = String::new();
    for f in fits {
        out.push_str(&serde_json::to_string(&PairDiagnostics::from(f))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn path_csv(path: &PathResult) -> Result<String> {
    csv_string(
        &["lambda", "bic", "loglik", "active", "rank", "failures"],
        path.points.iter().map(|p| {
            vec![
                p.lambda.to_string(),
                opt(p.bic),
                p.loglik.to_string(),
                p.active_coefficients.to_string(),
                p.total_rank.to_string(),
                p.failures.len().to_string(),
            ]
        }),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub n: usize,
    pub slices: usize,
    pub grid: Vec<f64>,
    pub selected_lambda: f64,
    pub selected_bic: f64,
    pub lambda_max: f64,
    pub invalid_lambdas: Vec<f64>,
    pub failures: Vec<String>,
    pub unconverged_pairs: usize,
    pub capped_pairs: usize,
    pub qualifying_pairs: usize,
}

impl FitSummary {
    pub fn new(
        n: usize,
        slices: usize,
        path: &PathResult,
        lambda_max: f64,
        table: &SignificanceTable,
    ) -> Self {
        let best = path.selected_point();
        Self {
            n,
            slices,
            grid: path.points.iter().map(|p| p.lambda).collect(),
            selected_lambda: best.lambda,
            selected_bic: best.bic.expect("selected point is valid"),
            lambda_max,
            invalid_lambdas: path
                .points
                .iter()
                .filter(|p| !p.is_valid())
                .map(|p| p.lambda)
                .collect(),
            failures: path
                .points
                .iter()
                .flat_map(|p| p.failures.iter().cloned())
                .collect(),
            unconverged_pairs: best.fits.iter().filter(|f| !f.converged).count(),
            capped_pairs: best.fits.iter().filter(|f| f.cap_hit).count(),
            qualifying_pairs: table.qualifying_pairs,
        }
    }
}

pub fn table_csv(table: &SignificanceTable) -> Result<String> {
    csv_string(
        &[
            "category",
            "effects",
            "pairs_without",
            "qualifying_pairs",
            "percent_non_present",
        ],
        table.rows.iter().map(|r| {
            vec![
                r.category.name().to_string(),
                r.effects.to_string(),
                r.pairs_without.to_string(),
                r.pairs.to_string(),
                opt(r.percent_non_present()),
            ]
        }),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnRecord {
    pub effect: EffectKind,
    pub third_node: Option<usize>,
    pub status: EffectStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSignificanceRecord {
    pub pair: [usize; 2],
    pub rank: usize,
    pub nonzero_slopes: usize,
    pub potentially_significant: usize,
    pub columns: Vec<ColumnRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignificanceFile {
    pub table: SignificanceTable,
    pub pairs: Vec<PairSignificanceRecord>,
}

pub fn significance_json(
    table: &SignificanceTable,
    reports: &[PairSignificance],
) -> Result<String> {
    let pairs = reports
        .iter()
        .map(|r| PairSignificanceRecord {
            pair: one_based(r.pair),
            rank: r.rank,
            nonzero_slopes: r.nonzero_slopes,
            potentially_significant: r
                .columns
                .iter()
                .filter(|c| c.status == EffectStatus::PotentiallySignificant)
                .count(),
            columns: r
                .columns
                .iter()
                .map(|c| ColumnRecord {
                    effect: c.effect.kind,
                    third_node: c.effect.third_node.map(|k| k + 1),
                    status: c.status,
                })
                .collect(),
        })
        .collect();
    Ok(serde_json::to_string_pretty(&SignificanceFile {
        table: table.clone(),
        pairs,
    })?)
}

pub fn roc_csv(roc: &RocCurve) -> Result<String> {
    csv_string(
        &["fpr", "tpr"],
        roc.points
            .iter()
            .map(|(x, y)| vec![x.to_string(), y.to_string()]),
    )
}

/// One row per origin: the one-based predicted slice and its AUC, plus the
/// AUC of reference coefficients when given.
pub fn auc_csv(report: &RollingReport, reference: Option<&[Option<f64>]>) -> Result<String> {
    let mut header = vec!["origin", "train_slices", "auc"];
    if reference.is_some() {
        header.push("truth_auc");
    }
    csv_string(
        &header,
        report.origins.iter().enumerate().map(|(g, o)| {
            let mut row = vec![
                (o.predictions.horizon + 1).to_string(),
                o.train_len.to_string(),
                opt(o.auc()),
            ];
            if let Some(r) = reference {
                row.push(opt(r.get(g).copied().flatten()));
            }
            row
        }),
    )
}

/// Directed link probabilities, one row per ordered pair.
pub fn predictions_csv(pred: &PredictionSet) -> Result<String> {
    let truth = pred.truth.as_ref();
    let mut header = vec!["i", "j", "prob"];
    if truth.is_some() {
        header.push("observed");
    }
    csv_string(
        &header,
        pred.directed().map(|((i, j), p)| {
            let mut row = vec![(i + 1).to_string(), (j + 1).to_string(), p.to_string()];
            if let Some(t) = truth {
                row.push(u8::from(t[i * pred.n + j]).to_string());
            }
            row
        }),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportEntry {
    pub pair: [usize; 2],
    pub class: usize,
    pub effect: EffectKind,
    pub third_node: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairGroup {
    pub pair: [usize; 2],
    pub group: usize,
    pub third_nodes: [usize; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthFile {
    pub design: SimDesign,
    pub coefficients: CoefficientFile,
    /// Nonzero slopes.
    pub support: Vec<SupportEntry>,
    pub groups: Vec<PairGroup>,
}

impl GroundTruthFile {
    pub fn new(design: &SimDesign, truth: &GroundTruth) -> Result<Self> {
        let coefficients = CoefficientFile::from_blocks(truth.n, None, &truth.blocks)?;
        let support = coefficients
            .entries
            .iter()
            .filter(|e| e.effect != EffectKind::Intercept)
            .map(|e| SupportEntry {
                pair: e.pair,
                class: e.class,
                effect: e.effect,
                third_node: e.third_node,
            })
            .collect();
        let groups = pairs(truth.n)
            .enumerate()
            .map(|(p, pair)| PairGroup {
                pair: one_based(pair),
                group: truth.groups[p] + 1,
                third_nodes: truth.triples[p].map(|k| k + 1),
            })
            .collect();
        Ok(Self {
            design: design.clone(),
            coefficients,
            support,
            groups,
        })
    }

    pub fn to_truth(&self) -> Result<GroundTruth> {
        let n = self.coefficients.n;
        if self.groups.len() != pair_count(n) {
            return Err(Error::Parse("group list does not cover every pair".into()));
        }
        let back = |k: usize| {
            k.checked_sub(1)
                .ok_or_else(|| Error::Parse("indices are one-based".into()))
        };
        Ok(GroundTruth {
            n,
            blocks: self.coefficients.to_blocks()?,
            groups: self
                .groups
                .iter()
                .map(|g| back(g.group))
                .collect::<Result<_>>()?,
            triples: self
                .groups
                .iter()
                .map(|g| {
                    Ok([
                        back(g.third_nodes[0])?,
                        back(g.third_nodes[1])?,
                        back(g.third_nodes[2])?,
                    ])
                })
                .collect::<Result<_>>()?,
        })
    }
}

pub fn ground_truth_json(file: &GroundTruthFile) -> Result<String> {
    Ok(serde_json::to_string_pretty(file)?)
}

pub fn parse_ground_truth(json: &str) -> Result<GroundTruthFile> {
    Ok(serde_json::from_str(json)?)
}
