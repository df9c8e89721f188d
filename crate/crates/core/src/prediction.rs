//! One-step-ahead link prediction and its evaluation.

use serde::{Deserialize, Serialize};

use crate::design::{covariate_row, CoefficientBlock};
use crate::error::{Error, Result};
use crate::likelihood::NaturalParams;
use crate::network::{pairs, NetworkSeries};
use crate::optimizer::{fit_all_pairs_warm, FitConfig};
use crate::selection::{bic_path, LambdaGrid};

/// Directed link probabilities for one future slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    /// Zero-based index of the predicted slice.
    pub horizon: usize,
    pub n: usize,
    /// Row-major `n x n`; the diagonal is unused and zero.
    pub probs: Vec<f64>,
    pub truth: Option<Vec<bool>>,
}

impl PredictionSet {
    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.n + j]
    }

    /// `((i, j), p)` for every ordered pair `i != j`, row-major.
    pub fn directed(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| {
            (0..n)
                .filter(move |&j| j != i)
                .map(move |j| ((i, j), self.prob(i, j)))
        })
    }

    /// Attaches slice `t` of `series` as the truth being predicted.
    pub fn with_truth(mut self, series: &NetworkSeries, t: usize) -> Result<Self> {
        if series.n() != self.n || t >= series.len() {
            return Err(Error::DimensionMismatch(
                "truth slice does not match prediction".into(),
            ));
        }
        let n = self.n;
        self.truth = Some(
            (0..n * n)
                .map(|idx| series.get(t, idx / n, idx % n))
                .collect(),
        );
        Ok(self)
    }

    /// Scores and labels over the directed entries; `None` without truth.
    pub fn scored(&self) -> Option<(Vec<f64>, Vec<bool>)> {
        let truth = self.truth.as_ref()?;
        let (scores, labels) = self
            .directed()
            .map(|((i, j), p)| (p, truth[i * self.n + j]))
            .unzip();
        Some((scores, labels))
    }

    pub fn roc(&self) -> Option<Result<RocCurve>> {
        self.scored().map(|(s, l)| roc_curve(&s, &l))
    }
}

/// Predicts slice `t + 1` from slice `t` with one coefficient block per pair
/// (lexicographic order).
pub fn predict_from_slice(
    series: &NetworkSeries,
    t: usize,
    blocks: &[CoefficientBlock],
) -> Result<PredictionSet> {
    let n = series.n();
    if t >= series.len() {
        return Err(Error::DimensionMismatch(format!(
            "slice {t} beyond series of {}",
            series.len()
        )));
    }
    let mut probs = vec![0.0; n * n];
    for (p, (i, j)) in pairs(n).enumerate() {
        let coef = blocks.get(p).ok_or(Error::MissingFit(i, j))?;
        let x = covariate_row(series, t, i, j);
        coef.check_width(x.len())?;
        let mut eta = coef.intercepts;
        for (r, e) in eta.iter_mut().enumerate() {
            *e += x
                .iter()
                .zip(&coef.theta[r])
                .filter(|(&v, _)| v == 1)
                .map(|(_, c)| c)
                .sum::<f64>();
        }
        let dist = NaturalParams(eta).outcome_probs();
        probs[i * n + j] = dist.forward();
        probs[j * n + i] = dist.backward();
    }
    Ok(PredictionSet {
        horizon: t + 1,
        n,
        probs,
        truth: None,
    })
}

/// Predicts the slice after the last one.
pub fn predict_next(series: &NetworkSeries, blocks: &[CoefficientBlock]) -> Result<PredictionSet> {
    predict_from_slice(series, series.len() - 1, blocks)
}

/// ROC curve with a threshold at every distinct score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(false positive rate, true positive rate)` from `(0,0)` to `(1,1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

fn class_counts(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Parse("scores must be finite".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok((pos, neg))
}

pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve> {
    let (pos, neg) = class_counts(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut idx = 0;
    while idx < order.len() {
        let s = scores[order[idx]];
        while idx < order.len() && scores[order[idx]] == s {
            if labels[order[idx]] {
                tp += 1;
            } else {
                fp += 1;
            }
            idx += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    let auc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum();
    Ok(RocCurve { points, auc })
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half (Mann-Whitney with mid-ranks).
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = class_counts(scores, labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // Ranks start+1..=end share their mean.
        let mid = (start + 1 + end) as f64 / 2.0;
        let positives = order[start..end].iter().filter(|&&o| labels[o]).count();
        rank_sum += mid * positives as f64;
        start = end;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LambdaChoice {
    Fixed(f64),
    /// Selected by BIC on the first training prefix, then held fixed.
    Grid(LambdaGrid),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OriginResult {
    /// Number of slices used for fitting.
    pub train_len: usize,
    pub predictions: PredictionSet,
    /// Missing when the held-out slice is all zeros or all ones.
    pub roc: Option<RocCurve>,
    /// Coefficients fitted on this prefix.
    pub blocks: Vec<CoefficientBlock>,
}

impl OriginResult {
    pub fn auc(&self) -> Option<f64> {
        self.roc.as_ref().map(|r| r.auc)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RollingReport {
    pub lambda: f64,
    pub origins: Vec<OriginResult>,
}

fn score(pred: PredictionSet, series: &NetworkSeries) -> Result<(PredictionSet, Option<RocCurve>)> {
    let horizon = pred.horizon;
    let pred = pred.with_truth(series, horizon)?;
    let roc = match pred.roc().expect("truth attached") {
        Ok(r) => Some(r),
        Err(Error::SingleClass) => {
            log::warn!(
                "held-out slice {} has a single class; AUC undefined",
                horizon + 1
            );
            None
        }
        Err(e) => return Err(e),
    };
    Ok((pred, roc))
}

/// Scores fixed coefficients on the slice following a prefix of
/// `train_len` slices.
pub fn score_blocks(
    series: &NetworkSeries,
    train_len: usize,
    blocks: &[CoefficientBlock],
) -> Result<(PredictionSet, Option<RocCurve>)> {
    if train_len == 0 || train_len >= series.len() {
        return Err(Error::Config(format!(
            "no slice follows a prefix of {train_len}"
        )));
    }
    score(predict_from_slice(series, train_len - 1, blocks)?, series)
}

/// Rolling-origin evaluation over the last `holdout` slices: for each
/// origin, fit on the prefix, predict the next slice and score it.
pub fn rolling_evaluation(
    series: &NetworkSeries,
    choice: &LambdaChoice,
    config: &FitConfig,
    holdout: usize,
) -> Result<RollingReport> {
    let slices = series.len();
    if holdout == 0 {
        return Err(Error::Config("holdout must be at least 1".into()));
    }
    if slices < holdout + 2 {
        return Err(Error::TooFewSlices {
            needed: holdout + 2,
            got: slices,
        });
    }
    let first = slices - holdout;
    let first_prefix = series.prefix(first)?;
    let (lambda, mut warm) = match choice {
        LambdaChoice::Fixed(l) => (*l, None),
        LambdaChoice::Grid(grid) => {
            let path = bic_path(&first_prefix, grid, config)?;
            let p = path.selected_point();
            (p.lambda, Some(p.blocks()))
        }
    };
    let cfg = FitConfig {
        lambda,
        ..config.clone()
    };
    let mut origins = Vec::with_capacity(holdout);
    for train_len in first..slices {
        let prefix = series.prefix(train_len)?;
        let blocks = match (train_len == first, warm.take()) {
            (true, Some(b)) => b,
            (_, w) => fit_all_pairs_warm(&prefix, &cfg, w.as_deref())
                .into_iter()
                .map(|f| f.map(|f| f.coef))
                .collect::<Result<Vec<_>>>()?,
        };
        let (predictions, roc) = score_blocks(series, train_len, &blocks)?;
        warm = Some(blocks.clone());
        origins.push(OriginResult {
            train_len,
            predictions,
            roc,
            blocks,
        });
    }
    Ok(RollingReport { lambda, origins })
}
