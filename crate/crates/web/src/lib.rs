//! Browser bindings: simulate a series, fit a BIC path on it and compare
//! one-step-ahead ROC curves of the fitted and true coefficients.
//!
//! Every call returns a JSON string; errors surface as JS exceptions.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use sparse_autolog::prediction::{rolling_evaluation, score_blocks, LambdaChoice};
use sparse_autolog::selection::{bic_path, lambda_max, LambdaGrid};
use sparse_autolog::simulate::{simulate, GroundTruth, SimDesign};
use sparse_autolog::{CoefficientBlock, FitConfig, NetworkSeries};

#[derive(Serialize)]
struct SeriesView {
    n: usize,
    slices: usize,
    links: Vec<usize>,
    max_links: usize,
    /// Row-major adjacency of every slice.
    adjacency: Vec<Vec<u8>>,
}

#[derive(Serialize)]
struct PathView {
    lambda: Vec<f64>,
    bic: Vec<Option<f64>>,
    active: Vec<usize>,
    rank: Vec<usize>,
    selected: usize,
    lambda_max: f64,
}

#[derive(Serialize)]
struct OriginView {
    slice: usize,
    fitted_auc: Option<f64>,
    truth_auc: Option<f64>,
    fitted_roc: Vec<(f64, f64)>,
    truth_roc: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct EvaluationView {
    lambda: f64,
    origins: Vec<OriginView>,
}

fn to_js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn json<T: Serialize>(v: &T) -> Result<String, JsError> {
    serde_json::to_string(v).map_err(to_js)
}

#[wasm_bindgen]
pub struct Session {
    series: NetworkSeries,
    truth: GroundTruth,
    grid: Option<LambdaGrid>,
    selected: Option<Vec<CoefficientBlock>>,
}

#[wasm_bindgen]
impl Session {
    /// Simulates `slices` networks on `n` nodes.
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, slices: usize, seed: u64) -> Result<Session, JsError> {
        let (series, truth) = simulate(&SimDesign::new(n, slices, seed)).map_err(to_js)?;
        Ok(Session {
            series,
            truth,
            grid: None,
            selected: None,
        })
    }

    pub fn series(&self) -> Result<String, JsError> {
        let s = &self.series;
        let n = s.n();
        json(&SeriesView {
            n,
            slices: s.len(),
            links: (0..s.len()).map(|t| s.links(t)).collect(),
            max_links: s.max_links(),
            adjacency: (0..s.len())
                .map(|t| {
                    (0..n * n)
                        .map(|c| u8::from(s.get(t, c / n, c % n)))
                        .collect()
                })
                .collect(),
        })
    }

    /// Fits `count` log-spaced penalties from `lambda_max / 20` up to
    /// `lambda_max` and keeps the BIC choice.
    pub fn fit_path(&mut self, count: usize) -> Result<String, JsError> {
        let cfg = FitConfig::default();
        let top = lambda_max(&self.series, &cfg).map_err(to_js)?;
        let grid = LambdaGrid::log_spaced(top / 20.0, top, count.max(2)).map_err(to_js)?;
        let path = bic_path(&self.series, &grid, &cfg).map_err(to_js)?;
        self.selected = Some(path.selected_point().blocks());
        self.grid = Some(grid);
        json(&PathView {
            lambda: path.points.iter().map(|p| p.lambda).collect(),
            bic: path.points.iter().map(|p| p.bic).collect(),
            active: path.points.iter().map(|p| p.active_coefficients).collect(),
            rank: path.points.iter().map(|p| p.total_rank).collect(),
            selected: path.selected,
            lambda_max: top,
        })
    }

    /// Rolling evaluation over the last `holdout` slices, reusing the grid
    /// of the last `fit_path` call.
    pub fn evaluate(&self, holdout: usize) -> Result<String, JsError> {
        let grid = self
            .grid
            .clone()
            .ok_or_else(|| JsError::new("fit a path before evaluating"))?;
        let report = rolling_evaluation(
            &self.series,
            &LambdaChoice::Grid(grid),
            &FitConfig::default(),
            holdout,
        )
        .map_err(to_js)?;
        let origins = report
            .origins
            .iter()
            .map(|o| {
                let (_, truth) =
                    score_blocks(&self.series, o.train_len, &self.truth.blocks).map_err(to_js)?;
                Ok(OriginView {
                    slice: o.train_len + 1,
                    fitted_auc: o.auc(),
                    truth_auc: truth.as_ref().map(|r| r.auc),
                    fitted_roc: o.roc.as_ref().map(|r| r.points.clone()).unwrap_or_default(),
                    truth_roc: truth.map(|r| r.points).unwrap_or_default(),
                })
            })
            .collect::<Result<Vec<_>, JsError>>()?;
        json(&EvaluationView {
            lambda: report.lambda,
            origins,
        })
    }

    /// Nonzero slope count per pair at the selected penalty, against the
    /// true count.
    pub fn sparsity(&self) -> Result<String, JsError> {
        let blocks = self
            .selected
            .as_ref()
            .ok_or_else(|| JsError::new("fit a path first"))?;
        let fitted: Vec<usize> = blocks.iter().map(|b| b.nonzero().len()).collect();
        let truth: Vec<usize> = self
            .truth
            .blocks
            .iter()
            .map(|b| b.nonzero().len())
            .collect();
        json(&serde_json::json!({ "fitted": fitted, "truth": truth }))
    }
}
