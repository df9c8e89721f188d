//! Sparse autologistic models for sequences of directed binary networks.
//!
//! Each unordered pair of nodes `i < j` is modelled as a four-outcome
//! multinomial whose natural parameters depend linearly on the previous
//! network slice: persistence, inter-temporal reciprocity, diversification
//! through third parties and disintermediation (lagged two-paths). Pairs are
//! conditionally independent given the past, so the penalised likelihood
//! splits into one L1-regularised regression per pair.
//!
//! The pipeline is:
//!
//! 1. [`network`] / [`io`]: load a [`NetworkSeries`].
//! 2. [`design`]: lagged covariates per pair.
//! 3. [`optimizer`]: coordinate-wise penalised Newton fits.
//! 4. [`selection`]: lambda path and BIC.
//! 5. [`analysis`]: which effects could matter, per pair and overall.
//! 6. [`prediction`]: one-step-ahead link probabilities, ROC and AUC.
//!
//! [`simulate`] draws synthetic series with known coefficients.

pub mod analysis;
pub mod design;
pub mod error;
pub mod io;
pub mod likelihood;
pub mod network;
pub mod optimizer;
mod parallel;
pub mod prediction;
pub mod report;
pub mod selection;
pub mod simulate;

pub use design::{CoefficientBlock, DyadDesign, EffectCategory, EffectFamily, EffectKind};
pub use error::{Error, Result};
pub use network::{DyadOutcome, NetworkSeries};
pub use optimizer::{fit_all_pairs, fit_pair, FitConfig, PairFit};
pub use prediction::{auc, predict_next, roc_curve, PredictionSet, RocCurve};
pub use selection::{bic_path, LambdaGrid, PathResult};
