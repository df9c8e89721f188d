//! Penalised per-pair fitting.
//!
//! Each pair solves
//!
//! ```text
//! maximise  V(alpha, Theta) - lambda * |Theta|_1
//! ```
//!
//! by cyclic coordinate-wise Newton steps on the diagonal quadratic surrogate
//! of `V`. A slope update is `theta <- soft(theta + g/G, lambda/G)` and an
//! intercept update is `alpha <- alpha + g/G`, where `g` is the gradient and
//! `G` the diagonal information along that coordinate. A step that lowers
//! the penalised objective is halved until it does not. Each sweep also
//! takes one joint Newton step on the three intercepts.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::design::{CoefficientBlock, DyadDesign};
use crate::error::{Error, Result};
use crate::network::{pairs, NetworkSeries};
use crate::parallel::map_collect;

const MAX_HALVINGS: usize = 30;
const INTERCEPT_ONLY_ITERATIONS: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub lambda: f64,
    pub max_sweeps: usize,
    /// Stop when the relative gain of the objective over a sweep drops below
    /// this (and the KKT check passes).
    pub objective_tolerance: f64,
    /// Bound on `|alpha|` and `|theta|`.
    pub coefficient_cap: f64,
    /// Coordinates with smaller information are skipped for the sweep.
    pub min_curvature: f64,
    /// Largest KKT violation accepted at convergence, per observation.
    pub kkt_tolerance: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            max_sweeps: 500,
            objective_tolerance: 1e-7,
            coefficient_cap: 30.0,
            min_curvature: 1e-10,
            kkt_tolerance: 1e-4,
        }
    }
}

impl FitConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.objective_tolerance > 0.0 && self.kkt_tolerance > 0.0 && self.min_curvature > 0.0)
        {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if !(self.coefficient_cap > 0.0) {
            return Err(Error::Config("coefficient cap must be positive".into()));
        }
        if self.max_sweeps == 0 {
            return Err(Error::Config("max_sweeps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Result of fitting one pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairFit {
    pub pair: (usize, usize),
    pub lambda: f64,
    pub coef: CoefficientBlock,
    /// `(class, column)` of every nonzero slope.
    pub active_set: Vec<(usize, usize)>,
    /// Penalised objective at the returned coefficients.
    pub objective: f64,
    pub loglik: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Some coefficient sits at the magnitude cap.
    pub cap_hit: bool,
    /// Largest KKT violation over all coordinates at the returned point.
    pub kkt_violation: f64,
}

impl PairFit {
    pub fn active_len(&self) -> usize {
        self.active_set.len()
    }
}

pub fn soft_threshold(w: f64, tau: f64) -> f64 {
    debug_assert!(tau >= 0.0);
    w.signum() * (w.abs() - tau).max(0.0)
}

/// Linear predictors and log-normalisers of every row, updated in place as
/// coordinates move.
struct PairState<'a> {
    design: &'a DyadDesign,
    stats: Vec<[f64; 3]>,
    eta: Vec<[f64; 3]>,
    lognorm: Vec<f64>,
    /// Class means `mu_r` of every row.
    means: Vec<[f64; 3]>,
    scratch: Vec<f64>,
    all_rows: Vec<u32>,
}

#[inline]
fn lse(e: &[f64; 3]) -> f64 {
    let w = [0.0, e[0], e[1], e[0] + e[1] + e[2]];
    let m = w[1].max(w[2]).max(w[3]).max(0.0);
    m + ((w[0] - m).exp() + (w[1] - m).exp() + (w[2] - m).exp() + (w[3] - m).exp()).ln()
}

#[inline]
fn means(e: &[f64; 3], c: f64) -> [f64; 3] {
    let both = (e[0] + e[1] + e[2] - c).exp();
    [(e[0] - c).exp() + both, (e[1] - c).exp() + both, both]
}

impl<'a> PairState<'a> {
    fn new(design: &'a DyadDesign, coef: &CoefficientBlock) -> Result<Self> {
        let eta = crate::likelihood::linear_predictors(design, coef)?;
        let lognorm: Vec<f64> = eta.iter().map(lse).collect();
        Ok(Self {
            design,
            stats: design.responses().iter().map(|y| y.statistics()).collect(),
            means: eta
                .iter()
                .zip(&lognorm)
                .map(|(e, &c)| means(e, c))
                .collect(),
            eta,
            lognorm,
            scratch: Vec::new(),
            all_rows: (0..design.rows() as u32).collect(),
        })
    }

    fn refresh(&mut self, coef: &CoefficientBlock) -> Result<()> {
        self.eta = crate::likelihood::linear_predictors(self.design, coef)?;
        self.lognorm = self.eta.iter().map(lse).collect();
        self.means = self
            .eta
            .iter()
            .zip(&self.lognorm)
            .map(|(e, &c)| means(e, c))
            .collect();
        Ok(())
    }

    fn rows(&self, k: Option<usize>) -> &[u32] {
        match k {
            Some(k) => self.design.support(k),
            None => &self.all_rows,
        }
    }

    fn loglik(&self) -> f64 {
        self.eta
            .iter()
            .zip(&self.stats)
            .zip(&self.lognorm)
            .map(|((e, s), c)| e[0] * s[0] + e[1] * s[1] + e[2] * s[2] - c)
            .sum()
    }

    fn gradient(&self, class: usize, k: Option<usize>) -> (f64, f64) {
        let mut g = 0.0;
        let mut h = 0.0;
        for &t in self.rows(k) {
            let t = t as usize;
            let mu = self.means[t][class];
            g += self.stats[t][class] - mu;
            h += mu * (1.0 - mu);
        }
        (g, h)
    }

    /// Log-likelihood change from moving coordinate `(class, k)` by `delta`;
    /// stages the new normalisers in `scratch`.
    fn trial(&mut self, class: usize, k: Option<usize>, delta: f64) -> f64 {
        let mut scratch = std::mem::take(&mut self.scratch);
        scratch.clear();
        let mut gain = 0.0;
        for &t in self.rows(k) {
            let t = t as usize;
            let mut e = self.eta[t];
            e[class] += delta;
            let c = lse(&e);
            gain += self.stats[t][class] * delta - (c - self.lognorm[t]);
            scratch.push(c);
        }
        self.scratch = scratch;
        gain
    }

    /// Gradient and information matrix of the three intercepts.
    fn intercept_block(&self) -> ([f64; 3], Matrix3<f64>) {
        let mut g = [0.0; 3];
        let mut h = Matrix3::zeros();
        for t in 0..self.eta.len() {
            let mu = self.means[t];
            let both = mu[2];
            for a in 0..3 {
                g[a] += self.stats[t][a] - mu[a];
                for b in 0..3 {
                    // Every pairwise product of the statistics is the BB indicator.
                    let joint = if a == b { mu[a] } else { both };
                    h[(a, b)] += joint - mu[a] * mu[b];
                }
            }
        }
        (g, h)
    }

    fn trial_intercepts(&mut self, delta: &[f64; 3]) -> f64 {
        let mut scratch = std::mem::take(&mut self.scratch);
        scratch.clear();
        let mut gain = 0.0;
        for t in 0..self.eta.len() {
            let e = self.eta[t];
            let moved = [e[0] + delta[0], e[1] + delta[1], e[2] + delta[2]];
            let c = lse(&moved);
            let s = self.stats[t];
            gain += s[0] * delta[0] + s[1] * delta[1] + s[2] * delta[2] - (c - self.lognorm[t]);
            scratch.push(c);
        }
        self.scratch = scratch;
        gain
    }

    fn commit_intercepts(&mut self, delta: &[f64; 3]) {
        for t in 0..self.eta.len() {
            for r in 0..3 {
                self.eta[t][r] += delta[r];
            }
            self.lognorm[t] = self.scratch[t];
            self.means[t] = means(&self.eta[t], self.lognorm[t]);
        }
    }

    fn commit(&mut self, class: usize, k: Option<usize>, delta: f64) {
        let rows = match k {
            Some(k) => self.design.support(k),
            None => &self.all_rows[..],
        };
        for (idx, &t) in rows.iter().enumerate() {
            let t = t as usize;
            self.eta[t][class] += delta;
            self.lognorm[t] = self.scratch[idx];
            self.means[t] = means(&self.eta[t], self.lognorm[t]);
        }
    }
}

/// Joint Newton step on the unpenalised intercepts. Coordinate steps alone
/// crawl along the ridge that appears when an outcome is never observed.
fn update_intercepts(state: &mut PairState<'_>, intercepts: &mut [f64; 3], config: &FitConfig) {
    let (g, h) = state.intercept_block();
    let Some(chol) = h.cholesky() else {
        return;
    };
    let step = chol.solve(&Vector3::from(g));
    let cap = config.coefficient_cap;
    let mut delta = [0.0; 3];
    for r in 0..3 {
        delta[r] = (intercepts[r] + step[r]).clamp(-cap, cap) - intercepts[r];
    }
    for _ in 0..MAX_HALVINGS {
        if delta.iter().all(|&d| d == 0.0) || delta.iter().any(|d| !d.is_finite()) {
            return;
        }
        if state.trial_intercepts(&delta) >= 0.0 {
            state.commit_intercepts(&delta);
            for r in 0..3 {
                intercepts[r] += delta[r];
            }
            return;
        }
        delta = delta.map(|d| d * 0.5);
    }
}

/// One coordinate update. Returns the gradient seen before the step.
fn update_coordinate(
    state: &mut PairState<'_>,
    value: &mut f64,
    class: usize,
    k: Option<usize>,
    config: &FitConfig,
) -> f64 {
    let (g, h) = state.gradient(class, k);
    if h < config.min_curvature {
        return g;
    }
    let current = *value;
    let proposal = match k {
        Some(_) => soft_threshold(current + g / h, config.lambda / h),
        None => current + g / h,
    }
    .clamp(-config.coefficient_cap, config.coefficient_cap);
    let mut delta = proposal - current;
    for _ in 0..MAX_HALVINGS {
        if delta == 0.0 || !delta.is_finite() {
            break;
        }
        let penalty = match k {
            Some(_) => config.lambda * ((current + delta).abs() - current.abs()),
            None => 0.0,
        };
        let gain = state.trial(class, k, delta) - penalty;
        if gain >= 0.0 {
            state.commit(class, k, delta);
            *value = current + delta;
            break;
        }
        delta *= 0.5;
    }
    g
}

fn at_cap(value: f64, cap: f64) -> bool {
    value.abs() >= cap
}

/// Violation of the optimality conditions at one coordinate.
fn kkt_residual(value: f64, g: f64, lambda: f64, cap: f64) -> f64 {
    let residual = if value == 0.0 {
        (g.abs() - lambda).max(0.0)
    } else {
        g - lambda * value.signum()
    };
    // Against the box the gradient may keep pushing outward.
    if at_cap(value, cap) && residual * value.signum() >= 0.0 {
        return 0.0;
    }
    residual.abs()
}

fn intercept_kkt_residual(value: f64, g: f64, cap: f64) -> f64 {
    kkt_residual(value, g, 0.0, cap)
}

/// Largest KKT violation over intercepts and slopes.
fn kkt_violation(state: &PairState<'_>, coef: &CoefficientBlock, config: &FitConfig) -> f64 {
    let cap = config.coefficient_cap;
    let mut worst: f64 = 0.0;
    for r in 0..3 {
        let (g, _) = state.gradient(r, None);
        worst = worst.max(intercept_kkt_residual(coef.intercepts[r], g, cap));
        for k in 0..coef.width() {
            let (g, _) = state.gradient(r, Some(k));
            worst = worst.max(kkt_residual(coef.theta[r][k], g, config.lambda, cap));
        }
    }
    worst
}

/// Optimises the intercepts with all slopes held fixed.
fn fit_intercepts(state: &mut PairState<'_>, coef: &mut CoefficientBlock, config: &FitConfig) {
    let tol = 1e-10 * state.design.rows() as f64;
    for _ in 0..INTERCEPT_ONLY_ITERATIONS {
        let before = coef.intercepts;
        update_intercepts(state, &mut coef.intercepts, config);
        let mut worst: f64 = 0.0;
        for r in 0..3 {
            let at = coef.intercepts[r];
            let g = update_coordinate(state, &mut coef.intercepts[r], r, None, config);
            worst = worst.max(intercept_kkt_residual(at, g, config.coefficient_cap));
        }
        if worst <= tol || coef.intercepts == before {
            break;
        }
    }
}

fn penalized(loglik: f64, coef: &CoefficientBlock, lambda: f64) -> f64 {
    if lambda == 0.0 {
        loglik
    } else {
        loglik - lambda * coef.l1_norm()
    }
}

/// Fits one pair. Without a warm start the slopes start at zero and the
/// intercepts at the intercept-only optimum.
pub fn fit_pair(
    design: &DyadDesign,
    config: &FitConfig,
    warm_start: Option<&CoefficientBlock>,
) -> Result<PairFit> {
    config.validate()?;
    let (pi, pj) = design.pair();
    if design.rows() == 0 {
        return Err(Error::TooFewSlices { needed: 2, got: 1 });
    }
    let width = design.width();
    let mut coef = match warm_start {
        Some(w) => {
            w.check_width(width)?;
            let mut c = w.clone();
            let cap = config.coefficient_cap;
            c.intercepts = c.intercepts.map(|v| v.clamp(-cap, cap));
            for row in &mut c.theta {
                row.iter_mut().for_each(|v| *v = v.clamp(-cap, cap));
            }
            c
        }
        None => CoefficientBlock::zeros(width),
    };
    let mut state = PairState::new(design, &coef)?;
    if warm_start.is_none() {
        fit_intercepts(&mut state, &mut coef, config);
    }
    let mut objective = penalized(state.loglik(), &coef, config.lambda);
    if !objective.is_finite() {
        return Err(Error::NonFinite(pi, pj));
    }

    let tol_kkt = config.kkt_tolerance * design.rows() as f64;
    let mut sweeps = 0;
    let mut converged = false;
    let mut violation = f64::INFINITY;
    while sweeps < config.max_sweeps {
        sweeps += 1;
        update_intercepts(&mut state, &mut coef.intercepts, config);
        for r in 0..3 {
            update_coordinate(&mut state, &mut coef.intercepts[r], r, None, config);
        }
        for r in 0..3 {
            for k in 0..width {
                update_coordinate(&mut state, &mut coef.theta[r][k], r, Some(k), config);
            }
        }
        state.refresh(&coef)?;
        let next = penalized(state.loglik(), &coef, config.lambda);
        if !next.is_finite() {
            return Err(Error::NonFinite(pi, pj));
        }
        let gain = (next - objective) / objective.abs().max(1.0);
        objective = next;
        if gain < config.objective_tolerance {
            violation = kkt_violation(&state, &coef, config);
            if violation <= tol_kkt {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        violation = kkt_violation(&state, &coef, config);
        log::debug!(
            "pair ({pi}, {pj}) hit max_sweeps at lambda {} with KKT violation {violation:.3e}",
            config.lambda
        );
    }

    let cap = config.coefficient_cap;
    let cap_hit = coef
        .intercepts
        .iter()
        .chain(coef.theta.iter().flatten())
        .any(|&v| at_cap(v, cap));
    let loglik = state.loglik();
    Ok(PairFit {
        pair: design.pair(),
        lambda: config.lambda,
        active_set: coef.nonzero(),
        objective: penalized(loglik, &coef, config.lambda),
        loglik,
        coef,
        sweeps,
        converged,
        cap_hit,
        kkt_violation: violation,
    })
}

/// Intercept-only optimum of one pair.
pub fn null_fit(design: &DyadDesign, config: &FitConfig) -> Result<CoefficientBlock> {
    let mut coef = CoefficientBlock::zeros(design.width());
    let mut state = PairState::new(design, &coef)?;
    fit_intercepts(&mut state, &mut coef, config);
    Ok(coef)
}

/// Smallest penalty at which every slope of this pair stays at zero:
/// the largest slope gradient at the intercept-only optimum.
pub fn pair_lambda_max(design: &DyadDesign, config: &FitConfig) -> Result<f64> {
    let coef = null_fit(design, config)?;
    let state = PairState::new(design, &coef)?;
    let mut worst: f64 = 0.0;
    for r in 0..3 {
        for k in 0..design.width() {
            worst = worst.max(state.gradient(r, Some(k)).0.abs());
        }
    }
    Ok(worst)
}

/// Largest [`pair_lambda_max`] over all pairs.
pub fn global_lambda_max(series: &NetworkSeries, config: &FitConfig) -> Result<f64> {
    let all: Vec<(usize, usize)> = pairs(series.n()).collect();
    let values = map_collect(&all, |&(i, j)| {
        DyadDesign::build(series, i, j).and_then(|d| pair_lambda_max(&d, config))
    });
    values
        .into_iter()
        .try_fold(0.0f64, |acc, v| v.map(|v| acc.max(v)))
}

/// Fits every pair `i < j` at one penalty. Failures are reported per pair.
pub fn fit_all_pairs(series: &NetworkSeries, config: &FitConfig) -> Vec<Result<PairFit>> {
    fit_all_pairs_warm(series, config, None)
}

/// As [`fit_all_pairs`], warm-starting pair `p` (lexicographic order) from
/// `warm[p]`.
pub fn fit_all_pairs_warm(
    series: &NetworkSeries,
    config: &FitConfig,
    warm: Option<&[CoefficientBlock]>,
) -> Vec<Result<PairFit>> {
    let all: Vec<(usize, (usize, usize))> = pairs(series.n()).enumerate().collect();
    map_collect(&all, |&(p, (i, j))| {
        let design = DyadDesign::build(series, i, j)?;
        fit_pair(&design, config, warm.and_then(|w| w.get(p)))
    })
}
