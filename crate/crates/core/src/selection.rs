//! Penalty selection along a lambda grid.
//!
//! For each grid value every pair is fitted, warm-starting from the next
//! larger lambda, and the path is scored by
//!
//! ```text
//! BIC(lambda) = sum_{i<j} [ 2 V_ij - K_ij(lambda) log(T - 1) ]
//! ```
//!
//! where `K_ij` is the numeric rank of the design columns that are active in
//! at least one class. The selected lambda maximises the BIC; ties go to the
//! larger lambda.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::design::{CoefficientBlock, DyadDesign};
use crate::error::{Error, Result};
use crate::likelihood::pair_loglik;
use crate::network::{pairs, NetworkSeries};
use crate::optimizer::{fit_pair, pair_lambda_max, FitConfig, PairFit};
use crate::parallel::map_collect;

/// Strictly increasing positive penalties.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid(Vec<f64>);

impl LambdaGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidGrid(
                "values must be finite and positive".into(),
            ));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(
                "values must be strictly increasing".into(),
            ));
        }
        Ok(Self(values))
    }

    /// `count` log-spaced values from `lo` to `hi` inclusive.
    pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::EmptyGrid);
        }
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::InvalidGrid(format!("bad range [{lo}, {hi}]")));
        }
        if count == 1 {
            return Self::new(vec![lo]);
        }
        let (a, b) = (lo.ln(), hi.ln());
        let step = (b - a) / (count - 1) as f64;
        let mut values: Vec<f64> = (0..count).map(|s| (a + step * s as f64).exp()).collect();
        values[0] = lo;
        values[count - 1] = hi;
        Self::new(values)
    }

    /// `count` evenly spaced values from `lo` to `hi` inclusive.
    pub fn linear(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::EmptyGrid);
        }
        if count == 1 {
            return Self::new(vec![lo]);
        }
        let step = (hi - lo) / (count - 1) as f64;
        Self::new((0..count).map(|s| lo + step * s as f64).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Numeric rank with the relative singular value cutoff
/// `max(rows, cols) * eps * sigma_max`.
pub fn numeric_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.singular_values();
    let cutoff = rank_cutoff(m, sv.max());
    sv.iter().filter(|&&s| s > cutoff).count()
}

fn rank_cutoff(m: &DMatrix<f64>, sigma_max: f64) -> f64 {
    m.nrows().max(m.ncols()) as f64 * f64::EPSILON * sigma_max
}

/// Orthonormal basis of the column space of `m`, one basis vector per column
/// of the result.
pub fn column_space_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let cutoff = rank_cutoff(m, svd.singular_values.max());
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&c| svd.singular_values[c] > cutoff)
        .collect();
    u.select_columns(keep.iter())
}

/// Design columns active in at least one class, as a dense submatrix.
pub fn active_submatrix(design: &DyadDesign, coef: &CoefficientBlock) -> DMatrix<f64> {
    design.submatrix(&coef.active_columns())
}

/// Degrees of freedom of one pair's fit.
pub fn degrees_of_freedom(design: &DyadDesign, coef: &CoefficientBlock) -> usize {
    if coef.active_columns().is_empty() {
        return 0;
    }
    numeric_rank(&active_submatrix(design, coef))
}

/// `2 V - K log(T - 1)` for one pair, with `V` recomputed from the
/// coefficients.
fn pair_bic_term(design: &DyadDesign, coef: &CoefficientBlock) -> Result<(f64, usize)> {
    let loglik = pair_loglik(design, coef)?;
    let rank = degrees_of_freedom(design, coef);
    let log_obs = (design.rows() as f64).ln();
    Ok((2.0 * loglik - rank as f64 * log_obs, rank))
}

/// BIC of a full set of coefficient blocks (pairs in lexicographic order).
///
/// Bit-identical to the value stored by [`bic_path`] for the same blocks.
pub fn bic_from_blocks(series: &NetworkSeries, blocks: &[CoefficientBlock]) -> Result<f64> {
    let all: Vec<(usize, usize)> = pairs(series.n()).collect();
    if blocks.len() != all.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficient blocks for {} pairs",
            blocks.len(),
            all.len()
        )));
    }
    let indexed: Vec<(usize, (usize, usize))> = all.into_iter().enumerate().collect();
    let terms = map_collect(&indexed, |&(p, (i, j))| {
        let design = DyadDesign::build(series, i, j)?;
        pair_bic_term(&design, &blocks[p]).map(|(b, _)| b)
    });
    let mut total = 0.0;
    for term in terms {
        total += term?;
    }
    Ok(total)
}

/// Fits and scores at one grid value.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathPoint {
    pub lambda: f64,
    /// One fit per pair in lexicographic order; empty when the point is
    /// invalid.
    pub fits: Vec<PairFit>,
    pub ranks: Vec<usize>,
    pub bic: Option<f64>,
    pub loglik: f64,
    pub active_coefficients: usize,
    pub total_rank: usize,
    pub failures: Vec<String>,
}

impl PathPoint {
    pub fn is_valid(&self) -> bool {
        self.bic.is_some()
    }

    pub fn blocks(&self) -> Vec<CoefficientBlock> {
        self.fits.iter().map(|f| f.coef.clone()).collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PathResult {
    /// Points in ascending lambda order.
    pub points: Vec<PathPoint>,
    /// Index into `points` of the BIC maximiser.
    pub selected: usize,
}

impl PathResult {
    pub fn selected_point(&self) -> &PathPoint {
        &self.points[self.selected]
    }

    pub fn selected_lambda(&self) -> f64 {
        self.selected_point().lambda
    }
}

type PairPath = Vec<(std::result::Result<PairFit, String>, f64, usize)>;

/// Fits the whole grid from the largest penalty down and selects by BIC.
pub fn bic_path(
    series: &NetworkSeries,
    grid: &LambdaGrid,
    config: &FitConfig,
) -> Result<PathResult> {
    if series.len() < 2 {
        return Err(Error::TooFewSlices {
            needed: 2,
            got: series.len(),
        });
    }
    if series.len() < 3 {
        log::warn!(
            "only {} observation per pair; BIC penalty log(T-1) is zero",
            series.len() - 1
        );
    }
    let lambdas = grid.values();
    let all: Vec<(usize, usize)> = pairs(series.n()).collect();
    let per_pair: Vec<Result<PairPath>> = map_collect(&all, |&(i, j)| {
        let design = DyadDesign::build(series, i, j)?;
        let mut out: PairPath = Vec::with_capacity(lambdas.len());
        let mut warm: Option<CoefficientBlock> = None;
        for &lambda in lambdas.iter().rev() {
            let cfg = FitConfig {
                lambda,
                ..config.clone()
            };
            match fit_pair(&design, &cfg, warm.as_ref()) {
                Ok(fit) => {
                    let (term, rank) = pair_bic_term(&design, &fit.coef)?;
                    warm = Some(fit.coef.clone());
                    out.push((Ok(fit), term, rank));
                }
                Err(e) => out.push((
                    Err(format!("pair ({}, {}): {e}", i + 1, j + 1)),
                    f64::NAN,
                    0,
                )),
            }
        }
        out.reverse();
        Ok(out)
    });
    let per_pair = per_pair.into_iter().collect::<Result<Vec<_>>>()?;

    let mut points = Vec::with_capacity(lambdas.len());
    for (g, &lambda) in lambdas.iter().enumerate() {
        let mut fits = Vec::with_capacity(all.len());
        let mut ranks = Vec::with_capacity(all.len());
        let mut failures = Vec::new();
        let mut bic = 0.0;
        for path in &per_pair {
            let (fit, term, rank) = &path[g];
            match fit {
                Ok(fit) => {
                    bic += term;
                    fits.push(fit.clone());
                    ranks.push(*rank);
                }
                Err(msg) => failures.push(msg.clone()),
            }
        }
        let valid = failures.is_empty();
        if !valid {
            log::warn!(
                "lambda {lambda}: {} pair fits failed, point excluded",
                failures.len()
            );
            fits.clear();
            ranks.clear();
        }
        points.push(PathPoint {
            lambda,
            loglik: fits.iter().map(|f| f.loglik).sum(),
            active_coefficients: fits.iter().map(PairFit::active_len).sum(),
            total_rank: ranks.iter().sum(),
            fits,
            ranks,
            bic: valid.then_some(bic),
            failures,
        });
    }

    // Coordinate descent paths need not be nested, so this is only logged.
    for w in points.windows(2) {
        if w[0].is_valid() && w[1].is_valid() && w[1].active_coefficients > w[0].active_coefficients
        {
            log::info!(
                "active set grows from {} at lambda {} to {} at lambda {}",
                w[0].active_coefficients,
                w[0].lambda,
                w[1].active_coefficients,
                w[1].lambda
            );
        }
    }
    let bics: Vec<Option<f64>> = points.iter().map(|p| p.bic).collect();
    let selected = best_index(&bics).ok_or(Error::NoValidLambda)?;
    Ok(PathResult { points, selected })
}

/// Index of the largest value in an ascending-lambda sequence; ties go to
/// the larger lambda.
fn best_index(bics: &[Option<f64>]) -> Option<usize> {
    let mut selected: Option<(usize, f64)> = None;
    for (g, b) in bics.iter().enumerate() {
        if let Some(b) = *b {
            if selected.is_none_or(|(_, best)| b >= best) {
                selected = Some((g, b));
            }
        }
    }
    selected.map(|(g, _)| g)
}

/// Largest per-pair lambda_max, reported as a grid-design aid.
pub fn lambda_max(series: &NetworkSeries, config: &FitConfig) -> Result<f64> {
    let all: Vec<(usize, usize)> = pairs(series.n()).collect();
    map_collect(&all, |&(i, j)| {
        DyadDesign::build(series, i, j).and_then(|d| pair_lambda_max(&d, config))
    })
    .into_iter()
    .try_fold(0.0f64, |acc, v| v.map(|v| acc.max(v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Rank by Gaussian elimination with partial pivoting on exact 0/1
    /// input.
    fn elimination_rank(m: &DMatrix<f64>) -> usize {
        let mut a = m.clone();
        let (rows, cols) = a.shape();
        let mut rank = 0;
        for c in 0..cols {
            let pivot = (rank..rows).max_by(|&x, &y| a[(x, c)].abs().total_cmp(&a[(y, c)].abs()));
            let Some(p) = pivot else { break };
            if a[(p, c)].abs() < 1e-9 {
                continue;
            }
            a.swap_rows(p, rank);
            for r in rank + 1..rows {
                let f = a[(r, c)] / a[(rank, c)];
                for k in c..cols {
                    a[(r, k)] -= f * a[(rank, k)];
                }
            }
            rank += 1;
        }
        rank
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(LambdaGrid::new(vec![]), Err(Error::EmptyGrid)));
        assert!(LambdaGrid::new(vec![2.0, 1.0]).is_err());
        assert!(LambdaGrid::new(vec![1.0, 1.0]).is_err());
        assert!(LambdaGrid::new(vec![0.0, 1.0]).is_err());
        let g = LambdaGrid::log_spaced(3.5, 25.0, 29).unwrap();
        assert_eq!(g.len(), 29);
        assert_eq!(g.values()[0], 3.5);
        assert_eq!(g.values()[28], 25.0);
        let l = LambdaGrid::linear(2.5, 18.0, 24).unwrap();
        assert_eq!(l.len(), 24);
    }

    #[test]
    fn rank_examples() {
        let dup = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
        assert_eq!(numeric_rank(&dup), 1);
        assert_eq!(numeric_rank(&DMatrix::identity(3, 3)), 3);
        assert_eq!(numeric_rank(&DMatrix::zeros(4, 0)), 0);
        assert_eq!(numeric_rank(&DMatrix::zeros(4, 3)), 0);
    }

    #[test]
    fn rank_matches_elimination_on_wide_binary() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let rows = rng.random_range(1..8);
            let cols = rng.random_range(1..12);
            let m = DMatrix::from_fn(rows, cols, |_, _| f64::from(u8::from(rng.random_bool(0.5))));
            let r = numeric_rank(&m);
            assert_eq!(r, elimination_rank(&m));
            assert!(r <= rows.min(cols));
        }
    }

    #[test]
    fn basis_is_orthonormal_and_spans() {
        let m = DMatrix::from_row_slice(
            4,
            3,
            &[1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0],
        );
        let q = column_space_basis(&m);
        assert_eq!(q.ncols(), numeric_rank(&m));
        let gram = q.transpose() * &q;
        assert!((gram - DMatrix::identity(q.ncols(), q.ncols())).norm() < 1e-12);
        let residual = &m - &q * (q.transpose() * &m);
        assert!(residual.norm() < 1e-12);
    }

    #[test]
    fn active_submatrix_counts_each_column_once() {
        let s = NetworkSeries::from_edges(3, 4, [(0, 0, 1), (1, 1, 2), (2, 0, 2)]).unwrap();
        let d = DyadDesign::build(&s, 0, 1).unwrap();
        let mut c = CoefficientBlock::zeros(d.width());
        assert_eq!(active_submatrix(&d, &c).ncols(), 0);
        c.theta[0][3] = 1.0;
        assert_eq!(active_submatrix(&d, &c).ncols(), 1);
        c.theta[2][3] = -2.0;
        assert_eq!(active_submatrix(&d, &c).ncols(), 1);
    }

    fn random_series(n: usize, slices: usize, seed: u64) -> NetworkSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for t in 0..slices {
            for i in 0..n {
                for j in 0..n {
                    let p = if t > 0 && edges.contains(&(t - 1, i, j)) {
                        0.8
                    } else {
                        0.3
                    };
                    if i != j && rng.random_bool(p) {
                        edges.push((t, i, j));
                    }
                }
            }
        }
        NetworkSeries::from_edges(n, slices, edges).unwrap()
    }

    #[test]
    fn single_value_grid_selected() {
        let s = random_series(4, 30, 1);
        let grid = LambdaGrid::new(vec![3.0]).unwrap();
        let path = bic_path(&s, &grid, &FitConfig::default()).unwrap();
        assert_eq!(path.points.len(), 1);
        assert_eq!(path.selected_lambda(), 3.0);
    }

    #[test]
    fn ties_go_to_larger_lambda() {
        assert_eq!(
            best_index(&[Some(-3.0), Some(-1.0), Some(-1.0), Some(-2.0)]),
            Some(2)
        );
        assert_eq!(best_index(&[Some(-1.0), None, Some(-4.0)]), Some(0));
        assert_eq!(best_index(&[None, None]), None);

        let s = random_series(4, 30, 2);
        let top = lambda_max(&s, &FitConfig::default()).unwrap();
        let grid = LambdaGrid::new(vec![top * 1.5, top * 2.0]).unwrap();
        let path = bic_path(&s, &grid, &FitConfig::default()).unwrap();
        let (a, b) = (path.points[0].bic.unwrap(), path.points[1].bic.unwrap());
        assert!((a - b).abs() < 1e-6 * a.abs());
        assert!(path.points.iter().all(|p| p.total_rank == 0));
    }

    #[test]
    fn rank_bounds_and_recomputation() {
        let s = random_series(5, 25, 3);
        let grid = LambdaGrid::log_spaced(0.5, 8.0, 6).unwrap();
        let path = bic_path(&s, &grid, &FitConfig::default()).unwrap();
        let d = crate::design::covariate_count(5);
        for p in &path.points {
            assert!(p.ranks.iter().all(|&k| k <= d.min(24)));
            let again = bic_from_blocks(&s, &p.blocks()).unwrap();
            assert_eq!(again.to_bits(), p.bic.unwrap().to_bits());
        }
    }
}
