//! End-to-end acceptance checks. Runs without the libtest harness so the
//! verdict lines are always printed; exits nonzero if any check fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::ThreadPoolBuilder;

use sparse_autolog::analysis::{classify_effects, EffectStatus, DEFAULT_TOLERANCE};
use sparse_autolog::design::{
    column_effects, covariate_count, effect_counts, total_parameter_count, CoefficientBlock,
    DyadDesign, EffectCategory,
};
use sparse_autolog::likelihood::{
    gradient_and_curvature, linear_predictors, pair_loglik, Coordinate, NaturalParams,
};
use sparse_autolog::network::{pair_count, pairs, DyadOutcome, NetworkSeries};
use sparse_autolog::optimizer::{fit_all_pairs, fit_pair, FitConfig};
use sparse_autolog::prediction::{
    auc, roc_curve, rolling_evaluation, score_blocks, LambdaChoice, RollingReport,
};
use sparse_autolog::report::{coefficients_json, parse_coefficients, CoefficientFile};
use sparse_autolog::selection::{bic_from_blocks, bic_path, lambda_max, LambdaGrid, PathResult};
use sparse_autolog::simulate::{simulate, ClassPrior, GroundTruth, SimDesign};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn random_series(rng: &mut ChaCha8Rng, n: usize, slices: usize) -> NetworkSeries {
    let density = rng.random_range(0.2..0.8);
    let mut edges = Vec::new();
    for t in 0..slices {
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.random::<f64>() < density {
                    edges.push((t, i, j));
                }
            }
        }
    }
    NetworkSeries::from_edges(n, slices, edges).unwrap()
}

fn likelihood_kernel() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut sum_err, mut norm_err) = (0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let eta: [f64; 3] = std::array::from_fn(|_| rng.random_range(-30.0..30.0));
        let p = NaturalParams(eta);
        sum_err = sum_err.max((p.outcome_probs().0.iter().sum::<f64>() - 1.0).abs());
        let [a, b, c] = eta;
        let explicit = (1.0 + a.exp() + b.exp() + (a + b + c).exp()).ln();
        norm_err = norm_err.max((p.log_normalizer() - explicit).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        sum_err <= 1e-12 && norm_err <= 1e-12 && secs < 1.0,
        format!("max |sum-1| {sum_err:.1e}, max normaliser error {norm_err:.1e}, {secs:.3} s"),
    )
}

fn derivatives() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut worst_g, mut worst_h) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let series = random_series(&mut rng, 5, 20);
        let i = rng.random_range(0..4);
        let j = rng.random_range(i + 1..5);
        let design = DyadDesign::build(&series, i, j).unwrap();
        let d = design.width();
        let mut coef = CoefficientBlock::zeros(d);
        for r in 0..3 {
            coef.intercepts[r] = rng.random_range(-1.0..1.0);
            for k in 0..d {
                coef.theta[r][k] = rng.random_range(-0.5..0.5);
            }
        }
        let coords = (0..3)
            .map(Coordinate::Intercept)
            .chain((0..3).flat_map(|r| (0..d).map(move |k| Coordinate::Slope(r, k))));
        for coord in coords {
            let at = |h: f64| {
                let mut c = coef.clone();
                match coord {
                    Coordinate::Intercept(r) => c.intercepts[r] += h,
                    Coordinate::Slope(r, k) => c.theta[r][k] += h,
                }
                pair_loglik(&design, &c).unwrap()
            };
            let (g, info) = gradient_and_curvature(&design, &coef, coord).unwrap();
            let h1 = 1e-5;
            let fd_g = (at(h1) - at(-h1)) / (2.0 * h1);
            let h2 = 1e-3;
            let fd_info = -(at(h2) - 2.0 * at(0.0) + at(-h2)) / (h2 * h2);
            worst_g = worst_g.max((g - fd_g).abs() / fd_g.abs().max(1.0));
            worst_h = worst_h.max((info - fd_info).abs() / fd_info.abs().max(1.0));
        }
    }
    verdict(
        worst_g < 1e-6 && worst_h < 1e-6,
        format!("worst relative error: gradient {worst_g:.1e}, information {worst_h:.1e}"),
    )
}

fn null_model() -> Verdict {
    let mut worst = 0.0f64;
    let mut nonzero = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let datasets = [
        simulate(&SimDesign::new(6, 60, 2)).unwrap().0,
        random_series(&mut rng, 5, 30),
        random_series(&mut rng, 4, 15),
    ];
    for series in &datasets {
        let cfg = FitConfig::default();
        let top = lambda_max(series, &cfg).unwrap();
        let cfg = FitConfig::with_lambda(top * 1.0001);
        let scale = (series.len() - 1) as f64;
        for (fit, (i, j)) in fit_all_pairs(series, &cfg)
            .into_iter()
            .zip(pairs(series.n()))
        {
            let fit = fit.unwrap();
            nonzero += fit.coef.nonzero().len();
            let design = DyadDesign::build(series, i, j).unwrap();
            for r in 0..3 {
                let (g, _) =
                    gradient_and_curvature(&design, &fit.coef, Coordinate::Intercept(r)).unwrap();
                worst = worst.max(g.abs() / scale);
            }
        }
    }
    verdict(
        nonzero == 0 && worst < 1e-6,
        format!("{nonzero} nonzero slopes, worst |g_alpha|/(T-1) {worst:.1e}"),
    )
}

/// Damped Newton on the four-outcome multinomial likelihood with the full
/// Hessian, parameters ordered class by class as `[alpha_r, theta_r]`.
fn newton_oracle(design: &DyadDesign) -> Option<(Vec<f64>, f64)> {
    let d = design.width();
    let p = d + 1;
    // Outcome logits as linear maps of eta.
    let a = [
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [1.0, 1.0, 1.0],
    ];
    let rows: Vec<Vec<f64>> = (0..design.rows())
        .map(|t| {
            std::iter::once(1.0)
                .chain(design.row(t).iter().map(|&v| v as f64))
                .collect()
        })
        .collect();
    let eval = |w: &DVector<f64>, derivs: bool| {
        let mut ll = 0.0;
        let mut grad = DVector::zeros(3 * p);
        let mut hess = DMatrix::zeros(3 * p, 3 * p);
        for (z, y) in rows.iter().zip(design.responses()) {
            let eta: [f64; 3] = std::array::from_fn(|r| (0..p).map(|c| w[r * p + c] * z[c]).sum());
            let logits: Vec<f64> = a
                .iter()
                .map(|row| (0..3).map(|r| row[r] * eta[r]).sum())
                .collect();
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
            let probs: Vec<f64> = logits.iter().map(|l| (l - lse).exp()).collect();
            ll += logits[y.index()] - lse;
            if !derivs {
                continue;
            }
            let mean: [f64; 3] = std::array::from_fn(|r| (0..4).map(|o| probs[o] * a[o][r]).sum());
            let cov: [[f64; 3]; 3] = std::array::from_fn(|r| {
                std::array::from_fn(|s| {
                    (0..4).map(|o| probs[o] * a[o][r] * a[o][s]).sum::<f64>() - mean[r] * mean[s]
                })
            });
            for r in 0..3 {
                let resid = a[y.index()][r] - mean[r];
                for c in 0..p {
                    grad[r * p + c] += resid * z[c];
                }
                for s in 0..3 {
                    for c in 0..p {
                        for e in 0..p {
                            hess[(r * p + c, s * p + e)] += cov[r][s] * z[c] * z[e];
                        }
                    }
                }
            }
        }
        (ll, grad, hess)
    };
    let mut w = DVector::zeros(3 * p);
    for _ in 0..200 {
        let (ll, grad, hess) = eval(&w, true);
        if grad.amax() < 1e-11 {
            let min_eig = hess.symmetric_eigenvalues().min();
            return Some((w.iter().copied().collect(), min_eig));
        }
        let step = hess.cholesky()?.solve(&grad);
        let mut scale = 1.0;
        loop {
            let trial = &w + &step * scale;
            if eval(&trial, false).0 >= ll - 1e-12 || scale < 1e-8 {
                w = trial;
                break;
            }
            scale *= 0.5;
        }
    }
    None
}

fn unpenalized_equivalence() -> Verdict {
    let start = Instant::now();
    let tight = FitConfig {
        lambda: 0.0,
        max_sweeps: 500_000,
        objective_tolerance: 1e-12,
        kkt_tolerance: 1e-8,
        ..FitConfig::default()
    };
    for seed in 1..=20 {
        // Milder effects than the default keep the chain mixing, so the
        // maximum likelihood estimate is finite.
        let sim = SimDesign {
            groups: 0,
            xi_magnitudes: vec![],
            intercept: ClassPrior::new(-0.5, 0.3),
            persistence_self: ClassPrior::new(0.5, 0.3),
            persistence_other: ClassPrior::new(0.5, 0.3),
            ..SimDesign::new(3, 200, seed)
        };
        let (series, _) = simulate(&sim).unwrap();
        let mut worst = 0.0f64;
        let mut nondegenerate = true;
        for (i, j) in pairs(3) {
            let design = DyadDesign::build(&series, i, j).unwrap();
            let Some((oracle, min_eig)) = newton_oracle(&design) else {
                nondegenerate = false;
                break;
            };
            if min_eig < 1e-2 || oracle.iter().any(|v| v.abs() > 10.0) {
                nondegenerate = false;
                break;
            }
            let fit = fit_pair(&design, &tight, None).unwrap();
            let p = design.width() + 1;
            for r in 0..3 {
                worst = worst.max((fit.coef.intercepts[r] - oracle[r * p]).abs());
                for k in 0..design.width() {
                    worst = worst.max((fit.coef.theta[r][k] - oracle[r * p + 1 + k]).abs());
                }
            }
        }
        if !nondegenerate {
            continue;
        }
        let secs = start.elapsed().as_secs_f64();
        return verdict(
            worst <= 1e-4 && secs < 10.0,
            format!("seed {seed}: max coefficient difference {worst:.1e}, {secs:.2} s"),
        );
    }
    verdict(false, "no nondegenerate instance among 20 seeds")
}

/// Largest KKT violation of one fit, recomputed from the design.
fn kkt_violation(design: &DyadDesign, coef: &CoefficientBlock, lambda: f64, cap: f64) -> f64 {
    let eta = linear_predictors(design, coef).unwrap();
    let means: Vec<[f64; 3]> = eta
        .iter()
        .map(|e| NaturalParams(*e).outcome_probs().means())
        .collect();
    let resid: Vec<[f64; 3]> = design
        .responses()
        .iter()
        .zip(&means)
        .map(|(y, m)| {
            let s = y.statistics();
            [s[0] - m[0], s[1] - m[1], s[2] - m[2]]
        })
        .collect();
    let violation = |g: f64, value: f64, penalty: f64| {
        if value == 0.0 {
            (g.abs() - penalty).max(0.0)
        } else {
            let excess = g - penalty * value.signum();
            if value.abs() >= cap && excess * value.signum() >= 0.0 {
                0.0
            } else {
                excess.abs()
            }
        }
    };
    let mut worst = 0.0f64;
    for r in 0..3 {
        let g: f64 = resid.iter().map(|x| x[r]).sum();
        worst = worst.max(violation(g, coef.intercepts[r], 0.0));
        for k in 0..design.width() {
            let g: f64 = design
                .support(k)
                .iter()
                .map(|&t| resid[t as usize][r])
                .sum();
            worst = worst.max(violation(g, coef.theta[r][k], lambda));
        }
    }
    worst
}

fn kkt_certification(series: &NetworkSeries, path: &PathResult, cfg: &FitConfig) -> Verdict {
    let tol = 1e-4 * (series.len() - 1) as f64;
    let designs: Vec<DyadDesign> = pairs(series.n())
        .map(|(i, j)| DyadDesign::build(series, i, j).unwrap())
        .collect();
    let mut worst = 0.0f64;
    let mut fits = 0;
    for point in &path.points {
        if !point.failures.is_empty() || point.fits.len() != designs.len() {
            return verdict(false, format!("lambda {} has failed pairs", point.lambda));
        }
        for (fit, design) in point.fits.iter().zip(&designs) {
            worst = worst.max(kkt_violation(
                design,
                &fit.coef,
                point.lambda,
                cfg.coefficient_cap,
            ));
            fits += 1;
        }
    }
    verdict(
        worst <= tol,
        format!(
            "{fits} fits over {} lambdas, worst violation {worst:.2e} (tolerance {tol:.2e})",
            path.points.len()
        ),
    )
}

fn degrees_of_freedom(series: &NetworkSeries, path: &PathResult) -> Verdict {
    let bound = covariate_count(series.n()).min(series.len() - 1);
    let worst = path
        .points
        .iter()
        .flat_map(|p| p.ranks.iter().copied())
        .max()
        .unwrap_or(0);
    let mut mismatches = 0;
    for point in &path.points {
        let file =
            CoefficientFile::from_blocks(series.n(), Some(point.lambda), &point.blocks()).unwrap();
        let parsed = parse_coefficients(&coefficients_json(&file).unwrap()).unwrap();
        let bic = bic_from_blocks(series, &parsed.to_blocks().unwrap()).unwrap();
        if Some(bic.to_bits()) != point.bic.map(f64::to_bits) {
            mismatches += 1;
        }
    }
    verdict(
        worst <= bound && mismatches == 0,
        format!("largest rank {worst} (bound {bound}), {mismatches} BIC mismatches after a JSON round trip"),
    )
}

struct Recovery {
    recall: f64,
    false_fraction: f64,
}

/// Columns of `x` outside the span of `basis_cols` by more than a relative
/// residual of 1e-8.
fn outside_span(design: &DyadDesign, basis_cols: &[usize], col: usize) -> bool {
    let x = DVector::from_vec(design.column(col));
    let norm = x.norm();
    if norm == 0.0 {
        return false;
    }
    if basis_cols.is_empty() {
        return true;
    }
    let m = design.submatrix(basis_cols);
    let svd = m.svd(true, false);
    let u = svd.u.unwrap();
    let cutoff = 1e-10 * svd.singular_values.max();
    let mut resid = x.clone();
    for (c, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            let q = u.column(c);
            resid -= q * q.dot(&x);
        }
    }
    resid.norm() > 1e-8 * norm
}

fn recovery(series: &NetworkSeries, truth: &GroundTruth, blocks: &[CoefficientBlock]) -> Recovery {
    let (mut hits, mut positives, mut selected, mut unexplained) = (0, 0, 0, 0);
    for (p, (i, j)) in pairs(series.n()).enumerate() {
        let design = DyadDesign::build(series, i, j).unwrap();
        let support = truth.support(p);
        let true_cols = truth.blocks[p].active_columns();
        for &(r, c) in &support {
            positives += 1;
            hits += usize::from(blocks[p].theta[r][c] != 0.0);
        }
        for (r, c) in blocks[p].nonzero() {
            selected += 1;
            if !support.contains(&(r, c)) && outside_span(&design, &true_cols, c) {
                unexplained += 1;
            }
        }
    }
    Recovery {
        recall: hits as f64 / positives as f64,
        false_fraction: if selected == 0 {
            0.0
        } else {
            unexplained as f64 / selected as f64
        },
    }
}

struct SeedRun {
    series: NetworkSeries,
    truth: GroundTruth,
    path: PathResult,
    rolling: RollingReport,
}

const HOLDOUT: usize = 5;

fn seed_run(seed: u64, workers: usize) -> SeedRun {
    let pool = ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .unwrap();
    pool.install(|| {
        let (series, truth) = simulate(&SimDesign::new(10, 400, seed)).unwrap();
        let cfg = FitConfig::default();
        let top = lambda_max(&series, &cfg).unwrap();
        let grid = LambdaGrid::log_spaced(top / 20.0, top, 12).unwrap();
        let path = bic_path(&series, &grid, &cfg).unwrap();
        let rolling =
            rolling_evaluation(&series, &LambdaChoice::Grid(grid), &cfg, HOLDOUT).unwrap();
        SeedRun {
            series,
            truth,
            path,
            rolling,
        }
    })
}

fn support_recovery(runs: &[SeedRun], secs: f64) -> Verdict {
    let stats: Vec<Recovery> = runs
        .iter()
        .map(|r| recovery(&r.series, &r.truth, &r.path.selected_point().blocks()))
        .collect();
    let recall = stats.iter().map(|s| s.recall).sum::<f64>() / stats.len() as f64;
    let false_fraction = stats.iter().map(|s| s.false_fraction).sum::<f64>() / stats.len() as f64;
    let per_seed: Vec<String> = runs
        .iter()
        .zip(&stats)
        .map(|(r, s)| {
            format!(
                "lambda {:.2}: {:.3}/{:.3}",
                r.path.selected_lambda(),
                s.recall,
                s.false_fraction
            )
        })
        .collect();
    verdict(
        recall >= 0.6 && false_fraction <= 0.4 && secs < 900.0,
        format!(
            "mean recall {recall:.3} (>= 0.6), mean unexplained fraction {false_fraction:.3} (<= 0.4), {secs:.0} s; per seed recall/unexplained [{}]",
            per_seed.join(", ")
        ),
    )
}

fn predictive_ordering(runs: &[SeedRun]) -> Verdict {
    let mut ok = true;
    let mut worst_fit = f64::INFINITY;
    let mut worst_gap = f64::NEG_INFINITY;
    for run in runs {
        for origin in &run.rolling.origins {
            let fitted = origin.auc();
            let (_, truth_roc) =
                score_blocks(&run.series, origin.train_len, &run.truth.blocks).unwrap();
            match (fitted, truth_roc.map(|r| r.auc)) {
                (Some(f), Some(t)) => {
                    worst_fit = worst_fit.min(f);
                    worst_gap = worst_gap.max(f - t);
                    ok &= f >= 0.55 && t >= f - 0.05;
                }
                _ => ok = false,
            }
        }
    }
    verdict(
        ok,
        format!(
            "{} held-out slices per seed over {} seeds: lowest fitted AUC {worst_fit:.3}, largest fitted-minus-truth {worst_gap:.3}",
            HOLDOUT,
            runs.len()
        ),
    )
}

fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let (mut wins, mut total) = (0.0, 0.0);
    for (a, &la) in scores.iter().zip(labels) {
        if !la {
            continue;
        }
        for (b, &lb) in scores.iter().zip(labels) {
            if lb {
                continue;
            }
            total += 1.0;
            wins += if a > b {
                1.0
            } else if a == b {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / total
}

fn auc_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let size = rng.random_range(2..=1000);
        // Coarse scores in some cases so ties are common.
        let levels = if case % 2 == 0 { 10.0 } else { 1e9 };
        let mut labels: Vec<bool> = (0..size).map(|_| rng.random()).collect();
        labels[0] = true;
        labels[1] = false;
        let scores: Vec<f64> = labels
            .iter()
            .map(|&l| ((rng.random::<f64>() + if l { 0.3 } else { 0.0 }) * levels).floor() / levels)
            .collect();
        let trap = roc_curve(&scores, &labels).unwrap().auc;
        worst = worst.max((trap - pairwise_auc(&scores, &labels)).abs());
    }
    let labels = [true, false, true, false, false];
    let perfect = auc(&[0.9, 0.1, 0.8, 0.2, 0.3], &labels).unwrap();
    let constant = auc(&[0.4; 5], &labels).unwrap();
    verdict(
        worst <= 1e-12 && perfect == 1.0 && constant == 0.5,
        format!("worst difference {worst:.1e}, separated {perfect}, constant {constant}"),
    )
}

fn effect_accounting() -> Verdict {
    let counts = effect_counts(71);
    let split = [
        counts.get(EffectCategory::Persistence),
        counts.get(EffectCategory::Reciprocity),
        counts.get(EffectCategory::Diversification),
        counts.get(EffectCategory::Disintermediation),
    ];
    let ok = covariate_count(71) == 417
        && counts.total() == 1251
        && split == [6, 3, 828, 414]
        && pair_count(71) == 2485
        && total_parameter_count(71) == 2485 * 1251;
    verdict(
        ok,
        format!(
            "covariates {}, penalised {}, split {split:?}, pairs {}, parameters {}",
            covariate_count(71),
            counts.total(),
            pair_count(71),
            total_parameter_count(71)
        ),
    )
}

fn determinism(one: &SeedRun, two: &SeedRun) -> Verdict {
    let same_path =
        serde_json::to_string(&one.path).unwrap() == serde_json::to_string(&two.path).unwrap();
    let same_rolling = serde_json::to_string(&one.rolling).unwrap()
        == serde_json::to_string(&two.rolling).unwrap();
    verdict(
        same_path && same_rolling,
        format!("path identical: {same_path}, rolling predictions identical: {same_rolling} (1 vs 2 workers)"),
    )
}

fn significance_classifier() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let n = 4;
    let columns = column_effects(n, 0, 1);
    let d = columns.len();
    let rows = 40;
    let responses = vec![DyadOutcome::from_bits(false, false); rows];
    let (mut checked, mut wrong) = (0, 0);
    for case in 0..200 {
        let active: Vec<usize> = if case % 10 == 0 {
            vec![]
        } else {
            (0..d).filter(|_| rng.random::<f64>() < 0.2).collect()
        };
        // Rows covered by the active columns.
        let covered: Vec<bool> = (0..rows).map(|_| rng.random::<f64>() < 0.5).collect();
        let mut data = vec![vec![0u8; d]; rows];
        let mut disjoint = vec![false; d];
        for k in 0..d {
            let is_active = active.contains(&k);
            disjoint[k] = !is_active && rng.random::<bool>();
            for t in 0..rows {
                let on = rng.random::<f64>() < 0.4;
                data[t][k] = u8::from(if is_active {
                    on && covered[t]
                } else if disjoint[k] {
                    on && !covered[t]
                } else {
                    on
                });
            }
        }
        // Inactive overlapping columns need at least one covered row.
        let covered_rows: Vec<usize> = (0..rows).filter(|&t| covered[t]).collect();
        if !active.is_empty() {
            for k in 0..d {
                if !active.contains(&k) && !disjoint[k] {
                    data[covered_rows[0]][k] = 1;
                }
            }
        }
        let design =
            DyadDesign::from_rows((0, 1), columns.clone(), &data, responses.clone()).unwrap();
        let mut coef = CoefficientBlock::zeros(d);
        for &k in &active {
            coef.theta[rng.random_range(0..3)][k] =
                rng.random_range(0.5..2.0) * if rng.random() { 1.0 } else { -1.0 };
        }
        let report = classify_effects(&design, &coef, DEFAULT_TOLERANCE).unwrap();
        let union: Vec<bool> = (0..rows)
            .map(|t| active.iter().any(|&k| data[t][k] == 1))
            .collect();
        for (k, status) in report.columns.iter().enumerate() {
            let orthogonal =
                !active.contains(&k) && (0..rows).all(|t| data[t][k] == 0 || !union[t]);
            let expected = if orthogonal {
                EffectStatus::NoEvidence
            } else {
                EffectStatus::PotentiallySignificant
            };
            checked += 1;
            wrong += usize::from(status.status != expected);
        }
    }
    verdict(
        wrong == 0,
        format!("{wrong} misclassified of {checked} columns over 200 instances"),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut record = |id: usize, name: &'static str, v: Verdict| {
        println!(
            "criterion {id:>2} {name}: {} ({})",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        results.push((id, name, v));
    };
    record(1, "likelihood kernel", likelihood_kernel());
    record(2, "derivatives", derivatives());
    record(3, "null-model KKT", null_model());
    record(4, "unpenalised equivalence", unpenalized_equivalence());

    let (series, _) = simulate(&SimDesign::new(10, 300, 5)).unwrap();
    let cfg = FitConfig::default();
    let top = lambda_max(&series, &cfg).unwrap();
    let grid = LambdaGrid::log_spaced(top / 20.0, top, 10).unwrap();
    let path = bic_path(&series, &grid, &cfg).unwrap();
    record(
        5,
        "KKT certification",
        kkt_certification(&series, &path, &cfg),
    );
    record(
        6,
        "degrees of freedom and BIC",
        degrees_of_freedom(&series, &path),
    );

    let start = Instant::now();
    let runs: Vec<SeedRun> = (1..=5).map(|seed| seed_run(seed, 1)).collect();
    let secs = start.elapsed().as_secs_f64();
    record(7, "support recovery", support_recovery(&runs, secs));
    record(8, "predictive ordering", predictive_ordering(&runs));
    record(9, "AUC oracle", auc_oracle());
    record(10, "effect accounting", effect_accounting());
    record(11, "determinism", determinism(&runs[0], &seed_run(1, 2)));
    record(12, "significance classifier", significance_classifier());

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", results.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
