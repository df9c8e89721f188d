//! Dyad likelihood.
//!
//! For a pair the joint outcome `(y_ij, y_ji)` at time `t` has log density
//!
//! ```text
//! eta1 * y_ij + eta2 * y_ji + eta3 * y_ij * y_ji - C(eta)
//! C(eta) = log(1 + e^eta1 + e^eta2 + e^(eta1 + eta2 + eta3))
//! ```
//!
//! This is an exponential family with sufficient statistics
//! `s = (y_ij, y_ji, y_ij * y_ji)`, so `dC/d eta_r = E[s_r] = mu_r` and the
//! diagonal of the Hessian of `C` is `mu_r (1 - mu_r)`.

use crate::design::{CoefficientBlock, DyadDesign};
use crate::error::Result;
use crate::network::DyadOutcome;

/// Linear predictors of one dyad at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NaturalParams(pub [f64; 3]);

impl NaturalParams {
    /// Log-weights of `NN, SR, RS, BB`.
    #[inline]
    pub fn outcome_logits(&self) -> [f64; 4] {
        let [a, b, c] = self.0;
        [0.0, a, b, a + b + c]
    }

    #[inline]
    pub fn log_normalizer(&self) -> f64 {
        log_sum_exp(&self.outcome_logits())
    }

    pub fn outcome_probs(&self) -> OutcomeDistribution {
        let logits = self.outcome_logits();
        let c = log_sum_exp(&logits);
        OutcomeDistribution(logits.map(|w| (w - c).exp()))
    }

    /// Log density of `outcome`.
    pub fn log_density(&self, outcome: DyadOutcome) -> f64 {
        self.outcome_logits()[outcome.index()] - self.log_normalizer()
    }
}

#[inline]
fn log_sum_exp(w: &[f64; 4]) -> f64 {
    let m = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + w.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Probabilities of `NN, SR, RS, BB`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutcomeDistribution(pub [f64; 4]);

impl OutcomeDistribution {
    pub fn prob(&self, outcome: DyadOutcome) -> f64 {
        self.0[outcome.index()]
    }

    /// `P(y_ij = 1) = p_SR + p_BB`.
    pub fn forward(&self) -> f64 {
        self.0[1] + self.0[3]
    }

    /// `P(y_ji = 1) = p_RS + p_BB`.
    pub fn backward(&self) -> f64 {
        self.0[2] + self.0[3]
    }

    /// Means of the sufficient statistics `(mu_1, mu_2, mu_3)`.
    pub fn means(&self) -> [f64; 3] {
        [self.forward(), self.backward(), self.0[3]]
    }
}

pub fn log_normalizer(eta: NaturalParams) -> f64 {
    eta.log_normalizer()
}

pub fn outcome_probs(eta: NaturalParams) -> OutcomeDistribution {
    eta.outcome_probs()
}

/// Linear predictors `eta_r = alpha_r + x_t . theta_r` for every row.
pub fn linear_predictors(design: &DyadDesign, coef: &CoefficientBlock) -> Result<Vec<[f64; 3]>> {
    coef.check_width(design.width())?;
    let mut eta = vec![coef.intercepts; design.rows()];
    for r in 0..3 {
        for (k, &theta) in coef.theta[r].iter().enumerate() {
            if theta != 0.0 {
                for &t in design.support(k) {
                    eta[t as usize][r] += theta;
                }
            }
        }
    }
    Ok(eta)
}

/// Unpenalised log-likelihood of one pair.
pub fn pair_loglik(design: &DyadDesign, coef: &CoefficientBlock) -> Result<f64> {
    let eta = linear_predictors(design, coef)?;
    Ok(eta
        .iter()
        .zip(design.responses())
        .map(|(e, &y)| NaturalParams(*e).log_density(y))
        .sum())
}

/// Coordinate of the coefficient vector of one pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Coordinate {
    Intercept(usize),
    Slope(usize, usize),
}

/// Gradient `dV/d theta` and information `-d^2V/d theta^2` along one
/// coordinate, computed from scratch.
pub fn gradient_and_curvature(
    design: &DyadDesign,
    coef: &CoefficientBlock,
    coord: Coordinate,
) -> Result<(f64, f64)> {
    let eta = linear_predictors(design, coef)?;
    let (class, rows): (usize, Box<dyn Iterator<Item = usize>>) = match coord {
        Coordinate::Intercept(r) => (r, Box::new(0..design.rows())),
        Coordinate::Slope(r, k) => (r, Box::new(design.support(k).iter().map(|&t| t as usize))),
    };
    let mut g = 0.0;
    let mut h = 0.0;
    for t in rows {
        let mu = NaturalParams(eta[t]).outcome_probs().means()[class];
        let s = design.responses()[t].statistics()[class];
        g += s - mu;
        h += mu * (1.0 - mu);
    }
    Ok((g, h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{column_effects, covariate_count};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn uniform_case() {
        let eta = NaturalParams([0.0; 3]);
        assert!((eta.log_normalizer() - 4f64.ln()).abs() < 1e-15);
        for p in eta.outcome_probs().0 {
            assert!((p - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn dominant_exponent_does_not_overflow() {
        let c = NaturalParams([1000.0, 0.0, 0.0]).log_normalizer();
        assert!(c.is_finite());
        // SR and BB both carry weight e^1000.
        assert!((c - (1000.0 + 2f64.ln())).abs() < 1e-9);
        assert!((c / 1000.0 - 1.0).abs() < 1e-3);
        let p = NaturalParams([1000.0, 0.0, 0.0]).outcome_probs();
        assert!(p.0.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn explicit_sum_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let e = [(); 3].map(|_| rng.random_range(-10.0f64..10.0));
            let explicit = (1.0 + e[0].exp() + e[1].exp() + (e[0] + e[1] + e[2]).exp()).ln();
            assert!((NaturalParams(e).log_normalizer() - explicit).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_interaction_gives_independence() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let a = rng.random_range(-5.0..5.0);
            let b = rng.random_range(-5.0..5.0);
            let p = NaturalParams([a, b, 0.0]).outcome_probs();
            let pa = a.exp() / (1.0 + a.exp());
            let pb = b.exp() / (1.0 + b.exp());
            assert!((p.forward() - pa).abs() < 1e-12);
            assert!((p.backward() - pb).abs() < 1e-12);
            assert!((p.prob(DyadOutcome::BB) - pa * pb).abs() < 1e-12);
        }
    }

    #[test]
    fn positive_interaction_favours_agreement() {
        let p = NaturalParams([0.0, 0.0, 5.0]).outcome_probs();
        assert!(p.prob(DyadOutcome::BB) > p.prob(DyadOutcome::SR));
        assert!((p.prob(DyadOutcome::SR) - p.prob(DyadOutcome::RS)).abs() < 1e-15);
    }

    fn tiny_design(outcomes: Vec<DyadOutcome>, rows: Vec<Vec<u8>>) -> DyadDesign {
        DyadDesign::from_rows((0, 1), column_effects(3, 0, 1), &rows, outcomes).unwrap()
    }

    #[test]
    fn zero_coefficients_loglik() {
        let rows = vec![vec![0u8; 9]; 10];
        let d = tiny_design(vec![DyadOutcome::SR; 10], rows);
        let v = pair_loglik(&d, &CoefficientBlock::zeros(9)).unwrap();
        assert!((v + 10.0 * 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn single_bb_observation() {
        let d = tiny_design(vec![DyadOutcome::BB], vec![vec![1u8; 9]]);
        let v = pair_loglik(&d, &CoefficientBlock::zeros(9)).unwrap();
        assert!((v - 0.25f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let d = tiny_design(vec![DyadOutcome::BB], vec![vec![1u8; 9]]);
        assert!(pair_loglik(&d, &CoefficientBlock::zeros(8)).is_err());
    }

    #[test]
    fn zero_column_has_no_gradient() {
        let mut rows = vec![vec![1u8; 9]; 5];
        for r in &mut rows {
            r[4] = 0;
        }
        let d = tiny_design(vec![DyadOutcome::RS; 5], rows);
        let (g, h) =
            gradient_and_curvature(&d, &CoefficientBlock::zeros(9), Coordinate::Slope(1, 4))
                .unwrap();
        assert_eq!((g, h), (0.0, 0.0));
    }

    #[test]
    fn intercept_gradient_all_sr() {
        let rows = vec![vec![0u8; 9]; 12];
        let d = tiny_design(vec![DyadOutcome::SR; 12], rows);
        let (g, h) =
            gradient_and_curvature(&d, &CoefficientBlock::zeros(9), Coordinate::Intercept(0))
                .unwrap();
        assert!((g - 6.0).abs() < 1e-12);
        assert!((h - 3.0).abs() < 1e-12);
    }

    /// Explicit 4-category multinomial log-density built independently from
    /// the outcome table.
    #[test]
    fn loglik_matches_multinomial_reimplementation() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let d = covariate_count(3);
        let rows: Vec<Vec<u8>> = (0..30)
            .map(|_| (0..d).map(|_| rng.random_range(0..2u8)).collect())
            .collect();
        let outs: Vec<DyadOutcome> = (0..30)
            .map(|_| DyadOutcome::ALL[rng.random_range(0..4)])
            .collect();
        let design = tiny_design(outs.clone(), rows.clone());
        let mut coef = CoefficientBlock::zeros(d);
        for r in 0..3 {
            coef.intercepts[r] = rng.random_range(-1.0..1.0);
            for k in 0..d {
                coef.theta[r][k] = rng.random_range(-1.0..1.0);
            }
        }
        let mut oracle = 0.0;
        for (row, y) in rows.iter().zip(&outs) {
            let eta: Vec<f64> = (0..3)
                .map(|r| {
                    coef.intercepts[r]
                        + row
                            .iter()
                            .zip(&coef.theta[r])
                            .map(|(&x, c)| f64::from(x) * c)
                            .sum::<f64>()
                })
                .collect();
            let weights = [
                1.0,
                eta[0].exp(),
                eta[1].exp(),
                (eta[0] + eta[1] + eta[2]).exp(),
            ];
            let total: f64 = weights.iter().sum();
            oracle += (weights[y.index()] / total).ln();
        }
        let v = pair_loglik(&design, &coef).unwrap();
        assert!((v - oracle).abs() < 1e-10);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #[test]
            fn probabilities_sum_to_one(a in -30.0..30.0f64, b in -30.0..30.0f64, c in -30.0..30.0f64) {
                let p = NaturalParams([a, b, c]).outcome_probs();
                prop_assert!((p.0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(p.0.iter().all(|&v| (0.0..=1.0).contains(&v)));
            }

            #[test]
            fn marginal_consistency(a in -20.0..20.0f64, b in -20.0..20.0f64) {
                let p = NaturalParams([a, b, 0.0]).outcome_probs();
                let logistic = 1.0 / (1.0 + (-a).exp());
                prop_assert!((p.means()[0] - logistic).abs() < 1e-12);
            }

            #[test]
            fn loglik_is_permutation_invariant(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let d = covariate_count(3);
                let rows: Vec<Vec<u8>> = (0..8).map(|_| (0..d).map(|_| rng.random_range(0..2u8)).collect()).collect();
                let outs: Vec<DyadOutcome> = (0..8).map(|_| DyadOutcome::ALL[rng.random_range(0..4)]).collect();
                let mut coef = CoefficientBlock::zeros(d);
                for r in 0..3 {
                    for k in 0..d {
                        coef.theta[r][k] = rng.random_range(-1.0..1.0);
                    }
                }
                let v = pair_loglik(&tiny_design(outs.clone(), rows.clone()), &coef).unwrap();
                let mut perm: Vec<usize> = (0..8).collect();
                perm.reverse();
                perm.swap(0, 3);
                let rows_p: Vec<_> = perm.iter().map(|&p| rows[p].clone()).collect();
                let outs_p: Vec<_> = perm.iter().map(|&p| outs[p]).collect();
                let vp = pair_loglik(&tiny_design(outs_p, rows_p), &coef).unwrap();
                prop_assert!((v - vp).abs() < 1e-12);
            }

            #[test]
            fn curvature_nonnegative(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let d = covariate_count(3);
                let rows: Vec<Vec<u8>> = (0..6).map(|_| (0..d).map(|_| rng.random_range(0..2u8)).collect()).collect();
                let outs: Vec<DyadOutcome> = (0..6).map(|_| DyadOutcome::ALL[rng.random_range(0..4)]).collect();
                let design = tiny_design(outs, rows);
                let mut coef = CoefficientBlock::zeros(d);
                coef.theta[2][3] = rng.random_range(-5.0..5.0);
                for r in 0..3 {
                    let (_, h) = gradient_and_curvature(&design, &coef, Coordinate::Intercept(r)).unwrap();
                    prop_assert!(h >= 0.0);
                    for k in 0..d {
                        let (_, h) = gradient_and_curvature(&design, &coef, Coordinate::Slope(r, k)).unwrap();
                        prop_assert!(h >= 0.0);
                    }
                }
            }
        }
    }
}
