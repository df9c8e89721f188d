//! Synthetic series drawn from the model with a known sparse truth.
//!
//! Every pair gets Gaussian intercepts and persistence coefficients and,
//! per class, three nonzero disintermediation coefficients `y_ik * y_kj`
//! at a triple of third nodes shared within its group of pairs. The
//! disintermediation values are constant within a group and take the sign
//! opposite to the mean of all drawn persistence coefficients of the class.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::design::{
    column_index, covariate_count, effect_value_with, CoefficientBlock, EffectFamily, EffectKind,
};
use crate::error::{Error, Result};
use crate::likelihood::NaturalParams;
use crate::network::{pair_count, pairs, DyadOutcome, NetworkSeries, SeriesBuilder};

/// Per-class Gaussian prior.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassPrior {
    pub mean: [f64; 3],
    pub sd: [f64; 3],
}

impl ClassPrior {
    pub fn new(mean: f64, sd: f64) -> Self {
        Self {
            mean: [mean; 3],
            sd: [sd; 3],
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.mean.iter().chain(&self.sd).any(|v| !v.is_finite())
            || self.sd.iter().any(|&s| s < 0.0)
        {
            return Err(Error::Config(format!(
                "{name}: means must be finite and sds >= 0"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimDesign {
    pub n: usize,
    pub slices: usize,
    pub seed: u64,
    pub intercept: ClassPrior,
    /// Coefficient of `y_ij`.
    pub persistence_self: ClassPrior,
    /// Coefficient of `y_ji`.
    pub persistence_other: ClassPrior,
    /// Number of pair groups sharing third-node triples; zero leaves out
    /// the disintermediation effects.
    pub groups: usize,
    /// Preferred zero-based third nodes per group. Defaults to
    /// `3g, 3g+1, 3g+2 (mod n)` for group `g`.
    pub triples: Option<Vec<[usize; 3]>>,
    /// Disintermediation magnitude per group.
    pub xi_magnitudes: Vec<f64>,
}

impl Default for SimDesign {
    fn default() -> Self {
        Self {
            n: 10,
            slices: 300,
            seed: 1,
            intercept: ClassPrior::new(0.0, 0.5),
            persistence_self: ClassPrior::new(1.0, 0.5),
            persistence_other: ClassPrior::new(1.0, 0.5),
            groups: 4,
            triples: None,
            xi_magnitudes: vec![1.0; 4],
        }
    }
}

impl SimDesign {
    pub fn new(n: usize, slices: usize, seed: u64) -> Self {
        Self {
            n,
            slices,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::Config(format!(
                "need at least 3 nodes, got {}",
                self.n
            )));
        }
        if self.groups > 0 && self.n < 5 {
            return Err(Error::Config(format!(
                "three distinct third nodes per pair need n >= 5, got {}",
                self.n
            )));
        }
        if self.slices == 0 {
            return Err(Error::TooFewSlices { needed: 1, got: 0 });
        }
        self.intercept.validate("intercept")?;
        self.persistence_self.validate("persistence_self")?;
        self.persistence_other.validate("persistence_other")?;
        if self.xi_magnitudes.len() != self.groups {
            return Err(Error::Config(format!(
                "{} disintermediation magnitudes for {} groups",
                self.xi_magnitudes.len(),
                self.groups
            )));
        }
        if self.xi_magnitudes.iter().any(|m| !m.is_finite()) {
            return Err(Error::Config(
                "disintermediation magnitudes must be finite".into(),
            ));
        }
        if let Some(triples) = &self.triples {
            if triples.len() != self.groups {
                return Err(Error::Config(format!(
                    "{} triples for {} groups",
                    triples.len(),
                    self.groups
                )));
            }
            for t in triples {
                if t.iter().any(|&k| k >= self.n) || t[0] == t[1] || t[0] == t[2] || t[1] == t[2] {
                    return Err(Error::Config(format!(
                        "triple {t:?} needs three distinct nodes below {}",
                        self.n
                    )));
                }
            }
        }
        Ok(())
    }

    fn preferred_triple(&self, group: usize) -> [usize; 3] {
        match &self.triples {
            Some(t) => t[group],
            None => [0, 1, 2].map(|o| (3 * group + o) % self.n),
        }
    }
}

/// Group of pair `p` (lexicographic index) when `pairs` pairs are split into
/// `groups` contiguous blocks whose sizes differ by at most one.
pub fn group_of(p: usize, pairs: usize, groups: usize) -> usize {
    let base = pairs / groups;
    let extra = pairs % groups;
    let wide = extra * (base + 1);
    if p < wide {
        p / (base + 1)
    } else {
        extra + (p - wide) / base.max(1)
    }
}

/// Replaces preferred nodes that hit `i`, `j` or an earlier pick with the
/// next free node, cyclically.
fn resolve_triple(preferred: [usize; 3], i: usize, j: usize, n: usize) -> [usize; 3] {
    let mut picked: Vec<usize> = Vec::with_capacity(3);
    for p in preferred {
        let mut c = p;
        while c == i || c == j || picked.contains(&c) {
            c = (c + 1) % n;
        }
        picked.push(c);
    }
    picked.sort_unstable();
    [picked[0], picked[1], picked[2]]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub n: usize,
    /// One block per pair, lexicographic order.
    pub blocks: Vec<CoefficientBlock>,
    pub groups: Vec<usize>,
    /// Third nodes carrying the disintermediation effects of each pair;
    /// meaningless without groups.
    pub triples: Vec<[usize; 3]>,
}

impl GroundTruth {
    /// `(class, column)` of every nonzero slope of pair `p`.
    pub fn support(&self, p: usize) -> Vec<(usize, usize)> {
        self.blocks[p].nonzero()
    }

    /// Per-class indicator of nonzero slopes for pair `p`.
    pub fn support_mask(&self, p: usize) -> [Vec<bool>; 3] {
        let block = &self.blocks[p];
        [0, 1, 2].map(|r| block.theta[r].iter().map(|&v| v != 0.0).collect())
    }
}

fn pair_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws the coefficients of every pair.
pub fn generate_coefficients(design: &SimDesign) -> Result<GroundTruth> {
    design.validate()?;
    let n = design.n;
    let d = covariate_count(n);
    let count = pair_count(n);
    let mut rng = pair_rng(design.seed, 0);
    let normal = |prior: &ClassPrior, r: usize| {
        Normal::new(prior.mean[r], prior.sd[r]).expect("validated prior")
    };
    let mut blocks = Vec::with_capacity(count);
    let mut persistence_sum = [0.0; 3];
    for _ in 0..count {
        let mut block = CoefficientBlock::zeros(d);
        for r in 0..3 {
            block.intercepts[r] = normal(&design.intercept, r).sample(&mut rng);
            block.theta[r][0] = normal(&design.persistence_self, r).sample(&mut rng);
            block.theta[r][1] = normal(&design.persistence_other, r).sample(&mut rng);
            persistence_sum[r] += block.theta[r][0] + block.theta[r][1];
        }
        blocks.push(block);
    }
    // A zero mean counts as positive.
    let sign = persistence_sum.map(|s| if s < 0.0 { 1.0 } else { -1.0 });

    let mut groups = Vec::with_capacity(count);
    let mut triples = Vec::with_capacity(count);
    for (p, (i, j)) in pairs(n).enumerate() {
        if design.groups == 0 {
            groups.push(0);
            triples.push([0; 3]);
            continue;
        }
        let g = group_of(p, count, design.groups);
        let triple = resolve_triple(design.preferred_triple(g), i, j, n);
        for k in triple {
            let effect = EffectFamily {
                kind: EffectKind::DisintermediationFwd,
                third_node: Some(k),
            };
            let c = column_index(n, i, j, effect).expect("resolved triple avoids i and j");
            for r in 0..3 {
                blocks[p].theta[r][c] = sign[r] * design.xi_magnitudes[g];
            }
        }
        groups.push(g);
        triples.push(triple);
    }
    Ok(GroundTruth {
        n,
        blocks,
        groups,
        triples,
    })
}

fn draw(probs: &[f64; 4], rng: &mut ChaCha8Rng) -> DyadOutcome {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (o, &p) in DyadOutcome::ALL.iter().zip(probs) {
        acc += p;
        if u < acc {
            return *o;
        }
    }
    DyadOutcome::BB
}

/// Runs the chain forward from a first slice drawn at the intercepts.
pub fn forward_sample(truth: &GroundTruth, design: &SimDesign) -> Result<NetworkSeries> {
    design.validate()?;
    let n = design.n;
    if truth.n != n || truth.blocks.len() != pair_count(n) {
        return Err(Error::DimensionMismatch(
            "ground truth does not match design".into(),
        ));
    }
    let all: Vec<(usize, usize)> = pairs(n).collect();
    // Nonzero slopes as (class, term, value).
    let terms: Vec<Vec<(usize, EffectFamily, f64)>> = all
        .iter()
        .zip(&truth.blocks)
        .map(|(&(i, j), block)| {
            block.check_width(covariate_count(n))?;
            let labels = crate::design::column_effects(n, i, j);
            Ok(block
                .nonzero()
                .into_iter()
                .map(|(r, c)| (r, labels[c], block.theta[r][c]))
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut rngs: Vec<ChaCha8Rng> = (0..all.len())
        .map(|p| pair_rng(design.seed, p as u64 + 1))
        .collect();

    let mut builder = SeriesBuilder::new(n, design.slices)?;
    let mut prev = vec![0u8; n * n];
    let mut next = vec![0u8; n * n];
    for t in 0..design.slices {
        next.fill(0);
        for (p, &(i, j)) in all.iter().enumerate() {
            let mut eta = truth.blocks[p].intercepts;
            if t > 0 {
                for &(r, effect, v) in &terms[p] {
                    if effect_value_with(|a, b| prev[a * n + b], i, j, effect) == 1 {
                        eta[r] += v;
                    }
                }
            }
            let probs = NaturalParams(eta).outcome_probs().0;
            let (fwd, bwd) = draw(&probs, &mut rngs[p]).bits();
            if fwd {
                next[i * n + j] = 1;
                builder.add_edge(t, i, j)?;
            }
            if bwd {
                next[j * n + i] = 1;
                builder.add_edge(t, j, i)?;
            }
        }
        std::mem::swap(&mut prev, &mut next);
    }
    Ok(builder.build())
}

/// Coefficients and a series in one call.
pub fn simulate(design: &SimDesign) -> Result<(NetworkSeries, GroundTruth)> {
    let truth = generate_coefficients(design)?;
    let series = forward_sample(&truth, design)?;
    Ok((series, truth))
}
