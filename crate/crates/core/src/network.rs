//! Dynamic directed binary networks.
//!
//! A [`NetworkSeries`] holds `T` adjacency slices over a fixed set of `n`
//! nodes. Slices are bit packed row-major (`i * n + j`). All indices in the
//! library API are zero-based; the file formats in [`crate::io`] use the
//! one-based convention and convert at the boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Joint state of the two directed links of a pair `i < j` at one time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DyadOutcome {
    /// `(0, 0)`
    NN,
    /// `(1, 0)`: only `i -> j`
    SR,
    /// `(0, 1)`: only `j -> i`
    RS,
    /// `(1, 1)`
    BB,
}

impl DyadOutcome {
    pub const ALL: [DyadOutcome; 4] = [Self::NN, Self::SR, Self::RS, Self::BB];

    pub fn from_bits(forward: bool, backward: bool) -> Self {
        match (forward, backward) {
            (false, false) => Self::NN,
            (true, false) => Self::SR,
            (false, true) => Self::RS,
            (true, true) => Self::BB,
        }
    }

    /// `(y_ij, y_ji)`
    pub fn bits(self) -> (bool, bool) {
        match self {
            Self::NN => (false, false),
            Self::SR => (true, false),
            Self::RS => (false, true),
            Self::BB => (true, true),
        }
    }

    /// Position in [`DyadOutcome::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    /// Sufficient statistics `(y_ij, y_ji, y_ij * y_ji)` as reals.
    pub fn statistics(self) -> [f64; 3] {
        let (a, b) = self.bits();
        let a = f64::from(u8::from(a));
        let b = f64::from(u8::from(b));
        [a, b, a * b]
    }
}

/// Immutable `T x n x n` binary tensor without self-loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkSeries {
    n: usize,
    slices: usize,
    words_per_slice: usize,
    bits: Vec<u64>,
    labels: Option<Vec<String>>,
}

impl NetworkSeries {
    /// Builds a series from zero-based `(t, i, j)` edge records.
    ///
    /// Duplicate records collapse to a single link.
    pub fn from_edges<I>(n: usize, slices: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, usize)>,
    {
        let mut builder = SeriesBuilder::new(n, slices)?;
        for (t, i, j) in edges {
            builder.add_edge(t, i, j)?;
        }
        Ok(builder.build())
    }

    /// Builds a series from dense 0/1 slices, `dense[t][i][j]`.
    pub fn from_dense(dense: &[Vec<Vec<u8>>]) -> Result<Self> {
        let slices = dense.len();
        let n = dense.first().map_or(0, Vec::len);
        let mut builder = SeriesBuilder::new(n, slices)?;
        for (t, slice) in dense.iter().enumerate() {
            if slice.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "slice {t} has {} rows, expected {n}",
                    slice.len()
                )));
            }
            for (i, row) in slice.iter().enumerate() {
                if row.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "slice {t} row {i} has {} columns, expected {n}",
                        row.len()
                    )));
                }
                for (j, &v) in row.iter().enumerate() {
                    match v {
                        0 => {}
                        1 => builder.add_edge(t, i, j)?,
                        other => {
                            return Err(Error::NonBinary {
                                t,
                                row: i,
                                col: j,
                                value: other.to_string(),
                            })
                        }
                    }
                }
            }
        }
        Ok(builder.build())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of time slices `T`.
    pub fn len(&self) -> usize {
        self.slices
    }

    pub fn is_empty(&self) -> bool {
        self.slices == 0
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// `y[t, i, j]`; panics when an index is out of range.
    #[inline]
    pub fn get(&self, t: usize, i: usize, j: usize) -> bool {
        assert!(t < self.slices && i < self.n && j < self.n);
        let bit = t * self.words_per_slice * 64 + i * self.n + j;
        self.bits[bit / 64] >> (bit % 64) & 1 == 1
    }

    #[inline]
    pub(crate) fn bit(&self, t: usize, i: usize, j: usize) -> u8 {
        u8::from(self.get(t, i, j))
    }

    pub fn outcome(&self, t: usize, i: usize, j: usize) -> DyadOutcome {
        DyadOutcome::from_bits(self.get(t, i, j), self.get(t, j, i))
    }

    /// Outcome sequence of pair `i < j` over all slices.
    pub fn dyad_outcomes(&self, i: usize, j: usize) -> Result<Vec<DyadOutcome>> {
        if i >= j || j >= self.n {
            return Err(Error::InvalidPair { i, j });
        }
        Ok((0..self.slices).map(|t| self.outcome(t, i, j)).collect())
    }

    /// Number of directed links in slice `t`.
    pub fn links(&self, t: usize) -> usize {
        let start = t * self.words_per_slice;
        self.bits[start..start + self.words_per_slice]
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    /// Mean number of directed links per slice.
    pub fn mean_links(&self) -> f64 {
        if self.slices == 0 {
            return 0.0;
        }
        let total: usize = (0..self.slices).map(|t| self.links(t)).sum();
        total as f64 / self.slices as f64
    }

    /// Fraction of possible directed links present, over all slices.
    pub fn density(&self) -> f64 {
        if self.slices == 0 || self.n < 2 {
            return 0.0;
        }
        self.mean_links() / self.max_links() as f64
    }

    /// Largest possible number of directed links in one slice, `n(n-1)`.
    pub fn max_links(&self) -> usize {
        self.n * (self.n - 1)
    }

    /// The first `len` slices.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.slices {
            return Err(Error::TooFewSlices {
                needed: len,
                got: self.slices,
            });
        }
        Ok(Self {
            n: self.n,
            slices: len,
            words_per_slice: self.words_per_slice,
            bits: self.bits[..len * self.words_per_slice].to_vec(),
            labels: self.labels.clone(),
        })
    }

    /// All directed links as zero-based `(t, i, j)` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.slices).flat_map(move |t| {
            (0..self.n).flat_map(move |i| {
                (0..self.n)
                    .filter(move |&j| self.get(t, i, j))
                    .map(move |j| (t, i, j))
            })
        })
    }

    /// Slice `t` as a dense row-major 0/1 matrix.
    pub fn dense_slice(&self, t: usize) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.bit(t, i, j)).collect())
            .collect()
    }
}

/// Mutable accumulator for a [`NetworkSeries`].
#[derive(Clone, Debug)]
pub struct SeriesBuilder {
    n: usize,
    slices: usize,
    words_per_slice: usize,
    bits: Vec<u64>,
}

impl SeriesBuilder {
    pub fn new(n: usize, slices: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewNodes(n));
        }
        if slices == 0 {
            return Err(Error::TooFewSlices { needed: 1, got: 0 });
        }
        let words_per_slice = (n * n).div_ceil(64);
        Ok(Self {
            n,
            slices,
            words_per_slice,
            bits: vec![0; words_per_slice * slices],
        })
    }

    pub fn add_edge(&mut self, t: usize, i: usize, j: usize) -> Result<()> {
        if t >= self.slices || i >= self.n || j >= self.n {
            return Err(Error::OutOfRange {
                t,
                i,
                j,
                n: self.n,
                slices: self.slices,
            });
        }
        if i == j {
            return Err(Error::SelfLoop { t, node: i });
        }
        let bit = t * self.words_per_slice * 64 + i * self.n + j;
        self.bits[bit / 64] |= 1 << (bit % 64);
        Ok(())
    }

    pub fn build(self) -> NetworkSeries {
        NetworkSeries {
            n: self.n,
            slices: self.slices,
            words_per_slice: self.words_per_slice,
            bits: self.bits,
            labels: None,
        }
    }
}

/// Pairs `(i, j)` with `i < j` in lexicographic order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// Number of unordered pairs, `n(n-1)/2`.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_edge() {
        let s = NetworkSeries::from_edges(2, 1, [(0, 0, 1)]).unwrap();
        assert!(s.get(0, 0, 1));
        assert!(!s.get(0, 1, 0));
    }

    #[test]
    fn self_loop_rejected() {
        let err = NetworkSeries::from_edges(3, 1, [(0, 2, 2)]).unwrap_err();
        assert!(matches!(err, Error::SelfLoop { node: 2, .. }));
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(matches!(
            NetworkSeries::from_edges(3, 2, [(2, 0, 1)]),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            NetworkSeries::from_edges(3, 2, [(0, 0, 3)]),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn duplicates_collapse() {
        let s = NetworkSeries::from_edges(2, 2, [(1, 0, 1), (1, 0, 1)]).unwrap();
        assert!(s.get(1, 0, 1));
        assert_eq!(s.links(1), 1);
    }

    #[test]
    fn outcomes() {
        let s = NetworkSeries::from_edges(3, 3, [(0, 0, 2), (0, 2, 0), (1, 2, 0)]).unwrap();
        let o = s.dyad_outcomes(0, 2).unwrap();
        assert_eq!(o, vec![DyadOutcome::BB, DyadOutcome::RS, DyadOutcome::NN]);
        assert!(matches!(
            s.dyad_outcomes(2, 0),
            Err(Error::InvalidPair { .. })
        ));
        assert!(matches!(
            s.dyad_outcomes(1, 1),
            Err(Error::InvalidPair { .. })
        ));
        let empty = NetworkSeries::from_edges(4, 5, []).unwrap();
        assert!(empty
            .dyad_outcomes(1, 3)
            .unwrap()
            .iter()
            .all(|&o| o == DyadOutcome::NN));
    }

    #[test]
    fn density_values() {
        let empty = NetworkSeries::from_edges(3, 4, []).unwrap();
        assert_eq!(empty.mean_links(), 0.0);
        let complete: Vec<_> = (0..3)
            .flat_map(|i| (0..3).filter(move |&j| j != i).map(move |j| (0, i, j)))
            .collect();
        let s = NetworkSeries::from_edges(3, 1, complete).unwrap();
        assert_eq!(s.mean_links(), 6.0);
        assert_eq!(s.density(), 6.0 / s.max_links() as f64);
        assert_eq!(s.max_links(), 6);
    }

    #[test]
    fn density_of_a_full_scale_series() {
        let n = 71;
        let edges: Vec<_> = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (0, i, j)))
            .take(2971)
            .collect();
        let s = NetworkSeries::from_edges(n, 1, edges).unwrap();
        assert_eq!(s.mean_links(), 2971.0);
        assert_eq!(s.max_links(), 4970);
    }

    #[test]
    fn dense_rejects_nonbinary() {
        let dense = vec![vec![vec![0, 2], vec![0, 0]]];
        assert!(matches!(
            NetworkSeries::from_dense(&dense),
            Err(Error::NonBinary { .. })
        ));
        let diag = vec![vec![vec![1, 0], vec![0, 0]]];
        assert!(matches!(
            NetworkSeries::from_dense(&diag),
            Err(Error::SelfLoop { .. })
        ));
    }

    #[test]
    fn pair_enumeration() {
        let p: Vec<_> = pairs(4).collect();
        assert_eq!(p, vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(pair_count(71), 2485);
    }

    #[test]
    fn prefix_keeps_leading_slices() {
        let s = NetworkSeries::from_edges(3, 3, [(0, 0, 1), (2, 1, 0)]).unwrap();
        let p = s.prefix(2).unwrap();
        assert_eq!(p.len(), 2);
        assert!(p.get(0, 0, 1));
        assert_eq!(p.links(1), 0);
        assert!(s.prefix(4).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn outcome_is_bijection_with_bits(seed in proptest::collection::vec(any::<bool>(), 4 * 5 * 5)) {
                let n = 5;
                let edges = seed.iter().enumerate().filter(|(_, &b)| b).filter_map(|(idx, _)| {
                    let t = idx / (n * n);
                    let i = (idx / n) % n;
                    let j = idx % n;
                    (i != j).then_some((t, i, j))
                });
                let s = NetworkSeries::from_edges(n, 4, edges).unwrap();
                for (i, j) in pairs(n) {
                    for (t, o) in s.dyad_outcomes(i, j).unwrap().into_iter().enumerate() {
                        prop_assert_eq!(o.bits(), (s.get(t, i, j), s.get(t, j, i)));
                        prop_assert_eq!(DyadOutcome::from_bits(o.bits().0, o.bits().1), o);
                    }
                }
            }
        }
    }
}
