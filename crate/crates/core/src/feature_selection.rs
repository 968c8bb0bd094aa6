//! Relevant feature test: rank each dimension by how well a single binary
//! split of its dynamic range explains the labels, then keep the best few
//! per representation kind.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::representations::Kind;
use crate::scalar::Scalar;
use crate::tensor::Matrix;

/// Candidate split thresholds for one column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionGrid {
    /// `P` equally spaced interior points of `[min, max]`.
    Uniform(usize),
    /// Every midpoint between consecutive distinct values.
    Exhaustive,
}

impl Default for PartitionGrid {
    fn default() -> Self {
        PartitionGrid::Uniform(16)
    }
}

/// Sorted labels with prefix sums, centred for numerical stability.
struct Prefix<T> {
    xs: Vec<T>,
    sum: Vec<T>,
    sq: Vec<T>,
}

impl<T: Scalar> Prefix<T> {
    fn new(column: &[T], labels: &[T]) -> Self {
        let n = T::from_usize_exact(labels.len());
        let mean = labels.iter().copied().sum::<T>() / n;
        let mut pairs: Vec<(T, T)> = column
            .iter()
            .copied()
            .zip(labels.iter().map(|&y| y - mean))
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));
        let mut sum = Vec::with_capacity(pairs.len() + 1);
        let mut sq = Vec::with_capacity(pairs.len() + 1);
        let (mut s, mut q) = (T::zero(), T::zero());
        sum.push(s);
        sq.push(q);
        for &(_, y) in &pairs {
            s += y;
            q += y * y;
            sum.push(s);
            sq.push(q);
        }
        Self {
            xs: pairs.into_iter().map(|p| p.0).collect(),
            sum,
            sq,
        }
    }

    fn len(&self) -> usize {
        self.xs.len()
    }

    fn sse(&self, lo: usize, hi: usize) -> T {
        let k = T::from_usize_exact(hi - lo);
        let s = self.sum[hi] - self.sum[lo];
        (self.sq[hi] - self.sq[lo] - s * s / k).max(T::zero())
    }

    /// Weighted MSE when the first `left` sorted samples go left.
    fn split_loss(&self, left: usize) -> T {
        let n = self.len();
        (self.sse(0, left) + self.sse(left, n)) / T::from_usize_exact(n)
    }

    fn variance(&self) -> T {
        self.sse(0, self.len()) / T::from_usize_exact(self.len())
    }
}

/// Population variance of `labels`.
pub fn label_variance<T: Scalar>(labels: &[T]) -> T {
    if labels.is_empty() {
        return T::zero();
    }
    let n = T::from_usize_exact(labels.len());
    let mean = labels.iter().copied().sum::<T>() / n;
    labels.iter().map(|&y| (y - mean) * (y - mean)).sum::<T>() / n
}

/// Smallest weighted MSE over the grid's split points; the no-split loss
/// (label variance) when no split separates the samples.
pub fn rft_loss<T: Scalar>(column: &[T], labels: &[T], grid: PartitionGrid) -> T {
    assert_eq!(
        column.len(),
        labels.len(),
        "column and labels differ in length"
    );
    if labels.len() < 2 {
        return T::zero();
    }
    let p = Prefix::new(column, labels);
    let n = p.len();
    let mut best = p.variance();
    let (lo, hi) = (p.xs[0], p.xs[n - 1]);
    if lo == hi {
        return best;
    }
    match grid {
        PartitionGrid::Uniform(parts) => {
            let span = hi - lo;
            let denom = T::from_usize_exact(parts + 1);
            let mut last = usize::MAX;
            for k in 1..=parts {
                let t = lo + span * T::from_usize_exact(k) / denom;
                let left = p.xs.partition_point(|&x| x <= t);
                if left == 0 || left == n || left == last {
                    continue;
                }
                last = left;
                best = best.min(p.split_loss(left));
            }
        }
        PartitionGrid::Exhaustive => {
            for left in 1..n {
                if p.xs[left - 1] < p.xs[left] {
                    best = best.min(p.split_loss(left));
                }
            }
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct RftResult<T> {
    pub kind: Kind,
    pub losses: Vec<T>,
    /// Column indices by ascending loss, ties by lower index.
    pub ranking: Vec<usize>,
}

impl<T> RftResult<T> {
    pub fn dim(&self) -> usize {
        self.losses.len()
    }
}

/// Scores every column of `features` (rows are samples).
pub fn run_rft<T: Scalar>(
    features: &Matrix<T>,
    labels: &[T],
    kind: Kind,
    grid: PartitionGrid,
) -> Result<RftResult<T>> {
    if features.rows != labels.len() {
        return Err(Error::shape(format!(
            "{} feature rows but {} labels",
            features.rows,
            labels.len()
        )));
    }
    if labels.iter().any(|y| !y.is_finite()) || features.data.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input(
            "non-finite value in relevance test input".into(),
        ));
    }
    let losses: Vec<T> = (0..features.cols)
        .into_par_iter()
        .map(|j| rft_loss(&features.column(j), labels, grid))
        .collect();
    let mut ranking: Vec<usize> = (0..losses.len()).collect();
    ranking.sort_by(|&a, &b| losses[a].partial_cmp(&losses[b]).expect("finite losses"));
    Ok(RftResult {
        kind,
        losses,
        ranking,
    })
}

/// Default per-kind selection counts, in [`Kind::ALL`] order.
pub const DEFAULT_COUNTS: [usize; 4] = [220, 200, 140, 240];

/// Indices kept per kind, in [`Kind::ALL`] order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureSelector {
    pub counts: [usize; 4],
    pub selected: [Vec<usize>; 4],
}

impl FeatureSelector {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Concatenates the selected entries of the four representation vectors.
    pub fn gather<T: Copy>(&self, vectors: [&[T]; 4]) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(self.total());
        for (kind, (idx, v)) in Kind::ALL.iter().zip(self.selected.iter().zip(vectors)) {
            if let Some(&bad) = idx.iter().find(|&&i| i >= v.len()) {
                return Err(Error::shape(format!(
                    "{} vector has {} entries, selector needs index {bad}",
                    kind.name(),
                    v.len()
                )));
            }
            out.extend(idx.iter().map(|&i| v[i]));
        }
        Ok(out)
    }
}

/// Keeps the top `counts[k]` ranked dimensions of each kind.
pub fn select_features<T>(
    results: &[RftResult<T>; 4],
    counts: [usize; 4],
) -> Result<FeatureSelector> {
    let mut selected: [Vec<usize>; 4] = Default::default();
    for (i, kind) in Kind::ALL.iter().enumerate() {
        let r = &results[i];
        if r.kind != *kind {
            return Err(Error::config(format!(
                "relevance results out of order: slot {i} holds {}",
                r.kind.name()
            )));
        }
        if counts[i] > r.dim() {
            return Err(Error::config(format!(
                "cannot select {} {} features from {} dimensions",
                counts[i],
                kind.name(),
                r.dim()
            )));
        }
        selected[i] = r.ranking[..counts[i]].to_vec();
    }
    Ok(FeatureSelector { counts, selected })
}
