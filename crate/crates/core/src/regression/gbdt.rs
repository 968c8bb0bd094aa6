//! Squared-error gradient boosting with exact greedy regression trees.
//!
//! Feature orders are presorted once. Each tree grows level by level: for a
//! level, one pass per feature over its sorted samples evaluates every split
//! of every open node at once. Features are scanned in parallel and reduced
//! in index order, so results do not depend on the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub max_depth: usize,
    pub subsample: f64,
    pub max_trees: usize,
    pub learning_rate: f64,
    pub early_stop_patience: usize,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_depth: 5,
            subsample: 0.6,
            max_trees: 2000,
            learning_rate: 0.05,
            early_stop_patience: 50,
            min_samples_leaf: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::config(format!(
                "subsample must be in (0, 1], got {}",
                self.subsample
            )));
        }
        if self.max_trees == 0 {
            return Err(Error::config("max_trees must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.max_depth == 0 {
            return Err(Error::config("max_depth must be >= 1"));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::config("min_samples_leaf must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node<T> {
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
    Leaf(T),
}

/// Nodes in creation order; the root is node 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Tree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tree<T> {
    pub fn leaf_value(&self, x: &[T]) -> T {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn go<T>(nodes: &[Node<T>], k: usize) -> usize {
            match nodes[k] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GbdtModel<T> {
    pub n_features: usize,
    pub base_score: T,
    pub learning_rate: T,
    pub trees: Vec<Tree<T>>,
}

impl<T: Scalar> GbdtModel<T> {
    /// `base + lr * sum of leaf values`.
    pub fn predict(&self, x: &[T]) -> Result<T> {
        if x.len() != self.n_features {
            return Err(Error::shape(format!(
                "model expects {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        Ok(self.predict_unchecked(x))
    }

    fn predict_unchecked(&self, x: &[T]) -> T {
        let sum = self
            .trees
            .iter()
            .fold(T::zero(), |acc, t| acc + t.leaf_value(x));
        self.base_score + self.learning_rate * sum
    }

    pub fn predict_rows(&self, x: &Matrix<T>) -> Result<Vec<T>> {
        (0..x.rows).map(|i| self.predict(x.row(i))).collect()
    }
}

/// RMSE per boosting round, index 0 being the base score alone.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainTrace<T> {
    pub train_rmse: Vec<T>,
    pub val_rmse: Vec<T>,
    /// Trees kept in the returned model.
    pub best_round: usize,
}

const UNASSIGNED: u32 = u32::MAX;

/// Features in column-major order with per-feature sorted sample orders.
struct Presorted<T> {
    order: Vec<Vec<u32>>,
    values: Vec<Vec<T>>,
}

impl<T: Scalar> Presorted<T> {
    fn new(x: &Matrix<T>) -> Self {
        let (order, values) = (0..x.cols)
            .into_par_iter()
            .map(|j| {
                let col = x.column(j);
                let mut idx: Vec<u32> = (0..x.rows as u32).collect();
                idx.sort_by(|&a, &b| {
                    col[a as usize]
                        .partial_cmp(&col[b as usize])
                        .expect("finite features")
                });
                let vals = idx.iter().map(|&i| col[i as usize]).collect();
                (idx, vals)
            })
            .unzip();
        Self { order, values }
    }
}

#[derive(Clone, Copy)]
struct Stats<T> {
    sum: T,
    count: usize,
    sumsq: T,
}

#[derive(Clone, Copy)]
struct Candidate<T> {
    gain: T,
    feature: usize,
    threshold: T,
}

fn midpoint<T: Scalar>(a: T, b: T) -> T {
    let m = a + (b - a) / T::lit(2.0);
    if m < b {
        m
    } else {
        a
    }
}

/// Fits one tree to `resid` over the rows with `node_of[i] == 0`.
/// Returns `None` when the root cannot be split.
fn grow_tree<T: Scalar>(
    x: &Matrix<T>,
    sorted: &Presorted<T>,
    resid: &[T],
    mut node_of: Vec<u32>,
    cfg: &TrainConfig,
) -> Option<Tree<T>> {
    let min_leaf = cfg.min_samples_leaf;
    let eps = T::lit(1e-10);
    let mut nodes: Vec<Node<T>> = vec![Node::Leaf(T::zero())];
    let mut frontier: Vec<usize> = vec![0];

    for _depth in 0..cfg.max_depth {
        let mut stats = vec![
            Stats {
                sum: T::zero(),
                count: 0,
                sumsq: T::zero(),
            };
            nodes.len()
        ];
        for (i, &k) in node_of.iter().enumerate() {
            if k != UNASSIGNED {
                let s = &mut stats[k as usize];
                s.sum += resid[i];
                s.count += 1;
                s.sumsq += resid[i] * resid[i];
            }
        }
        let open: Vec<usize> = frontier
            .iter()
            .copied()
            .filter(|&k| stats[k].count >= 2 * min_leaf)
            .collect();
        if open.is_empty() {
            break;
        }
        let mut slot_of = vec![usize::MAX; nodes.len()];
        for (s, &k) in open.iter().enumerate() {
            slot_of[k] = s;
        }

        let per_feature: Vec<Vec<Option<Candidate<T>>>> = (0..x.cols)
            .into_par_iter()
            .map(|j| {
                let m = open.len();
                let mut left_sum = vec![T::zero(); m];
                let mut left_cnt = vec![0usize; m];
                let mut last = vec![T::zero(); m];
                let mut best: Vec<Option<Candidate<T>>> = vec![None; m];
                for (&i, &v) in sorted.order[j].iter().zip(&sorted.values[j]) {
                    let k = node_of[i as usize];
                    if k == UNASSIGNED {
                        continue;
                    }
                    let s = slot_of[k as usize];
                    if s == usize::MAX {
                        continue;
                    }
                    let st = stats[open[s]];
                    let nl = left_cnt[s];
                    if nl >= min_leaf && st.count - nl >= min_leaf && v > last[s] {
                        let nr = st.count - nl;
                        let sl = left_sum[s];
                        let sr = st.sum - sl;
                        let gain = sl * sl / T::from_usize_exact(nl)
                            + sr * sr / T::from_usize_exact(nr)
                            - st.sum * st.sum / T::from_usize_exact(st.count);
                        if best[s].is_none_or(|b| gain > b.gain) {
                            best[s] = Some(Candidate {
                                gain,
                                feature: j,
                                threshold: midpoint(last[s], v),
                            });
                        }
                    }
                    left_sum[s] += resid[i as usize];
                    left_cnt[s] += 1;
                    last[s] = v;
                }
                best
            })
            .collect();

        let mut next = Vec::new();
        let mut split_any = false;
        for (s, &k) in open.iter().enumerate() {
            let mut best: Option<Candidate<T>> = None;
            for f in &per_feature {
                if let Some(c) = f[s] {
                    if best.is_none_or(|b| c.gain > b.gain) {
                        best = Some(c);
                    }
                }
            }
            let Some(c) = best else { continue };
            if !(c.gain > T::zero() && c.gain > eps * stats[k].sumsq) {
                continue;
            }
            let (left, right) = (nodes.len(), nodes.len() + 1);
            nodes.push(Node::Leaf(T::zero()));
            nodes.push(Node::Leaf(T::zero()));
            nodes[k] = Node::Split {
                feature: c.feature,
                threshold: c.threshold,
                left,
                right,
            };
            next.push(left);
            next.push(right);
            split_any = true;
        }
        if !split_any {
            break;
        }
        for (i, k) in node_of.iter_mut().enumerate() {
            if *k == UNASSIGNED {
                continue;
            }
            if let Node::Split {
                feature,
                threshold,
                left,
                right,
            } = nodes[*k as usize]
            {
                *k = if x.get(i, feature) <= threshold {
                    left
                } else {
                    right
                } as u32;
            }
        }
        frontier = next;
    }

    if matches!(nodes[0], Node::Leaf(_)) {
        return None;
    }
    let mut sum = vec![T::zero(); nodes.len()];
    let mut count = vec![0usize; nodes.len()];
    for (i, &k) in node_of.iter().enumerate() {
        if k != UNASSIGNED {
            sum[k as usize] += resid[i];
            count[k as usize] += 1;
        }
    }
    for (k, node) in nodes.iter_mut().enumerate() {
        if let Node::Leaf(v) = node {
            *v = if count[k] > 0 {
                sum[k] / T::from_usize_exact(count[k])
            } else {
                T::zero()
            };
        }
    }
    Some(Tree { nodes })
}

fn rmse<T: Scalar>(pred: &[T], y: &[T]) -> T {
    let sse = pred
        .iter()
        .zip(y)
        .map(|(&p, &t)| (p - t) * (p - t))
        .sum::<T>();
    (sse / T::from_usize_exact(y.len())).sqrt()
}

/// Trains a model with early stopping on the validation set.
pub fn train_gbdt<T: Scalar>(
    features: &Matrix<T>,
    labels: &[T],
    val_features: &Matrix<T>,
    val_labels: &[T],
    config: &TrainConfig,
) -> Result<GbdtModel<T>> {
    train_gbdt_traced(features, labels, val_features, val_labels, config).map(|(m, _)| m)
}

/// [`train_gbdt`] plus the per-round RMSE history.
pub fn train_gbdt_traced<T: Scalar>(
    features: &Matrix<T>,
    labels: &[T],
    val_features: &Matrix<T>,
    val_labels: &[T],
    config: &TrainConfig,
) -> Result<(GbdtModel<T>, TrainTrace<T>)> {
    config.validate()?;
    let (n, d) = (features.rows, features.cols);
    if n < 10 {
        return Err(Error::config(format!(
            "boosting needs >= 10 training rows, got {n}"
        )));
    }
    if d == 0 {
        return Err(Error::config("boosting needs at least one feature"));
    }
    if labels.len() != n || val_labels.len() != val_features.rows {
        return Err(Error::shape("feature rows and labels differ in count"));
    }
    if val_features.rows == 0 {
        return Err(Error::config("validation set is empty"));
    }
    if val_features.cols != d {
        return Err(Error::shape(format!(
            "validation features have {} columns, training has {d}",
            val_features.cols
        )));
    }
    let finite = |m: &Matrix<T>, y: &[T]| m.data.iter().chain(y).all(|v| v.is_finite());
    if !finite(features, labels) || !finite(val_features, val_labels) {
        return Err(Error::Input("non-finite value in boosting input".into()));
    }

    let base = labels.iter().copied().sum::<T>() / T::from_usize_exact(n);
    let lr = T::lit(config.learning_rate);
    let sorted = Presorted::new(features);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let take = if config.subsample >= 1.0 {
        n
    } else {
        ((config.subsample * n as f64).round() as usize).clamp(1, n)
    };

    let mut train_sum = vec![T::zero(); n];
    let mut val_sum = vec![T::zero(); val_features.rows];
    let pred = |sums: &[T]| sums.iter().map(|&s| base + lr * s).collect::<Vec<T>>();
    let mut trace = TrainTrace {
        train_rmse: vec![rmse(&pred(&train_sum), labels)],
        val_rmse: vec![rmse(&pred(&val_sum), val_labels)],
        best_round: 0,
    };
    let mut best_val = trace.val_rmse[0];
    let mut trees = Vec::new();

    for round in 1..=config.max_trees {
        let current = pred(&train_sum);
        let resid: Vec<T> = labels.iter().zip(&current).map(|(&y, &p)| y - p).collect();
        let mut node_of = vec![UNASSIGNED; n];
        if take == n {
            node_of.iter_mut().for_each(|k| *k = 0);
        } else {
            for i in rand::seq::index::sample(&mut rng, n, take) {
                node_of[i] = 0;
            }
        }
        let Some(tree) = grow_tree(features, &sorted, &resid, node_of, config) else {
            break;
        };
        for (i, s) in train_sum.iter_mut().enumerate() {
            *s += tree.leaf_value(features.row(i));
        }
        for (i, s) in val_sum.iter_mut().enumerate() {
            *s += tree.leaf_value(val_features.row(i));
        }
        trees.push(tree);
        trace.train_rmse.push(rmse(&pred(&train_sum), labels));
        let v = rmse(&pred(&val_sum), val_labels);
        trace.val_rmse.push(v);
        if v < best_val {
            best_val = v;
            trace.best_round = round;
        } else if round - trace.best_round >= config.early_stop_patience {
            break;
        }
    }
    trees.truncate(trace.best_round);
    Ok((
        GbdtModel {
            n_features: d,
            base_score: base,
            learning_rate: lr,
            trees,
        },
        trace,
    ))
}
