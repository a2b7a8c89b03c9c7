//! Built-in regressors: gradient-boosted regression trees and k-nearest neighbours.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt;
use crate::seeding;

/// Learner configuration. Serialized with a `kind` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LearnerKind {
    /// Least-squares gradient boosting of depth-limited trees.
    #[serde(alias = "boosted_stumps")]
    BoostedTrees {
        #[serde(default = "default_rounds")]
        rounds: usize,
        #[serde(default = "default_rate", with = "numfmt::float")]
        learning_rate: f64,
        #[serde(default = "default_depth")]
        max_depth: usize,
        #[serde(default = "default_min_leaf")]
        min_leaf: usize,
        /// Fraction of training rows drawn without replacement per round.
        #[serde(default = "default_subsample", with = "numfmt::float")]
        subsample: f64,
    },
    /// Mean outcome of the `k` nearest training rows in standardized
    /// covariates; `k = ceil(n^(2/3))` when unset.
    KNearest {
        #[serde(default)]
        k: Option<usize>,
    },
}

fn default_rounds() -> usize {
    200
}
fn default_rate() -> f64 {
    0.1
}
fn default_depth() -> usize {
    1
}
fn default_min_leaf() -> usize {
    1
}
fn default_subsample() -> f64 {
    1.0
}

impl Default for LearnerKind {
    fn default() -> Self {
        LearnerKind::BoostedTrees {
            rounds: default_rounds(),
            learning_rate: default_rate(),
            max_depth: default_depth(),
            min_leaf: default_min_leaf(),
            subsample: default_subsample(),
        }
    }
}

/// Learner choice and hyperparameters. Randomness (row subsampling) is
/// seeded by the caller at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
}

impl LearnerSpec {
    pub fn boosted_stumps() -> Self {
        LearnerSpec { kind: LearnerKind::default() }
    }

    pub fn boosted(rounds: usize, learning_rate: f64, max_depth: usize) -> Self {
        LearnerSpec {
            kind: LearnerKind::BoostedTrees {
                rounds,
                learning_rate,
                max_depth,
                min_leaf: default_min_leaf(),
                subsample: default_subsample(),
            },
        }
    }

    pub fn k_nearest(k: Option<usize>) -> Self {
        LearnerSpec { kind: LearnerKind::KNearest { k } }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            LearnerKind::BoostedTrees { rounds, learning_rate, max_depth, min_leaf, subsample } => {
                if rounds == 0 {
                    return Err(Error::Invalid("boosting needs at least one round".into()));
                }
                if !(learning_rate > 0.0 && learning_rate <= 1.0) {
                    return Err(Error::Invalid(format!("learning rate {learning_rate} not in (0, 1]")));
                }
                if max_depth == 0 || max_depth > 16 {
                    return Err(Error::Invalid(format!("tree depth {max_depth} not in [1, 16]")));
                }
                if min_leaf == 0 {
                    return Err(Error::Invalid("min_leaf must be at least 1".into()));
                }
                if !(subsample > 0.0 && subsample <= 1.0) {
                    return Err(Error::Invalid(format!("subsample {subsample} not in (0, 1]")));
                }
            }
            LearnerKind::KNearest { k } => {
                if k == Some(0) {
                    return Err(Error::Invalid("k-nearest needs k >= 1".into()));
                }
            }
        }
        Ok(())
    }
}

/// A trained regressor.
#[derive(Debug, Clone)]
pub enum FittedModel {
    Boosted(BoostedModel),
    Knn(KnnModel),
}

impl FittedModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            FittedModel::Boosted(m) => m.predict(x),
            FittedModel::Knn(m) => m.predict(x),
        }
    }

    /// Predictions for a row-major block of rows.
    pub fn predict_rows(&self, x: &[f64], k_x: usize) -> Vec<f64> {
        x.chunks_exact(k_x).map(|r| self.predict(r)).collect()
    }
}

/// Fits `spec` to rows `x` (row-major, `k_x` columns) and targets `y`.
pub fn fit_learner(spec: &LearnerSpec, x: &[f64], k_x: usize, y: &[f64], seed: u64) -> Result<FittedModel> {
    spec.validate()?;
    if y.is_empty() {
        return Err(Error::Numerical("cannot fit a learner on zero rows".into()));
    }
    if k_x == 0 || x.len() != y.len() * k_x {
        return Err(Error::Invalid(format!(
            "learner input has {} values for {} rows of width {k_x}",
            x.len(),
            y.len()
        )));
    }
    Ok(match spec.kind {
        LearnerKind::BoostedTrees { rounds, learning_rate, max_depth, min_leaf, subsample } => {
            let p = BoostParams { rounds, learning_rate, max_depth, min_leaf, subsample };
            FittedModel::Boosted(BoostedModel::fit(x, k_x, y, &p, seed))
        }
        LearnerKind::KNearest { k } => {
            let n = y.len();
            let k = k.unwrap_or_else(|| (n as f64).powf(2.0 / 3.0).ceil() as usize).clamp(1, n);
            FittedModel::Knn(KnnModel::fit(x, k_x, y, k))
        }
    })
}

struct BoostParams {
    rounds: usize,
    learning_rate: f64,
    max_depth: usize,
    min_leaf: usize,
    subsample: f64,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split { feature, threshold, left, right } => {
                    at = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoostedModel {
    base: f64,
    trees: Vec<Tree>,
}

#[derive(Clone, Copy)]
struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
    left_sum: f64,
    left_count: usize,
}

impl BoostedModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut s = self.base;
        for t in &self.trees {
            s += t.predict(x);
        }
        s
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    fn fit(x: &[f64], k_x: usize, y: &[f64], p: &BoostParams, seed: u64) -> BoostedModel {
        let n = y.len();
        let constant = y.iter().all(|&v| v == y[0]);
        let base = if constant { y[0] } else { y.iter().sum::<f64>() / n as f64 };
        if constant {
            return BoostedModel { base, trees: vec![] };
        }
        let sorted: Vec<Vec<u32>> = (0..k_x)
            .map(|j| {
                let mut idx: Vec<u32> = (0..n as u32).collect();
                idx.sort_by(|&a, &b| x[a as usize * k_x + j].total_cmp(&x[b as usize * k_x + j]));
                idx
            })
            .collect();
        let mut fitted = vec![base; n];
        let mut residual = vec![0.0; n];
        let mut node_of = vec![u32::MAX; n];
        let mut rng = seeding::rng(seed, &[seeding::stream::LEARNER]);
        let n_sample = ((p.subsample * n as f64).round() as usize).clamp(1, n);
        let mut trees = Vec::with_capacity(p.rounds);

        for _ in 0..p.rounds {
            for i in 0..n {
                residual[i] = y[i] - fitted[i];
            }
            node_of.iter_mut().for_each(|v| *v = u32::MAX);
            if n_sample < n {
                for i in index::sample(&mut rng, n, n_sample).into_iter() {
                    node_of[i] = 0;
                }
            } else {
                node_of.iter_mut().for_each(|v| *v = 0);
            }
            let tree = grow_tree(x, k_x, &residual, &sorted, &mut node_of, p);
            for i in 0..n {
                fitted[i] += tree.predict(&x[i * k_x..(i + 1) * k_x]);
            }
            trees.push(tree);
        }
        BoostedModel { base, trees }
    }
}

/// Grows one tree level by level. `node_of[i]` is the node holding sampled
/// row `i` (`u32::MAX` for rows outside the round's subsample).
fn grow_tree(
    x: &[f64],
    k_x: usize,
    r: &[f64],
    sorted: &[Vec<u32>],
    node_of: &mut [u32],
    p: &BoostParams,
) -> Tree {
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut ss = 0.0;
    for (i, &v) in node_of.iter().enumerate() {
        if v != u32::MAX {
            sum += r[i];
            count += 1;
            ss += r[i] * r[i];
        }
    }
    let mut nodes = vec![Node::Leaf(0.0)];
    // (node id, residual sum, row count) for nodes that may still split
    let mut frontier = vec![(0usize, sum, count)];
    let min_gain = 1e-12 * ss;

    for _depth in 0..p.max_depth {
        if frontier.is_empty() || ss == 0.0 {
            break;
        }
        let mut slot_of = vec![usize::MAX; nodes.len()];
        for (s, &(id, _, _)) in frontier.iter().enumerate() {
            slot_of[id] = s;
        }
        let mut best: Vec<Option<BestSplit>> = vec![None; frontier.len()];
        let mut run_sum = vec![0.0; frontier.len()];
        let mut run_count = vec![0usize; frontier.len()];
        let mut last = vec![f64::NAN; frontier.len()];
        for (j, order) in sorted.iter().enumerate() {
            run_sum.iter_mut().for_each(|v| *v = 0.0);
            run_count.iter_mut().for_each(|v| *v = 0);
            for &i in order {
                let i = i as usize;
                let id = node_of[i];
                if id == u32::MAX {
                    continue;
                }
                let s = slot_of[id as usize];
                if s == usize::MAX {
                    continue;
                }
                let v = x[i * k_x + j];
                let (_, tot_sum, tot_count) = frontier[s];
                let nl = run_count[s];
                let nr = tot_count - nl;
                if nl >= p.min_leaf && nr >= p.min_leaf && v > last[s] {
                    let sl = run_sum[s];
                    let sr = tot_sum - sl;
                    let gain = sl * sl / nl as f64 + sr * sr / nr as f64
                        - tot_sum * tot_sum / tot_count as f64;
                    // strict improvement keeps the first (lowest feature, lowest midpoint) on ties
                    if gain > min_gain && best[s].map_or(true, |b| gain > b.gain) {
                        best[s] = Some(BestSplit {
                            gain,
                            feature: j,
                            threshold: 0.5 * (last[s] + v),
                            left_sum: sl,
                            left_count: nl,
                        });
                    }
                }
                run_sum[s] += r[i];
                run_count[s] += 1;
                last[s] = v;
            }
            last.iter_mut().for_each(|v| *v = f64::NAN);
        }

        let mut next = Vec::new();
        let mut child_of = vec![(u32::MAX, u32::MAX, 0usize, 0.0); frontier.len()];
        for (s, &(id, tot_sum, tot_count)) in frontier.iter().enumerate() {
            match best[s] {
                Some(b) => {
                    let left = nodes.len();
                    nodes.push(Node::Leaf(0.0));
                    nodes.push(Node::Leaf(0.0));
                    nodes[id] = Node::Split { feature: b.feature, threshold: b.threshold, left, right: left + 1 };
                    child_of[s] = (left as u32, left as u32 + 1, b.feature, b.threshold);
                    next.push((left, b.left_sum, b.left_count));
                    next.push((left + 1, tot_sum - b.left_sum, tot_count - b.left_count));
                }
                None => {
                    nodes[id] = Node::Leaf(p.learning_rate * tot_sum / tot_count as f64);
                }
            }
        }
        for (i, v) in node_of.iter_mut().enumerate() {
            if *v == u32::MAX {
                continue;
            }
            let s = slot_of[*v as usize];
            if s == usize::MAX {
                continue;
            }
            let (l, rgt, f, t) = child_of[s];
            if l != u32::MAX {
                *v = if x[i * k_x + f] <= t { l } else { rgt };
            }
        }
        frontier = next;
    }
    for (id, tot_sum, tot_count) in frontier {
        nodes[id] = Node::Leaf(p.learning_rate * tot_sum / tot_count as f64);
    }
    Tree { nodes }
}

#[derive(Debug, Clone)]
pub struct KnnModel {
    k: usize,
    k_x: usize,
    mean: Vec<f64>,
    scale: Vec<f64>,
    points: Vec<f64>,
    y: Vec<f64>,
    tree: Vec<KdNode>,
    order: Vec<u32>,
}

#[derive(Debug, Clone)]
enum KdNode {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: f64, left: usize, right: usize },
}

const KD_LEAF: usize = 16;

#[derive(PartialEq)]
struct Cand(f64, u32);

impl Eq for Cand {}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cand {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

impl KnnModel {
    fn fit(x: &[f64], k_x: usize, y: &[f64], k: usize) -> KnnModel {
        let n = y.len();
        let mut mean = vec![0.0; k_x];
        let mut scale = vec![0.0; k_x];
        for j in 0..k_x {
            let m = (0..n).map(|i| x[i * k_x + j]).sum::<f64>() / n as f64;
            let v = (0..n).map(|i| (x[i * k_x + j] - m).powi(2)).sum::<f64>() / n as f64;
            mean[j] = m;
            scale[j] = if v > 0.0 { v.sqrt() } else { 1.0 };
        }
        let points: Vec<f64> = (0..n * k_x).map(|t| (x[t] - mean[t % k_x]) / scale[t % k_x]).collect();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut tree = Vec::new();
        build_kd(&points, k_x, &mut order, 0, n, &mut tree);
        KnnModel { k, k_x, mean, scale, points, y: y.to_vec(), tree, order }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Training indices of the `k` nearest rows, ties broken by lower index.
    pub fn neighbours(&self, x: &[f64]) -> Vec<u32> {
        let q: Vec<f64> = (0..self.k_x).map(|j| (x[j] - self.mean[j]) / self.scale[j]).collect();
        let mut heap = BinaryHeap::with_capacity(self.k + 1);
        self.search(0, &q, &mut heap);
        let mut idx: Vec<u32> = heap.into_iter().map(|c| c.1).collect();
        idx.sort_unstable();
        idx
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let idx = self.neighbours(x);
        // centred on the first neighbour so identical targets average exactly
        let first = self.y[idx[0] as usize];
        first + idx.iter().map(|&i| self.y[i as usize] - first).sum::<f64>() / idx.len() as f64
    }

    fn search(&self, node: usize, q: &[f64], heap: &mut BinaryHeap<Cand>) {
        match self.tree[node] {
            KdNode::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let p = &self.points[i as usize * self.k_x..(i as usize + 1) * self.k_x];
                    let d: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                    let c = Cand(d, i);
                    if heap.len() < self.k {
                        heap.push(c);
                    } else if c < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            KdNode::Split { dim, value, left, right } => {
                let diff = q[dim] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, heap);
                if heap.len() < self.k || diff * diff <= heap.peek().unwrap().0 {
                    self.search(far, q, heap);
                }
            }
        }
    }
}

fn build_kd(points: &[f64], k_x: usize, order: &mut [u32], start: usize, end: usize, tree: &mut Vec<KdNode>) -> usize {
    let id = tree.len();
    if end - start <= KD_LEAF {
        tree.push(KdNode::Leaf { start, end });
        return id;
    }
    let slice = &mut order[start..end];
    let mut dim = 0;
    let mut widest = -1.0;
    for j in 0..k_x {
        let (lo, hi) = slice.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            let v = points[i as usize * k_x + j];
            (lo.min(v), hi.max(v))
        });
        if hi - lo > widest {
            widest = hi - lo;
            dim = j;
        }
    }
    if widest <= 0.0 {
        tree.push(KdNode::Leaf { start, end });
        return id;
    }
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        points[a as usize * k_x + dim]
            .total_cmp(&points[b as usize * k_x + dim])
            .then(a.cmp(&b))
    });
    let value = points[slice[mid] as usize * k_x + dim];
    tree.push(KdNode::Leaf { start, end });
    let left = build_kd(points, k_x, order, start, start + mid, tree);
    let right = build_kd(points, k_x, order, start + mid, end, tree);
    tree[id] = KdNode::Split { dim, value, left, right };
    id
}
