//! Random forest classifier for a binary target: bootstrap bagging, Gini
//! splits on per-node random feature subsets, out-of-bag error and
//! mean-decrease-impurity importance.

use std::cmp::Ordering;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per node; `None` means `floor(sqrt(p))`.
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_trees: 500, mtry: None, min_leaf: 1, max_depth: None, seed: 0 }
    }
}

impl ForestParams {
    pub fn with_seed(&self, seed: u64) -> Self {
        ForestParams { seed, ..self.clone() }
    }

    pub fn resolved_mtry(&self, p: usize) -> usize {
        self.mtry.unwrap_or_else(|| (p as f64).sqrt().floor() as usize).clamp(1, p.max(1))
    }
}

/// Gini impurity `1 - sum p_i^2` of a two-class count pair.
pub fn gini(counts: [u64; 2]) -> Result<f64> {
    let n = counts[0] + counts[1];
    if n == 0 {
        return Err(Error::EmptyNode);
    }
    let (a, b) = (counts[0] as f64 / n as f64, counts[1] as f64 / n as f64);
    Ok(1.0 - a * a - b * b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize, counts: [u64; 2] },
    Leaf { counts: [u64; 2] },
}

impl Node {
    pub fn counts(&self) -> [u64; 2] {
        match *self {
            Node::Split { counts, .. } | Node::Leaf { counts } => counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
    /// Sorted training-row indices drawn with replacement.
    pub bootstrap: Vec<usize>,
}

impl Tree {
    fn leaf_for(&self, row: &[f64]) -> &Node {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Split { feature, threshold, left, right, .. } => {
                    at = if row[feature] < threshold { left } else { right };
                }
                ref leaf @ Node::Leaf { .. } => return leaf,
            }
        }
    }

    /// Majority class of the reached leaf, ties to class 0.
    pub fn vote(&self, row: &[f64]) -> u8 {
        let c = self.leaf_for(row).counts();
        u8::from(c[1] > c[0])
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
                Node::Leaf { .. } => 0,
            }
        }
        go(&self.nodes, 0)
    }

    /// Mask of rows (out of `n`) that the bootstrap never drew.
    pub fn out_of_bag(&self, n: usize) -> Vec<bool> {
        let mut oob = vec![true; n];
        for &r in &self.bootstrap {
            oob[r] = false;
        }
        oob
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OobReport {
    pub error: f64,
    /// Rows that were out of bag for at least one tree.
    pub coverage: usize,
    /// Fraction of out-of-bag trees voting class 1, per training row.
    pub scores: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub version: u32,
    pub params: ForestParams,
    pub n_features: usize,
    pub n_train: usize,
    pub trees: Vec<Tree>,
    pub oob_error: f64,
    pub oob_coverage: usize,
    pub importance: Importance,
}

/// Per-feature rank encoding of the training matrix.
struct Binned {
    /// `bins[f][row]` is the position of the row's value among the sorted
    /// unique values of feature `f`.
    bins: Vec<Vec<u32>>,
    uniques: Vec<Vec<f64>>,
}

impl Binned {
    fn new(x: &Matrix) -> Self {
        let mut bins = Vec::with_capacity(x.n_cols());
        let mut uniques = Vec::with_capacity(x.n_cols());
        for f in 0..x.n_cols() {
            let col = x.column(f);
            let mut u = col.clone();
            u.sort_by(f64::total_cmp);
            u.dedup();
            bins.push(col.iter().map(|v| u.binary_search_by(|p| p.total_cmp(v)).unwrap() as u32).collect());
            uniques.push(u);
        }
        Binned { bins, uniques }
    }
}

/// Row order that depends only on row contents, so bootstrap draws do not
/// depend on how the input rows happen to be ordered.
fn canonical_order(x: &Matrix, y: &[u8]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.n_rows()).collect();
    idx.sort_by(|&a, &b| {
        x.row(a)
            .iter()
            .zip(x.row(b))
            .map(|(u, v)| u.total_cmp(v))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
            .then(y[a].cmp(&y[b]))
            .then(a.cmp(&b))
    });
    idx
}

/// Split score to maximise: `sum_children (c0^2 + c1^2) / n_child`, kept as
/// an exact fraction so equal-impurity candidates compare equal.
#[derive(Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn of(l: [u64; 2], r: [u64; 2]) -> Self {
        let (nl, nr) = ((l[0] + l[1]) as u128, (r[0] + r[1]) as u128);
        let a = (l[0] as u128).pow(2) + (l[1] as u128).pow(2);
        let b = (r[0] as u128).pow(2) + (r[1] as u128).pow(2);
        Score { num: a * nr + b * nl, den: nl * nr }
    }

    fn cmp(&self, other: &Score) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    bin: u32,
    score: Score,
}

struct Grower<'a> {
    data: &'a Binned,
    y: &'a [u8],
    params: &'a ForestParams,
    mtry: usize,
}

impl Grower<'_> {
    fn counts(&self, samples: &[usize]) -> [u64; 2] {
        let mut c = [0u64; 2];
        for &s in samples {
            c[self.y[s] as usize] += 1;
        }
        c
    }

    /// Best threshold on one feature, or `None` if the feature is constant
    /// in the node. The flag reports whether the feature varied.
    fn best_on_feature(&self, f: usize, samples: &[usize], total: [u64; 2]) -> (bool, Option<Candidate>) {
        let bins = &self.data.bins[f];
        let n_bins = self.data.uniques[f].len();
        // class counts per distinct value present, in ascending value order
        let mut hist: Vec<(u32, [u64; 2])> = if n_bins <= 2 * samples.len() {
            let mut h = vec![[0u64; 2]; n_bins];
            for &s in samples {
                h[bins[s] as usize][self.y[s] as usize] += 1;
            }
            h.into_iter()
                .enumerate()
                .filter(|(_, c)| c[0] + c[1] > 0)
                .map(|(b, c)| (b as u32, c))
                .collect()
        } else {
            let mut v: Vec<(u32, u8)> = samples.iter().map(|&s| (bins[s], self.y[s])).collect();
            v.sort_unstable();
            let mut h: Vec<(u32, [u64; 2])> = Vec::new();
            for (b, c) in v {
                match h.last_mut() {
                    Some((lb, cnt)) if *lb == b => cnt[c as usize] += 1,
                    _ => {
                        let mut cnt = [0u64; 2];
                        cnt[c as usize] += 1;
                        h.push((b, cnt));
                    }
                }
            }
            h
        };
        if hist.len() < 2 {
            return (false, None);
        }
        let min_leaf = self.params.min_leaf as u64;
        let mut best: Option<Candidate> = None;
        let mut left = [0u64; 2];
        let last = hist.len() - 1;
        for i in 0..last {
            let (b, c) = hist[i];
            left[0] += c[0];
            left[1] += c[1];
            let right = [total[0] - left[0], total[1] - left[1]];
            if left[0] + left[1] < min_leaf || right[0] + right[1] < min_leaf {
                continue;
            }
            let score = Score::of(left, right);
            if best.as_ref().is_none_or(|bc| score.cmp(&bc.score) == Ordering::Greater) {
                let lo = self.data.uniques[f][b as usize];
                let hi = self.data.uniques[f][hist[i + 1].0 as usize];
                let mut t = lo + (hi - lo) / 2.0;
                if t >= hi || t <= lo {
                    t = hi;
                }
                best = Some(Candidate { feature: f, threshold: t, bin: b, score });
            }
        }
        hist.clear();
        (true, best)
    }

    fn grow(&self, samples: &mut [usize], r: &mut rng::StreamRng) -> Vec<Node> {
        let p = self.data.bins.len();
        let mut nodes: Vec<Node> = Vec::new();
        // (node slot, lo, hi, depth)
        let mut work = vec![(0usize, 0usize, samples.len(), 0usize)];
        nodes.push(Node::Leaf { counts: [0, 0] });
        let mut order: Vec<usize> = (0..p).collect();
        while let Some((slot, lo, hi, depth)) = work.pop() {
            let part = &mut samples[lo..hi];
            let counts = self.counts(part);
            let n = counts[0] + counts[1];
            let stop = counts[0] == 0
                || counts[1] == 0
                || n < 2 * self.params.min_leaf as u64
                || self.params.max_depth.is_some_and(|d| depth >= d);
            let mut best: Option<Candidate> = None;
            if !stop {
                let mut varied = 0;
                for i in 0..p {
                    let j = r.random_range(i..p);
                    order.swap(i, j);
                    let f = order[i];
                    let (nonconstant, cand) = self.best_on_feature(f, part, counts);
                    if nonconstant {
                        varied += 1;
                    }
                    if let Some(c) = cand {
                        let better = match &best {
                            None => true,
                            Some(b) => match c.score.cmp(&b.score) {
                                Ordering::Greater => true,
                                Ordering::Equal => c.feature < b.feature,
                                Ordering::Less => false,
                            },
                        };
                        if better {
                            best = Some(c);
                        }
                    }
                    if varied == self.mtry {
                        break;
                    }
                }
            }
            match best {
                None => nodes[slot] = Node::Leaf { counts },
                Some(c) => {
                    let bins = &self.data.bins[c.feature];
                    let mut split = 0;
                    for k in 0..part.len() {
                        if bins[part[k]] <= c.bin {
                            part.swap(k, split);
                            split += 1;
                        }
                    }
                    let left = nodes.len();
                    let right = left + 1;
                    nodes.push(Node::Leaf { counts: [0, 0] });
                    nodes.push(Node::Leaf { counts: [0, 0] });
                    nodes[slot] = Node::Split { feature: c.feature, threshold: c.threshold, left, right, counts };
                    work.push((right, lo + split, hi, depth + 1));
                    work.push((left, lo, lo + split, depth + 1));
                }
            }
        }
        nodes
    }
}

fn check_matrix(x: &Matrix) -> Result<()> {
    if x.has_missing() {
        return Err(Error::InvalidMeasure("forest input contains missing values".into()));
    }
    Ok(())
}

/// Trains `n_trees` trees, each on its own bootstrap sample with an RNG
/// stream keyed by `(seed, tree index)`.
pub fn train_forest(x: &Matrix, y: &[u8], params: &ForestParams) -> Result<ForestModel> {
    if params.n_trees == 0 || params.min_leaf == 0 {
        return Err(Error::Config("n_trees and min_leaf must be >= 1".into()));
    }
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch { column: "outcome".into(), got: y.len(), expected: x.n_rows() });
    }
    check_matrix(x)?;
    if y.iter().any(|&v| v > 1) {
        return Err(Error::InvalidOutcome("forest target must be 0/1".into()));
    }
    if !(y.contains(&0) && y.contains(&1)) {
        return Err(Error::DegenerateTarget);
    }
    let n = x.n_rows();
    let p = x.n_cols();
    let data = Binned::new(x);
    let canon = canonical_order(x, y);
    let grower = Grower { data: &data, y, params, mtry: params.resolved_mtry(p) };
    let trees: Vec<Tree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(params.seed, &[0xF0_4E57, t as u64]);
            let mut boot: Vec<usize> = (0..n).map(|_| canon[r.random_range(0..n)]).collect();
            boot.sort_unstable();
            let mut samples = boot.clone();
            let nodes = grower.grow(&mut samples, &mut r);
            Tree { nodes, bootstrap: boot }
        })
        .collect();
    let mut model = ForestModel {
        version: FORMAT_VERSION,
        params: params.clone(),
        n_features: p,
        n_train: n,
        trees,
        oob_error: 0.0,
        oob_coverage: 0,
        importance: Importance { raw: vec![], normalized: vec![] },
    };
    let oob = model.oob(x, y)?;
    model.oob_error = oob.error;
    model.oob_coverage = oob.coverage;
    model.importance = model.mdi_importance();
    Ok(model)
}

impl ForestModel {
    fn check_features(&self, x: &Matrix) -> Result<()> {
        if x.n_cols() != self.n_features {
            return Err(Error::FeatureMismatch { expected: self.n_features, got: x.n_cols() });
        }
        check_matrix(x)
    }

    /// Fraction of trees voting class 1, per row.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        self.check_features(x)?;
        let t = self.trees.len() as f64;
        Ok((0..x.n_rows())
            .into_par_iter()
            .map(|i| {
                let row = x.row(i);
                self.trees.iter().map(|tr| tr.vote(row) as f64).sum::<f64>() / t
            })
            .collect())
    }

    /// Majority vote; an even split goes to class 0.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<u8>> {
        Ok(self.predict_proba(x)?.into_iter().map(|p| u8::from(p > 0.5)).collect())
    }

    /// Out-of-bag votes for the training data, recounted from the stored
    /// bootstrap samples. Rows never out of bag are left out of the error.
    pub fn oob(&self, x: &Matrix, y: &[u8]) -> Result<OobReport> {
        self.check_features(x)?;
        if x.n_rows() != self.n_train || y.len() != self.n_train {
            return Err(Error::LengthMismatch { column: "oob rows".into(), got: x.n_rows(), expected: self.n_train });
        }
        let n = self.n_train;
        let mut ones = vec![0u32; n];
        let mut total = vec![0u32; n];
        for tree in &self.trees {
            let oob = tree.out_of_bag(n);
            for i in (0..n).filter(|&i| oob[i]) {
                total[i] += 1;
                ones[i] += u32::from(tree.vote(x.row(i)));
            }
        }
        let mut wrong = 0usize;
        let mut covered = 0usize;
        let mut scores = vec![None; n];
        for i in 0..n {
            if total[i] == 0 {
                continue;
            }
            covered += 1;
            scores[i] = Some(ones[i] as f64 / total[i] as f64);
            let label = u8::from(2 * ones[i] > total[i]);
            if label != y[i] {
                wrong += 1;
            }
        }
        let error = if covered == 0 { 0.0 } else { wrong as f64 / covered as f64 };
        Ok(OobReport { error, coverage: covered, scores })
    }

    /// Weighted Gini decrease summed per feature over every split of every tree.
    pub fn mdi_importance(&self) -> Importance {
        let mut raw = vec![0.0; self.n_features];
        for tree in &self.trees {
            let n_total = tree.bootstrap.len() as f64;
            for node in &tree.nodes {
                if let Node::Split { feature, left, right, counts, .. } = *node {
                    let n_node = (counts[0] + counts[1]) as f64;
                    let mut child = 0.0;
                    for c in [left, right] {
                        let cc = tree.nodes[c].counts();
                        child += (cc[0] + cc[1]) as f64 / n_node * gini(cc).unwrap_or(0.0);
                    }
                    let g = gini(counts).unwrap_or(0.0);
                    raw[feature] += n_node / n_total * (g - child).max(0.0);
                }
            }
        }
        let sum: f64 = raw.iter().sum();
        let normalized = if sum > 0.0 { raw.iter().map(|v| v / sum).collect() } else { vec![0.0; raw.len()] };
        Importance { raw, normalized }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: ForestModel = serde_json::from_str(text)?;
        if m.version != FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported forest format version {}", m.version)));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n_trees: usize, seed: u64) -> ForestParams {
        ForestParams { n_trees, seed, ..Default::default() }
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini([5, 5]).unwrap(), 0.5);
        assert_eq!(gini([10, 0]).unwrap(), 0.0);
        assert!((gini([3, 1]).unwrap() - 0.375).abs() < 1e-15);
        assert_eq!(gini([0, 0]), Err(Error::EmptyNode));
    }

    fn separable(n: usize) -> (Matrix, Vec<u8>) {
        let y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![((i * 7) % 5) as f64, y[i] as f64, ((i * 3) % 4) as f64]).collect();
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn perfect_separator() {
        let (x, y) = separable(60);
        let m = train_forest(&x, &y, &params(25, 3)).unwrap();
        assert_eq!(m.predict(&x).unwrap(), y);
        assert!(m.oob_error < 0.05);
        let all = ForestParams { mtry: Some(3), ..params(25, 3) };
        let m = train_forest(&x, &y, &all).unwrap();
        assert!(m.importance.normalized[1] >= 0.99);
        let s: f64 = m.importance.normalized.iter().sum();
        assert!((s - 1.0).abs() < 1e-9);
    }

    #[test]
    fn stumps_vote_bootstrap_majority() {
        let (x, y) = separable(40);
        let p = ForestParams { max_depth: Some(0), ..params(5, 1) };
        let m = train_forest(&x, &y, &p).unwrap();
        for t in &m.trees {
            assert_eq!(t.nodes.len(), 1);
            let ones = t.bootstrap.iter().filter(|&&r| y[r] == 1).count();
            let want = u8::from(2 * ones > t.bootstrap.len());
            assert_eq!(t.vote(x.row(0)), want);
        }
        assert!(m.importance.raw.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_class_rejected() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert_eq!(train_forest(&x, &[1, 1], &params(3, 0)), Err(Error::DegenerateTarget));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let (x, y) = separable(20);
        let m = train_forest(&x, &y, &params(3, 0)).unwrap();
        let bad = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert_eq!(m.predict_proba(&bad), Err(Error::FeatureMismatch { expected: 3, got: 2 }));
    }

    #[test]
    fn two_tree_split_vote_is_half_and_class_zero() {
        let (x, y) = separable(30);
        let m = train_forest(&x, &y, &params(2, 0)).unwrap();
        let mut forced = m.clone();
        forced.trees[0].nodes = vec![Node::Leaf { counts: [0, 3] }];
        forced.trees[1].nodes = vec![Node::Leaf { counts: [3, 0] }];
        assert_eq!(forced.predict_proba(&x).unwrap()[0], 0.5);
        assert_eq!(forced.predict(&x).unwrap()[0], 0);
    }

    #[test]
    fn json_round_trip() {
        let (x, y) = separable(20);
        let m = train_forest(&x, &y, &params(4, 9)).unwrap();
        let back = ForestModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back.predict_proba(&x).unwrap(), m.predict_proba(&x).unwrap());
        assert_eq!(back.trees, m.trees);
    }

    #[test]
    fn thresholds_are_midpoints() {
        let x = Matrix::from_rows(&[vec![1.0], vec![1.0], vec![3.0], vec![3.0]]).unwrap();
        let m = train_forest(&x, &[0, 0, 1, 1], &params(10, 2)).unwrap();
        for t in &m.trees {
            if let Node::Split { threshold, .. } = t.nodes[0] {
                assert_eq!(threshold, 2.0);
            }
        }
    }
}
