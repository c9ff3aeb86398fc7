//! CART-style classification trees.
//!
//! Split semantics everywhere: `value <= threshold` goes left, `value >
//! threshold` goes right. Candidate thresholds for the `best` splitter are
//! midpoints between consecutive distinct values present at the node; the
//! `random` splitter draws one uniform threshold per candidate feature.
//!
//! Split search is exact but histogram-based: every feature is pre-coded into
//! the ranks of its distinct values, so a node scan costs
//! `O(samples + distinct values × classes)` instead of a sort.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    #[default]
    Gini,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Splitter {
    #[default]
    Best,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeight {
    #[default]
    None,
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    All,
    Sqrt,
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => ((n_features as f64).sqrt() as usize).max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub class_weight: ClassWeight,
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub criterion: Criterion,
    pub splitter: Splitter,
    pub n_estimators: usize,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            class_weight: ClassWeight::None,
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            criterion: Criterion::Gini,
            splitter: Splitter::Best,
            n_estimators: 100,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_split < 2 {
            return Err(Error::Invalid("min_samples_split must be at least 2".into()));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::Invalid("min_samples_leaf must be at least 1".into()));
        }
        if self.n_estimators < 1 {
            return Err(Error::Invalid("n_estimators must be at least 1".into()));
        }
        Ok(())
    }
}

/// Gini impurity `1 - Σ p²` of a class-count vector.
pub fn gini(class_counts: &[f64]) -> Result<f64> {
    let total = checked_total(class_counts)?;
    Ok(gini_unchecked(class_counts, total))
}

/// Shannon entropy in bits, with `0 · log 0 = 0`.
pub fn entropy(class_counts: &[f64]) -> Result<f64> {
    let total = checked_total(class_counts)?;
    Ok(entropy_unchecked(class_counts, total))
}

fn checked_total(counts: &[f64]) -> Result<f64> {
    if counts.iter().any(|&c| c < 0.0 || !c.is_finite()) {
        return Err(Error::Invalid("class counts must be finite and non-negative".into()));
    }
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return Err(Error::Invalid("class counts sum to zero".into()));
    }
    Ok(total)
}

fn gini_unchecked(counts: &[f64], total: f64) -> f64 {
    1.0 - counts.iter().map(|&c| (c / total) * (c / total)).sum::<f64>()
}

fn entropy_unchecked(counts: &[f64], total: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

impl Criterion {
    fn impurity(self, counts: &[f64], total: f64) -> f64 {
        if total <= 0.0 {
            return 0.0;
        }
        match self {
            Criterion::Gini => gini_unchecked(counts, total),
            Criterion::Entropy => entropy_unchecked(counts, total),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NodeKind {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    #[serde(flatten)]
    pub kind: NodeKind,
    /// Weighted class totals of the training samples reaching this node.
    pub class_counts: Vec<f64>,
    /// Training samples reaching this node, bootstrap repeats included.
    pub n_samples: usize,
    pub impurity: f64,
    pub depth: usize,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf)
    }

    /// Class distribution of this node, normalised to sum 1.
    pub fn distribution(&self) -> Vec<f64> {
        let total: f64 = self.class_counts.iter().sum();
        if total <= 0.0 {
            return vec![0.0; self.class_counts.len()];
        }
        self.class_counts.iter().map(|c| c / total).collect()
    }

    pub fn majority_class(&self) -> usize {
        argmax(&self.class_counts)
    }
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// A fitted tree stored as a flat node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
    pub n_classes: usize,
    pub n_features: usize,
}

impl DecisionTree {
    /// Index of the leaf reached by `row`.
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        while let NodeKind::Split {
            feature,
            threshold,
            left,
            right,
        } = self.nodes[i].kind
        {
            i = if row[feature] <= threshold { left } else { right };
        }
        i
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        self.nodes[self.leaf_index(row)].distribution()
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        self.nodes[self.leaf_index(row)].majority_class()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// Unnormalised total weighted impurity decrease per feature.
    pub fn impurity_decrease(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features];
        for node in &self.nodes {
            if let NodeKind::Split {
                feature, left, right, ..
            } = node.kind
            {
                let w = |n: &TreeNode| n.class_counts.iter().sum::<f64>();
                let (l, r) = (&self.nodes[left], &self.nodes[right]);
                out[feature] +=
                    w(node) * node.impurity - w(l) * l.impurity - w(r) * r.impurity;
            }
        }
        out
    }

    /// Impurity-decrease importances normalised to sum 1 (all zero for a
    /// single-leaf tree).
    pub fn feature_importances(&self) -> Vec<f64> {
        let mut imp = self.impurity_decrease();
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            imp.iter_mut().for_each(|v| *v /= total);
        }
        imp
    }
}

/// Per-feature ranks of distinct values, shared by every tree of an ensemble.
#[derive(Debug, Clone)]
pub struct BinnedColumns {
    /// Sorted distinct values of each feature.
    values: Vec<Vec<f64>>,
    /// `codes[f][s]` is the rank of sample `s`'s value in `values[f]`.
    codes: Vec<Vec<u32>>,
}

impl BinnedColumns {
    pub fn new(columns: &[Vec<f64>]) -> Self {
        let mut values = Vec::with_capacity(columns.len());
        let mut codes = Vec::with_capacity(columns.len());
        for col in columns {
            let mut distinct = col.clone();
            distinct.sort_by(f64::total_cmp);
            distinct.dedup();
            let c = col
                .iter()
                .map(|v| distinct.partition_point(|d| d < v) as u32)
                .collect();
            values.push(distinct);
            codes.push(c);
        }
        Self { values, codes }
    }

    pub fn n_features(&self) -> usize {
        self.values.len()
    }
}

/// Sample view handed to the tree builder.
pub struct TrainingSet<'a> {
    pub columns: &'a [Vec<f64>],
    pub binned: &'a BinnedColumns,
    pub labels: &'a [usize],
    pub n_classes: usize,
}

impl<'a> TrainingSet<'a> {
    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }
}

/// Options that differ between the tree variants of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeOptions {
    pub max_features: MaxFeatures,
    pub splitter: Splitter,
}

/// `total / (classes present · count_k)` for balanced weighting, else 1.
pub fn class_weights(labels: &[usize], n_classes: usize, mode: ClassWeight) -> Vec<f64> {
    match mode {
        ClassWeight::None => vec![1.0; n_classes],
        ClassWeight::Balanced => {
            let mut counts = vec![0usize; n_classes];
            for &y in labels {
                counts[y] += 1;
            }
            let present = counts.iter().filter(|&&c| c > 0).count().max(1) as f64;
            let total = labels.len() as f64;
            counts
                .iter()
                .map(|&c| if c == 0 { 0.0 } else { total / (present * c as f64) })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    /// Weighted child impurity `wL·iL + wR·iR`; lower is better.
    child_impurity: f64,
}

impl Candidate {
    fn beats(&self, other: &Option<Candidate>) -> bool {
        match other {
            None => true,
            Some(o) => {
                self.child_impurity < o.child_impurity
                    || (self.child_impurity == o.child_impurity
                        && (self.feature, self.threshold) < (o.feature, o.threshold))
            }
        }
    }
}

struct Builder<'a> {
    data: &'a TrainingSet<'a>,
    params: &'a Hyperparams,
    options: TreeOptions,
    weights: Vec<f64>,
    rng: ChaCha8Rng,
    features: Vec<usize>,
    hist: Vec<f64>,
    hist_n: Vec<u32>,
    sorted: Vec<(u32, u32)>,
    run_codes: Vec<u32>,
    run_w: Vec<f64>,
    run_n: Vec<u32>,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b || m.is_nan() {
        a
    } else {
        m
    }
}

impl<'a> Builder<'a> {
    fn counts(&self, samples: &[u32]) -> Vec<f64> {
        let mut c = vec![0.0; self.data.n_classes];
        for &s in samples {
            let y = self.data.labels[s as usize];
            c[y] += self.weights[y];
        }
        c
    }

    fn find_split(&mut self, samples: &[u32], parent: &[f64]) -> Option<Candidate> {
        let n_features = self.data.binned.n_features();
        let max_features = self.options.max_features.resolve(n_features);
        let mut best: Option<Candidate> = None;
        let mut visited = 0;
        let mut drawn = 0;
        // incremental Fisher-Yates over the feature indices
        while drawn < n_features && visited < max_features {
            let j = self.rng.gen_range(drawn..n_features);
            self.features.swap(drawn, j);
            let f = self.features[drawn];
            drawn += 1;

            let codes = &self.data.binned.codes[f];
            let (mut lo, mut hi) = (u32::MAX, 0u32);
            for &s in samples {
                let c = codes[s as usize];
                lo = lo.min(c);
                hi = hi.max(c);
            }
            if lo == hi {
                continue;
            }
            visited += 1;
            let cand = match self.options.splitter {
                Splitter::Best => self.best_threshold(f, samples, lo, hi, parent),
                Splitter::Random => self.random_threshold(f, samples, lo, hi, parent),
            };
            if let Some(c) = cand {
                if c.beats(&best) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn best_threshold(
        &mut self,
        f: usize,
        samples: &[u32],
        lo: u32,
        hi: u32,
        parent: &[f64],
    ) -> Option<Candidate> {
        let k = self.data.n_classes;
        let range = (hi - lo + 1) as usize;
        let codes = &self.data.binned.codes[f];
        let labels = self.data.labels;

        // collapse the node's samples into runs of equal code, ascending
        self.run_codes.clear();
        self.run_w.clear();
        self.run_n.clear();
        if range <= 4 * samples.len() + 64 {
            self.hist.clear();
            self.hist.resize(range * k, 0.0);
            self.hist_n.clear();
            self.hist_n.resize(range, 0);
            for &s in samples {
                let c = (codes[s as usize] - lo) as usize;
                let y = labels[s as usize];
                self.hist[c * k + y] += self.weights[y];
                self.hist_n[c] += 1;
            }
            for c in 0..range {
                if self.hist_n[c] > 0 {
                    self.run_codes.push(lo + c as u32);
                    self.run_w.extend_from_slice(&self.hist[c * k..(c + 1) * k]);
                    self.run_n.push(self.hist_n[c]);
                }
            }
        } else {
            self.sorted.clear();
            self.sorted
                .extend(samples.iter().map(|&s| (codes[s as usize], labels[s as usize] as u32)));
            self.sorted.sort_unstable();
            for &(c, y) in &self.sorted {
                if self.run_codes.last() != Some(&c) {
                    self.run_codes.push(c);
                    self.run_w.extend(std::iter::repeat_n(0.0, k));
                    self.run_n.push(0);
                }
                let base = self.run_w.len() - k;
                self.run_w[base + y as usize] += self.weights[y as usize];
                *self.run_n.last_mut().unwrap() += 1;
            }
        }

        let values = &self.data.binned.values[f];
        let min_leaf = self.params.min_samples_leaf;
        let n = samples.len();
        let total_w: f64 = parent.iter().sum();
        let criterion = self.params.criterion;
        let mut left = vec![0.0; k];
        let mut right = vec![0.0; k];
        let mut left_n = 0usize;
        let mut best: Option<Candidate> = None;
        for i in 0..self.run_codes.len() - 1 {
            for (l, w) in left.iter_mut().zip(&self.run_w[i * k..(i + 1) * k]) {
                *l += w;
            }
            left_n += self.run_n[i] as usize;
            if left_n < min_leaf {
                continue;
            }
            if n - left_n < min_leaf {
                break;
            }
            let wl: f64 = left.iter().sum();
            for ((r, p), l) in right.iter_mut().zip(parent).zip(&left) {
                *r = (p - l).max(0.0);
            }
            let wr = (total_w - wl).max(0.0);
            let child = wl * criterion.impurity(&left, wl) + wr * criterion.impurity(&right, wr);
            let cand = Candidate {
                feature: f,
                threshold: midpoint(
                    values[self.run_codes[i] as usize],
                    values[self.run_codes[i + 1] as usize],
                ),
                child_impurity: child,
            };
            if cand.beats(&best) {
                best = Some(cand);
            }
        }
        best
    }

    fn random_threshold(
        &mut self,
        f: usize,
        samples: &[u32],
        lo: u32,
        hi: u32,
        parent: &[f64],
    ) -> Option<Candidate> {
        let values = &self.data.binned.values[f];
        let (min_v, max_v) = (values[lo as usize], values[hi as usize]);
        let mut threshold = self.rng.gen_range(min_v..max_v);
        if threshold >= max_v {
            threshold = min_v;
        }
        let column = &self.data.columns[f];
        let k = self.data.n_classes;
        let mut left = vec![0.0; k];
        let mut left_n = 0;
        for &s in samples {
            if column[s as usize] <= threshold {
                let y = self.data.labels[s as usize];
                left[y] += self.weights[y];
                left_n += 1;
            }
        }
        let min_leaf = self.params.min_samples_leaf;
        if left_n < min_leaf || samples.len() - left_n < min_leaf {
            return None;
        }
        let right: Vec<f64> = parent.iter().zip(&left).map(|(p, l)| (p - l).max(0.0)).collect();
        let wl: f64 = left.iter().sum();
        let wr: f64 = right.iter().sum();
        let c = self.params.criterion;
        Some(Candidate {
            feature: f,
            threshold,
            child_impurity: wl * c.impurity(&left, wl) + wr * c.impurity(&right, wr),
        })
    }

    fn grow(mut self, mut samples: Vec<u32>) -> DecisionTree {
        let k = self.data.n_classes;
        let mut nodes: Vec<TreeNode> = Vec::new();
        // (start, end, depth, parent index, is_left)
        let mut stack: Vec<(usize, usize, usize, Option<(usize, bool)>)> =
            vec![(0, samples.len(), 0, None)];
        while let Some((start, end, depth, parent)) = stack.pop() {
            let slice = &samples[start..end];
            let counts = self.counts(slice);
            let total: f64 = counts.iter().sum();
            let impurity = self.params.criterion.impurity(&counts, total);
            let n = end - start;
            let id = nodes.len();
            if let Some((p, is_left)) = parent {
                if let NodeKind::Split { left, right, .. } = &mut nodes[p].kind {
                    if is_left {
                        *left = id;
                    } else {
                        *right = id;
                    }
                }
            }
            let classes_present = counts.iter().filter(|&&c| c > 0.0).count();
            let splittable = n >= self.params.min_samples_split
                && n >= 2 * self.params.min_samples_leaf
                && self.params.max_depth.is_none_or(|d| depth < d)
                && classes_present > 1;
            let split = if splittable {
                self.find_split(slice, &counts)
            } else {
                None
            };
            let kind = match split {
                Some(c) => {
                    let column = &self.data.columns[c.feature];
                    let part = &mut samples[start..end];
                    let mut mid = 0;
                    for i in 0..part.len() {
                        if column[part[i] as usize] <= c.threshold {
                            part.swap(i, mid);
                            mid += 1;
                        }
                    }
                    // right child is pushed first so the left subtree is numbered first
                    stack.push((start + mid, end, depth + 1, Some((id, false))));
                    stack.push((start, start + mid, depth + 1, Some((id, true))));
                    NodeKind::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left: usize::MAX,
                        right: usize::MAX,
                    }
                }
                None => NodeKind::Leaf,
            };
            debug_assert_eq!(counts.len(), k);
            nodes.push(TreeNode {
                kind,
                class_counts: counts,
                n_samples: n,
                impurity,
                depth,
            });
        }
        DecisionTree {
            nodes,
            n_classes: k,
            n_features: self.data.binned.n_features(),
        }
    }
}

/// Grows one tree on `samples` (indices into `data`, repeats allowed).
pub fn fit_tree_on(
    data: &TrainingSet<'_>,
    samples: Vec<u32>,
    params: &Hyperparams,
    options: TreeOptions,
    weights: Vec<f64>,
    rng: ChaCha8Rng,
) -> Result<DecisionTree> {
    params.validate()?;
    if samples.is_empty() {
        return Err(Error::Invalid("cannot fit a tree on zero samples".into()));
    }
    if data.labels.iter().any(|&y| y >= data.n_classes) {
        return Err(Error::Invalid("label outside 0..n_classes".into()));
    }
    let n_features = data.binned.n_features();
    let builder = Builder {
        data,
        params,
        options,
        weights,
        rng,
        features: (0..n_features).collect(),
        hist: Vec::new(),
        hist_n: Vec::new(),
        sorted: Vec::new(),
        run_codes: Vec::new(),
        run_w: Vec::new(),
        run_n: Vec::new(),
    };
    Ok(builder.grow(samples))
}

/// Fits a single tree on all samples, considering every feature at each
/// split. Deterministic for a given `params.seed`.
pub fn fit_tree(
    columns: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    params: &Hyperparams,
) -> Result<DecisionTree> {
    use rand::SeedableRng;
    check_shape(columns, labels)?;
    let binned = BinnedColumns::new(columns);
    let data = TrainingSet {
        columns,
        binned: &binned,
        labels,
        n_classes,
    };
    let weights = class_weights(labels, n_classes, params.class_weight);
    fit_tree_on(
        &data,
        (0..labels.len() as u32).collect(),
        params,
        TreeOptions {
            max_features: MaxFeatures::All,
            splitter: params.splitter,
        },
        weights,
        ChaCha8Rng::seed_from_u64(params.seed),
    )
}

pub(crate) fn check_shape(columns: &[Vec<f64>], labels: &[usize]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::Invalid("empty training data".into()));
    }
    if let Some(c) = columns.iter().find(|c| c.len() != labels.len()) {
        return Err(Error::Shape(format!(
            "column has {} rows, labels have {}",
            c.len(),
            labels.len()
        )));
    }
    if columns.iter().flatten().any(|v| v.is_nan()) {
        return Err(Error::Invalid("feature values must not be NaN".into()));
    }
    Ok(())
}
