//! From-scratch CART decision trees and a bagged random forest.
//!
//! The forest plays the opaque prediction model (labels only, no
//! probabilities, no internals); the depth-bounded tree doubles as the
//! interpretable local surrogate. Splits are greedy: candidate thresholds sit
//! at midpoints between consecutive sorted unique values, impurity-decrease
//! ties break toward the lower feature index and lower threshold, so training
//! is fully deterministic and checkable against brute-force enumeration.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Instance, Label, LabeledSet};
use crate::seeding;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("instance has {got} values, model expects {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("unsupported model document version {0}")]
    BadVersion(u32),
    #[error("malformed model document: {0}")]
    Malformed(String),
}

/// Anything that can be queried for a hard label. The boundary search and the
/// fidelity metric only ever see this surface.
pub trait Classifier: Sync {
    fn predict(&self, x: &Instance) -> Label;

    fn n_classes(&self) -> usize;

    fn classes(&self) -> Vec<Label> {
        (0..self.n_classes()).collect()
    }

    fn predict_batch(&self, xs: &[Instance]) -> Vec<Label> {
        xs.iter().map(|x| self.predict(x)).collect()
    }
}

/// Wrap a plain function as a classifier; handy for analytic test oracles.
pub struct FnClassifier<F: Fn(&[f64]) -> Label + Sync> {
    f: F,
    n_classes: usize,
}

impl<F: Fn(&[f64]) -> Label + Sync> FnClassifier<F> {
    pub fn new(n_classes: usize, f: F) -> Self {
        FnClassifier { f, n_classes }
    }
}

impl<F: Fn(&[f64]) -> Label + Sync> Classifier for FnClassifier<F> {
    fn predict(&self, x: &Instance) -> Label {
        (self.f)(x.values())
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Gini,
    Entropy,
}

impl Criterion {
    fn impurity(&self, counts: &[usize], total: usize) -> f64 {
        if total == 0 {
            return 0.0;
        }
        let n = total as f64;
        match self {
            Criterion::Gini => {
                1.0 - counts
                    .iter()
                    .map(|&c| {
                        let p = c as f64 / n;
                        p * p
                    })
                    .sum::<f64>()
            }
            Criterion::Entropy => counts
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = c as f64 / n;
                    -p * p.log2()
                })
                .sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Maximum number of split levels below the root; `None` grows until pure.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub criterion: Criterion,
    /// Features considered per split; `None` considers all.
    pub random_feature_subset: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_leaf: 1,
            criterion: Criterion::Gini,
            random_feature_subset: None,
        }
    }
}

impl TreeParams {
    pub fn with_max_depth(mut self, depth: usize) -> Self {
        self.max_depth = Some(depth);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
        class_counts: Vec<usize>,
    },
    Leaf {
        label: Label,
        class_counts: Vec<usize>,
    },
}

/// A trained CART classifier. Node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub n_features: usize,
    pub n_classes: usize,
    pub params: TreeParams,
    /// Per-feature accumulated weighted impurity decrease (unnormalized).
    pub raw_importances: Vec<f64>,
}

/// Best admissible split of one node, if any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

fn class_counts_of(labels: &[Label], rows: &[u32], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0usize; n_classes];
    for &r in rows {
        counts[labels[r as usize]] += 1;
    }
    counts
}

fn majority_label(counts: &[usize]) -> Label {
    let mut best = 0;
    for (c, &count) in counts.iter().enumerate() {
        if count > counts[best] {
            best = c;
        }
    }
    best
}

/// Scan every candidate threshold (midpoints between consecutive distinct
/// sorted values) of every candidate feature and return the impurity-decrease
/// argmax. Ties break toward the lower feature index, then lower threshold:
/// features are visited in ascending order and a candidate only replaces the
/// incumbent on strictly larger gain.
pub fn best_split(
    set: &LabeledSet,
    rows: &[u32],
    features: &[usize],
    criterion: Criterion,
    min_samples_leaf: usize,
) -> Option<SplitChoice> {
    let n = rows.len();
    if n < 2 * min_samples_leaf {
        return None;
    }
    let parent_counts = class_counts_of(&set.labels, rows, set.n_classes);
    let parent_impurity = criterion.impurity(&parent_counts, n);

    let mut best: Option<SplitChoice> = None;
    let mut column: Vec<(f64, Label)> = Vec::with_capacity(n);
    for &f in features {
        column.clear();
        column.extend(
            rows.iter()
                .map(|&r| (set.instances[r as usize][f], set.labels[r as usize])),
        );
        column.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        let mut left_counts = vec![0usize; set.n_classes];
        for i in 0..n - 1 {
            left_counts[column[i].1] += 1;
            if column[i + 1].0 <= column[i].0 {
                continue; // not a boundary between distinct values
            }
            let n_left = i + 1;
            let n_right = n - n_left;
            if n_left < min_samples_leaf || n_right < min_samples_leaf {
                continue;
            }
            let right_counts: Vec<usize> = parent_counts
                .iter()
                .zip(&left_counts)
                .map(|(&p, &l)| p - l)
                .collect();
            let weighted = (n_left as f64 * criterion.impurity(&left_counts, n_left)
                + n_right as f64 * criterion.impurity(&right_counts, n_right))
                / n as f64;
            let gain = parent_impurity - weighted;
            let threshold = 0.5 * (column[i].0 + column[i + 1].0);
            if best.map_or(true, |b| gain > b.gain) {
                best = Some(SplitChoice {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

struct TreeBuilder<'a> {
    set: &'a LabeledSet,
    params: &'a TreeParams,
    nodes: Vec<Node>,
    raw_importances: Vec<f64>,
    rng: ChaCha8Rng,
    n_total: usize,
}

impl TreeBuilder<'_> {
    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.set.dim();
        match self.params.random_feature_subset {
            Some(k) if k < d => {
                let mut picked = rand::seq::index::sample(&mut self.rng, d, k).into_vec();
                picked.sort_unstable();
                picked
            }
            _ => (0..d).collect(),
        }
    }

    fn build(&mut self, rows: Vec<u32>, depth: usize) -> u32 {
        let idx = self.nodes.len() as u32;
        self.nodes.push(Node::Leaf {
            label: 0,
            class_counts: Vec::new(),
        });

        let counts = class_counts_of(&self.set.labels, &rows, self.set.n_classes);
        let n_nonzero = counts.iter().filter(|&&c| c > 0).count();
        let depth_ok = self.params.max_depth.map_or(true, |m| depth < m);

        let choice = if n_nonzero > 1 && depth_ok {
            let features = self.candidate_features();
            best_split(
                self.set,
                &rows,
                &features,
                self.params.criterion,
                self.params.min_samples_leaf,
            )
        } else {
            None
        };

        match choice {
            Some(split) => {
                let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = rows
                    .iter()
                    .partition(|&&r| self.set.instances[r as usize][split.feature] <= split.threshold);
                self.raw_importances[split.feature] +=
                    rows.len() as f64 / self.n_total as f64 * split.gain;
                let left = self.build(left_rows, depth + 1);
                let right = self.build(right_rows, depth + 1);
                self.nodes[idx as usize] = Node::Split {
                    feature: split.feature,
                    threshold: split.threshold,
                    left,
                    right,
                    class_counts: counts,
                };
            }
            None => {
                self.nodes[idx as usize] = Node::Leaf {
                    label: majority_label(&counts),
                    class_counts: counts,
                };
            }
        }
        idx
    }
}

/// Greedy CART on the whole set. A single-class set yields a single leaf.
pub fn train_tree(set: &LabeledSet, params: &TreeParams, seed: u64) -> DecisionTree {
    assert!(!set.is_empty(), "cannot train a tree on an empty set");
    assert!(params.min_samples_leaf >= 1);
    let d = set.dim();
    let mut builder = TreeBuilder {
        set,
        params,
        nodes: Vec::new(),
        raw_importances: vec![0.0; d],
        rng: ChaCha8Rng::seed_from_u64(seed),
        n_total: set.len(),
    };
    let rows: Vec<u32> = (0..set.len() as u32).collect();
    builder.build(rows, 0);
    DecisionTree {
        nodes: builder.nodes,
        n_features: d,
        n_classes: set.n_classes,
        params: params.clone(),
        raw_importances: builder.raw_importances,
    }
}

impl DecisionTree {
    pub fn try_predict(&self, x: &Instance) -> Result<Label, ModelError> {
        if x.dim() != self.n_features {
            return Err(ModelError::DimensionMismatch {
                got: x.dim(),
                want: self.n_features,
            });
        }
        Ok(self.predict_unchecked(x.values()))
    }

    fn predict_unchecked(&self, x: &[f64]) -> Label {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { label, .. } => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    at = if x[*feature] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    /// Per-feature share of total weighted impurity decrease; all zeros for a
    /// single-leaf tree.
    pub fn feature_importances(&self) -> Vec<f64> {
        let total: f64 = self.raw_importances.iter().sum();
        if total <= 0.0 {
            return vec![0.0; self.n_features];
        }
        self.raw_importances.iter().map(|&v| v / total).collect()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn accuracy_on(&self, set: &LabeledSet) -> f64 {
        if set.is_empty() {
            return 0.0;
        }
        let hits = set
            .instances
            .iter()
            .zip(&set.labels)
            .filter(|(x, &y)| self.predict_unchecked(x.values()) == y)
            .count();
        hits as f64 / set.len() as f64
    }
}

impl Classifier for DecisionTree {
    fn predict(&self, x: &Instance) -> Label {
        debug_assert_eq!(x.dim(), self.n_features);
        self.predict_unchecked(x.values())
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    /// Resample the training set with replacement per tree.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 200,
            tree: TreeParams::default(),
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub n_features: usize,
    pub n_classes: usize,
    pub params: ForestParams,
    pub seed: u64,
}

/// Bagged forest: each tree sees a bootstrap resample (same size, with
/// replacement) and considers `round(sqrt(D))` random features per split
/// unless the tree params pin a subset size. Per-tree seeds derive from the
/// master seed, so tree training parallelizes without changing results.
pub fn train_forest(set: &LabeledSet, params: &ForestParams, seed: u64) -> RandomForest {
    assert!(set.n_classes >= 2, "forest needs at least 2 classes");
    let d = set.dim();
    let mut tree_params = params.tree.clone();
    if tree_params.random_feature_subset.is_none() {
        tree_params.random_feature_subset = Some(((d as f64).sqrt().round() as usize).max(1));
    }

    let trees: Vec<DecisionTree> = (0..params.n_trees)
        .into_par_iter()
        .map(|i| {
            let sample_seed = seeding::derive2(seed, 0, i as u64);
            let tree_seed = seeding::derive2(seed, 1, i as u64);
            if params.bootstrap {
                let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
                use rand::Rng;
                let n = set.len();
                let mut instances = Vec::with_capacity(n);
                let mut labels = Vec::with_capacity(n);
                for _ in 0..n {
                    let r = rng.gen_range(0..n);
                    instances.push(set.instances[r].clone());
                    labels.push(set.labels[r]);
                }
                let resampled = LabeledSet {
                    instances,
                    labels,
                    n_classes: set.n_classes,
                };
                train_tree(&resampled, &tree_params, tree_seed)
            } else {
                train_tree(set, &tree_params, tree_seed)
            }
        })
        .collect();

    RandomForest {
        trees,
        n_features: d,
        n_classes: set.n_classes,
        params: params.clone(),
        seed,
    }
}

impl RandomForest {
    pub fn try_predict(&self, x: &Instance) -> Result<Label, ModelError> {
        if x.dim() != self.n_features {
            return Err(ModelError::DimensionMismatch {
                got: x.dim(),
                want: self.n_features,
            });
        }
        Ok(self.vote(x.values()))
    }

    /// Majority vote; ties go to the lowest class index.
    fn vote(&self, x: &[f64]) -> Label {
        let mut votes = vec![0usize; self.n_classes];
        for tree in &self.trees {
            votes[tree.predict_unchecked(x)] += 1;
        }
        majority_label(&votes)
    }

    pub fn accuracy_on(&self, set: &LabeledSet) -> f64 {
        if set.is_empty() {
            return 0.0;
        }
        let hits: usize = set
            .instances
            .par_iter()
            .zip(&set.labels)
            .filter(|(x, &y)| self.vote(x.values()) == y)
            .count();
        hits as f64 / set.len() as f64
    }
}

impl Classifier for RandomForest {
    fn predict(&self, x: &Instance) -> Label {
        debug_assert_eq!(x.dim(), self.n_features);
        self.vote(x.values())
    }

    fn n_classes(&self) -> usize {
        self.n_classes
    }
}

pub const MODEL_DOCUMENT_VERSION: u32 = 1;

/// Versioned on-disk form of a trained forest. Round-trip reloads reproduce
/// predictions bit for bit (floats serialize via shortest round-trip decimal).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDocument {
    pub version: u32,
    pub schema_hash: String,
    pub forest: RandomForest,
}

impl ModelDocument {
    pub fn new(forest: RandomForest, schema_hash: String) -> Self {
        ModelDocument {
            version: MODEL_DOCUMENT_VERSION,
            schema_hash,
            forest,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| ModelError::Malformed(e.to_string()))?;
        if doc.version != MODEL_DOCUMENT_VERSION {
            return Err(ModelError::BadVersion(doc.version));
        }
        Ok(doc)
    }
}
