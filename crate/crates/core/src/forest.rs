//! Tree ensembles and the multi-label model built on them.
//!
//! Tree `t` of an ensemble (counted across all per-class forests for BTS) is
//! grown with a `ChaCha8Rng` seeded from `seed + t`, so results do not depend
//! on how the trees are scheduled across threads.

use std::collections::BTreeSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::LabelAssignment;
use crate::error::{Error, Result};
use crate::labels::{bts_decode_indices, bts_encode, ClassCatalog, MtsCatalog};
use crate::tree::{
    argmax, check_shape, class_weights, fit_tree_on, BinnedColumns, DecisionTree, Hyperparams,
    MaxFeatures, Splitter, TrainingSet, TreeOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Dt,
    Etc,
    Eetc,
    Rf,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Etc, Variant::Eetc, Variant::Dt, Variant::Rf];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Dt => "dt",
            Variant::Etc => "etc",
            Variant::Eetc => "eetc",
            Variant::Rf => "rf",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dt" => Ok(Variant::Dt),
            "etc" => Ok(Variant::Etc),
            "eetc" => Ok(Variant::Eetc),
            "rf" => Ok(Variant::Rf),
            _ => Err(Error::Config(format!("unknown model {s:?} (expected dt, etc, eetc or rf)"))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Bts,
    Mts,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Bts => "bts",
            Strategy::Mts => "mts",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bts" => Ok(Strategy::Bts),
            "mts" => Ok(Strategy::Mts),
            _ => Err(Error::Config(format!("unknown strategy {s:?} (expected bts or mts)"))),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the trees of one forest are grown.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestOptions {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub max_features: MaxFeatures,
    pub splitter: Splitter,
}

impl ForestOptions {
    /// RF: bootstrap, √features, best splits. EETC: full sample, √features,
    /// random splits. ETC: one tree, √features, configured splitter. DT: one
    /// tree over all features.
    pub fn for_variant(variant: Variant, params: &Hyperparams) -> Self {
        match variant {
            Variant::Rf => Self {
                n_trees: params.n_estimators,
                bootstrap: true,
                max_features: MaxFeatures::Sqrt,
                splitter: Splitter::Best,
            },
            Variant::Eetc => Self {
                n_trees: params.n_estimators,
                bootstrap: false,
                max_features: MaxFeatures::Sqrt,
                splitter: Splitter::Random,
            },
            Variant::Etc => Self {
                n_trees: 1,
                bootstrap: false,
                max_features: MaxFeatures::Sqrt,
                splitter: params.splitter,
            },
            Variant::Dt => Self {
                n_trees: 1,
                bootstrap: false,
                max_features: MaxFeatures::All,
                splitter: params.splitter,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub n_classes: usize,
    pub trees: Vec<DecisionTree>,
}

impl Forest {
    /// Mean of the leaf class distributions over all trees.
    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_classes];
        for tree in &self.trees {
            for (a, p) in acc.iter_mut().zip(tree.predict_proba(row)) {
                *a += p;
            }
        }
        let n = self.trees.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        argmax(&self.predict_proba(row))
    }

    /// Per-tree normalised importances averaged over trees, renormalised.
    /// Trees that never split do not contribute.
    pub fn feature_importances(&self, n_features: usize) -> Vec<f64> {
        mean_importances(self.trees.iter(), n_features)
    }
}

fn mean_importances<'a>(trees: impl Iterator<Item = &'a DecisionTree>, n_features: usize) -> Vec<f64> {
    let mut acc = vec![0.0; n_features];
    for tree in trees {
        let imp = tree.feature_importances();
        if imp.iter().any(|&v| v > 0.0) {
            for (a, v) in acc.iter_mut().zip(imp) {
                *a += v;
            }
        }
    }
    let total: f64 = acc.iter().sum();
    if total > 0.0 {
        acc.iter_mut().for_each(|v| *v /= total);
    }
    acc
}

struct ForestJob<'a> {
    labels: &'a [usize],
    n_classes: usize,
    first_tree: u64,
}

fn fit_forests(
    columns: &[Vec<f64>],
    jobs: &[ForestJob<'_>],
    params: &Hyperparams,
    options: ForestOptions,
) -> Result<Vec<Forest>> {
    params.validate()?;
    if options.n_trees == 0 {
        return Err(Error::Invalid("a forest needs at least one tree".into()));
    }
    let binned = BinnedColumns::new(columns);
    let n = columns.first().map_or(0, Vec::len);
    let tasks: Vec<(usize, usize)> = (0..jobs.len())
        .flat_map(|j| (0..options.n_trees).map(move |t| (j, t)))
        .collect();
    let trees: Vec<DecisionTree> = tasks
        .par_iter()
        .map(|&(j, t)| {
            let job = &jobs[j];
            let data = TrainingSet {
                columns,
                binned: &binned,
                labels: job.labels,
                n_classes: job.n_classes,
            };
            let mut rng =
                ChaCha8Rng::seed_from_u64(params.seed.wrapping_add(job.first_tree + t as u64));
            let samples: Vec<u32> = if options.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n as u32)).collect()
            } else {
                (0..n as u32).collect()
            };
            let weights = class_weights(job.labels, job.n_classes, params.class_weight);
            fit_tree_on(
                &data,
                samples,
                params,
                TreeOptions {
                    max_features: options.max_features,
                    splitter: options.splitter,
                },
                weights,
                rng,
            )
        })
        .collect::<Result<_>>()?;
    let mut trees = trees.into_iter();
    Ok(jobs
        .iter()
        .map(|job| Forest {
            n_classes: job.n_classes,
            trees: trees.by_ref().take(options.n_trees).collect(),
        })
        .collect())
}

/// Fits one forest on integer labels in `0..n_classes`.
pub fn fit_forest(
    columns: &[Vec<f64>],
    labels: &[usize],
    n_classes: usize,
    params: &Hyperparams,
    options: ForestOptions,
) -> Result<Forest> {
    check_shape(columns, labels)?;
    let job = ForestJob {
        labels,
        n_classes,
        first_tree: 0,
    };
    Ok(fit_forests(columns, &[job], params, options)?.remove(0))
}

/// Class and combination catalogs shared by training and decoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalogs {
    pub classes: ClassCatalog,
    pub combos: MtsCatalog,
}

impl Catalogs {
    pub fn from_label_sets(sets: &[Vec<LabelAssignment>]) -> Self {
        Self {
            classes: ClassCatalog::from_label_sets(sets.iter().map(Vec::as_slice)),
            combos: MtsCatalog::from_label_sets(sets.iter().map(Vec::as_slice)),
        }
    }
}

pub const DEFAULT_BTS_THRESHOLD: f64 = 0.5;

/// A fitted multi-label classifier: one forest over combination classes
/// (MTS) or one binary forest per class (BTS).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub variant: Variant,
    pub strategy: Strategy,
    pub hyperparams: Hyperparams,
    pub bts_threshold: f64,
    pub catalogs: Catalogs,
    pub feature_names: Vec<String>,
    pub forests: Vec<Forest>,
}

pub fn fit_ensemble(
    columns: &[Vec<f64>],
    feature_names: &[String],
    label_sets: &[Vec<LabelAssignment>],
    catalogs: &Catalogs,
    params: &Hyperparams,
    variant: Variant,
    strategy: Strategy,
) -> Result<EnsembleModel> {
    if columns.len() != feature_names.len() {
        return Err(Error::Shape(format!(
            "{} columns but {} feature names",
            columns.len(),
            feature_names.len()
        )));
    }
    if columns.is_empty() {
        return Err(Error::Invalid("no feature columns".into()));
    }
    let placeholder = vec![0; label_sets.len()];
    check_shape(columns, &placeholder)?;
    let options = ForestOptions::for_variant(variant, params);
    let forests = match strategy {
        Strategy::Mts => {
            let alphas = label_sets
                .iter()
                .map(|s| {
                    catalogs.combos.position(s).ok_or_else(|| {
                        Error::UnknownLabel(
                            s.iter().map(ToString::to_string).collect::<Vec<_>>().join(" + "),
                        )
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let job = ForestJob {
                labels: &alphas,
                n_classes: catalogs.combos.p(),
                first_tree: 0,
            };
            fit_forests(columns, &[job], params, options)?
        }
        Strategy::Bts => {
            let beta = bts_encode(label_sets, &catalogs.classes)?;
            let targets: Vec<Vec<usize>> =
                (0..catalogs.classes.m()).map(|j| beta.column(j)).collect();
            let jobs: Vec<ForestJob> = targets
                .iter()
                .enumerate()
                .map(|(j, y)| ForestJob {
                    labels: y,
                    n_classes: 2,
                    first_tree: (j * options.n_trees) as u64,
                })
                .collect();
            fit_forests(columns, &jobs, params, options)?
        }
    };
    Ok(EnsembleModel {
        variant,
        strategy,
        hyperparams: params.clone(),
        bts_threshold: DEFAULT_BTS_THRESHOLD,
        catalogs: catalogs.clone(),
        feature_names: feature_names.to_vec(),
        forests,
    })
}

impl EnsembleModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn trees(&self) -> impl Iterator<Item = &DecisionTree> {
        self.forests.iter().flat_map(|f| f.trees.iter())
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features() {
            return Err(Error::Shape(format!(
                "row has {} values, model expects {}",
                row.len(),
                self.n_features()
            )));
        }
        Ok(())
    }

    /// Reorders a row given under `names` into the model's column order.
    pub fn align_row(&self, names: &[String], values: &[f64]) -> Result<Vec<f64>> {
        let index: std::collections::HashMap<&str, f64> =
            names.iter().map(String::as_str).zip(values.iter().copied()).collect();
        self.feature_names
            .iter()
            .map(|n| index.get(n.as_str()).copied().ok_or_else(|| Error::MissingColumn(n.clone())))
            .collect()
    }

    /// MTS: probability per combination (sums to 1). BTS: positive-class
    /// probability per catalog class.
    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check_row(row)?;
        Ok(match self.strategy {
            Strategy::Mts => self.forests[0].predict_proba(row),
            Strategy::Bts => self
                .forests
                .iter()
                .map(|f| f.predict_proba(row).get(1).copied().unwrap_or(0.0))
                .collect(),
        })
    }

    /// Predicted classes as indices into the class catalog.
    pub fn predict_indices(&self, row: &[f64]) -> Result<BTreeSet<usize>> {
        let proba = self.predict_proba(row)?;
        match self.strategy {
            Strategy::Mts => {
                let combo = &self.catalogs.combos.combos()[argmax(&proba)];
                self.catalogs.classes.indices(combo)
            }
            Strategy::Bts => Ok(bts_decode_indices(&proba, self.bts_threshold)),
        }
    }

    pub fn predict(&self, row: &[f64]) -> Result<Vec<LabelAssignment>> {
        match self.strategy {
            Strategy::Mts => {
                let proba = self.predict_proba(row)?;
                Ok(self.catalogs.combos.combos()[argmax(&proba)].clone())
            }
            Strategy::Bts => Ok(self.catalogs.classes.labels(&self.predict_indices(row)?)),
        }
    }

    /// Mean probability the ensemble gives its own decision: the arg-max
    /// combination for MTS, the mean over the selected classes for BTS.
    pub fn decision_probability(&self, row: &[f64]) -> Result<f64> {
        let proba = self.predict_proba(row)?;
        Ok(match self.strategy {
            Strategy::Mts => proba[argmax(&proba)],
            Strategy::Bts => {
                let chosen = bts_decode_indices(&proba, self.bts_threshold);
                chosen.iter().map(|&j| proba[j]).sum::<f64>() / chosen.len() as f64
            }
        })
    }

    pub fn feature_importances(&self) -> Vec<f64> {
        mean_importances(self.trees(), self.n_features())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Structural checks on a deserialized model.
    pub fn validate(&self) -> Result<()> {
        let expected_forests = match self.strategy {
            Strategy::Mts => 1,
            Strategy::Bts => self.catalogs.classes.m(),
        };
        if self.forests.len() != expected_forests {
            return Err(Error::MalformedTree(format!(
                "{} forests, expected {expected_forests}",
                self.forests.len()
            )));
        }
        for tree in self.trees() {
            validate_tree(tree, self.n_features())?;
        }
        Ok(())
    }
}

/// Every split must reference valid, forward-pointing children and a known
/// feature, which rules out cycles.
pub fn validate_tree(tree: &DecisionTree, n_features: usize) -> Result<()> {
    use crate::tree::NodeKind;
    if tree.nodes.is_empty() {
        return Err(Error::MalformedTree("tree has no nodes".into()));
    }
    for (i, node) in tree.nodes.iter().enumerate() {
        if node.class_counts.len() != tree.n_classes {
            return Err(Error::MalformedTree(format!("node {i} has wrong class count length")));
        }
        if let NodeKind::Split {
            feature, left, right, ..
        } = node.kind
        {
            if feature >= n_features {
                return Err(Error::MalformedTree(format!("node {i} splits on unknown feature {feature}")));
            }
            for child in [left, right] {
                if child <= i || child >= tree.nodes.len() {
                    return Err(Error::MalformedTree(format!("node {i} has invalid child {child}")));
                }
            }
        }
    }
    Ok(())
}
