//! End-to-end classification pipeline: preprocessing, featurisation,
//! selection and model fitting, driven by one configuration value.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::anonymise::{anonymize, AnonymisationReport, DEFAULT_JARO_THRESHOLD};
use crate::corpus::{Corpus, LabelAssignment};
use crate::entities::{extract_entities, EntityRecord};
use crate::error::{Error, Result};
use crate::features::{
    fit_vectorizer, select_by_correlation, select_by_importance, CategoricalEncoder, ColumnKind,
    FeatureMatrix, ImportanceRule, SpearmanReport, VectorizerModel, DEFAULT_CORRELATION_THRESHOLD,
    DEFAULT_SELECTION_ESTIMATORS,
};
use crate::forest::{fit_ensemble, Catalogs, EnsembleModel, Strategy, Variant, DEFAULT_BTS_THRESHOLD};
use crate::lexica::Lexica;
use crate::text::TokenStream;
use crate::tree::{ClassWeight, Criterion, Hyperparams, Splitter};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VectorizerParams {
    pub max_df: f64,
    pub min_df: f64,
    pub ngram_range: (usize, usize),
}

impl Default for VectorizerParams {
    fn default() -> Self {
        Self {
            max_df: 0.5,
            min_df: 0.01,
            ngram_range: (1, 2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionParams {
    pub correlation_threshold: f64,
    /// Drop categorical columns below the threshold. When off, the
    /// correlations are only reported.
    pub correlation_filter: bool,
    /// Run the forest-importance selection over all columns.
    pub importance: bool,
    pub importance_estimators: usize,
    pub importance_rule: ImportanceRule,
}

impl Default for SelectionParams {
    fn default() -> Self {
        Self {
            correlation_threshold: DEFAULT_CORRELATION_THRESHOLD,
            correlation_filter: false,
            importance: true,
            importance_estimators: DEFAULT_SELECTION_ESTIMATORS,
            importance_rule: ImportanceRule::Mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub anonymise: bool,
    pub jaro_threshold: f64,
    pub vectorizer: VectorizerParams,
    pub selection: SelectionParams,
    pub strategy: Strategy,
    pub variant: Variant,
    /// `None` uses the tuned settings for the chosen variant and strategy.
    pub hyperparams: Option<Hyperparams>,
    pub bts_threshold: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            anonymise: true,
            jaro_threshold: DEFAULT_JARO_THRESHOLD,
            vectorizer: VectorizerParams::default(),
            selection: SelectionParams::default(),
            strategy: Strategy::Mts,
            variant: Variant::Rf,
            hyperparams: None,
            bts_threshold: DEFAULT_BTS_THRESHOLD,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    /// Hyperparameters in effect, with the run seed applied.
    pub fn effective_hyperparams(&self) -> Hyperparams {
        let mut h = self
            .hyperparams
            .clone()
            .unwrap_or_else(|| tuned_hyperparams(self.variant, self.strategy));
        h.seed = self.seed;
        h
    }

    pub fn validate(&self) -> Result<()> {
        let v = &self.vectorizer;
        if !(0.0 <= v.min_df && v.min_df < v.max_df && v.max_df <= 1.0) {
            return Err(Error::Config(format!(
                "vectorizer.min_df/max_df must satisfy 0 <= min_df < max_df <= 1 (got {}, {})",
                v.min_df, v.max_df
            )));
        }
        if v.ngram_range.0 < 1 || v.ngram_range.0 > v.ngram_range.1 {
            return Err(Error::Config(format!(
                "vectorizer.ngram_range must satisfy 1 <= lo <= hi (got {:?})",
                v.ngram_range
            )));
        }
        if !(0.0..=1.0).contains(&self.jaro_threshold) {
            return Err(Error::Config("jaro_threshold must lie in [0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.bts_threshold) {
            return Err(Error::Config("bts_threshold must lie in [0, 1)".into()));
        }
        if self.selection.importance && self.selection.importance_estimators == 0 {
            return Err(Error::Config("selection.importance_estimators must be at least 1".into()));
        }
        self.effective_hyperparams()
            .validate()
            .map_err(|e| Error::Config(format!("hyperparams: {e}")))
    }
}

/// Settings selected by grid search for each model and strategy.
pub fn tuned_hyperparams(variant: Variant, strategy: Strategy) -> Hyperparams {
    use ClassWeight::{Balanced, None as Unweighted};
    use Criterion::{Entropy, Gini};
    let (class_weight, criterion, max_depth, min_samples_leaf, min_samples_split, n_estimators) =
        match (variant, strategy) {
            (Variant::Etc, Strategy::Bts) => (Unweighted, Gini, Some(100), 10, 50, 1),
            (Variant::Etc, Strategy::Mts) => (Unweighted, Gini, None, 1, 100, 1),
            (Variant::Eetc, Strategy::Bts) => (Balanced, Entropy, Some(500), 1, 50, 100),
            (Variant::Eetc, Strategy::Mts) => (Unweighted, Gini, Some(100), 1, 2, 100),
            (Variant::Dt, Strategy::Bts) => (Unweighted, Gini, Some(500), 1, 50, 1),
            (Variant::Dt, Strategy::Mts) => (Unweighted, Gini, Some(100), 1, 50, 1),
            (Variant::Rf, Strategy::Bts) => (Balanced, Gini, Some(100), 1, 50, 200),
            (Variant::Rf, Strategy::Mts) => (Unweighted, Gini, Some(100), 10, 2, 200),
        };
    Hyperparams {
        class_weight,
        max_depth,
        min_samples_split,
        min_samples_leaf,
        criterion,
        splitter: Splitter::Best,
        n_estimators,
        seed: 0,
    }
}

/// A judgement after anonymisation, tokenisation and entity detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedDoc {
    pub id: String,
    pub tokens: TokenStream,
    pub entities: EntityRecord,
    pub labels: Vec<LabelAssignment>,
}

static TAGS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"@(?:Attorney|Corporate|Judge|Lawyer|Person)\b").expect("tag regex")
});

/// Entities come from the original text; tokens from the anonymised text
/// with the replacement tags removed, so no personal name becomes a feature.
pub fn prepare_judgement(
    doc: &crate::corpus::Judgement,
    lexica: &Lexica,
    config: &PipelineConfig,
) -> (PreparedDoc, Option<AnonymisationReport>) {
    let entities = extract_entities(doc, &lexica.entities);
    let (text, report) = if config.anonymise {
        let (t, r) = anonymize(&doc.raw_text, &lexica.anon, config.jaro_threshold);
        (TAGS.replace_all(&t, " ").into_owned(), Some(r))
    } else {
        (doc.raw_text.clone(), None)
    };
    let tokens = lexica.text.process(&doc.id, &text);
    (
        PreparedDoc {
            id: doc.id.clone(),
            tokens,
            entities,
            labels: doc.annotations.clone(),
        },
        report,
    )
}

pub fn prepare(corpus: &Corpus, lexica: &Lexica, config: &PipelineConfig) -> Vec<PreparedDoc> {
    corpus
        .documents()
        .par_iter()
        .map(|d| prepare_judgement(d, lexica, config).0)
        .collect()
}

/// A fitted pipeline: everything needed to turn prepared documents into
/// predictions. This is the model artifact written by `train`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub config: PipelineConfig,
    pub vectorizer: VectorizerModel,
    pub encoder: CategoricalEncoder,
    pub correlations: Vec<CorrelationEntry>,
    pub model: EnsembleModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub feature: String,
    pub r_s: Option<f64>,
}

impl From<&SpearmanReport> for CorrelationEntry {
    fn from(r: &SpearmanReport) -> Self {
        Self {
            feature: r.feature.clone(),
            r_s: r.r_s,
        }
    }
}

/// All candidate columns: the seven categorical codes, then the n-gram
/// counts.
pub fn full_matrix(
    docs: &[PreparedDoc],
    vectorizer: &VectorizerModel,
    encoder: &CategoricalEncoder,
) -> Result<FeatureMatrix> {
    let records: Vec<EntityRecord> = docs.iter().map(|d| d.entities.clone()).collect();
    let streams: Vec<TokenStream> = docs.iter().map(|d| d.tokens.clone()).collect();
    let mut names = encoder.names();
    let mut kinds = vec![ColumnKind::Categorical; names.len()];
    let mut columns = encoder.transform(&records);
    names.extend(vectorizer.terms.iter().cloned());
    kinds.extend(std::iter::repeat_n(ColumnKind::Textual, vectorizer.terms.len()));
    columns.extend(vectorizer.transform(&streams));
    FeatureMatrix::new(docs.iter().map(|d| d.id.clone()).collect(), names, kinds, columns)
}

pub fn fit_pipeline(
    docs: &[PreparedDoc],
    catalogs: &Catalogs,
    config: &PipelineConfig,
) -> Result<FittedPipeline> {
    config.validate()?;
    if docs.is_empty() {
        return Err(Error::Invalid("cannot fit on an empty corpus".into()));
    }
    let streams: Vec<TokenStream> = docs.iter().map(|d| d.tokens.clone()).collect();
    let v = &config.vectorizer;
    let vectorizer = fit_vectorizer(&streams, v.max_df, v.min_df, v.ngram_range)?;
    let records: Vec<EntityRecord> = docs.iter().map(|d| d.entities.clone()).collect();
    let encoder = CategoricalEncoder::fit(&records);
    let matrix = full_matrix(docs, &vectorizer, &encoder)?;

    let label_sets: Vec<Vec<LabelAssignment>> = docs.iter().map(|d| d.labels.clone()).collect();
    let target = docs
        .iter()
        .map(|d| {
            catalogs
                .combos
                .position(&d.labels)
                .ok_or_else(|| Error::UnknownLabel(format!("label set of document {}", d.id)))
        })
        .collect::<Result<Vec<usize>>>()?;

    let sel = &config.selection;
    let categorical = matrix.columns_of_kind(ColumnKind::Categorical);
    let corr = select_by_correlation(&matrix, &categorical, &target, sel.correlation_threshold)?;
    let mut candidates: Vec<usize> = if sel.correlation_filter {
        corr.kept.clone()
    } else {
        categorical.clone()
    };
    candidates.extend(matrix.columns_of_kind(ColumnKind::Textual));

    let distinct: BTreeSet<usize> = target.iter().copied().collect();
    let selected = if sel.importance && distinct.len() > 1 {
        let imp = select_by_importance(
            &matrix,
            &candidates,
            &target,
            sel.importance_estimators,
            sel.importance_rule,
            config.seed,
        )?;
        log::debug!("importance selection kept {} of {} columns", imp.kept.len(), candidates.len());
        imp.kept
    } else {
        candidates
    };
    if selected.is_empty() {
        return Err(Error::Invalid("feature selection removed every column".into()));
    }
    let reduced = matrix.select(&selected);
    let mut model = fit_ensemble(
        &reduced.columns,
        &reduced.names,
        &label_sets,
        catalogs,
        &config.effective_hyperparams(),
        config.variant,
        config.strategy,
    )?;
    model.bts_threshold = config.bts_threshold;
    Ok(FittedPipeline {
        config: config.clone(),
        vectorizer,
        encoder,
        correlations: corr.reports.iter().map(CorrelationEntry::from).collect(),
        model,
    })
}

impl FittedPipeline {
    /// Feature matrix restricted to the model's columns, in model order.
    pub fn featurize(&self, docs: &[PreparedDoc]) -> Result<FeatureMatrix> {
        let full = full_matrix(docs, &self.vectorizer, &self.encoder)?;
        let index: std::collections::HashMap<&str, usize> =
            full.names.iter().enumerate().map(|(j, n)| (n.as_str(), j)).collect();
        let cols = self
            .model
            .feature_names
            .iter()
            .map(|n| index.get(n.as_str()).copied().ok_or_else(|| Error::MissingColumn(n.clone())))
            .collect::<Result<Vec<_>>>()?;
        Ok(full.select(&cols))
    }

    /// Predicted class-index sets, one per document.
    pub fn predict_indices(&self, docs: &[PreparedDoc]) -> Result<Vec<BTreeSet<usize>>> {
        let m = self.featurize(docs)?;
        (0..m.n_rows())
            .into_par_iter()
            .map(|i| self.model.predict_indices(&m.row(i)))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        p.model.validate()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tuned_settings_match_table() {
        let h = tuned_hyperparams(Variant::Rf, Strategy::Mts);
        assert_eq!(
            (h.criterion, h.max_depth, h.min_samples_leaf, h.min_samples_split, h.n_estimators),
            (Criterion::Gini, Some(100), 10, 2, 200)
        );
        let h = tuned_hyperparams(Variant::Eetc, Strategy::Bts);
        assert_eq!((h.class_weight, h.criterion, h.max_depth), (ClassWeight::Balanced, Criterion::Entropy, Some(500)));
    }

    #[test]
    fn config_validation() {
        let mut c = PipelineConfig::default();
        assert!(c.validate().is_ok());
        c.vectorizer.min_df = 0.6;
        assert!(matches!(c.validate(), Err(Error::Config(m)) if m.contains("min_df")));
        let c = PipelineConfig {
            hyperparams: Some(Hyperparams {
                min_samples_split: 1,
                ..Hyperparams::default()
            }),
            ..PipelineConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn tags_are_stripped() {
        assert_eq!(TAGS.replace_all("el Magistrado @Judge falló", " "), "el Magistrado   falló");
    }
}
