//! Document–feature matrix construction and feature selection.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entities::{EntityRecord, ENTITY_FIELDS};
use crate::error::{Error, Result};
use crate::forest::{fit_forest, ForestOptions, Variant};
use crate::text::TokenStream;
use crate::tree::Hyperparams;

/// Word n-gram counter with document-frequency filtering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VectorizerSpec", into = "VectorizerSpec")]
pub struct VectorizerModel {
    /// Kept n-grams in lexicographic order; position = column index.
    pub terms: Vec<String>,
    pub max_df: f64,
    pub min_df: f64,
    pub ngram_range: (usize, usize),
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VectorizerSpec {
    terms: Vec<String>,
    max_df: f64,
    min_df: f64,
    ngram_range: (usize, usize),
}

impl From<VectorizerSpec> for VectorizerModel {
    fn from(s: VectorizerSpec) -> Self {
        Self::from_terms(s.terms, s.max_df, s.min_df, s.ngram_range)
    }
}

impl From<VectorizerModel> for VectorizerSpec {
    fn from(v: VectorizerModel) -> Self {
        Self {
            terms: v.terms,
            max_df: v.max_df,
            min_df: v.min_df,
            ngram_range: v.ngram_range,
        }
    }
}

fn ngrams(tokens: &[String], (lo, hi): (usize, usize), mut f: impl FnMut(String)) {
    for n in lo..=hi {
        for w in tokens.windows(n) {
            f(w.join(" "));
        }
    }
}

/// Learns the vocabulary. A term is kept when the fraction of documents
/// containing it lies in `[min_df, max_df]`; anything outside either bound is
/// dropped.
pub fn fit_vectorizer(
    streams: &[TokenStream],
    max_df: f64,
    min_df: f64,
    ngram_range: (usize, usize),
) -> Result<VectorizerModel> {
    if !(0.0..=1.0).contains(&min_df) || !(0.0..=1.0).contains(&max_df) || min_df >= max_df {
        return Err(Error::Config(format!(
            "document-frequency bounds must satisfy 0 <= min_df < max_df <= 1 (got {min_df}, {max_df})"
        )));
    }
    if ngram_range.0 < 1 || ngram_range.0 > ngram_range.1 {
        return Err(Error::Config(format!(
            "ngram_range must satisfy 1 <= lo <= hi (got {:?})",
            ngram_range
        )));
    }
    let mut df: HashMap<String, usize> = HashMap::new();
    for s in streams {
        let mut seen = std::collections::HashSet::new();
        ngrams(&s.tokens, ngram_range, |g| {
            seen.insert(g);
        });
        for g in seen {
            *df.entry(g).or_default() += 1;
        }
    }
    let n = streams.len() as f64;
    let (lo, hi) = (min_df * n, max_df * n);
    let mut terms: Vec<String> = df
        .into_iter()
        .filter(|&(_, d)| d as f64 >= lo && d as f64 <= hi)
        .map(|(t, _)| t)
        .collect();
    if terms.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    terms.sort();
    Ok(VectorizerModel::from_terms(terms, max_df, min_df, ngram_range))
}

impl VectorizerModel {
    pub fn from_terms(terms: Vec<String>, max_df: f64, min_df: f64, ngram_range: (usize, usize)) -> Self {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self {
            terms,
            max_df,
            min_df,
            ngram_range,
            index,
        }
    }

    pub fn column_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    /// Count columns (one per vocabulary term); unseen n-grams are ignored.
    pub fn transform(&self, streams: &[TokenStream]) -> Vec<Vec<f64>> {
        let sparse: Vec<BTreeMap<usize, u32>> = streams
            .par_iter()
            .map(|s| {
                let mut counts = BTreeMap::new();
                ngrams(&s.tokens, self.ngram_range, |g| {
                    if let Some(&j) = self.index.get(&g) {
                        *counts.entry(j).or_insert(0) += 1;
                    }
                });
                counts
            })
            .collect();
        let mut columns = vec![vec![0.0; streams.len()]; self.terms.len()];
        for (i, row) in sparse.iter().enumerate() {
            for (&j, &c) in row {
                columns[j][i] = c as f64;
            }
        }
        columns
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Textual,
    Categorical,
}

impl ColumnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Textual => "textual",
            ColumnKind::Categorical => "categorical",
        }
    }
}

/// Column-major feature matrix with named, typed columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub row_ids: Vec<String>,
    pub names: Vec<String>,
    pub kinds: Vec<ColumnKind>,
    pub columns: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn new(
        row_ids: Vec<String>,
        names: Vec<String>,
        kinds: Vec<ColumnKind>,
        columns: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if names.len() != columns.len() || kinds.len() != columns.len() {
            return Err(Error::Shape("names, kinds and columns differ in length".into()));
        }
        if let Some(c) = columns.iter().find(|c| c.len() != row_ids.len()) {
            return Err(Error::Shape(format!(
                "column with {} rows in a matrix of {} rows",
                c.len(),
                row_ids.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
            return Err(Error::Shape(format!("duplicate column name {dup:?}")));
        }
        Ok(Self {
            row_ids,
            names,
            kinds,
            columns,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn columns_of_kind(&self, kind: ColumnKind) -> Vec<usize> {
        (0..self.n_cols()).filter(|&j| self.kinds[j] == kind).collect()
    }

    /// Keeps the given columns, in the given order.
    pub fn select(&self, cols: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            row_ids: self.row_ids.clone(),
            names: cols.iter().map(|&j| self.names[j].clone()).collect(),
            kinds: cols.iter().map(|&j| self.kinds[j]).collect(),
            columns: cols.iter().map(|&j| self.columns[j].clone()).collect(),
        }
    }

    pub fn hstack(self, other: FeatureMatrix) -> Result<FeatureMatrix> {
        if self.row_ids != other.row_ids {
            return Err(Error::Shape("cannot stack matrices with different rows".into()));
        }
        let mut names = self.names;
        names.extend(other.names);
        let mut kinds = self.kinds;
        kinds.extend(other.kinds);
        let mut columns = self.columns;
        columns.extend(other.columns);
        FeatureMatrix::new(self.row_ids, names, kinds, columns)
    }

    /// Tab-separated export: a `id` + `name:kind` header, then one row per
    /// document.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("id");
        for (n, k) in self.names.iter().zip(&self.kinds) {
            let _ = write!(out, "\t{n}:{}", k.as_str());
        }
        out.push('\n');
        for i in 0..self.n_rows() {
            out.push_str(&self.row_ids[i]);
            for c in &self.columns {
                let v = c[i];
                if v.fract() == 0.0 && v.abs() < 1e15 {
                    let _ = write!(out, "\t{}", v as i64);
                } else {
                    let _ = write!(out, "\t{v}");
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Categories of one entity field, most frequent first; code = position + 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryTable {
    pub field: String,
    pub categories: Vec<String>,
}

impl CategoryTable {
    pub fn code(&self, value: Option<&str>) -> u32 {
        value
            .and_then(|v| self.categories.iter().position(|c| c == v))
            .map_or(0, |p| p as u32 + 1)
    }

    pub fn decode(&self, code: u32) -> Option<&str> {
        code.checked_sub(1).and_then(|i| self.categories.get(i as usize)).map(String::as_str)
    }
}

/// Frequency-ordered integer coding of the seven entity fields; unknown or
/// unseen values get the reserved code 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalEncoder {
    pub tables: Vec<CategoryTable>,
}

impl CategoricalEncoder {
    pub fn fit(records: &[EntityRecord]) -> Self {
        let values: Vec<[Option<String>; 7]> = records.iter().map(EntityRecord::values).collect();
        let tables = ENTITY_FIELDS
            .iter()
            .enumerate()
            .map(|(f, name)| {
                let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
                for v in values.iter().filter_map(|r| r[f].as_deref()) {
                    *freq.entry(v).or_default() += 1;
                }
                let mut cats: Vec<(&str, usize)> = freq.into_iter().collect();
                // BTreeMap order makes the sort's tie-break lexicographic
                cats.sort_by(|a, b| b.1.cmp(&a.1));
                CategoryTable {
                    field: name.to_string(),
                    categories: cats.into_iter().map(|(c, _)| c.to_string()).collect(),
                }
            })
            .collect();
        Self { tables }
    }

    pub fn transform(&self, records: &[EntityRecord]) -> Vec<Vec<f64>> {
        let values: Vec<[Option<String>; 7]> = records.iter().map(EntityRecord::values).collect();
        self.tables
            .iter()
            .enumerate()
            .map(|(f, t)| values.iter().map(|r| t.code(r[f].as_deref()) as f64).collect())
            .collect()
    }

    pub fn names(&self) -> Vec<String> {
        self.tables.iter().map(|t| t.field.clone()).collect()
    }
}

pub fn encode_categoricals(records: &[EntityRecord]) -> (CategoricalEncoder, Vec<Vec<f64>>) {
    let enc = CategoricalEncoder::fit(records);
    let cols = enc.transform(records);
    (enc, cols)
}

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub const RANK_BINS: u32 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct RankBins {
    /// 1 holds the largest values, 10 the smallest.
    pub bins: Vec<u32>,
    /// All values equal; every entry is in bin 1.
    pub constant: bool,
}

/// Ranks the values, cuts the rank range into ten equal-width bins and
/// numbers them in reverse order of magnitude.
pub fn discretize_ranks(values: &[f64]) -> RankBins {
    let ranks = average_ranks(values);
    let lo = ranks.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ranks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() || hi <= lo {
        return RankBins {
            bins: vec![1; values.len()],
            constant: true,
        };
    }
    let bins = ranks
        .iter()
        .map(|r| {
            let b = (((r - lo) / (hi - lo)) * RANK_BINS as f64).floor() as u32;
            RANK_BINS - b.min(RANK_BINS - 1)
        })
        .collect();
    RankBins {
        bins,
        constant: false,
    }
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va == 0.0 || vb == 0.0 {
        return None;
    }
    Some((cov / (va.sqrt() * vb.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman's rank correlation: the Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("lengths {} and {} differ", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::Invalid("spearman needs at least two observations".into()));
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let r = pearson(&rx, &ry).ok_or_else(|| Error::Undefined("rank correlation of a constant sequence".into()))?;
    // identical or mirrored rankings are exactly ±1, whatever the rounding
    let n1 = (x.len() + 1) as f64;
    if rx == ry {
        Ok(1.0)
    } else if rx.iter().zip(&ry).all(|(a, b)| a + b == n1) {
        Ok(-1.0)
    } else {
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpearmanReport {
    pub feature: String,
    /// `None` when the discretised feature is constant.
    pub r_s: Option<f64>,
    pub feature_ranks: Vec<u32>,
    pub target_ranks: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSelection {
    pub kept: Vec<usize>,
    pub reports: Vec<SpearmanReport>,
}

pub const DEFAULT_CORRELATION_THRESHOLD: f64 = 0.05;

/// Keeps the columns whose discretised ranks correlate with the discretised
/// target by at least `threshold` in absolute value. Constant columns never
/// pass.
pub fn select_by_correlation(
    matrix: &FeatureMatrix,
    cols: &[usize],
    target: &[usize],
    threshold: f64,
) -> Result<CorrelationSelection> {
    if target.len() != matrix.n_rows() {
        return Err(Error::Shape("target length differs from matrix rows".into()));
    }
    let target_bins = discretize_ranks(&target.iter().map(|&t| t as f64).collect::<Vec<_>>());
    let ty: Vec<f64> = target_bins.bins.iter().map(|&b| b as f64).collect();
    let mut kept = Vec::new();
    let mut reports = Vec::new();
    for &j in cols {
        let fb = discretize_ranks(&matrix.columns[j]);
        let r_s = if fb.constant || target_bins.constant || ty.len() < 2 {
            None
        } else {
            let fx: Vec<f64> = fb.bins.iter().map(|&b| b as f64).collect();
            spearman(&fx, &ty).ok()
        };
        if r_s.is_some_and(|r| r.abs() >= threshold) {
            kept.push(j);
        }
        reports.push(SpearmanReport {
            feature: matrix.names[j].clone(),
            r_s,
            feature_ranks: fb.bins,
            target_ranks: target_bins.bins.clone(),
        });
    }
    Ok(CorrelationSelection { kept, reports })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase", tag = "rule", content = "value")]
pub enum ImportanceRule {
    #[default]
    Mean,
    Threshold(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceSelection {
    pub kept: Vec<usize>,
    /// Importance of each candidate column, aligned with the input `cols`.
    pub importances: Vec<f64>,
    pub cutoff: f64,
}

pub const DEFAULT_SELECTION_ESTIMATORS: usize = 20;

/// Fits a random forest on the candidate columns and keeps those whose
/// impurity-decrease importance reaches the rule's cut-off.
pub fn select_by_importance(
    matrix: &FeatureMatrix,
    cols: &[usize],
    labels: &[usize],
    n_estimators: usize,
    rule: ImportanceRule,
    seed: u64,
) -> Result<ImportanceSelection> {
    if cols.is_empty() {
        return Ok(ImportanceSelection {
            kept: Vec::new(),
            importances: Vec::new(),
            cutoff: 0.0,
        });
    }
    if labels.len() != matrix.n_rows() {
        return Err(Error::Shape("label length differs from matrix rows".into()));
    }
    if labels.iter().all(|&y| y == labels[0]) {
        return Err(Error::Invalid(
            "importance selection needs at least two distinct classes".into(),
        ));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let columns: Vec<Vec<f64>> = cols.iter().map(|&j| matrix.columns[j].clone()).collect();
    let params = Hyperparams {
        n_estimators,
        seed,
        ..Hyperparams::default()
    };
    let forest = fit_forest(
        &columns,
        labels,
        n_classes,
        &params,
        ForestOptions::for_variant(Variant::Rf, &params),
    )?;
    let importances = forest.feature_importances(columns.len());
    let cutoff = match rule {
        ImportanceRule::Mean => importances.iter().sum::<f64>() / importances.len() as f64,
        ImportanceRule::Threshold(t) => t,
    };
    let kept = cols
        .iter()
        .zip(&importances)
        .filter(|&(_, &v)| v >= cutoff && v > 0.0)
        .map(|(&j, _)| j)
        .collect();
    Ok(ImportanceSelection {
        kept,
        importances,
        cutoff,
    })
}
