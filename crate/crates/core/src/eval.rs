//! Cross-validation, grid search and the results report.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::LabelAssignment;
use crate::error::{Error, Result};
use crate::forest::{Catalogs, Strategy, Variant};
use crate::metrics::Scores;
use crate::pipeline::{fit_pipeline, PipelineConfig, PreparedDoc};
use crate::tree::{ClassWeight, Criterion, Splitter};

/// Fold id per document. Documents of each stratum with at least `k`
/// members are dealt round-robin after a seeded shuffle; the remaining
/// documents are pooled, shuffled and dealt the same way. The dealing counter
/// runs across strata so fold sizes differ by at most one.
pub fn stratified_folds(strata: &[usize], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Config("folds must be at least 2".into()));
    }
    if strata.len() < k {
        return Err(Error::Config(format!(
            "{k} folds need at least {k} documents, got {}",
            strata.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &s) in strata.iter().enumerate() {
        groups.entry(s).or_default().push(i);
    }
    let mut fold = vec![0; strata.len()];
    let mut counter = 0;
    let mut pool = Vec::new();
    for members in groups.values_mut() {
        if members.len() < k {
            pool.extend_from_slice(members);
            continue;
        }
        members.shuffle(&mut rng);
        for &i in members.iter() {
            fold[i] = counter % k;
            counter += 1;
        }
    }
    pool.shuffle(&mut rng);
    for i in pool {
        fold[i] = counter % k;
        counter += 1;
    }
    Ok(fold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub strategy: Strategy,
    pub variant: Variant,
    pub folds: Vec<Scores>,
    pub mean: Scores,
    /// Mean wall-clock seconds spent fitting per fold.
    pub train_seconds: f64,
}

pub const REPORT_HEADER: &str = "strategy\tmodel\texact_match\taccuracy\tmacro_precision\tmicro_precision\tmacro_recall\tmicro_recall\tmacro_f\tmicro_f\thamming_loss";

impl MetricsReport {
    /// One tab-separated row: metrics as percentages with two decimals,
    /// plus the mean fitting time when `timing` is set.
    pub fn table_row(&self, timing: bool) -> String {
        let s = &self.mean;
        let pct = |v: f64| format!("{:.2}", 100.0 * v);
        let cells = [
            self.strategy.as_str().to_uppercase(),
            self.variant.as_str().to_uppercase(),
            pct(s.exact_match),
            pct(s.accuracy),
            pct(s.prf.macro_precision),
            pct(s.prf.micro_precision),
            pct(s.prf.macro_recall),
            pct(s.prf.micro_recall),
            pct(s.prf.macro_f),
            pct(s.prf.micro_f),
            pct(s.hamming_loss),
        ];
        let mut row = cells.join("\t");
        if timing {
            let _ = write!(row, "\t{:.2}", self.train_seconds);
        }
        row
    }
}

/// Timings vary between runs, so they are opt-in; without them the report
/// is reproducible byte for byte.
pub fn render_report(reports: &[MetricsReport], timing: bool) -> String {
    let mut out = String::from(REPORT_HEADER);
    if timing {
        out.push_str("\ttrain_seconds");
    }
    out.push('\n');
    for r in reports {
        let _ = writeln!(out, "{}", r.table_row(timing));
    }
    out
}

pub fn label_sets(docs: &[PreparedDoc]) -> Vec<Vec<LabelAssignment>> {
    docs.iter().map(|d| d.labels.clone()).collect()
}

/// k-fold cross-validation. Catalogs come from the whole corpus; everything
/// fitted (vocabulary, encoder, selection, model) sees only the training
/// split of each fold.
pub fn cross_validate(
    docs: &[PreparedDoc],
    config: &PipelineConfig,
    k: usize,
    seed: u64,
) -> Result<MetricsReport> {
    config.validate()?;
    let sets = label_sets(docs);
    let catalogs = Catalogs::from_label_sets(&sets);
    let strata: Vec<usize> = sets
        .iter()
        .map(|s| catalogs.combos.position(s).expect("catalog built from these sets"))
        .collect();
    let fold_of = stratified_folds(&strata, k, seed)?;
    let mut folds = Vec::with_capacity(k);
    let mut seconds = 0.0;
    for f in 0..k {
        let (train, test): (Vec<usize>, Vec<usize>) = (0..docs.len()).partition(|&i| fold_of[i] != f);
        let train_docs: Vec<PreparedDoc> = train.iter().map(|&i| docs[i].clone()).collect();
        let test_docs: Vec<PreparedDoc> = test.iter().map(|&i| docs[i].clone()).collect();
        let seen: BTreeSet<usize> = train.iter().map(|&i| strata[i]).collect();
        let missing = catalogs.combos.p() - seen.len();
        if missing > 0 {
            log::warn!("fold {f}: {missing} label combination(s) have no training documents");
        }
        let start = Instant::now();
        let fitted = fit_pipeline(&train_docs, &catalogs, config)?;
        seconds += start.elapsed().as_secs_f64();
        let predicted = fitted.predict_indices(&test_docs)?;
        let truth = test_docs
            .iter()
            .map(|d| catalogs.classes.indices(&d.labels))
            .collect::<Result<Vec<_>>>()?;
        let scores = Scores::compute(&truth, &predicted, catalogs.classes.m())?;
        log::info!(
            "fold {f}: exact match {:.4}, micro precision {:.4}",
            scores.exact_match,
            scores.prf.micro_precision
        );
        folds.push(scores);
    }
    Ok(MetricsReport {
        strategy: config.strategy,
        variant: config.variant,
        mean: Scores::mean(&folds),
        folds,
        train_seconds: seconds / k as f64,
    })
}

/// One tunable setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "param", content = "value", rename_all = "snake_case")]
pub enum GridValue {
    MaxDf(f64),
    MinDf(f64),
    NgramRange((usize, usize)),
    ClassWeight(ClassWeight),
    MaxDepth(Option<usize>),
    MinSamplesSplit(usize),
    MinSamplesLeaf(usize),
    Criterion(Criterion),
    Splitter(Splitter),
    NEstimators(usize),
}

impl GridValue {
    pub fn apply(&self, config: &mut PipelineConfig) {
        let mut h = config.effective_hyperparams();
        match *self {
            GridValue::MaxDf(v) => config.vectorizer.max_df = v,
            GridValue::MinDf(v) => config.vectorizer.min_df = v,
            GridValue::NgramRange(r) => config.vectorizer.ngram_range = r,
            GridValue::ClassWeight(w) => h.class_weight = w,
            GridValue::MaxDepth(d) => h.max_depth = d,
            GridValue::MinSamplesSplit(v) => h.min_samples_split = v,
            GridValue::MinSamplesLeaf(v) => h.min_samples_leaf = v,
            GridValue::Criterion(c) => h.criterion = c,
            GridValue::Splitter(s) => h.splitter = s,
            GridValue::NEstimators(n) => h.n_estimators = n,
        }
        config.hyperparams = Some(h);
    }

    fn describe(&self) -> String {
        match self {
            GridValue::MaxDf(v) => format!("max_df={v}"),
            GridValue::MinDf(v) => format!("min_df={v}"),
            GridValue::NgramRange((a, b)) => format!("ngram_range=({a},{b})"),
            GridValue::ClassWeight(w) => format!("class_weight={w:?}").to_lowercase(),
            GridValue::MaxDepth(d) => match d {
                Some(d) => format!("max_depth={d}"),
                None => "max_depth=none".into(),
            },
            GridValue::MinSamplesSplit(v) => format!("min_samples_split={v}"),
            GridValue::MinSamplesLeaf(v) => format!("min_samples_leaf={v}"),
            GridValue::Criterion(c) => format!("criterion={c:?}").to_lowercase(),
            GridValue::Splitter(s) => format!("splitter={s:?}").to_lowercase(),
            GridValue::NEstimators(n) => format!("n_estimators={n}"),
        }
    }
}

/// Axes of a parameter grid; each axis lists the values of one setting.
pub type ParamGrid = Vec<Vec<GridValue>>;

/// Cartesian product in grid order: the last axis varies fastest.
pub fn grid_combinations(grid: &ParamGrid) -> Vec<Vec<GridValue>> {
    let mut out: Vec<Vec<GridValue>> = vec![Vec::new()];
    for axis in grid {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |v| {
                    let mut c = prefix.clone();
                    c.push(v.clone());
                    c
                })
            })
            .collect();
    }
    out
}

/// The vectorizer search space.
pub fn vectorizer_grid() -> ParamGrid {
    vec![
        [0.9, 0.7, 0.5].into_iter().map(GridValue::MaxDf).collect(),
        [0.1, 0.01, 0.001].into_iter().map(GridValue::MinDf).collect(),
        [(1, 1), (1, 2), (1, 3)].into_iter().map(GridValue::NgramRange).collect(),
    ]
}

/// The model search space; the splitter axis applies to single trees, the
/// estimator axis to ensembles.
pub fn model_grid(variant: Variant) -> ParamGrid {
    let mut grid = vec![
        vec![GridValue::ClassWeight(ClassWeight::None), GridValue::ClassWeight(ClassWeight::Balanced)],
        [Some(100), Some(500), None].into_iter().map(GridValue::MaxDepth).collect(),
        [2, 50, 100].into_iter().map(GridValue::MinSamplesSplit).collect(),
        [1, 50, 100].into_iter().map(GridValue::MinSamplesLeaf).collect(),
        vec![GridValue::Criterion(Criterion::Gini), GridValue::Criterion(Criterion::Entropy)],
    ];
    match variant {
        Variant::Dt | Variant::Etc => {
            grid.push(vec![GridValue::Splitter(Splitter::Best), GridValue::Splitter(Splitter::Random)])
        }
        Variant::Rf | Variant::Eetc => grid.push([50, 100, 200].into_iter().map(GridValue::NEstimators).collect()),
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    #[default]
    MicroF,
    MacroF,
    MicroPrecision,
    ExactMatch,
    Accuracy,
}

impl Scoring {
    pub fn score(self, s: &Scores) -> f64 {
        match self {
            Scoring::MicroF => s.prf.micro_f,
            Scoring::MacroF => s.prf.macro_f,
            Scoring::MicroPrecision => s.prf.micro_precision,
            Scoring::ExactMatch => s.exact_match,
            Scoring::Accuracy => s.accuracy,
        }
    }
}

impl std::str::FromStr for Scoring {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "micro_f" => Ok(Scoring::MicroF),
            "macro_f" => Ok(Scoring::MacroF),
            "micro_precision" => Ok(Scoring::MicroPrecision),
            "exact_match" => Ok(Scoring::ExactMatch),
            "accuracy" => Ok(Scoring::Accuracy),
            _ => Err(Error::Config(format!("unknown scoring {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub params: Vec<GridValue>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub entries: Vec<GridEntry>,
    /// Index into `entries` of the best combination (first on ties).
    pub best: usize,
}

impl GridResult {
    pub fn best_params(&self) -> &[GridValue] {
        &self.entries[self.best].params
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("rank\tscore\tparams\n");
        let mut order: Vec<usize> = (0..self.entries.len()).collect();
        order.sort_by(|&a, &b| self.entries[b].score.total_cmp(&self.entries[a].score).then(a.cmp(&b)));
        for (rank, i) in order.into_iter().enumerate() {
            let e = &self.entries[i];
            let params: Vec<String> = e.params.iter().map(GridValue::describe).collect();
            let _ = writeln!(out, "{}\t{:.6}\t{}", rank + 1, e.score, params.join(" "));
        }
        out
    }
}

pub fn grid_search(
    docs: &[PreparedDoc],
    base: &PipelineConfig,
    grid: &ParamGrid,
    k: usize,
    scoring: Scoring,
    seed: u64,
) -> Result<GridResult> {
    let combos = grid_combinations(grid);
    if grid.is_empty() || combos.is_empty() {
        return Err(Error::Config("parameter grid is empty".into()));
    }
    let mut entries = Vec::with_capacity(combos.len());
    for params in combos {
        let mut config = base.clone();
        for p in &params {
            p.apply(&mut config);
        }
        let report = cross_validate(docs, &config, k, seed)?;
        let score = scoring.score(&report.mean);
        log::info!("grid {:?}: {score:.4}", params);
        entries.push(GridEntry { params, score });
    }
    let mut best = 0;
    for (i, e) in entries.iter().enumerate() {
        if e.score > entries[best].score {
            best = i;
        }
    }
    Ok(GridResult { entries, best })
}

/// A seeded `fraction` of the documents, in original order.
pub fn sample_fraction<T: Clone>(items: &[T], fraction: f64, seed: u64) -> Vec<T> {
    let keep = ((items.len() as f64 * fraction).round() as usize).clamp(1.min(items.len()), items.len());
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx.truncate(keep);
    idx.sort_unstable();
    idx.into_iter().map(|i| items[i].clone()).collect()
}
