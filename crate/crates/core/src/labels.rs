//! Binary (one column per class) and multi-class (one class per label-set
//! combination) transformations of the multi-label target.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, LabelAssignment, MAX_LABELS};
use crate::error::{Error, Result};

pub const DEFAULT_BTS_THRESHOLD: f64 = 0.5;

/// All distinct classes of a corpus, sorted by class key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<LabelAssignment>", into = "Vec<LabelAssignment>")]
pub struct ClassCatalog {
    classes: Vec<LabelAssignment>,
    index: HashMap<String, usize>,
}

impl From<Vec<LabelAssignment>> for ClassCatalog {
    fn from(classes: Vec<LabelAssignment>) -> Self {
        Self::from_sorted(classes)
    }
}

impl From<ClassCatalog> for Vec<LabelAssignment> {
    fn from(c: ClassCatalog) -> Self {
        c.classes
    }
}

impl ClassCatalog {
    pub fn from_label_sets<'a>(sets: impl IntoIterator<Item = &'a [LabelAssignment]>) -> Self {
        let distinct: BTreeSet<LabelAssignment> = sets.into_iter().flatten().cloned().collect();
        Self::from_sorted(distinct.into_iter().collect())
    }

    fn from_sorted(classes: Vec<LabelAssignment>) -> Self {
        let index = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.class_key(), i))
            .collect();
        Self { classes, index }
    }

    pub fn classes(&self) -> &[LabelAssignment] {
        &self.classes
    }

    pub fn m(&self) -> usize {
        self.classes.len()
    }

    pub fn index_of(&self, label: &LabelAssignment) -> Option<usize> {
        self.index.get(&label.class_key()).copied()
    }

    pub fn get(&self, i: usize) -> Option<&LabelAssignment> {
        self.classes.get(i)
    }

    /// Class indices of a label set; errors on a label outside the catalog.
    pub fn indices(&self, set: &[LabelAssignment]) -> Result<BTreeSet<usize>> {
        set.iter()
            .map(|l| self.index_of(l).ok_or_else(|| Error::UnknownLabel(l.class_key())))
            .collect()
    }

    pub fn labels(&self, indices: &BTreeSet<usize>) -> Vec<LabelAssignment> {
        indices.iter().map(|&i| self.classes[i].clone()).collect()
    }
}

pub fn build_class_catalog(corpus: &Corpus) -> ClassCatalog {
    ClassCatalog::from_label_sets(corpus.documents().iter().map(|d| d.annotations.as_slice()))
}

/// Row-major n × m indicator matrix: `rows[i][j] == 1` iff class j is in L_i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryIndicatorMatrix {
    pub rows: Vec<Vec<u8>>,
}

impl BinaryIndicatorMatrix {
    pub fn column(&self, j: usize) -> Vec<usize> {
        self.rows.iter().map(|r| r[j] as usize).collect()
    }
}

pub fn bts_encode(
    label_sets: &[Vec<LabelAssignment>],
    catalog: &ClassCatalog,
) -> Result<BinaryIndicatorMatrix> {
    let rows = label_sets
        .iter()
        .map(|set| {
            let mut row = vec![0u8; catalog.m()];
            for j in catalog.indices(set)? {
                row[j] = 1;
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BinaryIndicatorMatrix { rows })
}

/// Classes whose score exceeds `threshold`. An empty selection falls back to
/// the arg-max class; more than three selected keeps the three best. Ties go
/// to the lower class index.
pub fn bts_decode_indices(scores: &[f64], threshold: f64) -> BTreeSet<usize> {
    let mut ranked: Vec<usize> = (0..scores.len()).collect();
    ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let selected: Vec<usize> = ranked
        .iter()
        .copied()
        .filter(|&j| scores[j] > threshold)
        .take(MAX_LABELS)
        .collect();
    if selected.is_empty() {
        ranked.first().copied().into_iter().collect()
    } else {
        selected.into_iter().collect()
    }
}

pub fn bts_decode(scores: &[f64], catalog: &ClassCatalog, threshold: f64) -> Result<Vec<LabelAssignment>> {
    if scores.len() != catalog.m() {
        return Err(Error::Shape(format!(
            "score row has {} entries, catalog has {} classes",
            scores.len(),
            catalog.m()
        )));
    }
    Ok(catalog.labels(&bts_decode_indices(scores, threshold)))
}

/// Sorts a label set by class key: the reordering that makes permuted sets
/// identical.
pub fn canonicalize(set: &[LabelAssignment]) -> Vec<LabelAssignment> {
    let mut out = set.to_vec();
    out.sort();
    out.dedup();
    out
}

fn combo_key(set: &[LabelAssignment]) -> Vec<String> {
    set.iter().map(LabelAssignment::class_key).collect()
}

/// Distinct canonical label-set combinations, sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<Vec<LabelAssignment>>", into = "Vec<Vec<LabelAssignment>>")]
pub struct MtsCatalog {
    combos: Vec<Vec<LabelAssignment>>,
    index: HashMap<Vec<String>, usize>,
}

impl From<Vec<Vec<LabelAssignment>>> for MtsCatalog {
    fn from(combos: Vec<Vec<LabelAssignment>>) -> Self {
        Self::from_sorted(combos)
    }
}

impl From<MtsCatalog> for Vec<Vec<LabelAssignment>> {
    fn from(c: MtsCatalog) -> Self {
        c.combos
    }
}

impl MtsCatalog {
    pub fn from_label_sets<'a>(sets: impl IntoIterator<Item = &'a [LabelAssignment]>) -> Self {
        let mut combos: Vec<Vec<LabelAssignment>> = sets.into_iter().map(canonicalize).collect();
        combos.sort_by_key(|c| combo_key(c));
        combos.dedup_by(|a, b| combo_key(a) == combo_key(b));
        Self::from_sorted(combos)
    }

    fn from_sorted(combos: Vec<Vec<LabelAssignment>>) -> Self {
        let index = combos
            .iter()
            .enumerate()
            .map(|(i, c)| (combo_key(c), i))
            .collect();
        Self { combos, index }
    }

    pub fn combos(&self) -> &[Vec<LabelAssignment>] {
        &self.combos
    }

    pub fn p(&self) -> usize {
        self.combos.len()
    }

    /// Zero-based position of the combination of `set`.
    pub fn position(&self, set: &[LabelAssignment]) -> Option<usize> {
        self.index.get(&combo_key(&canonicalize(set))).copied()
    }
}

/// Builds the combination catalog and the 1-based class α of every set.
pub fn mts_encode(label_sets: &[Vec<LabelAssignment>]) -> (MtsCatalog, Vec<usize>) {
    let catalog = MtsCatalog::from_label_sets(label_sets.iter().map(Vec::as_slice));
    let alphas = label_sets
        .iter()
        .map(|s| catalog.position(s).expect("set is in its own catalog") + 1)
        .collect();
    (catalog, alphas)
}

/// Combination with 1-based index `alpha`.
pub fn mts_decode(alpha: usize, catalog: &MtsCatalog) -> Result<Vec<LabelAssignment>> {
    if alpha == 0 || alpha > catalog.p() {
        return Err(Error::ClassIndex {
            index: alpha,
            max: catalog.p(),
        });
    }
    Ok(catalog.combos[alpha - 1].clone())
}
