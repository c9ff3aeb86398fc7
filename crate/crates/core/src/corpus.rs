//! Document and annotation data model, plus the line-delimited corpus format.
//!
//! Each line of a corpus file is one JSON object:
//!
//! ```text
//! {"id": "d1", "text": "...", "gin": "3605742120190001234",
//!  "labels": [{"order": "social", "categories": ["a", "b", "c"]}]}
//! ```
//!
//! `gin` is optional. A document carries between one and three distinct label
//! assignments.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_LABELS: usize = 3;
pub const GIN_LEN: usize = 19;

/// Top-level branch of law heading each label assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SubstantiveOrder {
    #[serde(rename = "penal")]
    Penal,
    #[serde(rename = "civil")]
    Civil,
    #[serde(rename = "social")]
    Social,
    #[serde(rename = "administrative")]
    Administrative,
    #[serde(rename = "civil/mercantile")]
    CivilMercantile,
    #[serde(rename = "mercantile")]
    Mercantile,
    #[serde(rename = "tributary")]
    Tributary,
}

impl SubstantiveOrder {
    pub const ALL: [SubstantiveOrder; 7] = [
        SubstantiveOrder::Penal,
        SubstantiveOrder::Civil,
        SubstantiveOrder::Social,
        SubstantiveOrder::Administrative,
        SubstantiveOrder::CivilMercantile,
        SubstantiveOrder::Mercantile,
        SubstantiveOrder::Tributary,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SubstantiveOrder::Penal => "penal",
            SubstantiveOrder::Civil => "civil",
            SubstantiveOrder::Social => "social",
            SubstantiveOrder::Administrative => "administrative",
            SubstantiveOrder::CivilMercantile => "civil/mercantile",
            SubstantiveOrder::Mercantile => "mercantile",
            SubstantiveOrder::Tributary => "tributary",
        }
    }
}

impl fmt::Display for SubstantiveOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SubstantiveOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let folded = normalise_ws(&s.to_lowercase());
        SubstantiveOrder::ALL
            .into_iter()
            .find(|o| o.as_str() == folded)
            .ok_or_else(|| Error::Invalid(format!("unknown substantive order {s:?}")))
    }
}

/// One class: a substantive order plus exactly three law categories.
///
/// Equality, ordering and hashing all go through [`LabelAssignment::class_key`],
/// so two assignments differing only in case or spacing are the same class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelAssignment {
    pub order: SubstantiveOrder,
    pub categories: [String; 3],
}

impl LabelAssignment {
    pub fn new(order: SubstantiveOrder, categories: [&str; 3]) -> Result<Self> {
        let categories = categories.map(str::to_string);
        if let Some(i) = categories.iter().position(|c| c.trim().is_empty()) {
            return Err(Error::Invalid(format!("law category {} is empty", i + 1)));
        }
        Ok(Self { order, categories })
    }

    /// Case-folded, whitespace-normalised `order|cat1|cat2|cat3`.
    pub fn class_key(&self) -> String {
        let mut key = self.order.as_str().to_string();
        for c in &self.categories {
            key.push('|');
            key.push_str(&normalise_ws(&c.to_lowercase()));
        }
        key
    }
}

impl PartialEq for LabelAssignment {
    fn eq(&self, other: &Self) -> bool {
        self.class_key() == other.class_key()
    }
}

impl Eq for LabelAssignment {}

impl Hash for LabelAssignment {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.class_key().hash(state);
    }
}

impl PartialOrd for LabelAssignment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LabelAssignment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.class_key().cmp(&other.class_key())
    }
}

impl fmt::Display for LabelAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}; {}; {}; {}",
            self.order, self.categories[0], self.categories[1], self.categories[2]
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Judgement {
    pub id: String,
    #[serde(rename = "text")]
    pub raw_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gin: Option<String>,
    #[serde(rename = "labels")]
    pub annotations: Vec<LabelAssignment>,
}

impl Judgement {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("empty document id".into());
        }
        if self.annotations.is_empty() || self.annotations.len() > MAX_LABELS {
            return Err(format!(
                "label set size out of [1,3] (got {})",
                self.annotations.len()
            ));
        }
        if let Some(gin) = &self.gin {
            if !is_gin(gin) {
                return Err(format!("gin {gin:?} is not exactly 19 decimal digits"));
            }
        }
        for (i, a) in self.annotations.iter().enumerate() {
            if a.categories.iter().any(|c| c.trim().is_empty()) {
                return Err(format!("label {} has an empty law category", i + 1));
            }
            if self.annotations[..i].contains(a) {
                return Err(format!("duplicate label {:?}", a.class_key()));
            }
        }
        Ok(())
    }
}

pub fn is_gin(s: &str) -> bool {
    s.len() == GIN_LEN && s.bytes().all(|b| b.is_ascii_digit())
}

/// A validated, non-empty collection of judgements with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    documents: Vec<Judgement>,
}

impl Corpus {
    pub fn new(documents: Vec<Judgement>) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::Corpus("corpus is empty".into()));
        }
        let mut seen = HashSet::new();
        for (i, d) in documents.iter().enumerate() {
            d.validate().map_err(|message| Error::Record {
                line: i + 1,
                message,
            })?;
            if !seen.insert(d.id.as_str()) {
                return Err(Error::Record {
                    line: i + 1,
                    message: format!("duplicate document id {:?}", d.id),
                });
            }
        }
        Ok(Self { documents })
    }

    pub fn documents(&self) -> &[Judgement] {
        &self.documents
    }

    pub fn n(&self) -> usize {
        self.documents.len()
    }

    pub fn label_sets(&self) -> Vec<Vec<LabelAssignment>> {
        self.documents.iter().map(|d| d.annotations.clone()).collect()
    }

    /// Sub-corpus with the documents at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Corpus> {
        Corpus::new(indices.iter().map(|&i| self.documents[i].clone()).collect())
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for d in &self.documents {
            out.push_str(&serde_json::to_string(d)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut documents = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let doc = parse_record(line).map_err(|message| Error::Record {
                line: line_no,
                message,
            })?;
            if !seen.insert(doc.id.clone()) {
                return Err(Error::Record {
                    line: line_no,
                    message: format!("duplicate document id {:?}", doc.id),
                });
            }
            documents.push(doc);
        }
        if documents.is_empty() {
            return Err(Error::Corpus("corpus file contains no records".into()));
        }
        Ok(Self { documents })
    }
}

#[derive(Deserialize)]
struct RawLabel {
    order: String,
    categories: Vec<String>,
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    text: String,
    #[serde(default)]
    gin: Option<String>,
    labels: Vec<RawLabel>,
}

fn parse_record(line: &str) -> std::result::Result<Judgement, String> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| format!("malformed record: {e}"))?;
    let mut annotations = Vec::with_capacity(raw.labels.len());
    for (i, l) in raw.labels.into_iter().enumerate() {
        let order = l
            .order
            .parse::<SubstantiveOrder>()
            .map_err(|e| format!("label {}: {e}", i + 1))?;
        let categories: [String; 3] = l.categories.try_into().map_err(|v: Vec<String>| {
            format!(
                "label {}: expected exactly 3 law categories, got {}",
                i + 1,
                v.len()
            )
        })?;
        annotations.push(LabelAssignment { order, categories });
    }
    let doc = Judgement {
        id: raw.id,
        raw_text: raw.text,
        gin: raw.gin,
        annotations,
    };
    doc.validate()?;
    Ok(doc)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Corpus::from_jsonl(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub label_set_size_histogram: BTreeMap<usize, usize>,
    pub label_cardinality: f64,
    pub class_count: usize,
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let mut histogram = BTreeMap::new();
    let mut classes = HashSet::new();
    for d in corpus.documents() {
        *histogram.entry(d.annotations.len()).or_insert(0) += 1;
        for a in &d.annotations {
            classes.insert(a.class_key());
        }
    }
    CorpusStats {
        label_cardinality: cardinality_from_histogram(&histogram),
        label_set_size_histogram: histogram,
        class_count: classes.len(),
    }
}

/// Mean label-set size implied by a size → count histogram.
pub fn cardinality_from_histogram(histogram: &BTreeMap<usize, usize>) -> f64 {
    let n: usize = histogram.values().sum();
    if n == 0 {
        return 0.0;
    }
    let total: usize = histogram.iter().map(|(size, count)| size * count).sum();
    total as f64 / n as f64
}

pub(crate) fn normalise_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_label_record() -> String {
        r#"{"id":"file-i","text":"Versa el juicio sobre la validez","labels":[{"order":"civil/mercantile","categories":["real rights","guarantee real rights","mortgage law"]},{"order":"mercantile","categories":["obligations-contracts law","banking-financial market law","banking law"]}]}"#.to_string()
    }

    #[test]
    fn two_annotations_load() {
        let corpus = Corpus::from_jsonl(&two_label_record()).unwrap();
        assert_eq!(corpus.n(), 1);
        let doc = &corpus.documents()[0];
        assert_eq!(doc.annotations.len(), 2);
        assert_eq!(doc.annotations[0].order, SubstantiveOrder::CivilMercantile);
    }

    #[test]
    fn four_annotations_rejected() {
        let label = r#"{"order":"penal","categories":["a","b","CAT"]}"#;
        let labels: Vec<String> = (0..4)
            .map(|i| label.replace("CAT", &format!("c{i}")))
            .collect();
        let line = format!(r#"{{"id":"x","text":"t","labels":[{}]}}"#, labels.join(","));
        let err = Corpus::from_jsonl(&line).unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
        assert!(err.contains("label set size out of [1,3]"), "{err}");
    }

    #[test]
    fn gin_length_rule() {
        let ok = r#"{"id":"x","text":"t","gin":"0123456789012345678","labels":[{"order":"penal","categories":["a","b","c"]}]}"#;
        assert!(Corpus::from_jsonl(ok).is_ok());
        let short = ok.replace("0123456789012345678", "012345678901234567");
        assert!(Corpus::from_jsonl(&short).is_err());
        let letters = ok.replace("0123456789012345678", "012345678901234567X");
        assert!(Corpus::from_jsonl(&letters).is_err());
    }

    #[test]
    fn duplicate_ids_and_empty_file() {
        let rec = r#"{"id":"x","text":"t","labels":[{"order":"penal","categories":["a","b","c"]}]}"#;
        let err = Corpus::from_jsonl(&format!("{rec}\n{rec}\n")).unwrap_err();
        assert!(err.to_string().contains("line 2"));
        assert!(Corpus::from_jsonl("").is_err());
        assert!(Corpus::from_jsonl("\n\n").is_err());
    }

    #[test]
    fn duplicate_annotation_rejected() {
        let rec = r#"{"id":"x","text":"t","labels":[{"order":"penal","categories":["a","b","c"]},{"order":"Penal","categories":["A","b ","c"]}]}"#;
        let err = Corpus::from_jsonl(rec).unwrap_err().to_string();
        assert!(err.contains("duplicate label"), "{err}");
    }

    #[test]
    fn wrong_category_count_names_invariant() {
        let rec = r#"{"id":"x","text":"t","labels":[{"order":"penal","categories":["a","b"]}]}"#;
        let err = Corpus::from_jsonl(rec).unwrap_err().to_string();
        assert!(err.contains("exactly 3 law categories"), "{err}");
    }

    #[test]
    fn class_key_folds_case_and_space() {
        let a = LabelAssignment::new(SubstantiveOrder::Social, ["Derecho  del trabajo", "x", "y"]).unwrap();
        let b = LabelAssignment::new(SubstantiveOrder::Social, ["derecho del Trabajo", "x", "y"]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.class_key(), "social|derecho del trabajo|x|y");
    }

    fn doc(id: &str, sizes: usize) -> Judgement {
        Judgement {
            id: id.into(),
            raw_text: String::new(),
            gin: None,
            annotations: (0..sizes)
                .map(|i| {
                    LabelAssignment::new(SubstantiveOrder::Penal, ["a", "b", &format!("c{i}")]).unwrap()
                })
                .collect(),
        }
    }

    #[test]
    fn stats_single_labelled() {
        let corpus = Corpus::new(vec![doc("a", 1), doc("b", 1)]).unwrap();
        let s = corpus_stats(&corpus);
        assert_eq!(s.label_cardinality, 1.0);
        assert_eq!(s.class_count, 1);
    }

    #[test]
    fn stats_sizes_one_and_three() {
        let corpus = Corpus::new(vec![doc("a", 1), doc("b", 3)]).unwrap();
        let s = corpus_stats(&corpus);
        assert_eq!(s.label_cardinality, 2.0);
        assert_eq!(s.label_set_size_histogram.values().sum::<usize>(), 2);
        assert_eq!(s.class_count, 3);
    }

    #[test]
    fn table_two_histogram_cardinality() {
        let h = BTreeMap::from([(1, 72182), (2, 27614), (3, 7010)]);
        let c = cardinality_from_histogram(&h);
        assert!((c - 1.39).abs() <= 0.005, "{c}");
    }
}
