//! Replacement of references to people and companies by role tags.
//!
//! Detection runs in three passes over the raw text:
//!
//! 1. personal titles (`D.`, `Dña.`, ...) and corporate legal forms (`S.L.`)
//!    produce seed spans; a role cue right before a title (`el Magistrado`)
//!    decides its tag;
//! 2. seeds grow over adjacent capitalised first names and surnames, and
//!    corporate seeds grow leftward over the capitalised company name;
//! 3. the role registry corrects roles, and remaining runs of capitalised
//!    lexicon names become `@Person`.
//!
//! Offsets in [`ReferenceSpan`] are character offsets.

use std::cmp::Reverse;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::entities::PhraseMatcher;
use crate::error::{Error, Result};

pub const DEFAULT_JARO_THRESHOLD: f64 = 0.90;

static WORD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"@?\p{L}[\p{L}'’-]*").expect("word regex"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    #[serde(rename = "@Attorney")]
    Attorney,
    #[serde(rename = "@Corporate")]
    Corporate,
    #[serde(rename = "@Judge")]
    Judge,
    #[serde(rename = "@Lawyer")]
    Lawyer,
    #[serde(rename = "@Person")]
    Person,
}

impl Tag {
    pub fn as_str(self) -> &'static str {
        match self {
            Tag::Attorney => "@Attorney",
            Tag::Corporate => "@Corporate",
            Tag::Judge => "@Judge",
            Tag::Lawyer => "@Lawyer",
            Tag::Person => "@Person",
        }
    }

    /// Judge > Attorney > Lawyer > Corporate > Person.
    pub fn precedence(self) -> u8 {
        match self {
            Tag::Judge => 5,
            Tag::Attorney => 4,
            Tag::Lawyer => 3,
            Tag::Corporate => 2,
            Tag::Person => 1,
        }
    }

    fn stronger(self, other: Tag) -> Tag {
        if other.precedence() > self.precedence() {
            other
        } else {
            self
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().trim_start_matches('@').to_lowercase().as_str() {
            "attorney" => Ok(Tag::Attorney),
            "corporate" => Ok(Tag::Corporate),
            "judge" => Ok(Tag::Judge),
            "lawyer" => Ok(Tag::Lawyer),
            "person" => Ok(Tag::Person),
            other => Err(Error::Config(format!("unknown role {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceSpan {
    pub start: usize,
    pub end: usize,
    pub tag: Tag,
    pub surface: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnonymisationReport {
    pub counts: BTreeMap<Tag, usize>,
    pub replaced_names: Vec<(String, String)>,
}

impl AnonymisationReport {
    pub fn merge(&mut self, other: &AnonymisationReport) {
        for (tag, n) in &other.counts {
            *self.counts.entry(*tag).or_insert(0) += n;
        }
        self.replaced_names.extend(other.replaced_names.iter().cloned());
    }
}

#[derive(Debug, Clone)]
pub struct AnonLexica {
    pub titles: Vec<String>,
    pub implicit_refs: Vec<(String, Tag)>,
    pub corporate_forms: Vec<String>,
    pub first_names: HashSet<String>,
    pub surnames: HashSet<String>,
    pub registry: Vec<(String, Tag)>,
    title_matcher: PhraseMatcher,
    cue_matcher: PhraseMatcher,
    corporate_matcher: PhraseMatcher,
    registry_matcher: PhraseMatcher,
}

impl AnonLexica {
    pub fn new(
        titles: Vec<String>,
        implicit_refs: Vec<(String, Tag)>,
        corporate_forms: Vec<String>,
        first_names: impl IntoIterator<Item = String>,
        surnames: impl IntoIterator<Item = String>,
        registry: Vec<(String, Tag)>,
    ) -> Self {
        let cues: Vec<&str> = implicit_refs.iter().map(|(c, _)| c.as_str()).collect();
        let registered: Vec<&str> = registry.iter().map(|(n, _)| n.as_str()).collect();
        Self {
            title_matcher: PhraseMatcher::new(&titles),
            cue_matcher: PhraseMatcher::new(&cues),
            corporate_matcher: PhraseMatcher::new(&corporate_forms),
            registry_matcher: PhraseMatcher::new(&registered),
            first_names: first_names.into_iter().map(|n| n.to_lowercase()).collect(),
            surnames: surnames.into_iter().map(|n| n.to_lowercase()).collect(),
            titles,
            implicit_refs,
            corporate_forms,
            registry,
        }
    }

    pub fn is_name(&self, word: &str) -> bool {
        let lower = word.to_lowercase();
        if self.first_names.contains(&lower) || self.surnames.contains(&lower) {
            return true;
        }
        lower.contains('-')
            && lower
                .split('-')
                .all(|p| self.first_names.contains(p) || self.surnames.contains(p))
    }
}

/// Byte-offset span used while detecting; converted to characters on output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct RawSpan {
    start: usize,
    end: usize,
    tag: Tag,
}

#[derive(Debug, Clone, Copy)]
struct Word {
    start: usize,
    end: usize,
}

fn words(text: &str) -> Vec<Word> {
    WORD.find_iter(text)
        .filter(|m| !m.as_str().starts_with('@'))
        .map(|m| Word {
            start: m.start(),
            end: m.end(),
        })
        .collect()
}

fn is_capitalised(word: &str) -> bool {
    word.chars().next().is_some_and(char::is_uppercase)
}

fn only_space(s: &str) -> bool {
    s.chars().all(char::is_whitespace)
}

struct Scanner<'a> {
    text: &'a str,
    words: Vec<Word>,
    lexica: &'a AnonLexica,
}

impl<'a> Scanner<'a> {
    fn new(text: &'a str, lexica: &'a AnonLexica) -> Self {
        Self {
            text,
            words: words(text),
            lexica,
        }
    }

    fn word(&self, w: Word) -> &'a str {
        &self.text[w.start..w.end]
    }

    fn is_name_word(&self, w: Word) -> bool {
        let s = self.word(w);
        is_capitalised(s) && self.lexica.is_name(s)
    }

    /// First word starting at or after `pos`, if only whitespace precedes it.
    fn next_adjacent(&self, pos: usize) -> Option<Word> {
        let i = self.words.partition_point(|w| w.start < pos);
        let w = *self.words.get(i)?;
        only_space(&self.text[pos..w.start]).then_some(w)
    }

    /// Last word ending at or before `pos`, if only whitespace follows it.
    fn prev_adjacent(&self, pos: usize) -> Option<Word> {
        let i = self.words.partition_point(|w| w.end <= pos);
        let w = *self.words.get(i.checked_sub(1)?)?;
        only_space(&self.text[w.end..pos]).then_some(w)
    }

    fn seeds(&self) -> Vec<RawSpan> {
        let text = self.text;
        let lex = self.lexica;
        let cue_before = |start: usize| -> Option<Tag> {
            lex.cue_matcher
                .find_iter(text)
                .take_while(|&(s, _, _)| s < start)
                .filter(|&(_, e, _)| e <= start && only_space(&text[e..start]))
                .map(|(_, _, i)| lex.implicit_refs[i].1)
                .last()
        };

        let mut titles: Vec<RawSpan> = Vec::new();
        for (s, e, _) in lex.title_matcher.find_iter(text) {
            let surface = &text[s..e];
            let followed_by_name = self.next_adjacent(e).is_some_and(|w| self.is_name_word(w));
            if !is_capitalised(surface) && !followed_by_name {
                continue;
            }
            match titles.last_mut() {
                // "Ilmo. Sr. D." chains into one reference
                Some(prev) if only_space(&text[prev.end..s]) => prev.end = e,
                _ => titles.push(RawSpan {
                    start: s,
                    end: e,
                    tag: Tag::Person,
                }),
            }
        }
        for t in &mut titles {
            if let Some(tag) = cue_before(t.start) {
                t.tag = tag;
            }
        }

        let mut spans = titles;
        // a cue followed directly by a name, with no title in between
        for (_, e, i) in lex.cue_matcher.find_iter(text) {
            if let Some(w) = self.next_adjacent(e) {
                if self.is_name_word(w) && !spans.iter().any(|s| s.start <= w.start && w.start < s.end) {
                    spans.push(RawSpan {
                        start: w.start,
                        end: w.end,
                        tag: lex.implicit_refs[i].1,
                    });
                }
            }
        }
        for (s, e, _) in lex.corporate_matcher.find_iter(text) {
            spans.push(RawSpan {
                start: s,
                end: e,
                tag: Tag::Corporate,
            });
        }
        resolve_overlaps(spans)
    }

    fn expand(&self, spans: Vec<RawSpan>) -> Vec<RawSpan> {
        let mut out: Vec<RawSpan> = spans
            .into_iter()
            .map(|mut span| {
                if span.tag == Tag::Corporate {
                    self.grow_company(&mut span);
                } else {
                    while let Some(w) = self.next_adjacent(span.end) {
                        if !self.is_name_word(w) {
                            break;
                        }
                        span.end = w.end;
                    }
                    while let Some(w) = self.prev_adjacent(span.start) {
                        if !self.is_name_word(w) {
                            break;
                        }
                        span.start = w.start;
                    }
                }
                span
            })
            .collect();

        for (s, e, i) in self.lexica.registry_matcher.find_iter(self.text) {
            let role = self.lexica.registry[i].1;
            let mut hit = false;
            for span in out.iter_mut().filter(|sp| sp.start < e && s < sp.end) {
                hit = true;
                if role != Tag::Person {
                    span.tag = role;
                }
                span.start = span.start.min(s);
                span.end = span.end.max(e);
            }
            if !hit {
                out.push(RawSpan {
                    start: s,
                    end: e,
                    tag: role,
                });
            }
        }

        let covered = |w: &Word, spans: &[RawSpan]| spans.iter().any(|s| s.start < w.end && w.start < s.end);
        let mut standalone = Vec::new();
        let mut run: Option<RawSpan> = None;
        for &w in &self.words {
            let eligible = self.is_name_word(w) && !covered(&w, &out);
            match (&mut run, eligible) {
                (Some(r), true) if only_space(&self.text[r.end..w.start]) => r.end = w.end,
                (_, true) => {
                    standalone.extend(run.take());
                    run = Some(RawSpan {
                        start: w.start,
                        end: w.end,
                        tag: Tag::Person,
                    });
                }
                (_, false) => standalone.extend(run.take()),
            }
        }
        standalone.extend(run);
        out.extend(standalone);
        resolve_overlaps(out)
    }

    /// `Talleres Pérez, S.L.`: swallow the capitalised words before the form.
    fn grow_company(&self, span: &mut RawSpan) {
        let mut pos = span.start;
        let before = &self.text[..pos];
        let trimmed = before.trim_end();
        if let Some(stripped) = trimmed.strip_suffix(',') {
            pos = stripped.len();
        }
        let mut grown = false;
        while let Some(w) = self.prev_adjacent(pos) {
            if !is_capitalised(self.word(w)) {
                break;
            }
            pos = w.start;
            grown = true;
        }
        if grown {
            span.start = pos;
        }
    }
}

/// Merges overlapping spans, keeping the strongest tag.
fn resolve_overlaps(mut spans: Vec<RawSpan>) -> Vec<RawSpan> {
    spans.sort_by_key(|s| (s.start, Reverse(s.end)));
    let mut out: Vec<RawSpan> = Vec::with_capacity(spans.len());
    for s in spans {
        match out.last_mut() {
            Some(prev) if s.start < prev.end => {
                prev.end = prev.end.max(s.end);
                prev.tag = prev.tag.stronger(s.tag);
            }
            _ => out.push(s),
        }
    }
    out
}

fn to_char_spans(text: &str, spans: &[RawSpan]) -> Vec<ReferenceSpan> {
    let byte_to_char: HashMap<usize, usize> = text
        .char_indices()
        .enumerate()
        .map(|(ci, (bi, _))| (bi, ci))
        .chain(std::iter::once((text.len(), text.chars().count())))
        .collect();
    spans
        .iter()
        .map(|s| ReferenceSpan {
            start: byte_to_char[&s.start],
            end: byte_to_char[&s.end],
            tag: s.tag,
            surface: text[s.start..s.end].to_string(),
        })
        .collect()
}

fn to_raw_spans(text: &str, spans: &[ReferenceSpan]) -> Vec<RawSpan> {
    let char_to_byte: Vec<usize> = text
        .char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(text.len()))
        .collect();
    spans
        .iter()
        .map(|s| RawSpan {
            start: char_to_byte[s.start],
            end: char_to_byte[s.end],
            tag: s.tag,
        })
        .collect()
}

/// Title, cue-plus-name and corporate-form references, left to right.
pub fn detect_references(text: &str, lexica: &AnonLexica) -> Vec<ReferenceSpan> {
    let scanner = Scanner::new(text, lexica);
    to_char_spans(text, &scanner.seeds())
}

/// Grows detected spans over adjacent names and adds standalone-name spans.
pub fn expand_names(text: &str, spans: &[ReferenceSpan], lexica: &AnonLexica) -> Vec<ReferenceSpan> {
    let scanner = Scanner::new(text, lexica);
    let raw = scanner.expand(to_raw_spans(text, spans));
    to_char_spans(text, &raw)
}

/// Jaro similarity over Unicode scalar values.
pub fn jaro(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let window = (a.len().max(b.len()) / 2).saturating_sub(1);
    let mut a_matched = vec![false; a.len()];
    let mut b_matched = vec![false; b.len()];
    let mut matches = 0usize;
    for (i, &ca) in a.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(b.len());
        for j in lo..hi {
            if !b_matched[j] && b[j] == ca {
                a_matched[i] = true;
                b_matched[j] = true;
                matches += 1;
                break;
            }
        }
    }
    if matches == 0 {
        return 0.0;
    }
    let a_seq = a.iter().zip(&a_matched).filter(|(_, &m)| m).map(|(c, _)| c);
    let b_seq = b.iter().zip(&b_matched).filter(|(_, &m)| m).map(|(c, _)| c);
    let half_transpositions = a_seq.zip(b_seq).filter(|(x, y)| x != y).count();
    let m = matches as f64;
    let t = half_transpositions as f64 / 2.0;
    (m / a.len() as f64 + m / b.len() as f64 + (m - t) / m) / 3.0
}

/// Accent- and case-insensitive comparison key for names.
fn name_key(name: &str) -> String {
    name.nfd()
        .filter(|c| !unicode_normalization::char::is_combining_mark(*c))
        .collect::<String>()
        .to_lowercase()
}

/// Single-link grouping of names whose Jaro similarity (accent- and
/// case-folded) reaches `threshold`. Each group maps to its most frequent
/// member, ties going to the lexicographically first.
pub fn unify_names(names: &[String], threshold: f64) -> BTreeMap<String, String> {
    let mut freq: BTreeMap<&str, usize> = BTreeMap::new();
    for n in names {
        *freq.entry(n.as_str()).or_insert(0) += 1;
    }
    let distinct: Vec<&str> = freq.keys().copied().collect();
    let keys: Vec<String> = distinct.iter().map(|n| name_key(n)).collect();
    let mut parent: Vec<usize> = (0..distinct.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..distinct.len() {
        for j in (i + 1)..distinct.len() {
            if jaro(&keys[i], &keys[j]) >= threshold {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[rj.max(ri)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for i in 0..distinct.len() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(distinct[i]);
    }
    let mut out = BTreeMap::new();
    for members in groups.values() {
        // members are sorted, and min_by_key returns the first of equal keys
        let canonical = members
            .iter()
            .copied()
            .min_by_key(|m| Reverse(freq[m]))
            .expect("non-empty group");
        for m in members {
            out.insert(m.to_string(), canonical.to_string());
        }
    }
    out
}

/// Replaces every detected and expanded reference by its tag.
pub fn anonymize(text: &str, lexica: &AnonLexica, threshold: f64) -> (String, AnonymisationReport) {
    let scanner = Scanner::new(text, lexica);
    let spans = scanner.expand(scanner.seeds());
    let mut out = String::with_capacity(text.len());
    let mut report = AnonymisationReport::default();
    let mut names = Vec::new();
    let mut last = 0;
    for s in &spans {
        out.push_str(&text[last..s.start]);
        out.push_str(s.tag.as_str());
        last = s.end;
        *report.counts.entry(s.tag).or_insert(0) += 1;
        let name: Vec<&str> = scanner
            .words
            .iter()
            .filter(|w| s.start <= w.start && w.end <= s.end && scanner.is_name_word(**w))
            .map(|w| scanner.word(*w))
            .collect();
        if !name.is_empty() {
            names.push(name.join(" "));
        }
    }
    out.push_str(&text[last..]);
    let mut pairs: Vec<(String, String)> = unify_names(&names, threshold).into_iter().collect();
    pairs.sort();
    report.replaced_names = pairs;
    (out, report)
}
