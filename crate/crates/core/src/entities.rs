//! Rule-based extraction of the seven categorical judicial features.
//!
//! A judgement is split into a heading (everything before the pleas of fact)
//! and a decision section (everything after the last ruling marker). Case
//! type, court, jurisdiction and resolution type come from the heading; the
//! decision keyword comes from the decision section.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{is_gin, normalise_ws, Judgement};
use crate::error::{Error, Result};

pub const MULTIPLE_DECISION: &str = "multiple decision";
pub const UNKNOWN: &str = "unknown";

static PLEAS_OF_FACT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\bantecedentes\s+de\s+hecho\b").expect("marker regex"));
static RULING: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(?:fallo|fallamos|parte\s+dispositiva)\b").expect("marker regex")
});
static CASE_NUMBER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s*(?:n[º°o]\.?\s*)?\d+\s*/\s*\d{1,4}\b").expect("case number regex")
});

/// Fields packed into a 19-digit general identification number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GinFields {
    pub province: String,
    pub court_code: String,
    pub jurisdiction_digit: char,
    pub year: String,
    pub sequence: String,
}

impl fmt::Display for GinFields {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}{}{}{}",
            self.province, self.court_code, self.jurisdiction_digit, self.year, self.sequence
        )
    }
}

pub fn parse_gin(gin: &str) -> Result<GinFields> {
    if !is_gin(gin) {
        return Err(Error::Gin(gin.to_string()));
    }
    Ok(GinFields {
        province: gin[0..5].to_string(),
        court_code: gin[5..7].to_string(),
        jurisdiction_digit: gin.as_bytes()[7] as char,
        year: gin[8..12].to_string(),
        sequence: gin[12..19].to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Jurisdiction {
    Civil,
    ContentiousAdministrative,
    Penal,
    Social,
}

impl Jurisdiction {
    pub fn as_str(self) -> &'static str {
        match self {
            Jurisdiction::Civil => "civil",
            Jurisdiction::ContentiousAdministrative => "contentious-administrative",
            Jurisdiction::Penal => "penal",
            Jurisdiction::Social => "social",
        }
    }
}

impl FromStr for Jurisdiction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "civil" => Ok(Jurisdiction::Civil),
            "contentious-administrative" | "contencioso-administrativo" => {
                Ok(Jurisdiction::ContentiousAdministrative)
            }
            "penal" => Ok(Jurisdiction::Penal),
            "social" => Ok(Jurisdiction::Social),
            other => Err(Error::Config(format!("unknown jurisdiction {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionType {
    Substantive,
    Procedural,
}

impl DecisionType {
    pub fn as_str(self) -> &'static str {
        match self {
            DecisionType::Substantive => "substantive",
            DecisionType::Procedural => "procedural",
        }
    }

    /// Label used in rendered explanations.
    pub fn display_es(self) -> &'static str {
        match self {
            DecisionType::Substantive => "sustantivo",
            DecisionType::Procedural => "procesal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceType {
    First,
    Second,
    Third,
    Higher,
}

impl InstanceType {
    pub fn as_str(self) -> &'static str {
        match self {
            InstanceType::First => "first",
            InstanceType::Second => "second",
            InstanceType::Third => "third",
            InstanceType::Higher => "higher",
        }
    }

    pub fn display_es(self) -> &'static str {
        match self {
            InstanceType::First => "primera",
            InstanceType::Second => "segunda",
            InstanceType::Third => "tercera",
            InstanceType::Higher => "superior",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResolutionType {
    Sentencia,
    Orden,
    Decreto,
}

impl ResolutionType {
    pub fn as_str(self) -> &'static str {
        match self {
            ResolutionType::Sentencia => "sentencia",
            ResolutionType::Orden => "orden",
            ResolutionType::Decreto => "decreto",
        }
    }

    pub fn decision_type(self) -> DecisionType {
        match self {
            ResolutionType::Sentencia => DecisionType::Substantive,
            ResolutionType::Orden | ResolutionType::Decreto => DecisionType::Procedural,
        }
    }
}

/// The seven categorical features. `None` means the detector found nothing.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EntityRecord {
    pub case_type: Option<String>,
    pub court: Option<String>,
    pub decision: Option<String>,
    pub decision_type: Option<DecisionType>,
    pub instance_type: Option<InstanceType>,
    pub jurisdiction: Option<Jurisdiction>,
    pub resolution_type: Option<ResolutionType>,
}

pub const ENTITY_FIELDS: [&str; 7] = [
    "case_type",
    "court",
    "decision",
    "decision_type",
    "instance_type",
    "jurisdiction",
    "resolution_type",
];

impl EntityRecord {
    /// Field values in [`ENTITY_FIELDS`] order, `None` for unknown.
    pub fn values(&self) -> [Option<String>; 7] {
        [
            self.case_type.clone(),
            self.court.clone(),
            self.decision.clone(),
            self.decision_type.map(|d| d.as_str().to_string()),
            self.instance_type.map(|i| i.as_str().to_string()),
            self.jurisdiction.map(|j| j.as_str().to_string()),
            self.resolution_type.map(|r| r.as_str().to_string()),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseTypeEntry {
    pub name: String,
    pub jurisdiction: Option<Jurisdiction>,
    pub abbreviations: Vec<String>,
}

/// Phrase matcher: earliest match wins, longest at equal position.
#[derive(Debug, Clone)]
pub struct PhraseMatcher {
    regex: Option<Regex>,
    lookup: HashMap<String, usize>,
}

impl PhraseMatcher {
    /// `phrases[i]` resolves to payload index `i`. Matching is
    /// case-insensitive and tolerant to runs of whitespace.
    pub fn new<S: AsRef<str>>(phrases: &[S]) -> Self {
        let mut order: Vec<usize> = (0..phrases.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(phrases[i].as_ref().chars().count()));
        let mut alternatives = Vec::new();
        let mut lookup = HashMap::new();
        for i in order {
            let phrase = phrases[i].as_ref().trim();
            if phrase.is_empty() {
                continue;
            }
            lookup.entry(match_key(phrase)).or_insert(i);
            alternatives.push(phrase_pattern(phrase));
        }
        let regex = if alternatives.is_empty() {
            None
        } else {
            Some(
                RegexBuilder::new(&format!("(?:{})", alternatives.join("|")))
                    .case_insensitive(true)
                    .build()
                    .expect("escaped lexicon pattern"),
            )
        };
        Self { regex, lookup }
    }

    pub fn find_iter<'t>(&'t self, text: &'t str) -> impl Iterator<Item = (usize, usize, usize)> + 't {
        self.regex.iter().flat_map(move |re| {
            re.find_iter(text).filter_map(move |m| {
                self.lookup
                    .get(&match_key(m.as_str()))
                    .map(|&idx| (m.start(), m.end(), idx))
            })
        })
    }

    pub fn first(&self, text: &str) -> Option<(usize, usize, usize)> {
        self.find_iter(text).next()
    }
}

fn match_key(s: &str) -> String {
    normalise_ws(&s.to_lowercase())
}

fn phrase_pattern(phrase: &str) -> String {
    let body = phrase
        .split_whitespace()
        .map(regex::escape)
        .collect::<Vec<_>>()
        .join(r"\s+");
    let starts_word = phrase.chars().next().is_some_and(char::is_alphanumeric);
    let ends_word = phrase.chars().last().is_some_and(char::is_alphanumeric);
    format!(
        "{}{}{}",
        if starts_word { r"\b" } else { "" },
        body,
        if ends_word { r"\b" } else { "" }
    )
}

/// Lexica consumed by the entity detectors.
#[derive(Debug, Clone)]
pub struct EntityLexica {
    pub case_types: Vec<CaseTypeEntry>,
    pub courts: Vec<String>,
    pub divisions: Vec<(String, Jurisdiction)>,
    /// `(surface form, decision keyword)`
    pub decisions: Vec<(String, String)>,
    pub gin_jurisdictions: HashMap<char, Jurisdiction>,
    case_names: PhraseMatcher,
    case_abbrevs: PhraseMatcher,
    abbrev_owner: Vec<usize>,
    court_matcher: PhraseMatcher,
    division_matcher: PhraseMatcher,
    decision_matcher: PhraseMatcher,
}

impl EntityLexica {
    pub fn new(
        case_types: Vec<CaseTypeEntry>,
        courts: Vec<String>,
        divisions: Vec<(String, Jurisdiction)>,
        decisions: Vec<(String, String)>,
        gin_jurisdictions: HashMap<char, Jurisdiction>,
    ) -> Self {
        let names: Vec<&str> = case_types.iter().map(|c| c.name.as_str()).collect();
        let mut abbrevs = Vec::new();
        let mut abbrev_owner = Vec::new();
        for (i, c) in case_types.iter().enumerate() {
            for a in &c.abbreviations {
                abbrevs.push(a.as_str());
                abbrev_owner.push(i);
            }
        }
        let division_phrases: Vec<&str> = divisions.iter().map(|(p, _)| p.as_str()).collect();
        let decision_surfaces: Vec<&str> = decisions.iter().map(|(s, _)| s.as_str()).collect();
        Self {
            case_names: PhraseMatcher::new(&names),
            case_abbrevs: PhraseMatcher::new(&abbrevs),
            abbrev_owner,
            court_matcher: PhraseMatcher::new(&courts),
            division_matcher: PhraseMatcher::new(&division_phrases),
            decision_matcher: PhraseMatcher::new(&decision_surfaces),
            case_types,
            courts,
            divisions,
            decisions,
            gin_jurisdictions,
        }
    }
}

/// Heading and decision sections of a judgement.
pub struct Sections<'a> {
    pub heading: &'a str,
    pub decision: &'a str,
}

pub fn split_sections(text: &str) -> Sections<'_> {
    let heading = match PLEAS_OF_FACT.find(text) {
        Some(m) => &text[..m.start()],
        None => text,
    };
    let decision = match RULING.find_iter(text).last() {
        Some(m) => &text[m.end()..],
        None => "",
    };
    Sections { heading, decision }
}

/// Earliest case-type mention in `heading`. Full names match anywhere;
/// abbreviations only count when followed by a `number/year` case number.
pub fn detect_case_type(heading: &str, lexica: &EntityLexica) -> Option<String> {
    let by_name = lexica.case_names.first(heading);
    let by_abbrev = lexica
        .case_abbrevs
        .find_iter(heading)
        .find(|&(_, end, _)| CASE_NUMBER.is_match(&heading[end..]))
        .map(|(s, e, i)| (s, e, lexica.abbrev_owner[i]));
    let best = match (by_name, by_abbrev) {
        (Some(a), Some(b)) => {
            if (b.0, std::cmp::Reverse(b.1)) < (a.0, std::cmp::Reverse(a.1)) {
                b
            } else {
                a
            }
        }
        (a, b) => a.or(b)?,
    };
    Some(lexica.case_types[best.2].name.clone())
}

pub fn detect_court(heading: &str, lexica: &EntityLexica) -> Option<String> {
    lexica
        .court_matcher
        .first(heading)
        .map(|(_, _, i)| lexica.courts[i].clone())
}

/// One keyword → that keyword; several distinct keywords → multiple decision.
pub fn detect_decision(decision_section: &str, lexica: &EntityLexica) -> Option<String> {
    let keywords: BTreeSet<&str> = lexica
        .decision_matcher
        .find_iter(decision_section)
        .map(|(_, _, i)| lexica.decisions[i].1.as_str())
        .collect();
    match keywords.len() {
        0 => None,
        1 => keywords.into_iter().next().map(str::to_string),
        _ => Some(MULTIPLE_DECISION.to_string()),
    }
}

/// Third-instance keywords take precedence over second, second over first.
pub fn derive_instance_type(case_type: &str) -> InstanceType {
    let c = case_type.to_lowercase();
    if c.contains("casación") || c.contains("unificación") {
        InstanceType::Third
    } else if c.contains("apelación") || c.contains("suplicación") {
        InstanceType::Second
    } else if c.contains("recurso") {
        InstanceType::First
    } else {
        InstanceType::Higher
    }
}

/// Division phrase first, then the GIN jurisdiction digit, then the case-type
/// lexicon.
pub fn detect_jurisdiction(
    heading: &str,
    gin: Option<&str>,
    case_type: Option<&str>,
    lexica: &EntityLexica,
) -> Option<Jurisdiction> {
    if let Some((_, _, i)) = lexica.division_matcher.first(heading) {
        return Some(lexica.divisions[i].1);
    }
    if let Some(fields) = gin.and_then(|g| parse_gin(g).ok()) {
        if let Some(&j) = lexica.gin_jurisdictions.get(&fields.jurisdiction_digit) {
            return Some(j);
        }
    }
    let case_type = case_type?;
    lexica
        .case_types
        .iter()
        .find(|c| c.name == case_type)
        .and_then(|c| c.jurisdiction)
}

/// The last resolution keyword of the heading. Letter-spaced words such as
/// `S E N T E N C I A` are collapsed first.
pub fn detect_resolution_type(heading: &str) -> Option<ResolutionType> {
    collapse_letter_spacing(heading)
        .iter()
        .rev()
        .find_map(|w| match w.as_str() {
            "sentencia" => Some(ResolutionType::Sentencia),
            "orden" => Some(ResolutionType::Orden),
            "decreto" => Some(ResolutionType::Decreto),
            _ => None,
        })
}

fn collapse_letter_spacing(text: &str) -> Vec<String> {
    let words: Vec<String> = text
        .split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| c.is_alphanumeric())
                .collect::<String>()
                .to_lowercase()
        })
        .filter(|w| !w.is_empty())
        .collect();
    let mut out = Vec::with_capacity(words.len());
    let mut i = 0;
    while i < words.len() {
        let mut j = i;
        while j < words.len() && words[j].chars().count() == 1 {
            j += 1;
        }
        if j - i >= 3 {
            out.push(words[i..j].concat());
            i = j;
        } else {
            out.push(words[i].clone());
            i += 1;
        }
    }
    out
}

pub fn extract_entities(judgement: &Judgement, lexica: &EntityLexica) -> EntityRecord {
    let text: String = judgement.raw_text.nfc().collect();
    let sections = split_sections(&text);
    let case_type = detect_case_type(sections.heading, lexica);
    let resolution_type = detect_resolution_type(sections.heading);
    EntityRecord {
        court: detect_court(sections.heading, lexica),
        decision: detect_decision(sections.decision, lexica),
        decision_type: resolution_type.map(ResolutionType::decision_type),
        instance_type: case_type.as_deref().map(derive_instance_type),
        jurisdiction: detect_jurisdiction(
            sections.heading,
            judgement.gin.as_deref(),
            case_type.as_deref(),
            lexica,
        ),
        resolution_type,
        case_type,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexica::Lexica;

    fn lex() -> EntityLexica {
        Lexica::bundled().entities
    }

    #[test]
    fn gin_examples() {
        let f = parse_gin("3605742120190001234").unwrap();
        assert_eq!(f.province, "36057");
        assert_eq!(f.court_code, "42");
        assert_eq!(f.jurisdiction_digit, '1');
        assert_eq!(f.year, "2019");
        assert_eq!(f.sequence, "0001234");
        assert_eq!(f.to_string(), "3605742120190001234");
        let z = parse_gin("0000000000000000000").unwrap();
        assert_eq!(z.province, "00000");
        assert_eq!(z.sequence, "0000000");
        assert!(parse_gin("360574212019000123").is_err());
        assert!(parse_gin("36057421201900012a4").is_err());
    }

    #[test]
    fn case_type_examples() {
        let l = lex();
        assert_eq!(
            detect_case_type("RECURSO DE SUPLICACIÓN 123/2019", &l).as_deref(),
            Some("recurso de suplicación")
        );
        assert_eq!(
            detect_case_type("JUICIO ORDINARIO 5/2020 y luego RECURSO DE APELACIÓN", &l).as_deref(),
            Some("juicio ordinario")
        );
        assert_eq!(detect_case_type("nada relevante aquí", &l), None);
    }

    #[test]
    fn case_type_longest_at_same_position() {
        let l = lex();
        assert_eq!(
            detect_case_type("RECURSO DE CASACIÓN PARA LA UNIFICACIÓN DE DOCTRINA 7/2021", &l).as_deref(),
            Some("recurso de casación para la unificación de doctrina")
        );
    }

    #[test]
    fn abbreviation_needs_case_number() {
        let l = lex();
        assert_eq!(detect_case_type("RSU 123/2019", &l).as_deref(), Some("recurso de suplicación"));
        assert_eq!(detect_case_type("se cita RSU sin número", &l), None);
    }

    #[test]
    fn court_examples() {
        let l = lex();
        assert_eq!(
            detect_court("TRIBUNAL SUPERIOR DE JUSTICIA DE GALICIA", &l).as_deref(),
            Some("Tribunal Superior de Justicia")
        );
        assert_eq!(detect_court("sin tribunal", &l), None);
        assert_eq!(
            detect_court("AUDIENCIA PROVINCIAL de X, recurrida ante el TRIBUNAL SUPREMO", &l).as_deref(),
            Some("Audiencia Provincial")
        );
    }

    #[test]
    fn decision_examples() {
        let l = lex();
        assert_eq!(
            detect_decision("fallo desestimatorio del recurso", &l).as_deref(),
            Some("desestimatorio")
        );
        assert_eq!(
            detect_decision("parcialmente estimatorio y en parte desestimatorio", &l).as_deref(),
            Some(MULTIPLE_DECISION)
        );
        assert_eq!(detect_decision("", &l), None);
    }

    #[test]
    fn instance_examples() {
        assert_eq!(derive_instance_type("recurso de casación"), InstanceType::Third);
        assert_eq!(derive_instance_type("recurso de suplicación"), InstanceType::Second);
        assert_eq!(derive_instance_type("recurso de suplicación").display_es(), "segunda");
        assert_eq!(derive_instance_type("recurso de reposición"), InstanceType::First);
        assert_eq!(derive_instance_type("juicio ordinario"), InstanceType::Higher);
        assert_eq!(derive_instance_type(""), InstanceType::Higher);
    }

    #[test]
    fn jurisdiction_examples() {
        let l = lex();
        assert_eq!(
            detect_jurisdiction("Sala de lo Social", None, None, &l),
            Some(Jurisdiction::Social)
        );
        // digit 8 of this gin is 2, mapped to penal in the bundled table
        assert_eq!(
            detect_jurisdiction("sin sala", Some("3605742220190001234"), None, &l),
            Some(Jurisdiction::Penal)
        );
        assert_eq!(
            detect_jurisdiction("sin sala", None, Some("diligencias previas"), &l),
            Some(Jurisdiction::Penal)
        );
        assert_eq!(detect_jurisdiction("nada", None, None, &l), None);
    }

    #[test]
    fn resolution_examples() {
        assert_eq!(
            detect_resolution_type("TRIBUNAL ... S E N T E N C I A"),
            Some(ResolutionType::Sentencia)
        );
        assert_eq!(detect_resolution_type("DECRETO"), Some(ResolutionType::Decreto));
        assert_eq!(detect_resolution_type("nada"), None);
    }

    #[test]
    fn empty_text_is_all_unknown() {
        let doc = Judgement {
            id: "e".into(),
            raw_text: String::new(),
            gin: None,
            annotations: vec![],
        };
        assert_eq!(extract_entities(&doc, &lex()), EntityRecord::default());
    }

    #[test]
    fn sentencia_is_substantive() {
        let doc = Judgement {
            id: "s".into(),
            raw_text: "JUZGADO DE LO PENAL SENTENCIA ANTECEDENTES DE HECHO x".into(),
            gin: None,
            annotations: vec![],
        };
        let e = extract_entities(&doc, &lex());
        assert_eq!(e.resolution_type, Some(ResolutionType::Sentencia));
        assert_eq!(e.decision_type, Some(DecisionType::Substantive));
    }

    #[test]
    fn sections_split_on_markers() {
        let s = split_sections("CABECERA ANTECEDENTES DE HECHO cuerpo FALLO uno FALLAMOS final");
        assert_eq!(s.heading.trim(), "CABECERA");
        assert_eq!(s.decision.trim(), "final");
    }
}
