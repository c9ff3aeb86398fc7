//! Loading of the lexicon assets. A default Spanish set is compiled in; a
//! directory with the same file names overrides it.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::anonymise::{AnonLexica, Tag};
use crate::entities::{CaseTypeEntry, EntityLexica, Jurisdiction};
use crate::error::{Error, Result};
use crate::text::TextResources;

pub const FILES: [&str; 13] = [
    "stopwords.txt",
    "lemmas.tsv",
    "case_types.tsv",
    "courts.txt",
    "divisions.tsv",
    "decisions.tsv",
    "gin_jurisdictions.tsv",
    "titles.txt",
    "implicit_refs.tsv",
    "corporate_forms.txt",
    "first_names.txt",
    "surnames.txt",
    "role_registry.tsv",
];

const BUNDLED: [(&str, &str); 13] = [
    ("stopwords.txt", include_str!("../assets/lexica/stopwords.txt")),
    ("lemmas.tsv", include_str!("../assets/lexica/lemmas.tsv")),
    ("case_types.tsv", include_str!("../assets/lexica/case_types.tsv")),
    ("courts.txt", include_str!("../assets/lexica/courts.txt")),
    ("divisions.tsv", include_str!("../assets/lexica/divisions.tsv")),
    ("decisions.tsv", include_str!("../assets/lexica/decisions.tsv")),
    ("gin_jurisdictions.tsv", include_str!("../assets/lexica/gin_jurisdictions.tsv")),
    ("titles.txt", include_str!("../assets/lexica/titles.txt")),
    ("implicit_refs.tsv", include_str!("../assets/lexica/implicit_refs.tsv")),
    ("corporate_forms.txt", include_str!("../assets/lexica/corporate_forms.txt")),
    ("first_names.txt", include_str!("../assets/lexica/first_names.txt")),
    ("surnames.txt", include_str!("../assets/lexica/surnames.txt")),
    ("role_registry.tsv", include_str!("../assets/lexica/role_registry.tsv")),
];

#[derive(Debug, Clone)]
pub struct Lexica {
    pub text: TextResources,
    pub entities: EntityLexica,
    pub anon: AnonLexica,
}

impl Lexica {
    pub fn bundled() -> Self {
        Self::from_sources(|name| {
            Ok(BUNDLED
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, s)| s.to_string())
                .expect("bundled lexicon"))
        })
        .expect("bundled lexica parse")
    }

    /// Loads every file in [`FILES`] from `dir`; a missing file is a
    /// configuration error.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        Self::from_sources(|name| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|e| {
                Error::Config(format!("cannot read lexicon {}: {e}", path.display()))
            })
        })
    }

    fn from_sources(mut read: impl FnMut(&str) -> Result<String>) -> Result<Self> {
        let mut src = |name: &str| read(name).map(|s| (name.to_string(), s));

        let (_, stop) = src("stopwords.txt")?;
        let (n, lem) = src("lemmas.tsv")?;
        let lemmas = pairs(&n, &lem)?
            .into_iter()
            .map(|(a, b)| (a.to_lowercase(), b.to_lowercase()))
            .collect::<HashMap<_, _>>();
        let text = TextResources {
            stopwords: lines(&stop).map(str::to_lowercase).collect::<HashSet<_>>(),
            lemmas,
        };

        let (_, cases) = src("case_types.tsv")?;
        let mut case_types = Vec::new();
        for line in lines(&cases) {
            let mut cols = line.split('\t');
            let name = cols.next().unwrap_or_default().trim().to_lowercase();
            let jurisdiction = match cols.next().map(str::trim) {
                Some(j) if !j.is_empty() => Some(j.parse::<Jurisdiction>()?),
                _ => None,
            };
            let abbreviations = cols
                .next()
                .map(|a| {
                    a.split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(str::to_string)
                        .collect()
                })
                .unwrap_or_default();
            case_types.push(CaseTypeEntry {
                name,
                jurisdiction,
                abbreviations,
            });
        }
        let (_, courts) = src("courts.txt")?;
        let (n, div) = src("divisions.tsv")?;
        let divisions = pairs(&n, &div)?
            .into_iter()
            .map(|(p, j)| Ok((p, j.parse::<Jurisdiction>()?)))
            .collect::<Result<Vec<_>>>()?;
        let (_, dec) = src("decisions.tsv")?;
        let decisions = lines(&dec)
            .map(|l| match l.split_once('\t') {
                Some((surface, keyword)) => (surface.trim().to_string(), keyword.trim().to_string()),
                None => (l.to_string(), l.to_string()),
            })
            .collect();
        let (n, gin) = src("gin_jurisdictions.tsv")?;
        let mut gin_jurisdictions = HashMap::new();
        for (digit, j) in pairs(&n, &gin)? {
            let mut chars = digit.chars();
            match (chars.next(), chars.next()) {
                (Some(d), None) if d.is_ascii_digit() => {
                    gin_jurisdictions.insert(d, j.parse::<Jurisdiction>()?);
                }
                _ => return Err(Error::Config(format!("{n}: {digit:?} is not a single digit"))),
            }
        }
        let entities = EntityLexica::new(
            case_types,
            lines(&courts).map(str::to_string).collect(),
            divisions,
            decisions,
            gin_jurisdictions,
        );

        let (_, titles) = src("titles.txt")?;
        let (n, refs) = src("implicit_refs.tsv")?;
        let implicit_refs = tagged(&n, &refs)?;
        let (_, corp) = src("corporate_forms.txt")?;
        let (_, first) = src("first_names.txt")?;
        let (_, last) = src("surnames.txt")?;
        let (n, reg) = src("role_registry.tsv")?;
        let registry = tagged(&n, &reg)?;
        let anon = AnonLexica::new(
            lines(&titles).map(str::to_string).collect(),
            implicit_refs,
            lines(&corp).map(str::to_string).collect(),
            lines(&first).map(str::to_string),
            lines(&last).map(str::to_string),
            registry,
        );

        Ok(Self {
            text,
            entities,
            anon,
        })
    }
}

fn lines(s: &str) -> impl Iterator<Item = &str> {
    s.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn pairs(name: &str, s: &str) -> Result<Vec<(String, String)>> {
    lines(s)
        .enumerate()
        .map(|(i, l)| {
            l.split_once('\t')
                .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                .ok_or_else(|| {
                    Error::Config(format!("{name}: entry {} is not tab-separated: {l:?}", i + 1))
                })
        })
        .collect()
}

fn tagged(name: &str, s: &str) -> Result<Vec<(String, Tag)>> {
    pairs(name, s)?
        .into_iter()
        .map(|(a, role)| Ok((a, role.parse::<Tag>()?)))
        .collect()
}
