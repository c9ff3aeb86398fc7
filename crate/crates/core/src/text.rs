//! Cleaning, tokenisation, stop-word removal and lexicon lemmatisation.

use std::collections::{HashMap, HashSet};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

static URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:https?://|www\.)\S*").expect("url regex"));
static PUNCT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\p{P}").expect("punct regex"));

/// Strips control characters, URLs and punctuation, lowercases and collapses
/// whitespace. `º` and `ª` are letters, not punctuation, so they survive.
pub fn clean(text: &str) -> String {
    let nfc: String = text
        .nfc()
        .map(|c| if c.is_control() { ' ' } else { c })
        .collect();
    let no_urls = URL.replace_all(&nfc, " ");
    let no_punct = PUNCT.replace_all(&no_urls, " ");
    no_punct
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

pub fn remove_stopwords(tokens: Vec<String>, stoplist: &HashSet<String>) -> Vec<String> {
    tokens.into_iter().filter(|t| !stoplist.contains(t)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStream {
    pub source_id: String,
    pub tokens: Vec<String>,
}

/// Replaces each token by its lemma; tokens missing from the lexicon pass
/// through unchanged.
pub fn lemmatize(
    source_id: &str,
    tokens: Vec<String>,
    lemma_lexicon: &HashMap<String, String>,
) -> TokenStream {
    let tokens = tokens
        .into_iter()
        .map(|t| lemma_lexicon.get(&t).cloned().unwrap_or(t))
        .collect();
    TokenStream {
        source_id: source_id.to_string(),
        tokens,
    }
}

/// Stop-word list and lemma table shared by every document.
#[derive(Debug, Clone, Default)]
pub struct TextResources {
    pub stopwords: HashSet<String>,
    pub lemmas: HashMap<String, String>,
}

impl TextResources {
    /// Full pipeline: clean, tokenize, drop stop-words, lemmatise. Stop-words
    /// are checked again after lemmatisation so no lemma lands on the list.
    pub fn process(&self, source_id: &str, text: &str) -> TokenStream {
        let tokens = remove_stopwords(tokenize(&clean(text)), &self.stopwords);
        let mut stream = lemmatize(source_id, tokens, &self.lemmas);
        stream.tokens.retain(|t| !self.stopwords.contains(t));
        stream
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn clean_examples() {
        assert_eq!(clean(""), "");
        assert_eq!(clean("Ver  https://x.y/z.\tFin."), "ver fin");
        assert_eq!(clean("JUZGADO\n\nNº 3"), "juzgado nº 3");
        assert_eq!(clean("\u{c}página www.poder.es, fin"), "página fin");
        assert_eq!(clean("la 2ª instancia"), "la 2ª instancia");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("a b c"), vec!["a", "b", "c"]);
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("recurso de suplicación"),
            vec!["recurso", "de", "suplicación"]
        );
    }

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn stopword_examples() {
        let stop: HashSet<String> = ["de".to_string()].into();
        assert_eq!(
            remove_stopwords(strings(&["recurso", "de", "suplicación"]), &stop),
            strings(&["recurso", "suplicación"])
        );
        assert!(remove_stopwords(vec![], &stop).is_empty());
        assert!(remove_stopwords(strings(&["de", "de"]), &stop).is_empty());
    }

    #[test]
    fn lemmatize_examples() {
        let lex: HashMap<String, String> =
            [("trabajadores".to_string(), "trabajador".to_string())].into();
        assert_eq!(
            lemmatize("d", strings(&["trabajadores"]), &lex).tokens,
            strings(&["trabajador"])
        );
        assert_eq!(
            lemmatize("d", strings(&["sala"]), &lex).tokens,
            strings(&["sala"])
        );
        assert!(lemmatize("d", vec![], &lex).tokens.is_empty());
    }

    proptest! {
        #[test]
        fn clean_is_idempotent(s in "\\PC{0,60}|[a-zA-Z .,:/\\t\\nwhtps]{0,60}") {
            let once = clean(&s);
            prop_assert_eq!(clean(&once), once.clone());
            prop_assert!(!once.contains("  "));
            prop_assert!(!once.chars().any(|c| c.is_control()));
        }

        #[test]
        fn pipeline_tokens_are_clean(s in "[a-zA-Z áéíóú.,;]{0,80}") {
            let res = TextResources {
                stopwords: ["de".to_string(), "la".to_string()].into(),
                lemmas: HashMap::new(),
            };
            let cleaned = clean(&s);
            let stream = res.process("x", &s);
            let source: Vec<&str> = cleaned.split_whitespace().collect();
            let mut it = source.iter();
            for t in &stream.tokens {
                prop_assert!(!t.is_empty() && !t.contains(char::is_whitespace));
                prop_assert!(!res.stopwords.contains(t));
                // order preserved: each token appears later in the cleaned text
                prop_assert!(it.any(|s| s == t));
            }
        }
    }
}
