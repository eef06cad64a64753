//! Corpus keyword-frequency extraction.
//!
//! Documents are whitespace-split; URLs are dropped whole; the remaining
//! words are lowercased and split again on every non-alphanumeric
//! character (which strips `#`/`@` sigils and punctuation). Pure-number
//! tokens and bundled stop words are discarded, and only tokens seen at
//! least twice survive into the frequency table.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Bundled English stop-word list, one word per line.
const STOPWORDS_RAW: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/data/stopwords.txt"));

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS_RAW
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

/// One keyword and how often it occurred across the corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordRow {
    pub token: String,
    pub frequency: u64,
}

/// Keyword frequencies sorted by descending count, ties alphabetical;
/// every retained frequency is at least 2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordTable {
    pub rows: Vec<KeywordRow>,
}

impl KeywordTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Renders the table as `token,frequency` CSV (tokens contain no
    /// commas by construction).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("token,frequency\n");
        for row in &self.rows {
            out.push_str(&format!("{},{}\n", row.token, row.frequency));
        }
        out
    }
}

fn is_url(word: &str) -> bool {
    let lower = word.to_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

/// Counts keywords across `documents` and returns the frequency table
/// together with the number of U+FFFD replacement characters seen (the
/// trace left by lossy decoding of invalid input bytes).
pub fn corpus_keywords<'a, I>(documents: I) -> (KeywordTable, usize)
where
    I: IntoIterator<Item = &'a str>,
{
    let stop = stopwords();
    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut replacements = 0usize;
    for document in documents {
        replacements += document.matches('\u{FFFD}').count();
        for word in document.split_whitespace() {
            if is_url(word) {
                continue;
            }
            let lower = word.to_lowercase();
            for token in lower.split(|c: char| !c.is_alphanumeric()) {
                if token.is_empty()
                    || token.chars().all(char::is_numeric)
                    || stop.contains(token)
                {
                    continue;
                }
                *counts.entry(token.to_string()).or_insert(0) += 1;
            }
        }
    }
    let mut rows: Vec<KeywordRow> = counts
        .into_iter()
        .filter(|(_, frequency)| *frequency >= 2)
        .map(|(token, frequency)| KeywordRow { token, frequency })
        .collect();
    rows.sort_by(|a, b| b.frequency.cmp(&a.frequency).then_with(|| a.token.cmp(&b.token)));
    (KeywordTable { rows }, replacements)
}
