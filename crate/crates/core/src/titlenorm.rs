//! Title tokenization and aggregation by low-frequency word filtering.

use std::collections::HashMap;
use std::fmt;

use crate::par::Exec;

/// Lowercases and splits on every run of non-alphanumeric characters.
pub fn tokenize(title_raw: &str) -> Vec<String> {
    title_raw
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Corpus-wide word counts over raw titles.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordFrequencyTable {
    counts: HashMap<String, u64>,
    total_titles: u64,
}

impl WordFrequencyTable {
    pub fn count(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    pub fn total_titles(&self) -> u64 {
        self.total_titles
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(w, &c)| (w.as_str(), c))
    }

    /// Words sorted by descending count, ties alphabetical.
    pub fn ranked(&self) -> Vec<(&str, u64)> {
        let mut v: Vec<_> = self.iter().collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        v
    }

    fn add_title(&mut self, title: &str) {
        self.total_titles += 1;
        for tok in tokenize(title) {
            *self.counts.entry(tok).or_insert(0) += 1;
        }
    }

    fn merge(mut self, other: WordFrequencyTable) -> WordFrequencyTable {
        self.total_titles += other.total_titles;
        for (w, c) in other.counts {
            *self.counts.entry(w).or_insert(0) += c;
        }
        self
    }
}

/// Counts every token occurrence across `titles`.
pub fn word_frequencies<S: AsRef<str> + Sync>(titles: &[S], exec: Exec) -> WordFrequencyTable {
    exec.map_chunks(titles, 4096, |chunk| {
        let mut t = WordFrequencyTable::default();
        for title in chunk {
            t.add_title(title.as_ref());
        }
        t
    })
    .into_iter()
    .fold(WordFrequencyTable::default(), WordFrequencyTable::merge)
}

/// Keeps the tokens of `title_raw` whose corpus frequency is at least
/// `min_freq`, in order. If none survive, the full token list is returned.
pub fn aggregate_title(title_raw: &str, freq: &WordFrequencyTable, min_freq: u64) -> Vec<String> {
    filter_tokens(tokenize(title_raw), freq, min_freq)
}

fn filter_tokens(tokens: Vec<String>, freq: &WordFrequencyTable, min_freq: u64) -> Vec<String> {
    let kept: Vec<String> = tokens
        .iter()
        .filter(|t| freq.count(t) >= min_freq)
        .cloned()
        .collect();
    if kept.is_empty() {
        tokens
    } else {
        kept
    }
}

/// A graph node: aggregated title words plus company.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeKey {
    pub title_norm: Vec<String>,
    pub company: String,
}

impl NodeKey {
    pub fn new(title_norm: Vec<String>, company: impl Into<String>) -> Self {
        NodeKey {
            title_norm,
            company: company.into(),
        }
    }

    pub fn title(&self) -> String {
        self.title_norm.join(" ")
    }

    /// Whitespace-free form used as the row key in embedding files.
    pub fn export_key(&self) -> String {
        format!("{}@{}", self.title_norm.join("_"), self.company.replace(char::is_whitespace, "_"))
    }
}

impl fmt::Display for NodeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.title(), self.company)
    }
}

/// Frequency table plus threshold, mapping raw titles to node keys.
#[derive(Debug, Clone)]
pub struct TitleNormalizer {
    pub freq: WordFrequencyTable,
    pub min_freq: u64,
}

impl TitleNormalizer {
    pub const DEFAULT_MIN_FREQ: u64 = 30;

    pub fn fit<S: AsRef<str> + Sync>(titles: &[S], min_freq: u64, exec: Exec) -> Self {
        TitleNormalizer {
            freq: word_frequencies(titles, exec),
            min_freq,
        }
    }

    pub fn normalize(&self, title_raw: &str) -> Vec<String> {
        aggregate_title(title_raw, &self.freq, self.min_freq)
    }

    pub fn key(&self, title_raw: &str, company: &str) -> NodeKey {
        NodeKey::new(self.normalize(title_raw), company.trim())
    }
}
