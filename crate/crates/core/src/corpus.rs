//! Article metadata ingestion.
//!
//! Reads arXiv-style JSONL (one object per line with `id`, `title`,
//! `abstract`, `categories`, `update_date`), cleans it, maps raw category
//! codes onto top-level subjects and produces seeded train/test partitions.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DEFAULT_CATEGORY_MAP: &str = include_str!("../data/category_map.tsv");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    /// Raw category codes in source order; the first is the arXiv primary.
    pub categories: Vec<String>,
    pub date: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub authors: Option<String>,
    /// Normalized top-level labels, sorted and deduplicated. Empty until
    /// [`normalize_labels`] runs.
    #[serde(default)]
    pub labels: Vec<String>,
    /// Mapped label of the first raw category.
    #[serde(default)]
    pub primary: Option<String>,
}

impl ArticleRecord {
    /// Single-label view: the mapped primary category, or the raw first
    /// category when labels have not been normalized yet.
    pub fn primary_label(&self) -> &str {
        self.primary
            .as_deref()
            .or_else(|| self.categories.first().map(String::as_str))
            .unwrap_or("")
    }
}

/// Trims and collapses internal whitespace. Idempotent.
pub fn clean_text(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Cleans a record in place; returns `None` when it must be dropped.
pub fn clean_record(mut rec: ArticleRecord) -> Option<ArticleRecord> {
    rec.id = rec.id.trim().to_string();
    rec.title = clean_text(&rec.title);
    rec.abstract_text = clean_text(&rec.abstract_text);
    let mut seen = HashSet::new();
    rec.categories = rec
        .categories
        .iter()
        .flat_map(|c| c.split_whitespace())
        .filter(|c| seen.insert(c.to_string()))
        .map(str::to_string)
        .collect();
    if rec.id.is_empty() || rec.abstract_text.is_empty() || rec.categories.is_empty() {
        return None;
    }
    Some(rec)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LengthSummary {
    pub min: usize,
    pub p25: usize,
    pub median: usize,
    pub p75: usize,
    pub max: usize,
    pub mean: f64,
    /// Fraction of abstracts with 120 to 200 words inclusive.
    pub share_120_200: f64,
}

impl LengthSummary {
    pub fn from_lengths(mut lengths: Vec<usize>) -> Self {
        if lengths.is_empty() {
            return Self::default();
        }
        lengths.sort_unstable();
        let n = lengths.len();
        let q = |p: f64| lengths[((n - 1) as f64 * p).round() as usize];
        let in_band = lengths.iter().filter(|&&l| (120..=200).contains(&l)).count();
        LengthSummary {
            min: lengths[0],
            p25: q(0.25),
            median: q(0.5),
            p75: q(0.75),
            max: lengths[n - 1],
            mean: lengths.iter().sum::<usize>() as f64 / n as f64,
            share_120_200: in_band as f64 / n as f64,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub lines: usize,
    pub records: usize,
    pub malformed: usize,
    pub missing_abstract: usize,
    pub missing_categories: usize,
    pub duplicates: usize,
    pub unmapped_dropped: usize,
    /// Distinct lowercase alphabetic word forms across all abstracts.
    pub vocabulary_estimate: usize,
    pub label_counts: BTreeMap<String, usize>,
    pub primary_counts: BTreeMap<String, usize>,
    pub abstract_words: LengthSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub records: Vec<ArticleRecord>,
    pub label_space: Vec<String>,
    pub stats: CorpusStats,
}

impl Corpus {
    /// Builds a corpus from already-clean records, recomputing label space
    /// and statistics. Duplicate ids are rejected.
    pub fn from_records(records: Vec<ArticleRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::DuplicateId(r.id.clone()));
            }
        }
        let mut corpus = Corpus {
            records,
            label_space: Vec::new(),
            stats: CorpusStats::default(),
        };
        corpus.refresh();
        Ok(corpus)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Recomputes label space and the derived statistics, keeping the
    /// ingestion drop counters.
    fn refresh(&mut self) {
        let space: BTreeSet<&str> = self
            .records
            .iter()
            .flat_map(|r| r.labels.iter().map(String::as_str))
            .collect();
        self.label_space = space.into_iter().map(str::to_string).collect();

        let mut label_counts = BTreeMap::new();
        let mut primary_counts = BTreeMap::new();
        let mut words = HashSet::new();
        let mut lengths = Vec::with_capacity(self.records.len());
        for r in &self.records {
            for l in &r.labels {
                *label_counts.entry(l.clone()).or_insert(0) += 1;
            }
            if r.primary.is_some() {
                *primary_counts.entry(r.primary_label().to_string()).or_insert(0) += 1;
            }
            let mut n = 0;
            for w in r.abstract_text.split_whitespace() {
                n += 1;
                let w: String = w
                    .chars()
                    .filter(|c| c.is_alphabetic())
                    .flat_map(char::to_lowercase)
                    .collect();
                if !w.is_empty() {
                    words.insert(w);
                }
            }
            lengths.push(n);
        }
        self.stats.records = self.records.len();
        self.stats.label_counts = label_counts;
        self.stats.primary_counts = primary_counts;
        self.stats.vocabulary_estimate = words.len();
        self.stats.abstract_words = LengthSummary::from_lengths(lengths);
    }

    /// Share of records carrying at least one of `labels`.
    pub fn share_with_any(&self, labels: &[&str]) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        let hits = self
            .records
            .iter()
            .filter(|r| r.labels.iter().any(|l| labels.contains(&l.as_str())))
            .count();
        hits as f64 / self.records.len() as f64
    }

    /// Primary labels in record order.
    pub fn single_label_view(&self) -> Vec<String> {
        self.records
            .iter()
            .map(|r| r.primary_label().to_string())
            .collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.records.iter().position(|r| r.id == id)
    }

    /// Keeps the records at `indices` (in the given order).
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        let mut sub = Corpus {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            label_space: Vec::new(),
            stats: CorpusStats::default(),
        };
        sub.refresh();
        sub
    }

    /// Draws a stratified (by primary label) sample of `n` records.
    pub fn stratified_sample(&self, n: usize, seed: u64) -> Result<Corpus> {
        if n == 0 || n > self.len() {
            return Err(Error::InvalidParameter(format!(
                "sample size {n} outside 1..={}",
                self.len()
            )));
        }
        if n == self.len() {
            return Ok(self.clone());
        }
        let test_fraction = 1.0 - n as f64 / self.len() as f64;
        let (keep, _) = split_indices(self, test_fraction, seed, true)?;
        Ok(self.subset(&keep))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawCategories {
    Joined(String),
    List(Vec<String>),
}

#[derive(Deserialize)]
struct RawLine {
    id: Option<serde_json::Value>,
    #[serde(default)]
    title: Option<String>,
    #[serde(rename = "abstract", default)]
    abstract_text: Option<String>,
    #[serde(default)]
    categories: Option<RawCategories>,
    #[serde(default)]
    update_date: Option<String>,
    #[serde(default)]
    authors: Option<String>,
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").ok()
}

/// Reads a JSONL metadata dump. Malformed lines, records without abstract or
/// categories, and repeated ids are skipped and counted in the stats.
pub fn load_jsonl(path: &Path, limit: Option<usize>) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut stats = CorpusStats::default();
    let mut records = Vec::new();
    let mut seen = HashSet::new();

    for line in reader.lines() {
        if limit.is_some_and(|l| records.len() >= l) {
            break;
        }
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        stats.lines += 1;
        let raw: RawLine = match serde_json::from_str(&line) {
            Ok(raw) => raw,
            Err(e) => {
                log::debug!("{}:{}: skipping malformed line: {e}", path.display(), stats.lines);
                stats.malformed += 1;
                continue;
            }
        };
        let id = match raw.id {
            Some(serde_json::Value::String(s)) => s,
            Some(serde_json::Value::Number(n)) => n.to_string(),
            _ => {
                stats.malformed += 1;
                continue;
            }
        };
        let categories = match raw.categories {
            Some(RawCategories::Joined(s)) => s.split_whitespace().map(str::to_string).collect(),
            Some(RawCategories::List(v)) => v,
            None => Vec::new(),
        };
        let rec = ArticleRecord {
            id,
            title: raw.title.unwrap_or_default(),
            abstract_text: raw.abstract_text.unwrap_or_default(),
            categories,
            date: raw.update_date.as_deref().and_then(parse_date),
            authors: raw.authors,
            labels: Vec::new(),
            primary: None,
        };
        let blank_abstract = rec.abstract_text.trim().is_empty();
        let no_categories = rec.categories.iter().all(|c| c.trim().is_empty());
        let Some(rec) = clean_record(rec) else {
            if blank_abstract {
                stats.missing_abstract += 1;
            } else if no_categories {
                stats.missing_categories += 1;
            } else {
                stats.malformed += 1;
            }
            continue;
        };
        if !seen.insert(rec.id.clone()) {
            stats.duplicates += 1;
            continue;
        }
        records.push(rec);
    }

    if records.is_empty() {
        return Err(Error::EmptyCorpus(path.display().to_string()));
    }
    let mut corpus = Corpus {
        records,
        label_space: Vec::new(),
        stats,
    };
    corpus.refresh();
    Ok(corpus)
}

/// Prefix → top-level label table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryMap {
    table: BTreeMap<String, String>,
}

impl Default for CategoryMap {
    fn default() -> Self {
        Self::parse(DEFAULT_CATEGORY_MAP, "builtin category map")
            .expect("builtin category map is valid")
    }
}

impl CategoryMap {
    pub fn from_pairs<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        CategoryMap {
            table: pairs
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        }
    }

    /// Parses `prefix<TAB>label` lines; `#` starts a comment line.
    pub fn parse(text: &str, context: &str) -> Result<Self> {
        let mut table = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let (Some(prefix), Some(label), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::Parse {
                    context: context.to_string(),
                    line: i + 1,
                    message: "expected two tab-separated columns".into(),
                });
            };
            let (prefix, label) = (prefix.trim(), label.trim());
            if prefix.is_empty() || label.is_empty() {
                return Err(Error::Parse {
                    context: context.to_string(),
                    line: i + 1,
                    message: "empty prefix or label".into(),
                });
            }
            table.insert(prefix.to_string(), label.to_string());
        }
        Ok(CategoryMap { table })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn label_for(&self, category: &str) -> Option<&str> {
        self.table.get(category_prefix(category)).map(String::as_str)
    }

    pub fn labels(&self) -> BTreeSet<&str> {
        self.table.values().map(String::as_str).collect()
    }
}

/// Text before the first `.`, or the whole code when there is none.
pub fn category_prefix(category: &str) -> &str {
    category.split('.').next().unwrap_or(category)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnmappedPolicy {
    /// Fail listing every unmapped prefix.
    #[default]
    Strict,
    /// Drop records carrying an unmapped prefix and count them.
    Lenient,
}

pub fn normalize_labels(corpus: Corpus, map: &CategoryMap, policy: UnmappedPolicy) -> Result<Corpus> {
    let Corpus {
        records, mut stats, ..
    } = corpus;

    let unmapped: BTreeSet<String> = records
        .iter()
        .flat_map(|r| r.categories.iter())
        .filter(|c| map.label_for(c).is_none())
        .map(|c| category_prefix(c).to_string())
        .collect();
    if policy == UnmappedPolicy::Strict && !unmapped.is_empty() {
        return Err(Error::UnmappedPrefixes(unmapped.into_iter().collect()));
    }

    let mut kept = Vec::with_capacity(records.len());
    for mut r in records {
        let mapped: Option<Vec<&str>> = r.categories.iter().map(|c| map.label_for(c)).collect();
        let Some(mapped) = mapped else {
            stats.unmapped_dropped += 1;
            continue;
        };
        let primary = mapped[0].to_string();
        let set: BTreeSet<&str> = mapped.into_iter().collect();
        r.labels = set.into_iter().map(str::to_string).collect();
        r.primary = Some(primary);
        kept.push(r);
    }
    if kept.is_empty() {
        return Err(Error::EmptyCorpus("no records survived label normalization".into()));
    }
    let mut out = Corpus {
        records: kept,
        label_space: Vec::new(),
        stats,
    };
    out.refresh();
    Ok(out)
}

/// Train/test partition as sorted index lists into `corpus.records`.
///
/// Train gets `ceil((1 - f) * n)` records. With `stratify`, every primary
/// label contributes to the test side in proportion to its size (largest
/// remainder rounding so the totals still match).
pub fn split_indices(
    corpus: &Corpus,
    test_fraction: f64,
    seed: u64,
    stratify: bool,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = corpus.len();
    if n == 0 {
        return Err(Error::EmptyCorpus("split of an empty corpus".into()));
    }
    let n_train = (((1.0 - test_fraction) * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let n_test = n - n_train.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut test = Vec::with_capacity(n_test);
    if stratify {
        let mut strata: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, r) in corpus.records.iter().enumerate() {
            strata.entry(r.primary_label()).or_default().push(i);
        }
        for (label, members) in &strata {
            if members.len() < 2 {
                return Err(Error::SmallStratum {
                    label: label.to_string(),
                    count: members.len(),
                    needed: 2,
                });
            }
        }
        // Largest remainder allocation of n_test over strata.
        let mut quotas: Vec<(usize, f64, &str)> = strata
            .iter()
            .map(|(label, m)| {
                let ideal = n_test as f64 * m.len() as f64 / n as f64;
                (ideal.floor() as usize, ideal - ideal.floor(), *label)
            })
            .collect();
        let assigned: usize = quotas.iter().map(|q| q.0).sum();
        let mut order: Vec<usize> = (0..quotas.len()).collect();
        order.sort_by(|&a, &b| quotas[b].1.total_cmp(&quotas[a].1).then(a.cmp(&b)));
        for &j in order.iter().take(n_test.saturating_sub(assigned)) {
            quotas[j].0 += 1;
        }
        for (quota, _, label) in quotas {
            let mut members = strata[label].clone();
            members.shuffle(&mut rng);
            test.extend_from_slice(&members[..quota.min(members.len())]);
        }
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        test.extend_from_slice(&all[..n_test]);
    }
    test.sort_unstable();
    let in_test: HashSet<usize> = test.iter().copied().collect();
    let train = (0..n).filter(|i| !in_test.contains(i)).collect();
    Ok((train, test))
}

pub fn split(corpus: &Corpus, test_fraction: f64, seed: u64, stratify: bool) -> Result<(Corpus, Corpus)> {
    let (train, test) = split_indices(corpus, test_fraction, seed, stratify)?;
    Ok((corpus.subset(&train), corpus.subset(&test)))
}
