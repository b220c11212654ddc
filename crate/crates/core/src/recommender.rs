//! Exhaustive cosine-similarity retrieval over normalized article vectors.

use std::collections::{HashMap, HashSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Fingerprint, SparseVector};
use crate::pipeline::Vectorizer;

/// Result count when the caller does not ask for one.
pub const DEFAULT_K: usize = 20;

/// `a.b / (|a| |b|)`. Zero vectors have no defined similarity.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector("cosine operand".into()));
    }
    Ok(a.dot(b) / (na * nb))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ArticleMeta {
    pub labels: Vec<String>,
    pub date: Option<NaiveDate>,
    /// Only present when a citation column was ingested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub citations: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Filters {
    pub date_from: Option<NaiveDate>,
    pub date_to: Option<NaiveDate>,
    /// Keep articles carrying at least one of these labels.
    pub labels: Vec<String>,
    /// Ignored for articles without a citation count.
    pub min_citations: Option<u32>,
}

impl Filters {
    pub fn admits(&self, m: &ArticleMeta) -> bool {
        if self.date_from.is_some() || self.date_to.is_some() {
            let Some(d) = m.date else { return false };
            if self.date_from.is_some_and(|f| d < f) || self.date_to.is_some_and(|t| d > t) {
                return false;
            }
        }
        if !self.labels.is_empty() && !m.labels.iter().any(|l| self.labels.contains(l)) {
            return false;
        }
        if let (Some(min), Some(c)) = (self.min_citations, m.citations) {
            if c < min {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub id: String,
    pub score: f64,
    pub labels: Vec<String>,
    pub date: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationList {
    pub query: String,
    pub k: usize,
    pub results: Vec<Recommendation>,
}

#[derive(Debug, Clone)]
pub struct SimilarityIndex {
    ids: Vec<String>,
    vectors: Vec<SparseVector>,
    meta: Vec<ArticleMeta>,
    fingerprint: Fingerprint,
    position: HashMap<String, usize>,
    rejected_zero: usize,
}

impl PartialEq for SimilarityIndex {
    fn eq(&self, o: &Self) -> bool {
        self.ids == o.ids && self.vectors == o.vectors && self.meta == o.meta && self.fingerprint == o.fingerprint
    }
}

/// Normalizes every vector; zero vectors are skipped and counted.
pub fn build_index(
    ids: Vec<String>,
    vectors: Vec<SparseVector>,
    meta: Vec<ArticleMeta>,
    fingerprint: Fingerprint,
) -> Result<SimilarityIndex> {
    if ids.len() != vectors.len() || ids.len() != meta.len() {
        return Err(Error::InvalidParameter(format!(
            "index inputs differ in length: {} ids, {} vectors, {} metadata rows",
            ids.len(),
            vectors.len(),
            meta.len()
        )));
    }
    let dim = vectors.first().map(|v| v.dim());
    let mut index = SimilarityIndex {
        ids: Vec::with_capacity(ids.len()),
        vectors: Vec::with_capacity(ids.len()),
        meta: Vec::with_capacity(ids.len()),
        fingerprint,
        position: HashMap::with_capacity(ids.len()),
        rejected_zero: 0,
    };
    for ((id, v), m) in ids.into_iter().zip(vectors).zip(meta) {
        if Some(v.dim()) != dim {
            return Err(Error::DimensionMismatch {
                expected: dim.unwrap_or(0),
                found: v.dim(),
            });
        }
        if index.position.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        if v.norm() == 0.0 {
            index.rejected_zero += 1;
            continue;
        }
        index.position.insert(id.clone(), index.ids.len());
        index.ids.push(id);
        index.vectors.push(v.normalized());
        index.meta.push(m);
    }
    if index.rejected_zero > 0 {
        log::warn!("{} zero vector(s) left out of the index", index.rejected_zero);
    }
    Ok(index)
}

impl SimilarityIndex {
    /// Rebuilds from stored, already-normalized parts without renormalizing.
    pub fn from_parts(ids: Vec<String>, vectors: Vec<SparseVector>, meta: Vec<ArticleMeta>, fingerprint: Fingerprint) -> Result<Self> {
        if ids.len() != vectors.len() || ids.len() != meta.len() {
            return Err(Error::Archive("index parts differ in length".into()));
        }
        let mut position = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if position.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(SimilarityIndex {
            ids,
            vectors,
            meta,
            fingerprint,
            position,
            rejected_zero: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vectors(&self) -> &[SparseVector] {
        &self.vectors
    }

    pub fn meta(&self) -> &[ArticleMeta] {
        &self.meta
    }

    pub fn fingerprint(&self) -> &Fingerprint {
        &self.fingerprint
    }

    pub fn rejected_zero(&self) -> usize {
        self.rejected_zero
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.dim())
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.position.get(id).copied()
    }

    pub fn vector(&self, id: &str) -> Option<&SparseVector> {
        self.position(id).map(|i| &self.vectors[i])
    }

    fn entry(&self, i: usize, score: f64) -> Recommendation {
        Recommendation {
            id: self.ids[i].clone(),
            score,
            labels: self.meta[i].labels.clone(),
            date: self.meta[i].date,
        }
    }

    /// Top `k` candidates by cosine to `query`, ties by id ascending.
    /// Filters and exclusions prune candidates before scoring.
    pub fn query_topk(
        &self,
        query: &SparseVector,
        k: usize,
        exclude: &HashSet<String>,
        filters: &Filters,
        fingerprint: &Fingerprint,
    ) -> Result<RecommendationList> {
        self.fingerprint.check(fingerprint)?;
        self.topk(query, k, exclude, filters, "vector".into())
    }

    fn topk(
        &self,
        query: &SparseVector,
        k: usize,
        exclude: &HashSet<String>,
        filters: &Filters,
        descriptor: String,
    ) -> Result<RecommendationList> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if query.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: query.dim(),
            });
        }
        if query.norm() == 0.0 {
            return Err(Error::ZeroVector("query".into()));
        }
        let q = query.normalized();
        let mut scored: Vec<(f64, usize)> = (0..self.ids.len())
            .filter(|&i| filters.admits(&self.meta[i]) && !exclude.contains(&self.ids[i]))
            .map(|i| (score(&q, &self.vectors[i]), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then_with(|| self.ids[a.1].cmp(&self.ids[b.1]));
        if scored.len() > k {
            scored.select_nth_unstable_by(k - 1, cmp);
            scored.truncate(k);
        }
        scored.sort_by(cmp);
        Ok(RecommendationList {
            query: descriptor,
            k,
            results: scored.into_iter().map(|(s, i)| self.entry(i, s)).collect(),
        })
    }

    /// Neighbours of an indexed article, excluding the article itself.
    pub fn query_by_id(&self, id: &str, k: usize, filters: &Filters) -> Result<RecommendationList> {
        let v = self.vector(id).ok_or_else(|| Error::UnknownId(id.to_string()))?;
        let exclude = HashSet::from([id.to_string()]);
        self.topk(v, k, &exclude, filters, format!("id:{id}"))
    }

    /// Ranks against the mean of the history vectors, excluding the history.
    /// Returns the list and the number of history ids not in the index.
    pub fn recommend_for_profile(&self, history: &[String], k: usize, filters: &Filters) -> Result<(RecommendationList, usize)> {
        let found: Vec<usize> = history.iter().filter_map(|id| self.position(id)).collect();
        let missing = history.len() - found.len();
        if found.is_empty() {
            return Err(Error::EmptyHistory);
        }
        let mut sum = vec![0.0; self.dim()];
        for &i in &found {
            for (j, v) in self.vectors[i].iter() {
                sum[j as usize] += v;
            }
        }
        let n = found.len() as f64;
        sum.iter_mut().for_each(|s| *s /= n);
        let profile = SparseVector::from_dense(&sum);
        let exclude: HashSet<String> = found.iter().map(|&i| self.ids[i].clone()).collect();
        if profile.norm() == 0.0 {
            return Err(Error::ZeroVector("reading-history profile".into()));
        }
        let list = self.topk(&profile, k, &exclude, filters, format!("profile:{}", found.len()))?;
        Ok((list, missing))
    }

    /// Vectorizes `text` with the pipeline that built the index.
    pub fn query_by_text(
        &self,
        text: &str,
        vectorizer: &Vectorizer,
        k: usize,
        exclude: &HashSet<String>,
        filters: &Filters,
    ) -> Result<RecommendationList> {
        self.fingerprint.check(vectorizer.fingerprint())?;
        let q = vectorizer.transform_text(text)?;
        if vectorizer.lexical_vector(text).is_some_and(|c| c.is_empty()) || q.norm() == 0.0 {
            return Err(Error::EmptyQuery);
        }
        self.topk(&q, k, exclude, filters, "text".into())
    }
}

/// Dot product of unit vectors, clamped to [-1, 1] against rounding.
pub fn score(q: &SparseVector, v: &SparseVector) -> f64 {
    q.dot(v).clamp(-1.0, 1.0)
}
