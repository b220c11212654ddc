//! Cosine k-nearest-neighbours over a shared, normalized training set.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 10 }
    }
}

/// Unit-normalized training rows plus an inverted index. One instance is
/// shared by every per-label model of a one-vs-rest bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<SparseVector>", into = "Vec<SparseVector>")]
pub struct KnnTrainSet {
    rows: Vec<SparseVector>,
    postings: Vec<Vec<(u32, f64)>>,
}

impl From<Vec<SparseVector>> for KnnTrainSet {
    fn from(rows: Vec<SparseVector>) -> Self {
        let dim = rows.first().map_or(0, |r| r.dim());
        let mut postings = vec![Vec::new(); dim];
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter() {
                postings[j as usize].push((i as u32, v));
            }
        }
        KnnTrainSet { rows, postings }
    }
}

impl From<KnnTrainSet> for Vec<SparseVector> {
    fn from(set: KnnTrainSet) -> Self {
        set.rows
    }
}

impl KnnTrainSet {
    pub fn new(xs: &[SparseVector]) -> Result<Self> {
        let Some(first) = xs.first() else {
            return Err(Error::EmptyCorpus("kNN training set".into()));
        };
        let dim = first.dim();
        if let Some(bad) = xs.iter().find(|x| x.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(xs.iter().map(|x| x.normalized()).collect::<Vec<_>>().into())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.postings.len()
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }

    /// Cosine similarity of `x` against every training row.
    pub fn similarities(&self, x: &SparseVector) -> Vec<f64> {
        let q = x.normalized();
        let mut sims = vec![0.0; self.rows.len()];
        for (j, v) in q.iter() {
            if let Some(list) = self.postings.get(j as usize) {
                for &(i, w) in list {
                    sims[i as usize] += v * w;
                }
            }
        }
        sims
    }

    /// Row indices of the `k` most similar rows, most similar first; equal
    /// similarities go to the lower row index.
    pub fn neighbors(&self, x: &SparseVector, k: usize) -> Vec<usize> {
        let sims = self.similarities(x);
        let k = k.min(sims.len());
        let mut order: Vec<usize> = (0..sims.len()).collect();
        let cmp = |a: &usize, b: &usize| sims[*b].total_cmp(&sims[*a]).then(a.cmp(b));
        if k < order.len() && k > 0 {
            order.select_nth_unstable_by(k - 1, cmp);
            order.truncate(k);
        }
        order.sort_by(cmp);
        order.truncate(k);
        order
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    /// Restored by the owning bundle after deserialization.
    #[serde(skip)]
    pub train: Arc<KnnTrainSet>,
    pub labels: Vec<bool>,
}

impl Default for KnnTrainSet {
    fn default() -> Self {
        Vec::new().into()
    }
}

impl KnnModel {
    pub fn score_neighbors(&self, neighbors: &[usize]) -> f64 {
        if neighbors.is_empty() {
            return 0.0;
        }
        neighbors.iter().filter(|&&i| self.labels[i]).count() as f64 / neighbors.len() as f64
    }

    pub fn score(&self, x: &SparseVector) -> f64 {
        self.score_neighbors(&self.train.neighbors(x, self.k))
    }
}

pub fn fit_knn_shared(train: Arc<KnnTrainSet>, ys: &[bool], params: &KnnParams) -> Result<KnnModel> {
    if train.is_empty() {
        return Err(Error::EmptyCorpus("kNN training set".into()));
    }
    if ys.len() != train.len() {
        return Err(Error::InvalidParameter(format!("{} labels for {} training rows", ys.len(), train.len())));
    }
    if params.k == 0 || params.k > train.len() {
        return Err(Error::InvalidParameter(format!("k must be in 1..={}, got {}", train.len(), params.k)));
    }
    Ok(KnnModel {
        k: params.k,
        train,
        labels: ys.to_vec(),
    })
}

pub fn fit_knn(xs: &[SparseVector], ys: &[bool], params: &KnnParams) -> Result<KnnModel> {
    fit_knn_shared(Arc::new(KnnTrainSet::new(xs)?), ys, params)
}
