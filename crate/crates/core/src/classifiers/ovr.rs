//! One-vs-rest multi-label bundles.

use std::collections::BTreeSet;
use std::sync::Arc;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::classifiers::knn::KnnTrainSet;
use crate::classifiers::{fit_binary_shared, AlgorithmConfig, BinaryModel};
use crate::error::{Error, Result};
use crate::evaluation::smote::{smote, SmoteParams};
use crate::features::{Fingerprint, SparseVector};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OvrOptions {
    /// Overrides the algorithm's default decision threshold.
    pub threshold: Option<f64>,
    /// Oversample each binary problem's minority class before fitting.
    pub smote: Option<SmoteParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiLabelModel {
    pub algorithm: AlgorithmConfig,
    /// Sorted; `models[i]` scores `labels[i]`.
    pub labels: Vec<String>,
    pub models: Vec<BinaryModel>,
    pub threshold: f64,
    pub fingerprint: Fingerprint,
    /// Labels from the label space that had no positive training example.
    pub dropped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Indices into the model's label list, ascending.
    pub labels: Vec<usize>,
    /// One score per model label.
    pub scores: Vec<f64>,
}

/// Labels whose score reaches `threshold`, or the first argmax label when
/// none does.
pub fn decide(scores: &[f64], threshold: f64) -> Vec<usize> {
    let hits: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= threshold).collect();
    if !hits.is_empty() || scores.is_empty() {
        return hits;
    }
    vec![argmax(scores)]
}

/// Index of the largest score; ties go to the lower index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

pub fn ovr_fit(
    config: &AlgorithmConfig,
    xs: &[SparseVector],
    ys: &[Vec<String>],
    label_space: &[String],
    fingerprint: &Fingerprint,
    options: &OvrOptions,
) -> Result<MultiLabelModel> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::InvalidParameter(format!(
            "need equal, non-zero numbers of rows and label sets (got {} and {})",
            xs.len(),
            ys.len()
        )));
    }
    let space: BTreeSet<&String> = label_space.iter().collect();
    for set in ys {
        if let Some(bad) = set.iter().find(|l| !space.contains(l)) {
            return Err(Error::UnknownLabel(bad.clone()));
        }
    }
    let knn_train = match (config, &options.smote) {
        (AlgorithmConfig::Knn(_), None) => Some(Arc::new(KnnTrainSet::new(xs)?)),
        _ => None,
    };
    let mut labels = Vec::new();
    let mut models = Vec::new();
    let mut dropped = Vec::new();
    for &label in &space {
        let yb: Vec<bool> = ys.iter().map(|set| set.contains(label)).collect();
        let pos = yb.iter().filter(|&&y| y).count();
        if pos == 0 {
            warn!("label {label} has no positive training examples; dropped");
            dropped.push(label.clone());
            continue;
        }
        if pos == yb.len() {
            return Err(Error::InvalidParameter(format!("label {label} has no negative training examples")));
        }
        let model = match &options.smote {
            Some(params) => {
                let (xa, ya) = smote(xs, &yb, params)?;
                fit_binary_shared(config, &xa, &ya, None)?
            }
            None => fit_binary_shared(config, xs, &yb, knn_train.as_ref())?,
        };
        labels.push(label.clone());
        models.push(model);
    }
    if models.is_empty() {
        return Err(Error::InvalidParameter("no label has a positive training example".into()));
    }
    Ok(MultiLabelModel {
        threshold: options.threshold.unwrap_or_else(|| config.algorithm().default_threshold()),
        algorithm: config.clone(),
        labels,
        models,
        fingerprint: fingerprint.clone(),
        dropped,
    })
}

impl MultiLabelModel {
    fn shared_knn(&self) -> Option<&Arc<KnnTrainSet>> {
        let BinaryModel::Knn(first) = self.models.first()? else {
            return None;
        };
        let all_shared = self
            .models
            .iter()
            .all(|m| matches!(m, BinaryModel::Knn(k) if Arc::ptr_eq(&k.train, &first.train) && k.k == first.k));
        all_shared.then_some(&first.train)
    }

    /// Scores for every label, without a fingerprint check.
    pub fn scores(&self, x: &SparseVector) -> Vec<f64> {
        if let Some(train) = self.shared_knn() {
            let BinaryModel::Knn(first) = &self.models[0] else { unreachable!() };
            let neighbors = train.neighbors(x, first.k);
            return self
                .models
                .iter()
                .map(|m| match m {
                    BinaryModel::Knn(k) => k.score_neighbors(&neighbors),
                    _ => unreachable!(),
                })
                .collect();
        }
        self.models.iter().map(|m| m.score(x)).collect()
    }

    pub fn predict(&self, x: &SparseVector, fingerprint: &Fingerprint) -> Result<Prediction> {
        self.fingerprint.check(fingerprint)?;
        let scores = self.scores(x);
        Ok(Prediction {
            labels: decide(&scores, self.threshold),
            scores,
        })
    }

    pub fn predict_batch(&self, xs: &[SparseVector], fingerprint: &Fingerprint) -> Result<Vec<Prediction>> {
        self.fingerprint.check(fingerprint)?;
        Ok(xs
            .iter()
            .map(|x| {
                let scores = self.scores(x);
                Prediction {
                    labels: decide(&scores, self.threshold),
                    scores,
                }
            })
            .collect())
    }

    pub fn label_names(&self, p: &Prediction) -> Vec<String> {
        p.labels.iter().map(|&i| self.labels[i].clone()).collect()
    }

    /// The kNN training set shared by every model, if any.
    pub fn knn_train_set(&self) -> Option<&KnnTrainSet> {
        self.shared_knn().map(|a| a.as_ref())
    }
}

/// On-disk form: a shared kNN training set is written once and reattached
/// to each per-label model when loading.
#[derive(Serialize, Deserialize)]
struct MultiLabelRepr {
    algorithm: AlgorithmConfig,
    labels: Vec<String>,
    models: Vec<BinaryModel>,
    threshold: f64,
    fingerprint: Fingerprint,
    dropped: Vec<String>,
    knn_train: Option<KnnTrainSet>,
}

impl Serialize for MultiLabelModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let knn_train = match self.models.first() {
            Some(BinaryModel::Knn(k)) => Some(KnnTrainSet::clone(&k.train)),
            _ => None,
        };
        if knn_train.is_some() && self.shared_knn().is_none() {
            return Err(serde::ser::Error::custom("kNN models with distinct training sets cannot be persisted"));
        }
        MultiLabelRepr {
            algorithm: self.algorithm.clone(),
            labels: self.labels.clone(),
            models: self.models.clone(),
            threshold: self.threshold,
            fingerprint: self.fingerprint.clone(),
            dropped: self.dropped.clone(),
            knn_train,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultiLabelModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let mut r = MultiLabelRepr::deserialize(d)?;
        if r.labels.len() != r.models.len() {
            return Err(serde::de::Error::custom("label and model counts differ"));
        }
        if let Some(train) = r.knn_train.take() {
            let train = Arc::new(train);
            for m in &mut r.models {
                if let BinaryModel::Knn(k) = m {
                    if k.labels.len() != train.len() {
                        return Err(serde::de::Error::custom("kNN labels do not match the stored training set"));
                    }
                    k.train = train.clone();
                }
            }
        }
        Ok(MultiLabelModel {
            algorithm: r.algorithm,
            labels: r.labels,
            models: r.models,
            threshold: r.threshold,
            fingerprint: r.fingerprint,
            dropped: r.dropped,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{Algorithm, KnnParams};

    fn sv(v: &[f64]) -> SparseVector {
        SparseVector::from_dense(v)
    }

    fn fp() -> Fingerprint {
        Fingerprint("toy".into())
    }

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    /// Three disjoint single-label groups along the axes.
    fn toy() -> (Vec<SparseVector>, Vec<Vec<String>>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..30 {
            let mut v = [0.0; 3];
            v[i % 3] = 1.0 + (i / 3) as f64 * 0.1;
            xs.push(sv(&v));
            ys.push(labels(&[["c", "a", "b"][i % 3]]));
        }
        (xs, ys)
    }

    #[test]
    fn thresholding_and_fallback() {
        assert_eq!(decide(&[0.9, 0.2, 0.7], 0.5), vec![0, 2]);
        assert_eq!(decide(&[0.1, 0.4, 0.3], 0.5), vec![1]);
        assert_eq!(decide(&[-1.0, -1.0], 0.0), vec![0]);
    }

    #[test]
    fn one_model_per_sorted_label() {
        let (xs, ys) = toy();
        let space = labels(&["c", "b", "a"]);
        let m = ovr_fit(&Algorithm::Logreg.default_config(), &xs, &ys, &space, &fp(), &OvrOptions::default()).unwrap();
        assert_eq!(m.labels, labels(&["a", "b", "c"]));
        assert_eq!(m.models.len(), 3);
    }

    #[test]
    fn per_model_training_sets_are_own_vs_rest() {
        let (xs, ys) = toy();
        let space = labels(&["a", "b", "c"]);
        let config = AlgorithmConfig::Knn(KnnParams { k: 1 });
        let m = ovr_fit(&config, &xs, &ys, &space, &fp(), &OvrOptions::default()).unwrap();
        for (li, label) in m.labels.iter().enumerate() {
            let BinaryModel::Knn(k) = &m.models[li] else { panic!() };
            let expect: Vec<bool> = ys.iter().map(|s| s.contains(label)).collect();
            assert_eq!(k.labels, expect);
        }
        for (x, y) in xs.iter().zip(&ys) {
            let p = m.predict(x, &fp()).unwrap();
            assert_eq!(m.label_names(&p), *y);
        }
    }

    #[test]
    fn permuted_label_space_gives_same_sets() {
        let (xs, ys) = toy();
        let cfg = Algorithm::Mnb.default_config();
        let a = ovr_fit(&cfg, &xs, &ys, &labels(&["a", "b", "c"]), &fp(), &OvrOptions::default()).unwrap();
        let b = ovr_fit(&cfg, &xs, &ys, &labels(&["c", "a", "b"]), &fp(), &OvrOptions::default()).unwrap();
        for x in &xs {
            let pa = a.predict(x, &fp()).unwrap();
            let pb = b.predict(x, &fp()).unwrap();
            assert_eq!(a.label_names(&pa), b.label_names(&pb));
        }
    }

    #[test]
    fn missing_positives_dropped_and_errors() {
        let (xs, ys) = toy();
        let m = ovr_fit(&Algorithm::Mnb.default_config(), &xs, &ys, &labels(&["a", "b", "c", "d"]), &fp(), &OvrOptions::default()).unwrap();
        assert_eq!(m.dropped, labels(&["d"]));
        assert_eq!(m.models.len(), 3);
        assert!(matches!(
            ovr_fit(&Algorithm::Mnb.default_config(), &xs, &ys, &labels(&["a", "b"]), &fp(), &OvrOptions::default()),
            Err(Error::UnknownLabel(_))
        ));
        let all_a: Vec<Vec<String>> = ys.iter().map(|_| labels(&["a"])).collect();
        assert!(ovr_fit(&Algorithm::Mnb.default_config(), &xs, &all_a, &labels(&["a"]), &fp(), &OvrOptions::default()).is_err());
    }

    #[test]
    fn fingerprint_mismatch_rejected() {
        let (xs, ys) = toy();
        let m = ovr_fit(&Algorithm::Mnb.default_config(), &xs, &ys, &labels(&["a", "b", "c"]), &fp(), &OvrOptions::default()).unwrap();
        assert!(matches!(m.predict(&xs[0], &Fingerprint("other".into())), Err(Error::FingerprintMismatch { .. })));
    }

    #[test]
    fn serde_round_trip_restores_shared_knn() {
        let (xs, ys) = toy();
        let config = AlgorithmConfig::Knn(KnnParams { k: 3 });
        let m = ovr_fit(&config, &xs, &ys, &labels(&["a", "b", "c"]), &fp(), &OvrOptions::default()).unwrap();
        let back: MultiLabelModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert!(back.shared_knn().is_some());
        for x in &xs {
            assert_eq!(m.scores(x), back.scores(x));
        }
    }
}
