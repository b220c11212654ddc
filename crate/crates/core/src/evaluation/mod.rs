//! Metrics, cross-validation, grid search, SMOTE and the benchmark runner.

pub mod benchmark;
pub mod cv;
pub mod smote;

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use benchmark::{run_benchmark, BenchmarkProtocol, BenchmarkRow, BenchmarkTable, LabelMode};
pub use cv::{default_grid, grid_search, kfold, GridCell, GridResult, GridSpec, DEFAULT_FOLDS};
pub use smote::{smote, SmoteParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelReport {
    pub label: String,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub samples: usize,
    pub per_label: Vec<LabelReport>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub subset_accuracy: f64,
    /// Argmax label vs primary label, when a single-label view was scored.
    pub accuracy: Option<f64>,
    /// Labels with neither gold nor predicted positives; left out of the
    /// macro averages.
    pub excluded_labels: Vec<String>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Per-label confusion counts and averaged rates. Precision or recall with
/// a zero denominator counts as 0.
pub fn compute_metrics(predicted: &[Vec<String>], gold: &[Vec<String>], label_space: &[String]) -> Result<EvalReport> {
    if predicted.is_empty() || predicted.len() != gold.len() {
        return Err(Error::InvalidParameter(format!(
            "need equal, non-zero numbers of predicted and gold sets (got {} and {})",
            predicted.len(),
            gold.len()
        )));
    }
    let labels: Vec<&String> = label_space.iter().collect::<BTreeSet<_>>().into_iter().collect();
    let index: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let as_set = |set: &[String]| -> Result<BTreeSet<usize>> {
        set.iter()
            .map(|l| index.get(l.as_str()).copied().ok_or_else(|| Error::UnknownLabel(l.clone())))
            .collect()
    };
    let n = predicted.len();
    let mut tp = vec![0usize; labels.len()];
    let mut fp = vec![0usize; labels.len()];
    let mut fn_ = vec![0usize; labels.len()];
    let mut exact = 0;
    for (p, g) in predicted.iter().zip(gold) {
        let p = as_set(p)?;
        let g = as_set(g)?;
        if p == g {
            exact += 1;
        }
        for &l in &p {
            if g.contains(&l) {
                tp[l] += 1;
            } else {
                fp[l] += 1;
            }
        }
        for &l in g.difference(&p) {
            fn_[l] += 1;
        }
    }
    let mut per_label = Vec::with_capacity(labels.len());
    let mut excluded = Vec::new();
    let (mut sp, mut sr, mut sf, mut counted) = (0.0, 0.0, 0.0, 0usize);
    for (i, l) in labels.iter().enumerate() {
        let precision = ratio(tp[i], tp[i] + fp[i]);
        let recall = ratio(tp[i], tp[i] + fn_[i]);
        let f = f1(precision, recall);
        if tp[i] + fp[i] + fn_[i] == 0 {
            excluded.push((*l).clone());
        } else {
            sp += precision;
            sr += recall;
            sf += f;
            counted += 1;
        }
        per_label.push(LabelReport {
            label: (*l).clone(),
            tp: tp[i],
            fp: fp[i],
            fn_: fn_[i],
            tn: n - tp[i] - fp[i] - fn_[i],
            precision,
            recall,
            f1: f,
        });
    }
    let mean = |s: f64| if counted == 0 { 0.0 } else { s / counted as f64 };
    let (ttp, tfp, tfn) = (tp.iter().sum(), fp.iter().sum::<usize>(), fn_.iter().sum::<usize>());
    let micro_p = ratio(ttp, ttp + tfp);
    let micro_r = ratio(ttp, ttp + tfn);
    Ok(EvalReport {
        samples: n,
        per_label,
        macro_precision: mean(sp),
        macro_recall: mean(sr),
        macro_f1: mean(sf),
        micro_f1: f1(micro_p, micro_r),
        subset_accuracy: exact as f64 / n as f64,
        accuracy: None,
        excluded_labels: excluded,
    })
}

/// Fraction of positions where the two labels agree.
pub fn single_label_accuracy(predicted: &[String], gold: &[String]) -> Result<f64> {
    if predicted.is_empty() || predicted.len() != gold.len() {
        return Err(Error::InvalidParameter("need equal, non-zero numbers of predictions and gold labels".into()));
    }
    Ok(predicted.iter().zip(gold).filter(|(p, g)| p == g).count() as f64 / predicted.len() as f64)
}
