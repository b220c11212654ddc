//! Representation × algorithm benchmark on a held-out split.

use std::io::Write;
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::classifiers::ovr::argmax;
use crate::classifiers::{ovr_fit, AlgorithmConfig, OvrOptions};
use crate::corpus::{split_indices, Corpus};
use crate::error::{Error, Result};
use crate::evaluation::cv::{grid_search, GridSpec, DEFAULT_FOLDS};
use crate::evaluation::{compute_metrics, single_label_accuracy, EvalReport};
use crate::features::{EmbeddingSet, SparseVector};
use crate::pipeline::{FeatureRows, PrepResources, Vectorizer, VectorizerSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// Train and score on the primary label only.
    Single,
    /// Train on full label sets.
    Multi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkProtocol {
    pub test_fraction: f64,
    pub seed: u64,
    pub stratify: bool,
    pub label_mode: LabelMode,
    /// Grid-search each algorithm on the training split before the final fit.
    pub grid_search: bool,
    pub folds: usize,
    pub ovr: OvrOptions,
}

impl Default for BenchmarkProtocol {
    fn default() -> Self {
        BenchmarkProtocol {
            test_fraction: 0.2,
            seed: 1,
            stratify: true,
            label_mode: LabelMode::Single,
            grid_search: false,
            folds: DEFAULT_FOLDS,
            ovr: OvrOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub representation: String,
    pub algorithm: String,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub accuracy: Option<f64>,
    pub subset_accuracy: Option<f64>,
    pub train_seconds: Option<f64>,
    pub feature_dim: Option<usize>,
    pub train_rows: usize,
    pub test_rows: usize,
    /// Records left out because they had no embedding.
    pub excluded_records: usize,
    pub config: Option<AlgorithmConfig>,
    pub report: Option<EvalReport>,
    pub error: Option<String>,
}

impl BenchmarkRow {
    fn failed(representation: &str, algorithm: &str, error: String) -> Self {
        BenchmarkRow {
            representation: representation.to_string(),
            algorithm: algorithm.to_string(),
            precision: None,
            recall: None,
            f1: None,
            accuracy: None,
            subset_accuracy: None,
            train_seconds: None,
            feature_dim: None,
            train_rows: 0,
            test_rows: 0,
            excluded_records: 0,
            config: None,
            report: None,
            error: Some(error),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub protocol: BenchmarkProtocol,
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkTable {
    pub fn row(&self, representation: &str, algorithm: &str) -> Option<&BenchmarkRow> {
        self.rows
            .iter()
            .find(|r| r.representation == representation && r.algorithm == algorithm)
    }

    /// `representation,algorithm,precision,recall,f1,accuracy,subset_accuracy,train_seconds`;
    /// failed cells leave metric fields empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "representation",
            "algorithm",
            "precision",
            "recall",
            "f1",
            "accuracy",
            "subset_accuracy",
            "train_seconds",
        ])?;
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.representation.clone(),
                r.algorithm.clone(),
                cell(r.precision),
                cell(r.recall),
                cell(r.f1),
                cell(r.accuracy),
                cell(r.subset_accuracy),
                r.train_seconds.map(|x| format!("{x:.3}")).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn gold_sets(corpus: &Corpus, idx: &[usize], mode: LabelMode) -> Vec<Vec<String>> {
    idx.iter()
        .map(|&i| {
            let r = &corpus.records[i];
            match mode {
                LabelMode::Single => vec![r.primary_label().to_string()],
                LabelMode::Multi => r.labels.clone(),
            }
        })
        .collect()
}

struct Prepared {
    train_x: Vec<SparseVector>,
    test_x: Vec<SparseVector>,
    train_idx: Vec<usize>,
    test_idx: Vec<usize>,
    dim: usize,
    excluded: usize,
}

fn prepare(
    corpus: &Corpus,
    train_idx: &[usize],
    test_idx: &[usize],
    spec: &VectorizerSpec,
    resources: &PrepResources,
    embeddings: Option<&EmbeddingSet>,
) -> Result<Prepared> {
    let train_recs: Vec<_> = train_idx.iter().map(|&i| corpus.records[i].clone()).collect();
    let test_recs: Vec<_> = test_idx.iter().map(|&i| corpus.records[i].clone()).collect();
    let (vz, FeatureRows { rows: train_x, kept: tk }, _) = Vectorizer::fit(spec.clone(), resources.clone(), &train_recs, embeddings)?;
    let FeatureRows { rows: test_x, kept: ek } = vz.transform_records(&test_recs, embeddings)?;
    let excluded = train_idx.len() - tk.len() + test_idx.len() - ek.len();
    if excluded > 0 {
        warn!("{}: {excluded} record(s) without embeddings excluded", spec.representation);
    }
    if train_x.is_empty() || test_x.is_empty() {
        return Err(Error::EmptyCorpus(format!("{} features", spec.representation)));
    }
    Ok(Prepared {
        train_x,
        test_x,
        train_idx: tk.iter().map(|&k| train_idx[k]).collect(),
        test_idx: ek.iter().map(|&k| test_idx[k]).collect(),
        dim: vz.dim(),
        excluded,
    })
}

fn run_cell(
    corpus: &Corpus,
    prep: &Prepared,
    config: &AlgorithmConfig,
    protocol: &BenchmarkProtocol,
    representation: &str,
) -> Result<BenchmarkRow> {
    let space = &corpus.label_space;
    let train_y = gold_sets(corpus, &prep.train_idx, protocol.label_mode);
    let test_y = gold_sets(corpus, &prep.test_idx, protocol.label_mode);
    let started = Instant::now();
    let config = if protocol.grid_search {
        let strata: Vec<String> = prep.train_idx.iter().map(|&i| corpus.records[i].primary_label().to_string()).collect();
        let spec = GridSpec {
            folds: protocol.folds,
            stratify: protocol.stratify,
            ..GridSpec::with_defaults(config.clone(), protocol.seed)
        };
        grid_search(&spec, &prep.train_x, &train_y, space, Some(&strata), &protocol.ovr)?.best
    } else {
        config.clone()
    };
    let fp = crate::features::Fingerprint(representation.to_string());
    let model = ovr_fit(&config, &prep.train_x, &train_y, space, &fp, &protocol.ovr)?;
    let train_seconds = started.elapsed().as_secs_f64();

    let preds = model.predict_batch(&prep.test_x, &fp)?;
    let predicted: Vec<Vec<String>> = preds.iter().map(|p| model.label_names(p)).collect();
    let mut report = compute_metrics(&predicted, &test_y, space)?;
    let top: Vec<String> = preds.iter().map(|p| model.labels[argmax(&p.scores)].clone()).collect();
    let primary: Vec<String> = prep
        .test_idx
        .iter()
        .map(|&i| corpus.records[i].primary_label().to_string())
        .collect();
    let accuracy = single_label_accuracy(&top, &primary)?;
    report.accuracy = Some(accuracy);
    Ok(BenchmarkRow {
        representation: representation.to_string(),
        algorithm: config.algorithm().name().to_string(),
        precision: Some(report.macro_precision),
        recall: Some(report.macro_recall),
        f1: Some(report.macro_f1),
        accuracy: Some(accuracy),
        subset_accuracy: Some(report.subset_accuracy),
        train_seconds: Some(train_seconds),
        feature_dim: Some(prep.dim),
        train_rows: prep.train_x.len(),
        test_rows: prep.test_x.len(),
        excluded_records: prep.excluded,
        config: Some(config),
        report: Some(report),
        error: None,
    })
}

/// Fits each representation on the training split, then each algorithm on
/// those features, scoring on the test split. A failing cell is recorded
/// in its row and the run continues.
pub fn run_benchmark(
    corpus: &Corpus,
    representations: &[VectorizerSpec],
    algorithms: &[AlgorithmConfig],
    protocol: &BenchmarkProtocol,
    resources: &PrepResources,
    embeddings: Option<&EmbeddingSet>,
) -> Result<BenchmarkTable> {
    if representations.is_empty() || algorithms.is_empty() {
        return Err(Error::InvalidParameter("benchmark needs at least one representation and one algorithm".into()));
    }
    if representations.iter().any(|r| r.representation.uses_embeddings()) && embeddings.is_none() {
        return Err(Error::MissingResource("embeddings file for a dense representation"));
    }
    let (train_idx, test_idx) = split_indices(corpus, protocol.test_fraction, protocol.seed, protocol.stratify)?;
    let mut rows = Vec::new();
    for spec in representations {
        let name = spec.representation.name();
        info!("benchmark: fitting {name} features");
        let prep = match prepare(corpus, &train_idx, &test_idx, spec, resources, embeddings) {
            Ok(p) => p,
            Err(e) => {
                warn!("benchmark: {name} features failed: {e}");
                for a in algorithms {
                    rows.push(BenchmarkRow::failed(name, a.algorithm().name(), e.to_string()));
                }
                continue;
            }
        };
        for config in algorithms {
            let config = config.with_seed(protocol.seed);
            info!("benchmark: {name} x {}", config.algorithm());
            match run_cell(corpus, &prep, &config, protocol, name) {
                Ok(row) => {
                    info!(
                        "benchmark: {name} x {} accuracy {:.4} macro-F1 {:.4} ({:.1}s)",
                        row.algorithm,
                        row.accuracy.unwrap_or(f64::NAN),
                        row.f1.unwrap_or(f64::NAN),
                        row.train_seconds.unwrap_or(0.0)
                    );
                    rows.push(row)
                }
                Err(e) => {
                    warn!("benchmark: {name} x {} failed: {e}", config.algorithm());
                    let mut row = BenchmarkRow::failed(name, config.algorithm().name(), e.to_string());
                    row.feature_dim = Some(prep.dim);
                    row.config = Some(config.clone());
                    rows.push(row);
                }
            }
        }
    }
    Ok(BenchmarkTable {
        protocol: protocol.clone(),
        rows,
    })
}
