//! Commands behind the CLI: ingest, train, benchmark, topics, recommend,
//! inspect. Each is a function of the config, its input files and the seed.

pub mod archive;
pub mod config;

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};

pub use archive::{load_archive, read_archive_manifest, save_archive, Manifest, ModelArchive, Provenance, Query};
pub use config::RunConfig;

use crate::classifiers::ovr::argmax;
use crate::classifiers::ovr_fit;
use crate::corpus::{load_jsonl, normalize_labels, split_indices, CategoryMap, Corpus, CorpusStats};
use crate::error::{Error, Result};
use crate::evaluation::{
    compute_metrics, grid_search, run_benchmark, single_label_accuracy, BenchmarkTable, EvalReport, GridSpec,
    LabelMode,
};
use crate::features::{count_vectorize, fit_vocabulary, load_embeddings, EmbeddingSet};
use crate::pipeline::{FeatureRows, Vectorizer, VectorizerSpec};
use crate::recommender::{build_index, ArticleMeta, Filters, RecommendationList};
use crate::topics::{fit_lda, log_perplexity, sweep_topics, topic_top_words, umass_coherence, LdaParams};

fn write_output(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Loads, cleans and label-normalizes the configured corpus, then draws the
/// configured stratified sample.
pub fn load_corpus(cfg: &RunConfig) -> Result<Corpus> {
    let path = cfg.corpus_path()?;
    let raw = load_jsonl(path, cfg.ingest.limit)?;
    let map = match &cfg.paths.category_map {
        Some(p) => CategoryMap::load(p)?,
        None => CategoryMap::default(),
    };
    let corpus = normalize_labels(raw, &map, cfg.ingest.unmapped)?;
    match cfg.ingest.sample {
        Some(n) if n < corpus.len() => corpus.stratified_sample(n, cfg.seed()?),
        _ => Ok(corpus),
    }
}

fn load_configured_embeddings(cfg: &RunConfig, needed: bool) -> Result<Option<EmbeddingSet>> {
    match (&cfg.paths.embeddings, needed) {
        (_, false) => Ok(None),
        (Some(p), true) => load_embeddings(p).map(Some),
        (None, true) => Err(Error::MissingResource("embeddings file for a dense representation")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub corpus: PathBuf,
    pub labels: Vec<String>,
    pub stats: CorpusStats,
}

/// Ingests the corpus and writes `ingest_stats.json` to the output directory.
pub fn cmd_ingest(cfg: &RunConfig) -> Result<IngestReport> {
    cfg.validate()?;
    let corpus = load_corpus(cfg)?;
    let report = IngestReport {
        corpus: cfg.corpus_path()?.to_path_buf(),
        labels: corpus.label_space.clone(),
        stats: corpus.stats,
    };
    write_output(&cfg.output_dir(), "ingest_stats.json", &serde_json::to_vec_pretty(&report)?)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub archive: Option<PathBuf>,
    pub representation: String,
    pub algorithm: String,
    pub feature_dim: usize,
    pub labels: Vec<String>,
    pub train_rows: usize,
    pub test_rows: usize,
    pub index_rows: usize,
    pub accuracy: Option<f64>,
    pub macro_f1: Option<f64>,
    pub train_seconds: f64,
}

fn gold(corpus: &Corpus, idx: &[usize], mode: LabelMode) -> Vec<Vec<String>> {
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

/// Fits the configured pipeline on the training split, evaluates on the
/// test split and indexes train and test rows. No file I/O.
pub fn train_archive(cfg: &RunConfig, corpus: &Corpus, embeddings: Option<&EmbeddingSet>) -> Result<ModelArchive> {
    let seed = cfg.seed()?;
    let cfg = cfg.clone().with_seed(seed);
    let started = Instant::now();
    let (train_idx, test_idx) = split_indices(corpus, cfg.protocol.test_fraction, seed, cfg.protocol.stratify)?;
    let train_recs: Vec<_> = train_idx.iter().map(|&i| corpus.records[i].clone()).collect();
    let test_recs: Vec<_> = test_idx.iter().map(|&i| corpus.records[i].clone()).collect();

    info!("train: fitting {} features on {} records", cfg.features.representation, train_recs.len());
    let (vectorizer, FeatureRows { rows: train_x, kept: train_kept }, _) =
        Vectorizer::fit(cfg.features.clone(), cfg.resources()?, &train_recs, embeddings)?;
    let FeatureRows { rows: test_x, kept: test_kept } = vectorizer.transform_records(&test_recs, embeddings)?;
    let train_idx: Vec<usize> = train_kept.iter().map(|&k| train_idx[k]).collect();
    let test_idx: Vec<usize> = test_kept.iter().map(|&k| test_idx[k]).collect();
    let excluded = train_recs.len() + test_recs.len() - train_idx.len() - test_idx.len();
    if excluded > 0 {
        warn!("train: {excluded} record(s) without embeddings excluded");
    }
    if train_x.is_empty() {
        return Err(Error::EmptyCorpus("training features".into()));
    }

    let mode = cfg.protocol.label_mode;
    let train_y = gold(corpus, &train_idx, mode);
    let options = cfg.ovr_options();
    let (config, grid) = if cfg.grid.enabled {
        let mut spec = GridSpec::with_defaults(cfg.model.clone(), seed);
        if !cfg.grid.params.is_empty() {
            spec.params = cfg.grid.params.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        }
        spec.folds = cfg.protocol.folds;
        spec.stratify = cfg.protocol.stratify;
        let strata: Vec<String> = train_idx.iter().map(|&i| corpus.records[i].primary_label().to_string()).collect();
        info!("train: grid search over {} cell(s)", spec.cells()?.len());
        let g = grid_search(&spec, &train_x, &train_y, &corpus.label_space, Some(&strata), &options)?;
        let best_score = g
            .cells
            .iter()
            .find(|c| c.params == g.best_params)
            .and_then(|c| c.mean_score);
        let summary = archive::GridSummary {
            best_params: g.best_params.clone(),
            best_score,
            cells: g.cells.len(),
            failed_cells: g.failed_cells,
        };
        (g.best, Some(summary))
    } else {
        (cfg.model.clone(), None)
    };

    info!("train: fitting {} one-vs-rest", config.algorithm());
    let fp = vectorizer.fingerprint().clone();
    let model = ovr_fit(&config, &train_x, &train_y, &corpus.label_space, &fp, &options)?;

    let test_report = if test_x.is_empty() {
        None
    } else {
        let preds = model.predict_batch(&test_x, &fp)?;
        let predicted: Vec<Vec<String>> = preds.iter().map(|p| model.label_names(p)).collect();
        let mut report = compute_metrics(&predicted, &gold(corpus, &test_idx, mode), &corpus.label_space)?;
        let top: Vec<String> = preds.iter().map(|p| model.labels[argmax(&p.scores)].clone()).collect();
        let primary: Vec<String> = test_idx.iter().map(|&i| corpus.records[i].primary_label().to_string()).collect();
        report.accuracy = Some(single_label_accuracy(&top, &primary)?);
        Some(report)
    };

    let mut ids = Vec::with_capacity(train_idx.len() + test_idx.len());
    let mut meta = Vec::with_capacity(ids.capacity());
    for &i in train_idx.iter().chain(&test_idx) {
        let r = &corpus.records[i];
        ids.push(r.id.clone());
        meta.push(ArticleMeta {
            labels: r.labels.clone(),
            date: r.date,
            citations: None,
        });
    }
    let vectors = train_x.into_iter().chain(test_x).collect();
    let index = build_index(ids, vectors, meta, fp)?;

    let provenance = Provenance {
        config_hash: cfg.hash(),
        created_at: chrono::Utc::now().to_rfc3339(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        corpus: corpus.stats.clone(),
        train_rows: train_idx.len(),
        test_rows: test_idx.len(),
        excluded_records: excluded,
        index_rows: index.len(),
        index_rejected_zero: index.rejected_zero(),
        test_report,
        grid,
    };
    info!("train: done in {:.1}s", started.elapsed().as_secs_f64());
    let mut cfg = cfg;
    cfg.model = config;
    Ok(ModelArchive {
        config: cfg,
        provenance,
        vectorizer,
        model,
        index,
    })
}

pub fn train_report(a: &ModelArchive, path: Option<&Path>, seconds: f64) -> TrainReport {
    let rep: Option<&EvalReport> = a.provenance.test_report.as_ref();
    TrainReport {
        archive: path.map(Path::to_path_buf),
        representation: a.vectorizer.representation().name().to_string(),
        algorithm: a.model.algorithm.algorithm().name().to_string(),
        feature_dim: a.vectorizer.dim(),
        labels: a.model.labels.clone(),
        train_rows: a.provenance.train_rows,
        test_rows: a.provenance.test_rows,
        index_rows: a.provenance.index_rows,
        accuracy: rep.and_then(|r| r.accuracy),
        macro_f1: rep.map(|r| r.macro_f1),
        train_seconds: seconds,
    }
}

/// Trains and writes the archive to `paths.archive`.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainReport> {
    cfg.validate()?;
    let path = cfg.archive_path()?.to_path_buf();
    let embeddings = load_configured_embeddings(cfg, cfg.features.representation.uses_embeddings())?;
    let corpus = load_corpus(cfg)?;
    let started = Instant::now();
    let archive = train_archive(cfg, &corpus, embeddings.as_ref())?;
    let seconds = started.elapsed().as_secs_f64();
    save_archive(&archive, &path)?;
    info!("train: wrote {}", path.display());
    Ok(train_report(&archive, Some(&path), seconds))
}

/// Representations × algorithms on one split; writes `benchmark.csv` and
/// `benchmark.json` to the output directory.
pub fn cmd_benchmark(cfg: &RunConfig) -> Result<BenchmarkTable> {
    cfg.validate()?;
    let dense = cfg.benchmark.representations.iter().any(|r| r.uses_embeddings());
    // Fail on a missing embeddings file before any training happens.
    let embeddings = load_configured_embeddings(cfg, dense)?;
    let corpus = load_corpus(cfg)?;
    let specs: Vec<VectorizerSpec> = cfg
        .benchmark
        .representations
        .iter()
        .map(|&r| VectorizerSpec {
            representation: r,
            lda: LdaParams {
                seed: cfg.seed.unwrap_or(cfg.features.lda.seed),
                ..cfg.features.lda.clone()
            },
            ..cfg.features.clone()
        })
        .collect();
    let algorithms: Vec<_> = cfg
        .benchmark
        .algorithms
        .iter()
        .map(|&a| {
            if a == cfg.model.algorithm() {
                cfg.model.clone()
            } else {
                a.default_config()
            }
        })
        .collect();
    let table = run_benchmark(
        &corpus,
        &specs,
        &algorithms,
        &cfg.benchmark_protocol()?,
        &cfg.resources()?,
        embeddings.as_ref(),
    )?;
    let dir = cfg.output_dir();
    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    write_output(&dir, "benchmark.csv", &csv)?;
    write_output(&dir, "benchmark.json", table.to_json()?.as_bytes())?;
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicWords {
    pub topic: usize,
    pub words: Vec<(String, f64)>,
    pub coherence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherencePoint {
    pub k: usize,
    pub coherence: f64,
    pub best: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicsReport {
    pub k: usize,
    pub documents: usize,
    pub vocabulary: usize,
    /// Mean per-token log-likelihood on the fitted corpus.
    pub log_likelihood: f64,
    pub perplexity: f64,
    pub topics: Vec<TopicWords>,
    pub curve: Vec<CoherencePoint>,
}

impl TopicsReport {
    /// `k,coherence,best`
    pub fn coherence_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["k", "coherence", "best"])?;
        for p in &self.curve {
            w.write_record([p.k.to_string(), format!("{:.6}", p.coherence), p.best.to_string()])?;
        }
        w.into_inner().map_err(|e| Error::io("<csv output>", e.into_error()))
    }
}

/// Fits LDA on the whole corpus, or sweeps K and reports the best K's
/// topics. Writes `topics.json` and `coherence.csv`.
pub fn cmd_topics(cfg: &RunConfig, sweep: Option<&[usize]>) -> Result<TopicsReport> {
    cfg.validate()?;
    let seed = cfg.seed()?;
    let corpus = load_corpus(cfg)?;
    let pre = cfg.resources()?.preprocessor(&cfg.features.prep)?;
    let tokens: Vec<Vec<String>> = corpus.records.iter().map(|r| pre.process(&r.abstract_text)).collect();
    let vocab = fit_vocabulary(&tokens, cfg.features.min_df, cfg.features.max_df)?;
    let counts: Vec<_> = tokens.iter().map(|t| count_vectorize(t, &vocab)).collect();
    let params = LdaParams {
        seed,
        ..cfg.features.lda.clone()
    };
    let top_n = cfg.topics.coherence_words;
    let sweep = sweep.unwrap_or(&cfg.topics.sweep);

    let (model, curve) = if sweep.is_empty() {
        let m = fit_lda(&counts, vocab.len(), &params)?;
        let c = umass_coherence(&m, &counts, top_n)?;
        (
            m,
            vec![CoherencePoint {
                k: params.k,
                coherence: c.mean,
                best: true,
            }],
        )
    } else {
        let s = sweep_topics(&counts, vocab.len(), sweep, &params, top_n)?;
        // Same seed rule as the sweep, so this is the model that was scored.
        let best = LdaParams {
            k: s.best_k,
            seed: params.seed.wrapping_add(s.best_k as u64),
            ..params.clone()
        };
        let m = fit_lda(&counts, vocab.len(), &best)?;
        let curve = s
            .points
            .iter()
            .map(|&(k, c)| CoherencePoint {
                k,
                coherence: c,
                best: k == s.best_k,
            })
            .collect();
        (m, curve)
    };
    let coherence = umass_coherence(&model, &counts, top_n)?;
    let perp = log_perplexity(&model, &counts)?;
    let topics = (0..model.k)
        .map(|t| {
            Ok(TopicWords {
                topic: t,
                words: topic_top_words(&model, t, cfg.topics.top_words)?
                    .into_iter()
                    .map(|(w, p)| (vocab.term(w).to_string(), p))
                    .collect(),
                coherence: coherence.per_topic[t],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = TopicsReport {
        k: model.k,
        documents: counts.len(),
        vocabulary: vocab.len(),
        log_likelihood: perp.log_likelihood,
        perplexity: perp.perplexity,
        topics,
        curve,
    };
    let dir = cfg.output_dir();
    write_output(&dir, "topics.json", &serde_json::to_vec_pretty(&report)?)?;
    write_output(&dir, "coherence.csv", &report.coherence_csv()?)?;
    Ok(report)
}

pub fn cmd_recommend(archive: &Path, query: &Query, k: usize, filters: &Filters) -> Result<RecommendationList> {
    let a = load_archive(archive)?;
    a.recommend(query, k, filters)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InspectReport {
    pub manifest: Manifest,
    pub representation: String,
    pub algorithm: serde_json::Value,
    pub labels: Vec<String>,
    pub dropped_labels: Vec<String>,
    pub threshold: f64,
    pub feature_dim: usize,
    pub vocabulary: Option<usize>,
    pub topics: Option<usize>,
    pub index_rows: usize,
    pub fingerprint: String,
    pub provenance: Provenance,
}

/// Loads (and so verifies) an archive and summarizes it.
pub fn cmd_inspect(archive: &Path) -> Result<InspectReport> {
    let manifest = read_archive_manifest(archive)?;
    let a = load_archive(archive)?;
    Ok(InspectReport {
        manifest,
        representation: a.vectorizer.representation().name().to_string(),
        algorithm: serde_json::to_value(&a.model.algorithm)?,
        labels: a.model.labels.clone(),
        dropped_labels: a.model.dropped.clone(),
        threshold: a.model.threshold,
        feature_dim: a.vectorizer.dim(),
        vocabulary: a.vectorizer.vocab.as_ref().map(|v| v.len()),
        topics: a.vectorizer.topics.as_ref().map(|t| t.k),
        index_rows: a.index.len(),
        fingerprint: a.vectorizer.fingerprint().0.clone(),
        provenance: a.provenance,
    })
}
