//! Run configuration, read from TOML.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifiers::{Algorithm, AlgorithmConfig, OvrOptions};
use crate::corpus::UnmappedPolicy;
use crate::error::{Error, Result};
use crate::evaluation::{BenchmarkProtocol, LabelMode, SmoteParams, DEFAULT_FOLDS};
use crate::pipeline::{PrepResources, Representation, ResourceText, VectorizerSpec};
use crate::recommender::DEFAULT_K;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub corpus: Option<PathBuf>,
    /// Defaults to the bundled prefix table.
    pub category_map: Option<PathBuf>,
    /// Defaults to the bundled list.
    pub stopwords: Option<PathBuf>,
    /// Defaults to the bundled lexicon.
    pub lexicon: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub archive: Option<PathBuf>,
    /// Where reports go; the current directory when unset.
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    /// Stop reading after this many usable records.
    pub limit: Option<usize>,
    /// Stratified subsample of this size after label normalization.
    pub sample: Option<usize>,
    pub unmapped: UnmappedPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub test_fraction: f64,
    pub folds: usize,
    pub stratify: bool,
    pub label_mode: LabelMode,
    pub threshold: Option<f64>,
    pub smote: Option<SmoteParams>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            test_fraction: 0.2,
            folds: DEFAULT_FOLDS,
            stratify: true,
            label_mode: LabelMode::Single,
            threshold: None,
            smote: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub enabled: bool,
    /// Values per hyperparameter; empty means the algorithm's default grid.
    pub params: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub representations: Vec<Representation>,
    pub algorithms: Vec<Algorithm>,
    pub grid_search: bool,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            representations: vec![Representation::Count, Representation::Tfidf],
            algorithms: Algorithm::ALL.to_vec(),
            grid_search: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopicsConfig {
    /// K values to compare; empty fits `features.lda.k` only.
    pub sweep: Vec<usize>,
    pub top_words: usize,
    /// Words per topic entering the coherence score.
    pub coherence_words: usize,
}

impl Default for TopicsConfig {
    fn default() -> Self {
        TopicsConfig {
            sweep: Vec::new(),
            top_words: 20,
            coherence_words: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecommendConfig {
    pub k: usize,
}

impl Default for RecommendConfig {
    fn default() -> Self {
        RecommendConfig { k: DEFAULT_K }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Required; every random stream derives from it.
    pub seed: Option<u64>,
    pub paths: PathsConfig,
    pub ingest: IngestConfig,
    pub features: VectorizerSpec,
    pub model: AlgorithmConfig,
    pub grid: GridConfig,
    pub protocol: ProtocolConfig,
    pub benchmark: BenchmarkConfig,
    pub topics: TopicsConfig,
    pub recommend: RecommendConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            paths: PathsConfig::default(),
            ingest: IngestConfig::default(),
            features: VectorizerSpec::default(),
            model: Algorithm::Logreg.default_config(),
            grid: GridConfig::default(),
            protocol: ProtocolConfig::default(),
            benchmark: BenchmarkConfig::default(),
            topics: TopicsConfig::default(),
            recommend: RecommendConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Reads a config file. Relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::parse(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            e => e,
        })?;
        if let Some(dir) = path.parent() {
            cfg.paths.rebase(dir);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::InvalidConfig("seed is required (set `seed` or pass --seed)".into()))
    }

    /// Copies the global seed into every seeded component.
    pub fn with_seed(mut self, seed: u64) -> RunConfig {
        self.seed = Some(seed);
        self.features.lda.seed = seed;
        self.model = self.model.with_seed(seed);
        if let Some(s) = &mut self.protocol.smote {
            s.seed = seed;
        }
        self
    }

    /// Checks values and that every referenced input file exists.
    pub fn validate(&self) -> Result<()> {
        self.seed()?;
        let p = &self.protocol;
        if !(p.test_fraction > 0.0 && p.test_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!("protocol.test_fraction {} outside (0, 1)", p.test_fraction)));
        }
        if p.folds < 2 {
            return Err(Error::InvalidConfig("protocol.folds must be at least 2".into()));
        }
        if self.recommend.k == 0 {
            return Err(Error::InvalidConfig("recommend.k must be at least 1".into()));
        }
        if self.topics.top_words == 0 || self.topics.coherence_words < 2 {
            return Err(Error::InvalidConfig("topics.top_words >= 1 and topics.coherence_words >= 2 required".into()));
        }
        if self.benchmark.representations.is_empty() || self.benchmark.algorithms.is_empty() {
            return Err(Error::InvalidConfig("benchmark needs representations and algorithms".into()));
        }
        self.features.prep.validate()?;
        let inputs = [
            ("paths.corpus", &self.paths.corpus),
            ("paths.category_map", &self.paths.category_map),
            ("paths.stopwords", &self.paths.stopwords),
            ("paths.lexicon", &self.paths.lexicon),
            ("paths.embeddings", &self.paths.embeddings),
        ];
        for (key, path) in inputs {
            if let Some(path) = path {
                if !path.is_file() {
                    return Err(Error::InvalidConfig(format!("{key}: {} does not exist", path.display())));
                }
            }
        }
        Ok(())
    }

    pub fn corpus_path(&self) -> Result<&Path> {
        self.paths
            .corpus
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig("paths.corpus is not set".into()))
    }

    pub fn archive_path(&self) -> Result<&Path> {
        self.paths
            .archive
            .as_deref()
            .ok_or_else(|| Error::InvalidConfig("paths.archive is not set".into()))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.paths.output_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    /// Preprocessing resources with file contents inlined, so archives are
    /// self-contained.
    pub fn resources(&self) -> Result<PrepResources> {
        let read = |p: &Option<PathBuf>| -> Result<ResourceText> {
            match p {
                None => Ok(ResourceText::Builtin),
                Some(p) => std::fs::read_to_string(p)
                    .map(ResourceText::Inline)
                    .map_err(|e| Error::io(p, e)),
            }
        };
        Ok(PrepResources {
            stopwords: read(&self.paths.stopwords)?,
            lexicon: read(&self.paths.lexicon)?,
        })
    }

    pub fn ovr_options(&self) -> OvrOptions {
        OvrOptions {
            threshold: self.protocol.threshold,
            smote: self.protocol.smote.clone(),
        }
    }

    pub fn benchmark_protocol(&self) -> Result<BenchmarkProtocol> {
        Ok(BenchmarkProtocol {
            test_fraction: self.protocol.test_fraction,
            seed: self.seed()?,
            stratify: self.protocol.stratify,
            label_mode: self.protocol.label_mode,
            grid_search: self.benchmark.grid_search,
            folds: self.protocol.folds,
            ovr: self.ovr_options(),
        })
    }

    /// Hex sha256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

impl PathsConfig {
    fn rebase(&mut self, dir: &Path) {
        for p in [
            &mut self.corpus,
            &mut self.category_map,
            &mut self.stopwords,
            &mut self.lexicon,
            &mut self.embeddings,
            &mut self.archive,
            &mut self.output_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_empty() {
        let c = RunConfig::parse("seed = 3").unwrap();
        assert_eq!(c.seed, Some(3));
        assert_eq!(c.recommend.k, 20);
        assert_eq!(c.features.lda.k, 20);
        assert_eq!(c.model.algorithm(), Algorithm::Logreg);
    }

    #[test]
    fn full_round_trip() {
        let text = r#"
seed = 7

[paths]
archive = "model.dsa"

[features]
representation = "tfidf+topics"
min_df = 2

[features.lda]
k = 5

[model]
algorithm = "random_forest"
n_trees = 10

[grid]
enabled = true
params = { n_trees = [5.0, 10.0] }

[protocol]
test_fraction = 0.25
label_mode = "multi"

[benchmark]
representations = ["count", "tfidf"]
algorithms = ["logreg", "mnb"]

[topics]
sweep = [2, 5, 10]
"#;
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.features.representation, Representation::TfidfTopics);
        assert_eq!(c.model.algorithm(), Algorithm::RandomForest);
        assert_eq!(c.protocol.label_mode, LabelMode::Multi);
        assert_eq!(c.benchmark.algorithms, vec![Algorithm::Logreg, Algorithm::Mnb]);
        let again = RunConfig::parse(&c.to_toml().unwrap()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.hash(), c.hash());
    }

    #[test]
    fn rejects_unknown_keys_and_missing_seed() {
        assert!(RunConfig::parse("sed = 1").is_err());
        assert!(RunConfig::parse("[model]\nalgorithm = \"logreg\"\nlearning_rate = 1.0").is_err());
        assert!(RunConfig::parse("").unwrap().validate().is_err());
    }

    #[test]
    fn missing_input_file_fails_validation() {
        let mut c = RunConfig::parse("seed = 1").unwrap();
        c.paths.corpus = Some(PathBuf::from("/nonexistent/corpus.jsonl"));
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn seed_propagates() {
        let c = RunConfig::default().with_seed(42);
        assert_eq!(c.features.lda.seed, 42);
        match c.model {
            AlgorithmConfig::Logreg(p) => assert_eq!(p.seed, 42),
            _ => unreachable!(),
        }
    }
}
