//! A fitted text-to-vector pipeline: preprocessing, vocabulary, idf, dense
//! embedding join and optional topic features, identified by a fingerprint.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::ArticleRecord;
use crate::error::{Error, Result};
use crate::features::{
    append_topic_features, count_vectorize, fit_idf, fit_vocabulary, tfidf_transform, EmbeddingSet, Fingerprint, IdfWeights,
    SparseVector, Vocabulary,
};
use crate::textprep::{Lexicon, PrepConfig, Preprocessor, Stoplist};
use crate::topics::{fit_lda, infer_theta, LdaParams, TopicModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Representation {
    #[serde(rename = "count")]
    Count,
    #[serde(rename = "tfidf")]
    Tfidf,
    #[serde(rename = "dense")]
    Dense,
    #[serde(rename = "count+topics")]
    CountTopics,
    #[serde(rename = "tfidf+topics")]
    TfidfTopics,
    #[serde(rename = "dense+topics")]
    DenseTopics,
}

impl Representation {
    pub const ALL: [Representation; 6] = [
        Representation::Count,
        Representation::Tfidf,
        Representation::Dense,
        Representation::CountTopics,
        Representation::TfidfTopics,
        Representation::DenseTopics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Representation::Count => "count",
            Representation::Tfidf => "tfidf",
            Representation::Dense => "dense",
            Representation::CountTopics => "count+topics",
            Representation::TfidfTopics => "tfidf+topics",
            Representation::DenseTopics => "dense+topics",
        }
    }

    pub fn uses_topics(self) -> bool {
        matches!(self, Representation::CountTopics | Representation::TfidfTopics | Representation::DenseTopics)
    }

    pub fn uses_embeddings(self) -> bool {
        matches!(self, Representation::Dense | Representation::DenseTopics)
    }

    pub fn uses_idf(self) -> bool {
        matches!(self, Representation::Tfidf | Representation::TfidfTopics)
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Representation::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown representation {s:?}")))
    }
}

/// Stopword list or lexicon: the bundled copy or inline file contents.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceText {
    #[default]
    Builtin,
    Inline(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrepResources {
    pub stopwords: ResourceText,
    pub lexicon: ResourceText,
}

impl PrepResources {
    pub fn preprocessor(&self, config: &PrepConfig) -> Result<Preprocessor> {
        let stoplist = match &self.stopwords {
            ResourceText::Builtin => Stoplist::builtin(),
            ResourceText::Inline(text) => Arc::new(Stoplist::parse(text)),
        };
        let lexicon = match &self.lexicon {
            ResourceText::Builtin => Lexicon::builtin(),
            ResourceText::Inline(text) => Arc::new(Lexicon::parse(text, "lexicon")?),
        };
        Preprocessor::new(config.clone(), Some(stoplist), Some(lexicon))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VectorizerSpec {
    pub representation: Representation,
    pub prep: PrepConfig,
    pub min_df: usize,
    pub max_df: f64,
    pub lda: LdaParams,
    /// Gibbs sweeps when inferring topic mixtures for unseen documents.
    pub infer_iterations: usize,
}

impl Default for VectorizerSpec {
    fn default() -> Self {
        VectorizerSpec {
            representation: Representation::Tfidf,
            prep: PrepConfig::default(),
            min_df: 5,
            max_df: 0.5,
            lda: LdaParams::default(),
            infer_iterations: 50,
        }
    }
}

/// Topic-word distribution kept for folding in unseen documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicFeatures {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub vocab_size: usize,
    pub seed: u64,
    pub iterations: usize,
    /// Row-major K×V.
    pub phi: Vec<f64>,
}

impl TopicFeatures {
    fn from_model(m: &TopicModel) -> Self {
        TopicFeatures {
            k: m.k,
            alpha: m.alpha,
            beta: m.beta,
            vocab_size: m.vocab_size,
            seed: m.seed,
            iterations: m.iterations,
            phi: m.phi.clone(),
        }
    }

    /// A model view sufficient for [`infer_theta`].
    pub fn as_model(&self) -> TopicModel {
        TopicModel {
            k: self.k,
            alpha: self.alpha,
            beta: self.beta,
            vocab_size: self.vocab_size,
            seed: self.seed,
            iterations: self.iterations,
            phi: self.phi.clone(),
            theta: Vec::new(),
            topic_word: Vec::new(),
            doc_topic: Vec::new(),
            topic_totals: Vec::new(),
            doc_lengths: Vec::new(),
            skipped_docs: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabularyParts {
    pub terms: Vec<String>,
    pub df: Vec<u32>,
    pub n_docs: usize,
    pub min_df: usize,
    pub max_df: f64,
}

#[derive(Debug, Clone)]
pub struct Vectorizer {
    pub spec: VectorizerSpec,
    pub resources: PrepResources,
    preprocessor: Preprocessor,
    pub vocab: Option<Vocabulary>,
    pub idf: Option<IdfWeights>,
    pub embedding_dim: Option<usize>,
    pub topics: Option<TopicFeatures>,
    topic_model: Option<TopicModel>,
    fingerprint: Fingerprint,
}

/// Vectors for the rows that could be represented; `kept[i]` is the input
/// position of `rows[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRows {
    pub rows: Vec<SparseVector>,
    pub kept: Vec<usize>,
}

impl Vectorizer {
    /// Fits on the training records and returns their feature rows. Topic
    /// mixtures of training rows come from the fitted sampler state.
    pub fn fit(
        spec: VectorizerSpec,
        resources: PrepResources,
        train: &[ArticleRecord],
        embeddings: Option<&EmbeddingSet>,
    ) -> Result<(Vectorizer, FeatureRows, Option<TopicModel>)> {
        spec.prep.validate()?;
        let rep = spec.representation;
        if rep.uses_embeddings() && embeddings.is_none() {
            return Err(Error::MissingResource("embeddings file for a dense representation"));
        }
        let preprocessor = resources.preprocessor(&spec.prep)?;
        let needs_lexical = !rep.uses_embeddings() || rep.uses_topics();
        let (vocab, counts) = if needs_lexical {
            let tokens: Vec<Vec<String>> = train.iter().map(|r| preprocessor.process(&r.abstract_text)).collect();
            let vocab = fit_vocabulary(&tokens, spec.min_df, spec.max_df)?;
            let counts: Vec<SparseVector> = tokens.iter().map(|t| count_vectorize(t, &vocab)).collect();
            (Some(vocab), counts)
        } else {
            (None, Vec::new())
        };
        let idf = match (&vocab, rep.uses_idf()) {
            (Some(v), true) => Some(fit_idf(&counts, v)?),
            _ => None,
        };
        let topic_model = if rep.uses_topics() {
            let v = vocab.as_ref().expect("topics need a vocabulary");
            Some(fit_lda(&counts, v.len(), &spec.lda)?)
        } else {
            None
        };
        let mut vz = Vectorizer {
            spec,
            resources,
            preprocessor,
            embedding_dim: embeddings.map(|e| e.dim).filter(|_| rep.uses_embeddings()),
            topics: topic_model.as_ref().map(TopicFeatures::from_model),
            topic_model: None,
            vocab,
            idf,
            fingerprint: Fingerprint(String::new()),
        };
        vz.topic_model = vz.topics.as_ref().map(TopicFeatures::as_model);
        vz.fingerprint = vz.compute_fingerprint();

        let mut rows = Vec::with_capacity(train.len());
        let mut kept = Vec::with_capacity(train.len());
        for (i, rec) in train.iter().enumerate() {
            let theta = topic_model.as_ref().map(|m| m.theta_row(i));
            let counts_i = counts.get(i);
            if let Some(v) = vz.assemble(rec, counts_i, theta, embeddings)? {
                rows.push(v);
                kept.push(i);
            }
        }
        Ok((vz, FeatureRows { rows, kept }, topic_model))
    }

    /// Rebuilds a fitted vectorizer from persisted parts.
    pub fn from_parts(
        spec: VectorizerSpec,
        resources: PrepResources,
        vocab: Option<VocabularyParts>,
        idf: Option<IdfWeights>,
        embedding_dim: Option<usize>,
        topics: Option<TopicFeatures>,
    ) -> Result<Vectorizer> {
        let preprocessor = resources.preprocessor(&spec.prep)?;
        let vocab = vocab
            .map(|p| Vocabulary::from_parts(p.terms, p.df, p.n_docs, p.min_df, p.max_df))
            .transpose()?;
        let mut vz = Vectorizer {
            spec,
            resources,
            preprocessor,
            vocab,
            idf,
            embedding_dim,
            topic_model: topics.as_ref().map(TopicFeatures::as_model),
            topics,
            fingerprint: Fingerprint(String::new()),
        };
        vz.fingerprint = vz.compute_fingerprint();
        Ok(vz)
    }

    pub fn vocabulary_parts(&self) -> Option<VocabularyParts> {
        self.vocab.as_ref().map(|v| {
            let (min_df, max_df) = v.thresholds();
            VocabularyParts {
                terms: v.terms().to_vec(),
                df: v.df().to_vec(),
                n_docs: v.n_docs(),
                min_df,
                max_df,
            }
        })
    }

    pub fn representation(&self) -> Representation {
        self.spec.representation
    }

    pub fn fingerprint(&self) -> &Fingerprint {
        &self.fingerprint
    }

    pub fn preprocessor(&self) -> &Preprocessor {
        &self.preprocessor
    }

    /// Output dimension: lexical or embedding block plus K topic columns.
    pub fn dim(&self) -> usize {
        let base = if self.spec.representation.uses_embeddings() {
            self.embedding_dim.unwrap_or(0)
        } else {
            self.vocab.as_ref().map_or(0, |v| v.len())
        };
        base + self.topics.as_ref().map_or(0, |t| t.k)
    }

    fn compute_fingerprint(&self) -> Fingerprint {
        let mut h = Sha256::new();
        h.update(self.spec.representation.name().as_bytes());
        h.update(serde_json::to_vec(&self.spec.prep).expect("prep config serializes"));
        match &self.resources.stopwords {
            ResourceText::Builtin => h.update(b"stop:builtin"),
            ResourceText::Inline(t) => h.update(Sha256::digest(t.as_bytes())),
        }
        match &self.resources.lexicon {
            ResourceText::Builtin => h.update(b"lex:builtin"),
            ResourceText::Inline(t) => h.update(Sha256::digest(t.as_bytes())),
        }
        if let Some(v) = &self.vocab {
            h.update((v.len() as u64).to_le_bytes());
            for t in v.terms() {
                h.update(t.as_bytes());
                h.update([0]);
            }
        }
        if let Some(idf) = &self.idf {
            for x in &idf.idf {
                h.update(x.to_le_bytes());
            }
        }
        if let Some(d) = self.embedding_dim {
            h.update(b"dense");
            h.update((d as u64).to_le_bytes());
        }
        if let Some(t) = &self.topics {
            h.update((t.k as u64).to_le_bytes());
            h.update(t.alpha.to_le_bytes());
            for x in &t.phi {
                h.update(x.to_le_bytes());
            }
        }
        let digest = h.finalize();
        Fingerprint(format!("{}:{}", self.spec.representation.name(), hex::encode(&digest[..16])))
    }

    fn lexical_counts(&self, text: &str) -> Option<SparseVector> {
        self.vocab.as_ref().map(|v| count_vectorize(&self.preprocessor.process(text), v))
    }

    fn assemble(
        &self,
        rec: &ArticleRecord,
        counts: Option<&SparseVector>,
        theta: Option<&[f64]>,
        embeddings: Option<&EmbeddingSet>,
    ) -> Result<Option<SparseVector>> {
        let rep = self.spec.representation;
        let base = if rep.uses_embeddings() {
            let set = embeddings.ok_or(Error::MissingResource("embeddings file for a dense representation"))?;
            if set.dim != self.embedding_dim.unwrap_or(0) {
                return Err(Error::DimensionMismatch {
                    expected: self.embedding_dim.unwrap_or(0),
                    found: set.dim,
                });
            }
            match set.get(&rec.id) {
                Some(v) => v.to_sparse(),
                None => return Ok(None),
            }
        } else {
            let c = counts.expect("lexical representation has counts");
            match &self.idf {
                Some(idf) => tfidf_transform(c, idf)?,
                None => c.clone(),
            }
        };
        Ok(Some(match theta {
            Some(t) => append_topic_features(&base, t)?,
            None => base,
        }))
    }

    fn theta_for(&self, counts: Option<&SparseVector>) -> Result<Option<Vec<f64>>> {
        match (&self.topic_model, counts) {
            (Some(m), Some(c)) => Ok(Some(infer_theta(m, c, self.spec.infer_iterations, self.spec.lda.seed)?)),
            _ => Ok(None),
        }
    }

    /// Vector for a record outside the training set; `None` when a dense
    /// representation has no embedding for its id.
    pub fn transform_record(&self, rec: &ArticleRecord, embeddings: Option<&EmbeddingSet>) -> Result<Option<SparseVector>> {
        let counts = self.lexical_counts(&rec.abstract_text);
        let theta = self.theta_for(counts.as_ref())?;
        self.assemble(rec, counts.as_ref(), theta.as_deref(), embeddings)
    }

    pub fn transform_records(&self, recs: &[ArticleRecord], embeddings: Option<&EmbeddingSet>) -> Result<FeatureRows> {
        let mut rows = Vec::with_capacity(recs.len());
        let mut kept = Vec::with_capacity(recs.len());
        for (i, r) in recs.iter().enumerate() {
            if let Some(v) = self.transform_record(r, embeddings)? {
                rows.push(v);
                kept.push(i);
            }
        }
        Ok(FeatureRows { rows, kept })
    }

    /// Free text through the same pipeline. Dense representations cannot
    /// encode text in-process.
    pub fn transform_text(&self, text: &str) -> Result<SparseVector> {
        if self.spec.representation.uses_embeddings() {
            return Err(Error::InvalidParameter(format!(
                "the {} representation reads precomputed embeddings and cannot vectorize free text",
                self.spec.representation
            )));
        }
        let counts = self.lexical_counts(text).expect("lexical representation has a vocabulary");
        let theta = self.theta_for(Some(&counts))?;
        let base = match &self.idf {
            Some(idf) => tfidf_transform(&counts, idf)?,
            None => counts,
        };
        Ok(match theta {
            Some(t) => append_topic_features(&base, &t)?,
            None => base,
        })
    }

    /// Lexical block only (no topic columns); empty when nothing is in
    /// vocabulary.
    pub fn lexical_vector(&self, text: &str) -> Option<SparseVector> {
        self.lexical_counts(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, text: &str) -> ArticleRecord {
        ArticleRecord {
            id: id.into(),
            title: String::new(),
            abstract_text: text.into(),
            categories: vec!["cs.LG".into()],
            date: None,
            authors: None,
            labels: vec!["Computer Science".into()],
            primary: Some("Computer Science".into()),
        }
    }

    fn corpus() -> Vec<ArticleRecord> {
        vec![
            rec("1", "neural networks learn deep representations of images"),
            rec("2", "galaxies and stars emit radiation across the spectrum"),
            rec("3", "deep neural models classify images and text"),
            rec("4", "stars form in galaxies from cold gas clouds"),
            rec("5", "text classification with neural networks"),
            rec("6", "radiation from stars heats interstellar gas"),
        ]
    }

    fn spec(rep: Representation) -> VectorizerSpec {
        VectorizerSpec {
            representation: rep,
            min_df: 1,
            max_df: 1.0,
            lda: LdaParams { k: 2, iterations: 50, ..Default::default() },
            infer_iterations: 20,
            ..Default::default()
        }
    }

    #[test]
    fn representation_names_round_trip() {
        for r in Representation::ALL {
            assert_eq!(r.name().parse::<Representation>().unwrap(), r);
            let json = serde_json::to_string(&r).unwrap();
            assert_eq!(json, format!("\"{}\"", r.name()));
        }
    }

    #[test]
    fn tfidf_rows_match_transform_of_training_text() {
        let c = corpus();
        let (vz, rows, _) = Vectorizer::fit(spec(Representation::Tfidf), PrepResources::default(), &c, None).unwrap();
        assert_eq!(rows.kept, (0..6).collect::<Vec<_>>());
        for (r, v) in c.iter().zip(&rows.rows) {
            assert_eq!(&vz.transform_text(&r.abstract_text).unwrap(), v);
            assert!((v.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn topic_block_is_trailing_k() {
        let c = corpus();
        let (plain, prow, _) = Vectorizer::fit(spec(Representation::Tfidf), PrepResources::default(), &c, None).unwrap();
        let (aug, arow, _) = Vectorizer::fit(spec(Representation::TfidfTopics), PrepResources::default(), &c, None).unwrap();
        assert_eq!(aug.dim(), plain.dim() + 2);
        for (p, a) in prow.rows.iter().zip(&arow.rows) {
            let (pd, ad) = (p.to_dense(), a.to_dense());
            assert_eq!(&ad[..pd.len()], &pd[..]);
            let s: f64 = ad[pd.len()..].iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
        assert_ne!(plain.fingerprint(), aug.fingerprint());
    }

    #[test]
    fn dense_requires_embeddings_and_skips_missing_ids() {
        let c = corpus();
        assert!(matches!(
            Vectorizer::fit(spec(Representation::Dense), PrepResources::default(), &c, None),
            Err(Error::MissingResource(_))
        ));
        let mut e = EmbeddingSet::new(3);
        e.insert("1".into(), crate::features::DenseVector(vec![0.1, 0.2, 0.3])).unwrap();
        e.insert("4".into(), crate::features::DenseVector(vec![0.3, -0.2, 0.1])).unwrap();
        let (vz, rows, _) = Vectorizer::fit(spec(Representation::Dense), PrepResources::default(), &c, Some(&e)).unwrap();
        assert_eq!(rows.kept, vec![0, 3]);
        assert_eq!(vz.dim(), 3);
        assert!(vz.transform_text("stars").is_err());
    }

    #[test]
    fn rebuilt_from_parts_is_identical() {
        let c = corpus();
        let (vz, _, _) = Vectorizer::fit(spec(Representation::CountTopics), PrepResources::default(), &c, None).unwrap();
        let back = Vectorizer::from_parts(
            vz.spec.clone(),
            vz.resources.clone(),
            vz.vocabulary_parts(),
            vz.idf.clone(),
            vz.embedding_dim,
            vz.topics.clone(),
        )
        .unwrap();
        assert_eq!(back.fingerprint(), vz.fingerprint());
        let q = "deep stars in neural galaxies";
        assert_eq!(back.transform_text(q).unwrap(), vz.transform_text(q).unwrap());
    }
}
