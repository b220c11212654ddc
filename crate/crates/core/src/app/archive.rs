//! Single-file model archive.
//!
//! Layout: a 16-byte magic line, a little-endian u64 manifest length, the
//! JSON manifest, then each section in manifest order as a little-endian
//! u64 length followed by its bytes. Numeric arrays are raw little-endian
//! (f64, u32, u64); structured parts are JSON with round-trip float
//! formatting. Every section carries a sha256 in the manifest.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::app::config::RunConfig;
use crate::classifiers::{MultiLabelModel, Prediction};
use crate::corpus::CorpusStats;
use crate::error::{Error, Result};
use crate::evaluation::EvalReport;
use crate::features::{Fingerprint, IdfVariant, IdfWeights, SparseVector};
use crate::pipeline::{PrepResources, TopicFeatures, Vectorizer, VectorizerSpec, VocabularyParts};
use crate::recommender::{ArticleMeta, Filters, RecommendationList, SimilarityIndex};

pub const SCHEMA_VERSION: u32 = 1;
const MAGIC: &[u8; 16] = b"DOCSIFT-ARCHIVE\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    Json,
    F64Le,
    U32Le,
    U64Le,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionInfo {
    pub name: String,
    pub kind: SectionKind,
    pub length: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub created_at: String,
    pub sections: Vec<SectionInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub best_params: Vec<(String, f64)>,
    pub best_score: Option<f64>,
    pub cells: usize,
    pub failed_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub created_at: String,
    pub tool_version: String,
    pub corpus: CorpusStats,
    pub train_rows: usize,
    pub test_rows: usize,
    pub excluded_records: usize,
    pub index_rows: usize,
    pub index_rejected_zero: usize,
    pub test_report: Option<EvalReport>,
    pub grid: Option<GridSummary>,
}

/// Everything needed to classify and recommend without the corpus.
#[derive(Debug, Clone)]
pub struct ModelArchive {
    pub config: RunConfig,
    pub provenance: Provenance,
    pub vectorizer: Vectorizer,
    pub model: MultiLabelModel,
    pub index: SimilarityIndex,
}

/// What to rank against.
#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    Text(String),
    Id(String),
    Profile(Vec<String>),
}

impl ModelArchive {
    /// Classifies free text with the archived pipeline.
    pub fn classify_text(&self, text: &str) -> Result<(Prediction, Vec<String>)> {
        let x = self.vectorizer.transform_text(text)?;
        let p = self.model.predict(&x, self.vectorizer.fingerprint())?;
        let names = self.model.label_names(&p);
        Ok((p, names))
    }

    pub fn recommend(&self, query: &Query, k: usize, filters: &Filters) -> Result<RecommendationList> {
        match query {
            Query::Text(t) => self.index.query_by_text(t, &self.vectorizer, k, &HashSet::new(), filters),
            Query::Id(id) => self.index.query_by_id(id, k, filters),
            Query::Profile(ids) => {
                let (list, missing) = self.index.recommend_for_profile(ids, k, filters)?;
                if missing > 0 {
                    log::warn!("{missing} history id(s) not in the index were skipped");
                }
                Ok(list)
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct VectorizerHeader {
    spec: VectorizerSpec,
    resources: PrepResources,
    embedding_dim: Option<usize>,
    idf_variant: Option<IdfVariant>,
    vocab: Option<VocabHeader>,
    topics: Option<TopicHeader>,
    fingerprint: Fingerprint,
}

#[derive(Serialize, Deserialize)]
struct VocabHeader {
    n_docs: usize,
    min_df: usize,
    max_df: f64,
}

#[derive(Serialize, Deserialize)]
struct TopicHeader {
    k: usize,
    alpha: f64,
    beta: f64,
    vocab_size: usize,
    seed: u64,
    iterations: usize,
}

#[derive(Serialize, Deserialize)]
struct IndexHeader {
    ids: Vec<String>,
    meta: Vec<ArticleMeta>,
    dim: usize,
    fingerprint: Fingerprint,
}

struct Section {
    name: &'static str,
    kind: SectionKind,
    bytes: Vec<u8>,
}

fn json_section<T: Serialize>(name: &'static str, value: &T) -> Result<Section> {
    Ok(Section {
        name,
        kind: SectionKind::Json,
        bytes: serde_json::to_vec(value)?,
    })
}

fn f64_section(name: &'static str, values: &[f64]) -> Section {
    Section {
        name,
        kind: SectionKind::F64Le,
        bytes: values.iter().flat_map(|v| v.to_le_bytes()).collect(),
    }
}

fn u32_section(name: &'static str, values: impl Iterator<Item = u32>) -> Section {
    Section {
        name,
        kind: SectionKind::U32Le,
        bytes: values.flat_map(|v| v.to_le_bytes()).collect(),
    }
}

fn u64_section(name: &'static str, values: impl Iterator<Item = u64>) -> Section {
    Section {
        name,
        kind: SectionKind::U64Le,
        bytes: values.flat_map(|v| v.to_le_bytes()).collect(),
    }
}

fn sections(a: &ModelArchive) -> Result<Vec<Section>> {
    let vz = &a.vectorizer;
    let vocab = vz.vocabulary_parts();
    let header = VectorizerHeader {
        spec: vz.spec.clone(),
        resources: vz.resources.clone(),
        embedding_dim: vz.embedding_dim,
        idf_variant: vz.idf.as_ref().map(|i| i.variant),
        vocab: vocab.as_ref().map(|v| VocabHeader {
            n_docs: v.n_docs,
            min_df: v.min_df,
            max_df: v.max_df,
        }),
        topics: vz.topics.as_ref().map(|t| TopicHeader {
            k: t.k,
            alpha: t.alpha,
            beta: t.beta,
            vocab_size: t.vocab_size,
            seed: t.seed,
            iterations: t.iterations,
        }),
        fingerprint: vz.fingerprint().clone(),
    };
    let mut out = vec![
        json_section("config", &a.config)?,
        json_section("provenance", &a.provenance)?,
        json_section("vectorizer", &header)?,
    ];
    if let Some(v) = &vocab {
        out.push(json_section("vocab.terms", &v.terms)?);
        out.push(u32_section("vocab.df", v.df.iter().copied()));
    }
    if let Some(idf) = &vz.idf {
        out.push(f64_section("idf", &idf.idf));
    }
    if let Some(t) = &vz.topics {
        out.push(f64_section("topics.phi", &t.phi));
    }
    out.push(json_section("model", &a.model)?);

    let ix = &a.index;
    out.push(json_section(
        "index.header",
        &IndexHeader {
            ids: ix.ids().to_vec(),
            meta: ix.meta().to_vec(),
            dim: ix.dim(),
            fingerprint: ix.fingerprint().clone(),
        },
    )?);
    let mut indptr = Vec::with_capacity(ix.len() + 1);
    indptr.push(0u64);
    for v in ix.vectors() {
        indptr.push(indptr.last().unwrap() + v.nnz() as u64);
    }
    out.push(u64_section("index.indptr", indptr.into_iter()));
    out.push(u32_section("index.indices", ix.vectors().iter().flat_map(|v| v.indices().iter().copied())));
    let values: Vec<f64> = ix.vectors().iter().flat_map(|v| v.values().iter().copied()).collect();
    out.push(f64_section("index.values", &values));
    Ok(out)
}

/// Writes to a temporary file next to `path` and renames it into place, so
/// a failed save never leaves a partial archive.
pub fn save_archive(archive: &ModelArchive, path: &Path) -> Result<Manifest> {
    let sections = sections(archive)?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        config_hash: archive.provenance.config_hash.clone(),
        created_at: archive.provenance.created_at.clone(),
        sections: sections
            .iter()
            .map(|s| SectionInfo {
                name: s.name.to_string(),
                kind: s.kind,
                length: s.bytes.len() as u64,
                sha256: hex::encode(Sha256::digest(&s.bytes)),
            })
            .collect(),
    };
    let manifest_bytes = serde_json::to_vec(&manifest)?;

    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e| Error::io(path, e);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        w.write_all(MAGIC).map_err(io)?;
        w.write_all(&(manifest_bytes.len() as u64).to_le_bytes()).map_err(io)?;
        w.write_all(&manifest_bytes).map_err(io)?;
        for s in &sections {
            w.write_all(&(s.bytes.len() as u64).to_le_bytes()).map_err(io)?;
            w.write_all(&s.bytes).map_err(io)?;
        }
        w.flush().map_err(io)?;
    }
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(manifest)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let out = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(out)
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }
}

fn read_manifest(bytes: &[u8]) -> Result<(Manifest, usize)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(MAGIC.len()) != Some(&MAGIC[..]) {
        return Err(Error::Archive("not a docsift archive (bad magic)".into()));
    }
    let len = r.u64().ok_or_else(|| Error::Checksum("manifest".into()))? as usize;
    let raw = r.take(len).ok_or_else(|| Error::Checksum("manifest".into()))?;
    // Read the version first so a newer layout fails with a version error
    // rather than a parse error.
    #[derive(Deserialize)]
    struct Versioned {
        schema_version: u32,
    }
    let v: Versioned = serde_json::from_slice(raw).map_err(|e| Error::Archive(format!("bad manifest: {e}")))?;
    if v.schema_version > SCHEMA_VERSION || v.schema_version == 0 {
        return Err(Error::Version {
            found: v.schema_version,
            supported: SCHEMA_VERSION,
        });
    }
    let m: Manifest = serde_json::from_slice(raw).map_err(|e| Error::Archive(format!("bad manifest: {e}")))?;
    Ok((m, r.pos))
}

/// Reads only the manifest.
pub fn read_archive_manifest(path: &Path) -> Result<Manifest> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(read_manifest(&bytes)?.0)
}

struct Loaded<'a> {
    manifest: &'a Manifest,
    data: Vec<&'a [u8]>,
}

impl<'a> Loaded<'a> {
    fn get(&self, name: &str, kind: SectionKind) -> Result<Option<&'a [u8]>> {
        match self.manifest.sections.iter().position(|s| s.name == name) {
            None => Ok(None),
            Some(i) if self.manifest.sections[i].kind != kind => {
                Err(Error::Archive(format!("section {name} has kind {:?}", self.manifest.sections[i].kind)))
            }
            Some(i) => Ok(Some(self.data[i])),
        }
    }

    fn need(&self, name: &str, kind: SectionKind) -> Result<&'a [u8]> {
        self.get(name, kind)?
            .ok_or_else(|| Error::Archive(format!("missing section {name}")))
    }

    fn json<T: DeserializeOwned>(&self, name: &str) -> Result<T> {
        serde_json::from_slice(self.need(name, SectionKind::Json)?)
            .map_err(|e| Error::Archive(format!("section {name}: {e}")))
    }

    fn f64s(&self, name: &str) -> Result<Option<Vec<f64>>> {
        Ok(self.get(name, SectionKind::F64Le)?.map(|b| {
            b.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect()
        }))
    }

    fn u32s(&self, name: &str) -> Result<Option<Vec<u32>>> {
        Ok(self.get(name, SectionKind::U32Le)?.map(|b| {
            b.chunks_exact(4)
                .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
                .collect()
        }))
    }

    fn u64s(&self, name: &str) -> Result<Option<Vec<u64>>> {
        Ok(self.get(name, SectionKind::U64Le)?.map(|b| {
            b.chunks_exact(8)
                .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
                .collect()
        }))
    }
}

/// Loads and verifies an archive: schema version, per-section checksums,
/// and that the rebuilt vectorizer reproduces the stored fingerprint.
pub fn load_archive(path: &Path) -> Result<ModelArchive> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    load_archive_bytes(&bytes)
}

pub fn load_archive_bytes(bytes: &[u8]) -> Result<ModelArchive> {
    let (manifest, start) = read_manifest(bytes)?;
    let mut r = Reader { bytes, pos: start };
    let mut data = Vec::with_capacity(manifest.sections.len());
    for s in &manifest.sections {
        let truncated = || Error::Checksum(s.name.clone());
        let len = r.u64().ok_or_else(truncated)?;
        if len != s.length {
            return Err(truncated());
        }
        let chunk = r.take(len as usize).ok_or_else(truncated)?;
        if hex::encode(Sha256::digest(chunk)) != s.sha256 {
            return Err(truncated());
        }
        let width = match s.kind {
            SectionKind::Json => 1,
            SectionKind::U32Le => 4,
            SectionKind::F64Le | SectionKind::U64Le => 8,
        };
        if chunk.len() % width != 0 {
            return Err(Error::Archive(format!("section {} is not a whole number of elements", s.name)));
        }
        data.push(chunk);
    }
    if r.pos != bytes.len() {
        return Err(Error::Archive("trailing bytes after the last section".into()));
    }
    let l = Loaded {
        manifest: &manifest,
        data,
    };

    let config: RunConfig = l.json("config")?;
    let provenance: Provenance = l.json("provenance")?;
    let header: VectorizerHeader = l.json("vectorizer")?;
    let vocab = match header.vocab {
        Some(v) => {
            let terms: Vec<String> = l.json("vocab.terms")?;
            let df = l.u32s("vocab.df")?.ok_or_else(|| Error::Archive("missing section vocab.df".into()))?;
            Some(VocabularyParts {
                terms,
                df,
                n_docs: v.n_docs,
                min_df: v.min_df,
                max_df: v.max_df,
            })
        }
        None => None,
    };
    let idf = match header.idf_variant {
        Some(variant) => Some(IdfWeights {
            idf: l.f64s("idf")?.ok_or_else(|| Error::Archive("missing section idf".into()))?,
            variant,
        }),
        None => None,
    };
    let topics = match header.topics {
        Some(t) => Some(TopicFeatures {
            k: t.k,
            alpha: t.alpha,
            beta: t.beta,
            vocab_size: t.vocab_size,
            seed: t.seed,
            iterations: t.iterations,
            phi: l.f64s("topics.phi")?.ok_or_else(|| Error::Archive("missing section topics.phi".into()))?,
        }),
        None => None,
    };
    let vectorizer = Vectorizer::from_parts(header.spec, header.resources, vocab, idf, header.embedding_dim, topics)?;
    vectorizer.fingerprint().check(&header.fingerprint)?;

    let model: MultiLabelModel = l.json("model")?;
    model.fingerprint.check(vectorizer.fingerprint())?;

    let ih: IndexHeader = l.json("index.header")?;
    let indptr = l.u64s("index.indptr")?.ok_or_else(|| Error::Archive("missing section index.indptr".into()))?;
    let indices = l.u32s("index.indices")?.ok_or_else(|| Error::Archive("missing section index.indices".into()))?;
    let values = l.f64s("index.values")?.ok_or_else(|| Error::Archive("missing section index.values".into()))?;
    if indptr.len() != ih.ids.len() + 1 || indices.len() != values.len() || indptr.last() != Some(&(values.len() as u64)) {
        return Err(Error::Archive("index arrays are inconsistent".into()));
    }
    let mut vectors = Vec::with_capacity(ih.ids.len());
    for w in indptr.windows(2) {
        let (a, b) = (w[0] as usize, w[1] as usize);
        if a > b {
            return Err(Error::Archive("index row pointers decrease".into()));
        }
        vectors.push(
            SparseVector::new(ih.dim, indices[a..b].to_vec(), values[a..b].to_vec())
                .map_err(|e| Error::Archive(format!("index row: {e}")))?,
        );
    }
    let index = SimilarityIndex::from_parts(ih.ids, vectors, ih.meta, ih.fingerprint)?;
    index.fingerprint().check(vectorizer.fingerprint())?;

    Ok(ModelArchive {
        config,
        provenance,
        vectorizer,
        model,
        index,
    })
}
