//! Vector space model: vocabulary, count and TF-IDF vectors, dense
//! embedding ingestion and topic-feature augmentation.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sorted `(index, weight)` pairs over a fixed dimension.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Validates strictly increasing indices below `dim` and finite weights.
    pub fn new(dim: usize, indices: Vec<u32>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::InvalidParameter("indices and values differ in length".into()));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("indices must be strictly increasing".into()));
        }
        if let Some(&last) = indices.last() {
            if last as usize >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: last as usize + 1,
                });
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite weight".into()));
        }
        Ok(SparseVector { dim, indices, values })
    }

    /// Builds from unsorted pairs, summing repeated indices and dropping
    /// exact zeros.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        for (i, v) in pairs {
            *acc.entry(i).or_insert(0.0) += v;
        }
        let (indices, values) = acc.into_iter().filter(|&(_, v)| v != 0.0).unzip();
        Self::new(dim, indices, values)
    }

    pub fn from_dense(dense: &[f64]) -> Self {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i as u32, v))
            .unzip();
        SparseVector {
            dim: dense.len(),
            indices,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, index: u32) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(p) => self.values[p],
            Err(_) => 0.0,
        }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Merged traversal of both index lists.
    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[i] * other.values[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }

    /// Dot product against a dense weight array of at least `dim` entries.
    pub fn dot_dense(&self, weights: &[f64]) -> f64 {
        self.iter().map(|(i, v)| weights[i as usize] * v).sum()
    }

    pub fn scaled(&self, c: f64) -> SparseVector {
        SparseVector {
            dim: self.dim,
            indices: self.indices.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// Unit-length copy; the zero vector stays zero.
    pub fn normalized(&self) -> SparseVector {
        let n = self.norm();
        if n == 0.0 {
            self.clone()
        } else {
            self.scaled(1.0 / n)
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i as usize] = v;
        }
        out
    }

    /// Appends `block` after the current dimension.
    pub fn concat_dense(&self, block: &[f64]) -> SparseVector {
        let mut out = self.clone();
        for (k, &v) in block.iter().enumerate() {
            if v != 0.0 {
                out.indices.push((self.dim + k) as u32);
                out.values.push(v);
            }
        }
        out.dim = self.dim + block.len();
        out
    }
}

/// Fixed-length real vector from an external sentence encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseVector(pub Vec<f64>);

impl DenseVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn to_sparse(&self) -> SparseVector {
        SparseVector::from_dense(&self.0)
    }
}

/// Term index with document frequencies and the pruning thresholds used.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    df: Vec<u32>,
    n_docs: usize,
    min_df: usize,
    max_df: f64,
    lookup: HashMap<String, u32>,
}

impl Vocabulary {
    /// Reassembles a fitted vocabulary (terms must be sorted and unique).
    pub fn from_parts(terms: Vec<String>, df: Vec<u32>, n_docs: usize, min_df: usize, max_df: f64) -> Result<Self> {
        if terms.len() != df.len() {
            return Err(Error::InvalidParameter("terms and df differ in length".into()));
        }
        if terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("vocabulary terms must be sorted and unique".into()));
        }
        let lookup = terms.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Ok(Vocabulary {
            terms,
            df,
            n_docs,
            min_df,
            max_df,
            lookup,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index(&self, term: &str) -> Option<u32> {
        self.lookup.get(term).copied()
    }

    pub fn term(&self, index: u32) -> &str {
        &self.terms[index as usize]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn df(&self) -> &[u32] {
        &self.df
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn thresholds(&self) -> (usize, f64) {
        (self.min_df, self.max_df)
    }
}

/// Counts document frequencies over `docs` and keeps terms with
/// `df >= min_df` and `df / N <= max_df`. Indices follow sorted term order.
pub fn fit_vocabulary(docs: &[Vec<String>], min_df: usize, max_df: f64) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus("fit_vocabulary needs at least one document".into()));
    }
    if !(max_df > 0.0 && max_df <= 1.0) {
        return Err(Error::InvalidParameter(format!("max_df must lie in (0, 1], got {max_df}")));
    }
    let mut df: HashMap<&str, u32> = HashMap::new();
    for doc in docs {
        let uniq: HashSet<&str> = doc.iter().map(String::as_str).collect();
        for t in uniq {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let n = docs.len() as f64;
    let mut kept: Vec<(&str, u32)> = df
        .into_iter()
        .filter(|&(_, d)| d as usize >= min_df && d as f64 / n <= max_df)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary { min_df, max_df });
    }
    kept.sort_unstable_by(|a, b| a.0.cmp(b.0));
    let (terms, df): (Vec<String>, Vec<u32>) = kept.into_iter().map(|(t, d)| (t.to_string(), d)).unzip();
    Vocabulary::from_parts(terms, df, docs.len(), min_df, max_df)
}

/// Occurrence counts of in-vocabulary tokens.
pub fn count_vectorize(doc: &[String], vocab: &Vocabulary) -> SparseVector {
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    for t in doc {
        if let Some(i) = vocab.index(t) {
            *counts.entry(i).or_insert(0.0) += 1.0;
        }
    }
    let (indices, values) = counts.into_iter().unzip();
    SparseVector {
        dim: vocab.len(),
        indices,
        values,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdfVariant {
    /// `ln((1 + N) / (1 + df)) + 1`
    Smooth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdfWeights {
    pub idf: Vec<f64>,
    pub variant: IdfVariant,
}

pub fn smooth_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// Document frequencies are taken from `counts` (one row per document).
pub fn fit_idf(counts: &[SparseVector], vocab: &Vocabulary) -> Result<IdfWeights> {
    let mut df = vec![0usize; vocab.len()];
    for row in counts {
        if row.dim() != vocab.len() {
            return Err(Error::DimensionMismatch {
                expected: vocab.len(),
                found: row.dim(),
            });
        }
        for &i in row.indices() {
            df[i as usize] += 1;
        }
    }
    let n = counts.len();
    Ok(IdfWeights {
        idf: df.into_iter().map(|d| smooth_idf(n, d)).collect(),
        variant: IdfVariant::Smooth,
    })
}

/// `count * idf`, then L2 normalization.
pub fn tfidf_transform(counts: &SparseVector, idf: &IdfWeights) -> Result<SparseVector> {
    if counts.dim() != idf.idf.len() {
        return Err(Error::DimensionMismatch {
            expected: idf.idf.len(),
            found: counts.dim(),
        });
    }
    let weighted = SparseVector {
        dim: counts.dim,
        indices: counts.indices.clone(),
        values: counts.iter().map(|(i, c)| c * idf.idf[i as usize]).collect(),
    };
    Ok(weighted.normalized())
}

/// Appends a topic distribution as `K` trailing coordinates. The result is
/// not re-normalized.
pub fn append_topic_features(vec: &SparseVector, theta_row: &[f64]) -> Result<SparseVector> {
    check_distribution(theta_row, 1e-6)?;
    Ok(vec.concat_dense(theta_row))
}

pub fn append_topic_features_dense(vec: &DenseVector, theta_row: &[f64]) -> Result<DenseVector> {
    check_distribution(theta_row, 1e-6)?;
    let mut out = vec.0.clone();
    out.extend_from_slice(theta_row);
    Ok(DenseVector(out))
}

pub(crate) fn check_distribution(p: &[f64], tol: f64) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution("empty".into()));
    }
    if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidDistribution("entries must be finite and non-negative".into()));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > tol {
        return Err(Error::InvalidDistribution(format!("sums to {s}, expected 1")));
    }
    Ok(())
}

/// Precomputed sentence embeddings keyed by article id, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub dim: usize,
    ids: Vec<String>,
    vectors: HashMap<String, DenseVector>,
}

impl EmbeddingSet {
    pub fn new(dim: usize) -> Self {
        EmbeddingSet {
            dim,
            ids: Vec::new(),
            vectors: HashMap::new(),
        }
    }

    pub fn insert(&mut self, id: String, v: DenseVector) -> Result<()> {
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.dim(),
            });
        }
        if self.vectors.contains_key(&id) {
            return Err(Error::DuplicateId(id));
        }
        self.ids.push(id.clone());
        self.vectors.insert(id, v);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&DenseVector> {
        self.vectors.get(id)
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

    /// Writes `#dim D` then `id<TAB>f1 ... fD` rows.
    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "#dim {}", self.dim).map_err(io)?;
        for id in &self.ids {
            let v = &self.vectors[id];
            let row: Vec<String> = v.0.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{id}\t{}", row.join(" ")).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingSet> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let ctx = path.display().to_string();
    let bad = |line: usize, message: String| Error::Parse {
        context: ctx.clone(),
        line,
        message,
    };
    let mut lines = BufReader::new(file).lines().enumerate();
    let dim = match lines.next() {
        Some((_, Ok(header))) => header
            .trim()
            .strip_prefix("#dim")
            .and_then(|d| d.trim().parse::<usize>().ok())
            .filter(|&d| d > 0)
            .ok_or_else(|| bad(1, "first line must be `#dim <D>`".into()))?,
        Some((_, Err(e))) => return Err(Error::io(path, e)),
        None => return Err(bad(1, "empty embedding file".into())),
    };
    let mut set = EmbeddingSet::new(dim);
    for (i, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (id, rest) = line
            .split_once('\t')
            .ok_or_else(|| bad(lineno, "expected id<TAB>values".into()))?;
        let values = rest
            .split_whitespace()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| bad(lineno, format!("bad float: {e}")))?;
        if values.len() != dim {
            return Err(bad(lineno, format!("expected {dim} values, found {}", values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(bad(lineno, "non-finite value".into()));
        }
        let id = id.trim().to_string();
        if set.get(&id).is_some() {
            return Err(bad(lineno, format!("duplicate id {id:?}")));
        }
        set.insert(id, DenseVector(values))?;
    }
    Ok(set)
}

/// Identifies the feature space a model or index was built in.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fingerprint(pub String);

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Fingerprint {
    pub fn check(&self, other: &Fingerprint) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::FingerprintMismatch {
                expected: self.0.clone(),
                found: other.0.clone(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn docs(v: &[&[&str]]) -> Vec<Vec<String>> {
        v.iter().map(|d| d.iter().map(|s| s.to_string()).collect()).collect()
    }

    #[test]
    fn vocabulary_min_df() {
        let v = fit_vocabulary(&docs(&[&["a", "b"], &["a", "c"]]), 2, 1.0).unwrap();
        assert_eq!(v.terms(), ["a"]);
        let v = fit_vocabulary(&docs(&[&["b", "a"], &["a", "c"]]), 1, 1.0).unwrap();
        assert_eq!(v.terms(), ["a", "b", "c"]);
        assert_eq!(v.df(), [2, 1, 1]);
        assert!(matches!(
            fit_vocabulary(&docs(&[&["a"]]), 5, 1.0),
            Err(Error::EmptyVocabulary { .. })
        ));
    }

    #[test]
    fn vocabulary_max_df() {
        let mut d: Vec<Vec<String>> = (0..99).map(|i| vec!["common".to_string(), format!("w{}", i % 3)]).collect();
        d.push(vec!["w0".into()]);
        let v = fit_vocabulary(&d, 1, 0.9).unwrap();
        assert!(v.index("common").is_none());
        assert!(v.index("w0").is_some());
    }

    #[test]
    fn counting() {
        let v = fit_vocabulary(&docs(&[&["a", "b"]]), 1, 1.0).unwrap();
        let d = docs(&[&["a", "b", "a", "z"]]);
        let c = count_vectorize(&d[0], &v);
        assert_eq!(c.iter().collect::<Vec<_>>(), [(0, 2.0), (1, 1.0)]);
        assert_eq!(c.sum(), 3.0);
        assert!(count_vectorize(&docs(&[&["z"]])[0], &v).is_empty());
    }

    #[test]
    fn idf_values() {
        assert!((smooth_idf(3, 2) - 1.287_682_072_451_780_9).abs() < 1e-12);
        assert!((smooth_idf(3, 1) - 1.693_147_180_559_945_3).abs() < 1e-12);
        assert_eq!(smooth_idf(7, 7), 1.0);
    }

    #[test]
    fn tfidf_hand_oracle() {
        // d1=[cat,sat] d2=[cat,ran] d3=[dog,ran]
        let d = docs(&[&["cat", "sat"], &["cat", "ran"], &["dog", "ran"]]);
        let v = fit_vocabulary(&d, 1, 1.0).unwrap();
        let counts: Vec<_> = d.iter().map(|x| count_vectorize(x, &v)).collect();
        let idf = fit_idf(&counts, &v).unwrap();
        let cat = v.index("cat").unwrap() as usize;
        let sat = v.index("sat").unwrap() as usize;
        let (w_cat, w_sat) = ((4.0f64 / 3.0).ln() + 1.0, 2.0f64.ln() + 1.0);
        assert!((idf.idf[cat] - w_cat).abs() < 1e-12);
        assert!((idf.idf[sat] - w_sat).abs() < 1e-12);
        let t = tfidf_transform(&counts[0], &idf).unwrap();
        let norm = (w_cat * w_cat + w_sat * w_sat).sqrt();
        assert!((t.get(cat as u32) - w_cat / norm).abs() < 1e-12);
        assert!((t.get(sat as u32) - w_sat / norm).abs() < 1e-12);
        assert!((t.get(cat as u32) - 0.6054).abs() < 1e-4);
        assert!((t.get(sat as u32) - 0.7959).abs() < 1e-4);
        assert!((t.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tfidf_empty_and_dim_mismatch() {
        let idf = IdfWeights { idf: vec![1.0, 2.0], variant: IdfVariant::Smooth };
        assert!(tfidf_transform(&SparseVector::zeros(2), &idf).unwrap().is_empty());
        assert!(tfidf_transform(&SparseVector::zeros(3), &idf).is_err());
    }

    #[test]
    fn topic_append() {
        let v = SparseVector::new(5, vec![1, 3], vec![0.6, 0.8]).unwrap();
        let out = append_topic_features(&v, &[0.2, 0.3, 0.5]).unwrap();
        assert_eq!(out.dim(), 8);
        assert_eq!(out.to_dense()[5..], [0.2, 0.3, 0.5]);
        assert_eq!(out.to_dense()[..5], v.to_dense()[..]);
        let u = append_topic_features(&v, &[1.0 / 3.0; 3]).unwrap();
        assert!(u.to_dense()[5..].iter().all(|&x| x == 1.0 / 3.0));
        assert!(append_topic_features(&v, &[0.5, 0.4]).is_err());
        assert!(append_topic_features(&v, &[]).is_err());
        let d = append_topic_features_dense(&DenseVector(vec![1.0, -1.0]), &[0.5, 0.5]).unwrap();
        assert_eq!(d.0, [1.0, -1.0, 0.5, 0.5]);
    }

    #[test]
    fn sparse_vector_validation() {
        assert!(SparseVector::new(3, vec![2, 1], vec![1.0, 1.0]).is_err());
        assert!(SparseVector::new(3, vec![3], vec![1.0]).is_err());
        assert!(SparseVector::new(3, vec![0], vec![f64::NAN]).is_err());
        let v = SparseVector::from_pairs(4, [(2, 1.0), (0, 2.0), (2, 1.0), (3, 0.0)]).unwrap();
        assert_eq!(v.iter().collect::<Vec<_>>(), [(0, 2.0), (2, 2.0)]);
        let d = SparseVector::from_dense(&[0.0, -1.5, 0.0, 2.0]);
        assert_eq!(d.dim(), 4);
        assert_eq!(d.nnz(), 2);
    }

    fn embedding_file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn embeddings_parse() {
        let f = embedding_file("#dim 4\nx\t0.1 0.2 0.3 0.4\ny\t1 2 3 4\n");
        let e = load_embeddings(f.path()).unwrap();
        assert_eq!(e.dim, 4);
        assert_eq!(e.get("x").unwrap().0, [0.1, 0.2, 0.3, 0.4]);
        assert_eq!(e.ids(), ["x", "y"]);
    }

    #[test]
    fn embeddings_errors_name_the_line() {
        let f = embedding_file("#dim 4\nx\t0.1 0.2 0.3\n");
        match load_embeddings(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let f = embedding_file("#dim 2\nx\t1 2\nx\t3 4\n");
        assert!(matches!(load_embeddings(f.path()), Err(Error::Parse { line: 3, .. })));
        let f = embedding_file("#dim 2\nx\t1 NaN\n");
        assert!(load_embeddings(f.path()).is_err());
        let f = embedding_file("dim 2\n");
        assert!(load_embeddings(f.path()).is_err());
    }

    #[test]
    fn embeddings_write_roundtrip() {
        let mut set = EmbeddingSet::new(3);
        set.insert("a".into(), DenseVector(vec![0.1, -2.5, 1e-17])).unwrap();
        set.insert("b".into(), DenseVector(vec![1.0 / 3.0, 0.0, 7.0])).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        set.write(f.path()).unwrap();
        assert_eq!(load_embeddings(f.path()).unwrap(), set);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn doc_strategy() -> impl Strategy<Value = Vec<Vec<String>>> {
            proptest::collection::vec(proptest::collection::vec("[a-f]", 0..12), 1..15)
        }

        proptest! {
            #[test]
            fn idf_anti_monotone_in_df(d in doc_strategy()) {
                if let Ok(v) = fit_vocabulary(&d, 1, 1.0) {
                    let counts: Vec<_> = d.iter().map(|x| count_vectorize(x, &v)).collect();
                    let idf = fit_idf(&counts, &v).unwrap();
                    for a in 0..v.len() {
                        prop_assert!(idf.idf[a] >= 1.0);
                        for b in 0..v.len() {
                            if v.df()[a] < v.df()[b] {
                                prop_assert!(idf.idf[a] > idf.idf[b]);
                            }
                        }
                    }
                }
            }

            #[test]
            fn tfidf_unit_norm_and_pattern(d in doc_strategy()) {
                if let Ok(v) = fit_vocabulary(&d, 1, 1.0) {
                    let counts: Vec<_> = d.iter().map(|x| count_vectorize(x, &v)).collect();
                    let idf = fit_idf(&counts, &v).unwrap();
                    for c in &counts {
                        let t = tfidf_transform(c, &idf).unwrap();
                        prop_assert_eq!(t.indices(), c.indices());
                        if !t.is_empty() {
                            prop_assert!((t.norm() - 1.0).abs() < 1e-9);
                        }
                    }
                }
            }

            #[test]
            fn bag_of_words_ignores_order(mut doc in proptest::collection::vec("[a-e]", 1..20), seed in any::<u64>()) {
                let v = fit_vocabulary(&[doc.clone()], 1, 1.0).unwrap();
                let before = count_vectorize(&doc, &v);
                use rand::{seq::SliceRandom, SeedableRng};
                doc.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                prop_assert_eq!(count_vectorize(&doc, &v), before);
            }
        }
    }
}
