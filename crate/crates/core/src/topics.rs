//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling.
//!
//! Tokens are expanded from count vectors in (document, term index) order
//! and visited in that order on every sweep. Topic-word and document-topic
//! distributions are read out from the final sampler state:
//!
//! ```text
//! phi(k, w)   = (n(k, w) + beta)  / (n(k) + V * beta)
//! theta(d, k) = (n(d, k) + alpha) / (len(d) + K * alpha)
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaParams {
    pub k: usize,
    /// Symmetric document-topic prior; `None` means `50 / K`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for LdaParams {
    fn default() -> Self {
        LdaParams {
            k: 20,
            alpha: None,
            beta: 0.01,
            iterations: 500,
            seed: 1,
        }
    }
}

impl LdaParams {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub vocab_size: usize,
    pub seed: u64,
    pub iterations: usize,
    /// Row-major K×V.
    pub phi: Vec<f64>,
    /// Row-major D×K.
    pub theta: Vec<f64>,
    pub topic_word: Vec<u32>,
    pub doc_topic: Vec<u32>,
    pub topic_totals: Vec<u32>,
    pub doc_lengths: Vec<u32>,
    pub skipped_docs: usize,
}

impl TopicModel {
    pub fn n_docs(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn phi_row(&self, topic: usize) -> &[f64] {
        &self.phi[topic * self.vocab_size..(topic + 1) * self.vocab_size]
    }

    pub fn theta_row(&self, doc: usize) -> &[f64] {
        &self.theta[doc * self.k..(doc + 1) * self.k]
    }

    /// Checks the count-table bookkeeping invariants.
    pub fn check_counts(&self) -> Result<()> {
        check_tables(
            self.k,
            self.vocab_size,
            &self.topic_word,
            &self.doc_topic,
            &self.topic_totals,
            &self.doc_lengths,
        )
    }
}

fn check_tables(k: usize, v: usize, topic_word: &[u32], doc_topic: &[u32], totals: &[u32], lengths: &[u32]) -> Result<()> {
    let broken = |what: String| Err(Error::InvalidDistribution(format!("count tables inconsistent: {what}")));
    for t in 0..k {
        let s: u64 = topic_word[t * v..(t + 1) * v].iter().map(|&c| c as u64).sum();
        if s != totals[t] as u64 {
            return broken(format!("topic {t} word counts sum to {s}, total says {}", totals[t]));
        }
    }
    for (d, &len) in lengths.iter().enumerate() {
        let s: u64 = doc_topic[d * k..(d + 1) * k].iter().map(|&c| c as u64).sum();
        if s != len as u64 {
            return broken(format!("doc {d} topic counts sum to {s}, length is {len}"));
        }
    }
    let all: u64 = totals.iter().map(|&c| c as u64).sum();
    let tokens: u64 = lengths.iter().map(|&c| c as u64).sum();
    if all != tokens {
        return broken(format!("topic totals {all} != tokens {tokens}"));
    }
    Ok(())
}

/// Collapsed Gibbs sampler state, exposed so callers can observe every sweep.
pub struct GibbsSampler {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    seed: u64,
    words: Vec<u32>,
    docs: Vec<u32>,
    z: Vec<u16>,
    topic_word: Vec<u32>,
    doc_topic: Vec<u32>,
    topic_totals: Vec<u32>,
    doc_lengths: Vec<u32>,
    skipped: usize,
    sweeps: usize,
    rng: ChaCha8Rng,
    probs: Vec<f64>,
}

impl GibbsSampler {
    pub fn new(counts: &[SparseVector], vocab_size: usize, params: &LdaParams) -> Result<Self> {
        Self::with_topics(counts, vocab_size, params, 2)
    }

    fn with_topics(counts: &[SparseVector], vocab_size: usize, params: &LdaParams, min_k: usize) -> Result<Self> {
        let k = params.k;
        if k < min_k || k > u16::MAX as usize {
            return Err(Error::InvalidParameter(format!("topic count K={k} must be in {min_k}..=65535")));
        }
        if params.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be >= 1".into()));
        }
        let alpha = params.alpha();
        if !(alpha > 0.0 && params.beta > 0.0) {
            return Err(Error::InvalidParameter("alpha and beta must be positive".into()));
        }
        if counts.is_empty() {
            return Err(Error::EmptyCorpus("topic model needs documents".into()));
        }
        let mut words = Vec::new();
        let mut docs = Vec::new();
        let mut doc_lengths = Vec::with_capacity(counts.len());
        let mut skipped = 0;
        for (d, row) in counts.iter().enumerate() {
            if row.dim() != vocab_size {
                return Err(Error::DimensionMismatch {
                    expected: vocab_size,
                    found: row.dim(),
                });
            }
            let mut len = 0u32;
            for (w, c) in row.iter() {
                if c < 0.0 || c.fract() != 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "topic model needs integer counts, doc {d} has {c}"
                    )));
                }
                for _ in 0..c as u32 {
                    words.push(w);
                    docs.push(d as u32);
                }
                len += c as u32;
            }
            if len == 0 {
                skipped += 1;
            }
            doc_lengths.push(len);
        }
        if words.len() < k {
            return Err(Error::InvalidParameter(format!(
                "K={k} exceeds the total token count {}",
                words.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut topic_word = vec![0u32; k * vocab_size];
        let mut doc_topic = vec![0u32; k * counts.len()];
        let mut topic_totals = vec![0u32; k];
        let z: Vec<u16> = words
            .iter()
            .zip(&docs)
            .map(|(&w, &d)| {
                let t = rng.random_range(0..k);
                topic_word[t * vocab_size + w as usize] += 1;
                doc_topic[d as usize * k + t] += 1;
                topic_totals[t] += 1;
                t as u16
            })
            .collect();
        Ok(GibbsSampler {
            k,
            v: vocab_size,
            alpha,
            beta: params.beta,
            seed: params.seed,
            words,
            docs,
            z,
            topic_word,
            doc_topic,
            topic_totals,
            doc_lengths,
            skipped,
            sweeps: 0,
            rng,
            probs: vec![0.0; k],
        })
    }

    /// One pass over every token in (doc, position) order.
    pub fn sweep(&mut self) {
        let (k, v) = (self.k, self.v);
        let vbeta = v as f64 * self.beta;
        for i in 0..self.words.len() {
            let w = self.words[i] as usize;
            let d = self.docs[i] as usize;
            let old = self.z[i] as usize;
            self.topic_word[old * v + w] -= 1;
            self.doc_topic[d * k + old] -= 1;
            self.topic_totals[old] -= 1;

            let mut total = 0.0;
            for t in 0..k {
                let p = (self.doc_topic[d * k + t] as f64 + self.alpha) * (self.topic_word[t * v + w] as f64 + self.beta)
                    / (self.topic_totals[t] as f64 + vbeta);
                total += p;
                self.probs[t] = total;
            }
            let u = self.rng.random::<f64>() * total;
            let new = self.probs.iter().position(|&c| u < c).unwrap_or(k - 1);

            self.z[i] = new as u16;
            self.topic_word[new * v + w] += 1;
            self.doc_topic[d * k + new] += 1;
            self.topic_totals[new] += 1;
        }
        self.sweeps += 1;
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn total_tokens(&self) -> usize {
        self.words.len()
    }

    pub fn check_counts(&self) -> Result<()> {
        check_tables(
            self.k,
            self.v,
            &self.topic_word,
            &self.doc_topic,
            &self.topic_totals,
            &self.doc_lengths,
        )
    }

    pub fn finish(self) -> TopicModel {
        let (k, v) = (self.k, self.v);
        let vbeta = v as f64 * self.beta;
        let mut phi = vec![0.0; k * v];
        for t in 0..k {
            let denom = self.topic_totals[t] as f64 + vbeta;
            for w in 0..v {
                phi[t * v + w] = (self.topic_word[t * v + w] as f64 + self.beta) / denom;
            }
        }
        let kalpha = k as f64 * self.alpha;
        let mut theta = vec![0.0; k * self.doc_lengths.len()];
        for (d, &len) in self.doc_lengths.iter().enumerate() {
            let denom = len as f64 + kalpha;
            for t in 0..k {
                theta[d * k + t] = (self.doc_topic[d * k + t] as f64 + self.alpha) / denom;
            }
        }
        TopicModel {
            k,
            alpha: self.alpha,
            beta: self.beta,
            vocab_size: v,
            seed: self.seed,
            iterations: self.sweeps,
            phi,
            theta,
            topic_word: self.topic_word,
            doc_topic: self.doc_topic,
            topic_totals: self.topic_totals,
            doc_lengths: self.doc_lengths,
            skipped_docs: self.skipped,
        }
    }
}

/// Fits LDA with `params.iterations` Gibbs sweeps. Requires K >= 2.
pub fn fit_lda(counts: &[SparseVector], vocab_size: usize, params: &LdaParams) -> Result<TopicModel> {
    let mut s = GibbsSampler::new(counts, vocab_size, params)?;
    for _ in 0..params.iterations {
        s.sweep();
    }
    if s.skipped > 0 {
        log::warn!("topic model skipped {} empty document(s)", s.skipped);
    }
    Ok(s.finish())
}

/// Topic distribution for an unseen document by Gibbs sampling its token
/// assignments against the fixed topic-word distribution.
pub fn infer_theta(model: &TopicModel, counts: &SparseVector, iterations: usize, seed: u64) -> Result<Vec<f64>> {
    if counts.dim() != model.vocab_size {
        return Err(Error::DimensionMismatch {
            expected: model.vocab_size,
            found: counts.dim(),
        });
    }
    let k = model.k;
    let words: Vec<usize> = counts
        .iter()
        .flat_map(|(w, c)| std::iter::repeat_n(w as usize, c.max(0.0).round() as usize))
        .collect();
    if words.is_empty() {
        return Ok(vec![1.0 / k as f64; k]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nk = vec![0u32; k];
    let mut z: Vec<usize> = words
        .iter()
        .map(|_| {
            let t = rng.random_range(0..k);
            nk[t] += 1;
            t
        })
        .collect();
    let mut cum = vec![0.0; k];
    for _ in 0..iterations.max(1) {
        for (i, &w) in words.iter().enumerate() {
            nk[z[i]] -= 1;
            let mut total = 0.0;
            for t in 0..k {
                total += (nk[t] as f64 + model.alpha) * model.phi[t * model.vocab_size + w];
                cum[t] = total;
            }
            let u = rng.random::<f64>() * total;
            let t = cum.iter().position(|&c| u < c).unwrap_or(k - 1);
            z[i] = t;
            nk[t] += 1;
        }
    }
    let denom = words.len() as f64 + k as f64 * model.alpha;
    Ok(nk.iter().map(|&c| (c as f64 + model.alpha) / denom).collect())
}

/// The `n` highest-probability terms of `topic`, ties broken by lower term
/// index. `n` larger than the vocabulary is clamped.
pub fn topic_top_words(model: &TopicModel, topic: usize, n: usize) -> Result<Vec<(u32, f64)>> {
    if topic >= model.k {
        return Err(Error::InvalidParameter(format!("topic {topic} >= K={}", model.k)));
    }
    let n = if n > model.vocab_size {
        log::warn!("requested {n} top words but vocabulary has {}; clamping", model.vocab_size);
        model.vocab_size
    } else {
        n
    };
    let row = model.phi_row(topic);
    let mut idx: Vec<u32> = (0..model.vocab_size as u32).collect();
    idx.sort_by(|&a, &b| row[b as usize].total_cmp(&row[a as usize]).then(a.cmp(&b)));
    Ok(idx.into_iter().take(n).map(|w| (w, row[w as usize])).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perplexity {
    /// Mean per-token log-likelihood (negative).
    pub log_likelihood: f64,
    /// `exp(-log_likelihood)`.
    pub perplexity: f64,
}

/// Per-word log-likelihood of the training matrix under the fitted
/// `theta` and `phi`. Rows of `counts` must align with the model's documents.
pub fn log_perplexity(model: &TopicModel, counts: &[SparseVector]) -> Result<Perplexity> {
    if counts.len() != model.n_docs() {
        return Err(Error::DimensionMismatch {
            expected: model.n_docs(),
            found: counts.len(),
        });
    }
    let mut ll = 0.0;
    let mut tokens = 0.0;
    for (d, row) in counts.iter().enumerate() {
        let theta = model.theta_row(d);
        for (w, c) in row.iter() {
            let p: f64 = (0..model.k).map(|t| theta[t] * model.phi[t * model.vocab_size + w as usize]).sum();
            assert!(p > 0.0, "word {w} has zero probability under every topic");
            ll += c * p.ln();
            tokens += c;
        }
    }
    if tokens == 0.0 {
        return Err(Error::EmptyCorpus("no tokens for perplexity".into()));
    }
    let l = ll / tokens;
    Ok(Perplexity {
        log_likelihood: l,
        perplexity: (-l).exp(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coherence {
    pub mean: f64,
    pub per_topic: Vec<f64>,
}

/// UMass coherence with +1 smoothing over each topic's `top_n` words in
/// rank order: `sum_{l<m} ln((D(w_m, w_l) + 1) / D(w_l))`, averaged over
/// topics, where `D` counts documents in `counts` containing the word(s).
pub fn umass_coherence(model: &TopicModel, counts: &[SparseVector], top_n: usize) -> Result<Coherence> {
    if top_n < 2 {
        return Err(Error::InvalidParameter("coherence needs top_n >= 2".into()));
    }
    let mut per_topic = Vec::with_capacity(model.k);
    for t in 0..model.k {
        let top: Vec<u32> = topic_top_words(model, t, top_n)?.into_iter().map(|(w, _)| w).collect();
        let postings: Vec<Vec<usize>> = top
            .iter()
            .map(|&w| {
                counts
                    .iter()
                    .enumerate()
                    .filter(|(_, row)| row.get(w) > 0.0)
                    .map(|(d, _)| d)
                    .collect()
            })
            .collect();
        let mut score = 0.0;
        if let Some(i) = postings.iter().position(|p| p.is_empty()) {
            return Err(Error::InvalidParameter(format!(
                "top word {} of topic {t} occurs in no document",
                top[i]
            )));
        }
        // Each word is scored against every higher-ranked one.
        for m in 1..top.len() {
            for l in 0..m {
                let co = intersect_count(&postings[m], &postings[l]);
                score += ((co as f64 + 1.0) / postings[l].len() as f64).ln();
            }
        }
        per_topic.push(score);
    }
    let mean = per_topic.iter().sum::<f64>() / per_topic.len() as f64;
    Ok(Coherence { mean, per_topic })
}

fn intersect_count(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// `(K, mean coherence)` ordered by K ascending.
    pub points: Vec<(usize, f64)>,
    pub best_k: usize,
}

/// One fit per K (seed `params.seed + K`), scored by UMass coherence.
pub fn sweep_topics(
    counts: &[SparseVector],
    vocab_size: usize,
    k_list: &[usize],
    params: &LdaParams,
    top_n: usize,
) -> Result<SweepResult> {
    if k_list.is_empty() {
        return Err(Error::InvalidParameter("empty K list".into()));
    }
    let mut ks = k_list.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut points = Vec::with_capacity(ks.len());
    for k in ks {
        let p = LdaParams {
            k,
            seed: params.seed.wrapping_add(k as u64),
            ..params.clone()
        };
        let model = fit_lda(counts, vocab_size, &p)?;
        points.push((k, umass_coherence(&model, counts, top_n)?.mean));
    }
    let best_k = points
        .iter()
        .fold(None::<(usize, f64)>, |best, &(k, c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((k, c)),
        })
        .map(|(k, _)| k)
        .unwrap_or(points[0].0);
    Ok(SweepResult { points, best_k })
}
