//! Acceptance gates. Runs without the libtest harness so every criterion
//! prints one status line even when the run succeeds.
//!
//! `cargo test -p docsift --test acceptance` runs everything; set
//! `ACCEPTANCE_ONLY=4,5` to pick criteria.

use std::collections::{BTreeSet, HashSet};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use docsift::app::{self, load_archive, train_archive, ModelArchive, Query, RunConfig};
use docsift::classifiers::linear::{gradient, objective, LinearLoss};
use docsift::classifiers::mnb::{fit_mnb, MnbParams};
use docsift::classifiers::{Algorithm, AlgorithmConfig};
use docsift::corpus::{normalize_labels, ArticleRecord, CategoryMap, Corpus, UnmappedPolicy};
use docsift::evaluation::{compute_metrics, run_benchmark, smote, BenchmarkProtocol, BenchmarkTable, SmoteParams};
use docsift::features::{EmbeddingSet, Fingerprint, SparseVector};
use docsift::pipeline::{PrepResources, Representation, Vectorizer, VectorizerSpec};
use docsift::recommender::{build_index, cosine, ArticleMeta, Filters};
use docsift::synth::{self, HashEncoder, SynthConfig};
use docsift::topics::{fit_lda, log_perplexity, topic_top_words, GibbsSampler, LdaParams};

/// Criteria that fail on this build. Listed ones still run and still
/// print FAIL; a listed criterion that starts passing is also reported.
///
/// 1: on the synthetic corpus the tree ensembles and count+logreg beat
/// tfidf+logreg even after tuning logreg; see the README.
const KNOWN_FAILURES: &[u32] = &[1];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn labelled(records: Vec<ArticleRecord>) -> Corpus {
    normalize_labels(Corpus::from_records(records).unwrap(), &CategoryMap::default(), UnmappedPolicy::Strict).unwrap()
}

fn synth_corpus(n: usize, seed: u64) -> Corpus {
    labelled(synth::generate(&SynthConfig { n_records: n, seed, ..Default::default() }).unwrap())
}

// ---------------------------------------------------------------- 1, 2, 3

struct DeskRun {
    lexical: BenchmarkTable,
    lexical_seconds: f64,
    dense: BenchmarkTable,
    topics: BenchmarkTable,
}

fn desk_run() -> DeskRun {
    // 20k stratified from a larger synthetic pool, seed 1.
    let pool = synth_corpus(25_000, 1);
    let corpus = pool.stratified_sample(20_000, 1).unwrap();
    let embeddings = HashEncoder::default().encode_records(&corpus.records).unwrap();
    let protocol = BenchmarkProtocol { seed: 1, ..Default::default() };
    let resources = PrepResources::default();
    let algorithms: Vec<AlgorithmConfig> = Algorithm::ALL.iter().map(|a| a.default_config().with_seed(1)).collect();
    let spec = |r: Representation| VectorizerSpec { representation: r, ..Default::default() };

    let t = Instant::now();
    let lexical = run_benchmark(
        &corpus,
        &[spec(Representation::Count), spec(Representation::Tfidf)],
        &algorithms,
        &protocol,
        &resources,
        None,
    )
    .unwrap();
    let lexical_seconds = t.elapsed().as_secs_f64();
    let dense = run_benchmark(&corpus, &[spec(Representation::Dense)], &algorithms, &protocol, &resources, Some(&embeddings)).unwrap();
    let topics = run_benchmark(
        &corpus,
        &[spec(Representation::TfidfTopics)],
        &[Algorithm::Logreg.default_config().with_seed(1)],
        &protocol,
        &resources,
        None,
    )
    .unwrap();
    DeskRun { lexical, lexical_seconds, dense, topics }
}

fn acc(table: &BenchmarkTable, rep: &str, alg: &str) -> Option<f64> {
    table.row(rep, alg).and_then(|r| r.accuracy)
}

fn criterion_1(run: &DeskRun) -> Outcome {
    let t = &run.lexical;
    let Some(best) = acc(t, "tfidf", "logreg") else {
        return outcome(false, "tfidf/logreg cell failed");
    };
    let mut cells = Vec::new();
    let mut beaten = Vec::new();
    for a in Algorithm::ALL {
        let v = acc(t, "tfidf", a.name());
        cells.push(format!("{}={}", a.name(), v.map_or("err".into(), |v| format!("{v:.4}"))));
        if a != Algorithm::Logreg && v.is_some_and(|v| v > best) {
            beaten.push(a.name());
        }
    }
    let count = acc(t, "count", "logreg").unwrap_or(f64::NAN);
    let ok = best >= 0.55 && beaten.is_empty() && best >= count && run.lexical_seconds < 900.0;
    outcome(
        ok,
        format!(
            "tfidf [{}]; count/logreg={count:.4}; beaten by [{}]; count+tfidf grid {:.0}s",
            cells.join(" "),
            beaten.join(","),
            run.lexical_seconds
        ),
    )
}

fn criterion_2(run: &DeskRun) -> Outcome {
    let best = acc(&run.lexical, "tfidf", "logreg").unwrap_or(f64::NAN);
    let mut ok = true;
    let mut cells = Vec::new();
    for r in &run.dense.rows {
        match r.accuracy {
            Some(a) => {
                ok &= a < best;
                cells.push(format!("{}={a:.4}", r.algorithm));
            }
            None => cells.push(format!("{}=n/a", r.algorithm)),
        }
    }
    ok &= run.dense.rows.iter().any(|r| r.accuracy.is_some());
    outcome(ok, format!("dense [{}] vs tfidf/logreg {best:.4}", cells.join(" ")))
}

fn criterion_3(run: &DeskRun) -> Outcome {
    let plain = acc(&run.lexical, "tfidf", "logreg").unwrap_or(f64::NAN);
    let Some(aug) = acc(&run.topics, "tfidf+topics", "logreg") else {
        return outcome(false, "tfidf+topics row failed");
    };
    // Block structure on a small slice: same lexical prefix, K extra columns.
    let corpus = synth_corpus(1500, 5);
    let lda = LdaParams { k: 20, iterations: 100, seed: 1, ..Default::default() };
    let fit = |r: Representation| {
        let spec = VectorizerSpec { representation: r, lda: lda.clone(), ..Default::default() };
        Vectorizer::fit(spec, PrepResources::default(), &corpus.records, None).unwrap()
    };
    let (plain_vz, plain_rows, _) = fit(Representation::Tfidf);
    let (aug_vz, aug_rows, _) = fit(Representation::TfidfTopics);
    let v = plain_vz.dim();
    let mut block_ok = aug_vz.dim() == v + 20 && plain_rows.kept == aug_rows.kept;
    for (p, a) in plain_rows.rows.iter().zip(&aug_rows.rows) {
        let head: Vec<(u32, f64)> = a.iter().filter(|&(i, _)| (i as usize) < v).collect();
        let tail: f64 = a.iter().filter(|&(i, _)| (i as usize) >= v).map(|(_, x)| x).sum();
        block_ok &= head == p.iter().collect::<Vec<_>>() && (tail - 1.0).abs() < 1e-9;
    }
    let ok = block_ok && (aug - plain).abs() <= 0.05;
    outcome(ok, format!("tfidf+topics={aug:.4} tfidf={plain:.4} diff={:+.4}; block layout ok={block_ok}", aug - plain))
}

// ---------------------------------------------------------------- 4

fn random_sparse(r: &mut ChaCha8Rng, dim: usize, density: f64, scale: f64) -> SparseVector {
    let dense: Vec<f64> = (0..dim)
        .map(|_| if r.random_bool(density) { r.random_range(-scale..scale) } else { 0.0 })
        .collect();
    SparseVector::from_dense(&dense)
}

fn criterion_4() -> Outcome {
    let mut r = rng(4);
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = r.random_range(5..40);
        let xs: Vec<SparseVector> = (0..n).map(|_| random_sparse(&mut r, 10, 0.7, 2.0)).collect();
        let ys: Vec<bool> = (0..n).map(|_| r.random_bool(0.5)).collect();
        let w: Vec<f64> = (0..10).map(|_| r.random_range(-1.0..1.0)).collect();
        let b = r.random_range(-1.0..1.0);
        let l2 = r.random_range(0.0..0.1);
        let (gw, gb) = gradient(LinearLoss::Logistic, &w, b, &xs, &ys, l2);
        let f = |w: &[f64], b: f64| objective(LinearLoss::Logistic, w, b, &xs, &ys, l2);
        let rel = |a: f64, fd: f64| (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6);
        for j in 0..10 {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[j] += eps;
            wm[j] -= eps;
            let fd = (f(&wp, b) - f(&wm, b)) / (2.0 * eps);
            worst = worst.max(rel(gw[j], fd));
        }
        let fd = (f(&w, b + eps) - f(&w, b - eps)) / (2.0 * eps);
        worst = worst.max(rel(gb, fd));
    }
    outcome(worst < 1e-4, format!("50 instances, max relative error {worst:.2e}"))
}

// ---------------------------------------------------------------- 5

/// Posterior by multiplying per-token probabilities, no logs.
fn mnb_brute(docs: &[Vec<u32>], ys: &[bool], v: usize, alpha: f64, query: &[u32]) -> [f64; 2] {
    let mut joint = [0.0; 2];
    for (c, class) in [false, true].into_iter().enumerate() {
        let members: Vec<&Vec<u32>> = docs.iter().zip(ys).filter(|(_, &y)| y == class).map(|(d, _)| d).collect();
        let prior = members.len() as f64 / docs.len() as f64;
        let mut per_term = vec![0u32; v];
        for d in &members {
            for (t, &x) in d.iter().enumerate() {
                per_term[t] += x;
            }
        }
        let total: u32 = per_term.iter().sum();
        let mut p = prior;
        for (t, &x) in query.iter().enumerate() {
            let pt = (per_term[t] as f64 + alpha) / (total as f64 + alpha * v as f64);
            for _ in 0..x {
                p *= pt;
            }
        }
        joint[c] = p;
    }
    let z = joint[0] + joint[1];
    [joint[0] / z, joint[1] / z]
}

fn check_mnb(r: &mut ChaCha8Rng) -> f64 {
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let v = r.random_range(2..=10);
        let n = r.random_range(2..=20);
        let docs: Vec<Vec<u32>> = (0..n).map(|_| (0..v).map(|_| r.random_range(0..4)).collect()).collect();
        let mut ys: Vec<bool> = (0..n).map(|_| r.random_bool(0.5)).collect();
        ys[0] = true;
        ys[1] = false;
        let alpha = [0.1, 0.5, 1.0, 2.0][r.random_range(0..4)];
        let xs: Vec<SparseVector> = docs.iter().map(|d| SparseVector::from_dense(&d.iter().map(|&x| x as f64).collect::<Vec<_>>())).collect();
        let model = fit_mnb(&xs, &ys, &MnbParams { alpha }).unwrap();
        for _ in 0..5 {
            let q: Vec<u32> = (0..v).map(|_| r.random_range(0..4)).collect();
            let want = mnb_brute(&docs, &ys, v, alpha, &q);
            let got = model.posterior(&SparseVector::from_dense(&q.iter().map(|&x| x as f64).collect::<Vec<_>>()));
            worst = worst.max((got[0] - want[0]).abs()).max((got[1] - want[1]).abs());
        }
    }
    worst
}

fn check_metrics(r: &mut ChaCha8Rng) -> usize {
    let space: Vec<String> = (0..6).map(|i| format!("L{i}")).collect();
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = r.random_range(1..60);
        let draw = |r: &mut ChaCha8Rng| -> Vec<String> { space.iter().filter(|_| r.random_bool(0.3)).cloned().collect() };
        let pred: Vec<Vec<String>> = (0..n).map(|_| draw(r)).collect();
        let gold: Vec<Vec<String>> = (0..n).map(|_| draw(r)).collect();
        let rep = compute_metrics(&pred, &gold, &space).unwrap();
        for (li, l) in space.iter().enumerate() {
            let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
            for i in 0..n {
                match (pred[i].contains(l), gold[i].contains(l)) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    (false, false) => tn += 1,
                }
            }
            let got = &rep.per_label[li];
            if got.label != *l || (got.tp, got.fp, got.fn_, got.tn) != (tp, fp, fn_, tn) {
                mismatches += 1;
            }
        }
        let exact = (0..n)
            .filter(|&i| pred[i].iter().collect::<BTreeSet<_>>() == gold[i].iter().collect::<BTreeSet<_>>())
            .count();
        if rep.subset_accuracy != exact as f64 / n as f64 {
            mismatches += 1;
        }
    }
    mismatches
}

/// Full sort by (cosine desc, id asc) on raw vectors.
fn brute_rank(ids: &[String], raw: &[Vec<f64>], q: &[f64], k: usize) -> Vec<String> {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let qn = norm(q);
    let mut scored: Vec<(f64, &String)> = raw
        .iter()
        .zip(ids)
        .map(|(v, id)| {
            let dot: f64 = v.iter().zip(q).map(|(a, b)| (a / norm(v)) * (b / qn)).sum();
            (dot, id)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    scored.into_iter().take(k).map(|(_, id)| id.clone()).collect()
}

fn check_topk(r: &mut ChaCha8Rng, binary: bool, queries: usize) -> usize {
    let (n, dim) = (10_000, 24);
    let mut ids: Vec<String> = (0..n).map(|i| format!("d{i:05}")).collect();
    ids.shuffle(r);
    // Binary rows drawn from a small pattern pool give many exact ties.
    let patterns: Vec<Vec<f64>> = (0..300)
        .map(|_| (0..dim).map(|_| if r.random_bool(0.25) { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut raw: Vec<Vec<f64>> = Vec::with_capacity(n);
    while raw.len() < n {
        let v: Vec<f64> = if binary {
            patterns[r.random_range(0..patterns.len())].clone()
        } else {
            (0..dim).map(|_| if r.random_bool(0.4) { r.random_range(0.0..5.0) } else { 0.0 }).collect()
        };
        if v.iter().any(|&x| x != 0.0) {
            raw.push(v);
        }
    }
    let fp = Fingerprint("oracle".into());
    let meta = vec![ArticleMeta::default(); n];
    let vectors = raw.iter().map(|v| SparseVector::from_dense(v)).collect();
    let index = build_index(ids.clone(), vectors, meta, fp.clone()).unwrap();
    let mut bad = 0;
    for _ in 0..queries {
        let q: Vec<f64> = loop {
            let q: Vec<f64> = (0..dim)
                .map(|_| if r.random_bool(0.3) { if binary { 1.0 } else { r.random_range(0.0..5.0) } } else { 0.0 })
                .collect();
            if q.iter().any(|&x| x != 0.0) {
                break q;
            }
        };
        let k = r.random_range(1..200);
        let got = index
            .query_topk(&SparseVector::from_dense(&q), k, &HashSet::new(), &Filters::default(), &fp)
            .unwrap();
        let got: Vec<String> = got.results.into_iter().map(|x| x.id).collect();
        if got != brute_rank(&ids, &raw, &q, k) {
            bad += 1;
        }
    }
    bad
}

fn criterion_5() -> Outcome {
    let mut r = rng(5);
    let mnb = check_mnb(&mut r);
    let metrics = check_metrics(&mut r);
    let topk = check_topk(&mut r, true, 50) + check_topk(&mut r, false, 50);
    outcome(
        mnb <= 1e-10 && metrics == 0 && topk == 0,
        format!("mnb max |diff| {mnb:.1e}; metrics mismatches {metrics}/1000 sets; top-k mismatches {topk}/100 queries"),
    )
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Outcome {
    let mut r = rng(6);
    let (mut self_err, mut sym_err, mut scale_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut disjoint_ok = true;
    for _ in 0..2000 {
        let dim = r.random_range(1..50);
        let a = random_sparse(&mut r, dim, 0.5, 10.0);
        let b = random_sparse(&mut r, dim, 0.5, 10.0);
        if a.norm() == 0.0 || b.norm() == 0.0 {
            continue;
        }
        self_err = self_err.max((cosine(&a, &a).unwrap() - 1.0).abs());
        sym_err = sym_err.max((cosine(&a, &b).unwrap() - cosine(&b, &a).unwrap()).abs());
        for c in [1e-6, 1.0, 1e6] {
            scale_err = scale_err.max((cosine(&a.scaled(c), &b).unwrap() - cosine(&a, &b).unwrap()).abs());
        }
        // Split a's support in two halves: disjoint by construction.
        let (lo, hi): (Vec<_>, Vec<_>) = a.iter().partition(|&(i, _)| (i as usize) < dim / 2);
        if !lo.is_empty() && !hi.is_empty() {
            let x = SparseVector::from_pairs(dim, lo).unwrap();
            let y = SparseVector::from_pairs(dim, hi).unwrap();
            disjoint_ok &= cosine(&x, &y).unwrap() == 0.0;
        }
    }
    let ok = self_err <= 1e-9 && sym_err <= 1e-12 && scale_err <= 1e-9 && disjoint_ok;
    outcome(
        ok,
        format!("self {self_err:.1e}, symmetry {sym_err:.1e}, scale {scale_err:.1e}, disjoint exact zero {disjoint_ok}"),
    )
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Outcome {
    let mut r = rng(7);
    // 1,000 tokens over 40 docs and 30 terms.
    let mut rows = vec![vec![0.0; 30]; 40];
    for t in 0..1000 {
        let d = if t < 40 { t } else { r.random_range(0..40) };
        rows[d][r.random_range(0..30)] += 1.0;
    }
    let counts: Vec<SparseVector> = rows.iter().map(|x| SparseVector::from_dense(x)).collect();
    let params = LdaParams { k: 5, iterations: 100, seed: 1, ..Default::default() };
    let mut sampler = GibbsSampler::new(&counts, 30, &params).unwrap();
    let mut conserved = sampler.total_tokens() == 1000 && sampler.check_counts().is_ok();
    for _ in 0..100 {
        sampler.sweep();
        conserved &= sampler.check_counts().is_ok();
    }
    let model = sampler.finish();
    conserved &= model.check_counts().is_ok();
    let perp = log_perplexity(&model, &counts).unwrap();

    // Independent per-word log-likelihood from theta and phi.
    let mut ll = 0.0;
    for (d, row) in rows.iter().enumerate() {
        for (w, &x) in row.iter().enumerate() {
            if x > 0.0 {
                let p: f64 = (0..model.k).map(|k| model.theta_row(d)[k] * model.phi_row(k)[w]).sum();
                ll += x * p.ln();
            }
        }
    }
    ll /= 1000.0;
    let perp_ok = perp.log_likelihood < 0.0 && perp.perplexity > 1.0 && (perp.log_likelihood - ll).abs() < 1e-9;

    // Two themes over disjoint five-word vocabularies.
    let mut docs = Vec::new();
    for d in 0..20 {
        let base = if d % 2 == 0 { 0 } else { 5 };
        let mut row = vec![0.0; 10];
        for _ in 0..30 {
            row[base + r.random_range(0..5)] += 1.0;
        }
        docs.push(SparseVector::from_dense(&row));
    }
    let model2 = fit_lda(&docs, 10, &LdaParams { k: 2, iterations: 200, seed: 1, ..Default::default() }).unwrap();
    let mut themes = BTreeSet::new();
    let mut pure = true;
    for t in 0..2 {
        let top: BTreeSet<usize> = topic_top_words(&model2, t, 5).unwrap().iter().map(|&(w, _)| w as usize / 5).collect();
        pure &= top.len() == 1;
        themes.extend(top);
    }
    pure &= themes.len() == 2;
    let p2 = log_perplexity(&model2, &docs).unwrap();
    let perp_ok = perp_ok && p2.log_likelihood < 0.0 && p2.perplexity > 1.0;

    outcome(
        conserved && pure && perp_ok,
        format!(
            "counts conserved over 100 sweeps {conserved}; two-theme purity {}; L={:.4} exp(-L)={:.3} (oracle L={ll:.4})",
            if pure { "1.0" } else { "<1.0" },
            perp.log_likelihood,
            perp.perplexity
        ),
    )
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Outcome {
    let mut r = rng(8);
    let mut between = true;
    let mut ratio_ok = true;
    let mut majority_same = true;
    let mut generated = 0;
    for trial in 0..30 {
        let n = r.random_range(40..120);
        let dim = r.random_range(2..12);
        let xs: Vec<SparseVector> = (0..n).map(|_| random_sparse(&mut r, dim, 0.6, 5.0)).collect();
        let minority_share = r.random_range(0.1..0.35);
        let ys: Vec<bool> = (0..n).map(|i| (i as f64) < minority_share * n as f64).collect();
        let target = [0.5, 0.8, 1.0][trial % 3];
        let params = SmoteParams { k: 3, target_ratio: target, seed: trial as u64 };
        let before: Vec<(Vec<u32>, Vec<u64>)> =
            xs.iter().map(|x| (x.indices().to_vec(), x.values().iter().map(|v| v.to_bits()).collect())).collect();
        let (ax, ay) = smote(&xs, &ys, &params).unwrap();
        for i in 0..n {
            if !ys[i] {
                let after = (ax[i].indices().to_vec(), ax[i].values().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
                majority_same &= after == before[i] && !ay[i];
            }
        }
        let minority: Vec<&SparseVector> = (0..n).filter(|&i| ys[i]).map(|i| &xs[i]).collect();
        let majority = n - minority.len();
        let min_after = ay.iter().filter(|&&y| y).count();
        ratio_ok &= min_after as f64 / majority as f64 >= target;
        // Synthetic row g grows from minority row g mod m toward one of the others.
        for (g, s) in ax[n..].iter().enumerate() {
            generated += 1;
            let base = minority[g % minority.len()].to_dense();
            let s = s.to_dense();
            between &= minority.iter().enumerate().any(|(j, other)| {
                j != g % minority.len()
                    && other
                        .to_dense()
                        .iter()
                        .zip(&base)
                        .zip(&s)
                        .all(|((&o, &b), &x)| o.min(b) <= x && x <= o.max(b))
            });
        }
    }
    outcome(
        between && ratio_ok && majority_same,
        format!("{generated} synthetic rows between parents {between}; ratio >= target {ratio_ok}; majority untouched {majority_same}"),
    )
}

// ---------------------------------------------------------------- 9, 10

fn small_config(dir: &std::path::Path, corpus: &std::path::Path, name: &str) -> RunConfig {
    let mut cfg = RunConfig::default().with_seed(1);
    cfg.paths.corpus = Some(corpus.to_path_buf());
    cfg.paths.archive = Some(dir.join(name));
    cfg.paths.output_dir = Some(dir.to_path_buf());
    cfg
}

fn predictions_bits(a: &ModelArchive, texts: &[String]) -> Vec<Vec<u64>> {
    texts
        .iter()
        .map(|t| a.classify_text(t).map(|(p, _)| p.scores.iter().map(|s| s.to_bits()).collect()).unwrap_or_default())
        .collect()
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let records = synth::generate(&SynthConfig { n_records: 2000, seed: 9, ..Default::default() }).unwrap();
    let path = dir.path().join("corpus.jsonl");
    synth::write_jsonl(&records, &path).unwrap();
    let probe: Vec<String> = synth::generate(&SynthConfig { n_records: 500, seed: 99, ..Default::default() })
        .unwrap()
        .into_iter()
        .map(|r| r.abstract_text)
        .collect();

    let a_cfg = small_config(dir.path(), &path, "a.dsa");
    let b_cfg = small_config(dir.path(), &path, "b.dsa");
    app::cmd_train(&a_cfg).unwrap();
    app::cmd_train(&b_cfg).unwrap();
    let a = load_archive(&dir.path().join("a.dsa")).unwrap();
    let b = load_archive(&dir.path().join("b.dsa")).unwrap();
    let pa = predictions_bits(&a, &probe);
    let runs_agree = pa == predictions_bits(&b, &probe) && pa.iter().filter(|p| !p.is_empty()).count() > 450;

    // In-memory model against its saved and reloaded copy.
    let corpus = app::load_corpus(&a_cfg).unwrap();
    let mem = train_archive(&a_cfg, &corpus, None).unwrap();
    let saved = dir.path().join("mem.dsa");
    docsift::app::save_archive(&mem, &saved).unwrap();
    let back = load_archive(&saved).unwrap();
    let preds_kept = predictions_bits(&mem, &probe) == predictions_bits(&back, &probe) && pa == predictions_bits(&mem, &probe);
    let mut ranks_kept = true;
    for id in mem.index.ids().iter().step_by(40) {
        let q = Query::Id(id.clone());
        ranks_kept &= mem.recommend(&q, 20, &Filters::default()).unwrap() == back.recommend(&q, 20, &Filters::default()).unwrap();
    }
    for t in probe.iter().take(25) {
        let q = Query::Text(t.clone());
        ranks_kept &= mem.recommend(&q, 20, &Filters::default()).ok() == back.recommend(&q, 20, &Filters::default()).ok();
    }
    outcome(
        runs_agree && preds_kept && ranks_kept,
        format!("two runs bit-identical on 500 probes {runs_agree}; round trip keeps predictions {preds_kept}, rankings {ranks_kept}"),
    )
}

fn criterion_10() -> Outcome {
    let cfg = RunConfig::default().with_seed(1);
    let default_k = cfg.recommend.k;
    let corpus = synth_corpus(2000, 10);
    let a = train_archive(&cfg, &corpus, None::<&EmbeddingSet>).unwrap();
    let mut self_hits = 0;
    let mut profile_same = 0;
    let checked = 100;
    for rec in corpus.records.iter().step_by(corpus.len() / checked).take(checked) {
        let list = a.recommend(&Query::Text(rec.abstract_text.clone()), default_k, &Filters::default()).unwrap();
        if list.results.first().is_some_and(|r| r.id == rec.id) && list.results.len() == default_k {
            self_hits += 1;
        }
        let by_id = a.recommend(&Query::Id(rec.id.clone()), default_k, &Filters::default()).unwrap();
        let by_profile = a.recommend(&Query::Profile(vec![rec.id.clone()]), default_k, &Filters::default()).unwrap();
        if by_id.results == by_profile.results {
            profile_same += 1;
        }
    }
    outcome(
        default_k == 20 && self_hits == checked && profile_same == checked,
        format!("default k={default_k}; self-retrieval at rank 1 {self_hits}/{checked}; profile==id {profile_same}/{checked}"),
    )
}

fn main() {
    let only: Option<BTreeSet<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |c: u32| only.as_ref().is_none_or(|o| o.contains(&c));
    let names = [
        "desk-scale tfidf/logreg ordering",
        "dense below tfidf/logreg",
        "topic-augmented tfidf",
        "logreg gradient vs finite differences",
        "mnb, metrics and top-k oracles",
        "cosine properties",
        "lda gates",
        "smote gate",
        "determinism and persistence",
        "recommendation sanity",
    ];
    let desk = (wanted(1) || wanted(2) || wanted(3)).then(desk_run);
    let mut unexpected = 0;
    for c in 1..=10u32 {
        if !wanted(c) {
            continue;
        }
        let t = Instant::now();
        let o = match c {
            1 => criterion_1(desk.as_ref().unwrap()),
            2 => criterion_2(desk.as_ref().unwrap()),
            3 => criterion_3(desk.as_ref().unwrap()),
            4 => criterion_4(),
            5 => criterion_5(),
            6 => criterion_6(),
            7 => criterion_7(),
            8 => criterion_8(),
            9 => criterion_9(),
            _ => criterion_10(),
        };
        let known = KNOWN_FAILURES.contains(&c);
        let status = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        if o.pass == known {
            unexpected += 1;
        }
        println!("criterion {c:>2} {status:<12} {:<40} {} [{:.1}s]", names[c as usize - 1], o.detail, t.elapsed().as_secs_f64());
    }
    if unexpected > 0 {
        eprintln!("{unexpected} criterion result(s) differ from expectations");
        std::process::exit(1);
    }
}
