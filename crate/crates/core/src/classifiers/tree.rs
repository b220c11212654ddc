//! CART trees over a document-frequency-ranked feature pool, bagged into
//! random forests or boosted on logistic-loss gradients.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifiers::linear::{check_binary, sigmoid};
use crate::error::{Error, Result};
use crate::features::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { value: f64 },
    /// `x[feature] <= threshold` goes left.
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &SparseVector) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split { feature, threshold, left, right } => {
                    at = if x.get(*feature) <= *threshold { *left } else { *right } as usize;
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

/// Features ranked by document frequency (ties to the lower index),
/// truncated to `size` and returned in ascending index order.
pub fn feature_pool(xs: &[SparseVector], size: usize) -> Vec<u32> {
    let dim = xs.first().map_or(0, |x| x.dim());
    let mut df = vec![0u32; dim];
    for x in xs {
        for &j in x.indices() {
            df[j as usize] += 1;
        }
    }
    let mut ranked: Vec<u32> = (0..dim as u32).filter(|&j| df[j as usize] > 0).collect();
    ranked.sort_by(|&a, &b| df[b as usize].cmp(&df[a as usize]).then(a.cmp(&b)));
    ranked.truncate(size);
    ranked.sort_unstable();
    ranked
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Criterion {
    /// Per-sample stat is the 0/1 label; leaves vote the majority.
    Gini,
    /// Per-sample stats are (gradient, hessian); leaves take a Newton step.
    SquaredError,
}

#[derive(Debug, Clone, Copy, Default)]
struct Stat {
    n: f64,
    s1: f64,
    s2: f64,
}

impl Stat {
    fn add(&mut self, s1: f64, s2: f64) {
        self.n += 1.0;
        self.s1 += s1;
        self.s2 += s2;
    }

    fn minus(self, o: Stat) -> Stat {
        Stat {
            n: self.n - o.n,
            s1: self.s1 - o.s1,
            s2: self.s2 - o.s2,
        }
    }
}

struct Entry {
    value: f64,
    stat: Stat,
}

struct Builder<'a> {
    /// Rows restricted to pool features, indexed by pool position.
    rows: Vec<Vec<(u32, f64)>>,
    pool: &'a [u32],
    targets: &'a [(f64, f64)],
    criterion: Criterion,
    max_depth: usize,
    min_leaf: usize,
    /// Candidate features per node; `None` means the whole pool.
    mtry: Option<usize>,
    slot: Vec<u32>,
    lists: Vec<Vec<(f64, u32)>>,
    nodes: Vec<Node>,
}

impl<'a> Builder<'a> {
    fn new(xs: &[SparseVector], pool: &'a [u32], targets: &'a [(f64, f64)], criterion: Criterion) -> Self {
        let dim = xs.first().map_or(0, |x| x.dim());
        let mut position = vec![u32::MAX; dim];
        for (p, &f) in pool.iter().enumerate() {
            position[f as usize] = p as u32;
        }
        let rows = xs
            .iter()
            .map(|x| {
                x.iter()
                    .filter_map(|(j, v)| {
                        let p = position[j as usize];
                        (p != u32::MAX).then_some((p, v))
                    })
                    .collect()
            })
            .collect();
        Builder {
            rows,
            pool,
            targets,
            criterion,
            max_depth: 0,
            min_leaf: 1,
            mtry: None,
            slot: vec![0; pool.len()],
            lists: Vec::new(),
            nodes: Vec::new(),
        }
    }

    fn impurity(&self, s: Stat) -> f64 {
        if s.n <= 0.0 {
            return 0.0;
        }
        match self.criterion {
            Criterion::Gini => 2.0 * s.s1 * (s.n - s.s1) / s.n,
            // negative of the explained sum of squares
            Criterion::SquaredError => -s.s1 * s.s1 / s.n,
        }
    }

    fn leaf_value(&self, s: Stat) -> f64 {
        match self.criterion {
            Criterion::Gini => {
                if 2.0 * s.s1 > s.n {
                    1.0
                } else {
                    0.0
                }
            }
            Criterion::SquaredError => {
                if s.s2 > 1e-12 {
                    s.s1 / s.s2
                } else {
                    0.0
                }
            }
        }
    }

    fn value_of(&self, row: usize, p: u32) -> f64 {
        let r = &self.rows[row];
        match r.binary_search_by_key(&p, |&(q, _)| q) {
            Ok(i) => r[i].1,
            Err(_) => 0.0,
        }
    }

    fn total(&self, samples: &[u32]) -> Stat {
        let mut s = Stat::default();
        for &i in samples {
            let (a, b) = self.targets[i as usize];
            s.add(a, b);
        }
        s
    }

    fn build(&mut self, samples: Vec<u32>, depth: usize, rng: &mut ChaCha8Rng) -> u32 {
        let total = self.total(&samples);
        let id = self.nodes.len() as u32;
        self.nodes.push(Node::Leaf { value: self.leaf_value(total) });
        let pure = self.criterion == Criterion::Gini && (total.s1 == 0.0 || total.s1 == total.n);
        if depth >= self.max_depth || pure || total.n < 2.0 * self.min_leaf as f64 || self.pool.is_empty() {
            return id;
        }
        let Some((p, threshold)) = self.best_split(&samples, total, rng) else {
            return id;
        };
        let (left, right): (Vec<u32>, Vec<u32>) = samples.iter().partition(|&&i| self.value_of(i as usize, p) <= threshold);
        drop(samples);
        let l = self.build(left, depth + 1, rng);
        let r = self.build(right, depth + 1, rng);
        self.nodes[id as usize] = Node::Split {
            feature: self.pool[p as usize],
            threshold,
            left: l,
            right: r,
        };
        id
    }

    fn best_split(&mut self, samples: &[u32], total: Stat, rng: &mut ChaCha8Rng) -> Option<(u32, f64)> {
        let mut candidates: Vec<u32> = match self.mtry {
            Some(m) if m < self.pool.len() => sample(rng, self.pool.len(), m).into_iter().map(|c| c as u32).collect(),
            _ => (0..self.pool.len() as u32).collect(),
        };
        candidates.sort_unstable();
        if self.lists.len() < candidates.len() {
            self.lists.resize_with(candidates.len(), Vec::new);
        }
        for (c, &p) in candidates.iter().enumerate() {
            self.slot[p as usize] = c as u32 + 1;
        }
        for &i in samples {
            for &(p, v) in &self.rows[i as usize] {
                let s = self.slot[p as usize];
                if s != 0 {
                    self.lists[s as usize - 1].push((v, i));
                }
            }
        }
        for &p in &candidates {
            self.slot[p as usize] = 0;
        }

        let parent = self.impurity(total);
        let min_leaf = self.min_leaf as f64;
        let mut best: Option<(f64, u32, f64)> = None;
        let mut entries: Vec<Entry> = Vec::new();
        for (c, &p) in candidates.iter().enumerate() {
            let list = std::mem::take(&mut self.lists[c]);
            if list.is_empty() {
                self.lists[c] = list;
                continue;
            }
            entries.clear();
            let mut nonzero = Stat::default();
            for &(v, i) in &list {
                let (a, b) = self.targets[i as usize];
                nonzero.add(a, b);
                entries.push(Entry {
                    value: v,
                    stat: Stat { n: 1.0, s1: a, s2: b },
                });
            }
            let zeros = total.minus(nonzero);
            if zeros.n > 0.5 {
                entries.push(Entry { value: 0.0, stat: zeros });
            }
            entries.sort_by(|a, b| a.value.total_cmp(&b.value));
            let mut left = Stat::default();
            for w in 0..entries.len() - 1 {
                let e = &entries[w];
                left.n += e.stat.n;
                left.s1 += e.stat.s1;
                left.s2 += e.stat.s2;
                let next = entries[w + 1].value;
                if next <= e.value {
                    continue;
                }
                let right = total.minus(left);
                if left.n < min_leaf || right.n < min_leaf {
                    continue;
                }
                let gain = parent - self.impurity(left) - self.impurity(right);
                if gain > 1e-12 && best.is_none_or(|(g, _, _)| gain > g) {
                    let mid = e.value + (next - e.value) / 2.0;
                    best = Some((gain, p, mid));
                }
            }
            let mut list = list;
            list.clear();
            self.lists[c] = list;
        }
        best.map(|(_, p, t)| (p, t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Per-node candidates are `ceil(ratio * sqrt(pool size))`.
    pub feature_subsample: f64,
    pub feature_pool: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: 16,
            min_leaf: 1,
            feature_subsample: 1.0,
            feature_pool: 2000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
}

impl ForestModel {
    /// Mean of the trees' 0/1 votes.
    pub fn score(&self, x: &SparseVector) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

pub fn fit_random_forest(xs: &[SparseVector], ys: &[bool], params: &ForestParams) -> Result<ForestModel> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::InvalidParameter("need equal, non-zero numbers of rows and labels".into()));
    }
    if params.n_trees == 0 || !(params.feature_subsample > 0.0) || params.min_leaf == 0 {
        return Err(Error::InvalidParameter(format!("bad forest parameters {params:?}")));
    }
    let pool = feature_pool(xs, params.feature_pool);
    let mtry = ((params.feature_subsample * (pool.len() as f64).sqrt()).ceil() as usize).clamp(1, pool.len().max(1));
    let targets: Vec<(f64, f64)> = ys.iter().map(|&y| (if y { 1.0 } else { 0.0 }, 0.0)).collect();
    let mut builder = Builder::new(xs, &pool, &targets, Criterion::Gini);
    builder.max_depth = params.max_depth;
    builder.min_leaf = params.min_leaf;
    builder.mtry = Some(mtry);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = xs.len();
    let mut trees = Vec::with_capacity(params.n_trees);
    for _ in 0..params.n_trees {
        let boot: Vec<u32> = (0..n).map(|_| rng.random_range(0..n as u32)).collect();
        builder.nodes = Vec::new();
        builder.build(boot, 0, &mut rng);
        trees.push(Tree {
            nodes: std::mem::take(&mut builder.nodes),
        });
    }
    Ok(ForestModel { trees })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbrtParams {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub shrinkage: f64,
    pub min_leaf: usize,
    pub feature_pool: usize,
    /// Boosting uses every row and every pool feature, so the seed has no
    /// effect; kept so all algorithms share one parameter surface.
    pub seed: u64,
}

impl Default for GbrtParams {
    fn default() -> Self {
        GbrtParams {
            n_rounds: 100,
            max_depth: 3,
            shrinkage: 0.1,
            min_leaf: 1,
            feature_pool: 2000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbrtModel {
    pub init: f64,
    pub shrinkage: f64,
    pub trees: Vec<Tree>,
    /// Mean training logistic loss before boosting and after each round.
    pub trace: Vec<f64>,
}

impl GbrtModel {
    pub fn raw(&self, x: &SparseVector) -> f64 {
        self.init + self.shrinkage * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn score(&self, x: &SparseVector) -> f64 {
        sigmoid(self.raw(x))
    }
}

fn mean_log_loss(f: &[f64], ys: &[bool]) -> f64 {
    f.iter()
        .zip(ys)
        .map(|(&m, &y)| crate::classifiers::linear::LinearLoss::Logistic.value(m, y))
        .sum::<f64>()
        / f.len() as f64
}

pub fn fit_gbrt(xs: &[SparseVector], ys: &[bool], params: &GbrtParams) -> Result<GbrtModel> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::InvalidParameter("need equal, non-zero numbers of rows and labels".into()));
    }
    if params.n_rounds == 0 || !(params.shrinkage > 0.0 && params.shrinkage <= 1.0) || params.min_leaf == 0 {
        return Err(Error::InvalidParameter(format!("bad boosting parameters {params:?}")));
    }
    match check_binary(xs, ys) {
        Ok(_) => {}
        Err(Error::SingleClass) => {}
        Err(e) => return Err(e),
    }
    if ys.iter().all(|&y| y == ys[0]) {
        // single class: a constant model at the clamped base rate
        let rate: f64 = if ys[0] { 1.0 - 1e-6 } else { 1e-6 };
        let init = (rate / (1.0 - rate)).ln();
        let f = vec![init; xs.len()];
        return Ok(GbrtModel {
            init,
            shrinkage: params.shrinkage,
            trees: vec![Tree { nodes: vec![Node::Leaf { value: 0.0 }] }],
            trace: vec![mean_log_loss(&f, ys)],
        });
    }
    let n = xs.len();
    let pos = ys.iter().filter(|&&y| y).count() as f64;
    let init = (pos / (n as f64 - pos)).ln();
    let pool = feature_pool(xs, params.feature_pool);
    let mut f = vec![init; n];
    let mut trace = vec![mean_log_loss(&f, ys)];
    let mut trees = Vec::with_capacity(params.n_rounds);
    let mut targets = vec![(0.0, 0.0); n];
    let mut rows: Option<Vec<Vec<(u32, f64)>>> = None;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    for _ in 0..params.n_rounds {
        for i in 0..n {
            let p = sigmoid(f[i]);
            targets[i] = ((ys[i] as u8 as f64) - p, p * (1.0 - p));
        }
        let mut builder = Builder::new_with_rows(rows.take(), xs, &pool, &targets, Criterion::SquaredError);
        builder.max_depth = params.max_depth;
        builder.min_leaf = params.min_leaf;
        builder.build((0..n as u32).collect(), 0, &mut rng);
        let tree = Tree {
            nodes: std::mem::take(&mut builder.nodes),
        };
        rows = Some(builder.rows);
        for (i, x) in xs.iter().enumerate() {
            f[i] += params.shrinkage * tree.predict(x);
        }
        trace.push(mean_log_loss(&f, ys));
        trees.push(tree);
    }
    Ok(GbrtModel {
        init,
        shrinkage: params.shrinkage,
        trees,
        trace,
    })
}

impl<'a> Builder<'a> {
    /// Reuses pool-restricted rows from a previous round when available.
    fn new_with_rows(
        rows: Option<Vec<Vec<(u32, f64)>>>,
        xs: &[SparseVector],
        pool: &'a [u32],
        targets: &'a [(f64, f64)],
        criterion: Criterion,
    ) -> Self {
        match rows {
            Some(rows) => Builder {
                rows,
                pool,
                targets,
                criterion,
                max_depth: 0,
                min_leaf: 1,
                mtry: None,
                slot: vec![0; pool.len()],
                lists: Vec::new(),
                nodes: Vec::new(),
            },
            None => Builder::new(xs, pool, targets, criterion),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(v: &[f64]) -> SparseVector {
        SparseVector::from_dense(v)
    }

    /// Feature 0 decides the label; feature 1 is noise.
    fn toy() -> (Vec<SparseVector>, Vec<bool>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..20 {
            let y = i % 2 == 0;
            xs.push(sv(&[if y { 1.0 + (i % 3) as f64 } else { 0.0 }, (i % 5) as f64]));
            ys.push(y);
        }
        (xs, ys)
    }

    #[test]
    fn depth_zero_forest_votes_bootstrap_majority() {
        let xs: Vec<SparseVector> = (0..9).map(|i| sv(&[i as f64])).collect();
        let ys: Vec<bool> = (0..9).map(|i| i < 3).collect();
        let params = ForestParams { n_trees: 15, max_depth: 0, ..Default::default() };
        let m = fit_random_forest(&xs, &ys, &params).unwrap();
        // replay the bootstrap draws to get each tree's expected majority
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        for t in &m.trees {
            let boot: Vec<u32> = (0..9).map(|_| rng.random_range(0..9u32)).collect();
            let pos = boot.iter().filter(|&&i| ys[i as usize]).count();
            let expect = if 2 * pos > boot.len() { 1.0 } else { 0.0 };
            assert_eq!(t.nodes, vec![Node::Leaf { value: expect }]);
        }
    }

    #[test]
    fn forest_fits_pure_split() {
        let (xs, ys) = toy();
        let m = fit_random_forest(&xs, &ys, &ForestParams { n_trees: 10, ..Default::default() }).unwrap();
        let acc = xs.iter().zip(&ys).filter(|(x, &y)| (m.score(x) > 0.5) == y).count();
        assert_eq!(acc, xs.len());
    }

    #[test]
    fn forest_is_deterministic() {
        let (xs, ys) = toy();
        let p = ForestParams { n_trees: 5, feature_subsample: 0.5, ..Default::default() };
        assert_eq!(fit_random_forest(&xs, &ys, &p).unwrap(), fit_random_forest(&xs, &ys, &p).unwrap());
    }

    #[test]
    fn single_class_forest_is_valid() {
        let xs = vec![sv(&[1.0]), sv(&[2.0])];
        let m = fit_random_forest(&xs, &[true, true], &ForestParams { n_trees: 2, ..Default::default() }).unwrap();
        assert_eq!(m.score(&xs[0]), 1.0);
        assert!(m.trees.iter().all(|t| t.n_leaves() == 1));
    }

    #[test]
    fn gbrt_balanced_prior_is_zero() {
        let (xs, ys) = toy();
        let m = fit_gbrt(&xs, &ys, &GbrtParams { n_rounds: 1, ..Default::default() }).unwrap();
        assert_eq!(m.init, 0.0);
    }

    #[test]
    fn gbrt_loss_non_increasing() {
        let xs: Vec<SparseVector> = (0..40).map(|i| sv(&[(i % 7) as f64, ((i * 3) % 11) as f64])).collect();
        let ys: Vec<bool> = (0..40).map(|i| (i % 7) + ((i * 3) % 11) > 8).collect();
        let m = fit_gbrt(&xs, &ys, &GbrtParams { n_rounds: 30, shrinkage: 0.1, ..Default::default() }).unwrap();
        for w in m.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "{:?}", m.trace);
        }
        assert!(m.trace.last().unwrap() < &m.trace[0]);
    }

    #[test]
    fn gbrt_single_deep_round_fits_exactly() {
        let (xs, ys) = toy();
        let p = GbrtParams { n_rounds: 1, shrinkage: 1.0, max_depth: 32, ..Default::default() };
        let m = fit_gbrt(&xs, &ys, &p).unwrap();
        for (x, &y) in xs.iter().zip(&ys) {
            assert_eq!(m.score(x) > 0.5, y);
        }
    }

    #[test]
    fn split_handles_negative_values_and_zero_group() {
        let xs = vec![sv(&[-2.0]), sv(&[-1.0]), sv(&[0.0]), sv(&[1.0]), sv(&[0.0])];
        let ys = vec![true, true, false, false, false];
        let targets: Vec<(f64, f64)> = ys.iter().map(|&y| (y as u8 as f64, 0.0)).collect();
        let pool = feature_pool(&xs, 10);
        let mut b = Builder::new(&xs, &pool, &targets, Criterion::Gini);
        b.max_depth = 4;
        b.build((0..5).collect(), 0, &mut ChaCha8Rng::seed_from_u64(0));
        let tree = &Tree { nodes: b.nodes };
        assert!(tree.depth() <= 2);
        assert_eq!(tree.predict(&sv(&[-1.5])), 1.0);
        assert_eq!(tree.predict(&sv(&[0.5])), 0.0);
    }

    #[test]
    fn pool_ranks_by_df() {
        let xs = vec![sv(&[1.0, 0.0, 1.0, 1.0]), sv(&[0.0, 0.0, 1.0, 1.0]), sv(&[1.0, 0.0, 0.0, 1.0])];
        assert_eq!(feature_pool(&xs, 2), vec![0, 3]);
        assert_eq!(feature_pool(&xs, 10), vec![0, 2, 3]);
    }
}
