//! K-fold splitting and exhaustive hyperparameter grid search.

use std::collections::BTreeMap;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifiers::{ovr_fit, Algorithm, AlgorithmConfig, OvrOptions};
use crate::error::{Error, Result};
use crate::evaluation::compute_metrics;
use crate::features::{Fingerprint, SparseVector};

pub const DEFAULT_FOLDS: usize = 10;

/// `(train, validation)` index lists, each sorted. Validation folds
/// partition `0..n` and differ in size by at most one. With `strata`, each
/// stratum is spread evenly across folds; a stratum smaller than
/// `n_folds` disables stratification with a warning.
pub fn kfold(n: usize, n_folds: usize, seed: u64, strata: Option<&[String]>) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if n_folds < 2 || n_folds > n {
        return Err(Error::InvalidParameter(format!("need 2 <= folds <= samples, got {n_folds} folds for {n} samples")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut stratified = false;
    if let Some(strata) = strata {
        if strata.len() != n {
            return Err(Error::InvalidParameter("strata length differs from sample count".into()));
        }
        let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, s) in strata.iter().enumerate() {
            groups.entry(s).or_default().push(i);
        }
        match groups.iter().find(|(_, g)| g.len() < n_folds) {
            Some((label, g)) => warn!(
                "class {label} has {} member(s), fewer than {n_folds} folds; falling back to unstratified folds",
                g.len()
            ),
            None => {
                for g in groups.values_mut() {
                    g.shuffle(&mut rng);
                    order.extend_from_slice(g);
                }
                stratified = true;
            }
        }
    }
    if !stratified {
        order = (0..n).collect();
        order.shuffle(&mut rng);
    }
    // dealing round-robin keeps each stratum's share per fold within one
    let mut folds = vec![Vec::new(); n_folds];
    for (pos, &i) in order.iter().enumerate() {
        folds[pos % n_folds].push(i);
    }
    Ok(folds
        .into_iter()
        .map(|mut val| {
            val.sort_unstable();
            let mut in_val = vec![false; n];
            val.iter().for_each(|&i| in_val[i] = true);
            let train = (0..n).filter(|&i| !in_val[i]).collect();
            (train, val)
        })
        .collect())
}

/// The searched hyperparameter values per algorithm.
pub fn default_grid(algorithm: Algorithm) -> Vec<(String, Vec<f64>)> {
    let g = |name: &str, v: &[f64]| (name.to_string(), v.to_vec());
    match algorithm {
        Algorithm::Logreg | Algorithm::LinearSvm => vec![g("l2", &[1e-4, 1e-3, 1e-2])],
        Algorithm::Mnb => vec![g("alpha", &[0.1, 0.5, 1.0])],
        Algorithm::RandomForest => vec![g("n_trees", &[50.0, 100.0]), g("max_depth", &[8.0, 16.0])],
        Algorithm::Gbrt => vec![g("n_rounds", &[50.0, 100.0]), g("shrinkage", &[0.1])],
        Algorithm::Knn => vec![g("k", &[5.0, 15.0, 31.0])],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Hyperparameters not named in `params` keep these values.
    pub base: AlgorithmConfig,
    /// Cartesian grid; the first parameter varies slowest.
    pub params: Vec<(String, Vec<f64>)>,
    pub folds: usize,
    pub seed: u64,
    pub stratify: bool,
}

impl GridSpec {
    pub fn with_defaults(base: AlgorithmConfig, seed: u64) -> Self {
        GridSpec {
            params: default_grid(base.algorithm()),
            base,
            folds: DEFAULT_FOLDS,
            seed,
            stratify: true,
        }
    }

    pub fn cells(&self) -> Result<Vec<(Vec<(String, f64)>, AlgorithmConfig)>> {
        if self.params.iter().any(|(_, v)| v.is_empty()) {
            return Err(Error::InvalidParameter("grid has an empty value list".into()));
        }
        let mut cells = vec![(Vec::new(), self.base.clone())];
        for (name, values) in &self.params {
            let mut next = Vec::with_capacity(cells.len() * values.len());
            for (assign, config) in &cells {
                for &v in values {
                    let mut a: Vec<(String, f64)> = assign.clone();
                    a.push((name.clone(), v));
                    next.push((a, config.with_param(name, v)?));
                }
            }
            cells = next;
        }
        Ok(cells)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub params: Vec<(String, f64)>,
    pub config: AlgorithmConfig,
    pub fold_scores: Vec<f64>,
    /// Mean validation macro-F1; `None` when any fold failed.
    pub mean_score: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: AlgorithmConfig,
    pub best_params: Vec<(String, f64)>,
    pub cells: Vec<GridCell>,
    pub failed_cells: usize,
}

/// Scores every grid cell by mean validation macro-F1 over `spec.folds`
/// folds. Ties go to the earlier cell; failed cells are recorded, not fatal.
pub fn grid_search(
    spec: &GridSpec,
    xs: &[SparseVector],
    ys: &[Vec<String>],
    label_space: &[String],
    strata: Option<&[String]>,
    options: &OvrOptions,
) -> Result<GridResult> {
    let cells = spec.cells()?;
    let folds = kfold(xs.len(), spec.folds, spec.seed, if spec.stratify { strata } else { None })?;
    let fp = Fingerprint("grid".into());
    let mut out = Vec::with_capacity(cells.len());
    for (params, config) in cells {
        let mut scores = Vec::with_capacity(folds.len());
        let mut error = None;
        for (train, val) in &folds {
            let tx: Vec<SparseVector> = train.iter().map(|&i| xs[i].clone()).collect();
            let ty: Vec<Vec<String>> = train.iter().map(|&i| ys[i].clone()).collect();
            let run = || -> Result<f64> {
                let model = ovr_fit(&config, &tx, &ty, label_space, &fp, options)?;
                let pred: Vec<Vec<String>> = val
                    .iter()
                    .map(|&i| model.predict(&xs[i], &fp).map(|p| model.label_names(&p)))
                    .collect::<Result<_>>()?;
                let gold: Vec<Vec<String>> = val.iter().map(|&i| ys[i].clone()).collect();
                Ok(compute_metrics(&pred, &gold, label_space)?.macro_f1)
            };
            match run() {
                Ok(s) => scores.push(s),
                Err(e) => {
                    warn!("grid cell {params:?} failed: {e}");
                    error = Some(e.to_string());
                    break;
                }
            }
        }
        let mean_score = error.is_none().then(|| scores.iter().sum::<f64>() / scores.len() as f64);
        out.push(GridCell {
            params,
            config,
            fold_scores: scores,
            mean_score,
            error,
        });
    }
    let failed_cells = out.iter().filter(|c| c.mean_score.is_none()).count();
    let mut best: Option<&GridCell> = None;
    for c in &out {
        if let Some(s) = c.mean_score {
            if best.is_none_or(|b| s > b.mean_score.unwrap()) {
                best = Some(c);
            }
        }
    }
    let Some(best) = best else {
        return Err(Error::InvalidParameter(format!("all {} grid cells failed", out.len())));
    };
    Ok(GridResult {
        best: best.config.clone(),
        best_params: best.params.clone(),
        failed_cells,
        cells: out,
    })
}
