//! Binary multinomial naive Bayes over non-negative count-like features.

use serde::{Deserialize, Serialize};

use crate::classifiers::linear::check_binary;
use crate::error::{Error, Result};
use crate::features::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MnbParams {
    pub alpha: f64,
}

impl Default for MnbParams {
    fn default() -> Self {
        MnbParams { alpha: 1.0 }
    }
}

/// Index 0 is the negative class, 1 the positive class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnbModel {
    pub alpha: f64,
    pub log_prior: [f64; 2],
    pub log_likelihood: [Vec<f64>; 2],
}

impl MnbModel {
    pub fn dim(&self) -> usize {
        self.log_likelihood[0].len()
    }

    /// Unnormalized joint log-probabilities `log P(c) + sum_t x_t log P(t|c)`.
    pub fn joint_log(&self, x: &SparseVector) -> [f64; 2] {
        [
            self.log_prior[0] + x.dot_dense(&self.log_likelihood[0]),
            self.log_prior[1] + x.dot_dense(&self.log_likelihood[1]),
        ]
    }

    /// Posterior log-odds `log P(pos|x) - log P(neg|x)`.
    pub fn score(&self, x: &SparseVector) -> f64 {
        let j = self.joint_log(x);
        j[1] - j[0]
    }

    /// `[P(neg|x), P(pos|x)]`.
    pub fn posterior(&self, x: &SparseVector) -> [f64; 2] {
        let j = self.joint_log(x);
        let m = j[0].max(j[1]);
        let e0 = (j[0] - m).exp();
        let e1 = (j[1] - m).exp();
        let z = e0 + e1;
        [e0 / z, e1 / z]
    }
}

pub(crate) fn check_non_negative(xs: &[SparseVector]) -> Result<()> {
    for x in xs {
        if let Some((index, value)) = x.iter().find(|&(_, v)| v < 0.0) {
            return Err(Error::NegativeFeature { index: index as usize, value });
        }
    }
    Ok(())
}

pub fn fit_mnb(xs: &[SparseVector], ys: &[bool], params: &MnbParams) -> Result<MnbModel> {
    let dim = check_binary(xs, ys)?;
    if !(params.alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be > 0, got {}", params.alpha)));
    }
    check_non_negative(xs)?;
    let mut counts = [vec![0.0; dim], vec![0.0; dim]];
    let mut docs = [0usize; 2];
    for (x, &y) in xs.iter().zip(ys) {
        let c = y as usize;
        docs[c] += 1;
        for (j, v) in x.iter() {
            counts[c][j as usize] += v;
        }
    }
    let n = xs.len() as f64;
    let v = dim as f64;
    let likelihood = |c: &Vec<f64>| {
        let total: f64 = c.iter().sum();
        let denom = (total + params.alpha * v).ln();
        c.iter().map(|&k| (k + params.alpha).ln() - denom).collect::<Vec<f64>>()
    };
    Ok(MnbModel {
        alpha: params.alpha,
        log_prior: [(docs[0] as f64 / n).ln(), (docs[1] as f64 / n).ln()],
        log_likelihood: [likelihood(&counts[0]), likelihood(&counts[1])],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sv(v: &[f64]) -> SparseVector {
        SparseVector::from_dense(v)
    }

    #[test]
    fn closed_form_likelihood() {
        // vocabulary {a, b}; positive class has the single doc "a a"
        let xs = vec![sv(&[2.0, 0.0]), sv(&[0.0, 1.0])];
        let m = fit_mnb(&xs, &[true, false], &MnbParams { alpha: 1.0 }).unwrap();
        assert!((m.log_likelihood[1][0].exp() - 0.75).abs() < 1e-15);
        assert!((m.log_likelihood[1][1].exp() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn likelihoods_normalize_and_are_log_probs() {
        let xs = vec![sv(&[2.0, 0.0, 1.0]), sv(&[0.0, 1.0, 3.0]), sv(&[1.0, 1.0, 0.0])];
        let m = fit_mnb(&xs, &[true, false, true], &MnbParams { alpha: 0.5 }).unwrap();
        for c in 0..2 {
            let s: f64 = m.log_likelihood[c].iter().map(|l| l.exp()).sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(m.log_likelihood[c].iter().all(|&l| l <= 0.0));
        }
    }

    #[test]
    fn mirrored_data_mirrors_posteriors() {
        let xs = vec![sv(&[3.0, 1.0]), sv(&[2.0, 0.0]), sv(&[0.0, 2.0])];
        let ys = [true, true, false];
        let mirrored: Vec<SparseVector> = xs.iter().map(|x| sv(&[x.get(1), x.get(0)])).collect();
        let flipped: Vec<bool> = ys.iter().map(|y| !y).collect();
        let a = fit_mnb(&xs, &ys, &MnbParams::default()).unwrap();
        let b = fit_mnb(&mirrored, &flipped, &MnbParams::default()).unwrap();
        for q in [[1.0, 0.0], [0.0, 4.0], [2.0, 3.0]] {
            let pa = a.posterior(&sv(&q));
            let pb = b.posterior(&sv(&[q[1], q[0]]));
            assert!((pa[0] - pb[1]).abs() < 1e-12 && (pa[1] - pb[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_features_rejected() {
        let xs = vec![sv(&[1.0, -0.5]), sv(&[1.0, 0.0])];
        assert!(matches!(
            fit_mnb(&xs, &[true, false], &MnbParams::default()),
            Err(Error::NegativeFeature { index: 1, .. })
        ));
        let ok = vec![sv(&[1.0, 0.5]), sv(&[1.0, 0.0])];
        assert!(fit_mnb(&ok, &[true, false], &MnbParams { alpha: 0.0 }).is_err());
    }

    /// Posterior by direct products of probabilities, no logs.
    fn brute_posterior(xs: &[SparseVector], ys: &[bool], alpha: f64, q: &[f64]) -> f64 {
        let v = q.len();
        let mut joint = [0.0; 2];
        for c in 0..2 {
            let members: Vec<&SparseVector> = xs.iter().zip(ys).filter(|(_, &y)| y as usize == c).map(|(x, _)| x).collect();
            let prior = members.len() as f64 / xs.len() as f64;
            let total: f64 = members.iter().map(|x| x.sum()).sum();
            let mut p = prior;
            for (t, &k) in q.iter().enumerate() {
                let count: f64 = members.iter().map(|x| x.get(t as u32)).sum();
                let pt = (count + alpha) / (total + alpha * v as f64);
                for _ in 0..k as usize {
                    p *= pt;
                }
            }
            joint[c] = p;
        }
        joint[1] / (joint[0] + joint[1])
    }

    #[test]
    fn log_space_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let v = rng.random_range(2..=10);
            let n = rng.random_range(2..=20);
            let xs: Vec<SparseVector> = (0..n)
                .map(|_| sv(&(0..v).map(|_| rng.random_range(0..4) as f64).collect::<Vec<_>>()))
                .collect();
            let mut ys: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
            ys[0] = true;
            ys[1] = false;
            let alpha = rng.random_range(0.1..2.0);
            let m = fit_mnb(&xs, &ys, &MnbParams { alpha }).unwrap();
            let q: Vec<f64> = (0..v).map(|_| rng.random_range(0..4) as f64).collect();
            let p = m.posterior(&sv(&q));
            assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
            assert!((p[1] - brute_posterior(&xs, &ys, alpha, &q)).abs() < 1e-10);
        }
    }
}
