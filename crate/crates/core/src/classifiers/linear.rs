//! Logistic regression and linear SVM trained by seeded mini-batch
//! (sub)gradient descent with L2 regularization.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearParams {
    pub l2: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Step at epoch `t` is `lr / (1 + t * decay)`, divided by the mean
    /// squared row norm so the same `lr` suits counts and unit vectors.
    pub decay: f64,
    pub seed: u64,
}

impl Default for LinearParams {
    fn default() -> Self {
        LinearParams {
            l2: 1e-4,
            lr: 32.0,
            epochs: 30,
            batch_size: 256,
            decay: 0.1,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearLoss {
    Logistic,
    Hinge,
}

impl LinearLoss {
    /// Loss for a margin `m = w.x + b` and a 0/1 label.
    pub fn value(self, m: f64, y: bool) -> f64 {
        match self {
            LinearLoss::Logistic => {
                // log(1 + exp(-s m)) with s = +-1, computed stably
                let z = if y { -m } else { m };
                if z > 0.0 {
                    z + (-z).exp().ln_1p()
                } else {
                    z.exp().ln_1p()
                }
            }
            LinearLoss::Hinge => {
                let s = if y { 1.0 } else { -1.0 };
                (1.0 - s * m).max(0.0)
            }
        }
    }

    /// d loss / d margin (a subgradient for the hinge).
    pub fn derivative(self, m: f64, y: bool) -> f64 {
        match self {
            LinearLoss::Logistic => sigmoid(m) - if y { 1.0 } else { 0.0 },
            LinearLoss::Hinge => {
                let s = if y { 1.0 } else { -1.0 };
                if s * m < 1.0 {
                    -s
                } else {
                    0.0
                }
            }
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub loss: LinearLoss,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub params: LinearParams,
    /// Training objective after each epoch.
    pub trace: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(loss: LinearLoss, dim: usize, params: LinearParams) -> Self {
        LinearModel {
            loss,
            weights: vec![0.0; dim],
            bias: 0.0,
            params,
            trace: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn margin(&self, x: &SparseVector) -> f64 {
        x.dot_dense(&self.weights) + self.bias
    }

    /// Probability for logistic models, raw margin for the SVM.
    pub fn score(&self, x: &SparseVector) -> f64 {
        match self.loss {
            LinearLoss::Logistic => sigmoid(self.margin(x)),
            LinearLoss::Hinge => self.margin(x),
        }
    }
}

/// Mean loss plus `(l2 / 2) ||w||^2` (bias unregularized).
pub fn objective(loss: LinearLoss, weights: &[f64], bias: f64, xs: &[SparseVector], ys: &[bool], l2: f64) -> f64 {
    let data: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, &y)| loss.value(x.dot_dense(weights) + bias, y))
        .sum::<f64>()
        / xs.len() as f64;
    data + 0.5 * l2 * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Data term of the gradient over `batch`: accumulates
/// `mean_i dloss_i * x_i` into `grad` (sparse touches only) and returns the
/// bias component.
fn data_gradient(
    loss: LinearLoss,
    weights: &[f64],
    bias: f64,
    xs: &[SparseVector],
    ys: &[bool],
    batch: &[usize],
    grad: &mut [f64],
    touched: &mut Vec<u32>,
) -> f64 {
    let inv = 1.0 / batch.len() as f64;
    let mut gb = 0.0;
    for &i in batch {
        let x = &xs[i];
        let d = loss.derivative(x.dot_dense(weights) + bias, ys[i]) * inv;
        if d == 0.0 {
            continue;
        }
        gb += d;
        for (j, v) in x.iter() {
            if grad[j as usize] == 0.0 {
                touched.push(j);
            }
            grad[j as usize] += d * v;
        }
    }
    gb
}

/// Full gradient of [`objective`] with respect to `(weights, bias)`.
pub fn gradient(loss: LinearLoss, weights: &[f64], bias: f64, xs: &[SparseVector], ys: &[bool], l2: f64) -> (Vec<f64>, f64) {
    let mut grad = vec![0.0; weights.len()];
    let mut touched = Vec::new();
    let all: Vec<usize> = (0..xs.len()).collect();
    let gb = data_gradient(loss, weights, bias, xs, ys, &all, &mut grad, &mut touched);
    for (g, w) in grad.iter_mut().zip(weights) {
        *g += l2 * w;
    }
    (grad, gb)
}

pub(crate) fn check_binary(xs: &[SparseVector], ys: &[bool]) -> Result<usize> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::InvalidParameter(format!(
            "need equal, non-zero numbers of rows and labels (got {} and {})",
            xs.len(),
            ys.len()
        )));
    }
    let pos = ys.iter().filter(|&&y| y).count();
    if pos == 0 || pos == ys.len() {
        return Err(Error::SingleClass);
    }
    let dim = xs[0].dim();
    if let Some(bad) = xs.iter().find(|x| x.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.dim(),
        });
    }
    Ok(dim)
}

pub fn fit_linear(loss: LinearLoss, xs: &[SparseVector], ys: &[bool], params: &LinearParams) -> Result<LinearModel> {
    let dim = check_binary(xs, ys)?;
    if !(params.lr > 0.0) || params.batch_size == 0 || params.epochs == 0 || params.l2 < 0.0 {
        return Err(Error::InvalidParameter(format!("bad linear model parameters {params:?}")));
    }
    let mut model = LinearModel::zeros(loss, dim, params.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut grad = vec![0.0; dim];
    let mut touched = Vec::new();
    let mean_sq = xs.iter().map(|x| x.values().iter().map(|v| v * v).sum::<f64>()).sum::<f64>() / xs.len() as f64;
    let scale = 1.0 / mean_sq.max(1.0);

    for epoch in 0..params.epochs {
        let step = scale * params.lr / (1.0 + epoch as f64 * params.decay);
        order.shuffle(&mut rng);
        for batch in order.chunks(params.batch_size) {
            let gb = data_gradient(loss, &model.weights, model.bias, xs, ys, batch, &mut grad, &mut touched);
            // w <- w - step * (g_data + l2 w)
            if params.l2 > 0.0 {
                let shrink = 1.0 - step * params.l2;
                model.weights.iter_mut().for_each(|w| *w *= shrink);
            }
            for &j in &touched {
                model.weights[j as usize] -= step * grad[j as usize];
                grad[j as usize] = 0.0;
            }
            touched.clear();
            model.bias -= step * gb;
        }
        let obj = objective(loss, &model.weights, model.bias, xs, ys, params.l2);
        if !obj.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        model.trace.push(obj);
    }
    Ok(model)
}

pub fn fit_logreg(xs: &[SparseVector], ys: &[bool], params: &LinearParams) -> Result<LinearModel> {
    fit_linear(LinearLoss::Logistic, xs, ys, params)
}

pub fn fit_linear_svm(xs: &[SparseVector], ys: &[bool], params: &LinearParams) -> Result<LinearModel> {
    fit_linear(LinearLoss::Hinge, xs, ys, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn sv(v: &[f64]) -> SparseVector {
        SparseVector::from_dense(v)
    }

    #[test]
    fn zero_model_scores_half() {
        let m = LinearModel::zeros(LinearLoss::Logistic, 3, LinearParams::default());
        assert_eq!(m.score(&sv(&[1.0, -2.0, 3.0])), 0.5);
        assert_eq!(m.score(&SparseVector::zeros(3)), 0.5);
    }

    #[test]
    fn logistic_loss_decreases_on_separable_pair() {
        let xs = vec![sv(&[1.0, 0.0]), sv(&[0.0, 1.0])];
        let ys = vec![true, false];
        let params = LinearParams { l2: 0.0, lr: 5.0, epochs: 400, decay: 0.0, ..Default::default() };
        let m = fit_logreg(&xs, &ys, &params).unwrap();
        let stop = m.trace.iter().position(|&l| l < 0.01).expect("loss reaches 0.01");
        for w in m.trace[..=stop].windows(2) {
            assert!(w[1] < w[0], "{} !< {}", w[1], w[0]);
        }
    }

    #[test]
    fn svm_hinge_flat_region() {
        assert_eq!(LinearLoss::Hinge.derivative(1.0, true), 0.0);
        assert_eq!(LinearLoss::Hinge.derivative(3.0, true), 0.0);
        assert_eq!(LinearLoss::Hinge.derivative(0.5, true), -1.0);
        assert_eq!(LinearLoss::Hinge.derivative(-1.0, false), 0.0);
    }

    #[test]
    fn svm_separable_and_monotone() {
        let xs = vec![sv(&[1.0, 0.2]), sv(&[0.9, -0.1]), sv(&[-1.0, 0.1]), sv(&[-0.8, -0.3])];
        let ys = vec![true, true, false, false];
        let params = LinearParams { l2: 0.0, lr: 1.0, epochs: 50, decay: 1.0, ..Default::default() };
        let m = fit_linear_svm(&xs, &ys, &params).unwrap();
        assert!(*m.trace.last().unwrap() < 0.01, "{:?}", m.trace);
        for w in m.trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert!(m.score(&xs[0]) > 0.0 && m.score(&xs[2]) < 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dim = 10;
        let xs: Vec<SparseVector> = (0..20)
            .map(|_| sv(&(0..dim).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>()))
            .collect();
        let ys: Vec<bool> = (0..20).map(|_| rng.random_bool(0.5)).collect();
        let w: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = 0.3;
        let l2 = 0.01;
        let (g, gb) = gradient(LinearLoss::Logistic, &w, b, &xs, &ys, l2);
        let eps = 1e-5;
        let f = |w: &[f64], b: f64| objective(LinearLoss::Logistic, w, b, &xs, &ys, l2);
        for j in 0..dim {
            let mut up = w.clone();
            let mut dn = w.clone();
            up[j] += eps;
            dn[j] -= eps;
            let num = (f(&up, b) - f(&dn, b)) / (2.0 * eps);
            assert!((num - g[j]).abs() / num.abs().max(g[j].abs()).max(1e-8) < 1e-4);
        }
        let num = (f(&w, b + eps) - f(&w, b - eps)) / (2.0 * eps);
        assert!((num - gb).abs() / num.abs().max(1e-8) < 1e-4);
    }

    #[test]
    fn input_validation() {
        let xs = vec![sv(&[1.0]), sv(&[2.0])];
        assert!(matches!(fit_logreg(&xs, &[true, true], &LinearParams::default()), Err(Error::SingleClass)));
        assert!(fit_logreg(&xs, &[true], &LinearParams::default()).is_err());
        assert!(fit_logreg(&[], &[], &LinearParams::default()).is_err());
    }

    #[test]
    fn huge_step_diverges() {
        let xs = vec![sv(&[1e100]), sv(&[-1e100])];
        let params = LinearParams { lr: 1e300, epochs: 3, ..Default::default() };
        assert!(matches!(fit_linear_svm(&xs, &[true, false], &params), Err(Error::Diverged { .. })));
    }

    #[test]
    fn determinism() {
        let xs: Vec<SparseVector> = (0..40).map(|i| sv(&[(i % 7) as f64, (i % 3) as f64 - 1.0])).collect();
        let ys: Vec<bool> = (0..40).map(|i| i % 7 > 3).collect();
        let p = LinearParams { batch_size: 8, ..Default::default() };
        assert_eq!(fit_logreg(&xs, &ys, &p).unwrap(), fit_logreg(&xs, &ys, &p).unwrap());
    }
}
