//! Synthetic minority oversampling for binary problems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifiers::knn::KnnTrainSet;
use crate::error::{Error, Result};
use crate::features::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoteParams {
    pub k: usize,
    /// Generate until minority / majority reaches this ratio.
    pub target_ratio: f64,
    pub seed: u64,
}

impl Default for SmoteParams {
    fn default() -> Self {
        SmoteParams {
            k: 5,
            target_ratio: 1.0,
            seed: 1,
        }
    }
}

/// `x + u (y - x)` on the union support, clamped per coordinate to the
/// parents' interval so rounding cannot leave the segment.
pub fn interpolate(x: &SparseVector, y: &SparseVector, u: f64) -> SparseVector {
    let mut pairs = Vec::with_capacity(x.nnz() + y.nnz());
    let (xi, xv, yi, yv) = (x.indices(), x.values(), y.indices(), y.values());
    let (mut a, mut b) = (0, 0);
    while a < xi.len() || b < yi.len() {
        let (j, p, q) = if b >= yi.len() || (a < xi.len() && xi[a] < yi[b]) {
            a += 1;
            (xi[a - 1], xv[a - 1], 0.0)
        } else if a >= xi.len() || yi[b] < xi[a] {
            b += 1;
            (yi[b - 1], 0.0, yv[b - 1])
        } else {
            a += 1;
            b += 1;
            (xi[a - 1], xv[a - 1], yv[b - 1])
        };
        let v = (p + u * (q - p)).clamp(p.min(q), p.max(q));
        pairs.push((j, v));
    }
    SparseVector::from_pairs(x.dim(), pairs).expect("merged indices are sorted and in range")
}

/// Returns the original rows unchanged followed by synthetic minority rows.
pub fn smote(xs: &[SparseVector], ys: &[bool], params: &SmoteParams) -> Result<(Vec<SparseVector>, Vec<bool>)> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParameter("rows and labels differ in length".into()));
    }
    if params.k == 0 || !(params.target_ratio > 0.0) {
        return Err(Error::InvalidParameter(format!("bad SMOTE parameters {params:?}")));
    }
    let pos = ys.iter().filter(|&&y| y).count();
    let minority_label = pos * 2 <= ys.len();
    let minority: Vec<usize> = (0..ys.len()).filter(|&i| ys[i] == minority_label).collect();
    let majority = ys.len() - minority.len();
    let target = (params.target_ratio * majority as f64).ceil() as usize;
    let needed = target.saturating_sub(minority.len());
    let mut out_x = xs.to_vec();
    let mut out_y = ys.to_vec();
    if needed == 0 {
        return Ok((out_x, out_y));
    }
    if minority.len() < params.k + 1 {
        return Err(Error::InvalidParameter(format!(
            "SMOTE with k={} needs at least {} minority rows, found {}",
            params.k,
            params.k + 1,
            minority.len()
        )));
    }
    let rows: Vec<SparseVector> = minority.iter().map(|&i| xs[i].clone()).collect();
    let index = KnnTrainSet::new(&rows)?;
    let mut neighbors: Vec<Option<Vec<usize>>> = vec![None; rows.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    for g in 0..needed {
        let base = g % rows.len();
        let nn = neighbors[base].get_or_insert_with(|| {
            let mut n = index.neighbors(&rows[base], params.k + 1);
            n.retain(|&j| j != base);
            n.truncate(params.k);
            n
        });
        let other = nn[rng.random_range(0..nn.len())];
        let u: f64 = rng.random();
        out_x.push(interpolate(&rows[base], &rows[other], u));
        out_y.push(minority_label);
    }
    Ok((out_x, out_y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(v: &[f64]) -> SparseVector {
        SparseVector::from_dense(v)
    }

    #[test]
    fn segment_endpoints() {
        let x = sv(&[1.0, 0.0, 3.0]);
        let y = sv(&[0.0, 2.0, 1.0]);
        assert_eq!(interpolate(&x, &y, 0.0), x);
        assert_eq!(interpolate(&x, &y, 1.0), y);
        let mid = interpolate(&x, &y, 0.5);
        assert_eq!(mid.to_dense(), vec![0.5, 1.0, 2.0]);
    }

    #[test]
    fn counts_and_untouched_majority() {
        let xs: Vec<SparseVector> = (0..50).map(|i| sv(&[(i % 7) as f64 + 1.0, (i % 3) as f64])).collect();
        let ys: Vec<bool> = (0..50).map(|i| i < 10).collect();
        let (ax, ay) = smote(&xs, &ys, &SmoteParams::default()).unwrap();
        assert_eq!(ax.len(), 80);
        assert_eq!(ay[50..].iter().filter(|&&y| y).count(), 30);
        assert_eq!(&ax[..50], &xs[..]);
        assert_eq!(&ay[..50], &ys[..]);
    }

    #[test]
    fn minority_too_small() {
        let xs: Vec<SparseVector> = (0..10).map(|i| sv(&[i as f64 + 1.0])).collect();
        let ys: Vec<bool> = (0..10).map(|i| i < 3).collect();
        assert!(smote(&xs, &ys, &SmoteParams { k: 3, ..Default::default() }).is_err());
        assert!(smote(&xs, &ys, &SmoteParams { k: 2, ..Default::default() }).is_ok());
    }
}
