//! Multiclass (softmax) logistic regression on one data shard.
//!
//! The model is a single stacked vector of length `c·d_feat`; class `y`
//! owns the block `[y·d_feat, (y+1)·d_feat)`.

use super::dataset::Dataset;
use super::Objective;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct LogRegShard {
    data: Dataset,
    l2: f64,
}

impl LogRegShard {
    pub fn new(data: Dataset) -> Self {
        Self { data, l2: 0.0 }
    }

    /// Adds `λ/2·‖x‖²` to the shard objective.
    pub fn with_l2(mut self, lambda: f64) -> Self {
        self.l2 = lambda;
        self
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn model_dim(&self) -> usize {
        self.data.num_classes() * self.data.num_features()
    }

    fn check(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.model_dim() {
            return Err(Error::DimensionMismatch { expected: self.model_dim(), got: w.len() });
        }
        Ok(())
    }

    fn logits_into(&self, j: usize, w: &[f64], logits: &mut [f64]) {
        let d = self.data.num_features();
        let row = &self.data.features()[j];
        for (y, l) in logits.iter_mut().enumerate() {
            *l = row.dot(&w[y * d..(y + 1) * d]);
        }
    }

    /// Smoothness bound `(1/(2m))·Σ_j ‖a_j‖²` (+ λ), from the softmax Hessian
    /// spectral bound ½.
    pub fn smoothness_bound(&self) -> f64 {
        let m = self.data.len() as f64;
        self.data.features().iter().map(|r| r.norm_sq()).sum::<f64>() / (2.0 * m) + self.l2
    }
}

/// `max + log Σ exp(l − max)`
fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
}

/// `−(1/m)·Σ_j log softmax_{y_j}(logits_j)`, plus the optional L2 term.
pub fn logreg_value(shard: &LogRegShard, w: &[f64]) -> Result<f64> {
    shard.check(w)?;
    let c = shard.data.num_classes();
    let mut logits = vec![0.0; c];
    let mut total = 0.0;
    for (j, &y) in shard.data.labels().iter().enumerate() {
        shard.logits_into(j, w, &mut logits);
        total += log_sum_exp(&logits) - logits[y as usize];
    }
    let mut value = total / shard.data.len() as f64;
    if shard.l2 != 0.0 {
        value += 0.5 * shard.l2 * crate::linalg::norm_sq(w);
    }
    Ok(value)
}

/// Block `y` of the gradient is `(1/m)·Σ_j (softmax_y − 1{y = y_j})·a_j`.
pub fn logreg_grad(shard: &LogRegShard, w: &[f64]) -> Result<Vec<f64>> {
    shard.check(w)?;
    let mut out = vec![0.0; w.len()];
    grad_into(shard, w, &mut out);
    Ok(out)
}

fn grad_into(shard: &LogRegShard, w: &[f64], out: &mut [f64]) {
    let d = shard.data.num_features();
    let c = shard.data.num_classes();
    let inv_m = 1.0 / shard.data.len() as f64;
    let mut logits = vec![0.0; c];
    out.iter_mut().for_each(|v| *v = 0.0);
    for (j, &y) in shard.data.labels().iter().enumerate() {
        shard.logits_into(j, w, &mut logits);
        let lse = log_sum_exp(&logits);
        let row = &shard.data.features()[j];
        for (k, &l) in logits.iter().enumerate() {
            let mut coef = (l - lse).exp();
            if k == y as usize {
                coef -= 1.0;
            }
            let coef = coef * inv_m;
            let block = &mut out[k * d..(k + 1) * d];
            for (&i, &v) in row.indices.iter().zip(&row.values) {
                block[i as usize] += coef * v;
            }
        }
    }
    if shard.l2 != 0.0 {
        crate::linalg::axpy(shard.l2, w, out);
    }
}

impl Objective for LogRegShard {
    fn dim(&self) -> usize {
        self.model_dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        logreg_value(self, x).expect("dimension checked by the problem")
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), self.model_dim());
        grad_into(self, x, out);
    }

    fn smoothness(&self) -> f64 {
        self.smoothness_bound()
    }
}
