//! Hashed bag-of-n-grams multinomial logistic regression.
//!
//! Premise and hypothesis n-grams are hashed with a field tag, so the two
//! inputs occupy separate regions of one `feature_dim`-sized space. Training
//! is mini-batch gradient descent on the mean cross-entropy of each batch,
//! with the warm-up/linear-decay schedule from [`super::lr_at`].

use rand::seq::SliceRandom;

use crate::augment::AugmentedExample;
use crate::error::{Error, Result};
use crate::seed::{keyed_draw, rng_from, stable_hash};

use super::{lr_at, TrainerSpec};

const N_CLASSES: usize = 3;

/// Sparse feature vector: sorted, de-duplicated `(index, count)` pairs.
pub type Features = Vec<(u32, f64)>;

#[derive(Clone, Debug)]
pub struct FeatureHasher {
    mask: u64,
    orders: Vec<usize>,
}

impl FeatureHasher {
    pub fn new(feature_dim: usize, orders: &[usize]) -> Result<Self> {
        if feature_dim < 2 || !feature_dim.is_power_of_two() || feature_dim > 1 << 31 {
            return Err(Error::Trainer(format!(
                "feature_dim {feature_dim} is not a power of two in [2, 2^31]"
            )));
        }
        if orders.is_empty() || orders.contains(&0) {
            return Err(Error::Trainer("n-gram orders must be non-empty and positive".into()));
        }
        Ok(FeatureHasher {
            mask: feature_dim as u64 - 1,
            orders: orders.to_vec(),
        })
    }

    fn add_field(&self, tag: &str, text: &str, out: &mut Vec<(u32, f64)>) {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        for &n in &self.orders {
            for gram in tokens.windows(n) {
                let mut parts = Vec::with_capacity(n + 1);
                parts.push(tag);
                parts.extend_from_slice(gram);
                out.push(((stable_hash(&parts) & self.mask) as u32, 1.0));
            }
        }
    }

    pub fn features(&self, premise: &str, hypothesis: &str) -> Features {
        let mut raw = Vec::new();
        self.add_field("p", premise, &mut raw);
        self.add_field("h", hypothesis, &mut raw);
        raw.sort_by_key(|&(i, _)| i);
        let mut out: Features = Vec::with_capacity(raw.len());
        for (i, v) in raw {
            match out.last_mut() {
                Some((j, acc)) if *j == i => *acc += v,
                _ => out.push((i, v)),
            }
        }
        out
    }

    pub fn example_features(&self, ex: &AugmentedExample) -> Features {
        self.features(&ex.premise, &ex.hypothesis)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    /// `feature_dim * 3`, laid out `[feature][class]`.
    pub weights: Vec<f64>,
    pub bias: [f64; N_CLASSES],
}

/// Gradient contributions `(weight index, value)`; an index may repeat.
pub struct BatchGradient {
    pub weights: Vec<(usize, f64)>,
    pub bias: [f64; N_CLASSES],
}

impl LinearModel {
    pub fn zeros(feature_dim: usize) -> Self {
        LinearModel {
            weights: vec![0.0; feature_dim * N_CLASSES],
            bias: [0.0; N_CLASSES],
        }
    }

    pub fn logits(&self, x: &[(u32, f64)]) -> [f64; N_CLASSES] {
        let mut z = self.bias;
        for &(i, v) in x {
            let base = i as usize * N_CLASSES;
            for (c, zc) in z.iter_mut().enumerate() {
                *zc += self.weights[base + c] * v;
            }
        }
        z
    }

    pub fn probabilities(&self, x: &[(u32, f64)]) -> [f64; N_CLASSES] {
        softmax(self.logits(x))
    }

    /// Arg-max class; ties go to the lowest class index.
    pub fn predict(&self, x: &[(u32, f64)]) -> usize {
        let z = self.logits(x);
        let mut best = 0;
        for c in 1..N_CLASSES {
            if z[c] > z[best] {
                best = c;
            }
        }
        best
    }

    /// Mean cross-entropy over the batch.
    pub fn batch_loss(&self, batch: &[(&Features, usize)]) -> f64 {
        let total: f64 = batch
            .iter()
            .map(|(x, y)| {
                let z = self.logits(x);
                log_sum_exp(&z) - z[*y]
            })
            .sum();
        total / batch.len() as f64
    }

    /// Gradient of [`batch_loss`](Self::batch_loss), all probabilities taken
    /// at the current weights.
    pub fn batch_gradient(&self, batch: &[(&Features, usize)]) -> BatchGradient {
        let scale = 1.0 / batch.len() as f64;
        let mut grad = BatchGradient {
            weights: Vec::new(),
            bias: [0.0; N_CLASSES],
        };
        for (x, y) in batch {
            let mut g = self.probabilities(x);
            g[*y] -= 1.0;
            for (gc, bc) in g.iter_mut().zip(grad.bias.iter_mut()) {
                *gc *= scale;
                *bc += *gc;
            }
            for &(i, v) in x.iter() {
                let base = i as usize * N_CLASSES;
                for (c, gc) in g.iter().enumerate() {
                    grad.weights.push((base + c, gc * v));
                }
            }
        }
        grad
    }

    pub fn apply(&mut self, grad: &BatchGradient, lr: f64) {
        for &(i, g) in &grad.weights {
            self.weights[i] -= lr * g;
        }
        for c in 0..N_CLASSES {
            self.bias[c] -= lr * grad.bias[c];
        }
    }
}

fn log_sum_exp(z: &[f64; N_CLASSES]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn softmax(z: [f64; N_CLASSES]) -> [f64; N_CLASSES] {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = z.map(|v| (v - m).exp());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

/// Trains from zero weights. Batches follow a per-epoch shuffle drawn from
/// `(spec.seed, epoch)`, so the result is a pure function of the inputs.
pub fn train(examples: &[(Features, usize)], spec: &TrainerSpec) -> Result<LinearModel> {
    if examples.is_empty() {
        return Err(Error::Trainer("empty training set".into()));
    }
    let mut model = LinearModel::zeros(spec.feature_dim);
    let batches_per_epoch = examples.len().div_ceil(spec.batch_size);
    let total_steps = spec.epochs * batches_per_epoch;
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut step = 0;
    for epoch in 0..spec.epochs {
        let mut rng = rng_from(keyed_draw(spec.seed, ["shuffle", &epoch.to_string()]));
        order.shuffle(&mut rng);
        for chunk in order.chunks(spec.batch_size) {
            let batch: Vec<(&Features, usize)> =
                chunk.iter().map(|&i| (&examples[i].0, examples[i].1)).collect();
            let lr = lr_at(step, total_steps, spec)?;
            let grad = model.batch_gradient(&batch);
            model.apply(&grad, lr);
            step += 1;
        }
    }
    Ok(model)
}
