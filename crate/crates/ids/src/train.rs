//! Mini-batch training loops for both heads.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adam::Adam;
use crate::data::LabeledSet;
use crate::error::IdsError;
use crate::nn::{bce_with_logit, pairwise_distance, sigmoid, HeadKind, Network};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.01, batch_size: 5 }
    }
}

/// Number of optimizer steps per epoch over `n` samples.
pub fn batches_per_epoch(n: usize, batch_size: usize) -> usize {
    n.div_ceil(batch_size.max(1))
}

/// A model plus the optimizer and randomness that belong to its owner.
/// Both persist across epochs and federated rounds.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub net: Network,
    pub adam: Adam,
    pub rng: ChaCha8Rng,
    pub cfg: TrainConfig,
}

impl Trainer {
    pub fn new(net: Network, rng: ChaCha8Rng, cfg: TrainConfig) -> Self {
        let adam = Adam::new(net.params().len());
        Self { net, adam, rng, cfg }
    }

    /// One pass over `data`: seeded shuffle, ragged batches, one step each.
    /// Returns the mean training loss of the epoch.
    pub fn train_epoch(&mut self, data: &LabeledSet) -> Result<f64, IdsError> {
        if data.is_empty() {
            return Err(IdsError::Empty("training set".into()));
        }
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut self.rng);
        let mut total = 0.0;
        let mut terms = 0usize;
        let mut grad = vec![0.0; self.net.params().len()];
        for batch in order.chunks(self.cfg.batch_size.max(1)) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let (loss, n) = match self.net.arch().head {
                HeadKind::Classifier => self.classifier_batch(data, batch, &mut grad)?,
                HeadKind::Pairwise => self.pairwise_batch(data, batch, &mut grad)?,
            };
            if n == 0 {
                continue;
            }
            let scale = 1.0 / n as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            self.adam.step(self.net.params_mut(), &grad, self.cfg.learning_rate)?;
            total += loss;
            terms += n;
        }
        Ok(if terms == 0 { 0.0 } else { total / terms as f64 })
    }

    pub fn train_epochs(&mut self, data: &LabeledSet, epochs: usize) -> Result<Vec<f64>, IdsError> {
        (0..epochs).map(|_| self.train_epoch(data)).collect()
    }

    fn classifier_batch(&mut self, data: &LabeledSet, batch: &[usize], grad: &mut [f64]) -> Result<(f64, usize), IdsError> {
        let mut loss = 0.0;
        for &i in batch {
            let c = self.net.forward(data.x.row(i), Some(&mut self.rng))?;
            let (l, d) = bce_with_logit(sigmoid(c.logit), data.y[i]);
            loss += l;
            self.net.backward(&c, d, None, grad);
        }
        Ok((loss, batch.len()))
    }

    /// Every unordered pair inside the batch; target 1 for same-class pairs.
    fn pairwise_batch(&mut self, data: &LabeledSet, batch: &[usize], grad: &mut [f64]) -> Result<(f64, usize), IdsError> {
        if batch.len() < 2 {
            return Ok((0.0, 0));
        }
        let (w, b) = self.net.pair_head().expect("pairwise head");
        let caches = batch
            .iter()
            .map(|&i| self.net.forward(data.x.row(i), Some(&mut self.rng)))
            .collect::<Result<Vec<_>, _>>()?;
        let dim = caches[0].embedding.len();
        let mut d_embed = vec![vec![0.0; dim]; batch.len()];
        let (mut dw, mut db, mut loss, mut pairs) = (0.0, 0.0, 0.0, 0);
        for a in 0..batch.len() {
            for c in a + 1..batch.len() {
                let (ea, ec) = (&caches[a].embedding, &caches[c].embedding);
                let dist = pairwise_distance(ea, ec)?;
                let same = if data.y[batch[a]] == data.y[batch[c]] { 1.0 } else { 0.0 };
                let (l, dz) = bce_with_logit(sigmoid(w * dist + b), same);
                loss += l;
                pairs += 1;
                dw += dz * dist;
                db += dz;
                let dd = dz * w;
                for k in 0..dim {
                    let g = 2.0 * dd * (ea[k] - ec[k]);
                    d_embed[a][k] += g;
                    d_embed[c][k] -= g;
                }
            }
        }
        for (cache, de) in caches.iter().zip(&d_embed) {
            self.net.backward(cache, 0.0, Some(de), grad);
        }
        let o = grad.len() - 2;
        grad[o] += dw;
        grad[o + 1] += db;
        Ok((loss, pairs))
    }
}

/// Pairwise inference: the class whose support rows have the highest mean
/// same-class probability with the query. Ties go to benign.
pub fn pairwise_classify(net: &Network, support: &LabeledSet, x: &[f64]) -> Result<bool, IdsError> {
    let (w, b) = net.pair_head().ok_or_else(|| IdsError::Empty("pairwise head".into()))?;
    let q = net.embed(x)?;
    let mut sum = [0.0f64; 2];
    let mut n = [0usize; 2];
    for (row, &y) in support.x.iter_rows().zip(&support.y) {
        let c = usize::from(y >= 0.5);
        sum[c] += sigmoid(w * pairwise_distance(&q, &net.embed(row)?)? + b);
        n[c] += 1;
    }
    if n[0] == 0 || n[1] == 0 {
        return Err(IdsError::Empty("support set lacks a class".into()));
    }
    Ok(sum[1] / n[1] as f64 > sum[0] / n[0] as f64)
}
