//! The two small networks used by the IDS: a 31-10-10 MLP and a one-layer
//! Conv1D model, each with either a sigmoid classifier head or a pairwise
//! distance head.
//!
//! Parameters live in one flat `Vec<f64>` so federated averaging and the
//! optimizer treat every architecture the same way. Layouts (row-major):
//!
//! * MLP: `W1[10][31] b1[10] W2[10][10] b2[10]`, then the head.
//! * CNN: `K[9][3] bc[9] Wd[6][126] bd[6]`, then the head. The pooled map is
//!   flattened position-major (`j * 9 + f`).
//! * Classifier head: `w[e] b` over the embedding of width `e`.
//! * Pairwise head: `w b` over the squared embedding distance.

use std::fmt;
use std::str::FromStr;

use fanet_sim::FEATURE_COUNT;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape, IdsError};

pub const MLP_HIDDEN: usize = 10;
pub const CNN_FILTERS: usize = 9;
pub const CNN_KERNEL: usize = 3;
pub const CNN_DENSE: usize = 6;
pub const CNN_DROPOUT: f64 = 0.2;
/// Predictions are clamped to `[EPS, 1 - EPS]` inside the loss.
pub const LOSS_EPS: f64 = 1e-7;

const CONV_LEN: usize = FEATURE_COUNT - CNN_KERNEL + 1;
const POOL_LEN: usize = CONV_LEN / 2;
const FLAT: usize = POOL_LEN * CNN_FILTERS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Dnn,
    Cnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadKind {
    #[default]
    Classifier,
    Pairwise,
}

impl ModelKind {
    pub const ALL: [ModelKind; 2] = [ModelKind::Dnn, ModelKind::Cnn];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Dnn => "dnn",
            ModelKind::Cnn => "cnn",
        }
    }

    pub fn embedding_dim(self) -> usize {
        match self {
            ModelKind::Dnn => MLP_HIDDEN,
            ModelKind::Cnn => CNN_DENSE,
        }
    }

    fn body_params(self) -> usize {
        match self {
            ModelKind::Dnn => MLP_HIDDEN * FEATURE_COUNT + MLP_HIDDEN + MLP_HIDDEN * MLP_HIDDEN + MLP_HIDDEN,
            ModelKind::Cnn => CNN_FILTERS * CNN_KERNEL + CNN_FILTERS + CNN_DENSE * FLAT + CNN_DENSE,
        }
    }
}

impl HeadKind {
    pub fn as_str(self) -> &'static str {
        match self {
            HeadKind::Classifier => "classifier",
            HeadKind::Pairwise => "pairwise",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for HeadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dnn" | "mlp" => Ok(ModelKind::Dnn),
            "cnn" => Ok(ModelKind::Cnn),
            other => Err(format!("unknown model '{other}'")),
        }
    }
}

impl FromStr for HeadKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "classifier" => Ok(HeadKind::Classifier),
            "pairwise" => Ok(HeadKind::Pairwise),
            other => Err(format!("unknown head '{other}'")),
        }
    }
}

/// Architecture descriptor: fixes the parameter layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Arch {
    pub model: ModelKind,
    pub head: HeadKind,
}

impl Arch {
    pub fn new(model: ModelKind, head: HeadKind) -> Self {
        Self { model, head }
    }

    pub fn classifier(model: ModelKind) -> Self {
        Self::new(model, HeadKind::Classifier)
    }

    pub fn head_params(self) -> usize {
        match self.head {
            HeadKind::Classifier => self.model.embedding_dim() + 1,
            HeadKind::Pairwise => 2,
        }
    }

    /// Total trainable parameters.
    pub fn param_count(self) -> usize {
        self.model.body_params() + self.head_params()
    }

    fn head_offset(self) -> usize {
        self.model.body_params()
    }

    /// Fan-in of the layer owning each parameter, used for initialization.
    fn fan_ins(self) -> Vec<(usize, usize, bool)> {
        // (len, fan_in, is_bias)
        let mut v = match self.model {
            ModelKind::Dnn => vec![
                (MLP_HIDDEN * FEATURE_COUNT, FEATURE_COUNT, false),
                (MLP_HIDDEN, FEATURE_COUNT, true),
                (MLP_HIDDEN * MLP_HIDDEN, MLP_HIDDEN, false),
                (MLP_HIDDEN, MLP_HIDDEN, true),
            ],
            ModelKind::Cnn => vec![
                (CNN_FILTERS * CNN_KERNEL, CNN_KERNEL, false),
                (CNN_FILTERS, CNN_KERNEL, true),
                (CNN_DENSE * FLAT, FLAT, false),
                (CNN_DENSE, FLAT, true),
            ],
        };
        match self.head {
            HeadKind::Classifier => {
                let e = self.model.embedding_dim();
                v.push((e, e, false));
                v.push((1, e, true));
            }
            // zero-initialized so every pair starts at probability 0.5
            HeadKind::Pairwise => v.push((2, 1, true)),
        }
        v
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.model, self.head)
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

/// Clipped binary cross-entropy and its derivative with respect to the
/// logit. The derivative is zero wherever the clamp is active.
pub fn bce_with_logit(p: f64, y: f64) -> (f64, f64) {
    let q = p.clamp(LOSS_EPS, 1.0 - LOSS_EPS);
    let loss = -(y * q.ln() + (1.0 - y) * (1.0 - q).ln());
    let d = if q != p { 0.0 } else { p - y };
    (loss, d)
}

/// Squared Euclidean distance between embeddings.
pub fn pairwise_distance(a: &[f64], b: &[f64]) -> Result<f64, IdsError> {
    if a.len() != b.len() {
        return Err(shape(a.len(), b.len()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Intermediate values for one sample, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    input: Vec<f64>,
    /// MLP: pre-activations of both hidden layers. CNN: conv pre-activations.
    z1: Vec<f64>,
    z2: Vec<f64>,
    /// CNN: argmax position inside each pooling pair, per pooled cell.
    pool_arg: Vec<usize>,
    /// CNN: flattened pooled map after dropout.
    flat: Vec<f64>,
    /// CNN: dropout multipliers (1 when disabled).
    mask: Vec<f64>,
    pub embedding: Vec<f64>,
    /// Classifier logit; 0 for pairwise heads.
    pub logit: f64,
}

impl Cache {
    /// Pre-activation of the embedding layer. Linear in the dropout mask.
    pub fn pre_embedding(&self) -> &[f64] {
        &self.z2
    }

    /// Which side of every ReLU and max-pool switch this sample landed on.
    /// The network is smooth wherever this pattern is constant.
    pub fn activation_pattern(&self) -> Vec<u8> {
        let mut v: Vec<u8> = self.z1.iter().chain(&self.z2).map(|&z| u8::from(z > 0.0)).collect();
        v.extend(self.pool_arg.iter().map(|&a| a as u8));
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    arch: Arch,
    params: Vec<f64>,
}

impl Network {
    /// He-uniform weights, zero biases.
    pub fn init(arch: Arch, rng: &mut impl Rng) -> Self {
        let mut params = Vec::with_capacity(arch.param_count());
        for (len, fan_in, bias) in arch.fan_ins() {
            let limit = (6.0 / fan_in as f64).sqrt();
            for _ in 0..len {
                params.push(if bias { 0.0 } else { rng.random_range(-limit..limit) });
            }
        }
        debug_assert_eq!(params.len(), arch.param_count());
        Self { arch, params }
    }

    pub fn zeros(arch: Arch) -> Self {
        Self { arch, params: vec![0.0; arch.param_count()] }
    }

    pub fn from_params(arch: Arch, params: Vec<f64>) -> Result<Self, IdsError> {
        if params.len() != arch.param_count() {
            return Err(shape(format!("{} parameters for {arch}", arch.param_count()), params.len()));
        }
        Ok(Self { arch, params })
    }

    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<(), IdsError> {
        if p.len() != self.params.len() {
            return Err(shape(self.params.len(), p.len()));
        }
        self.params.copy_from_slice(p);
        Ok(())
    }

    /// Pairwise head `(w, b)`; `None` for classifiers.
    pub fn pair_head(&self) -> Option<(f64, f64)> {
        let o = self.arch.head_offset();
        (self.arch.head == HeadKind::Pairwise).then(|| (self.params[o], self.params[o + 1]))
    }

    /// Forward one sample. `dropout` supplies the rng when training; the MLP
    /// has no dropout layer and ignores it.
    pub fn forward(&self, x: &[f64], dropout: Option<&mut dyn rand::RngCore>) -> Result<Cache, IdsError> {
        if x.len() != FEATURE_COUNT {
            return Err(shape(FEATURE_COUNT, x.len()));
        }
        let mut c = match self.arch.model {
            ModelKind::Dnn => self.forward_mlp(x),
            ModelKind::Cnn => self.forward_cnn(x, dropout),
        };
        if self.arch.head == HeadKind::Classifier {
            let o = self.arch.head_offset();
            let e = c.embedding.len();
            c.logit = self.params[o + e] + dot(&self.params[o..o + e], &c.embedding);
        }
        Ok(c)
    }

    fn forward_mlp(&self, x: &[f64]) -> Cache {
        let p = &self.params;
        let (h, d) = (MLP_HIDDEN, FEATURE_COUNT);
        let (w1, b1) = (0, h * d);
        let (w2, b2) = (b1 + h, b1 + h + h * h);
        let z1: Vec<f64> = (0..h).map(|i| p[b1 + i] + dot(&p[w1 + i * d..w1 + (i + 1) * d], x)).collect();
        let a1: Vec<f64> = z1.iter().map(|&z| relu(z)).collect();
        let z2: Vec<f64> = (0..h).map(|i| p[b2 + i] + dot(&p[w2 + i * h..w2 + (i + 1) * h], &a1)).collect();
        let embedding = z2.iter().map(|&z| relu(z)).collect();
        Cache {
            input: x.to_vec(),
            z1,
            z2,
            pool_arg: Vec::new(),
            flat: Vec::new(),
            mask: Vec::new(),
            embedding,
            logit: 0.0,
        }
    }

    fn forward_cnn(&self, x: &[f64], dropout: Option<&mut dyn rand::RngCore>) -> Cache {
        let p = &self.params;
        let (kw, kb) = (0, CNN_FILTERS * CNN_KERNEL);
        let (dw, db) = (kb + CNN_FILTERS, kb + CNN_FILTERS + CNN_DENSE * FLAT);
        // z1[f * CONV_LEN + t]
        let mut z1 = vec![0.0; CNN_FILTERS * CONV_LEN];
        for f in 0..CNN_FILTERS {
            let k = &p[kw + f * CNN_KERNEL..kw + (f + 1) * CNN_KERNEL];
            for t in 0..CONV_LEN {
                z1[f * CONV_LEN + t] = p[kb + f] + dot(k, &x[t..t + CNN_KERNEL]);
            }
        }
        let mut flat = vec![0.0; FLAT];
        let mut pool_arg = vec![0; FLAT];
        for j in 0..POOL_LEN {
            for f in 0..CNN_FILTERS {
                let (a, b) = (relu(z1[f * CONV_LEN + 2 * j]), relu(z1[f * CONV_LEN + 2 * j + 1]));
                let (v, arg) = if b > a { (b, 1) } else { (a, 0) };
                flat[j * CNN_FILTERS + f] = v;
                pool_arg[j * CNN_FILTERS + f] = arg;
            }
        }
        let mask = match dropout {
            Some(rng) => {
                let keep = 1.0 - CNN_DROPOUT;
                (0..FLAT).map(|_| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect()
            }
            None => vec![1.0; FLAT],
        };
        for (v, m) in flat.iter_mut().zip(&mask) {
            *v *= m;
        }
        let z2: Vec<f64> = (0..CNN_DENSE).map(|i| p[db + i] + dot(&p[dw + i * FLAT..dw + (i + 1) * FLAT], &flat)).collect();
        let embedding = z2.iter().map(|&z| relu(z)).collect();
        Cache { input: x.to_vec(), z1, z2, pool_arg, flat, mask, embedding, logit: 0.0 }
    }

    /// Accumulate into `grad` the gradient of a loss whose derivatives are
    /// `d_logit` (classifier head) and `d_embed` (extra embedding gradient).
    pub fn backward(&self, c: &Cache, d_logit: f64, d_embed: Option<&[f64]>, grad: &mut [f64]) {
        let e = c.embedding.len();
        let o = self.arch.head_offset();
        let mut de = vec![0.0; e];
        if self.arch.head == HeadKind::Classifier {
            for i in 0..e {
                grad[o + i] += d_logit * c.embedding[i];
                de[i] = d_logit * self.params[o + i];
            }
            grad[o + e] += d_logit;
        }
        if let Some(extra) = d_embed {
            for (a, b) in de.iter_mut().zip(extra) {
                *a += b;
            }
        }
        match self.arch.model {
            ModelKind::Dnn => self.backward_mlp(c, &de, grad),
            ModelKind::Cnn => self.backward_cnn(c, &de, grad),
        }
    }

    fn backward_mlp(&self, c: &Cache, de: &[f64], grad: &mut [f64]) {
        let p = &self.params;
        let (h, d) = (MLP_HIDDEN, FEATURE_COUNT);
        let (w1, b1) = (0, h * d);
        let (w2, b2) = (b1 + h, b1 + h + h * h);
        let a1: Vec<f64> = c.z1.iter().map(|&z| relu(z)).collect();
        let dz2: Vec<f64> = (0..h).map(|i| if c.z2[i] > 0.0 { de[i] } else { 0.0 }).collect();
        let mut da1 = vec![0.0; h];
        for i in 0..h {
            if dz2[i] == 0.0 {
                continue;
            }
            grad[b2 + i] += dz2[i];
            for j in 0..h {
                grad[w2 + i * h + j] += dz2[i] * a1[j];
                da1[j] += dz2[i] * p[w2 + i * h + j];
            }
        }
        for i in 0..h {
            let dz = if c.z1[i] > 0.0 { da1[i] } else { 0.0 };
            if dz == 0.0 {
                continue;
            }
            grad[b1 + i] += dz;
            for j in 0..d {
                grad[w1 + i * d + j] += dz * c.input[j];
            }
        }
    }

    fn backward_cnn(&self, c: &Cache, de: &[f64], grad: &mut [f64]) {
        let p = &self.params;
        let (kw, kb) = (0, CNN_FILTERS * CNN_KERNEL);
        let (dw, db) = (kb + CNN_FILTERS, kb + CNN_FILTERS + CNN_DENSE * FLAT);
        let mut dflat = vec![0.0; FLAT];
        for i in 0..CNN_DENSE {
            let dz = if c.z2[i] > 0.0 { de[i] } else { 0.0 };
            if dz == 0.0 {
                continue;
            }
            grad[db + i] += dz;
            let row = dw + i * FLAT;
            for k in 0..FLAT {
                grad[row + k] += dz * c.flat[k];
                dflat[k] += dz * p[row + k];
            }
        }
        for j in 0..POOL_LEN {
            for f in 0..CNN_FILTERS {
                let k = j * CNN_FILTERS + f;
                let t = 2 * j + c.pool_arg[k];
                let z = c.z1[f * CONV_LEN + t];
                let dz = if z > 0.0 { dflat[k] * c.mask[k] } else { 0.0 };
                if dz == 0.0 {
                    continue;
                }
                grad[kb + f] += dz;
                for q in 0..CNN_KERNEL {
                    grad[kw + f * CNN_KERNEL + q] += dz * c.input[t + q];
                }
            }
        }
    }

    /// Probability of the malicious class for one sample (inference mode).
    pub fn predict_one(&self, x: &[f64]) -> Result<f64, IdsError> {
        Ok(sigmoid(self.forward(x, None)?.logit))
    }

    pub fn predict(&self, x: &crate::data::Matrix) -> Result<Vec<f64>, IdsError> {
        x.iter_rows().map(|r| self.predict_one(r)).collect()
    }

    pub fn embed(&self, x: &[f64]) -> Result<Vec<f64>, IdsError> {
        Ok(self.forward(x, None)?.embedding)
    }

    /// Probability that `a` and `b` share a class under the pairwise head.
    pub fn pair_probability(&self, a: &[f64], b: &[f64]) -> Result<f64, IdsError> {
        let (w, bias) = self
            .pair_head()
            .ok_or_else(|| shape("pairwise head", "classifier head"))?;
        let d = pairwise_distance(&self.embed(a)?, &self.embed(b)?)?;
        Ok(sigmoid(w * d + bias))
    }

    /// Mean clipped BCE over a batch, inference mode. Used by gradient checks.
    pub fn loss(&self, x: &crate::data::Matrix, y: &[f64]) -> Result<f64, IdsError> {
        let mut total = 0.0;
        for (r, &t) in x.iter_rows().zip(y) {
            total += bce_with_logit(self.predict_one(r)?, t).0;
        }
        Ok(total / y.len().max(1) as f64)
    }
}

#[inline]
fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
