//! Bias-corrected Adam over a flat parameter vector.

use serde::{Deserialize, Serialize};

use crate::error::{shape, IdsError};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    /// One update in place. A non-finite gradient leaves everything untouched.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) -> Result<(), IdsError> {
        if params.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(shape(self.m.len(), format!("{} params / {} grads", params.len(), grad.len())));
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(IdsError::NonFinite("gradient"));
        }
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t as i32);
        let c2 = 1.0 - BETA2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * g;
            self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= lr * mh / (vh.sqrt() + EPSILON);
        }
        Ok(())
    }
}
