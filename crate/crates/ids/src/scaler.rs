//! Per-column standardization fit on training rows only.

use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::error::{shape, IdsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    /// Population standard deviation; constant columns store 1.
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(x: &Matrix) -> Result<Self, IdsError> {
        if x.is_empty() {
            return Err(IdsError::Empty("scaler fit on zero rows".into()));
        }
        let n = x.rows() as f64;
        let mut mean = Vec::with_capacity(x.cols());
        let mut std = Vec::with_capacity(x.cols());
        for j in 0..x.cols() {
            let m = x.column(j).sum::<f64>() / n;
            let var = x.column(j).map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let s = var.sqrt();
            mean.push(m);
            std.push(if s > 0.0 && s.is_finite() { s } else { 1.0 });
        }
        Ok(Self { mean, std })
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix, IdsError> {
        if x.cols() != self.mean.len() && !x.is_empty() {
            return Err(shape(format!("{} columns", self.mean.len()), x.cols()));
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
        Ok(out)
    }

    /// Constant columns map to exactly zero.
    pub fn is_degenerate(&self, j: usize, x: &Matrix) -> bool {
        x.column(j).all(|v| v == self.mean[j])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> Matrix {
        Matrix::new(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn three_point_column() {
        let x = col(&[2.0, 4.0, 6.0]);
        let s = Scaler::fit(&x).unwrap();
        assert_eq!(s.mean, vec![4.0]);
        assert!((s.std[0] - (8.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let t: Vec<f64> = s.transform(&x).unwrap().column(0).collect();
        let expect = 2.0 / (8.0f64 / 3.0).sqrt();
        assert!((t[0] + expect).abs() < 1e-12 && t[1] == 0.0 && (t[2] - expect).abs() < 1e-12);
        assert!((expect - 1.2247).abs() < 1e-4);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let x = col(&[5.0, 5.0, 5.0]);
        let s = Scaler::fit(&x).unwrap();
        assert!(s.transform(&x).unwrap().column(0).all(|v| v == 0.0));
    }

    #[test]
    fn empty_fit_errors() {
        assert!(Scaler::fit(&Matrix::default()).is_err());
    }

    #[test]
    fn width_mismatch_errors() {
        let s = Scaler::fit(&col(&[1.0, 2.0])).unwrap();
        assert!(s.transform(&Matrix::new(1, 2, vec![0.0, 0.0]).unwrap()).is_err());
    }
}
