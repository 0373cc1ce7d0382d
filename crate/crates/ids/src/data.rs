//! Dense row-major feature matrices and labeled sets.

use fanet_sim::{Label, Sample, FEATURE_COUNT};

use crate::error::{shape, IdsError};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, IdsError> {
        if data.len() != rows * cols {
            return Err(shape(format!("{rows}x{cols} = {} values", rows * cols), data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, IdsError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(shape(format!("{cols} columns"), r.len()));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |i| self.data[i * self.cols + j])
    }

    /// Rows `idx` in the given order.
    pub fn select(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    /// Stack `other` below `self`.
    pub fn append(&mut self, other: &Matrix) -> Result<(), IdsError> {
        if self.rows == 0 {
            self.cols = other.cols;
        } else if other.rows > 0 && other.cols != self.cols {
            return Err(shape(format!("{} columns", self.cols), other.cols));
        }
        self.rows += other.rows;
        self.data.extend_from_slice(&other.data);
        Ok(())
    }
}

/// Features plus 0/1 targets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledSet {
    pub x: Matrix,
    pub y: Vec<f64>,
}

impl LabeledSet {
    pub fn new(x: Matrix, y: Vec<f64>) -> Result<Self, IdsError> {
        if x.rows() != y.len() {
            return Err(shape(format!("{} labels", x.rows()), y.len()));
        }
        Ok(Self { x, y })
    }

    pub fn from_samples<'a>(samples: impl IntoIterator<Item = &'a Sample>) -> Self {
        let mut data = Vec::new();
        let mut y = Vec::new();
        for s in samples {
            data.extend_from_slice(s.features.as_slice());
            y.push(if s.label == Label::Malicious { 1.0 } else { 0.0 });
        }
        let rows = y.len();
        LabeledSet { x: Matrix { rows, cols: FEATURE_COUNT, data }, y }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn select(&self, idx: &[usize]) -> LabeledSet {
        LabeledSet { x: self.x.select(idx), y: idx.iter().map(|&i| self.y[i]).collect() }
    }

    pub fn append(&mut self, other: &LabeledSet) -> Result<(), IdsError> {
        self.x.append(&other.x)?;
        self.y.extend_from_slice(&other.y);
        Ok(())
    }
}
