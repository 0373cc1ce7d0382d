//! Detection metrics and communication cost.

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::IdsError;

/// Decision threshold on the sigmoid output.
pub const THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

/// Rates are `None` when their denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub dr: Option<f64>,
    pub fpr: Option<f64>,
}

impl Confusion {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    /// `predicted[i]` is true for a malicious call; `labels` are 0/1.
    pub fn from_decisions(predicted: &[bool], labels: &[f64]) -> Self {
        let mut c = Self::default();
        for (&p, &y) in predicted.iter().zip(labels) {
            c.record(p, y >= 0.5);
        }
        c
    }

    pub fn from_probabilities(probs: &[f64], labels: &[f64]) -> Self {
        let d: Vec<bool> = probs.iter().map(|&p| p >= THRESHOLD).collect();
        Self::from_decisions(&d, labels)
    }

    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn metrics(&self) -> Result<Metrics, IdsError> {
        let total = self.total();
        if total == 0 {
            return Err(IdsError::Empty("confusion matrix".into()));
        }
        let rate = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
        Ok(Metrics {
            accuracy: (self.tp + self.tn) as f64 / total as f64,
            dr: rate(self.tp, self.tp + self.fn_),
            fpr: rate(self.fp, self.fp + self.tn),
        })
    }
}

impl Add for Confusion {
    type Output = Confusion;
    fn add(self, o: Confusion) -> Confusion {
        Confusion::new(self.tp + o.tp, self.fp + o.fp, self.tn + o.tn, self.fn_ + o.fn_)
    }
}

impl AddAssign for Confusion {
    fn add_assign(&mut self, o: Confusion) {
        *self = *self + o;
    }
}

/// Mean of each metric over the entries where it is defined.
pub fn mean_metrics(ms: &[Metrics]) -> Option<Metrics> {
    if ms.is_empty() {
        return None;
    }
    let mean = |v: Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    Some(Metrics {
        accuracy: ms.iter().map(|m| m.accuracy).sum::<f64>() / ms.len() as f64,
        dr: mean(ms.iter().filter_map(|m| m.dr).collect()),
        fpr: mean(ms.iter().filter_map(|m| m.fpr).collect()),
    })
}

/// Inputs to the communication cost `N * W * E * S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommCost {
    /// Participating nodes.
    pub nodes: u64,
    /// Weights sent per node per round.
    pub weights: u64,
    /// Communication rounds.
    pub rounds: u64,
    /// Bytes per weight.
    pub weight_bytes: u64,
}

/// Bytes per serialized weight (f64).
pub const WEIGHT_BYTES: u64 = 8;

impl CommCost {
    pub fn validate(&self) -> Result<(), IdsError> {
        let zero: Vec<String> = [("N", self.nodes), ("W", self.weights), ("E", self.rounds), ("S", self.weight_bytes)]
            .iter()
            .filter(|(_, v)| *v == 0)
            .map(|(k, _)| format!("{k} must be positive"))
            .collect();
        if zero.is_empty() {
            Ok(())
        } else {
            Err(IdsError::InvalidPlan(zero))
        }
    }

    /// Exact product in bytes.
    pub fn bytes(&self) -> u128 {
        self.nodes as u128 * self.weights as u128 * self.rounds as u128 * self.weight_bytes as u128
    }
}

pub fn comm_cost(nodes: u64, weights: u64, rounds: u64, weight_bytes: u64) -> u128 {
    CommCost { nodes, weights, rounds, weight_bytes }.bytes()
}

/// Percentage with two decimals.
pub fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

/// Population mean and standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_classifier() {
        let m = Confusion::new(3, 0, 3, 0).metrics().unwrap();
        assert_eq!((m.accuracy, m.dr, m.fpr), (1.0, Some(1.0), Some(0.0)));
    }

    #[test]
    fn undefined_detection_rate() {
        let m = Confusion::new(0, 0, 10, 0).metrics().unwrap();
        assert_eq!((m.dr, m.fpr), (None, Some(0.0)));
        assert!(Confusion::default().metrics().is_err());
    }

    #[test]
    fn threshold_counts_one_half_as_malicious() {
        let c = Confusion::from_probabilities(&[0.5, 0.4999, 0.9, 0.1], &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(c, Confusion::new(1, 1, 1, 1));
    }

    #[test]
    fn cost_product() {
        assert_eq!(comm_cost(50, 1000, 10, 4), 2_000_000);
        assert!(CommCost { nodes: 0, weights: 1, rounds: 1, weight_bytes: 1 }.validate().is_err());
    }

    #[test]
    fn two_decimal_percentages() {
        assert_eq!(pct(59.0 / 60.0), "98.33");
        assert_eq!(pct(1.0 / 60.0), "1.67");
    }
}
