#![allow(dead_code)]

use fanet_sim::dataset::{Fallback, UavData};
use fanet_sim::features::{FeatureVector, Label, Sample};
use fanet_sim::{seed, AttackKind, FEATURE_COUNT};
use rand::Rng;

/// A sample whose features are `center + noise` on every column.
fn sample(node: usize, w: usize, label: Label, center: f64, rng: &mut impl Rng) -> Sample {
    let mut f = [0.0; FEATURE_COUNT];
    for (j, v) in f.iter_mut().enumerate() {
        // a few columns carry the class signal, the rest are shared noise
        let signal = if j % 4 == 0 { center } else { 0.0 };
        *v = 10.0 + signal + rng.random_range(-1.0..1.0) * (1.0 + j as f64 / 10.0);
    }
    Sample {
        topology_id: 0,
        attack_kind: AttackKind::Blackhole,
        attacker_ratio: 0.25,
        node_id: node,
        window_start_s: 50.0 * w as f64,
        features: FeatureVector(f),
        label,
    }
}

/// `uavs` UAVs with `per_class` samples each; the malicious class is shifted
/// by `gap` on every fourth feature.
pub fn synthetic(uavs: usize, per_class: usize, gap: f64, root: u64) -> Vec<UavData> {
    (1..=uavs)
        .map(|id| {
            let mut rng = seed::rng(seed::derive_indexed(root, "synthetic", id as u64));
            UavData {
                node_id: id,
                benign: (0..per_class).map(|w| sample(id, w, Label::Benign, 0.0, &mut rng)).collect(),
                malicious: (0..per_class).map(|w| sample(id, w, Label::Malicious, gap, &mut rng)).collect(),
                fallback: Fallback::Exact,
            }
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
