mod common;

use fanet_sim::{seed, FEATURE_COUNT};
use fsfl_ids::nn::{pairwise_distance, Arch, HeadKind, ModelKind, Network};
use fsfl_ids::train::pairwise_classify;
use fsfl_ids::{LabeledSet, Matrix, Scaler, TrainConfig, Trainer};
use proptest::prelude::*;
use rand::Rng;

fn toy(n: usize, root: u64) -> LabeledSet {
    let mut rng = seed::rng(root);
    let mut data = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let label = (i % 2) as f64;
        for j in 0..FEATURE_COUNT {
            let shift = if j < 5 { 2.0 * label - 1.0 } else { 0.0 };
            data.push(shift + rng.random_range(-0.5..0.5));
        }
        y.push(label);
    }
    LabeledSet::new(Matrix::new(n, FEATURE_COUNT, data).unwrap(), y).unwrap()
}

fn trainer(arch: Arch, s: u64) -> Trainer {
    let net = Network::init(arch, &mut seed::rng(s));
    Trainer::new(net, seed::rng(s + 1), TrainConfig { learning_rate: 0.01, batch_size: 5 })
}

#[test]
fn ragged_last_batch_is_still_a_step() {
    let mut t = trainer(Arch::classifier(ModelKind::Dnn), 1);
    t.train_epoch(&toy(36, 1)).unwrap();
    assert_eq!(t.adam.t, 8);
    t.train_epoch(&toy(20, 2)).unwrap();
    assert_eq!(t.adam.t, 12);
}

#[test]
fn separable_loss_falls_every_epoch() {
    for model in ModelKind::ALL {
        let data = toy(40, 3);
        let mut t = trainer(Arch::classifier(model), 4);
        let hist = t.train_epochs(&data, 10).unwrap();
        for w in hist.windows(2) {
            assert!(w[1] <= w[0] + 0.02, "{model}: {hist:?}");
        }
        assert!(hist[9] < 0.5 * hist[0], "{model}: {hist:?}");
    }
}

#[test]
fn training_is_deterministic() {
    let data = toy(30, 5);
    let run = || {
        let mut t = trainer(Arch::classifier(ModelKind::Cnn), 6);
        let h = t.train_epochs(&data, 3).unwrap();
        (h, t.net.params().to_vec())
    };
    assert_eq!(run(), run());
}

#[test]
fn empty_training_set_errors() {
    let mut t = trainer(Arch::classifier(ModelKind::Dnn), 1);
    assert!(t.train_epoch(&LabeledSet::default()).is_err());
}

#[test]
fn pair_head_arithmetic() {
    assert_eq!(pairwise_distance(&[1.0, 2.0], &[4.0, 6.0]).unwrap(), 25.0);
    assert!(pairwise_distance(&[1.0], &[1.0, 2.0]).is_err());
    let arch = Arch::new(ModelKind::Dnn, HeadKind::Pairwise);
    let mut net = Network::init(arch, &mut seed::rng(9));
    let x = [0.3; FEATURE_COUNT];
    let z = [-0.4; FEATURE_COUNT];
    assert_eq!(net.pair_probability(&x, &z).unwrap(), 0.5);
    let n = net.params().len();
    net.params_mut()[n - 2] = -1.0;
    net.params_mut()[n - 1] = 3.0;
    assert!((net.pair_probability(&x, &x).unwrap() - 0.952_574_126_822_433_4).abs() < 1e-12);
}

#[test]
fn pairwise_head_separates_clusters() {
    for model in ModelKind::ALL {
        let train = toy(40, 10);
        let held = toy(20, 11);
        let mut t = trainer(Arch::new(model, HeadKind::Pairwise), 12);
        t.train_epochs(&train, 30).unwrap();
        let (mut same, mut cross) = (Vec::new(), Vec::new());
        for i in 0..held.len() {
            for j in i + 1..held.len() {
                let p = t.net.pair_probability(held.x.row(i), held.x.row(j)).unwrap();
                if held.y[i] == held.y[j] { same.push(p) } else { cross.push(p) }
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&same) > mean(&cross), "{model}: {} vs {}", mean(&same), mean(&cross));
        let correct = (0..held.len())
            .filter(|&i| pairwise_classify(&t.net, &train, held.x.row(i)).unwrap() == (held.y[i] == 1.0))
            .count();
        assert!(correct >= 16, "{model}: {correct}/20");
    }
}

fn matrix_strategy() -> impl Strategy<Value = Matrix> {
    (2usize..30, 1usize..6).prop_flat_map(|(r, c)| {
        proptest::collection::vec(-1e3f64..1e3, r * c).prop_map(move |d| Matrix::new(r, c, d).unwrap())
    })
}

proptest! {
    #[test]
    fn standardized_columns_have_zero_mean_unit_std(x in matrix_strategy()) {
        let s = Scaler::fit(&x).unwrap();
        let t = s.transform(&x).unwrap();
        let n = x.rows() as f64;
        for j in 0..x.cols() {
            let mean = t.column(j).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
            let spread = x.column(j).fold(f64::NEG_INFINITY, f64::max) - x.column(j).fold(f64::INFINITY, f64::min);
            if spread > 1e-6 {
                let std = (t.column(j).map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                prop_assert!((std - 1.0).abs() < 1e-9, "std {}", std);
                // refitting standardized data is the identity up to rounding
                let again = Scaler::fit(&t).unwrap();
                prop_assert!(again.mean[j].abs() < 1e-9 && (again.std[j] - 1.0).abs() < 1e-9);
            } else if spread == 0.0 {
                prop_assert!(t.column(j).all(|v| v == 0.0));
            }
        }
    }

    #[test]
    fn test_rows_use_the_training_fit(train in matrix_strategy(), shift in -5.0f64..5.0) {
        let s = Scaler::fit(&train).unwrap();
        let mut test = train.clone();
        for i in 0..test.rows() {
            for v in test.row_mut(i) { *v += shift; }
        }
        let t = s.transform(&test).unwrap();
        for j in 0..train.cols() {
            for (a, b) in t.column(j).zip(train.column(j)) {
                prop_assert!((a - (b + shift - s.mean[j]) / s.std[j]).abs() < 1e-9);
            }
        }
    }
}
