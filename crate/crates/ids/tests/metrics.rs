use fsfl_ids::eval::{comm_cost, mean_std, pct, Confusion};
use fsfl_ids::nn::{Arch, ModelKind, Network};
use proptest::prelude::*;

#[test]
fn cnn_sinkhole_reference_rates() {
    let m = Confusion { tp: 59, fn_: 1, tn: 56, fp: 4 }.metrics().unwrap();
    assert_eq!(pct(m.dr.unwrap()), "98.33");
    assert_eq!(pct(m.fpr.unwrap()), "6.67");
}

#[test]
fn rounds_ratio_is_exactly_one_tenth() {
    for model in ModelKind::ALL {
        let w = Arch::classifier(model).param_count() as u64;
        assert_eq!(w as usize, Network::zeros(Arch::classifier(model)).params().len());
        for s in [4, 8] {
            let r = comm_cost(50, w, 10, s) as f64 / comm_cost(50, w, 100, s) as f64;
            assert_eq!(r, 0.1);
        }
    }
}

#[test]
fn population_spread() {
    assert_eq!(mean_std(&[1.0, 3.0]), (2.0, 1.0));
}

proptest! {
    #[test]
    fn metrics_ignore_uniform_scaling(tp in 0u64..50, fp in 0u64..50, tn in 0u64..50, fn_ in 0u64..50, k in 1u64..20) {
        prop_assume!(tp + fp + tn + fn_ > 0);
        let a = Confusion { tp, fp, tn, fn_ }.metrics().unwrap();
        let b = Confusion { tp: k * tp, fp: k * fp, tn: k * tn, fn_: k * fn_ }.metrics().unwrap();
        prop_assert!((a.accuracy - b.accuracy).abs() < 1e-12);
        prop_assert_eq!(a.dr.is_some(), b.dr.is_some());
        prop_assert!(a.dr.zip(b.dr).is_none_or(|(x, y)| (x - y).abs() < 1e-12));
        prop_assert!(a.fpr.zip(b.fpr).is_none_or(|(x, y)| (x - y).abs() < 1e-12));
        for v in [Some(a.accuracy), a.dr, a.fpr].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn cost_is_linear_in_each_factor(n in 1u64..100, w in 1u64..2000, e in 1u64..200, s in 1u64..9, k in 1u64..10) {
        let base = comm_cost(n, w, e, s);
        prop_assert_eq!(comm_cost(k * n, w, e, s), k as u128 * base);
        prop_assert_eq!(comm_cost(n, k * w, e, s), k as u128 * base);
        prop_assert_eq!(comm_cost(n, w, k * e, s), k as u128 * base);
        prop_assert_eq!(comm_cost(n, w, e, k * s), k as u128 * base);
        prop_assert_eq!(comm_cost(1, w, e, s), w as u128 * e as u128 * s as u128);
    }
}
