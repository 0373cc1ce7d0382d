use std::collections::BTreeSet;

use fanet_sim::seed;
use fsfl_ids::hyperband::{run_hyperband, schedule, schedule_budget, Config, SearchSpace};
use proptest::prelude::*;

/// The successive-halving schedule for R = 9, eta = 3, written out by hand:
/// (bracket, rung) -> (configs, resource).
const R9: [(u32, u32, usize, f64); 6] = [
    (2, 0, 9, 1.0),
    (2, 1, 3, 3.0),
    (2, 2, 1, 9.0),
    (1, 0, 5, 3.0),
    (1, 1, 1, 9.0),
    (0, 0, 3, 9.0),
];

fn lr_objective(c: &Config, _r: f64) -> f64 {
    -(c["learning_rate"] - 0.005).powi(2)
}

#[test]
fn ledger_matches_the_closed_form_schedule() {
    let res = run_hyperband(&SearchSpace::default(), 9, 3, &mut seed::rng(1), lr_objective).unwrap();
    for (b, r, n, resource) in R9 {
        let rows: Vec<_> = res.ledger.trials.iter().filter(|t| t.bracket == b && t.rung == r).collect();
        assert_eq!(rows.len(), n, "bracket {b} rung {r}");
        assert!(rows.iter().all(|t| t.resource == resource));
    }
    assert_eq!(res.ledger.trials.len(), R9.iter().map(|x| x.2).sum::<usize>());
    let closed: f64 = R9.iter().map(|x| x.2 as f64 * x.3).sum();
    assert_eq!(closed, 78.0);
    assert_eq!(res.ledger.resource_spent(), closed);
    assert_eq!(schedule_budget(9, 3), closed);
    assert_eq!(res.best.unwrap().resource, 9.0);
}

#[test]
fn survivors_are_nested() {
    let res = run_hyperband(&SearchSpace::default(), 27, 3, &mut seed::rng(2), lr_objective).unwrap();
    for b in 0..=3u32 {
        let rungs: Vec<BTreeSet<usize>> = (0..=b)
            .map(|r| res.ledger.trials.iter().filter(|t| t.bracket == b && t.rung == r).map(|t| t.config_id).collect())
            .collect();
        for w in rungs.windows(2) {
            assert!(w[1].is_subset(&w[0]));
        }
    }
}

#[test]
fn unit_budget_is_random_search() {
    let res = run_hyperband(&SearchSpace::default(), 1, 3, &mut seed::rng(3), lr_objective).unwrap();
    assert_eq!(schedule(1, 3).len(), 1);
    assert!(res.ledger.trials.iter().all(|t| t.resource == 1.0 && t.rung == 0));
}

#[test]
fn synthetic_optimum_is_recovered() {
    for s in 0..5 {
        let res = run_hyperband(&SearchSpace::default(), 81, 3, &mut seed::rng(seed::derive(s, "hb")), lr_objective).unwrap();
        let lr = res.best.unwrap().config["learning_rate"];
        assert!((lr - 0.005).abs() <= 0.0005, "seed {s}: {lr}");
    }
}

#[test]
fn same_seed_same_ledger() {
    let run = || run_hyperband(&SearchSpace::default(), 9, 3, &mut seed::rng(4), lr_objective).unwrap();
    assert_eq!(run(), run());
}

#[test]
fn nan_trials_are_logged_and_skipped() {
    let res = run_hyperband(&SearchSpace::default(), 9, 3, &mut seed::rng(5), |c, _| {
        if c["learning_rate"] > 0.004 { f64::NAN } else { c["learning_rate"] }
    })
    .unwrap();
    assert!(res.ledger.trials.iter().any(|t| t.score.is_none()));
    if let Some(b) = res.best {
        assert!(b.score.is_some());
    }
}

#[test]
fn ledger_csv_has_one_row_per_trial() {
    let space = SearchSpace::default();
    let res = run_hyperband(&space, 9, 3, &mut seed::rng(6), lr_objective).unwrap();
    let mut buf = Vec::new();
    res.ledger.write_csv(&mut buf, &space).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1 + res.ledger.trials.len());
    assert!(text.starts_with("bracket,rung,config_id,learning_rate,resource,score"));
}

proptest! {
    #[test]
    fn budget_identity_holds(r in 1u64..300, eta in 2u64..5) {
        let res = run_hyperband(&SearchSpace::default(), r, eta, &mut seed::rng(r), lr_objective).unwrap();
        let closed: f64 = schedule(r, eta).iter().flatten().map(|x| x.configs as f64 * x.resource).sum();
        prop_assert!((res.ledger.resource_spent() - closed).abs() < 1e-9 * closed);
        let space = SearchSpace::default();
        prop_assert!(res.ledger.trials.iter().all(|t| space.contains(&t.config)));
    }
}
