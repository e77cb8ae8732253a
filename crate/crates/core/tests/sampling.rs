//! Monte-Carlo checks of the sampling paths against their declared
//! probabilities. Each bound is at least three standard errors wide.

use std::collections::BTreeMap;
use std::sync::Arc;

use promo_gym_core::env::{sample_action, DiscreteSpace, Environment, TabularEnv};
use promo_gym_core::learner::{act, QTable};
use promo_gym_core::mdp::{TransitionEntry, TransitionTable};
use promo_gym_core::promo::{build_promo_mdp, PromoGridSpec};
use promo_gym_core::rng::RngStream;

const N: usize = 100_000;

fn three_sigma(p: f64) -> f64 {
    3.0 * (p * (1.0 - p) / N as f64).sqrt()
}

fn coin_table() -> TransitionTable {
    let stay = |s| vec![vec![TransitionEntry::certain(s, 0.0, true)]];
    TransitionTable::new(
        2,
        1,
        vec![stay(0), stay(1)],
        BTreeMap::from([(0, 0.5), (1, 0.5)]),
        None,
    )
    .unwrap()
}

#[test]
fn reset_follows_initial_distribution() {
    let mut env = TabularEnv::new(Arc::new(coin_table()));
    let mut rng = RngStream::new(11);
    let zeros = (0..N).filter(|_| env.reset(&mut rng) == 0).count();
    let freq = zeros as f64 / N as f64;
    assert!((freq - 0.5).abs() < 0.02, "{freq}");
    assert!((freq - 0.5).abs() < three_sigma(0.5), "{freq}");
}

#[test]
fn realign_is_uniform_over_available_channels() {
    let spec = PromoGridSpec::from_json(include_str!("../../../fixtures/promo/listing_spec.json"))
        .unwrap();
    let table = build_promo_mdp(&spec).unwrap();
    let mut rng = RngStream::new(5);
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for _ in 0..N {
        *counts
            .entry(table.step_sample(35, 0, &mut rng).unwrap().next_state)
            .or_default() += 1;
    }
    assert_eq!(
        counts.keys().copied().collect::<Vec<_>>(),
        vec![30, 31, 32, 33, 34, 35, 38]
    );
    let p = 1.0 / 7.0;
    for (&s, &c) in &counts {
        let freq = c as f64 / N as f64;
        assert!((freq - p).abs() < 0.01, "state {s}: {freq}");
        assert!((freq - p).abs() < three_sigma(p), "state {s}: {freq}");
    }
}

fn check_uniform4(mut draw: impl FnMut() -> usize) {
    let mut counts = [0usize; 4];
    for _ in 0..N {
        counts[draw()] += 1;
    }
    for (a, &c) in counts.iter().enumerate() {
        let freq = c as f64 / N as f64;
        assert!((freq - 0.25).abs() < 0.01, "action {a}: {freq}");
        assert!(
            (freq - 0.25).abs() < three_sigma(0.25),
            "action {a}: {freq}"
        );
    }
}

#[test]
fn sample_action_is_uniform() {
    let mut rng = RngStream::new(2);
    check_uniform4(|| sample_action(DiscreteSpace::new(4), &mut rng));
}

#[test]
fn full_exploration_ignores_q_values() {
    let q = QTable::from_rows(&[vec![0.0, 9.0, -3.0, 1.0]]);
    let mut rng = RngStream::new(3);
    check_uniform4(|| act(&q, 0, 1.0, &mut rng));
}

#[test]
fn slippery_lake_moves_split_in_thirds() {
    let mut env = TabularEnv::frozen_lake(true);
    let mut rng = RngStream::new(9);
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for _ in 0..N {
        env.reset(&mut rng);
        *counts
            .entry(env.step(1, &mut rng).unwrap().next_state)
            .or_default() += 1;
    }
    // From the start cell, "down" slips to left (stay), down (4) or right (1).
    assert_eq!(counts.keys().copied().collect::<Vec<_>>(), vec![0, 1, 4]);
    let p = 1.0 / 3.0;
    for &c in counts.values() {
        assert!((c as f64 / N as f64 - p).abs() < three_sigma(p));
    }
}
