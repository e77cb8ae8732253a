//! Inputs shared by the benchmarks.

use std::collections::{BTreeMap, BTreeSet};

use promo_gym_core::promo::PromoGridSpec;

/// A five-row grid with seven open channels per row and one goal cell.
pub fn listing_spec() -> PromoGridSpec {
    let channels: BTreeSet<usize> = [0, 1, 2, 3, 4, 5, 8].into();
    PromoGridSpec {
        rows: 5,
        width: 10,
        avail: (0..5)
            .map(|r| (r, channels.clone()))
            .collect::<BTreeMap<_, _>>(),
        goals: BTreeSet::from([(2, 4)]),
        step_reward: -1.0,
        forecast_fail_reward: -10.0,
        goal_reward: 20.0,
        initial_states: BTreeSet::from([(3, 5)]),
    }
}

/// A tall grid of `rows` rows with every column open, for scaling runs.
pub fn wide_spec(rows: usize) -> PromoGridSpec {
    let all: BTreeSet<usize> = (0..10).collect();
    PromoGridSpec {
        rows,
        width: 10,
        avail: (0..rows).map(|r| (r, all.clone())).collect(),
        goals: (0..rows).step_by(3).map(|r| (r, r % 10)).collect(),
        step_reward: -1.0,
        forecast_fail_reward: -10.0,
        goal_reward: 20.0,
        initial_states: BTreeSet::from([(rows / 2, 0)]),
    }
}
