use std::collections::BTreeMap;

use super::{Layout, TransitionEntry, TransitionTable};

/// The standard 4x4 lake: S start, F frozen, H hole, G goal.
pub const FROZEN_LAKE_MAP: [&str; 4] = ["SFFF", "FHFH", "FFFH", "HFFG"];

const LEFT: usize = 0;
const DOWN: usize = 1;
const RIGHT: usize = 2;
const UP: usize = 3;

fn tile(row: usize, col: usize) -> u8 {
    FROZEN_LAKE_MAP[row].as_bytes()[col]
}

fn moved(row: usize, col: usize, action: usize) -> (usize, usize) {
    let last = FROZEN_LAKE_MAP.len() - 1;
    match action {
        LEFT => (row, col.saturating_sub(1)),
        DOWN => ((row + 1).min(last), col),
        RIGHT => (row, (col + 1).min(last)),
        UP => (row.saturating_sub(1), col),
        _ => unreachable!("frozen lake has four actions"),
    }
}

/// Builds the 16-state, 4-action Frozen-Lake MDP.
///
/// Actions are `0 = left, 1 = down, 2 = right, 3 = up`. Moving off the grid
/// leaves the agent in place. Holes and the goal are absorbing terminals.
/// Entering the goal pays 1, everything else pays 0. When `slippery`, the
/// intended move and both perpendicular moves each happen with probability
/// 1/3 (listed as `a-1, a, a+1` modulo 4).
pub fn make_frozen_lake(slippery: bool) -> TransitionTable {
    let size = FROZEN_LAKE_MAP.len();
    let layout = Layout {
        rows: size,
        width: size,
    };
    let outcome = |row: usize, col: usize, action: usize, probability: f64| {
        let (r, c) = moved(row, col, action);
        let t = tile(r, c);
        TransitionEntry::new(
            probability,
            layout.state(r, c),
            if t == b'G' { 1.0 } else { 0.0 },
            t == b'G' || t == b'H',
        )
    };

    let mut entries = Vec::with_capacity(size * size);
    for row in 0..size {
        for col in 0..size {
            let s = layout.state(row, col);
            let actions = (0..4)
                .map(|a| {
                    if matches!(tile(row, col), b'G' | b'H') {
                        vec![TransitionEntry::certain(s, 0.0, true)]
                    } else if slippery {
                        [(a + 3) % 4, a, (a + 1) % 4]
                            .into_iter()
                            .map(|b| outcome(row, col, b, 1.0 / 3.0))
                            .collect()
                    } else {
                        vec![outcome(row, col, a, 1.0)]
                    }
                })
                .collect();
            entries.push(actions);
        }
    }

    TransitionTable::from_parts(
        size * size,
        4,
        entries,
        BTreeMap::from([(0, 1.0)]),
        Some(layout),
    )
}

/// Tile letters in state order, for rendering.
pub(crate) fn frozen_lake_tiles() -> Vec<char> {
    FROZEN_LAKE_MAP.iter().flat_map(|r| r.chars()).collect()
}
