//! Explicit tabular MDPs.
//!
//! A [`TransitionTable`] lists, for every `(state, action)`, the possible
//! outcomes as `(probability, next_state, reward, done)` entries. Tables are
//! immutable once built and can be shared between threads freely.

pub(crate) mod document;
mod frozen_lake;
mod solve;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::env::StepOutcome;
use crate::rng::RngStream;

pub use document::{format_listing, DocumentError};
pub(crate) use frozen_lake::frozen_lake_tiles;
pub use frozen_lake::{make_frozen_lake, FROZEN_LAKE_MAP};
pub(crate) use solve::argmax as solve_argmax;
pub use solve::{
    greedy_from_q, value_iteration, SolveError, ValueSolution, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE,
};

/// Probability mass tolerance used by [`TransitionTable::validate`].
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// One possible outcome of taking an action in a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionEntry {
    pub probability: f64,
    pub next_state: usize,
    pub reward: f64,
    pub done: bool,
}

impl TransitionEntry {
    pub fn new(probability: f64, next_state: usize, reward: f64, done: bool) -> Self {
        Self {
            probability,
            next_state,
            reward,
            done,
        }
    }

    /// A probability-one outcome.
    pub fn certain(next_state: usize, reward: f64, done: bool) -> Self {
        Self::new(1.0, next_state, reward, done)
    }
}

/// Grid geometry used for rendering: `state = row * width + col`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub rows: usize,
    pub width: usize,
}

impl Layout {
    pub fn coords(&self, state: usize) -> (usize, usize) {
        (state / self.width, state % self.width)
    }

    pub fn state(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }
}

/// One broken invariant found by [`TransitionTable::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub state: Option<usize>,
    pub action: Option<usize>,
    pub message: String,
}

impl Violation {
    fn at(state: Option<usize>, action: Option<usize>, message: impl Into<String>) -> Self {
        Self {
            state,
            action,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.state, self.action) {
            (Some(s), Some(a)) => write!(f, "state {s}, action {a}: {}", self.message),
            (Some(s), None) => write!(f, "state {s}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TableError {
    #[error("invalid transition table: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("state {state} out of range 0..{n_states}")]
    InvalidState { state: usize, n_states: usize },
    #[error("action {action} out of range 0..{n_actions}")]
    InvalidAction { action: usize, n_actions: usize },
}

/// The tabular MDP: `entries[state][action]` is the ordered outcome list.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    n_states: usize,
    n_actions: usize,
    entries: Vec<Vec<Vec<TransitionEntry>>>,
    initial_distribution: BTreeMap<usize, f64>,
    layout: Option<Layout>,
}

impl TransitionTable {
    /// Assembles a table without checking it. Use [`TransitionTable::new`] for
    /// a validated table.
    pub fn from_parts(
        n_states: usize,
        n_actions: usize,
        entries: Vec<Vec<Vec<TransitionEntry>>>,
        initial_distribution: BTreeMap<usize, f64>,
        layout: Option<Layout>,
    ) -> Self {
        Self {
            n_states,
            n_actions,
            entries,
            initial_distribution,
            layout,
        }
    }

    pub fn new(
        n_states: usize,
        n_actions: usize,
        entries: Vec<Vec<Vec<TransitionEntry>>>,
        initial_distribution: BTreeMap<usize, f64>,
        layout: Option<Layout>,
    ) -> Result<Self, TableError> {
        let table = Self::from_parts(n_states, n_actions, entries, initial_distribution, layout);
        let report = table.validate();
        if report.is_empty() {
            Ok(table)
        } else {
            Err(TableError::Invalid(report))
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn layout(&self) -> Option<Layout> {
        self.layout
    }

    pub fn initial_distribution(&self) -> &BTreeMap<usize, f64> {
        &self.initial_distribution
    }

    /// Outcome list for `(state, action)`. Panics on out-of-range indices.
    pub fn entries(&self, state: usize, action: usize) -> &[TransitionEntry] {
        &self.entries[state][action]
    }

    pub fn check_indices(&self, state: usize, action: usize) -> Result<(), TableError> {
        if state >= self.n_states {
            return Err(TableError::InvalidState {
                state,
                n_states: self.n_states,
            });
        }
        if action >= self.n_actions {
            return Err(TableError::InvalidAction {
                action,
                n_actions: self.n_actions,
            });
        }
        Ok(())
    }

    /// Every broken invariant, with coordinates. Empty for a well-formed table.
    pub fn validate(&self) -> Vec<Violation> {
        let mut report = Vec::new();
        if self.n_states == 0 {
            report.push(Violation::at(None, None, "n_states must be at least 1"));
        }
        if self.n_actions == 0 {
            report.push(Violation::at(None, None, "n_actions must be at least 1"));
        }
        if self.entries.len() != self.n_states {
            report.push(Violation::at(
                None,
                None,
                format!(
                    "{} state rows for n_states {}",
                    self.entries.len(),
                    self.n_states
                ),
            ));
        }
        for (s, actions) in self.entries.iter().enumerate() {
            if actions.len() != self.n_actions {
                report.push(Violation::at(
                    Some(s),
                    None,
                    format!(
                        "{} actions present, expected {}",
                        actions.len(),
                        self.n_actions
                    ),
                ));
            }
            for (a, list) in actions.iter().enumerate() {
                if list.is_empty() {
                    report.push(Violation::at(Some(s), Some(a), "no transition entries"));
                    continue;
                }
                let mut mass = 0.0;
                for (i, e) in list.iter().enumerate() {
                    if !(e.probability > 0.0 && e.probability <= 1.0) {
                        report.push(Violation::at(
                            Some(s),
                            Some(a),
                            format!("entry {i}: probability {} outside (0, 1]", e.probability),
                        ));
                    }
                    if e.next_state >= self.n_states {
                        report.push(Violation::at(
                            Some(s),
                            Some(a),
                            format!("entry {i}: next state {} out of range", e.next_state),
                        ));
                    }
                    if !e.reward.is_finite() {
                        report.push(Violation::at(
                            Some(s),
                            Some(a),
                            format!("entry {i}: non-finite reward"),
                        ));
                    }
                    mass += e.probability;
                }
                if (mass - 1.0).abs() > PROBABILITY_TOLERANCE {
                    report.push(Violation::at(
                        Some(s),
                        Some(a),
                        format!("probability mass {mass} ≠ 1"),
                    ));
                }
            }
        }
        let mut init_mass = 0.0;
        for (&s, &p) in &self.initial_distribution {
            if s >= self.n_states {
                report.push(Violation::at(
                    Some(s),
                    None,
                    "initial distribution names a state out of range",
                ));
            }
            if !(p > 0.0 && p <= 1.0) {
                report.push(Violation::at(
                    Some(s),
                    None,
                    format!("initial probability {p} outside (0, 1]"),
                ));
            }
            init_mass += p;
        }
        if (init_mass - 1.0).abs() > PROBABILITY_TOLERANCE {
            report.push(Violation::at(
                None,
                None,
                format!("initial distribution mass {init_mass} ≠ 1"),
            ));
        }
        if let Some(layout) = self.layout {
            if layout.rows * layout.width != self.n_states {
                report.push(Violation::at(
                    None,
                    None,
                    format!(
                        "layout {}x{} does not cover {} states",
                        layout.rows, layout.width, self.n_states
                    ),
                ));
            }
        }
        report
    }

    /// States where every action self-loops with `done = true` and zero reward.
    /// Their Q rows are pinned to zero by the learner.
    pub fn absorbing_terminals(&self) -> Vec<usize> {
        (0..self.n_states)
            .filter(|&s| {
                self.entries[s].iter().all(|list| {
                    list.iter()
                        .all(|e| e.next_state == s && e.done && e.reward == 0.0)
                })
            })
            .collect()
    }

    /// Draws an initial state from the declared distribution.
    pub fn sample_initial(&self, rng: &mut RngStream) -> usize {
        let u = rng.next_f64();
        let mut cumulative = 0.0;
        let mut last = 0;
        for (&s, &p) in &self.initial_distribution {
            cumulative += p;
            last = s;
            if u < cumulative {
                return s;
            }
        }
        last
    }

    /// Samples one outcome of `(state, action)` by inverse CDF over the entry
    /// list in listed order.
    pub fn step_sample(
        &self,
        state: usize,
        action: usize,
        rng: &mut RngStream,
    ) -> Result<StepOutcome, TableError> {
        self.check_indices(state, action)?;
        let (index, entry) = sample_entry(self.entries(state, action), rng);
        let mut outcome = StepOutcome::new(entry.next_state, entry.reward, entry.done);
        outcome.info.insert("entry".into(), index.to_string());
        Ok(outcome)
    }
}

fn sample_entry<'a>(
    list: &'a [TransitionEntry],
    rng: &mut RngStream,
) -> (usize, &'a TransitionEntry) {
    let u = rng.next_f64();
    let mut cumulative = 0.0;
    for (i, e) in list.iter().enumerate() {
        cumulative += e.probability;
        if u < cumulative {
            return (i, e);
        }
    }
    // Rounding can leave the cumulative sum a hair under one.
    let i = list.len() - 1;
    (i, &list[i])
}
