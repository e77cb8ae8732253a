//! Environment contract: discrete spaces, step outcomes, and the
//! `reset` / `step` / `render` interface every environment implements.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::mdp::{make_frozen_lake, Layout, TableError, TransitionTable};
use crate::rng::RngStream;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnvError {
    #[error("action {action} outside action space of size {size}")]
    InvalidAction { action: usize, size: usize },
    #[error("state {state} outside state space of size {size}")]
    InvalidState { state: usize, size: usize },
    #[error("step called on a finished episode; call reset first")]
    SteppedAfterDone,
    #[error("step called before reset")]
    NotReset,
    #[error("environment has no renderable layout")]
    NoLayout,
}

/// A finite index set `0..size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscreteSpace {
    size: usize,
}

impl DiscreteSpace {
    /// Panics if `size` is zero.
    pub fn new(size: usize) -> Self {
        assert!(size >= 1, "a discrete space needs at least one element");
        Self { size }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn contains(&self, index: usize) -> bool {
        index < self.size
    }

    /// Uniform draw over the space.
    pub fn sample(&self, rng: &mut RngStream) -> usize {
        rng.below(self.size)
    }
}

/// Uniform random action, the `action_space.sample()` of a random agent.
pub fn sample_action(space: DiscreteSpace, rng: &mut RngStream) -> usize {
    space.sample(rng)
}

/// The realized result of one `step`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: usize,
    pub reward: f64,
    pub done: bool,
    pub info: BTreeMap<String, String>,
}

impl StepOutcome {
    pub fn new(next_state: usize, reward: f64, done: bool) -> Self {
        Self {
            next_state,
            reward,
            done,
            info: BTreeMap::new(),
        }
    }
}

pub trait Environment {
    fn action_space(&self) -> DiscreteSpace;

    fn observation_space(&self) -> DiscreteSpace;

    /// Starts a new episode and returns the initial state.
    fn reset(&mut self, rng: &mut RngStream) -> usize;

    fn step(&mut self, action: usize, rng: &mut RngStream) -> Result<StepOutcome, EnvError>;

    /// Text picture of the current state. Must not change the environment.
    fn render(&self) -> Result<String, EnvError>;

    fn state(&self) -> usize;

    /// Absorbing terminal states whose action values stay at zero.
    fn terminal_states(&self) -> Vec<usize> {
        Vec::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Fresh,
    Running,
    Done,
}

/// An environment backed by an explicit [`TransitionTable`].
#[derive(Debug, Clone)]
pub struct TabularEnv {
    table: Arc<TransitionTable>,
    tiles: Option<Vec<char>>,
    state: usize,
    steps: usize,
    phase: Phase,
}

impl TabularEnv {
    /// Panics if the table fails validation; validate untrusted tables first.
    pub fn new(table: Arc<TransitionTable>) -> Self {
        let report = table.validate();
        assert!(report.is_empty(), "invalid transition table: {report:?}");
        let state = *table
            .initial_distribution()
            .keys()
            .next()
            .expect("validated");
        Self {
            table,
            tiles: None,
            state,
            steps: 0,
            phase: Phase::Fresh,
        }
    }

    /// Frozen-Lake with its map letters shown by `render`.
    pub fn frozen_lake(slippery: bool) -> Self {
        let mut env = Self::new(Arc::new(make_frozen_lake(slippery)));
        env.tiles = Some(crate::mdp::frozen_lake_tiles());
        env
    }

    /// Letters drawn in each cell by `render`, in state order.
    pub fn with_tiles(mut self, tiles: Vec<char>) -> Self {
        assert_eq!(tiles.len(), self.table.n_states());
        self.tiles = Some(tiles);
        self
    }

    pub fn table(&self) -> &Arc<TransitionTable> {
        &self.table
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }
}

impl Environment for TabularEnv {
    fn action_space(&self) -> DiscreteSpace {
        DiscreteSpace::new(self.table.n_actions())
    }

    fn observation_space(&self) -> DiscreteSpace {
        DiscreteSpace::new(self.table.n_states())
    }

    fn reset(&mut self, rng: &mut RngStream) -> usize {
        self.state = self.table.sample_initial(rng);
        self.steps = 0;
        self.phase = Phase::Running;
        self.state
    }

    fn step(&mut self, action: usize, rng: &mut RngStream) -> Result<StepOutcome, EnvError> {
        match self.phase {
            Phase::Fresh => return Err(EnvError::NotReset),
            Phase::Done => return Err(EnvError::SteppedAfterDone),
            Phase::Running => {}
        }
        let outcome = self
            .table
            .step_sample(self.state, action, rng)
            .map_err(|e| match e {
                TableError::InvalidAction { action, n_actions } => EnvError::InvalidAction {
                    action,
                    size: n_actions,
                },
                TableError::InvalidState { state, n_states } => EnvError::InvalidState {
                    state,
                    size: n_states,
                },
                TableError::Invalid(_) => unreachable!("step_sample does not validate"),
            })?;
        self.state = outcome.next_state;
        self.steps += 1;
        if outcome.done {
            self.phase = Phase::Done;
        }
        Ok(outcome)
    }

    fn render(&self) -> Result<String, EnvError> {
        let layout = self.table.layout().ok_or(EnvError::NoLayout)?;
        Ok(render_grid(layout, self.state, self.tiles.as_deref()))
    }

    fn state(&self) -> usize {
        self.state
    }

    fn terminal_states(&self) -> Vec<usize> {
        self.table.absorbing_terminals()
    }
}

/// Fixed-width grid, three columns per cell, with the current cell bracketed.
pub fn render_grid(layout: Layout, current: usize, tiles: Option<&[char]>) -> String {
    let mut out = String::new();
    for row in 0..layout.rows {
        for col in 0..layout.width {
            let s = layout.state(row, col);
            let c = tiles.map_or('.', |t| t[s]);
            if s == current {
                out.push('[');
                out.push(c);
                out.push(']');
            } else {
                out.push(' ');
                out.push(c);
                out.push(' ');
            }
        }
        out.push('\n');
    }
    out
}
