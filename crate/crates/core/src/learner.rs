//! Tabular Q-learning with epsilon-greedy exploration.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{EnvError, Environment};
use crate::mdp::document::float_text;
use crate::rng::RngStream;

#[derive(Debug, Error, PartialEq)]
pub enum LearnError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("update of Q[{state}][{action}] would be non-finite")]
    NonFinite { state: usize, action: usize },
    #[error("invalid learner config: {0}")]
    Config(String),
    #[error("Q-table is {q_states}x{q_actions} but environment is {env_states}x{env_actions}")]
    DimensionMismatch {
        q_states: usize,
        q_actions: usize,
        env_states: usize,
        env_actions: usize,
    },
    #[error("Q-table document: {0}")]
    Document(String),
}

/// State × action value estimates, zero-initialised. Rows of pinned terminal
/// states never change.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
    terminal: BTreeSet<usize>,
}

impl QTable {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            values: vec![0.0; n_states * n_actions],
            terminal: BTreeSet::new(),
        }
    }

    /// Builds a table from explicit rows. Panics on ragged rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n_actions = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == n_actions), "ragged Q rows");
        Self {
            n_states: rows.len(),
            n_actions,
            values: rows.concat(),
            terminal: BTreeSet::new(),
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Zeroes and freezes the rows of the given terminal states.
    pub fn pin_terminals(&mut self, states: impl IntoIterator<Item = usize>) {
        for s in states {
            self.row_mut(s).fill(0.0);
            self.terminal.insert(s);
        }
    }

    pub fn is_terminal(&self, state: usize) -> bool {
        self.terminal.contains(&state)
    }

    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[state * self.n_actions + action]
    }

    pub fn row(&self, state: usize) -> &[f64] {
        &self.values[state * self.n_actions..(state + 1) * self.n_actions]
    }

    fn row_mut(&mut self, state: usize) -> &mut [f64] {
        &mut self.values[state * self.n_actions..(state + 1) * self.n_actions]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values
            .chunks(self.n_actions)
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub fn max_value(&self, state: usize) -> f64 {
        self.row(state)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f64) -> QTable {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    pub fn check_dimensions(&self, n_states: usize, n_actions: usize) -> Result<(), LearnError> {
        if self.n_states == n_states && self.n_actions == n_actions {
            Ok(())
        } else {
            Err(LearnError::DimensionMismatch {
                q_states: self.n_states,
                q_actions: self.n_actions,
                env_states: n_states,
                env_actions: n_actions,
            })
        }
    }

    /// `{"n_states": .., "n_actions": .., "values": [[..], ..]}` with one row
    /// per line and shortest round-trip floats.
    pub fn to_json(&self) -> String {
        let mut out = String::from("{\n");
        let _ = writeln!(out, "  \"n_states\": {},", self.n_states);
        let _ = writeln!(out, "  \"n_actions\": {},", self.n_actions);
        out.push_str("  \"values\": [\n");
        for s in 0..self.n_states {
            let row: Vec<String> = self.row(s).iter().map(|&v| float_text(v)).collect();
            let sep = if s + 1 < self.n_states { "," } else { "" };
            let _ = writeln!(out, "    [{}]{sep}", row.join(", "));
        }
        out.push_str("  ]\n}\n");
        out
    }

    pub fn from_json(text: &str) -> Result<QTable, LearnError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            n_states: usize,
            n_actions: usize,
            values: Vec<Vec<f64>>,
        }
        let raw: Raw =
            serde_json::from_str(text).map_err(|e| LearnError::Document(e.to_string()))?;
        if raw.values.len() != raw.n_states {
            return Err(LearnError::Document(format!(
                "{} rows for n_states {}",
                raw.values.len(),
                raw.n_states
            )));
        }
        if let Some(s) = raw.values.iter().position(|r| r.len() != raw.n_actions) {
            return Err(LearnError::Document(format!(
                "row {s} has {} values, expected {}",
                raw.values[s].len(),
                raw.n_actions
            )));
        }
        let mut q = QTable::new(raw.n_states, raw.n_actions);
        q.values = raw.values.concat();
        Ok(q)
    }
}

fn argmax(row: &[f64]) -> usize {
    crate::mdp::solve_argmax(row)
}

/// Epsilon-greedy choice. Exploits with the lowest-index argmax.
pub fn act(q: &QTable, state: usize, epsilon: f64, rng: &mut RngStream) -> usize {
    if rng.next_f64() < epsilon {
        rng.below(q.n_actions)
    } else {
        argmax(q.row(state))
    }
}

/// One Q-learning update of cell `(s, a)`; returns the new value.
///
/// `target = r + gamma * max_a' Q[s_next][a']`, with no bootstrap when `done`.
#[allow(clippy::too_many_arguments)]
pub fn q_update(
    q: &mut QTable,
    s: usize,
    a: usize,
    reward: f64,
    s_next: usize,
    done: bool,
    alpha: f64,
    gamma: f64,
) -> Result<f64, LearnError> {
    let old = q.get(s, a);
    if q.is_terminal(s) {
        return Ok(old);
    }
    let target = if done {
        reward
    } else {
        reward + gamma * q.max_value(s_next)
    };
    let new = old + alpha * (target - old);
    if !new.is_finite() {
        return Err(LearnError::NonFinite {
            state: s,
            action: a,
        });
    }
    q.values[s * q.n_actions + a] = new;
    Ok(new)
}

pub fn greedy_policy(q: &QTable) -> Vec<usize> {
    (0..q.n_states).map(|s| argmax(q.row(s))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
    pub next_state: usize,
    pub done: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeTrace {
    pub steps: Vec<Step>,
    pub total_reward: f64,
    /// Running reward sum after each step.
    pub cumulative: Vec<f64>,
    /// The episode hit the step limit without finishing.
    pub truncated: bool,
}

impl EpisodeTrace {
    pub fn from_steps(steps: Vec<Step>, truncated: bool) -> Self {
        let mut total = 0.0;
        let cumulative = steps
            .iter()
            .map(|s| {
                total += s.reward;
                total
            })
            .collect();
        Self {
            steps,
            total_reward: total,
            cumulative,
            truncated,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn ended_done(&self) -> bool {
        self.steps.last().is_some_and(|s| s.done)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_episodes: usize,
    pub episodes: usize,
    pub max_steps_per_episode: usize,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            gamma: 0.99,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_episodes: 10_000,
            episodes: 20_000,
            max_steps_per_episode: 200,
            seed: 0,
        }
    }
}

impl LearnerConfig {
    /// Sets the episode count and decays epsilon over the first half.
    pub fn with_episodes(mut self, episodes: usize) -> Self {
        self.episodes = episodes;
        self.epsilon_decay_episodes = (episodes / 2).max(1);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), LearnError> {
        let fail = |m: String| Err(LearnError::Config(m));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return fail(format!("alpha {} outside (0, 1]", self.alpha));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return fail(format!("gamma {} outside [0, 1)", self.gamma));
        }
        for (name, e) in [
            ("epsilon_start", self.epsilon_start),
            ("epsilon_end", self.epsilon_end),
        ] {
            if !(0.0..=1.0).contains(&e) {
                return fail(format!("{name} {e} outside [0, 1]"));
            }
        }
        if self.epsilon_end > self.epsilon_start {
            return fail("epsilon_end exceeds epsilon_start".into());
        }
        for (name, n) in [
            ("episodes", self.episodes),
            ("epsilon_decay_episodes", self.epsilon_decay_episodes),
            ("max_steps_per_episode", self.max_steps_per_episode),
        ] {
            if n == 0 {
                return fail(format!("{name} must be at least 1"));
            }
        }
        Ok(())
    }

    /// Linear decay from `epsilon_start` to `epsilon_end` over
    /// `epsilon_decay_episodes`, then held.
    pub fn epsilon_at(&self, episode: usize) -> f64 {
        if episode >= self.epsilon_decay_episodes {
            return self.epsilon_end;
        }
        let progress = episode as f64 / self.epsilon_decay_episodes as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * progress
    }
}

/// Runs one episode: act, step, optionally update, until done or the step limit.
pub fn run_episode<E: Environment>(
    env: &mut E,
    q: &mut QTable,
    config: &LearnerConfig,
    epsilon: f64,
    rng: &mut RngStream,
    learning: bool,
) -> Result<EpisodeTrace, LearnError> {
    q.check_dimensions(env.observation_space().size(), env.action_space().size())?;
    let mut state = env.reset(rng);
    let mut steps = Vec::new();
    while steps.len() < config.max_steps_per_episode {
        let action = act(q, state, epsilon, rng);
        let outcome = env.step(action, rng)?;
        if learning {
            q_update(
                q,
                state,
                action,
                outcome.reward,
                outcome.next_state,
                outcome.done,
                config.alpha,
                config.gamma,
            )?;
        }
        steps.push(Step {
            state,
            action,
            reward: outcome.reward,
            next_state: outcome.next_state,
            done: outcome.done,
        });
        state = outcome.next_state;
        if outcome.done {
            return Ok(EpisodeTrace::from_steps(steps, false));
        }
    }
    Ok(EpisodeTrace::from_steps(steps, true))
}

/// A purely greedy rollout that leaves `q` untouched.
pub fn greedy_episode<E: Environment>(
    env: &mut E,
    q: &QTable,
    max_steps: usize,
    rng: &mut RngStream,
) -> Result<EpisodeTrace, LearnError> {
    let config = LearnerConfig {
        max_steps_per_episode: max_steps,
        ..LearnerConfig::default()
    };
    run_episode(env, &mut q.clone(), &config, 0.0, rng, false)
}

/// Trains from a zero table. Episode `i` draws from sub-stream `i` of the
/// configured seed, so runs are reproducible.
pub fn train<E: Environment>(
    env: &mut E,
    config: &LearnerConfig,
) -> Result<(QTable, Vec<EpisodeTrace>), LearnError> {
    config.validate()?;
    let mut q = QTable::new(env.observation_space().size(), env.action_space().size());
    q.pin_terminals(env.terminal_states());
    let root = RngStream::new(config.seed);
    let mut traces = Vec::with_capacity(config.episodes);
    for i in 0..config.episodes {
        let mut rng = root.split(i as u64);
        let epsilon = config.epsilon_at(i);
        traces.push(run_episode(env, &mut q, config, epsilon, &mut rng, true)?);
    }
    Ok((q, traces))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn act_tie_breaks_low() {
        let q = QTable::from_rows(&[vec![0.0, 5.0, 5.0, 1.0], vec![0.0; 4]]);
        let mut rng = RngStream::new(0);
        assert_eq!(act(&q, 0, 0.0, &mut rng), 1);
        assert_eq!(act(&q, 1, 0.0, &mut rng), 0);
    }

    #[test]
    fn update_arithmetic() {
        let mut q = QTable::new(2, 2);
        assert_eq!(
            q_update(&mut q, 0, 1, -1.0, 1, false, 0.5, 0.9).unwrap(),
            -0.5
        );
        let mut q = QTable::new(2, 2);
        assert_eq!(
            q_update(&mut q, 0, 0, 10.0, 1, true, 1.0, 0.9).unwrap(),
            10.0
        );
    }

    #[test]
    fn update_touches_one_cell() {
        let mut q = QTable::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let before = q.rows();
        q_update(&mut q, 1, 0, 1.0, 0, false, 0.3, 0.9).unwrap();
        let after = q.rows();
        assert_eq!(before[0], after[0]);
        assert_eq!(before[1][1], after[1][1]);
        assert_ne!(before[1][0], after[1][0]);
    }

    #[test]
    fn non_finite_update_is_an_error() {
        let mut q = QTable::from_rows(&[vec![f64::MAX], vec![f64::MAX]]);
        assert_eq!(
            q_update(&mut q, 0, 0, f64::MAX, 1, false, 1.0, 0.99),
            Err(LearnError::NonFinite {
                state: 0,
                action: 0
            })
        );
    }

    #[test]
    fn terminal_rows_stay_zero() {
        let mut q = QTable::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0]]);
        q.pin_terminals([1]);
        assert_eq!(q.row(1), &[0.0, 0.0]);
        q_update(&mut q, 1, 0, 5.0, 0, false, 1.0, 0.9).unwrap();
        assert_eq!(q.row(1), &[0.0, 0.0]);
    }

    #[test]
    fn greedy_policy_examples() {
        assert_eq!(greedy_policy(&QTable::new(3, 4)), vec![0, 0, 0]);
        assert_eq!(
            greedy_policy(&QTable::from_rows(&[vec![1.0, 3.0, 2.0, 0.0]])),
            vec![1]
        );
    }

    #[test]
    fn epsilon_schedule() {
        let c = LearnerConfig::default().with_episodes(100);
        assert_eq!(c.epsilon_at(0), 1.0);
        assert!((c.epsilon_at(25) - 0.525).abs() < 1e-12);
        assert_eq!(c.epsilon_at(50), 0.05);
        assert_eq!(c.epsilon_at(99), 0.05);
    }

    #[test]
    fn config_validation() {
        assert!(LearnerConfig::default().validate().is_ok());
        let bad = [
            LearnerConfig {
                episodes: 0,
                ..Default::default()
            },
            LearnerConfig {
                alpha: 0.0,
                ..Default::default()
            },
            LearnerConfig {
                gamma: 1.0,
                ..Default::default()
            },
            LearnerConfig {
                epsilon_end: 0.5,
                epsilon_start: 0.1,
                ..Default::default()
            },
            LearnerConfig {
                max_steps_per_episode: 0,
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(matches!(c.validate(), Err(LearnError::Config(_))), "{c:?}");
        }
    }

    #[test]
    fn q_document_round_trip() {
        let q = QTable::from_rows(&[vec![0.1, -2.5e-17, 1.0 / 3.0], vec![0.0, 7.0, -0.0]]);
        assert_eq!(QTable::from_json(&q.to_json()).unwrap().rows(), q.rows());
        assert!(matches!(
            QTable::from_json(r#"{"n_states": 2, "n_actions": 1, "values": [[0.0]]}"#),
            Err(LearnError::Document(_))
        ));
    }
}
