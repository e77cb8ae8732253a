//! Discrete reinforcement-learning toolkit for promotional demand forecasting.
//!
//! The crate is organised bottom-up:
//!
//! - [`rng`] and [`env`]: the seeded random stream and the environment contract
//!   (`reset` / `step` / `render`) shared by every environment and agent.
//! - [`mdp`]: explicit transition tables, validation, the JSON document format,
//!   the Frozen-Lake reference environment and a value-iteration solver.
//! - [`ingest`]: retail CSV schemas, the unified daily sales series, 5-bin
//!   categorical binning and day-of-week profiles.
//! - [`promo`]: compiles a promotion grid into a transition table.
//! - [`learner`]: tabular Q-learning with epsilon-greedy exploration.
//! - [`metrics`]: reward curves, trace files, text rendering and SVG charts.

pub mod env;
pub mod ingest;
pub mod learner;
pub mod mdp;
pub mod metrics;
pub mod promo;
pub mod rng;

pub use env::{DiscreteSpace, EnvError, Environment, StepOutcome, TabularEnv};
pub use learner::{EpisodeTrace, LearnerConfig, QTable, Step};
pub use mdp::{TransitionEntry, TransitionTable, ValueSolution};
pub use promo::{ActionCode, PromoGridSpec};
pub use rng::RngStream;
