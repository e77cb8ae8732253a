//! The promotional forecasting grid.
//!
//! States are `row * width + column`: rows are inventory levels (one per sales
//! bin), columns 0..6 are the weekdays Monday..Sunday, and columns 7..9 are
//! auxiliary event channels. The four actions move within that grid:
//!
//! | code | action   | effect                                                      |
//! |------|----------|-------------------------------------------------------------|
//! | 0    | realign  | jump uniformly to an available channel in the same row      |
//! | 1    | lower    | one row down in inventory (state − width), clamped at row 0 |
//! | 2    | increase | one row up in inventory (state + width), clamped at the top |
//! | 3    | forecast | goal reward and episode end at a goal, else a penalty loop  |

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{
    assign_bin, lower_median, BinningModel, DailySalesRecord, PromoPlanRecord, BIN_COUNT,
};
use crate::mdp::{Layout, TransitionEntry, TransitionTable};

pub const GRID_WIDTH: usize = 10;
pub const DAY_COLUMNS: usize = 7;
pub const N_ACTIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionCode {
    Realign = 0,
    Lower = 1,
    Increase = 2,
    Forecast = 3,
}

impl ActionCode {
    pub const ALL: [ActionCode; 4] = [
        ActionCode::Realign,
        ActionCode::Lower,
        ActionCode::Increase,
        ActionCode::Forecast,
    ];

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ActionCode::Realign => "realign",
            ActionCode::Lower => "lower",
            ActionCode::Increase => "increase",
            ActionCode::Forecast => "forecast",
        }
    }
}

impl fmt::Display for ActionCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Column header labels: `Mon..Sun` then `A7 A8 A9`.
pub fn column_label(col: usize) -> String {
    const DAYS: [&str; 7] = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];
    DAYS.get(col)
        .map_or_else(|| format!("A{col}"), |d| d.to_string())
}

fn default_width() -> usize {
    GRID_WIDTH
}
fn default_step_reward() -> f64 {
    -1.0
}
fn default_forecast_fail_reward() -> f64 {
    -10.0
}
fn default_goal_reward() -> f64 {
    20.0
}

/// Layout and reward parameters that compile to a promotion [`TransitionTable`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromoGridSpec {
    pub rows: usize,
    #[serde(default = "default_width")]
    pub width: usize,
    /// Row → columns holding an available promotional channel.
    pub avail: BTreeMap<usize, BTreeSet<usize>>,
    /// `(row, column)` cells where forecasting succeeds.
    pub goals: BTreeSet<(usize, usize)>,
    #[serde(default = "default_step_reward")]
    pub step_reward: f64,
    #[serde(default = "default_forecast_fail_reward")]
    pub forecast_fail_reward: f64,
    #[serde(default = "default_goal_reward")]
    pub goal_reward: f64,
    pub initial_states: BTreeSet<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("rows must be at least 1")]
    NoRows,
    #[error("width must be {GRID_WIDTH}, got {0}")]
    Width(usize),
    #[error("row {row}: no availability set")]
    MissingAvail { row: usize },
    #[error("row {row}: availability set is empty")]
    EmptyAvail { row: usize },
    #[error("row {row}: availability given for a row outside 0..rows")]
    AvailRowOutOfRange { row: usize },
    #[error("row {row}: available column {col} outside 0..width")]
    AvailColumnOutOfRange { row: usize, col: usize },
    #[error("goal (row {row}, column {col}) is not an available channel")]
    GoalNotAvailable { row: usize, col: usize },
    #[error("no initial states")]
    NoInitialStates,
    #[error("initial state (row {row}, column {col}) is outside the grid")]
    InitialOutOfRange { row: usize, col: usize },
    #[error("reward {name} = {value} is not allowed")]
    BadReward { name: &'static str, value: f64 },
    #[error("spec document: {0}")]
    Document(String),
}

impl PromoGridSpec {
    pub fn layout(&self) -> Layout {
        Layout {
            rows: self.rows,
            width: self.width,
        }
    }

    pub fn n_states(&self) -> usize {
        self.rows * self.width
    }

    pub fn is_goal(&self, state: usize) -> bool {
        self.goals.contains(&self.layout().coords(state))
    }

    pub fn check(&self) -> Result<(), SpecError> {
        if self.rows == 0 {
            return Err(SpecError::NoRows);
        }
        if self.width != GRID_WIDTH {
            return Err(SpecError::Width(self.width));
        }
        for (&row, cols) in &self.avail {
            if row >= self.rows {
                return Err(SpecError::AvailRowOutOfRange { row });
            }
            if cols.is_empty() {
                return Err(SpecError::EmptyAvail { row });
            }
            if let Some(&col) = cols.iter().find(|&&c| c >= self.width) {
                return Err(SpecError::AvailColumnOutOfRange { row, col });
            }
        }
        if let Some(row) = (0..self.rows).find(|r| !self.avail.contains_key(r)) {
            return Err(SpecError::MissingAvail { row });
        }
        for &(row, col) in &self.goals {
            if !self.avail.get(&row).is_some_and(|c| c.contains(&col)) {
                return Err(SpecError::GoalNotAvailable { row, col });
            }
        }
        if self.initial_states.is_empty() {
            return Err(SpecError::NoInitialStates);
        }
        if let Some(&(row, col)) = self
            .initial_states
            .iter()
            .find(|(r, c)| *r >= self.rows || *c >= self.width)
        {
            return Err(SpecError::InitialOutOfRange { row, col });
        }
        for (name, value) in [
            ("step_reward", self.step_reward),
            ("forecast_fail_reward", self.forecast_fail_reward),
        ] {
            if !value.is_finite() {
                return Err(SpecError::BadReward { name, value });
            }
        }
        if !(self.goal_reward.is_finite() && self.goal_reward > 0.0) {
            return Err(SpecError::BadReward {
                name: "goal_reward",
                value: self.goal_reward,
            });
        }
        Ok(())
    }

    /// One field per line; `avail` one row per line.
    pub fn to_json(&self) -> String {
        let avail: Vec<String> = self
            .avail
            .iter()
            .map(|(r, cols)| format!("    \"{r}\": {}", json(cols)))
            .collect();
        format!(
            "{{\n  \"rows\": {},\n  \"width\": {},\n  \"avail\": {{\n{}\n  }},\n  \"goals\": {},\n  \"step_reward\": {},\n  \"forecast_fail_reward\": {},\n  \"goal_reward\": {},\n  \"initial_states\": {}\n}}\n",
            self.rows,
            self.width,
            avail.join(",\n"),
            json(&self.goals),
            json(&self.step_reward),
            json(&self.forecast_fail_reward),
            json(&self.goal_reward),
            json(&self.initial_states),
        )
    }

    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        serde_json::from_str(text).map_err(|e| SpecError::Document(e.to_string()))
    }
}

/// Compiles the grid into a transition table.
///
/// Goal cells keep the ordinary realign/lower/increase moves; only forecasting
/// there pays `goal_reward` and ends the episode.
pub fn build_promo_mdp(spec: &PromoGridSpec) -> Result<TransitionTable, SpecError> {
    spec.check()?;
    let layout = spec.layout();
    let step = spec.step_reward;

    let mut entries = Vec::with_capacity(spec.n_states());
    for s in 0..spec.n_states() {
        let (row, col) = layout.coords(s);
        let channels = &spec.avail[&row];
        let share = 1.0 / channels.len() as f64;
        let realign = channels
            .iter()
            .map(|&c| TransitionEntry::new(share, layout.state(row, c), step, false))
            .collect();
        let lower = TransitionEntry::certain(layout.state(row.saturating_sub(1), col), step, false);
        let increase =
            TransitionEntry::certain(layout.state((row + 1).min(spec.rows - 1), col), step, false);
        let forecast = if spec.goals.contains(&(row, col)) {
            TransitionEntry::certain(s, spec.goal_reward, true)
        } else {
            TransitionEntry::certain(s, spec.forecast_fail_reward, false)
        };
        entries.push(vec![realign, vec![lower], vec![increase], vec![forecast]]);
    }

    let share = 1.0 / spec.initial_states.len() as f64;
    let initial = spec
        .initial_states
        .iter()
        .map(|&(r, c)| (layout.state(r, c), share))
        .collect();

    let table =
        TransitionTable::from_parts(spec.n_states(), N_ACTIONS, entries, initial, Some(layout));
    debug_assert!(table.validate().is_empty());
    Ok(table)
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value)
        .expect("serializable")
        .replace(',', ", ")
}

/// Which store-product series and week to build an environment for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeriveOptions {
    pub store_id: String,
    pub product_id: String,
    /// Any date in the target week; the week runs Monday..Sunday.
    pub week: NaiveDate,
    /// Emit a promotion-free spec instead of failing when the week has no promotions.
    #[serde(default)]
    pub allow_empty: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeriveError {
    #[error("no sales records for store {store_id}, product {product_id}")]
    UnknownScope {
        store_id: String,
        product_id: String,
    },
    #[error("no promotion for store {store_id}, product {product_id} in the week of {week_start}")]
    NoPromoInHorizon {
        store_id: String,
        product_id: String,
        week_start: NaiveDate,
    },
    #[error(transparent)]
    Spec(#[from] SpecError),
}

const TRAILING_WEEKS: i64 = 4;
const AUX_COLUMNS: [usize; 3] = [7, 8, 9];

/// Derives a grid spec for one store-product and week from the unified series,
/// the fitted bins and the promotion plan.
///
/// - rows: one inventory level per sales bin.
/// - avail: the same for every row; the weekday columns with an active
///   non-seasonal promotion, plus one auxiliary column per seasonal event
///   (at most three, in event-id order). A week with no promotion falls back
///   to all seven weekday columns when `allow_empty` is set.
/// - goals: for every promotion day, the bin of that day's units. Days missing
///   from the series use the lower median of the trailing four same weekdays.
/// - initial state: the trailing-median bin on Monday.
pub fn derive_spec_from_data(
    series: &[DailySalesRecord],
    bins: &BinningModel,
    promos: &[PromoPlanRecord],
    options: &DeriveOptions,
) -> Result<PromoGridSpec, DeriveError> {
    let scoped: BTreeMap<NaiveDate, u64> = series
        .iter()
        .filter(|r| r.store_id == options.store_id && r.product_id == options.product_id)
        .map(|r| (r.date, r.units_sold))
        .collect();
    if scoped.is_empty() {
        return Err(DeriveError::UnknownScope {
            store_id: options.store_id.clone(),
            product_id: options.product_id.clone(),
        });
    }
    let week_start =
        options.week - Duration::days(i64::from(options.week.weekday().num_days_from_monday()));
    let week: Vec<NaiveDate> = (0..7).map(|d| week_start + Duration::days(d)).collect();

    let trailing_bin = |date: NaiveDate| {
        let mut units: Vec<u64> = (1..=TRAILING_WEEKS)
            .filter_map(|w| scoped.get(&(date - Duration::weeks(w))).copied())
            .collect();
        lower_median(&mut units).map_or(0, |m| assign_bin(bins, m))
    };
    let day_bin = |date: NaiveDate| {
        scoped
            .get(&date)
            .map_or_else(|| trailing_bin(date), |&u| assign_bin(bins, u))
    };

    let relevant: Vec<&PromoPlanRecord> = promos
        .iter()
        .filter(|p| p.store_id == options.store_id && p.product_id == options.product_id)
        .filter(|p| week.iter().any(|d| p.covers(*d)))
        .collect();

    let mut columns = BTreeSet::new();
    let mut goals = BTreeSet::new();
    for p in relevant.iter().filter(|p| !p.is_seasonal()) {
        for (col, &date) in week.iter().enumerate() {
            if p.covers(date) {
                columns.insert(col);
                goals.insert((day_bin(date), col));
            }
        }
    }
    let seasonal: BTreeSet<&str> = relevant
        .iter()
        .filter(|p| p.is_seasonal())
        .map(|p| p.event_id.as_str())
        .collect();
    columns.extend(AUX_COLUMNS.iter().take(seasonal.len()));

    if columns.is_empty() {
        if !options.allow_empty {
            return Err(DeriveError::NoPromoInHorizon {
                store_id: options.store_id.clone(),
                product_id: options.product_id.clone(),
                week_start,
            });
        }
        columns.extend(0..DAY_COLUMNS);
    }

    let rows = BIN_COUNT;
    let spec = PromoGridSpec {
        rows,
        width: GRID_WIDTH,
        avail: (0..rows).map(|r| (r, columns.clone())).collect(),
        goals,
        step_reward: default_step_reward(),
        forecast_fail_reward: default_forecast_fail_reward(),
        goal_reward: default_goal_reward(),
        initial_states: BTreeSet::from([(trailing_bin(week_start), 0)]),
    };
    spec.check()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn listing_spec() -> PromoGridSpec {
        let channels: BTreeSet<usize> = [0, 1, 2, 3, 4, 5, 8].into();
        PromoGridSpec {
            rows: 5,
            width: 10,
            avail: (0..5).map(|r| (r, channels.clone())).collect(),
            goals: BTreeSet::from([(2, 4)]),
            step_reward: -1.0,
            forecast_fail_reward: -10.0,
            goal_reward: 20.0,
            initial_states: BTreeSet::from([(3, 5)]),
        }
    }

    #[test]
    fn state_35_block() {
        let t = build_promo_mdp(&listing_spec()).unwrap();
        let realign = t.entries(35, 0);
        assert_eq!(realign.len(), 7);
        let next: Vec<usize> = realign.iter().map(|e| e.next_state).collect();
        assert_eq!(next, vec![30, 31, 32, 33, 34, 35, 38]);
        assert!(realign
            .iter()
            .all(|e| e.probability == 0.14285714285714285 && e.reward == -1.0 && !e.done));
        assert_eq!(
            t.entries(35, 1),
            &[TransitionEntry::certain(25, -1.0, false)]
        );
        assert_eq!(
            t.entries(35, 2),
            &[TransitionEntry::certain(45, -1.0, false)]
        );
        assert_eq!(
            t.entries(35, 3),
            &[TransitionEntry::certain(35, -10.0, false)]
        );
    }

    #[test]
    fn goal_forecast_terminates() {
        let mut spec = listing_spec();
        spec.goals = BTreeSet::from([(2, 3)]);
        let t = build_promo_mdp(&spec).unwrap();
        assert_eq!(
            t.entries(23, 3),
            &[TransitionEntry::certain(23, 20.0, true)]
        );
    }

    #[test]
    fn boundary_rows_clamp() {
        let t = build_promo_mdp(&listing_spec()).unwrap();
        assert_eq!(t.entries(4, 1), &[TransitionEntry::certain(4, -1.0, false)]);
        assert_eq!(
            t.entries(47, 2),
            &[TransitionEntry::certain(47, -1.0, false)]
        );
    }

    #[test]
    fn spec_errors_name_rows() {
        let mut spec = listing_spec();
        spec.avail.insert(2, BTreeSet::new());
        assert_eq!(
            build_promo_mdp(&spec),
            Err(SpecError::EmptyAvail { row: 2 })
        );

        let mut spec = listing_spec();
        spec.avail.remove(&4);
        assert_eq!(
            build_promo_mdp(&spec),
            Err(SpecError::MissingAvail { row: 4 })
        );

        let mut spec = listing_spec();
        spec.goals.insert((1, 6));
        assert_eq!(
            build_promo_mdp(&spec),
            Err(SpecError::GoalNotAvailable { row: 1, col: 6 })
        );

        let mut spec = listing_spec();
        spec.avail.get_mut(&0).unwrap().insert(10);
        assert_eq!(
            build_promo_mdp(&spec),
            Err(SpecError::AvailColumnOutOfRange { row: 0, col: 10 })
        );

        let mut spec = listing_spec();
        spec.width = 9;
        assert_eq!(build_promo_mdp(&spec), Err(SpecError::Width(9)));
    }

    #[test]
    fn spec_document_round_trip() {
        let spec = listing_spec();
        let text = spec.to_json();
        assert_eq!(PromoGridSpec::from_json(&text).unwrap(), spec);
        let minimal =
            r#"{"rows": 1, "avail": {"0": [3]}, "goals": [[0, 3]], "initial_states": [[0, 0]]}"#;
        let parsed = PromoGridSpec::from_json(minimal).unwrap();
        assert_eq!(parsed.width, 10);
        assert_eq!(parsed.goal_reward, 20.0);
        assert!(build_promo_mdp(&parsed).is_ok());
    }

    #[test]
    fn labels() {
        assert_eq!(column_label(0), "Mon");
        assert_eq!(column_label(6), "Sun");
        assert_eq!(column_label(8), "A8");
        assert_eq!(ActionCode::from_index(2), Some(ActionCode::Increase));
        assert_eq!(ActionCode::from_index(4), None);
    }
}
