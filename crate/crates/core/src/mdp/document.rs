//! JSON document format for transition tables, plus a Python-dict style
//! listing of selected states.
//!
//! ```text
//! {
//!   "n_states": 50,
//!   "n_actions": 4,
//!   "initial_distribution": {"35": 1.0},
//!   "layout": {"rows": 5, "width": 10},
//!   "P": {
//!     "35": {
//!       "0": [[0.14285714285714285, 30, -1, false], ...],
//!       ...
//! ```
//!
//! States and actions are written in ascending numeric order and floats use
//! the shortest representation that parses back to the same value.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Deserialize;
use thiserror::Error;

use super::{Layout, TransitionEntry, TransitionTable, Violation};

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error{}: {message}", coords(*.state, *.action))]
    Schema {
        state: Option<usize>,
        action: Option<usize>,
        message: String,
    },
    #[error("table is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

fn coords(state: Option<usize>, action: Option<usize>) -> String {
    match (state, action) {
        (Some(s), Some(a)) => format!(" at state {s}, action {a}"),
        (Some(s), None) => format!(" at state {s}"),
        _ => String::new(),
    }
}

impl From<serde_json::Error> for DocumentError {
    fn from(e: serde_json::Error) -> Self {
        DocumentError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

/// Shortest round-trip decimal for a float.
pub(crate) fn float_text(x: f64) -> String {
    serde_json::to_string(&x).expect("finite float")
}

/// Integral values print without a fractional part, as in `-1` or `20`.
pub(crate) fn reward_text(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 && !(x == 0.0 && x.is_sign_negative()) {
        format!("{}", x as i64)
    } else {
        float_text(x)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLayout {
    rows: usize,
    width: usize,
}

/// Action key → `(probability, next_state, reward, done)` tuples.
type RawActions = BTreeMap<String, Vec<(f64, usize, f64, bool)>>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    n_states: usize,
    n_actions: usize,
    initial_distribution: BTreeMap<String, f64>,
    #[serde(default)]
    layout: Option<RawLayout>,
    #[serde(rename = "P")]
    p: BTreeMap<String, RawActions>,
}

fn index_key(key: &str, what: &str, state: Option<usize>) -> Result<usize, DocumentError> {
    key.parse::<usize>().map_err(|_| DocumentError::Schema {
        state,
        action: None,
        message: format!("{what} key {key:?} is not a non-negative integer"),
    })
}

impl TransitionTable {
    /// Serializes the table to its JSON document.
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        let _ = writeln!(out, "  \"n_states\": {},", self.n_states);
        let _ = writeln!(out, "  \"n_actions\": {},", self.n_actions);
        let init: Vec<String> = self
            .initial_distribution
            .iter()
            .map(|(s, p)| format!("\"{s}\": {}", float_text(*p)))
            .collect();
        let _ = writeln!(out, "  \"initial_distribution\": {{{}}},", init.join(", "));
        if let Some(l) = self.layout {
            let _ = writeln!(
                out,
                "  \"layout\": {{\"rows\": {}, \"width\": {}}},",
                l.rows, l.width
            );
        }
        out.push_str("  \"P\": {\n");
        for (s, actions) in self.entries.iter().enumerate() {
            let _ = writeln!(out, "    \"{s}\": {{");
            for (a, list) in actions.iter().enumerate() {
                let items: Vec<String> = list
                    .iter()
                    .map(|e| {
                        format!(
                            "[{}, {}, {}, {}]",
                            float_text(e.probability),
                            e.next_state,
                            reward_text(e.reward),
                            e.done
                        )
                    })
                    .collect();
                let sep = if a + 1 < actions.len() { "," } else { "" };
                let _ = writeln!(out, "      \"{a}\": [{}]{sep}", items.join(", "));
            }
            let sep = if s + 1 < self.entries.len() { "," } else { "" };
            let _ = writeln!(out, "    }}{sep}");
        }
        out.push_str("  }\n}\n");
        out
    }

    /// Parses and validates a JSON table document.
    pub fn from_json(text: &str) -> Result<TransitionTable, DocumentError> {
        let raw: RawTable = serde_json::from_str(text)?;
        let schema = |state, action, message: String| DocumentError::Schema {
            state,
            action,
            message,
        };

        let mut rows: Vec<Option<Vec<Vec<TransitionEntry>>>> = vec![None; raw.n_states];
        for (skey, actions) in raw.p {
            let s = index_key(&skey, "state", None)?;
            if s >= raw.n_states {
                return Err(schema(
                    Some(s),
                    None,
                    format!("state index out of range 0..{}", raw.n_states),
                ));
            }
            let mut lists: Vec<Option<Vec<TransitionEntry>>> = vec![None; raw.n_actions];
            for (akey, list) in actions {
                let a = index_key(&akey, "action", Some(s))?;
                if a >= raw.n_actions {
                    return Err(schema(
                        Some(s),
                        Some(a),
                        format!("action index out of range 0..{}", raw.n_actions),
                    ));
                }
                lists[a] = Some(
                    list.into_iter()
                        .map(|(p, next, r, done)| TransitionEntry::new(p, next, r, done))
                        .collect(),
                );
            }
            let mut complete = Vec::with_capacity(raw.n_actions);
            for (a, list) in lists.into_iter().enumerate() {
                complete
                    .push(list.ok_or_else(|| schema(Some(s), Some(a), "missing action".into()))?);
            }
            rows[s] = Some(complete);
        }
        let mut entries = Vec::with_capacity(raw.n_states);
        for (s, row) in rows.into_iter().enumerate() {
            entries.push(row.ok_or_else(|| schema(Some(s), None, "missing state".into()))?);
        }

        let mut initial = BTreeMap::new();
        for (key, p) in raw.initial_distribution {
            initial.insert(index_key(&key, "initial state", None)?, p);
        }
        let table = TransitionTable::from_parts(
            raw.n_states,
            raw.n_actions,
            entries,
            initial,
            raw.layout.map(|l| Layout {
                rows: l.rows,
                width: l.width,
            }),
        );
        let report = table.validate();
        if report.is_empty() {
            Ok(table)
        } else {
            Err(DocumentError::Invalid(report))
        }
    }
}

/// Renders the given states in the `{state : { action : [(p, next, r, done)] } }`
/// listing style, with Python literals (`False`/`True`).
pub fn format_listing(table: &TransitionTable, states: &[usize]) -> String {
    let mut out = String::new();
    for &s in states {
        let head = format!("{s}: {{ ");
        let pad = " ".repeat(head.len());
        out.push_str(&head);
        for a in 0..table.n_actions() {
            if a > 0 {
                out.push_str(&pad);
            }
            let list = table.entries(s, a);
            let tuples: Vec<String> = list
                .iter()
                .map(|e| {
                    format!(
                        "({}, {}, {}, {})",
                        float_text(e.probability),
                        e.next_state,
                        reward_text(e.reward),
                        if e.done { "True" } else { "False" }
                    )
                })
                .collect();
            let close = if a + 1 == table.n_actions() {
                "]},"
            } else {
                "],"
            };
            if tuples.len() > 1 {
                let inner = format!("{pad}{}", " ".repeat(format!("{a}: [ ").len()));
                let _ = writeln!(out, "{a}: [ {}{close}", tuples.join(&format!(",\n{inner}")));
            } else {
                let _ = writeln!(out, "{a}: [{}{close}", tuples.join(", "));
            }
        }
    }
    out
}
