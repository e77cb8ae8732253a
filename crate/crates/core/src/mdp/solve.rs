//! Value iteration, used throughout the test suite as the optimality oracle.

use thiserror::Error;

use super::{TransitionTable, Violation};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ValueSolution {
    pub values: Vec<f64>,
    /// Row-major `q[state][action]`.
    pub q: Vec<Vec<f64>>,
    pub policy: Vec<usize>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("discount {0} outside [0, 1)")]
    BadDiscount(f64),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("table is invalid ({} violations)", .0.len())]
    InvalidTable(Vec<Violation>),
    #[error("value iteration stopped at residual {} after {} iterations", .0.residual, .0.iterations)]
    NotConverged(Box<ValueSolution>),
}

/// Lowest-index argmax per row.
pub fn greedy_from_q(q: &[Vec<f64>]) -> Vec<usize> {
    q.iter().map(|row| argmax(row)).collect()
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (a, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = a;
        }
    }
    best
}

fn backup(table: &TransitionTable, gamma: f64, values: &[f64], q: &mut [Vec<f64>]) {
    for (s, row) in q.iter_mut().enumerate() {
        for (a, cell) in row.iter_mut().enumerate() {
            *cell = table
                .entries(s, a)
                .iter()
                .map(|e| {
                    let future = if e.done {
                        0.0
                    } else {
                        gamma * values[e.next_state]
                    };
                    e.probability * (e.reward + future)
                })
                .sum();
        }
    }
}

/// Synchronous Bellman optimality backups from `V = 0` until the max-norm
/// change in `V` drops below `tol`, or `max_iter` sweeps have run.
///
/// Entries flagged `done` contribute no future value. A run that exhausts
/// `max_iter` returns [`SolveError::NotConverged`] carrying the last iterate.
pub fn value_iteration(
    table: &TransitionTable,
    gamma: f64,
    tol: f64,
    max_iter: usize,
) -> Result<ValueSolution, SolveError> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(SolveError::BadDiscount(gamma));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(SolveError::BadTolerance(tol));
    }
    let report = table.validate();
    if !report.is_empty() {
        return Err(SolveError::InvalidTable(report));
    }

    let n = table.n_states();
    let mut values = vec![0.0; n];
    let mut q = vec![vec![0.0; table.n_actions()]; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;

    while iterations < max_iter {
        backup(table, gamma, &values, &mut q);
        iterations += 1;
        residual = 0.0;
        for (v, row) in values.iter_mut().zip(&q) {
            let next = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            residual = f64::max(residual, (next - *v).abs());
            *v = next;
        }
        if residual < tol {
            break;
        }
    }

    let solution = ValueSolution {
        policy: greedy_from_q(&q),
        converged: residual < tol,
        values,
        q,
        residual,
        iterations,
    };
    if solution.converged {
        Ok(solution)
    } else {
        Err(SolveError::NotConverged(Box::new(solution)))
    }
}
