//! Reward curves, trace files, text rendering of episodes and SVG line charts.

use std::fmt::Write as _;

use thiserror::Error;

use crate::learner::{EpisodeTrace, Step};
use crate::mdp::document::float_text;
use crate::mdp::TransitionTable;
use crate::promo::{column_label, ActionCode, GRID_WIDTH};

pub const MEAN_CUMULATIVE_HEADER: &str = "step,mean_cumulative_reward";
pub const EPISODIC_HEADER: &str = "episode,total_reward";
pub const TRACE_HEADER: &str = "step,state,action,reward,next_state,done";

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no episodes to summarize")]
    EmptyInput,
    #[error("trace step {step}: state {state} outside 0..{n_states}")]
    StateOutOfRange {
        step: usize,
        state: usize,
        n_states: usize,
    },
    #[error("trace table has no grid layout")]
    NoLayout,
    #[error("trace file: {0}")]
    Trace(String),
    #[error("metrics file: {0}")]
    Series(String),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsSeries {
    /// `(step, mean cumulative reward)`, steps counted from 1.
    pub mean_cumulative: Vec<(usize, f64)>,
    /// `(episode, total reward)`, episodes counted from 0.
    pub episodic: Vec<(usize, f64)>,
}

/// Mean cumulative reward per step across episodes, plus per-episode totals.
///
/// An episode shorter than step `t` contributes its final cumulative reward
/// (carry-forward); an empty episode contributes zero.
pub fn compute_metrics(traces: &[EpisodeTrace]) -> Result<MetricsSeries, MetricsError> {
    if traces.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let horizon = traces.iter().map(EpisodeTrace::len).max().unwrap_or(0);
    let n = traces.len() as f64;
    let mean_cumulative = (1..=horizon)
        .map(|t| {
            let sum: f64 = traces
                .iter()
                .map(|tr| match tr.cumulative.len() {
                    0 => 0.0,
                    len => tr.cumulative[t.min(len) - 1],
                })
                .sum();
            (t, sum / n)
        })
        .collect();
    let episodic = traces
        .iter()
        .enumerate()
        .map(|(i, tr)| (i, tr.total_reward))
        .collect();
    Ok(MetricsSeries {
        mean_cumulative,
        episodic,
    })
}

impl MetricsSeries {
    pub fn mean_cumulative_csv(&self) -> String {
        let mut out = format!("{MEAN_CUMULATIVE_HEADER}\n");
        for (t, v) in &self.mean_cumulative {
            let _ = writeln!(out, "{t},{}", float_text(*v));
        }
        out
    }

    pub fn episodic_csv(&self) -> String {
        let mut out = format!("{EPISODIC_HEADER}\n");
        for (i, v) in &self.episodic {
            let _ = writeln!(out, "{i},{}", float_text(*v));
        }
        out
    }

    /// Reads back the two files written by [`Self::mean_cumulative_csv`] and
    /// [`Self::episodic_csv`].
    pub fn from_csv(mean_cumulative: &str, episodic: &str) -> Result<Self, MetricsError> {
        Ok(Self {
            mean_cumulative: read_pairs(mean_cumulative, MEAN_CUMULATIVE_HEADER)?,
            episodic: read_pairs(episodic, EPISODIC_HEADER)?,
        })
    }
}

fn read_pairs(text: &str, header: &str) -> Result<Vec<(usize, f64)>, MetricsError> {
    let err = |m: String| MetricsError::Series(m);
    let mut lines = text.lines();
    let found = lines.next().unwrap_or("").trim();
    if found != header {
        return Err(err(format!("expected header `{header}`, found `{found}`")));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let bad = || err(format!("row {}: {line:?}", i + 1));
            let (k, v) = line.split_once(',').ok_or_else(bad)?;
            Ok((
                k.trim().parse().map_err(|_| bad())?,
                v.trim().parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

/// Mean of the first and last `fraction` of a series (at least one point each).
pub fn head_tail_means(values: &[f64], fraction: f64) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let k = ((values.len() as f64 * fraction).floor() as usize).max(1);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    Some((mean(&values[..k]), mean(&values[values.len() - k..])))
}

pub fn trace_to_csv(trace: &EpisodeTrace) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    for (i, s) in trace.steps.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            i + 1,
            s.state,
            s.action,
            float_text(s.reward),
            s.next_state,
            s.done
        );
    }
    out
}

/// Parses a trace file. An episode whose last step is not `done` is read as
/// truncated.
pub fn trace_from_csv(text: &str) -> Result<EpisodeTrace, MetricsError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let err = |m: String| MetricsError::Trace(m);
    let header = reader
        .headers()
        .map_err(|e| err(e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != TRACE_HEADER {
        return Err(err(format!(
            "expected header `{TRACE_HEADER}`, found `{header}`"
        )));
    }
    let mut steps = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| err(format!("row {}: {e}", i + 1)))?;
        let field = |j: usize| record.get(j).unwrap_or("");
        let bad = |name: &str| {
            err(format!(
                "row {}: bad {name} {:?}",
                i + 1,
                field(header_index(name))
            ))
        };
        let step: usize = field(0).parse().map_err(|_| bad("step"))?;
        if step != i + 1 {
            return Err(err(format!("row {}: step {step} out of sequence", i + 1)));
        }
        steps.push(Step {
            state: field(1).parse().map_err(|_| bad("state"))?,
            action: field(2).parse().map_err(|_| bad("action"))?,
            reward: field(3).parse().map_err(|_| bad("reward"))?,
            next_state: field(4).parse().map_err(|_| bad("next_state"))?,
            done: field(5).parse().map_err(|_| bad("done"))?,
        });
    }
    if let Some(pos) = steps.iter().position(|s| s.done) {
        if pos + 1 != steps.len() {
            return Err(err(format!("row {}: done before the last step", pos + 1)));
        }
    }
    let truncated = steps.last().is_some_and(|s| !s.done);
    Ok(EpisodeTrace::from_steps(steps, truncated))
}

fn header_index(name: &str) -> usize {
    TRACE_HEADER.split(',').position(|h| h == name).unwrap_or(0)
}

fn action_label(table: &TransitionTable, action: usize) -> String {
    let promo = table.layout().is_some_and(|l| l.width == GRID_WIDTH) && table.n_actions() == 4;
    let lake =
        table.layout().is_some_and(|l| l.width == 4 && l.rows == 4) && table.n_actions() == 4;
    if promo {
        if let Some(code) = ActionCode::from_index(action) {
            return code.name().to_string();
        }
    }
    if lake {
        if let Some(name) = ["left", "down", "right", "up"].get(action) {
            return (*name).to_string();
        }
    }
    format!("a{action}")
}

/// Renders every position of an episode on the table's grid: a header line,
/// then one frame for the start and one per step. The current cell shows `●`.
pub fn render_trace(trace: &EpisodeTrace, table: &TransitionTable) -> Result<String, MetricsError> {
    let layout = table.layout().ok_or(MetricsError::NoLayout)?;
    let n_states = table.n_states();
    for (i, s) in trace.steps.iter().enumerate() {
        for state in [s.state, s.next_state] {
            if state >= n_states {
                return Err(MetricsError::StateOutOfRange {
                    step: i + 1,
                    state,
                    n_states,
                });
            }
        }
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        "episode: {} steps, total reward {}{}",
        trace.len(),
        crate::mdp::document::reward_text(trace.total_reward),
        if trace.truncated { " (truncated)" } else { "" }
    );
    let Some(first) = trace.steps.first() else {
        return Ok(out);
    };

    let labels: Vec<String> = (0..layout.width)
        .map(|c| {
            if layout.width == GRID_WIDTH {
                column_label(c)
            } else {
                format!("c{c}")
            }
        })
        .collect();
    let frame = |out: &mut String, current: usize| {
        out.push_str("    ");
        for l in &labels {
            let _ = write!(out, "{l:>4}");
        }
        out.push('\n');
        for row in 0..layout.rows {
            let _ = write!(out, "r{row:<3}");
            for col in 0..layout.width {
                let mark = if layout.state(row, col) == current {
                    "●"
                } else {
                    "·"
                };
                let _ = write!(out, "   {mark}");
            }
            out.push('\n');
        }
    };

    let (r, c) = layout.coords(first.state);
    let _ = writeln!(out, "start: state {} (row {r}, {})", first.state, labels[c]);
    frame(&mut out, first.state);
    let mut total = 0.0;
    for (i, s) in trace.steps.iter().enumerate() {
        total += s.reward;
        let (r, c) = layout.coords(s.next_state);
        let _ = writeln!(
            out,
            "step {}: {} reward {} total {} -> state {} (row {r}, {})",
            i + 1,
            action_label(table, s.action),
            crate::mdp::document::reward_text(s.reward),
            crate::mdp::document::reward_text(total),
            s.next_state,
            labels[c]
        );
        frame(&mut out, s.next_state);
        if s.done {
            if s.reward > 0.0 && action_label(table, s.action) == ActionCode::Forecast.name() {
                let _ = writeln!(
                    out,
                    "FORECAST ✓ goal reward {}",
                    crate::mdp::document::reward_text(s.reward)
                );
            } else {
                out.push_str("DONE\n");
            }
        }
    }
    Ok(out)
}

/// A self-contained SVG line chart of `(x, y)` points.
pub fn line_chart_svg(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 360.0;
    const M: f64 = 50.0;
    let (mut x0, mut x1, mut y0, mut y1) = (0.0, 1.0, 0.0, 1.0);
    if let Some(&(x, y)) = points.first() {
        (x0, x1, y0, y1) = (x, x, y, y);
        for &(x, y) in points {
            x0 = f64::min(x0, x);
            x1 = f64::max(x1, x);
            y0 = f64::min(y0, y);
            y1 = f64::max(y1, y);
        }
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let py = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let path: Vec<String> = points
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
        .collect();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{M}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        H - M,
        W - M,
        H - M
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{M}" y1="{M}" x2="{M}" y2="{}" stroke="black"/>"#,
        H - M
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        W / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    for (v, y) in [(y0, py(y0)), (y1, py(y1))] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{y:.2}" text-anchor="end" font-family="sans-serif" font-size="10">{v:.3}</text>"#,
            M - 4.0
        );
    }
    for (v, x) in [(x0, px(x0)), (x1, px(x1))] {
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="10">{v}</text>"#,
            H - M + 14.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
        path.join(" ")
    );
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(rewards: &[f64]) -> EpisodeTrace {
        let steps = rewards
            .iter()
            .enumerate()
            .map(|(i, &r)| Step {
                state: i,
                action: 0,
                reward: r,
                next_state: i + 1,
                done: i + 1 == rewards.len(),
            })
            .collect();
        EpisodeTrace::from_steps(steps, false)
    }

    #[test]
    fn series_csv_round_trip() {
        let m = compute_metrics(&[trace(&[1.0, -0.5]), trace(&[0.1])]).unwrap();
        let back = MetricsSeries::from_csv(&m.mean_cumulative_csv(), &m.episodic_csv()).unwrap();
        assert_eq!(back, m);
        assert!(MetricsSeries::from_csv("step,x\n", &m.episodic_csv()).is_err());
    }

    #[test]
    fn single_episode() {
        let m = compute_metrics(&[trace(&[-1.0, -1.0, 10.0])]).unwrap();
        assert_eq!(m.mean_cumulative, vec![(1, -1.0), (2, -2.0), (3, 8.0)]);
        assert_eq!(m.episodic, vec![(0, 8.0)]);
    }

    #[test]
    fn carry_forward() {
        let m = compute_metrics(&[trace(&[1.0]), trace(&[1.0, 1.0])]).unwrap();
        assert_eq!(m.mean_cumulative, vec![(1, 1.0), (2, 1.5)]);
    }

    #[test]
    fn identical_traces() {
        let t = trace(&[-1.0, 3.0, -10.0, 20.0]);
        let m = compute_metrics(&vec![t.clone(); 100]).unwrap();
        let expected: Vec<(usize, f64)> = t
            .cumulative
            .iter()
            .enumerate()
            .map(|(i, &v)| (i + 1, v))
            .collect();
        assert_eq!(m.mean_cumulative, expected);
    }

    #[test]
    fn empty_input() {
        assert_eq!(compute_metrics(&[]), Err(MetricsError::EmptyInput));
    }

    #[test]
    fn csv_headers() {
        let m = compute_metrics(&[trace(&[1.0, 2.0])]).unwrap();
        assert_eq!(
            m.mean_cumulative_csv(),
            "step,mean_cumulative_reward\n1,1.0\n2,3.0\n"
        );
        assert_eq!(m.episodic_csv(), "episode,total_reward\n0,3.0\n");
    }

    #[test]
    fn trace_file_round_trip() {
        let t = trace(&[-1.0, -10.0, 20.0]);
        let back = trace_from_csv(&trace_to_csv(&t)).unwrap();
        assert_eq!(back, t);
        assert!(trace_from_csv("a,b\n").is_err());
        assert!(trace_from_csv(&format!(
            "{TRACE_HEADER}\n1,0,0,1.0,1,true\n2,1,0,1.0,2,false\n"
        ))
        .is_err());
    }

    #[test]
    fn head_tail() {
        let v: Vec<f64> = (0..20).map(f64::from).collect();
        assert_eq!(head_tail_means(&v, 0.1), Some((0.5, 18.5)));
        assert_eq!(head_tail_means(&[], 0.1), None);
    }

    #[test]
    fn svg_is_well_formed() {
        let svg = line_chart_svg(
            "Mean <reward>",
            "step",
            "reward",
            &[(1.0, -1.0), (2.0, 3.0)],
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("Mean &lt;reward&gt;"));
        assert!(svg.contains("<polyline"));
    }
}
