//! The `promo-gym` harness: ingest → build → train → eval, plus trace
//! rendering and metric export. Each subcommand is a plain function returning
//! the text it prints, so runs can be driven from tests as well as the binary.

pub mod manifest;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use promo_gym_core::env::TabularEnv;
use promo_gym_core::ingest::{self, IngestError};
use promo_gym_core::learner::{self, greedy_episode, EpisodeTrace, LearnError, QTable};
use promo_gym_core::mdp::{make_frozen_lake, TransitionTable};
use promo_gym_core::metrics::{self, compute_metrics, line_chart_svg, MetricsSeries};
use promo_gym_core::promo::{self, PromoGridSpec};
use promo_gym_core::rng::RngStream;
use serde::Serialize;
use thiserror::Error;

pub use manifest::{EnvironmentChoice, Manifest};

pub const SERIES_FILE: &str = "series.csv";
pub const BINS_FILE: &str = "bins.json";
pub const PROFILE_FILE: &str = "weekly_profile.csv";
pub const SPEC_FILE: &str = "spec.json";
pub const TABLE_FILE: &str = "table.json";
pub const QTABLE_FILE: &str = "qtable.json";
pub const MEAN_CUMULATIVE_FILE: &str = "mean_cumulative.csv";
pub const EPISODIC_FILE: &str = "episodic.csv";
pub const EVAL_FILE: &str = "eval.json";
pub const TRACES_DIR: &str = "traces";
pub const GREEDY_TRACE_FILE: &str = "greedy.csv";
pub const EXPORT_DIR: &str = "export";

/// Evaluation episodes draw from sub-streams offset past any training index.
const EVAL_STREAM_BASE: u64 = 1 << 40;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input data, manifest or configuration: exit code 2.
    #[error("{0}")]
    Input(String),
    /// Anything else: exit code 1.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<LearnError> for CliError {
    fn from(e: LearnError) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Command-line values that take precedence over the manifest.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Training episodes for `train`, evaluation episodes for `eval`.
    pub episodes: Option<usize>,
    pub slippery: Option<bool>,
    pub allow_empty_promos: bool,
    pub trace: Option<PathBuf>,
    pub table: Option<PathBuf>,
    pub qtable: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, manifest: &mut Manifest) {
        if let Some(seed) = self.seed {
            manifest.learner.seed = seed;
        }
        if let Some(out) = &self.out {
            manifest.output_dir = out.clone();
        }
        match &mut manifest.environment {
            EnvironmentChoice::FrozenLake { slippery } => {
                if let Some(s) = self.slippery {
                    *slippery = s;
                }
            }
            EnvironmentChoice::Promo {
                derive: Some(d), ..
            } if self.allow_empty_promos => d.allow_empty = true,
            _ => {}
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<fs::File, CliError> {
    fs::File::open(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Internal(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

fn name_of(path: &Path) -> String {
    path.display().to_string()
}

/// Parses the input CSVs, writes the unified series, the binning model and the
/// day-of-week profile.
pub fn cmd_ingest(manifest: &Manifest) -> Result<String, CliError> {
    let inputs = manifest.inputs()?;
    let mode = inputs.parse_mode();
    let promos = ingest::parse_promo_plan(
        &name_of(&inputs.promo_plan),
        open(&inputs.promo_plan)?,
        mode,
    )?;
    let online = ingest::parse_online(&name_of(&inputs.online), open(&inputs.online)?, mode)?;
    let rx = ingest::parse_rx(&name_of(&inputs.rx), open(&inputs.rx)?, mode)?;
    let calendar = ingest::parse_calendar(&name_of(&inputs.holidays), open(&inputs.holidays)?)?;
    let zips = match &inputs.zip_stores {
        Some(p) => ingest::parse_zip_store_map(&name_of(p), open(p)?)?,
        None => ingest::ZipStoreMap::default(),
    };

    let series = ingest::unify(
        &online.records,
        &rx.records,
        &promos.records,
        &calendar,
        &zips,
    )?;
    let bins = ingest::fit_bins(&series)?;
    let profile = ingest::weekly_profile(&series, &bins);

    write(&manifest.out(SERIES_FILE), &ingest::series_to_csv(&series))?;
    write(
        &manifest.out(BINS_FILE),
        &(serde_json::to_string_pretty(&bins).expect("bins serialize") + "\n"),
    )?;
    write(&manifest.out(PROFILE_FILE), &profile_csv(&profile))?;

    let mut report = String::new();
    let _ = writeln!(
        report,
        "ingest: {} promo rows, {} online rows, {} rx rows -> {} series records",
        promos.records.len(),
        online.records.len(),
        rx.records.len(),
        series.len()
    );
    for (name, diags) in [
        ("promo plan", &promos.diagnostics),
        ("online", &online.diagnostics),
        ("rx", &rx.diagnostics),
    ] {
        for d in diags {
            let _ = writeln!(report, "skipped {name} {d}");
        }
    }
    let _ = writeln!(
        report,
        "bins: boundaries {:?}{}",
        bins.boundaries,
        if bins.degenerate { " (degenerate)" } else { "" }
    );
    Ok(report)
}

fn profile_csv(profile: &ingest::WeeklyProfile) -> String {
    let opt = |m: Option<u64>| m.map_or(String::new(), |v| v.to_string());
    let mut out = String::from("day_of_week,bin,count,total_units,median_units\n");
    for (day, cells) in profile.cells.iter().enumerate() {
        for (bin, c) in cells.iter().enumerate() {
            let _ = writeln!(
                out,
                "{day},{bin},{},{},{}",
                c.count,
                c.total_units,
                opt(c.median_units)
            );
        }
        let d = &profile.days[day];
        let _ = writeln!(
            out,
            "{day},all,{},{},{}",
            d.count,
            d.total_units,
            opt(d.median_units)
        );
    }
    out
}

fn load_spec(manifest: &Manifest) -> Result<PromoGridSpec, CliError> {
    let EnvironmentChoice::Promo { spec_file, derive } = &manifest.environment else {
        unreachable!("caller matched a promo environment");
    };
    if let Some(path) = spec_file {
        return PromoGridSpec::from_json(&read(path)?)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())));
    }
    let Some(options) = derive else {
        return Err(CliError::input(
            "promo environment needs `spec_file` or `derive`",
        ));
    };
    let inputs = manifest.inputs()?;
    let series_path = manifest.out(SERIES_FILE);
    let bins_path = manifest.out(BINS_FILE);
    if !series_path.exists() || !bins_path.exists() {
        return Err(CliError::input(format!(
            "{} or {} missing; run `ingest` first",
            series_path.display(),
            bins_path.display()
        )));
    }
    let series = ingest::parse_series(&name_of(&series_path), open(&series_path)?)?;
    let bins: ingest::BinningModel = serde_json::from_str(&read(&bins_path)?)
        .map_err(|e| CliError::input(format!("{}: {e}", bins_path.display())))?;
    let promos = ingest::parse_promo_plan(
        &name_of(&inputs.promo_plan),
        open(&inputs.promo_plan)?,
        inputs.parse_mode(),
    )?;
    promo::derive_spec_from_data(&series, &bins, &promos.records, options)
        .map_err(|e| CliError::input(e.to_string()))
}

/// Builds the environment's transition table and writes it as a validated
/// document.
pub fn cmd_build(manifest: &Manifest) -> Result<String, CliError> {
    let (table, what) = match &manifest.environment {
        EnvironmentChoice::FrozenLake { slippery } => (
            make_frozen_lake(*slippery),
            format!(
                "frozen-lake ({})",
                if *slippery {
                    "slippery"
                } else {
                    "non-slippery"
                }
            ),
        ),
        EnvironmentChoice::Promo { .. } => {
            let spec = load_spec(manifest)?;
            let table =
                promo::build_promo_mdp(&spec).map_err(|e| CliError::input(e.to_string()))?;
            write(&manifest.out(SPEC_FILE), &spec.to_json())?;
            (table, format!("promo grid ({} goals)", spec.goals.len()))
        }
        EnvironmentChoice::Table { path } => (
            TransitionTable::from_json(&read(path)?)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?,
            format!("table {}", path.display()),
        ),
    };
    let report = table.validate();
    if !report.is_empty() {
        let list: Vec<String> = report.iter().map(ToString::to_string).collect();
        return Err(CliError::input(format!(
            "table is invalid: {}",
            list.join("; ")
        )));
    }
    write(&manifest.out(TABLE_FILE), &table.to_json())?;
    Ok(format!(
        "build: {what}: {} states, {} actions -> {}\n",
        table.n_states(),
        table.n_actions(),
        manifest.out(TABLE_FILE).display()
    ))
}

fn load_table(path: &Path) -> Result<Arc<TransitionTable>, CliError> {
    if !path.exists() {
        return Err(CliError::input(format!(
            "{} missing; run `build` first",
            path.display()
        )));
    }
    TransitionTable::from_json(&read(path)?)
        .map(Arc::new)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub episodes: usize,
    pub mean_total_reward: Option<f64>,
    pub min_total_reward: Option<f64>,
    pub max_total_reward: Option<f64>,
    /// Episodes that ended `done` with a positive final reward.
    pub success_rate: Option<f64>,
    pub truncation_rate: Option<f64>,
}

impl EvalReport {
    fn from_traces(traces: &[EpisodeTrace]) -> Self {
        let n = traces.len();
        if n == 0 {
            return Self {
                episodes: 0,
                mean_total_reward: None,
                min_total_reward: None,
                max_total_reward: None,
                success_rate: None,
                truncation_rate: None,
            };
        }
        let totals: Vec<f64> = traces.iter().map(|t| t.total_reward).collect();
        let successes = traces
            .iter()
            .filter(|t| t.steps.last().is_some_and(|s| s.done && s.reward > 0.0))
            .count();
        let truncated = traces.iter().filter(|t| t.truncated).count();
        Self {
            episodes: n,
            mean_total_reward: Some(totals.iter().sum::<f64>() / n as f64),
            min_total_reward: totals.iter().copied().reduce(f64::min),
            max_total_reward: totals.iter().copied().reduce(f64::max),
            success_rate: Some(successes as f64 / n as f64),
            truncation_rate: Some(truncated as f64 / n as f64),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Greedy rollouts of `q` with learning off; episode `i` uses its own stream.
pub fn evaluate(
    table: &Arc<TransitionTable>,
    q: &QTable,
    episodes: usize,
    max_steps: usize,
    seed: u64,
) -> Result<(EvalReport, Vec<EpisodeTrace>), CliError> {
    q.check_dimensions(table.n_states(), table.n_actions())?;
    let root = RngStream::new(seed);
    let mut env = TabularEnv::new(table.clone());
    let traces = (0..episodes)
        .map(|i| {
            let mut rng = root.split(EVAL_STREAM_BASE + i as u64);
            greedy_episode(&mut env, q, max_steps, &mut rng)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((EvalReport::from_traces(&traces), traces))
}

fn write_metrics(dir: &Path, series: &MetricsSeries, plots: bool) -> Result<(), CliError> {
    write(
        &dir.join(MEAN_CUMULATIVE_FILE),
        &series.mean_cumulative_csv(),
    )?;
    write(&dir.join(EPISODIC_FILE), &series.episodic_csv())?;
    if plots {
        let mean: Vec<(f64, f64)> = series
            .mean_cumulative
            .iter()
            .map(|&(t, v)| (t as f64, v))
            .collect();
        let episodic: Vec<(f64, f64)> = series
            .episodic
            .iter()
            .map(|&(i, v)| (i as f64, v))
            .collect();
        write(
            &dir.join("mean_cumulative.svg"),
            &line_chart_svg(
                "Mean cumulative reward",
                "step",
                "mean cumulative reward",
                &mean,
            ),
        )?;
        write(
            &dir.join("episodic.svg"),
            &line_chart_svg("Episodic reward", "episode", "total reward", &episodic),
        )?;
    }
    Ok(())
}

/// Trains a Q-table on the built table and writes it with the reward curves
/// and (optionally) traces.
pub fn cmd_train(manifest: &Manifest, overrides: &Overrides) -> Result<String, CliError> {
    let mut config = manifest.learner.clone();
    if let Some(n) = overrides.episodes {
        config = config.with_episodes(n);
    }
    config.validate()?;
    let table = load_table(
        &overrides
            .table
            .clone()
            .unwrap_or_else(|| manifest.out(TABLE_FILE)),
    )?;
    let mut env = TabularEnv::new(table.clone());
    let (q, traces) = learner::train(&mut env, &config)?;

    write(&manifest.out(QTABLE_FILE), &q.to_json())?;
    let series = compute_metrics(&traces).map_err(|e| CliError::Internal(e.to_string()))?;
    if manifest.emit.metrics {
        write_metrics(&manifest.output_dir, &series, manifest.emit.plots)?;
    }

    let (report, _) = evaluate(
        &table,
        &q,
        manifest.eval_episodes,
        config.max_steps_per_episode,
        config.seed,
    )?;
    if manifest.emit.traces {
        let dir = manifest.out(TRACES_DIR);
        let last = traces.len() - 1;
        for (i, trace) in traces.iter().enumerate() {
            let sampled = manifest.trace_every > 0 && i % manifest.trace_every == 0;
            if sampled || i == last {
                write(
                    &dir.join(format!("train_{i:06}.csv")),
                    &metrics::trace_to_csv(trace),
                )?;
            }
        }
        let mut rng = RngStream::new(config.seed).split(EVAL_STREAM_BASE);
        let greedy = greedy_episode(&mut env, &q, config.max_steps_per_episode, &mut rng)?;
        write(
            &dir.join(GREEDY_TRACE_FILE),
            &metrics::trace_to_csv(&greedy),
        )?;
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        "train: {} episodes, seed {}, final episode reward {}",
        config.episodes,
        config.seed,
        series.episodic.last().map_or(0.0, |p| p.1)
    );
    let _ = writeln!(out, "greedy policy: {}", describe(&report));
    Ok(out)
}

fn describe(r: &EvalReport) -> String {
    match (r.mean_total_reward, r.success_rate, r.truncation_rate) {
        (Some(mean), Some(success), Some(trunc)) => format!(
            "{} episodes, mean reward {mean}, min {}, max {}, success rate {success}, truncation rate {trunc}",
            r.episodes,
            r.min_total_reward.unwrap_or(0.0),
            r.max_total_reward.unwrap_or(0.0),
        ),
        _ => format!("{} episodes", r.episodes),
    }
}

/// Greedy evaluation of a stored Q-table.
pub fn cmd_eval(manifest: &Manifest, overrides: &Overrides) -> Result<String, CliError> {
    let table = load_table(
        &overrides
            .table
            .clone()
            .unwrap_or_else(|| manifest.out(TABLE_FILE)),
    )?;
    let q_path = overrides
        .qtable
        .clone()
        .unwrap_or_else(|| manifest.out(QTABLE_FILE));
    let q = QTable::from_json(&read(&q_path)?)
        .map_err(|e| CliError::input(format!("{}: {e}", q_path.display())))?;
    let n = overrides.episodes.unwrap_or(manifest.eval_episodes);
    let (report, _) = evaluate(
        &table,
        &q,
        n,
        manifest.learner.max_steps_per_episode,
        manifest.learner.seed,
    )?;
    write(&manifest.out(EVAL_FILE), &report.to_json())?;
    Ok(format!("eval: {}\n", describe(&report)))
}

/// Text rendering of a trace file on its table's grid.
pub fn cmd_render(manifest: &Manifest, overrides: &Overrides) -> Result<String, CliError> {
    let table = load_table(
        &overrides
            .table
            .clone()
            .unwrap_or_else(|| manifest.out(TABLE_FILE)),
    )?;
    let trace_path = overrides
        .trace
        .clone()
        .unwrap_or_else(|| manifest.out(TRACES_DIR).join(GREEDY_TRACE_FILE));
    let trace = metrics::trace_from_csv(&read(&trace_path)?)
        .map_err(|e| CliError::input(format!("{}: {e}", trace_path.display())))?;
    metrics::render_trace(&trace, &table).map_err(|e| CliError::input(e.to_string()))
}

/// Recomputes reward curves from the training trace files in the output
/// directory and writes them under `export/`.
pub fn cmd_export_metrics(manifest: &Manifest) -> Result<String, CliError> {
    let dir = manifest.out(TRACES_DIR);
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("train_") && n.ends_with(".csv"))
        })
        .collect();
    files.sort();
    let traces = files
        .iter()
        .map(|p| {
            metrics::trace_from_csv(&read(p)?)
                .map_err(|e| CliError::input(format!("{}: {e}", p.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let series =
        compute_metrics(&traces).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?;
    let export = manifest.out(EXPORT_DIR);
    write_metrics(&export, &series, manifest.emit.plots)?;
    Ok(format!(
        "export-metrics: {} traces -> {}\n",
        traces.len(),
        export.display()
    ))
}

/// Loads a manifest and applies command-line overrides.
pub fn load_manifest(path: &Path, overrides: &Overrides) -> Result<Manifest, CliError> {
    let mut manifest = Manifest::load(path)?;
    overrides.apply(&mut manifest);
    Ok(manifest)
}
