//! Run manifests: every input, environment and learner setting of a run.
//!
//! Relative paths resolve against the manifest's directory.

use std::path::{Path, PathBuf};

use promo_gym_core::ingest::ParseMode;
use promo_gym_core::learner::LearnerConfig;
use promo_gym_core::promo::DeriveOptions;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub promo_plan: PathBuf,
    pub online: PathBuf,
    pub rx: PathBuf,
    pub holidays: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zip_stores: Option<PathBuf>,
    #[serde(default)]
    pub lenient: bool,
}

impl Inputs {
    pub fn parse_mode(&self) -> ParseMode {
        if self.lenient {
            ParseMode::Lenient
        } else {
            ParseMode::Strict
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvironmentChoice {
    FrozenLake {
        #[serde(default)]
        slippery: bool,
    },
    /// A promotion grid, either from a spec file or derived from ingested data.
    Promo {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spec_file: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        derive: Option<DeriveOptions>,
    },
    /// A ready-made transition-table document.
    Table { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Emit {
    #[serde(default = "yes")]
    pub metrics: bool,
    #[serde(default = "yes")]
    pub traces: bool,
    #[serde(default = "yes")]
    pub plots: bool,
}

fn yes() -> bool {
    true
}

impl Default for Emit {
    fn default() -> Self {
        Self {
            metrics: true,
            traces: true,
            plots: true,
        }
    }
}

fn default_eval_episodes() -> usize {
    100
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Inputs>,
    pub environment: EnvironmentChoice,
    #[serde(default)]
    pub learner: LearnerConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub emit: Emit,
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: usize,
    /// Write a training trace every this many episodes (the last episode is
    /// always written). Zero writes only the last one.
    #[serde(default)]
    pub trace_every: usize,
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::input(format!("manifest: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        text
    }

    /// Reads a manifest, resolves its relative paths and checks that every
    /// referenced input exists.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let mut manifest = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        manifest.resolve(base);
        manifest.check_inputs()?;
        Ok(manifest)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(inputs) = &mut self.inputs {
            fix(&mut inputs.promo_plan);
            fix(&mut inputs.online);
            fix(&mut inputs.rx);
            fix(&mut inputs.holidays);
            if let Some(z) = &mut inputs.zip_stores {
                fix(z);
            }
        }
        match &mut self.environment {
            EnvironmentChoice::Promo {
                spec_file: Some(p), ..
            }
            | EnvironmentChoice::Table { path: p } => fix(p),
            _ => {}
        }
        fix(&mut self.output_dir);
    }

    fn check_inputs(&self) -> Result<(), CliError> {
        let mut paths: Vec<&Path> = Vec::new();
        if let Some(i) = &self.inputs {
            paths.extend([&i.promo_plan, &i.online, &i.rx, &i.holidays].map(PathBuf::as_path));
            paths.extend(i.zip_stores.as_deref());
        }
        match &self.environment {
            EnvironmentChoice::Promo {
                spec_file: Some(p), ..
            }
            | EnvironmentChoice::Table { path: p } => paths.push(p),
            _ => {}
        }
        match paths.into_iter().find(|p| !p.exists()) {
            Some(missing) => Err(CliError::input(format!(
                "input file {} does not exist",
                missing.display()
            ))),
            None => Ok(()),
        }
    }

    pub fn inputs(&self) -> Result<&Inputs, CliError> {
        self.inputs
            .as_ref()
            .ok_or_else(|| CliError::input("manifest has no `inputs` section"))
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }
}
