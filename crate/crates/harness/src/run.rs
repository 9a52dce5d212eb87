//! Provider construction and the end-to-end `eval` driver.

use std::path::{Path, PathBuf};

use btplan_modelio::{HttpProvider, Provider, RecordingProvider, ReplayProvider};
use thiserror::Error;

use crate::config::{ConfigError, EvalConfig, ModelConfig};
use crate::eval::{run_eval, write, EvalError, Report};
use crate::report::write_report;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("model '{label}': {message}")]
    Provider { label: String, message: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Where completions come from.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum Source {
    /// Each model's own `endpoint` or `replay` entry.
    #[default]
    Config,
    /// `DIR/<slug>/` per model, unless the model names its own directory.
    Replay(PathBuf),
    /// Live endpoints, recorded into `DIR/<slug>/`.
    Record(PathBuf),
}

fn provider_error(model: &ModelConfig, e: impl ToString) -> RunError {
    RunError::Provider {
        label: model.label.clone(),
        message: e.to_string(),
    }
}

fn http(model: &ModelConfig) -> Result<HttpProvider, RunError> {
    let endpoint = model
        .endpoint
        .as_deref()
        .ok_or_else(|| provider_error(model, "no endpoint configured"))?;
    let mut p = HttpProvider::new(endpoint).map_err(|e| provider_error(model, e))?;
    if let Some(var) = &model.api_key_env {
        p = p.with_api_key_env(var);
    }
    if let Some(n) = model.max_in_flight {
        p = p.with_max_in_flight(n);
    }
    Ok(p)
}

fn replay(model: &ModelConfig, dir: PathBuf) -> Result<Box<dyn Provider>, RunError> {
    ReplayProvider::open(dir)
        .map(|p| Box::new(p) as Box<dyn Provider>)
        .map_err(|e| provider_error(model, e))
}

/// Builds one provider per configured model. `base` resolves relative paths.
pub fn build_providers(config: &EvalConfig, base: &Path, source: &Source) -> Result<Vec<Box<dyn Provider>>, RunError> {
    config
        .models
        .iter()
        .map(|m| match source {
            Source::Replay(dir) => {
                let d = m.replay.as_ref().map_or_else(|| dir.join(m.slug()), |r| dir.join(r));
                replay(m, d)
            }
            Source::Record(dir) => {
                let p = RecordingProvider::new(http(m)?, dir.join(m.slug())).map_err(|e| provider_error(m, e))?;
                Ok(Box::new(p) as Box<dyn Provider>)
            }
            Source::Config => match (&m.endpoint, &m.replay) {
                (_, Some(r)) => replay(m, base.join(r)),
                (Some(_), None) => Ok(Box::new(http(m)?) as Box<dyn Provider>),
                (None, None) => Err(provider_error(m, "needs an endpoint or a replay directory")),
            },
        })
        .collect()
}

/// Runs the evaluation and writes `report.md` and `report.json` into `out`.
pub fn execute(config: &EvalConfig, base: &Path, source: &Source, out: &Path) -> Result<Report, RunError> {
    let plan = config.plan()?;
    let providers = build_providers(config, base, source)?;
    if let Source::Record(dir) = source {
        // Lets `--replay dir` find the same models later.
        let mut recorded = config.clone();
        for m in &mut recorded.models {
            m.replay = None;
        }
        write(&dir.join("eval.toml"), &recorded.to_toml())?;
    }
    let report = run_eval(&plan, &providers, out)?;
    write_report(&report, out)?;
    Ok(report)
}
