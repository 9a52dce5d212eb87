use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use btplan_core::lint::LintOptions;
use btplan_core::task::TASK_IDS;
use btplan_modelio::GenParams;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A minimal config, shown with config errors.
pub const CONFIG_EXAMPLE: &str = r#"phase = 2                 # 1: tasks 1-7, no repair; 2: tasks 1-9 with repair
# tasks = [1, 2, 3]
# modes = ["zs", "os"]
# attempts = 1
# syntax = "strict"       # or "lenient": unknown leaf actions are warnings
# example = "task"        # or "generic"

[params]
max_new_tokens = 1000
temperature = 0.0

[[models]]
label = "LlamaChat"
model = "llama-2-7b-chat-ft"
endpoint = "http://localhost:8000/v1"
# api_key_env = "OPENAI_API_KEY"
# replay = "sessions/llamachat"
"#;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Zs,
    Os,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Zs => "ZS",
            Mode::Os => "OS",
        }
    }

    pub fn long_label(self) -> &'static str {
        match self {
            Mode::Zs => "Zero-Shot",
            Mode::Os => "One-Shot",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Which lint settings decide syntactic correctness.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyntaxMode {
    #[default]
    Strict,
    /// Unknown leaf actions are accepted as custom nodes.
    Lenient,
}

impl SyntaxMode {
    pub fn lint_options(self) -> LintOptions {
        match self {
            SyntaxMode::Strict => LintOptions::strict(),
            SyntaxMode::Lenient => LintOptions::lenient(),
        }
    }
}

/// Source of the worked example in one-shot prompts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExampleSource {
    /// One example shared by all tasks.
    Generic,
    /// The example bundled with each task.
    Task,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub label: String,
    /// Model id sent to the endpoint; part of every session key.
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    /// Session directory, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_in_flight: Option<usize>,
}

impl ModelConfig {
    /// Directory name for this model's artifacts and recordings.
    pub fn slug(&self) -> String {
        slug(&self.label)
    }
}

pub fn slug(label: &str) -> String {
    let mut out = String::new();
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    out.trim_matches('-').to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default = "default_max_new_tokens")]
    pub max_new_tokens: u32,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default)]
    pub stop: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_max_new_tokens() -> u32 {
    1000
}

fn default_timeout() -> u64 {
    300
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig {
            max_new_tokens: default_max_new_tokens(),
            temperature: 0.0,
            stop: Vec::new(),
            timeout_secs: default_timeout(),
        }
    }
}

impl ParamsConfig {
    pub fn for_model(&self, model: &str) -> GenParams {
        GenParams {
            model: model.to_string(),
            max_new_tokens: self.max_new_tokens,
            temperature: self.temperature,
            stop: self.stop.clone(),
            timeout_secs: self.timeout_secs,
        }
    }
}

/// On-disk evaluation config. `phase` selects a preset that the other
/// fields override.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tasks: Option<Vec<u8>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<Mode>>,
    /// Adds the repaired (`+SA`) column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repair: Option<bool>,
    #[serde(default)]
    pub show_zs_sa: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concurrency: Option<usize>,
    #[serde(default)]
    pub syntax: SyntaxMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<ExampleSource>,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub models: Vec<ModelConfig>,
}

impl EvalConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies the phase preset and checks the result.
    pub fn plan(&self) -> Result<EvalPlan, ConfigError> {
        let (tasks, repair, example) = match self.phase {
            Some(1) => (TASK_IDS[..7].to_vec(), false, ExampleSource::Generic),
            Some(2) | None => (TASK_IDS.to_vec(), true, ExampleSource::Task),
            Some(p) => return Err(ConfigError::Invalid(format!("unknown phase {p}; expected 1 or 2"))),
        };
        let tasks = self.tasks.clone().unwrap_or(tasks);
        if tasks.is_empty() {
            return Err(ConfigError::Invalid("task list is empty".into()));
        }
        if let Some(t) = tasks.iter().find(|t| !TASK_IDS.contains(t)) {
            return Err(ConfigError::Invalid(format!("unknown task {t}")));
        }
        let tasks: Vec<u8> = tasks.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let modes: Vec<Mode> = self
            .modes
            .clone()
            .unwrap_or(vec![Mode::Zs, Mode::Os])
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if modes.is_empty() {
            return Err(ConfigError::Invalid("mode list is empty".into()));
        }
        if self.models.is_empty() {
            return Err(ConfigError::Invalid("no models configured".into()));
        }
        let mut slugs = BTreeSet::new();
        for m in &self.models {
            if m.slug().is_empty() {
                return Err(ConfigError::Invalid(format!("model label '{}' has no usable characters", m.label)));
            }
            if !slugs.insert(m.slug()) {
                return Err(ConfigError::Invalid(format!("duplicate model label '{}'", m.label)));
            }
        }
        let attempts = self.attempts.unwrap_or(1);
        if attempts == 0 {
            return Err(ConfigError::Invalid("attempts must be at least 1".into()));
        }
        self.params
            .for_model("check")
            .check()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(EvalPlan {
            phase: self.phase,
            tasks,
            modes,
            repair: self.repair.unwrap_or(repair),
            show_zs_sa: self.show_zs_sa,
            attempts,
            concurrency: self.concurrency.unwrap_or(4).max(1),
            syntax: self.syntax,
            example: self.example.unwrap_or(example),
            params: self.params.clone(),
            models: self.models.clone(),
        })
    }
}

/// A checked config with presets applied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalPlan {
    pub phase: Option<u8>,
    pub tasks: Vec<u8>,
    pub modes: Vec<Mode>,
    pub repair: bool,
    pub show_zs_sa: bool,
    pub attempts: usize,
    pub concurrency: usize,
    pub syntax: SyntaxMode,
    pub example: ExampleSource,
    pub params: ParamsConfig,
    pub models: Vec<ModelConfig>,
}

impl EvalPlan {
    /// Whether `mode` gets a repaired column.
    pub fn repairs(&self, mode: Mode) -> bool {
        self.repair && (mode == Mode::Os || self.show_zs_sa)
    }
}
