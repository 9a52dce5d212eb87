//! Machine-checkable task specifications and trace-based validation.
//!
//! A [`TaskSpec`] bundles an action catalog, a scripted environment and a
//! [`TracePattern`]. [`validate`] lints the tree strictly, builds it
//! against the scripted host, runs it within the tick budget and matches
//! the resulting trace.

mod bundled;
mod env;
mod pattern;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bundled::{bundled_task, bundled_tasks, golden_xml, mutants, task_source, Mutant, MutantClass, TASK_IDS, TASK_SCHEMA};
pub use env::{EnvironmentScript, Rule, ScriptedHost, Toggle};
pub use pattern::{match_trace, EventMatcher, ForbiddenEvent, Precedence, TracePattern};

use crate::catalog::ActionCatalog;
use crate::engine::{build_tree, ExecutionTrace, NodeStatus};
use crate::lint::{lint, Severity};
use crate::prompt::ExamplePair;
use crate::xml::{parse, TreeModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub id: u8,
    pub title: String,
    /// Task description given to the model.
    pub prompt: String,
    pub max_ticks: usize,
    pub catalog: ActionCatalog,
    #[serde(default)]
    pub environment: EnvironmentScript,
    #[serde(default)]
    pub pattern: TracePattern,
    /// Worked example for one-shot prompting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<ExamplePair>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaskSpecError {
    #[error("{path}: {message}")]
    SchemaError { path: String, message: String },
    #[error("{path}: action '{action}' is not in the catalog")]
    UnknownActionInRule { path: String, action: String },
}

fn schema_error(path: impl Into<String>, message: impl Into<String>) -> TaskSpecError {
    TaskSpecError::SchemaError {
        path: path.into(),
        message: message.into(),
    }
}

pub fn load_task_spec(text: &str) -> Result<TaskSpec, TaskSpecError> {
    let de = toml::Deserializer::parse(text).map_err(|e| schema_error("", e.message()))?;
    let spec: TaskSpec = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = e.into_inner().message().to_string();
        schema_error(if path == "." { String::new() } else { path }, message)
    })?;
    check_spec(&spec)?;
    Ok(spec)
}

fn check_ports<'a>(
    catalog: &ActionCatalog,
    action: &str,
    ports: impl Iterator<Item = &'a String>,
    path: &str,
) -> Result<(), TaskSpecError> {
    let schema = &catalog.get(action).expect("checked action").ports;
    for port in ports {
        if !schema.accepts(port) {
            return Err(schema_error(
                format!("{path}.{port}"),
                format!("'{action}' has no port '{port}'"),
            ));
        }
    }
    Ok(())
}

fn check_spec(spec: &TaskSpec) -> Result<(), TaskSpecError> {
    if !(1..=9).contains(&spec.id) {
        return Err(schema_error("id", format!("task id {} is outside 1..=9", spec.id)));
    }
    if spec.max_ticks == 0 {
        return Err(schema_error("max_ticks", "must be positive"));
    }
    if spec.catalog.is_empty() {
        return Err(schema_error("catalog", "must declare at least one action"));
    }
    let catalog = &spec.catalog;
    let known = |path: String, action: &str| {
        if catalog.contains(action) {
            Ok(())
        } else {
            Err(TaskSpecError::UnknownActionInRule {
                path,
                action: action.to_string(),
            })
        }
    };
    for (path, action) in spec.environment.referenced_actions() {
        known(path, action)?;
    }
    for (i, rule) in spec.environment.rules.iter().enumerate() {
        let path = format!("environment.rules[{i}]");
        check_ports(catalog, &rule.action, rule.ports.keys(), &format!("{path}.ports"))?;
        let schema = &catalog.get(&rule.action).expect("checked action").ports;
        if let Some(port) = rule.outputs.keys().find(|p| !schema.is_output(p)) {
            return Err(schema_error(
                format!("{path}.outputs.{port}"),
                format!("'{port}' is not an output port of '{}'", rule.action),
            ));
        }
    }
    for (i, toggle) in spec.environment.toggles.iter().enumerate() {
        check_ports(catalog, &toggle.action, toggle.ports.keys(), &format!("environment.toggles[{i}].ports"))?;
    }
    let p = &spec.pattern;
    let mut matchers: Vec<(String, &EventMatcher)> = Vec::new();
    matchers.extend(p.ordered.iter().enumerate().map(|(i, m)| (format!("pattern.ordered[{i}]"), m)));
    matchers.extend(p.forbidden.iter().enumerate().map(|(i, f)| (format!("pattern.forbidden[{i}]"), &f.event)));
    for (i, prec) in p.precedence.iter().enumerate() {
        matchers.extend(prec.before.iter().enumerate().map(|(j, m)| (format!("pattern.precedence[{i}].before[{j}]"), m)));
        matchers.extend(prec.after.iter().enumerate().map(|(j, m)| (format!("pattern.precedence[{i}].after[{j}]"), m)));
    }
    for (path, m) in matchers {
        known(format!("{path}.action"), &m.action)?;
        check_ports(catalog, &m.action, m.ports.keys(), &format!("{path}.ports"))?;
    }
    if let Some(example) = &spec.example {
        example
            .validate(catalog)
            .map_err(|e| schema_error("example.tree", e.to_string()))?;
    }
    Ok(())
}

/// Compares port values ignoring whitespace, so `4, 7` matches `4,7`.
pub(crate) fn ports_match(expected: &BTreeMap<String, String>, actual: &[(String, String)]) -> bool {
    expected.iter().all(|(k, v)| {
        actual
            .iter()
            .any(|(ak, av)| ak == k && normalize(av) == normalize(v))
    })
}

fn normalize(value: &str) -> String {
    value.chars().filter(|c| !c.is_whitespace()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReasonClass {
    Parse,
    Lint,
    Build,
    Truncated,
    RootStatus,
    RuntimeFault,
    MissingEvent,
    OrderViolation,
    ForbiddenEvent,
    PrecedenceViolation,
}

impl fmt::Display for ReasonClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = serde_json::to_value(self).expect("unit variant");
        f.write_str(name.as_str().expect("string"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reason {
    pub class: ReasonClass,
    pub message: String,
}

impl Reason {
    pub fn new(class: ReasonClass, message: impl Into<String>) -> Self {
        Reason {
            class,
            message: message.into(),
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.class, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub passed: bool,
    pub reasons: Vec<Reason>,
    pub trace: ExecutionTrace,
    pub truncated: bool,
    /// Unset when the tree never ran.
    pub root_status: Option<NodeStatus>,
    pub ticks_used: usize,
}

impl Verdict {
    fn rejected(reasons: Vec<Reason>) -> Self {
        Verdict {
            passed: false,
            reasons,
            trace: ExecutionTrace::default(),
            truncated: false,
            root_status: None,
            ticks_used: 0,
        }
    }

    /// Class of the first failing stage.
    pub fn primary_class(&self) -> Option<ReasonClass> {
        self.reasons.first().map(|r| r.class)
    }
}

/// Lints, builds, runs and matches `model` against `spec`.
pub fn validate(model: &TreeModel, spec: &TaskSpec) -> Verdict {
    let errors: Vec<Reason> = lint(model, &spec.catalog)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .map(|d| Reason::new(ReasonClass::Lint, format!("{}:{}: {}", d.line, d.column, d.message)))
        .collect();
    if !errors.is_empty() {
        return Verdict::rejected(errors);
    }
    let host = ScriptedHost::new(spec.catalog.clone(), spec.environment.clone());
    let mut tree = match build_tree(model, host) {
        Ok(tree) => tree,
        Err(e) => return Verdict::rejected(vec![Reason::new(ReasonClass::Build, e.to_string())]),
    };
    for (k, v) in &spec.environment.blackboard {
        tree.set_blackboard(k.clone(), v.clone());
    }
    let run = tree.run_to_completion(spec.max_ticks);

    let mut reasons = Vec::new();
    if run.truncated {
        reasons.push(Reason::new(
            ReasonClass::Truncated,
            format!("still RUNNING after {} ticks", run.ticks_used),
        ));
    } else if spec.pattern.require_root_success && run.status != NodeStatus::Success {
        reasons.push(Reason::new(
            ReasonClass::RootStatus,
            format!("root finished with {}", run.status),
        ));
    }
    reasons.extend(run.faults.iter().map(|f| Reason::new(ReasonClass::RuntimeFault, f.clone())));
    reasons.extend(match_trace(&run.trace, &spec.pattern).1);

    Verdict {
        passed: reasons.is_empty(),
        reasons,
        trace: run.trace,
        truncated: run.truncated,
        root_status: Some(run.status),
        ticks_used: run.ticks_used,
    }
}

/// [`validate`] on XML text; parse errors become a failing verdict.
pub fn validate_xml(text: &str, spec: &TaskSpec) -> Verdict {
    match parse(text) {
        Ok(model) => validate(&model, spec),
        Err(e) => Verdict::rejected(vec![Reason::new(ReasonClass::Parse, e.to_string())]),
    }
}
