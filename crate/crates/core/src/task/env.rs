use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ports_match;
use crate::catalog::{ActionCatalog, LeafKind};
use crate::engine::{ActionCall, ActionHost, ActionOutcome, NodeStatus};

/// A scripted response. The first rule whose matchers all hold wins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rule {
    pub action: String,
    /// Subset of input ports that must match; whitespace is ignored.
    #[serde(default)]
    pub ports: BTreeMap<String, String>,
    /// 0-based index among invocations of `action` in the current run.
    #[serde(default)]
    pub invocation: Option<usize>,
    /// Only applies while this flag is set.
    #[serde(default)]
    pub flag: Option<String>,
    /// Only applies while this flag is unset.
    #[serde(default)]
    pub unless_flag: Option<String>,
    pub status: NodeStatus,
    /// Values written to output ports.
    #[serde(default)]
    pub outputs: BTreeMap<String, String>,
}

/// Sets `flag` once `after` invocations matching `action`/`ports` happened.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Toggle {
    pub flag: String,
    pub action: String,
    #[serde(default)]
    pub ports: BTreeMap<String, String>,
    pub after: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentScript {
    /// Per-action status when no rule matches. Unlisted actions succeed and
    /// unlisted conditions fail.
    #[serde(default)]
    pub defaults: BTreeMap<String, NodeStatus>,
    #[serde(default)]
    pub rules: Vec<Rule>,
    #[serde(default)]
    pub toggles: Vec<Toggle>,
    /// Initial blackboard entries.
    #[serde(default)]
    pub blackboard: BTreeMap<String, String>,
}

impl EnvironmentScript {
    /// Every action name the script refers to, with a field path for errors.
    pub fn referenced_actions(&self) -> impl Iterator<Item = (String, &str)> {
        let defaults = self.defaults.keys().map(|a| (format!("environment.defaults.{a}"), a.as_str()));
        let rules = self
            .rules
            .iter()
            .enumerate()
            .map(|(i, r)| (format!("environment.rules[{i}].action"), r.action.as_str()));
        let toggles = self
            .toggles
            .iter()
            .enumerate()
            .map(|(i, t)| (format!("environment.toggles[{i}].action"), t.action.as_str()));
        defaults.chain(rules).chain(toggles)
    }
}

/// [`ActionHost`] driven by an [`EnvironmentScript`].
#[derive(Debug, Clone)]
pub struct ScriptedHost {
    catalog: ActionCatalog,
    script: EnvironmentScript,
    flags: BTreeSet<String>,
    toggle_counts: Vec<usize>,
}

impl ScriptedHost {
    pub fn new(catalog: ActionCatalog, script: EnvironmentScript) -> Self {
        let toggle_counts = vec![0; script.toggles.len()];
        ScriptedHost {
            catalog,
            script,
            flags: BTreeSet::new(),
            toggle_counts,
        }
    }

    pub fn flag(&self, name: &str) -> bool {
        self.flags.contains(name)
    }

    fn rule_applies(&self, rule: &Rule, call: &ActionCall<'_>) -> bool {
        rule.action == call.action
            && rule.invocation.is_none_or(|i| i == call.invocation)
            && rule.flag.as_ref().is_none_or(|f| self.flags.contains(f))
            && rule.unless_flag.as_ref().is_none_or(|f| !self.flags.contains(f))
            && ports_match(&rule.ports, call.ports)
    }
}

impl ActionHost for ScriptedHost {
    fn catalog(&self) -> &ActionCatalog {
        &self.catalog
    }

    fn invoke(&mut self, call: &ActionCall<'_>) -> ActionOutcome {
        let outcome = match self.script.rules.iter().find(|r| self.rule_applies(r, call)) {
            Some(rule) => ActionOutcome {
                status: rule.status,
                outputs: rule.outputs.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
            },
            None => {
                let fallback = match call.kind {
                    LeafKind::Action => NodeStatus::Success,
                    LeafKind::Condition => NodeStatus::Failure,
                };
                self.script.defaults.get(call.action).copied().unwrap_or(fallback).into()
            }
        };
        for (i, toggle) in self.script.toggles.iter().enumerate() {
            if toggle.action == call.action && ports_match(&toggle.ports, call.ports) {
                self.toggle_counts[i] += 1;
                if self.toggle_counts[i] >= toggle.after {
                    self.flags.insert(toggle.flag.clone());
                }
            }
        }
        outcome
    }

    fn reset(&mut self) {
        self.flags.clear();
        self.toggle_counts.iter_mut().for_each(|c| *c = 0);
    }
}
