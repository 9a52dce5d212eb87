use serde::{Deserialize, Serialize};

use super::NodeStatus;
use crate::lint::NodePath;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Tick,
    /// A running node was interrupted; `status` is the status it held.
    Halt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub tick: usize,
    pub node: usize,
    /// Node kind label, e.g. `Sequence`, `Action`, `Condition`.
    pub kind: String,
    /// Position of the source element in the model.
    pub path: NodePath,
    /// Catalog name for action and condition leaves.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ports: Vec<(String, String)>,
    pub status: NodeStatus,
    pub phase: Phase,
}

impl TraceEvent {
    pub fn port(&self, name: &str) -> Option<&str> {
        self.ports
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub events: Vec<TraceEvent>,
}

impl ExecutionTrace {
    /// Completed action and condition invocations, in order.
    pub fn action_events(&self) -> impl Iterator<Item = &TraceEvent> {
        self.events
            .iter()
            .filter(|e| e.action.is_some() && e.phase == Phase::Tick && e.status.is_terminal())
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}
