//! Deterministic tick engine.
//!
//! Semantics follow the BehaviorTree.CPP 4.x node library: `Sequence` and
//! `Fallback` remember the running child, the reactive variants restart from
//! the first child every tick and halt a running child they skip, and
//! `Parallel` skips children that already completed. Decorators with a finite
//! count loop inside a single tick; with `-1` ("forever") they yield
//! `RUNNING` between iterations so the tick budget bounds them. `Timeout`
//! counts ticks instead of milliseconds.

mod host;
mod trace;
mod tree;

pub use host::{ActionCall, ActionHost, ActionOutcome, FnHost};
pub use trace::{ExecutionTrace, Phase, TraceEvent};
pub use tree::{build_tree, BuildError, ExecutableTree, NodeId, RunResult};

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum NodeStatus {
    Success,
    Failure,
    Running,
}

impl NodeStatus {
    pub fn is_terminal(self) -> bool {
        self != NodeStatus::Running
    }

    pub fn inverted(self) -> NodeStatus {
        match self {
            NodeStatus::Success => NodeStatus::Failure,
            NodeStatus::Failure => NodeStatus::Success,
            NodeStatus::Running => NodeStatus::Running,
        }
    }

    pub fn parse(s: &str) -> Option<NodeStatus> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SUCCESS" => Some(NodeStatus::Success),
            "FAILURE" => Some(NodeStatus::Failure),
            "RUNNING" => Some(NodeStatus::Running),
            _ => None,
        }
    }
}

impl fmt::Display for NodeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeStatus::Success => "SUCCESS",
            NodeStatus::Failure => "FAILURE",
            NodeStatus::Running => "RUNNING",
        })
    }
}
