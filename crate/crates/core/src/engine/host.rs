use crate::catalog::{ActionCatalog, LeafKind};

use super::NodeStatus;

/// One leaf invocation as seen by the host.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionCall<'a> {
    pub action: &'a str,
    pub kind: LeafKind,
    /// Input ports with blackboard references already resolved.
    pub ports: &'a [(String, String)],
    /// 0-based count of earlier invocations of the same action in this run.
    pub invocation: usize,
}

impl ActionCall<'_> {
    pub fn port(&self, name: &str) -> Option<&str> {
        self.ports
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionOutcome {
    pub status: NodeStatus,
    /// Values for output ports, by port name.
    pub outputs: Vec<(String, String)>,
}

impl From<NodeStatus> for ActionOutcome {
    fn from(status: NodeStatus) -> Self {
        ActionOutcome {
            status,
            outputs: Vec::new(),
        }
    }
}

/// Executes the leaves of a tree.
///
/// Hosts must be deterministic: the outcome may depend only on the call and
/// on earlier calls since the last [`reset`](ActionHost::reset).
pub trait ActionHost {
    fn catalog(&self) -> &ActionCatalog;

    fn invoke(&mut self, call: &ActionCall<'_>) -> ActionOutcome;

    /// Called when a running leaf is interrupted.
    fn halt(&mut self, _action: &str) {}

    /// Clears per-run state before a new run.
    fn reset(&mut self) {}
}

/// Host backed by a closure.
pub struct FnHost<F> {
    catalog: ActionCatalog,
    behavior: F,
}

impl<F> FnHost<F>
where
    F: FnMut(&ActionCall<'_>) -> ActionOutcome,
{
    pub fn new(catalog: ActionCatalog, behavior: F) -> Self {
        FnHost { catalog, behavior }
    }
}

impl<F> ActionHost for FnHost<F>
where
    F: FnMut(&ActionCall<'_>) -> ActionOutcome,
{
    fn catalog(&self) -> &ActionCatalog {
        &self.catalog
    }

    fn invoke(&mut self, call: &ActionCall<'_>) -> ActionOutcome {
        (self.behavior)(call)
    }
}
