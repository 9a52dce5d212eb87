use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::host::{ActionCall, ActionHost};
use super::trace::{ExecutionTrace, Phase, TraceEvent};
use super::NodeStatus;
use crate::catalog::LeafKind;
use crate::kinds::{classify, parse_count, BuiltinLeaf, ControlKind, DecoratorKind, NodeClass, AUTOREMAP_ATTR};
use crate::lint::NodePath;
use crate::xml::{select_main_tree, MainTreeError, RawNode, TreeModel, ID_ATTR};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error(transparent)]
    MainTree(#[from] MainTreeError),
    #[error("tree '{tree}' has no root node")]
    EmptyTree { tree: String },
    #[error("tree '{tree}' has {count} root nodes")]
    TreeArity { tree: String, count: usize },
    #[error("unknown action '{name}' at {path}")]
    UnknownAction { name: String, path: NodePath },
    #[error("unknown node kind '{name}' at {path}")]
    UnknownNodeKind { name: String, path: NodePath },
    #[error("'{name}' at {path} has no children")]
    EmptyControl { name: String, path: NodePath },
    #[error("decorator '{name}' at {path} has {count} children")]
    DecoratorArity {
        name: String,
        path: NodePath,
        count: usize,
    },
    #[error("leaf '{name}' at {path} has children")]
    LeafWithChildren { name: String, path: NodePath },
    #[error("unresolved SubTree '{id}' at {path}")]
    UnresolvedSubTree { id: String, path: NodePath },
    #[error("SubTree '{id}' at {path} includes itself")]
    RecursiveSubTree { id: String, path: NodePath },
    #[error("'{name}' at {path} is missing required port '{port}'")]
    MissingRequiredPort {
        name: String,
        port: String,
        path: NodePath,
    },
    #[error("'{name}' at {path} has no port '{port}'")]
    UnknownPort {
        name: String,
        port: String,
        path: NodePath,
    },
    #[error("invalid parameter '{param}' on '{name}' at {path}: {reason}")]
    InvalidParameter {
        name: String,
        param: String,
        path: NodePath,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone)]
enum Binding {
    Key(String),
    Literal(String),
}

#[derive(Debug, Clone)]
struct Scope {
    parent: Option<usize>,
    remap: Vec<(String, Binding)>,
    autoremap: bool,
}

#[derive(Debug, Clone)]
enum Exec {
    Control {
        kind: ControlKind,
        success_threshold: usize,
        failure_threshold: usize,
    },
    Decorator {
        kind: DecoratorKind,
        /// Count parameter; negative means unbounded.
        count: i64,
    },
    Builtin(BuiltinLeaf),
    Leaf {
        name: String,
        kind: LeafKind,
        ports: Vec<(String, String)>,
        outputs: Vec<(String, String)>,
    },
    SubTree,
}

#[derive(Debug, Clone, Default)]
struct State {
    running: bool,
    cursor: usize,
    counter: i64,
    completed: Vec<Option<NodeStatus>>,
}

#[derive(Debug, Clone)]
struct Node {
    exec: Exec,
    label: String,
    path: NodePath,
    scope: usize,
    children: Vec<NodeId>,
    state: State,
}

/// Result of [`ExecutableTree::run_to_completion`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunResult {
    pub status: NodeStatus,
    pub trace: ExecutionTrace,
    pub ticks_used: usize,
    /// The tick budget ran out while the root was still running.
    pub truncated: bool,
    /// Host scripting errors and unresolved blackboard reads.
    pub faults: Vec<String>,
}

/// A built tree bound to its action host.
pub struct ExecutableTree<H> {
    nodes: Vec<Node>,
    root: NodeId,
    scopes: Vec<Scope>,
    blackboards: Vec<BTreeMap<String, String>>,
    initial_blackboard: BTreeMap<String, String>,
    invocations: HashMap<String, usize>,
    tick: usize,
    trace: ExecutionTrace,
    faults: Vec<String>,
    host: H,
}

struct Builder<'m, H> {
    model: &'m TreeModel,
    host: &'m H,
    nodes: Vec<Node>,
    scopes: Vec<Scope>,
    stack: Vec<String>,
}

fn param_count(node: &RawNode, param: &str, name: &str, path: &NodePath) -> Result<Option<i64>, BuildError> {
    match node.attributes.get(param) {
        None => Ok(None),
        Some(v) => parse_count(v).map(Some).ok_or_else(|| BuildError::InvalidParameter {
            name: name.to_string(),
            param: param.to_string(),
            path: path.clone(),
            reason: format!("'{v}' is not an integer"),
        }),
    }
}

/// Resolves a dialect threshold: negative values count back from `n`
/// (`-1` means all children).
fn threshold(value: i64, n: usize) -> usize {
    if value < 0 {
        (n as i64 + value + 1).max(0) as usize
    } else {
        value as usize
    }
}

impl<H: ActionHost> Builder<'_, H> {
    fn push(&mut self, exec: Exec, label: String, path: NodePath, scope: usize) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            exec,
            label,
            path,
            scope,
            children: Vec::new(),
            state: State::default(),
        });
        id
    }

    fn build_tree_body(&mut self, tree_index: usize, scope: usize) -> Result<NodeId, BuildError> {
        let tree = &self.model.trees[tree_index];
        match tree.element.children.as_slice() {
            [] => Err(BuildError::EmptyTree {
                tree: tree.id.clone(),
            }),
            [root] => {
                self.stack.push(tree.id.clone());
                let id = self.build_node(root, NodePath(vec![tree_index, 0]), scope)?;
                self.stack.pop();
                Ok(id)
            }
            many => Err(BuildError::TreeArity {
                tree: tree.id.clone(),
                count: many.len(),
            }),
        }
    }

    fn build_children(&mut self, id: NodeId, node: &RawNode, path: &NodePath, scope: usize) -> Result<(), BuildError> {
        for (i, child) in node.children.iter().enumerate() {
            let c = self.build_node(child, path.child(i), scope)?;
            self.nodes[id.0].children.push(c);
        }
        Ok(())
    }

    fn build_node(&mut self, node: &RawNode, path: NodePath, scope: usize) -> Result<NodeId, BuildError> {
        let catalog = self.host.catalog();
        let class = classify(node, catalog);
        let leaf_check = |name: &str| {
            if node.children.is_empty() {
                Ok(())
            } else {
                Err(BuildError::LeafWithChildren {
                    name: name.to_string(),
                    path: path.clone(),
                })
            }
        };
        match class {
            NodeClass::Unknown { name, .. } => {
                if node.children.is_empty() {
                    Err(BuildError::UnknownAction {
                        name: name.to_string(),
                        path,
                    })
                } else {
                    Err(BuildError::UnknownNodeKind {
                        name: name.to_string(),
                        path,
                    })
                }
            }
            NodeClass::Builtin(b) => {
                leaf_check(b.name())?;
                if let Some(port) = node.attributes.names().find(|a| !class.structural_attributes().contains(a)) {
                    return Err(BuildError::UnknownPort {
                        name: b.name().into(),
                        port: port.into(),
                        path,
                    });
                }
                Ok(self.push(Exec::Builtin(b), b.name().into(), path, scope))
            }
            NodeClass::Leaf { name, kind, .. } => {
                leaf_check(name)?;
                let schema = &catalog.get(name).expect("catalog leaf").ports;
                let mut ports = Vec::new();
                let mut outputs = Vec::new();
                for (k, v) in node.attributes.iter() {
                    if class.structural_attributes().contains(&k) {
                        continue;
                    }
                    if !schema.accepts(k) {
                        return Err(BuildError::UnknownPort {
                            name: name.into(),
                            port: k.into(),
                            path,
                        });
                    }
                    let entry = (k.to_string(), v.to_string());
                    if schema.is_output(k) {
                        outputs.push(entry);
                    } else {
                        ports.push(entry);
                    }
                }
                if let Some(port) = schema.required.iter().find(|p| !node.attributes.contains(p)) {
                    return Err(BuildError::MissingRequiredPort {
                        name: name.into(),
                        port: port.clone(),
                        path,
                    });
                }
                let exec = Exec::Leaf {
                    name: name.to_string(),
                    kind,
                    ports,
                    outputs,
                };
                Ok(self.push(exec, name.to_string(), path, scope))
            }
            NodeClass::SubTree { id } => {
                leaf_check("SubTree")?;
                let id = id.unwrap_or_default().to_string();
                let Some(index) = self.model.tree_index(&id) else {
                    return Err(BuildError::UnresolvedSubTree { id, path });
                };
                if self.stack.contains(&id) {
                    return Err(BuildError::RecursiveSubTree { id, path });
                }
                let mut remap = Vec::new();
                let mut autoremap = false;
                for (k, v) in node.attributes.iter() {
                    match k {
                        ID_ATTR | crate::kinds::NAME_ATTR => {}
                        AUTOREMAP_ATTR => autoremap = v.trim().eq_ignore_ascii_case("true"),
                        _ => {
                            let binding = match blackboard_key(v) {
                                Some(key) => Binding::Key(key.to_string()),
                                None => Binding::Literal(v.to_string()),
                            };
                            remap.push((k.to_string(), binding));
                        }
                    }
                }
                let inner = self.scopes.len();
                self.scopes.push(Scope {
                    parent: Some(scope),
                    remap,
                    autoremap,
                });
                let sub = self.push(Exec::SubTree, format!("SubTree({id})"), path, scope);
                let body = self.build_tree_body(index, inner)?;
                self.nodes[sub.0].children.push(body);
                Ok(sub)
            }
            NodeClass::Control(kind) => {
                if node.children.is_empty() {
                    return Err(BuildError::EmptyControl {
                        name: kind.name().into(),
                        path,
                    });
                }
                let n = node.children.len();
                let (success_threshold, failure_threshold) = if kind == ControlKind::Parallel {
                    let s = param_count(node, "success_count", kind.name(), &path)?
                        .or(param_count(node, "success_threshold", kind.name(), &path)?)
                        .unwrap_or(-1);
                    let f = param_count(node, "failure_count", kind.name(), &path)?
                        .or(param_count(node, "failure_threshold", kind.name(), &path)?)
                        .unwrap_or(1);
                    let (s, f) = (threshold(s, n), threshold(f, n));
                    if s > n || f > n {
                        return Err(BuildError::InvalidParameter {
                            name: kind.name().into(),
                            param: "success_count/failure_count".into(),
                            path,
                            reason: format!("thresholds ({s}, {f}) exceed {n} children"),
                        });
                    }
                    (s, f)
                } else {
                    (0, 0)
                };
                let exec = Exec::Control {
                    kind,
                    success_threshold,
                    failure_threshold,
                };
                let id = self.push(exec, kind.name().into(), path.clone(), scope);
                self.build_children(id, node, &path, scope)?;
                Ok(id)
            }
            NodeClass::Decorator(kind) => {
                match node.children.len() {
                    0 => {
                        return Err(BuildError::EmptyControl {
                            name: kind.name().into(),
                            path,
                        })
                    }
                    1 => {}
                    count => {
                        return Err(BuildError::DecoratorArity {
                            name: kind.name().into(),
                            path,
                            count,
                        })
                    }
                }
                let count = match kind.required_parameter() {
                    Some(p) => param_count(node, p, kind.name(), &path)?.ok_or_else(|| {
                        BuildError::MissingRequiredPort {
                            name: kind.name().into(),
                            port: p.into(),
                            path: path.clone(),
                        }
                    })?,
                    None => 0,
                };
                let exec = Exec::Decorator { kind, count };
                let id = self.push(exec, kind.name().into(), path.clone(), scope);
                self.build_children(id, node, &path, scope)?;
                Ok(id)
            }
        }
    }
}

/// `{key}` → `key`.
pub(crate) fn blackboard_key(value: &str) -> Option<&str> {
    let v = value.trim();
    v.strip_prefix('{')?.strip_suffix('}').map(str::trim)
}

/// Builds the main tree of `model`, inlining SubTree references.
pub fn build_tree<H: ActionHost>(model: &TreeModel, host: H) -> Result<ExecutableTree<H>, BuildError> {
    let main = select_main_tree(model)?;
    let main_index = model.tree_index(main).expect("selected tree exists");
    let mut builder = Builder {
        model,
        host: &host,
        nodes: Vec::new(),
        scopes: vec![Scope {
            parent: None,
            remap: Vec::new(),
            autoremap: false,
        }],
        stack: Vec::new(),
    };
    let root = builder.build_tree_body(main_index, 0)?;
    let Builder { nodes, scopes, .. } = builder;
    let scope_count = scopes.len();
    Ok(ExecutableTree {
        nodes,
        root,
        scopes,
        blackboards: vec![BTreeMap::new(); scope_count],
        initial_blackboard: BTreeMap::new(),
        invocations: HashMap::new(),
        tick: 0,
        trace: ExecutionTrace::default(),
        faults: Vec::new(),
        host,
    })
}

impl<H: ActionHost> ExecutableTree<H> {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn host(&self) -> &H {
        &self.host
    }

    pub fn trace(&self) -> &ExecutionTrace {
        &self.trace
    }

    pub fn ticks(&self) -> usize {
        self.tick
    }

    /// Seeds a root blackboard entry; kept across [`reset`](Self::reset).
    pub fn set_blackboard(&mut self, key: impl Into<String>, value: impl Into<String>) {
        let (key, value) = (key.into(), value.into());
        self.initial_blackboard.insert(key.clone(), value.clone());
        self.blackboards[0].insert(key, value);
    }

    pub fn blackboard(&self, key: &str) -> Option<&str> {
        self.lookup(0, key)
    }

    /// Restores the freshly-built state and resets the host.
    pub fn reset(&mut self) {
        for node in &mut self.nodes {
            node.state = State::default();
        }
        for bb in &mut self.blackboards {
            bb.clear();
        }
        self.blackboards[0] = self.initial_blackboard.clone();
        self.invocations.clear();
        self.tick = 0;
        self.trace = ExecutionTrace::default();
        self.faults.clear();
        self.host.reset();
    }

    /// Propagates one tick from the root.
    pub fn tick_once(&mut self) -> NodeStatus {
        self.tick += 1;
        self.tick_node(self.root)
    }

    /// Resets, then ticks until the root leaves `RUNNING` or `max_ticks`
    /// ticks were spent. A budget of 0 is treated as 1.
    pub fn run_to_completion(&mut self, max_ticks: usize) -> RunResult {
        self.reset();
        let budget = max_ticks.max(1);
        let mut status = NodeStatus::Running;
        while self.tick < budget {
            status = self.tick_once();
            if status.is_terminal() {
                break;
            }
        }
        RunResult {
            status,
            trace: self.trace.clone(),
            ticks_used: self.tick,
            truncated: status == NodeStatus::Running,
            faults: self.faults.clone(),
        }
    }

    fn lookup(&self, scope: usize, key: &str) -> Option<&str> {
        let s = &self.scopes[scope];
        if let Some((_, binding)) = s.remap.iter().find(|(k, _)| k == key) {
            return match binding {
                Binding::Literal(v) => Some(v.as_str()),
                Binding::Key(k) => self.lookup(s.parent?, k),
            };
        }
        if let Some(v) = self.blackboards[scope].get(key) {
            return Some(v.as_str());
        }
        match (s.autoremap, s.parent) {
            (true, Some(p)) => self.lookup(p, key),
            _ => None,
        }
    }

    fn store(&mut self, scope: usize, key: &str, value: String) {
        let s = &self.scopes[scope];
        if let Some((_, binding)) = s.remap.iter().find(|(k, _)| k == key) {
            if let (Binding::Key(k), Some(p)) = (binding, s.parent) {
                let k = k.clone();
                return self.store(p, &k, value);
            }
            return;
        }
        match (s.autoremap, s.parent) {
            (true, Some(p)) => self.store(p, key, value),
            _ => {
                self.blackboards[scope].insert(key.to_string(), value);
            }
        }
    }

    fn record(&mut self, id: NodeId, status: NodeStatus, phase: Phase, ports: Vec<(String, String)>) {
        let node = &self.nodes[id.0];
        let (kind, action) = match &node.exec {
            Exec::Leaf { name, kind, .. } => (
                match kind {
                    LeafKind::Action => "Action",
                    LeafKind::Condition => "Condition",
                }
                .to_string(),
                Some(name.clone()),
            ),
            _ => (node.label.clone(), None),
        };
        self.trace.events.push(TraceEvent {
            tick: self.tick,
            node: id.0,
            kind,
            path: node.path.clone(),
            action,
            ports,
            status,
            phase,
        });
    }

    fn tick_node(&mut self, id: NodeId) -> NodeStatus {
        let (status, ports) = match self.nodes[id.0].exec.clone() {
            Exec::Builtin(BuiltinLeaf::AlwaysSuccess) => (NodeStatus::Success, Vec::new()),
            Exec::Builtin(BuiltinLeaf::AlwaysFailure) => (NodeStatus::Failure, Vec::new()),
            Exec::Leaf {
                name,
                kind,
                ports,
                outputs,
            } => self.tick_leaf(id, &name, kind, &ports, &outputs),
            Exec::SubTree => {
                let child = self.nodes[id.0].children[0];
                (self.tick_node(child), Vec::new())
            }
            Exec::Control {
                kind,
                success_threshold,
                failure_threshold,
            } => (
                match kind {
                    ControlKind::Sequence => self.tick_memory(id, NodeStatus::Failure),
                    ControlKind::Fallback => self.tick_memory(id, NodeStatus::Success),
                    ControlKind::ReactiveSequence => self.tick_reactive(id, NodeStatus::Failure),
                    ControlKind::ReactiveFallback => self.tick_reactive(id, NodeStatus::Success),
                    ControlKind::Parallel => self.tick_parallel(id, success_threshold, failure_threshold),
                },
                Vec::new(),
            ),
            Exec::Decorator { kind, count } => (self.tick_decorator(id, kind, count), Vec::new()),
        };
        self.nodes[id.0].state.running = status == NodeStatus::Running;
        self.record(id, status, Phase::Tick, ports);
        status
    }

    fn tick_leaf(
        &mut self,
        id: NodeId,
        name: &str,
        kind: LeafKind,
        ports: &[(String, String)],
        outputs: &[(String, String)],
    ) -> (NodeStatus, Vec<(String, String)>) {
        let scope = self.nodes[id.0].scope;
        let mut resolved = Vec::with_capacity(ports.len());
        let mut missing = None;
        for (k, v) in ports {
            match blackboard_key(v) {
                Some(key) => match self.lookup(scope, key) {
                    Some(val) => resolved.push((k.clone(), val.to_string())),
                    None => {
                        missing.get_or_insert_with(|| key.to_string());
                        resolved.push((k.clone(), v.clone()));
                    }
                },
                None => resolved.push((k.clone(), v.clone())),
            }
        }
        if let Some(key) = missing {
            self.faults.push(format!(
                "tick {}: '{name}' reads unset blackboard entry '{key}'",
                self.tick
            ));
            return (NodeStatus::Failure, resolved);
        }
        let invocation = {
            let counter = self.invocations.entry(name.to_string()).or_insert(0);
            let n = *counter;
            *counter += 1;
            n
        };
        let outcome = self.host.invoke(&ActionCall {
            action: name,
            kind,
            ports: &resolved,
            invocation,
        });
        let mut status = outcome.status;
        if kind == LeafKind::Condition && status == NodeStatus::Running {
            self.faults.push(format!(
                "tick {}: condition '{name}' returned RUNNING",
                self.tick
            ));
            status = NodeStatus::Failure;
        }
        for (port, value) in outcome.outputs {
            let target = outputs
                .iter()
                .find(|(k, _)| *k == port)
                .and_then(|(_, v)| blackboard_key(v));
            if let Some(key) = target {
                let key = key.to_string();
                self.store(scope, &key, value);
            }
        }
        (status, resolved)
    }

    /// Sequence (`stop_on` = FAILURE) and Fallback (`stop_on` = SUCCESS).
    fn tick_memory(&mut self, id: NodeId, stop_on: NodeStatus) -> NodeStatus {
        let children = self.nodes[id.0].children.clone();
        let mut idx = self.nodes[id.0].state.cursor;
        while idx < children.len() {
            match self.tick_node(children[idx]) {
                NodeStatus::Running => {
                    self.nodes[id.0].state.cursor = idx;
                    return NodeStatus::Running;
                }
                s if s == stop_on => {
                    self.nodes[id.0].state.cursor = 0;
                    return stop_on;
                }
                _ => idx += 1,
            }
        }
        self.nodes[id.0].state.cursor = 0;
        stop_on.inverted()
    }

    fn tick_reactive(&mut self, id: NodeId, stop_on: NodeStatus) -> NodeStatus {
        let children = self.nodes[id.0].children.clone();
        for (i, &child) in children.iter().enumerate() {
            match self.tick_node(child) {
                NodeStatus::Running => {
                    for (j, &other) in children.iter().enumerate() {
                        if j != i {
                            self.halt(other);
                        }
                    }
                    return NodeStatus::Running;
                }
                s if s == stop_on => {
                    for &other in &children {
                        self.halt(other);
                    }
                    return stop_on;
                }
                _ => {}
            }
        }
        stop_on.inverted()
    }

    fn tick_parallel(&mut self, id: NodeId, success_threshold: usize, failure_threshold: usize) -> NodeStatus {
        let children = self.nodes[id.0].children.clone();
        let n = children.len();
        if self.nodes[id.0].state.completed.len() != n {
            self.nodes[id.0].state.completed = vec![None; n];
        }
        let mut decided = None;
        for (i, &child) in children.iter().enumerate() {
            if self.nodes[id.0].state.completed[i].is_some() {
                continue;
            }
            let s = self.tick_node(child);
            if s.is_terminal() {
                self.nodes[id.0].state.completed[i] = Some(s);
            }
            let done = &self.nodes[id.0].state.completed;
            let successes = done.iter().filter(|s| **s == Some(NodeStatus::Success)).count();
            let failures = done.iter().filter(|s| **s == Some(NodeStatus::Failure)).count();
            if successes >= success_threshold {
                decided = Some(NodeStatus::Success);
                break;
            }
            if n - failures < success_threshold || failures >= failure_threshold {
                decided = Some(NodeStatus::Failure);
                break;
            }
        }
        match decided {
            Some(status) => {
                for &child in &children {
                    self.halt(child);
                }
                self.nodes[id.0].state.completed.clear();
                status
            }
            None => NodeStatus::Running,
        }
    }

    fn tick_decorator(&mut self, id: NodeId, kind: DecoratorKind, count: i64) -> NodeStatus {
        let child = self.nodes[id.0].children[0];
        match kind {
            DecoratorKind::Inverter => self.tick_node(child).inverted(),
            DecoratorKind::ForceSuccess => match self.tick_node(child) {
                NodeStatus::Running => NodeStatus::Running,
                _ => NodeStatus::Success,
            },
            DecoratorKind::ForceFailure => match self.tick_node(child) {
                NodeStatus::Running => NodeStatus::Running,
                _ => NodeStatus::Failure,
            },
            DecoratorKind::KeepRunningUntilFailure => match self.tick_node(child) {
                NodeStatus::Failure => NodeStatus::Failure,
                _ => NodeStatus::Running,
            },
            DecoratorKind::RetryUntilSuccessful => self.tick_loop(id, child, count, NodeStatus::Failure),
            DecoratorKind::Repeat => self.tick_loop(id, child, count, NodeStatus::Success),
            DecoratorKind::Timeout => match self.tick_node(child) {
                NodeStatus::Running => {
                    let state = &mut self.nodes[id.0].state;
                    state.counter += 1;
                    if state.counter >= count {
                        state.counter = 0;
                        self.halt(child);
                        NodeStatus::Failure
                    } else {
                        NodeStatus::Running
                    }
                }
                s => {
                    self.nodes[id.0].state.counter = 0;
                    s
                }
            },
        }
    }

    /// Retry (`again_on` = FAILURE) and Repeat (`again_on` = SUCCESS).
    fn tick_loop(&mut self, id: NodeId, child: NodeId, count: i64, again_on: NodeStatus) -> NodeStatus {
        if count == 0 {
            return again_on;
        }
        loop {
            match self.tick_node(child) {
                NodeStatus::Running => return NodeStatus::Running,
                s if s == again_on => {
                    let state = &mut self.nodes[id.0].state;
                    state.counter += 1;
                    if count > 0 && state.counter >= count {
                        state.counter = 0;
                        return again_on;
                    }
                    if count < 0 {
                        return NodeStatus::Running;
                    }
                }
                s => {
                    self.nodes[id.0].state.counter = 0;
                    return s;
                }
            }
        }
    }

    /// Interrupts `id` and its running descendants, resetting their state.
    fn halt(&mut self, id: NodeId) {
        let children = self.nodes[id.0].children.clone();
        for child in children {
            self.halt(child);
        }
        let was_running = self.nodes[id.0].state.running;
        self.nodes[id.0].state = State::default();
        if was_running {
            if let Exec::Leaf { name, .. } = &self.nodes[id.0].exec {
                let name = name.clone();
                self.host.halt(&name);
            }
            self.record(id, NodeStatus::Running, Phase::Halt, Vec::new());
        }
    }
}
