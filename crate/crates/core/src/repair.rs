//! Subtractive repair of generated trees.
//!
//! Four passes run in order and the sequence is repeated until a full round
//! makes no edit:
//!
//! 1. drop leaf attributes that are not ports of the leaf's schema;
//! 2. drop childless nodes whose name is not a known node or catalog entry;
//! 3. replace an unknown single-child wrapper with its child (optional);
//! 4. remove controls and decorators left without children.
//!
//! Repair never adds nodes, never renames anything and never invents port
//! values, so a missing required port stays missing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::ActionCatalog;
use crate::kinds::{classify_parts, NodeClass};
use crate::lint::NodePath;
use crate::xml::{Attributes, RawNode, Span, TreeModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EditKind {
    DropPort,
    DropNode,
    PromoteChild,
    PruneEmptyControl,
}

/// One edit. `path` addresses the node in the model given to [`repair`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairEdit {
    pub kind: EditKind,
    pub path: NodePath,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepairOutcome {
    pub repaired: TreeModel,
    pub edits: Vec<RepairEdit>,
    pub converged: bool,
    /// Trees left without a root node. Reported, not rejected.
    pub empty_trees: Vec<String>,
}

impl RepairOutcome {
    pub fn changed(&self) -> bool {
        !self.edits.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepairOptions {
    /// Replace unknown single-child wrappers with their child.
    pub promote_unknown_wrappers: bool,
}

impl Default for RepairOptions {
    fn default() -> Self {
        RepairOptions {
            promote_unknown_wrappers: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RepairError {
    #[error("repair did not reach a fixpoint within {budget} rounds")]
    NonConvergence { budget: usize },
}

/// Working copy of a node that remembers where it came from.
struct Work {
    element: String,
    attributes: Attributes,
    span: Span,
    origin: NodePath,
    children: Vec<Work>,
}

impl Work {
    fn from_raw(node: RawNode, origin: NodePath) -> Work {
        let children = node
            .children
            .into_iter()
            .enumerate()
            .map(|(i, c)| Work::from_raw(c, origin.child(i)))
            .collect();
        Work {
            element: node.element,
            attributes: node.attributes,
            span: node.span,
            origin,
            children,
        }
    }

    fn into_raw(self) -> RawNode {
        RawNode {
            element: self.element,
            attributes: self.attributes,
            span: self.span,
            children: self.children.into_iter().map(Work::into_raw).collect(),
        }
    }
}

struct Repairer<'a> {
    catalog: &'a ActionCatalog,
    options: RepairOptions,
    edits: Vec<RepairEdit>,
}

impl Repairer<'_> {
    fn edit(&mut self, kind: EditKind, path: &NodePath, detail: String) {
        self.edits.push(RepairEdit {
            kind,
            path: path.clone(),
            detail,
        });
    }

    fn drop_ports(&mut self, node: &mut Work) {
        let class = classify_parts(&node.element, &node.attributes, self.catalog);
        let doomed: Vec<String> = match class {
            NodeClass::Leaf { name, .. } => {
                let schema = &self.catalog.get(name).expect("catalog leaf").ports;
                node.attributes
                    .names()
                    .filter(|a| !class.structural_attributes().contains(a) && !schema.accepts(a))
                    .map(str::to_string)
                    .collect()
            }
            NodeClass::Builtin(_) => node
                .attributes
                .names()
                .filter(|a| !class.structural_attributes().contains(a))
                .map(str::to_string)
                .collect(),
            _ => Vec::new(),
        };
        for port in doomed {
            node.attributes.remove(&port);
            self.edit(EditKind::DropPort, &node.origin, port);
        }
        for c in &mut node.children {
            self.drop_ports(c);
        }
    }

    fn is_unknown(&self, node: &Work) -> Option<String> {
        match classify_parts(&node.element, &node.attributes, self.catalog) {
            NodeClass::Unknown { name, .. } => Some(name.to_string()),
            _ => None,
        }
    }

    fn drop_nodes(&mut self, children: &mut Vec<Work>) {
        let mut kept = Vec::with_capacity(children.len());
        for mut child in children.drain(..) {
            if child.children.is_empty() {
                if let Some(name) = self.is_unknown(&child) {
                    self.edit(EditKind::DropNode, &child.origin, name);
                    continue;
                }
            }
            self.drop_nodes(&mut child.children);
            kept.push(child);
        }
        *children = kept;
    }

    fn promote(&mut self, children: &mut [Work]) {
        for slot in children.iter_mut() {
            while slot.children.len() == 1 {
                let Some(name) = self.is_unknown(slot) else { break };
                self.edit(EditKind::PromoteChild, &slot.origin, name);
                let child = slot.children.pop().expect("one child");
                *slot = child;
            }
            self.promote(&mut slot.children);
        }
    }

    fn prune(&mut self, children: &mut Vec<Work>) {
        let mut kept = Vec::with_capacity(children.len());
        for mut child in children.drain(..) {
            self.prune(&mut child.children);
            let class = classify_parts(&child.element, &child.attributes, self.catalog);
            if child.children.is_empty() && class.is_control_or_decorator() {
                self.edit(EditKind::PruneEmptyControl, &child.origin, child.element.clone());
                continue;
            }
            kept.push(child);
        }
        *children = kept;
    }

    /// One full round of the four passes; returns the number of edits made.
    fn round(&mut self, trees: &mut [Vec<Work>]) -> usize {
        let before = self.edits.len();
        for body in trees.iter_mut() {
            for node in body.iter_mut() {
                self.drop_ports(node);
            }
        }
        for body in trees.iter_mut() {
            self.drop_nodes(body);
        }
        if self.options.promote_unknown_wrappers {
            for body in trees.iter_mut() {
                self.promote(body);
            }
        }
        for body in trees.iter_mut() {
            self.prune(body);
        }
        self.edits.len() - before
    }
}

pub fn repair(model: &TreeModel, catalog: &ActionCatalog) -> Result<RepairOutcome, RepairError> {
    repair_with(model, catalog, RepairOptions::default())
}

pub fn repair_with(
    model: &TreeModel,
    catalog: &ActionCatalog,
    options: RepairOptions,
) -> Result<RepairOutcome, RepairError> {
    let mut bodies: Vec<Vec<Work>> = model
        .trees
        .iter()
        .enumerate()
        .map(|(t, tree)| {
            tree.element
                .children
                .iter()
                .enumerate()
                .map(|(i, c)| Work::from_raw(c.clone(), NodePath(vec![t, i])))
                .collect()
        })
        .collect();

    let mut repairer = Repairer {
        catalog,
        options,
        edits: Vec::new(),
    };
    let budget = model.node_count() + 1;
    let mut converged = false;
    for _ in 0..budget {
        if repairer.round(&mut bodies) == 0 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(RepairError::NonConvergence { budget });
    }

    let mut repaired = model.clone();
    for (tree, body) in repaired.trees.iter_mut().zip(bodies) {
        tree.element.children = body.into_iter().map(Work::into_raw).collect();
    }
    let empty_trees = repaired
        .trees
        .iter()
        .filter(|t| t.element.children.is_empty())
        .map(|t| t.id.clone())
        .collect();
    Ok(RepairOutcome {
        repaired,
        edits: repairer.edits,
        converged,
        empty_trees,
    })
}
