//! Node-kind vocabulary of the dialect and classification of raw elements.

use std::fmt;

use crate::catalog::{ActionCatalog, LeafKind};
use crate::xml::{Attributes, RawNode, ID_ATTR};

pub const NAME_ATTR: &str = "name";
pub const AUTOREMAP_ATTR: &str = "_autoremap";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControlKind {
    Sequence,
    ReactiveSequence,
    Fallback,
    ReactiveFallback,
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecoratorKind {
    Inverter,
    RetryUntilSuccessful,
    Repeat,
    KeepRunningUntilFailure,
    ForceSuccess,
    ForceFailure,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinLeaf {
    AlwaysSuccess,
    AlwaysFailure,
}

impl ControlKind {
    pub const ALL: [ControlKind; 5] = [
        ControlKind::Sequence,
        ControlKind::ReactiveSequence,
        ControlKind::Fallback,
        ControlKind::ReactiveFallback,
        ControlKind::Parallel,
    ];

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn name(self) -> &'static str {
        match self {
            ControlKind::Sequence => "Sequence",
            ControlKind::ReactiveSequence => "ReactiveSequence",
            ControlKind::Fallback => "Fallback",
            ControlKind::ReactiveFallback => "ReactiveFallback",
            ControlKind::Parallel => "Parallel",
        }
    }

    /// Parameters beyond `name`. Parallel accepts the v3 spellings too.
    pub fn parameters(self) -> &'static [&'static str] {
        match self {
            ControlKind::Parallel => &[
                "success_count",
                "failure_count",
                "success_threshold",
                "failure_threshold",
            ],
            _ => &[],
        }
    }
}

impl DecoratorKind {
    pub const ALL: [DecoratorKind; 7] = [
        DecoratorKind::Inverter,
        DecoratorKind::RetryUntilSuccessful,
        DecoratorKind::Repeat,
        DecoratorKind::KeepRunningUntilFailure,
        DecoratorKind::ForceSuccess,
        DecoratorKind::ForceFailure,
        DecoratorKind::Timeout,
    ];

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn name(self) -> &'static str {
        match self {
            DecoratorKind::Inverter => "Inverter",
            DecoratorKind::RetryUntilSuccessful => "RetryUntilSuccessful",
            DecoratorKind::Repeat => "Repeat",
            DecoratorKind::KeepRunningUntilFailure => "KeepRunningUntilFailure",
            DecoratorKind::ForceSuccess => "ForceSuccess",
            DecoratorKind::ForceFailure => "ForceFailure",
            DecoratorKind::Timeout => "Timeout",
        }
    }

    /// The single required integer parameter, if any.
    pub fn required_parameter(self) -> Option<&'static str> {
        match self {
            DecoratorKind::RetryUntilSuccessful => Some("num_attempts"),
            DecoratorKind::Repeat => Some("num_cycles"),
            DecoratorKind::Timeout => Some("msec"),
            _ => None,
        }
    }
}

impl BuiltinLeaf {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "AlwaysSuccess" => Some(BuiltinLeaf::AlwaysSuccess),
            "AlwaysFailure" => Some(BuiltinLeaf::AlwaysFailure),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BuiltinLeaf::AlwaysSuccess => "AlwaysSuccess",
            BuiltinLeaf::AlwaysFailure => "AlwaysFailure",
        }
    }
}

/// Result of resolving a raw element against the node vocabulary and a catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass<'a> {
    Control(ControlKind),
    Decorator(DecoratorKind),
    Builtin(BuiltinLeaf),
    /// A catalog action or condition. `generic` marks the `<Action ID=..>` form.
    Leaf {
        name: &'a str,
        kind: LeafKind,
        generic: bool,
    },
    SubTree {
        id: Option<&'a str>,
    },
    /// Neither a known node kind nor a catalog entry.
    Unknown {
        name: &'a str,
        generic: bool,
    },
}

impl NodeClass<'_> {
    pub fn is_leaf(&self) -> bool {
        matches!(
            self,
            NodeClass::Builtin(_) | NodeClass::Leaf { .. } | NodeClass::SubTree { .. }
        )
    }

    pub fn is_control_or_decorator(&self) -> bool {
        matches!(self, NodeClass::Control(_) | NodeClass::Decorator(_))
    }

    /// Short label used in traces and diagnostics.
    pub fn label(&self) -> String {
        match self {
            NodeClass::Control(k) => k.name().to_string(),
            NodeClass::Decorator(k) => k.name().to_string(),
            NodeClass::Builtin(b) => b.name().to_string(),
            NodeClass::Leaf { kind: LeafKind::Action, .. } => "Action".into(),
            NodeClass::Leaf { kind: LeafKind::Condition, .. } => "Condition".into(),
            NodeClass::SubTree { .. } => "SubTree".into(),
            NodeClass::Unknown { .. } => "Unknown".into(),
        }
    }

    /// Attributes the node may legitimately carry besides its ports.
    pub fn structural_attributes(&self) -> &'static [&'static str] {
        match self {
            NodeClass::Leaf { generic: true, .. } | NodeClass::Unknown { generic: true, .. } => {
                &[ID_ATTR, NAME_ATTR]
            }
            NodeClass::SubTree { .. } => &[ID_ATTR, NAME_ATTR, AUTOREMAP_ATTR],
            _ => &[NAME_ATTR],
        }
    }
}

impl fmt::Display for NodeClass<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeClass::Leaf { name, .. } | NodeClass::Unknown { name, .. } => f.write_str(name),
            NodeClass::SubTree { id } => write!(f, "SubTree({})", id.unwrap_or("?")),
            other => f.write_str(&other.label()),
        }
    }
}

fn is_subtree_element(name: &str) -> bool {
    // SubTreePlus is the v3 spelling of a remapping subtree.
    name == "SubTree" || name == "SubTreePlus"
}

pub fn classify<'a>(node: &'a RawNode, catalog: &ActionCatalog) -> NodeClass<'a> {
    classify_parts(&node.element, &node.attributes, catalog)
}

pub fn classify_parts<'a>(
    element: &'a str,
    attributes: &'a Attributes,
    catalog: &ActionCatalog,
) -> NodeClass<'a> {
    if is_subtree_element(element) {
        return NodeClass::SubTree {
            id: attributes.get(ID_ATTR),
        };
    }
    let (name, generic) = match element {
        "Action" | "Condition" | "Control" | "Decorator" => match attributes.get(ID_ATTR) {
            Some(id) => (id, true),
            None => return NodeClass::Unknown { name: element, generic: false },
        },
        _ => (element, false),
    };
    if let Some(k) = ControlKind::from_name(name) {
        return NodeClass::Control(k);
    }
    if let Some(k) = DecoratorKind::from_name(name) {
        return NodeClass::Decorator(k);
    }
    if let Some(b) = BuiltinLeaf::from_name(name) {
        return NodeClass::Builtin(b);
    }
    match catalog.get(name) {
        Some(entry) => NodeClass::Leaf {
            name,
            kind: entry.kind,
            generic,
        },
        None => NodeClass::Unknown { name, generic },
    }
}

/// Parses an integer node parameter; the dialect allows `-1` for "forever".
pub fn parse_count(value: &str) -> Option<i64> {
    value.trim().parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::PortSchema;

    #[test]
    fn classifies_forms() {
        let catalog = ActionCatalog::new()
            .with_action("MoveTo", PortSchema::required(["goal"]))
            .with_condition("IsDone", PortSchema::default());
        let cases = [
            (RawNode::new("Sequence"), "Sequence"),
            (RawNode::new("Control").with_attr("ID", "Fallback"), "Fallback"),
            (RawNode::new("Inverter"), "Inverter"),
            (RawNode::new("MoveTo"), "Action"),
            (RawNode::new("Action").with_attr("ID", "MoveTo"), "Action"),
            (RawNode::new("Condition").with_attr("ID", "IsDone"), "Condition"),
            (RawNode::new("SubTreePlus").with_attr("ID", "X"), "SubTree"),
            (RawNode::new("AlwaysFailure"), "AlwaysFailure"),
            (RawNode::new("Fly"), "Unknown"),
            (RawNode::new("Action"), "Unknown"),
        ];
        for (node, label) in cases {
            assert_eq!(classify(&node, &catalog).label(), label, "{node:?}");
        }
    }
}
