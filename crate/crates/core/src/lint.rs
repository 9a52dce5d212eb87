//! Structural checks that decide whether a document is a recognizable,
//! executable behavior tree for a given action catalog.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::{ActionCatalog, LeafKind};
use crate::kinds::{classify, parse_count, NodeClass};
use crate::xml::{select_main_tree, MainTreeError, RawNode, Span, TreeModel, SUPPORTED_FORMATS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DiagCode {
    UnknownNodeKind,
    UnknownAction,
    UnknownPort,
    MissingRequiredPort,
    InvalidParameter,
    DecoratorArity,
    ControlNoChildren,
    LeafWithChildren,
    TreeArity,
    EmptyTree,
    UnresolvedSubTree,
    RecursiveSubTree,
    AmbiguousMain,
    DanglingMain,
    DuplicateTreeId,
    UnusedTree,
    UnknownAttributeOnControl,
    UnsupportedFormat,
    LeafKindMismatch,
}

impl DiagCode {
    /// Severity in strict mode.
    pub fn default_severity(self) -> Severity {
        use DiagCode::*;
        match self {
            UnusedTree | UnknownAttributeOnControl | UnsupportedFormat | LeafKindMismatch => {
                Severity::Warning
            }
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

/// Tree index followed by child indices below the `BehaviorTree` element.
/// The empty path denotes the document itself.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodePath(pub Vec<usize>);

impl NodePath {
    pub fn child(&self, index: usize) -> NodePath {
        let mut v = self.0.clone();
        v.push(index);
        NodePath(v)
    }

    pub fn tree(index: usize) -> NodePath {
        NodePath(vec![index])
    }

    pub fn resolves_in(&self, model: &TreeModel) -> bool {
        self.0.is_empty() || model.node_at(&self.0).is_some()
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("/");
        }
        for (i, idx) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            write!(f, "{idx}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: DiagCode,
    pub severity: Severity,
    pub message: String,
    pub line: usize,
    pub column: usize,
    pub path: NodePath,
}

impl Diagnostic {
    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    pub fn span(&self) -> Span {
        Span {
            line: self.line,
            column: self.column,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "{}:{}: {sev}[{}] {} (at {})",
            self.line, self.column, self.code, self.message, self.path
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LintOptions {
    /// Report unknown leaf actions as warnings, treating them as opaque
    /// custom nodes.
    pub lenient_unknown_actions: bool,
}

impl LintOptions {
    pub fn strict() -> Self {
        Self::default()
    }

    pub fn lenient() -> Self {
        LintOptions {
            lenient_unknown_actions: true,
        }
    }
}

struct Linter<'a> {
    model: &'a TreeModel,
    catalog: &'a ActionCatalog,
    options: LintOptions,
    /// Tree ids reachable from each tree through SubTree references.
    reach: BTreeMap<&'a str, BTreeSet<&'a str>>,
    seq: usize,
    out: Vec<(usize, Diagnostic)>,
}

impl<'a> Linter<'a> {
    fn emit(&mut self, code: DiagCode, span: Span, path: &NodePath, message: String) {
        let severity = match code {
            DiagCode::UnknownAction if self.options.lenient_unknown_actions => Severity::Warning,
            c => c.default_severity(),
        };
        self.out.push((
            self.seq,
            Diagnostic {
                code,
                severity,
                message,
                line: span.line,
                column: span.column,
                path: path.clone(),
            },
        ));
    }

    fn check_document(&mut self) {
        let first_span = self.model.trees.first().map(|t| t.element.span).unwrap_or_default();
        let root = NodePath::default();
        if let Some(v) = &self.model.format_version {
            if !SUPPORTED_FORMATS.contains(&v.as_str()) {
                self.emit(
                    DiagCode::UnsupportedFormat,
                    first_span,
                    &root,
                    format!("BTCPP_format=\"{v}\" is not a supported dialect version"),
                );
            }
        }
        match select_main_tree(self.model) {
            Ok(_) => {}
            Err(MainTreeError::AmbiguousMain { count }) => self.emit(
                DiagCode::AmbiguousMain,
                first_span,
                &root,
                format!("{count} trees defined but main_tree_to_execute is not set"),
            ),
            Err(MainTreeError::DanglingMain { id }) => self.emit(
                DiagCode::DanglingMain,
                first_span,
                &root,
                format!("main_tree_to_execute names undefined tree '{id}'"),
            ),
            Err(MainTreeError::NoTrees) => self.emit(
                DiagCode::EmptyTree,
                first_span,
                &root,
                "document defines no trees".into(),
            ),
        }
    }

    fn check_trees(&mut self) {
        let main = select_main_tree(self.model).ok();
        let used: Option<BTreeSet<&str>> = main.map(|m| {
            let mut set = self.reach.get(m).cloned().unwrap_or_default();
            set.insert(m);
            set
        });
        let mut seen = BTreeSet::new();
        for (i, tree) in self.model.trees.iter().enumerate() {
            self.seq += 1;
            let path = NodePath::tree(i);
            let span = tree.element.span;
            if !seen.insert(tree.id.as_str()) {
                self.emit(
                    DiagCode::DuplicateTreeId,
                    span,
                    &path,
                    format!("tree ID '{}' is defined more than once", tree.id),
                );
            }
            if let Some(used) = &used {
                if !used.contains(tree.id.as_str()) {
                    self.emit(
                        DiagCode::UnusedTree,
                        span,
                        &path,
                        format!("tree '{}' is never referenced from the main tree", tree.id),
                    );
                }
            }
            match tree.element.children.len() {
                0 => self.emit(
                    DiagCode::EmptyTree,
                    span,
                    &path,
                    format!("tree '{}' has no root node", tree.id),
                ),
                1 => {}
                n => self.emit(
                    DiagCode::TreeArity,
                    span,
                    &path,
                    format!("tree '{}' has {n} root nodes, expected exactly one", tree.id),
                ),
            }
            for (c, child) in tree.element.children.iter().enumerate() {
                self.check_node(&tree.id, child, &path.child(c));
            }
        }
    }

    fn check_node(&mut self, tree_id: &str, node: &'a RawNode, path: &NodePath) {
        self.seq += 1;
        let class = classify(node, self.catalog);
        let span = node.span;
        match class {
            NodeClass::Unknown { name, .. } => {
                if node.children.is_empty() {
                    self.emit(
                        DiagCode::UnknownAction,
                        span,
                        path,
                        format!("'{name}' is not a registered action or condition"),
                    );
                } else {
                    self.emit(
                        DiagCode::UnknownNodeKind,
                        span,
                        path,
                        format!("'{name}' is not a known control or decorator node"),
                    );
                }
            }
            NodeClass::Leaf { name, kind, generic } => {
                let entry = self.catalog.get(name).expect("classified as catalog leaf");
                for attr in node.attributes.names() {
                    if !class.structural_attributes().contains(&attr) && !entry.ports.accepts(attr) {
                        self.emit(
                            DiagCode::UnknownPort,
                            span,
                            path,
                            format!("'{name}' has no port named '{attr}'"),
                        );
                    }
                }
                for port in &entry.ports.required {
                    if !node.attributes.contains(port) {
                        self.emit(
                            DiagCode::MissingRequiredPort,
                            span,
                            path,
                            format!("'{name}' requires port '{port}'"),
                        );
                    }
                }
                if generic {
                    let declared = match node.element.as_str() {
                        "Condition" => Some(LeafKind::Condition),
                        "Action" => Some(LeafKind::Action),
                        _ => None,
                    };
                    if declared.is_some_and(|d| d != kind) {
                        self.emit(
                            DiagCode::LeafKindMismatch,
                            span,
                            path,
                            format!("'{name}' is declared as <{}> but registered as {kind:?}", node.element),
                        );
                    }
                }
                self.leaf_children(node, path, name);
            }
            NodeClass::Builtin(b) => {
                for attr in node.attributes.names() {
                    if !class.structural_attributes().contains(&attr) {
                        self.emit(
                            DiagCode::UnknownPort,
                            span,
                            path,
                            format!("'{}' has no port named '{attr}'", b.name()),
                        );
                    }
                }
                self.leaf_children(node, path, b.name());
            }
            NodeClass::SubTree { id } => {
                match id {
                    None => self.emit(
                        DiagCode::UnresolvedSubTree,
                        span,
                        path,
                        "SubTree has no ID attribute".into(),
                    ),
                    Some(id) if self.model.tree(id).is_none() => self.emit(
                        DiagCode::UnresolvedSubTree,
                        span,
                        path,
                        format!("SubTree references undefined tree '{id}'"),
                    ),
                    Some(id) => {
                        let cyclic = id == tree_id
                            || self.reach.get(id).is_some_and(|r| r.contains(tree_id));
                        if cyclic {
                            self.emit(
                                DiagCode::RecursiveSubTree,
                                span,
                                path,
                                format!("SubTree '{id}' recursively includes tree '{tree_id}'"),
                            );
                        }
                    }
                }
                self.leaf_children(node, path, "SubTree");
            }
            NodeClass::Control(k) => {
                if node.children.is_empty() {
                    self.emit(
                        DiagCode::ControlNoChildren,
                        span,
                        path,
                        format!("control node '{}' has no children", k.name()),
                    );
                }
                for (attr, value) in node.attributes.iter() {
                    if class.structural_attributes().contains(&attr) {
                        continue;
                    }
                    if k.parameters().contains(&attr) {
                        if parse_count(value).is_none() {
                            self.emit(
                                DiagCode::InvalidParameter,
                                span,
                                path,
                                format!("'{attr}' of '{}' must be an integer, got '{value}'", k.name()),
                            );
                        }
                    } else if !(node.element == "Control" && attr == "ID") {
                        self.emit(
                            DiagCode::UnknownAttributeOnControl,
                            span,
                            path,
                            format!("'{}' does not use attribute '{attr}'", k.name()),
                        );
                    }
                }
            }
            NodeClass::Decorator(k) => {
                let n = node.children.len();
                if n != 1 {
                    self.emit(
                        DiagCode::DecoratorArity,
                        span,
                        path,
                        format!("decorator '{}' has {n} children, expected exactly one", k.name()),
                    );
                }
                let param = k.required_parameter();
                if let Some(p) = param {
                    match node.attributes.get(p) {
                        None => self.emit(
                            DiagCode::MissingRequiredPort,
                            span,
                            path,
                            format!("'{}' requires parameter '{p}'", k.name()),
                        ),
                        Some(v) if parse_count(v).is_none() => self.emit(
                            DiagCode::InvalidParameter,
                            span,
                            path,
                            format!("'{p}' of '{}' must be an integer, got '{v}'", k.name()),
                        ),
                        Some(_) => {}
                    }
                }
                for attr in node.attributes.names() {
                    let known = class.structural_attributes().contains(&attr)
                        || Some(attr) == param
                        || (node.element == "Decorator" && attr == "ID");
                    if !known {
                        self.emit(
                            DiagCode::UnknownAttributeOnControl,
                            span,
                            path,
                            format!("'{}' does not use attribute '{attr}'", k.name()),
                        );
                    }
                }
            }
        }
        for (i, child) in node.children.iter().enumerate() {
            self.check_node(tree_id, child, &path.child(i));
        }
    }

    fn leaf_children(&mut self, node: &RawNode, path: &NodePath, name: &str) {
        if !node.children.is_empty() {
            self.emit(
                DiagCode::LeafWithChildren,
                node.span,
                path,
                format!("leaf '{name}' must not have children"),
            );
        }
    }
}

/// Tree ids reachable from each tree through SubTree references.
pub(crate) fn subtree_reachability(model: &TreeModel) -> BTreeMap<&str, BTreeSet<&str>> {
    fn collect<'a>(node: &'a RawNode, out: &mut BTreeSet<&'a str>) {
        if node.element == "SubTree" || node.element == "SubTreePlus" {
            if let Some(id) = node.attributes.get(crate::xml::ID_ATTR) {
                out.insert(id);
            }
        }
        for c in &node.children {
            collect(c, out);
        }
    }
    let direct: BTreeMap<&str, BTreeSet<&str>> = model
        .trees
        .iter()
        .map(|t| {
            let mut refs = BTreeSet::new();
            for c in &t.element.children {
                collect(c, &mut refs);
            }
            (t.id.as_str(), refs)
        })
        .collect();
    direct
        .keys()
        .map(|&start| {
            let mut seen = BTreeSet::new();
            let mut queue: VecDeque<&str> = direct[start].iter().copied().collect();
            while let Some(id) = queue.pop_front() {
                if seen.insert(id) {
                    if let Some(next) = direct.get(id) {
                        queue.extend(next.iter().copied());
                    }
                }
            }
            (start, seen)
        })
        .collect()
}

/// All findings in document order, then by code.
pub fn lint_with(model: &TreeModel, catalog: &ActionCatalog, options: LintOptions) -> Vec<Diagnostic> {
    let mut linter = Linter {
        model,
        catalog,
        options,
        reach: subtree_reachability(model),
        seq: 0,
        out: Vec::new(),
    };
    linter.check_document();
    linter.check_trees();
    let mut out = linter.out;
    out.sort_by_key(|(seq, d)| (*seq, d.code));
    out.into_iter().map(|(_, d)| d).collect()
}

/// Strict lint.
pub fn lint(model: &TreeModel, catalog: &ActionCatalog) -> Vec<Diagnostic> {
    lint_with(model, catalog, LintOptions::strict())
}

pub fn is_syntactically_correct(model: &TreeModel, catalog: &ActionCatalog) -> bool {
    is_syntactically_correct_with(model, catalog, LintOptions::strict())
}

pub fn is_syntactically_correct_with(
    model: &TreeModel,
    catalog: &ActionCatalog,
    options: LintOptions,
) -> bool {
    !lint_with(model, catalog, options).iter().any(Diagnostic::is_error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::PortSchema;
    use crate::xml::parse;

    fn move_catalog() -> ActionCatalog {
        ActionCatalog::new().with_action("MoveTo", PortSchema::required(["goal"]))
    }

    fn wrap(body: &str) -> TreeModel {
        parse(&format!(
            r#"<root BTCPP_format="4"><BehaviorTree ID="MainTree">{body}</BehaviorTree></root>"#
        ))
        .unwrap()
    }

    fn codes(model: &TreeModel, catalog: &ActionCatalog) -> Vec<DiagCode> {
        lint(model, catalog).into_iter().map(|d| d.code).collect()
    }

    #[test]
    fn clean_navigation_tree() {
        let m = wrap(r#"<Sequence><MoveTo goal="0,0"/><MoveTo goal="2,3"/></Sequence>"#);
        assert!(lint(&m, &move_catalog()).is_empty());
        assert!(is_syntactically_correct(&m, &move_catalog()));
    }

    #[test]
    fn extra_port_is_one_error() {
        let m = wrap(r#"<Sequence><MoveTo goal="0,0" speed="1"/></Sequence>"#);
        let diags = lint(&m, &move_catalog());
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, DiagCode::UnknownPort);
        assert_eq!(diags[0].path, NodePath(vec![0, 0, 0]));
    }

    #[test]
    fn split_goal_reports_unknown_and_missing_ports() {
        let m = wrap(r#"<MoveTo x="0" y="0"/>"#);
        assert_eq!(
            codes(&m, &move_catalog()),
            vec![DiagCode::UnknownPort, DiagCode::UnknownPort, DiagCode::MissingRequiredPort]
        );
    }

    #[test]
    fn decorator_arity() {
        let m = wrap(r#"<Inverter><MoveTo goal="1"/><MoveTo goal="2"/></Inverter>"#);
        assert_eq!(codes(&m, &move_catalog()), vec![DiagCode::DecoratorArity]);
        let m = wrap(r#"<Sequence><Inverter/></Sequence>"#);
        assert_eq!(codes(&m, &move_catalog()), vec![DiagCode::DecoratorArity]);
    }

    #[test]
    fn structural_errors() {
        let m = wrap(r#"<Sequence><SubTree ID="PickRoutine"/></Sequence>"#);
        assert_eq!(codes(&m, &move_catalog()), vec![DiagCode::UnresolvedSubTree]);
        assert!(!is_syntactically_correct(&m, &move_catalog()));

        let m = wrap(r#"<Fallback/>"#);
        assert_eq!(codes(&m, &move_catalog()), vec![DiagCode::ControlNoChildren]);

        let m = wrap(r#"<MoveTo goal="1"><MoveTo goal="2"/></MoveTo>"#);
        assert_eq!(codes(&m, &move_catalog()), vec![DiagCode::LeafWithChildren]);

        let m = wrap(r#"<Wrapper><MoveTo goal="2"/></Wrapper>"#);
        assert_eq!(codes(&m, &move_catalog()), vec![DiagCode::UnknownNodeKind]);

        let m = wrap(r#"<RetryUntilSuccessful num_attempts="x"><MoveTo goal="2"/></RetryUntilSuccessful>"#);
        assert_eq!(codes(&m, &move_catalog()), vec![DiagCode::InvalidParameter]);

        let m = wrap(r#"<Repeat><MoveTo goal="2"/></Repeat>"#);
        assert_eq!(codes(&m, &move_catalog()), vec![DiagCode::MissingRequiredPort]);
    }

    #[test]
    fn duplicate_ids_and_main_selection() {
        let mut m = wrap(r#"<MoveTo goal="1"/>"#);
        m.trees.push(m.trees[0].clone());
        let c = codes(&m, &move_catalog());
        assert!(c.contains(&DiagCode::DuplicateTreeId));
        assert!(c.contains(&DiagCode::AmbiguousMain));
        assert!(!is_syntactically_correct(&m, &move_catalog()));
    }

    #[test]
    fn unused_and_recursive_trees() {
        let m = parse(
            r#"<root main_tree_to_execute="Main">
  <BehaviorTree ID="Main"><Sequence><SubTree ID="A"/></Sequence></BehaviorTree>
  <BehaviorTree ID="A"><SubTree ID="A"/></BehaviorTree>
  <BehaviorTree ID="Spare"><MoveTo goal="1"/></BehaviorTree>
</root>"#,
        )
        .unwrap();
        let diags = lint(&m, &move_catalog());
        let c: Vec<_> = diags.iter().map(|d| (d.code, d.severity)).collect();
        assert_eq!(
            c,
            vec![
                (DiagCode::RecursiveSubTree, Severity::Error),
                (DiagCode::UnusedTree, Severity::Warning)
            ]
        );
        for d in &diags {
            assert!(d.path.resolves_in(&m));
        }
    }

    #[test]
    fn control_attributes_are_warnings() {
        let m = wrap(r#"<Sequence name="main" color="red"><MoveTo goal="1" name="go"/></Sequence>"#);
        let diags = lint(&m, &move_catalog());
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, DiagCode::UnknownAttributeOnControl);
        assert_eq!(diags[0].severity, Severity::Warning);
        assert!(is_syntactically_correct(&m, &move_catalog()));
    }

    #[test]
    fn lenient_mode_downgrades_unknown_actions() {
        let m = wrap(r#"<Sequence><MoveTo goal="1"/><CheckReachability/></Sequence>"#);
        assert!(!is_syntactically_correct(&m, &move_catalog()));
        assert!(is_syntactically_correct_with(&m, &move_catalog(), LintOptions::lenient()));
    }

    #[test]
    fn generic_forms() {
        let catalog = move_catalog().with_condition("IsDone", PortSchema::default());
        let m = wrap(
            r#"<Control ID="Sequence"><Action ID="MoveTo" goal="1"/><Condition ID="IsDone"/><Condition ID="MoveTo" goal="2"/></Control>"#,
        );
        assert_eq!(codes(&m, &catalog), vec![DiagCode::LeafKindMismatch]);
    }

    #[test]
    fn report_serializes_flat_records() {
        let m = wrap(r#"<MoveTo goal="0" speed="1"/>"#);
        let v = serde_json::to_value(lint(&m, &move_catalog())).unwrap();
        assert_eq!(v[0]["code"], "UnknownPort");
        assert_eq!(v[0]["severity"], "Error");
        assert_eq!(v[0]["path"], serde_json::json!([0, 0]));
        assert!(v[0]["line"].is_number() && v[0]["column"].is_number());
    }
}
