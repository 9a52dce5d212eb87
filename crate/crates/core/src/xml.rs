//! Reader and canonical writer for the behavior-tree XML dialect.
//!
//! The model produced here is deliberately permissive: every element is kept
//! as a [`RawNode`] whether or not its name is a known node kind, so that the
//! linter and the repair passes can work on documents that would not execute.

use std::fmt::{self, Write as _};

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ROOT_ELEMENT: &str = "root";
pub const TREE_ELEMENT: &str = "BehaviorTree";
pub const FORMAT_ATTR: &str = "BTCPP_format";
pub const MAIN_TREE_ATTR: &str = "main_tree_to_execute";
pub const ID_ATTR: &str = "ID";

/// Dialect versions accepted in the `BTCPP_format` attribute.
pub const SUPPORTED_FORMATS: &[&str] = &["3", "4"];

/// 1-based line and column of an element's opening `<`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Ordered attribute list. Names are unique; insertion order is document order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attributes(Vec<(String, String)>);

impl Attributes {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.iter().any(|(k, _)| k == name)
    }

    /// Sets `name`, replacing an existing value in place or appending.
    pub fn set(&mut self, name: impl Into<String>, value: impl Into<String>) {
        let name = name.into();
        let value = value.into();
        match self.0.iter_mut().find(|(k, _)| *k == name) {
            Some(slot) => slot.1 = value,
            None => self.0.push((name, value)),
        }
    }

    pub fn remove(&mut self, name: &str) -> Option<String> {
        let idx = self.0.iter().position(|(k, _)| k == name)?;
        Some(self.0.remove(idx).1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|(k, _)| k.as_str())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for Attributes {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        let mut attrs = Attributes::new();
        for (k, v) in iter {
            attrs.set(k, v);
        }
        attrs
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RawNode {
    pub element: String,
    pub attributes: Attributes,
    pub children: Vec<RawNode>,
    pub span: Span,
}

impl RawNode {
    pub fn new(element: impl Into<String>) -> Self {
        RawNode {
            element: element.into(),
            ..Default::default()
        }
    }

    pub fn with_attr(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.set(name, value);
        self
    }

    pub fn with_child(mut self, child: RawNode) -> Self {
        self.children.push(child);
        self
    }

    /// Number of nodes in this subtree, including `self`.
    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(RawNode::node_count).sum::<usize>()
    }

    /// Structural equality: element names, attributes and children, ignoring spans.
    pub fn same_structure(&self, other: &RawNode) -> bool {
        self.element == other.element
            && self.attributes == other.attributes
            && self.children.len() == other.children.len()
            && self
                .children
                .iter()
                .zip(&other.children)
                .all(|(a, b)| a.same_structure(b))
    }

    pub fn descendant(&self, indices: &[usize]) -> Option<&RawNode> {
        let mut node = self;
        for &i in indices {
            node = node.children.get(i)?;
        }
        Some(node)
    }

    pub fn descendant_mut(&mut self, indices: &[usize]) -> Option<&mut RawNode> {
        let mut node = self;
        for &i in indices {
            node = node.children.get_mut(i)?;
        }
        Some(node)
    }
}

/// One `<BehaviorTree ID="...">` definition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedTree {
    pub id: String,
    /// The `BehaviorTree` element itself. Its children are the tree body;
    /// a well-formed tree has exactly one.
    pub element: RawNode,
}

impl NamedTree {
    pub fn new(id: impl Into<String>, root: Option<RawNode>) -> Self {
        let id = id.into();
        let mut element = RawNode::new(TREE_ELEMENT).with_attr(ID_ATTR, id.clone());
        element.children.extend(root);
        NamedTree { id, element }
    }

    pub fn root(&self) -> Option<&RawNode> {
        self.element.children.first()
    }

    pub fn node_count(&self) -> usize {
        self.element.children.iter().map(RawNode::node_count).sum()
    }
}

/// Parsed document.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TreeModel {
    pub trees: Vec<NamedTree>,
    pub main_tree_id: Option<String>,
    pub format_version: Option<String>,
    /// Root attributes other than the format and main-tree attributes.
    pub root_attributes: Attributes,
    /// Non-tree children of `<root>` (e.g. `TreeNodesModel`), kept verbatim.
    pub extras: Vec<RawNode>,
}

impl TreeModel {
    pub fn tree(&self, id: &str) -> Option<&NamedTree> {
        self.trees.iter().find(|t| t.id == id)
    }

    pub fn tree_index(&self, id: &str) -> Option<usize> {
        self.trees.iter().position(|t| t.id == id)
    }

    pub fn node_count(&self) -> usize {
        self.trees.iter().map(NamedTree::node_count).sum()
    }

    /// Resolves a node path: the first index selects the tree, the rest walk
    /// the children of its `BehaviorTree` element.
    pub fn node_at(&self, path: &[usize]) -> Option<&RawNode> {
        let (first, rest) = path.split_first()?;
        self.trees.get(*first)?.element.descendant(rest)
    }

    pub fn same_structure(&self, other: &TreeModel) -> bool {
        self.main_tree_id == other.main_tree_id
            && self.format_version == other.format_version
            && self.root_attributes == other.root_attributes
            && self.trees.len() == other.trees.len()
            && self
                .trees
                .iter()
                .zip(&other.trees)
                .all(|(a, b)| a.id == b.id && a.element.same_structure(&b.element))
            && self.extras.len() == other.extras.len()
            && self
                .extras
                .iter()
                .zip(&other.extras)
                .all(|(a, b)| a.same_structure(b))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed XML at {span}: {message}")]
    MalformedXml { span: Span, message: String },
    #[error("no <root> element found")]
    NoRootElement,
    #[error("<root> contains no BehaviorTree definitions")]
    NoTrees,
    #[error("BehaviorTree at {span} has no ID attribute")]
    MissingTreeId { span: Span },
    #[error("duplicate BehaviorTree ID '{id}' at {span}")]
    DuplicateTreeId { id: String, span: Span },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MainTreeError {
    #[error("document defines {count} trees and no main_tree_to_execute")]
    AmbiguousMain { count: usize },
    #[error("main_tree_to_execute names missing tree '{id}'")]
    DanglingMain { id: String },
    #[error("document defines no trees")]
    NoTrees,
}

/// Maps byte offsets to line/column pairs.
struct LineIndex<'a> {
    text: &'a str,
    starts: Vec<usize>,
}

impl<'a> LineIndex<'a> {
    fn new(text: &'a str) -> Self {
        let mut starts = vec![0];
        starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        LineIndex { text, starts }
    }

    fn span(&self, offset: usize) -> Span {
        let offset = offset.min(self.text.len());
        let line = self.starts.partition_point(|&s| s <= offset) - 1;
        let start = self.starts[line];
        let column = self
            .text
            .get(start..offset)
            .map(|s| s.chars().count())
            .unwrap_or(offset - start)
            + 1;
        Span {
            line: line + 1,
            column,
        }
    }
}

fn element_from_start(
    start: &BytesStart<'_>,
    span: Span,
    index: &LineIndex<'_>,
    offset: usize,
) -> Result<RawNode, ParseError> {
    let malformed = |message: String| ParseError::MalformedXml {
        span: index.span(offset),
        message,
    };
    let element = std::str::from_utf8(start.name().as_ref())
        .map_err(|e| malformed(e.to_string()))?
        .to_string();
    let mut attributes = Attributes::new();
    for attr in start.attributes().with_checks(true) {
        let attr = attr.map_err(|e| malformed(e.to_string()))?;
        let key = std::str::from_utf8(attr.key.as_ref())
            .map_err(|e| malformed(e.to_string()))?
            .to_string();
        let value = attr
            .unescape_value()
            .map_err(|e| malformed(e.to_string()))?
            .into_owned();
        attributes.0.push((key, value));
    }
    Ok(RawNode {
        element,
        attributes,
        children: Vec::new(),
        span,
    })
}

/// Parses a document. Comments, processing instructions and text content
/// are discarded; every element is retained.
pub fn parse(text: &str) -> Result<TreeModel, ParseError> {
    let index = LineIndex::new(text);
    let mut reader = Reader::from_str(text);
    reader.config_mut().check_end_names = true;

    let mut stack: Vec<RawNode> = Vec::new();
    let mut top: Option<RawNode> = None;

    loop {
        let offset = reader.buffer_position() as usize;
        let event = reader.read_event().map_err(|e| ParseError::MalformedXml {
            span: index.span(reader.error_position() as usize),
            message: e.to_string(),
        })?;
        // `buffer_position` before the read points at the markup start once
        // leading whitespace has been consumed as a text event.
        match event {
            Event::Start(start) => {
                let node = element_from_start(&start, index.span(offset), &index, offset)?;
                if top.is_some() && stack.is_empty() {
                    return Err(ParseError::MalformedXml {
                        span: node.span,
                        message: "multiple top-level elements".into(),
                    });
                }
                stack.push(node);
            }
            Event::Empty(start) => {
                let node = element_from_start(&start, index.span(offset), &index, offset)?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(node),
                    None if top.is_none() => top = Some(node),
                    None => {
                        return Err(ParseError::MalformedXml {
                            span: node.span,
                            message: "multiple top-level elements".into(),
                        })
                    }
                }
            }
            Event::End(_) => {
                let node = stack.pop().ok_or_else(|| ParseError::MalformedXml {
                    span: index.span(offset),
                    message: "unexpected closing tag".into(),
                })?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(node),
                    None => top = Some(node),
                }
            }
            Event::Text(t) => {
                if stack.is_empty() && !t.iter().all(u8::is_ascii_whitespace) {
                    return Err(ParseError::MalformedXml {
                        span: index.span(offset),
                        message: "text outside of the document element".into(),
                    });
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }

    if let Some(open) = stack.last() {
        return Err(ParseError::MalformedXml {
            span: index.span(text.len()),
            message: format!("unclosed element <{}> opened at {}", open.element, open.span),
        });
    }
    let top = top.ok_or(ParseError::NoRootElement)?;
    if top.element != ROOT_ELEMENT {
        return Err(ParseError::NoRootElement);
    }
    model_from_root(top)
}

fn model_from_root(root: RawNode) -> Result<TreeModel, ParseError> {
    let mut model = TreeModel::default();
    for (name, value) in root.attributes.0 {
        match name.as_str() {
            FORMAT_ATTR => model.format_version = Some(value),
            MAIN_TREE_ATTR => model.main_tree_id = Some(value),
            _ => model.root_attributes.0.push((name, value)),
        }
    }
    for child in root.children {
        if child.element != TREE_ELEMENT {
            model.extras.push(child);
            continue;
        }
        let id = child
            .attributes
            .get(ID_ATTR)
            .ok_or(ParseError::MissingTreeId { span: child.span })?
            .to_string();
        if model.tree(&id).is_some() {
            return Err(ParseError::DuplicateTreeId {
                id,
                span: child.span,
            });
        }
        model.trees.push(NamedTree { id, element: child });
    }
    if model.trees.is_empty() {
        return Err(ParseError::NoTrees);
    }
    Ok(model)
}

/// Picks the entry tree: the `main_tree_to_execute` target, or the only tree.
pub fn select_main_tree(model: &TreeModel) -> Result<&str, MainTreeError> {
    match &model.main_tree_id {
        Some(id) => model
            .tree(id)
            .map(|t| t.id.as_str())
            .ok_or_else(|| MainTreeError::DanglingMain { id: id.clone() }),
        None => match model.trees.as_slice() {
            [] => Err(MainTreeError::NoTrees),
            [only] => Ok(only.id.as_str()),
            many => Err(MainTreeError::AmbiguousMain { count: many.len() }),
        },
    }
}

fn escape_attr(value: &str, out: &mut String) {
    for ch in value.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
}

fn write_node(node: &RawNode, depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("    ");
    }
    out.push('<');
    out.push_str(&node.element);
    for (k, v) in node.attributes.iter() {
        let _ = write!(out, " {k}=\"");
        escape_attr(v, out);
        out.push('"');
    }
    if node.children.is_empty() {
        out.push_str("/>\n");
        return;
    }
    out.push_str(">\n");
    for child in &node.children {
        write_node(child, depth + 1, out);
    }
    for _ in 0..depth {
        out.push_str("    ");
    }
    let _ = writeln!(out, "</{}>", node.element);
}

/// Canonical form: 4-space indentation, one element per line, self-closing
/// empty elements, attributes in stored order, trailing newline.
pub fn serialize(model: &TreeModel) -> String {
    let mut root = RawNode::new(ROOT_ELEMENT);
    if let Some(v) = &model.format_version {
        root.attributes.set(FORMAT_ATTR, v.clone());
    }
    if let Some(v) = &model.main_tree_id {
        root.attributes.set(MAIN_TREE_ATTR, v.clone());
    }
    for (k, v) in model.root_attributes.iter() {
        root.attributes.set(k, v);
    }
    root.children
        .extend(model.trees.iter().map(|t| t.element.clone()));
    root.children.extend(model.extras.iter().cloned());
    let mut out = String::new();
    write_node(&root, 0, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const DATASET_EXAMPLE: &str = r#"<root BTCPP_format="4">
    <BehaviorTree ID="MainTree">
        <Sequence>
            <GoPoint/>
            <GoObject/>
        </Sequence>
    </BehaviorTree>
</root>
"#;

    #[test]
    fn parses_dataset_example() {
        let model = parse(DATASET_EXAMPLE).unwrap();
        assert_eq!(model.trees.len(), 1);
        assert_eq!(model.node_count(), 3);
        assert_eq!(model.format_version.as_deref(), Some("4"));
        let seq = model.trees[0].root().unwrap();
        assert_eq!(seq.span, Span { line: 3, column: 9 });
        assert_eq!(seq.children[1].element, "GoObject");
    }

    #[test]
    fn minimal_document() {
        let model =
            parse(r#"<root><BehaviorTree ID="T"><AlwaysSuccess/></BehaviorTree></root>"#).unwrap();
        assert_eq!(model.trees.len(), 1);
        assert_eq!(select_main_tree(&model).unwrap(), "T");
    }

    #[test]
    fn unbalanced_tags_report_line() {
        let text = "<root>\n  <BehaviorTree ID=\"T\">\n    <Sequence>\n  </BehaviorTree>\n</root>";
        match parse(text) {
            Err(ParseError::MalformedXml { span, .. }) => assert_eq!(span.line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_document_is_malformed() {
        let text = "<root>\n<BehaviorTree ID=\"T\">\n<Sequence>\n<MoveTo goal=\"1,2\"/>";
        assert!(matches!(parse(text), Err(ParseError::MalformedXml { .. })));
    }

    #[test]
    fn structural_errors() {
        assert_eq!(parse("<BehaviorTree ID=\"T\"/>").unwrap_err(), ParseError::NoRootElement);
        assert_eq!(parse("   ").unwrap_err(), ParseError::NoRootElement);
        assert_eq!(parse("<root><Other/></root>").unwrap_err(), ParseError::NoTrees);
        assert!(matches!(
            parse(r#"<root><BehaviorTree ID="A"><X/></BehaviorTree><BehaviorTree ID="A"><Y/></BehaviorTree></root>"#),
            Err(ParseError::DuplicateTreeId { id, .. }) if id == "A"
        ));
        assert!(matches!(
            parse(r#"<root><BehaviorTree><X/></BehaviorTree></root>"#),
            Err(ParseError::MissingTreeId { .. })
        ));
    }

    #[test]
    fn duplicate_attributes_are_errors() {
        let text = r#"<root><BehaviorTree ID="T"><MoveTo goal="1" goal="2"/></BehaviorTree></root>"#;
        assert!(matches!(parse(text), Err(ParseError::MalformedXml { .. })));
    }

    #[test]
    fn comments_and_declarations_are_dropped() {
        let text = r#"<?xml version="1.0"?>
<!-- generated -->
<root main_tree_to_execute="Main">
    <!-- the main tree -->
    <BehaviorTree ID="Main"><SubTree ID="Sub"/></BehaviorTree>
    <BehaviorTree ID="Sub"><AlwaysSuccess/></BehaviorTree>
</root>"#;
        let model = parse(text).unwrap();
        assert_eq!(model.trees.len(), 2);
        assert_eq!(select_main_tree(&model).unwrap(), "Main");
        assert!(!serialize(&model).contains("<!--"));
    }

    #[test]
    fn main_tree_selection_errors() {
        let two = parse(r#"<root><BehaviorTree ID="A"><X/></BehaviorTree><BehaviorTree ID="B"><Y/></BehaviorTree></root>"#).unwrap();
        assert_eq!(
            select_main_tree(&two).unwrap_err(),
            MainTreeError::AmbiguousMain { count: 2 }
        );
        let dangling = parse(r#"<root main_tree_to_execute="Z"><BehaviorTree ID="A"><X/></BehaviorTree></root>"#).unwrap();
        assert!(matches!(
            select_main_tree(&dangling),
            Err(MainTreeError::DanglingMain { .. })
        ));
    }

    #[test]
    fn canonical_serialization() {
        let model = parse(
            r#"<root BTCPP_format="4"><BehaviorTree ID="T"><Sequence name="s"><MoveTo goal="0,0"/></Sequence></BehaviorTree></root>"#,
        )
        .unwrap();
        let expected = "<root BTCPP_format=\"4\">\n    <BehaviorTree ID=\"T\">\n        <Sequence name=\"s\">\n            <MoveTo goal=\"0,0\"/>\n        </Sequence>\n    </BehaviorTree>\n</root>\n";
        assert_eq!(serialize(&model), expected);
    }

    #[test]
    fn empty_attributes_serialize_bare() {
        let model = TreeModel {
            trees: vec![NamedTree::new("T", Some(RawNode::new("AlwaysSuccess")))],
            ..Default::default()
        };
        assert!(serialize(&model).contains("<AlwaysSuccess/>"));
    }

    #[test]
    fn unknown_content_survives_round_trip() {
        let text = r#"<root BTCPP_format="4" project="x">
    <BehaviorTree ID="T">
        <Sequence>
            <MoveTo goal="1,2" weird="a &amp; &quot;b&quot;"/>
            <CheckStatus foo="bar"/>
        </Sequence>
    </BehaviorTree>
    <TreeNodesModel><Action ID="MoveTo"/></TreeNodesModel>
</root>"#;
        let model = parse(text).unwrap();
        let again = parse(&serialize(&model)).unwrap();
        assert!(model.same_structure(&again));
        let leaf = again.node_at(&[0, 0, 0]).unwrap();
        assert_eq!(leaf.attributes.get("weird"), Some("a & \"b\""));
        assert_eq!(again.node_at(&[0, 0, 1]).unwrap().element, "CheckStatus");
        assert_eq!(again.extras[0].element, "TreeNodesModel");
        assert_eq!(again.root_attributes.get("project"), Some("x"));
    }

    #[test]
    fn attribute_values_with_newlines_round_trip() {
        let mut model = parse(r#"<root><BehaviorTree ID="T"><A/></BehaviorTree></root>"#).unwrap();
        model.trees[0].element.children[0]
            .attributes
            .set("text", "line one\nline\ttwo <&>");
        let again = parse(&serialize(&model)).unwrap();
        assert!(model.same_structure(&again));
    }
}
