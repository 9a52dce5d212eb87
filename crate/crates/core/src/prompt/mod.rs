//! Prompt assembly, tree extraction from model replies, and the
//! instruction-following dataset.

mod dataset;
mod extract;
mod synth;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dataset::{read_dataset, read_jsonl, write_dataset, write_jsonl, DatasetEntry, DatasetError};
pub use extract::{extract_tree, NoTreeFound};
pub use synth::{synth_catalog, synth_dataset};

use crate::catalog::ActionCatalog;
use crate::lint::{lint, Severity};
use crate::xml::parse;

/// System message of every generation prompt and the `instruction` field of
/// every dataset record.
pub const GENERATION_INSTRUCTION: &str = "You will be provided a summary of a task performed by a robot, and your objective is to express this task as a behavior tree in XML format.";

/// Opening sentence of the description-generation system message.
pub const DESCRIPTION_INSTRUCTION: &str = "You will be provided a behavior tree in XML format, and your task is to summarize the task performed by this behavior tree.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Message {
            role,
            content: content.into(),
        }
    }
}

/// A system message followed by alternating user and assistant turns.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Message>", into = "Vec<Message>")]
pub struct MessageList {
    messages: Vec<Message>,
}

impl MessageList {
    pub fn new(messages: Vec<Message>) -> Result<Self, PromptError> {
        let mut roles = messages.iter().map(|m| m.role);
        if roles.next() != Some(Role::System) {
            return Err(PromptError::InvalidLayout("the first message must be a system message".into()));
        }
        for (i, role) in roles.enumerate() {
            let expected = if i % 2 == 0 { Role::User } else { Role::Assistant };
            if role != expected {
                return Err(PromptError::InvalidLayout(format!(
                    "message {} should have role {expected:?}, found {role:?}",
                    i + 1
                )));
            }
        }
        Ok(MessageList { messages })
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }
}

impl TryFrom<Vec<Message>> for MessageList {
    type Error = PromptError;

    fn try_from(messages: Vec<Message>) -> Result<Self, Self::Error> {
        MessageList::new(messages)
    }
}

impl From<MessageList> for Vec<Message> {
    fn from(list: MessageList) -> Self {
        list.messages
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("task description is empty")]
    EmptyDescription,
    #[error("tree does not parse: {0}")]
    UnparseableTree(String),
    #[error("example tree is not lint-clean: {0}")]
    ExampleNotLintClean(String),
    #[error("invalid message layout: {0}")]
    InvalidLayout(String),
}

/// A task description with the tree that solves it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExamplePair {
    pub description: String,
    pub tree_xml: String,
}

impl ExamplePair {
    pub fn new(description: impl Into<String>, tree_xml: impl Into<String>) -> Self {
        ExamplePair {
            description: description.into(),
            tree_xml: tree_xml.into(),
        }
    }

    /// Checks that the tree parses and has no lint errors against `catalog`.
    pub fn validate(&self, catalog: &ActionCatalog) -> Result<(), PromptError> {
        if self.description.trim().is_empty() {
            return Err(PromptError::EmptyDescription);
        }
        let model = parse(&self.tree_xml).map_err(|e| PromptError::UnparseableTree(e.to_string()))?;
        let errors: Vec<String> = lint(&model, catalog)
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .map(|d| d.message)
            .collect();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(PromptError::ExampleNotLintClean(errors.join("; ")))
        }
    }
}

/// Extra requirements appended to the description system message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptionConstraints {
    pub max_words: usize,
    pub compatibility_note: String,
}

impl Default for DescriptionConstraints {
    fn default() -> Self {
        DescriptionConstraints {
            max_words: 120,
            compatibility_note: "The behavior tree is written for the BehaviorTree.CPP library, so use its node names when referring to control nodes.".into(),
        }
    }
}

impl DescriptionConstraints {
    pub fn system_message(&self) -> String {
        format!(
            "{DESCRIPTION_INSTRUCTION} Use at most {} words. {} Give an overall summary of the task instead of describing the tree node by node.",
            self.max_words, self.compatibility_note
        )
    }
}

/// Zero-shot: `[system, user]`. One-shot: `[system, user, assistant, user]`
/// with the example description and tree as the first exchange.
pub fn build_generation_prompt(task_description: &str, example: Option<&ExamplePair>) -> Result<MessageList, PromptError> {
    if task_description.trim().is_empty() {
        return Err(PromptError::EmptyDescription);
    }
    let mut messages = vec![Message::new(Role::System, GENERATION_INSTRUCTION)];
    if let Some(example) = example {
        if example.description.trim().is_empty() {
            return Err(PromptError::EmptyDescription);
        }
        parse(&example.tree_xml).map_err(|e| PromptError::UnparseableTree(e.to_string()))?;
        messages.push(Message::new(Role::User, &example.description));
        messages.push(Message::new(Role::Assistant, &example.tree_xml));
    }
    messages.push(Message::new(Role::User, task_description));
    MessageList::new(messages)
}

/// One-shot description prompt: the example tree and its description, then
/// the tree to describe.
pub fn build_description_prompt(
    tree_xml: &str,
    example: &ExamplePair,
    constraints: &DescriptionConstraints,
) -> Result<MessageList, PromptError> {
    parse(tree_xml).map_err(|e| PromptError::UnparseableTree(e.to_string()))?;
    parse(&example.tree_xml).map_err(|e| PromptError::UnparseableTree(e.to_string()))?;
    MessageList::new(vec![
        Message::new(Role::System, constraints.system_message()),
        Message::new(Role::User, &example.tree_xml),
        Message::new(Role::Assistant, &example.description),
        Message::new(Role::User, tree_xml),
    ])
}

/// Example used for one-shot prompts that are not tailored to a task.
pub fn generic_example() -> ExamplePair {
    ExamplePair::new(
        "The behavior tree represents a robot that moves to the point (3,2) and then picks up the red box. The available actions are: \"GoPoint\", \"PickObject\"",
        r#"<root BTCPP_format="4" main_tree_to_execute="MainTree">
    <BehaviorTree ID="MainTree">
        <Sequence>
            <GoPoint goal="3,2"/>
            <PickObject object="red box"/>
        </Sequence>
    </BehaviorTree>
</root>
"#,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_checked() {
        let bad = vec![Message::new(Role::User, "hi")];
        assert!(MessageList::new(bad).is_err());
        let bad = vec![
            Message::new(Role::System, "s"),
            Message::new(Role::Assistant, "a"),
        ];
        assert!(MessageList::new(bad).is_err());
    }

    #[test]
    fn zero_and_one_shot() {
        let zs = build_generation_prompt("visit (1,1)", None).unwrap();
        assert_eq!(zs.len(), 2);
        let example = generic_example();
        let os = build_generation_prompt("visit (1,1)", Some(&example)).unwrap();
        let roles: Vec<_> = os.messages().iter().map(|m| m.role).collect();
        assert_eq!(roles, [Role::System, Role::User, Role::Assistant, Role::User]);
        assert_eq!(os.messages()[2].content, example.tree_xml);
        assert_eq!(build_generation_prompt("  ", Some(&example)), Err(PromptError::EmptyDescription));
    }

    #[test]
    fn description_prompt() {
        let example = generic_example();
        let c = DescriptionConstraints::default();
        let list = build_description_prompt(&example.tree_xml, &example, &c).unwrap();
        assert!(list.messages()[0].content.starts_with(DESCRIPTION_INSTRUCTION));
        assert!(list.messages()[0].content.contains("120 words"));
        assert!(matches!(
            build_description_prompt("<root><BehaviorTree", &example, &c),
            Err(PromptError::UnparseableTree(_))
        ));
    }

    #[test]
    fn message_list_serializes_as_array() {
        let list = build_generation_prompt("go", None).unwrap();
        let json = serde_json::to_string(&list).unwrap();
        assert!(json.starts_with(r#"[{"role":"system""#));
        let back: MessageList = serde_json::from_str(&json).unwrap();
        assert_eq!(back, list);
        assert!(serde_json::from_str::<MessageList>(r#"[{"role":"user","content":"x"}]"#).is_err());
    }
}
