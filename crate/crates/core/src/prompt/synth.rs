//! Seeded generator of synthetic dataset entries.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DatasetEntry;
use crate::catalog::{ActionCatalog, PortSchema};
use crate::xml::{serialize, NamedTree, RawNode, TreeModel};

const OBJECTS: &[&str] = &["red box", "blue cup", "bottle", "screwdriver", "apple", "book"];
const PLACES: &[&str] = &["table", "shelf", "bin", "kitchen", "workbench", "charging dock"];
const PHRASES: &[&str] = &["hello", "task completed", "object not found", "please step aside"];

/// Actions and conditions used by [`synth_dataset`].
pub fn synth_catalog() -> ActionCatalog {
    ActionCatalog::new()
        .with_action("GoPoint", PortSchema::required(["goal"]))
        .with_action("PickObject", PortSchema::required(["object"]))
        .with_action("PlaceObject", PortSchema::required(["location"]))
        .with_action("Say", PortSchema::required(["text"]))
        .with_action("Wait", PortSchema::required(["seconds"]))
        .with_condition("IsObjectDetected", PortSchema::required(["object"]))
        .with_condition("IsBatteryOk", PortSchema::default())
}

struct Segment {
    node: RawNode,
    text: String,
    actions: Vec<&'static str>,
}

fn point(rng: &mut ChaCha8Rng) -> String {
    format!("{},{}", rng.random_range(0..12), rng.random_range(0..12))
}

fn go(goal: &str) -> RawNode {
    RawNode::new("GoPoint").with_attr("goal", goal)
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items.choose(rng).expect("non-empty")
}

fn segment(rng: &mut ChaCha8Rng) -> Segment {
    match rng.random_range(0..6) {
        0 => {
            let goals: Vec<String> = (0..rng.random_range(2..=5)).map(|_| point(rng)).collect();
            let node = goals.iter().fold(RawNode::new("Sequence"), |s, g| s.with_child(go(g)));
            let list: Vec<String> = goals.iter().map(|g| format!("({g})")).collect();
            Segment {
                node,
                text: format!("visits the locations {} in order", list.join(", ")),
                actions: vec!["GoPoint"],
            }
        }
        1 => {
            let (from, object, place) = (point(rng), pick(rng, OBJECTS), pick(rng, PLACES));
            let node = RawNode::new("Sequence")
                .with_child(go(&from))
                .with_child(RawNode::new("PickObject").with_attr("object", object))
                .with_child(RawNode::new("PlaceObject").with_attr("location", place));
            Segment {
                node,
                text: format!("moves to ({from}), picks up the {object} and places it on the {place}"),
                actions: vec!["GoPoint", "PickObject", "PlaceObject"],
            }
        }
        2 => {
            let object = pick(rng, OBJECTS);
            let node = RawNode::new("Fallback")
                .with_child(
                    RawNode::new("Sequence")
                        .with_child(RawNode::new("IsObjectDetected").with_attr("object", object))
                        .with_child(RawNode::new("PickObject").with_attr("object", object)),
                )
                .with_child(RawNode::new("Say").with_attr("text", "object not found"));
            Segment {
                node,
                text: format!("picks up the {object} if it is detected, otherwise it reports that the object was not found"),
                actions: vec!["IsObjectDetected", "PickObject", "Say"],
            }
        }
        3 => {
            let (goal, n) = (point(rng), rng.random_range(2..=5));
            let node = RawNode::new("RetryUntilSuccessful")
                .with_attr("num_attempts", n.to_string())
                .with_child(go(&goal));
            Segment {
                node,
                text: format!("tries to reach ({goal}) up to {n} times"),
                actions: vec!["GoPoint"],
            }
        }
        4 => {
            let (a, b, n) = (point(rng), point(rng), rng.random_range(2..=4));
            let node = RawNode::new("Repeat").with_attr("num_cycles", n.to_string()).with_child(
                RawNode::new("Sequence")
                    .with_child(go(&a))
                    .with_child(go(&b))
                    .with_child(RawNode::new("Wait").with_attr("seconds", rng.random_range(1..10).to_string())),
            );
            Segment {
                node,
                text: format!("patrols between ({a}) and ({b}) {n} times, pausing after each round"),
                actions: vec!["GoPoint", "Wait"],
            }
        }
        _ => {
            let (goal, phrase) = (point(rng), pick(rng, PHRASES));
            let node = RawNode::new("ReactiveSequence")
                .with_child(RawNode::new("IsBatteryOk"))
                .with_child(
                    RawNode::new("Sequence")
                        .with_child(go(&goal))
                        .with_child(RawNode::new("Say").with_attr("text", phrase)),
                );
            Segment {
                node,
                text: format!("while the battery is ok, goes to ({goal}) and says \"{phrase}\""),
                actions: vec!["IsBatteryOk", "GoPoint", "Say"],
            }
        }
    }
}

/// `count` entries; the same seed always yields the same entries.
pub fn synth_dataset(count: usize, seed: u64) -> Vec<DatasetEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let segments: Vec<Segment> = (0..rng.random_range(1..=3)).map(|_| segment(&mut rng)).collect();
            let mut actions: Vec<&str> = segments.iter().flat_map(|s| s.actions.iter().copied()).collect();
            actions.sort_unstable();
            actions.dedup();
            let steps: Vec<&str> = segments.iter().map(|s| s.text.as_str()).collect();
            let description = format!(
                "The behavior tree represents a robot that {}. The available actions are: {}",
                steps.join(", then "),
                actions.iter().map(|a| format!("\"{a}\"")).collect::<Vec<_>>().join(", ")
            );
            let root = if segments.len() == 1 {
                segments.into_iter().next().expect("one segment").node
            } else {
                segments.into_iter().fold(RawNode::new("Sequence"), |s, seg| s.with_child(seg.node))
            };
            let model = TreeModel {
                trees: vec![NamedTree::new("MainTree", Some(root))],
                main_tree_id: Some("MainTree".into()),
                format_version: Some("4".into()),
                ..Default::default()
            };
            DatasetEntry::new(description, serialize(&model))
        })
        .collect()
}
