//! Task specifications, golden trees and mutants shipped with the crate.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{load_task_spec, ReasonClass, TaskSpec};

pub const TASK_IDS: [u8; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 9];

/// Reference for the task-spec file format.
pub const TASK_SCHEMA: &str = include_str!("../../tasks/SCHEMA.md");

const SOURCES: [&str; 9] = [
    include_str!("../../tasks/task1.toml"),
    include_str!("../../tasks/task2.toml"),
    include_str!("../../tasks/task3.toml"),
    include_str!("../../tasks/task4.toml"),
    include_str!("../../tasks/task5.toml"),
    include_str!("../../tasks/task6.toml"),
    include_str!("../../tasks/task7.toml"),
    include_str!("../../tasks/task8.toml"),
    include_str!("../../tasks/task9.toml"),
];

const GOLDEN: [&str; 9] = [
    include_str!("../../tasks/golden/task1.xml"),
    include_str!("../../tasks/golden/task2.xml"),
    include_str!("../../tasks/golden/task3.xml"),
    include_str!("../../tasks/golden/task4.xml"),
    include_str!("../../tasks/golden/task5.xml"),
    include_str!("../../tasks/golden/task6.xml"),
    include_str!("../../tasks/golden/task7.xml"),
    include_str!("../../tasks/golden/task8.xml"),
    include_str!("../../tasks/golden/task9.xml"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutantClass {
    /// Actions reordered.
    Shuffled,
    /// A required action removed.
    Dropped,
    /// A port the catalog does not declare.
    ExtraParam,
    /// Control flow changed: a missing fallback or loop, or an added repeat.
    WrongStructure,
    /// One port split into several (`x`/`y` instead of `goal`).
    SplitParam,
}

impl fmt::Display for MutantClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MutantClass::Shuffled => "shuffled",
            MutantClass::Dropped => "dropped",
            MutantClass::ExtraParam => "extra_param",
            MutantClass::WrongStructure => "wrong_structure",
            MutantClass::SplitParam => "split_param",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mutant {
    pub task: u8,
    pub class: MutantClass,
    pub xml: &'static str,
    /// Class of the first reason the verdict must report.
    pub expected: ReasonClass,
}

macro_rules! mutant {
    ($task:literal, $class:ident, $file:literal, $expected:ident) => {
        Mutant {
            task: $task,
            class: MutantClass::$class,
            xml: include_str!(concat!("../../tasks/mutants/", $file, ".xml")),
            expected: ReasonClass::$expected,
        }
    };
}

const MUTANTS: [Mutant; 37] = [
    mutant!(1, Shuffled, "task1_shuffled", OrderViolation),
    mutant!(1, Dropped, "task1_dropped", MissingEvent),
    mutant!(1, ExtraParam, "task1_extra_param", Lint),
    mutant!(1, WrongStructure, "task1_wrong_structure", ForbiddenEvent),
    mutant!(1, SplitParam, "task1_split_goal", Lint),
    mutant!(2, Shuffled, "task2_shuffled", PrecedenceViolation),
    mutant!(2, Dropped, "task2_dropped", MissingEvent),
    mutant!(2, ExtraParam, "task2_extra_param", Lint),
    mutant!(2, WrongStructure, "task2_wrong_structure", ForbiddenEvent),
    mutant!(3, Shuffled, "task3_shuffled", OrderViolation),
    mutant!(3, Dropped, "task3_dropped", MissingEvent),
    mutant!(3, ExtraParam, "task3_extra_param", Lint),
    mutant!(3, WrongStructure, "task3_wrong_structure", RootStatus),
    mutant!(4, Shuffled, "task4_shuffled", OrderViolation),
    mutant!(4, Dropped, "task4_dropped", MissingEvent),
    mutant!(4, ExtraParam, "task4_extra_param", Lint),
    mutant!(4, WrongStructure, "task4_wrong_structure", ForbiddenEvent),
    mutant!(5, Shuffled, "task5_shuffled", Truncated),
    mutant!(5, Dropped, "task5_dropped", MissingEvent),
    mutant!(5, ExtraParam, "task5_extra_param", Lint),
    mutant!(5, WrongStructure, "task5_wrong_structure", RootStatus),
    mutant!(6, Shuffled, "task6_shuffled", OrderViolation),
    mutant!(6, Dropped, "task6_dropped", MissingEvent),
    mutant!(6, ExtraParam, "task6_extra_param", Lint),
    mutant!(6, WrongStructure, "task6_wrong_structure", RootStatus),
    mutant!(7, Shuffled, "task7_shuffled", OrderViolation),
    mutant!(7, Dropped, "task7_dropped", MissingEvent),
    mutant!(7, ExtraParam, "task7_extra_param", Lint),
    mutant!(7, WrongStructure, "task7_wrong_structure", ForbiddenEvent),
    mutant!(8, Shuffled, "task8_shuffled", OrderViolation),
    mutant!(8, Dropped, "task8_dropped", MissingEvent),
    mutant!(8, ExtraParam, "task8_extra_param", Lint),
    mutant!(8, WrongStructure, "task8_wrong_structure", ForbiddenEvent),
    mutant!(9, Shuffled, "task9_shuffled", OrderViolation),
    mutant!(9, Dropped, "task9_dropped", MissingEvent),
    mutant!(9, ExtraParam, "task9_extra_param", Lint),
    mutant!(9, WrongStructure, "task9_wrong_structure", ForbiddenEvent),
];

fn index(id: u8) -> Option<usize> {
    TASK_IDS.iter().position(|&t| t == id)
}

/// Raw TOML of a bundled task.
pub fn task_source(id: u8) -> Option<&'static str> {
    index(id).map(|i| SOURCES[i])
}

pub fn golden_xml(id: u8) -> Option<&'static str> {
    index(id).map(|i| GOLDEN[i])
}

/// Loads a bundled task. Panics if the bundled file is broken.
pub fn bundled_task(id: u8) -> Option<TaskSpec> {
    task_source(id).map(|src| load_task_spec(src).unwrap_or_else(|e| panic!("bundled task {id}: {e}")))
}

pub fn bundled_tasks() -> Vec<TaskSpec> {
    TASK_IDS.iter().filter_map(|&id| bundled_task(id)).collect()
}

/// Mutants of one task, or of all tasks when `task` is `None`.
pub fn mutants(task: Option<u8>) -> impl Iterator<Item = &'static Mutant> {
    MUTANTS.iter().filter(move |m| task.is_none_or(|t| m.task == t))
}
