pub mod catalog;
pub mod engine;
pub mod kinds;
pub mod lint;
pub mod prompt;
pub mod repair;
pub mod task;
pub mod xml;
