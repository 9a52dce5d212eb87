use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ports_match, Reason, ReasonClass};
use crate::engine::{ExecutionTrace, NodeStatus, TraceEvent};

/// Selects completed leaf invocations by action name, a subset of port
/// values and optionally the returned status.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventMatcher {
    pub action: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ports: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<NodeStatus>,
}

impl EventMatcher {
    pub fn new(action: &str) -> Self {
        EventMatcher {
            action: action.to_string(),
            ports: BTreeMap::new(),
            status: None,
        }
    }

    pub fn with_port(mut self, port: &str, value: &str) -> Self {
        self.ports.insert(port.to_string(), value.to_string());
        self
    }

    pub fn with_status(mut self, status: NodeStatus) -> Self {
        self.status = Some(status);
        self
    }

    pub fn matches(&self, event: &TraceEvent) -> bool {
        event.action.as_deref() == Some(self.action.as_str())
            && self.status.is_none_or(|s| s == event.status)
            && ports_match(&self.ports, &event.ports)
    }
}

impl fmt::Display for EventMatcher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.action)?;
        if !self.ports.is_empty() {
            let ports: Vec<_> = self.ports.iter().map(|(k, v)| format!("{k}=\"{v}\"")).collect();
            write!(f, "({})", ports.join(", "))?;
        }
        if let Some(s) = self.status {
            write!(f, " -> {s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "ForbiddenFields", into = "ForbiddenFields")]
pub struct ForbiddenEvent {
    pub event: EventMatcher,
    /// Occurrences tolerated before the event counts as forbidden.
    pub allowed: usize,
}

// Flat on-disk form; `flatten` cannot be combined with `deny_unknown_fields`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ForbiddenFields {
    action: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    ports: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    status: Option<NodeStatus>,
    #[serde(default)]
    allowed: usize,
}

impl From<ForbiddenFields> for ForbiddenEvent {
    fn from(f: ForbiddenFields) -> Self {
        ForbiddenEvent {
            event: EventMatcher {
                action: f.action,
                ports: f.ports,
                status: f.status,
            },
            allowed: f.allowed,
        }
    }
}

impl From<ForbiddenEvent> for ForbiddenFields {
    fn from(f: ForbiddenEvent) -> Self {
        ForbiddenFields {
            action: f.event.action,
            ports: f.event.ports,
            status: f.event.status,
            allowed: f.allowed,
        }
    }
}

/// The first occurrence of every `before` event must precede the first
/// occurrence of every `after` event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Precedence {
    pub before: Vec<EventMatcher>,
    pub after: Vec<EventMatcher>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TracePattern {
    /// Must occur as a subsequence of the action events.
    #[serde(default)]
    pub ordered: Vec<EventMatcher>,
    #[serde(default)]
    pub forbidden: Vec<ForbiddenEvent>,
    #[serde(default)]
    pub precedence: Vec<Precedence>,
    #[serde(default)]
    pub require_root_success: bool,
}

impl TracePattern {
    pub fn matchers(&self) -> impl Iterator<Item = &EventMatcher> {
        self.ordered
            .iter()
            .chain(self.forbidden.iter().map(|f| &f.event))
            .chain(self.precedence.iter().flat_map(|p| p.before.iter().chain(&p.after)))
    }
}

/// Matches `trace` against the event parts of `pattern`. Root status is
/// checked by [`validate`](super::validate), not here.
pub fn match_trace(trace: &ExecutionTrace, pattern: &TracePattern) -> (bool, Vec<Reason>) {
    let events: Vec<&TraceEvent> = trace.action_events().collect();
    let mut reasons = Vec::new();

    let mut pos = 0;
    for (k, m) in pattern.ordered.iter().enumerate() {
        match events[pos..].iter().position(|e| m.matches(e)) {
            Some(offset) => pos += offset + 1,
            None => {
                // Fewer occurrences than the pattern asks for means the event
                // is missing; otherwise it happened, but out of order.
                let needed = pattern.ordered[..=k].iter().filter(|o| *o == m).count();
                let have = events.iter().filter(|e| m.matches(e)).count();
                let (class, message) = if have < needed {
                    (
                        ReasonClass::MissingEvent,
                        format!("expected event {m} (occurrence {needed}) never happened"),
                    )
                } else {
                    (
                        ReasonClass::OrderViolation,
                        format!("event {m} is out of order (expected step {} of {})", k + 1, pattern.ordered.len()),
                    )
                };
                reasons.push(Reason::new(class, message));
                break;
            }
        }
    }

    for f in &pattern.forbidden {
        let count = events.iter().filter(|e| f.event.matches(e)).count();
        if count > f.allowed {
            reasons.push(Reason::new(
                ReasonClass::ForbiddenEvent,
                format!("forbidden event {} occurred {count} times (allowed {})", f.event, f.allowed),
            ));
        }
    }

    let first = |m: &EventMatcher| events.iter().position(|e| m.matches(e));
    for p in &pattern.precedence {
        let mut missing = false;
        for m in p.before.iter().chain(&p.after) {
            if first(m).is_none() {
                missing = true;
                reasons.push(Reason::new(
                    ReasonClass::MissingEvent,
                    format!("expected event {m} never happened"),
                ));
            }
        }
        if missing {
            continue;
        }
        for b in &p.before {
            for a in &p.after {
                if first(b) > first(a) {
                    reasons.push(Reason::new(
                        ReasonClass::PrecedenceViolation,
                        format!("event {b} must happen before {a}"),
                    ));
                }
            }
        }
    }

    (reasons.is_empty(), reasons)
}
