use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeafKind {
    #[default]
    Action,
    Condition,
}

/// Port names accepted by one catalog entry. The three sets are disjoint.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortSchema {
    #[serde(default)]
    pub required: BTreeSet<String>,
    #[serde(default)]
    pub optional: BTreeSet<String>,
    /// Output ports: the attribute names a blackboard key (`{key}`) the
    /// action writes to.
    #[serde(default)]
    pub outputs: BTreeSet<String>,
}

impl PortSchema {
    pub fn required<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        PortSchema {
            required: names.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    pub fn accepts(&self, port: &str) -> bool {
        self.required.contains(port) || self.optional.contains(port) || self.outputs.contains(port)
    }

    pub fn is_output(&self, port: &str) -> bool {
        self.outputs.contains(port)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogEntry {
    #[serde(default)]
    pub kind: LeafKind,
    #[serde(flatten)]
    pub ports: PortSchema,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("port '{port}' of '{action}' is declared in more than one role")]
pub struct OverlappingPorts {
    pub action: String,
    pub port: String,
}

/// Registered actions and conditions with their port schemas.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, CatalogEntry>", into = "BTreeMap<String, CatalogEntry>")]
pub struct ActionCatalog {
    entries: BTreeMap<String, CatalogEntry>,
}

impl ActionCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, entry: CatalogEntry) -> Result<(), OverlappingPorts> {
        let name = name.into();
        let p = &entry.ports;
        let overlap = p
            .required
            .intersection(&p.optional)
            .chain(p.required.intersection(&p.outputs))
            .chain(p.optional.intersection(&p.outputs))
            .next();
        if let Some(port) = overlap {
            return Err(OverlappingPorts {
                action: name,
                port: port.clone(),
            });
        }
        self.entries.insert(name, entry);
        Ok(())
    }

    pub fn with_action(mut self, name: &str, ports: PortSchema) -> Self {
        self.insert(name, CatalogEntry { kind: LeafKind::Action, ports })
            .expect("overlapping ports");
        self
    }

    pub fn with_condition(mut self, name: &str, ports: PortSchema) -> Self {
        self.insert(name, CatalogEntry { kind: LeafKind::Condition, ports })
            .expect("overlapping ports");
        self
    }

    pub fn get(&self, name: &str) -> Option<&CatalogEntry> {
        self.entries.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &CatalogEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl TryFrom<BTreeMap<String, CatalogEntry>> for ActionCatalog {
    type Error = OverlappingPorts;

    fn try_from(map: BTreeMap<String, CatalogEntry>) -> Result<Self, Self::Error> {
        let mut catalog = ActionCatalog::new();
        for (name, entry) in map {
            catalog.insert(name, entry)?;
        }
        Ok(catalog)
    }
}

impl From<ActionCatalog> for BTreeMap<String, CatalogEntry> {
    fn from(catalog: ActionCatalog) -> Self {
        catalog.entries
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlapping_ports_rejected() {
        let mut catalog = ActionCatalog::new();
        let entry = CatalogEntry {
            kind: LeafKind::Action,
            ports: PortSchema {
                required: ["goal".to_string()].into(),
                optional: ["goal".to_string()].into(),
                ..Default::default()
            },
        };
        assert!(catalog.insert("MoveTo", entry).is_err());
    }

    #[test]
    fn parses_from_toml() {
        let catalog: ActionCatalog = toml::from_str(
            r#"
            [MoveTo]
            required = ["goal"]
            [IsDone]
            kind = "condition"
            "#,
        )
        .unwrap();
        assert!(catalog.get("MoveTo").unwrap().ports.accepts("goal"));
        assert_eq!(catalog.get("IsDone").unwrap().kind, LeafKind::Condition);
    }
}
