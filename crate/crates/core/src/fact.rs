//! Facts shared by extraction, storage and inference.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Whether a relation denotes system–subsystem containment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationKind {
    #[serde(rename = "hierarchical")]
    Hierarchical,
    #[serde(rename = "nonhierarchical")]
    NonHierarchical,
}

impl RelationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::Hierarchical => "hierarchical",
            RelationKind::NonHierarchical => "nonhierarchical",
        }
    }

    pub fn is_hierarchical(self) -> bool {
        self == RelationKind::Hierarchical
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where a fact came from: a claim of a patent, or an inference rule.
///
/// Claims serialize as `["US4014111", 0]`, rules as `{"rule": "transitive"}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Provenance {
    Claim(String, u32),
    Rule { rule: String },
}

impl Provenance {
    pub fn claim(patent_id: impl Into<String>, claim_index: u32) -> Self {
        Provenance::Claim(patent_id.into(), claim_index)
    }

    pub fn rule(name: impl Into<String>) -> Self {
        Provenance::Rule { rule: name.into() }
    }

    pub fn patent_id(&self) -> Option<&str> {
        match self {
            Provenance::Claim(id, _) => Some(id),
            Provenance::Rule { .. } => None,
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Claim(id, idx) => write!(f, "{id}#{idx}"),
            Provenance::Rule { rule } => write!(f, "rule:{rule}"),
        }
    }
}

/// A ⟨head, relation, tail⟩ triple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fact {
    pub head: String,
    pub relation: String,
    pub tail: String,
    pub kind: RelationKind,
    #[serde(default)]
    pub inferred: bool,
    #[serde(default)]
    pub provenance: Vec<Provenance>,
}

/// Identity of a fact for de-duplication. Provenance is not part of it.
pub type FactKey = (String, String, String, RelationKind, bool);

impl Fact {
    pub fn key(&self) -> FactKey {
        (
            self.head.clone(),
            self.relation.clone(),
            self.tail.clone(),
            self.kind,
            self.inferred,
        )
    }

    /// Sort and de-duplicate the provenance list in place.
    pub fn normalize_provenance(&mut self) {
        self.provenance.sort();
        self.provenance.dedup();
    }
}
