//! Transitive containment: comprises(x, y) and comprises(y, z) give
//! comprises(x, z).

use std::collections::{BTreeSet, HashSet, VecDeque};

use rayon::prelude::*;
use thiserror::Error;

use crate::fact::{Fact, Provenance, RelationKind};
use crate::graph::{EntityId, MergedGraph};

/// Provenance rule name carried by every inferred fact.
pub const TRANSITIVE_RULE: &str = "transitive";

/// Label given to inferred facts.
pub const DEFAULT_EMIT_LABEL: &str = "comprises";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InferenceError {
    #[error("relation scope is empty")]
    EmptyScope,
    #[error("inferred fact references unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("fact ⟨{head}, {relation}, {tail}⟩ is not flagged as inferred")]
    NotInferred {
        head: String,
        relation: String,
        tail: String,
    },
}

/// Which extracted facts count as containment edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RelationScope {
    /// Every fact of hierarchical kind.
    Hierarchical,
    /// Facts whose relation label is in the set, whatever their kind.
    Labels(BTreeSet<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSpec {
    pub scope: RelationScope,
    /// Longest path, in edges, that may be collapsed. `None` is unbounded.
    pub max_depth: Option<usize>,
    pub emit_label: String,
    pub emit_kind: RelationKind,
}

impl RuleSpec {
    pub fn hierarchical() -> Self {
        RuleSpec {
            scope: RelationScope::Hierarchical,
            max_depth: None,
            emit_label: DEFAULT_EMIT_LABEL.to_string(),
            emit_kind: RelationKind::Hierarchical,
        }
    }

    pub fn labels<I, S>(labels: I) -> Result<Self, InferenceError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = labels.into_iter().map(Into::into).collect();
        if set.is_empty() {
            return Err(InferenceError::EmptyScope);
        }
        Ok(RuleSpec {
            scope: RelationScope::Labels(set),
            ..Self::hierarchical()
        })
    }

    pub fn with_max_depth(mut self, depth: Option<usize>) -> Self {
        self.max_depth = depth;
        self
    }

    fn in_scope(&self, relation: &str, kind: RelationKind) -> bool {
        match &self.scope {
            RelationScope::Hierarchical => kind.is_hierarchical(),
            RelationScope::Labels(set) => set.contains(relation),
        }
    }
}

/// Facts derivable by the transitive rule that are not yet in `graph`.
///
/// Only extracted (non-inferred) facts in scope are followed, so running the
/// closure again after [`apply_inferred`] yields nothing. Self pairs arising
/// from cycles are dropped. Output is sorted by head then tail surface.
pub fn transitive_closure(graph: &MergedGraph, spec: &RuleSpec) -> Vec<Fact> {
    let n = graph.entity_count();
    let mut succ: Vec<Vec<EntityId>> = vec![Vec::new(); n];
    let mut present: HashSet<(EntityId, EntityId)> = HashSet::new();
    for f in graph.facts() {
        let scoped = !f.inferred && spec.in_scope(&f.relation, f.kind);
        if scoped {
            succ[f.head as usize].push(f.tail);
            present.insert((f.head, f.tail));
        } else if f.relation == spec.emit_label && f.kind == spec.emit_kind {
            present.insert((f.head, f.tail));
        }
    }
    for s in &mut succ {
        s.sort_unstable();
        s.dedup();
    }
    let limit = spec.max_depth.unwrap_or(usize::MAX);
    if limit < 2 {
        return Vec::new();
    }

    let sources: Vec<EntityId> = (0..n as EntityId)
        .filter(|&s| !succ[s as usize].is_empty())
        .collect();
    let mut pairs: Vec<(EntityId, EntityId)> = sources
        .par_iter()
        .flat_map_iter(|&source| {
            reachable(&succ, source, limit)
                .into_iter()
                .filter(move |&t| t != source)
                .map(move |t| (source, t))
        })
        .filter(|pair| !present.contains(pair))
        .collect();
    pairs.sort_unstable_by(|a, b| {
        (graph.entity(a.0), graph.entity(a.1)).cmp(&(graph.entity(b.0), graph.entity(b.1)))
    });

    pairs
        .into_iter()
        .map(|(h, t)| Fact {
            head: graph.entity(h).to_string(),
            relation: spec.emit_label.clone(),
            tail: graph.entity(t).to_string(),
            kind: spec.emit_kind,
            inferred: true,
            provenance: vec![Provenance::rule(TRANSITIVE_RULE)],
        })
        .collect()
}

/// Nodes reachable from `source` by a path of 1 to `limit` edges.
fn reachable(succ: &[Vec<EntityId>], source: EntityId, limit: usize) -> Vec<EntityId> {
    let mut seen = vec![false; succ.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::from([(source, 0usize)]);
    while let Some((node, dist)) = queue.pop_front() {
        if dist == limit {
            continue;
        }
        for &next in &succ[node as usize] {
            if !seen[next as usize] {
                seen[next as usize] = true;
                out.push(next);
                queue.push_back((next, dist + 1));
            }
        }
    }
    out
}

/// A copy of `graph` with `inferred` added. Every fact must be flagged
/// inferred and name entities already in the graph.
pub fn apply_inferred(graph: &MergedGraph, inferred: Vec<Fact>) -> Result<MergedGraph, InferenceError> {
    for f in &inferred {
        if !f.inferred {
            return Err(InferenceError::NotInferred {
                head: f.head.clone(),
                relation: f.relation.clone(),
                tail: f.tail.clone(),
            });
        }
        for name in [&f.head, &f.tail] {
            if graph.entity_id(name).is_none() {
                return Err(InferenceError::UnknownEntity(name.clone()));
            }
        }
    }
    let mut out = graph.clone();
    for f in inferred {
        out.insert_fact(f);
    }
    Ok(out)
}
