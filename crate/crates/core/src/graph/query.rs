use std::collections::HashSet;
use std::str::FromStr;

use serde::Serialize;

use super::merged::{EntityId, MergedGraph};
use super::GraphError;
use crate::fact::RelationKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Out,
    In,
    Both,
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "out" => Ok(Direction::Out),
            "in" => Ok(Direction::In),
            "both" => Ok(Direction::Both),
            _ => Err(format!("unknown direction `{s}` (expected out, in or both)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum KindFilter {
    #[default]
    #[serde(rename = "all")]
    All,
    #[serde(rename = "hierarchical")]
    Hierarchical,
    #[serde(rename = "non-hierarchical")]
    NonHierarchical,
}

impl KindFilter {
    fn accepts(self, kind: RelationKind) -> bool {
        match self {
            KindFilter::All => true,
            KindFilter::Hierarchical => kind == RelationKind::Hierarchical,
            KindFilter::NonHierarchical => kind == RelationKind::NonHierarchical,
        }
    }
}

impl FromStr for KindFilter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(KindFilter::All),
            "hierarchical" => Ok(KindFilter::Hierarchical),
            "non-hierarchical" | "nonhierarchical" => Ok(KindFilter::NonHierarchical),
            _ => Err(format!(
                "unknown kind `{s}` (expected all, hierarchical or non-hierarchical)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborhoodQuery {
    pub entity: String,
    pub depth: usize,
    pub direction: Direction,
    pub kind: KindFilter,
    pub limit: Option<usize>,
    pub include_inferred: bool,
}

impl NeighborhoodQuery {
    /// Depth 1, outgoing, all kinds, no limit, inferred facts included.
    pub fn new(entity: impl Into<String>) -> Self {
        NeighborhoodQuery {
            entity: entity.into(),
            depth: 1,
            direction: Direction::Out,
            kind: KindFilter::All,
            limit: None,
            include_inferred: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Center,
    Entity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EdgeRole {
    #[serde(rename = "hierarchical")]
    Hierarchical,
    #[serde(rename = "non-hierarchical")]
    NonHierarchical,
    #[serde(rename = "inferred")]
    Inferred,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubgraphNode {
    pub name: String,
    pub role: NodeRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubgraphFact {
    pub head: String,
    pub relation: String,
    pub tail: String,
    pub kind: RelationKind,
    pub inferred: bool,
    pub role: EdgeRole,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Subgraph {
    pub center: String,
    pub found: bool,
    pub depth_reached: usize,
    pub truncated: bool,
    pub nodes: Vec<SubgraphNode>,
    pub facts: Vec<SubgraphFact>,
}

impl Subgraph {
    fn empty(center: &str) -> Self {
        Subgraph {
            center: center.to_string(),
            found: false,
            depth_reached: 0,
            truncated: false,
            nodes: Vec::new(),
            facts: Vec::new(),
        }
    }
}

/// Breadth-first neighbourhood of the entity whose surface exactly equals
/// `query.entity`.
///
/// Each level visits its nodes by ascending entity id and their facts in
/// fact order, so the result (and any truncation by `limit`) is
/// deterministic. An unknown entity yields an empty subgraph with
/// `found == false`.
pub fn neighborhood(graph: &MergedGraph, query: &NeighborhoodQuery) -> Result<Subgraph, GraphError> {
    if query.depth == 0 {
        return Err(GraphError::Query("depth must be at least 1".into()));
    }
    let Some(center) = graph.entity_id(&query.entity) else {
        return Ok(Subgraph::empty(&query.entity));
    };

    let mut sub = Subgraph::empty(&query.entity);
    sub.found = true;
    sub.nodes.push(SubgraphNode {
        name: query.entity.clone(),
        role: NodeRole::Center,
    });

    let mut visited: HashSet<EntityId> = HashSet::from([center]);
    let mut taken: HashSet<usize> = HashSet::new();
    let mut frontier = vec![center];

    'levels: for level in 1..=query.depth {
        frontier.sort_unstable();
        let mut next = Vec::new();
        for &node in &frontier {
            let mut candidates: Vec<usize> = match query.direction {
                Direction::Out => graph.outgoing(node).to_vec(),
                Direction::In => graph.incoming(node).to_vec(),
                Direction::Both => {
                    let mut all = graph.outgoing(node).to_vec();
                    all.extend_from_slice(graph.incoming(node));
                    all
                }
            };
            candidates.sort_unstable();
            candidates.dedup();
            for idx in candidates {
                let fact = &graph.facts()[idx];
                if taken.contains(&idx)
                    || !query.kind.accepts(fact.kind)
                    || (fact.inferred && !query.include_inferred)
                {
                    continue;
                }
                if query.limit.is_some_and(|l| sub.facts.len() >= l) {
                    sub.truncated = true;
                    break 'levels;
                }
                taken.insert(idx);
                sub.depth_reached = level;
                sub.facts.push(SubgraphFact {
                    head: graph.entity(fact.head).to_string(),
                    relation: fact.relation.clone(),
                    tail: graph.entity(fact.tail).to_string(),
                    kind: fact.kind,
                    inferred: fact.inferred,
                    role: if fact.inferred {
                        EdgeRole::Inferred
                    } else if fact.kind.is_hierarchical() {
                        EdgeRole::Hierarchical
                    } else {
                        EdgeRole::NonHierarchical
                    },
                });
                let other = if fact.head == node { fact.tail } else { fact.head };
                if visited.insert(other) {
                    next.push(other);
                    sub.nodes.push(SubgraphNode {
                        name: graph.entity(other).to_string(),
                        role: NodeRole::Entity,
                    });
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(sub)
}
