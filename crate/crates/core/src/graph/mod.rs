//! Per-patent JSON, the corpus-level merged graph, and queries over it.

mod dot;
mod merged;
mod query;
mod shards;

use std::collections::{BTreeMap, HashSet};
use std::io;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;
use thiserror::Error;

use crate::extraction::PatentGraph;
use crate::fact::{Fact, Provenance, RelationKind};

pub use dot::export_dot;
pub use merged::{CanonicalFact, CanonicalGraph, CanonicalPatent, EntityId, MergedFact, MergedGraph, PatentEntry};
pub use query::{
    neighborhood, Direction, EdgeRole, KindFilter, NeighborhoodQuery, NodeRole, Subgraph,
    SubgraphFact, SubgraphNode,
};
pub use shards::{
    load_shards, save_shards, write_patent_shards, DerivedEntry, Manifest, ShardEntry,
    DERIVED_FILE, MANIFEST_FILE,
};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid JSON at {path}: {message}")]
    Json { path: String, message: String },
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("shard `{shard}` is corrupt: expected sha256 {expected}, found {actual}")]
    Corruption {
        shard: String,
        expected: String,
        actual: String,
    },
    #[error("invalid query: {0}")]
    Query(String),
}

impl GraphError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        GraphError::Io {
            path: path.into(),
            source,
        }
    }

    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        GraphError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// Writes `", "` between items and `": "` after keys, the separators of
/// Python's `json.dumps`.
struct SpacedFormatter;

impl Formatter for SpacedFormatter {
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        if first {
            Ok(())
        } else {
            writer.write_all(b", ")
        }
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        if first {
            Ok(())
        } else {
            writer.write_all(b", ")
        }
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        writer.write_all(b": ")
    }
}

type Relationship = (String, String, String, RelationKind, Vec<u32>);

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatentBody {
    entities: Vec<String>,
    relationships: Vec<Relationship>,
}

/// Serialize a patent graph as
/// `{"<id>": {"entities": [..], "relationships": [[h, r, t, kind, [claims]], ..]}}`,
/// keeping extraction order.
pub fn patent_graph_to_json(graph: &PatentGraph) -> String {
    let relationships = graph
        .facts
        .iter()
        .map(|f| {
            let claims = f
                .provenance
                .iter()
                .filter_map(|p| match p {
                    Provenance::Claim(id, idx) if *id == graph.patent_id => Some(*idx),
                    _ => None,
                })
                .collect();
            (f.head.clone(), f.relation.clone(), f.tail.clone(), f.kind, claims)
        })
        .collect();
    let mut doc = BTreeMap::new();
    doc.insert(
        graph.patent_id.as_str(),
        PatentBody {
            entities: graph.entities.clone(),
            relationships,
        },
    );
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SpacedFormatter);
    doc.serialize(&mut ser)
        .expect("in-memory serialization cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Parse the output of [`patent_graph_to_json`].
pub fn patent_graph_from_json(text: &str) -> Result<PatentGraph, GraphError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: BTreeMap<String, PatentBody> =
        serde_path_to_error::deserialize(de).map_err(|e| GraphError::Json {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    if doc.len() != 1 {
        return Err(GraphError::schema(
            ".",
            format!("expected exactly one patent id key, found {}", doc.len()),
        ));
    }
    let (patent_id, body) = doc.into_iter().next().expect("one entry");
    if patent_id.trim().is_empty() {
        return Err(GraphError::schema(".", "empty patent id"));
    }

    let mut seen = HashSet::new();
    for (i, e) in body.entities.iter().enumerate() {
        if !seen.insert(e.as_str()) {
            return Err(GraphError::schema(
                format!("{patent_id}.entities[{i}]"),
                format!("duplicate entity `{e}`"),
            ));
        }
    }

    let mut facts = Vec::with_capacity(body.relationships.len());
    for (i, (head, relation, tail, kind, claims)) in body.relationships.into_iter().enumerate() {
        for (slot, name) in [(0, &head), (2, &tail)] {
            if !seen.contains(name.as_str()) {
                return Err(GraphError::schema(
                    format!("{patent_id}.relationships[{i}][{slot}]"),
                    format!("`{name}` is not a listed entity"),
                ));
            }
        }
        if relation.is_empty() {
            return Err(GraphError::schema(
                format!("{patent_id}.relationships[{i}][1]"),
                "empty relation",
            ));
        }
        facts.push(Fact {
            head,
            relation,
            tail,
            kind,
            inferred: false,
            provenance: claims
                .into_iter()
                .map(|c| Provenance::claim(patent_id.clone(), c))
                .collect(),
        });
    }

    Ok(PatentGraph {
        patent_id,
        entities: body.entities,
        facts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_graph_layout() {
        let g = PatentGraph::new("US0000001");
        let json = patent_graph_to_json(&g);
        assert_eq!(json, r#"{"US0000001": {"entities": [], "relationships": []}}"#);
        assert_eq!(patent_graph_from_json(&json).unwrap(), g);
    }

    #[test]
    fn fact_layout() {
        let g = PatentGraph {
            patent_id: "US1".into(),
            entities: vec!["second recipient luminophoric mediums".into(), "second xsrx phosphor".into()],
            facts: vec![Fact {
                head: "second recipient luminophoric mediums".into(),
                relation: "comprise".into(),
                tail: "second xsrx phosphor".into(),
                kind: RelationKind::Hierarchical,
                inferred: false,
                provenance: vec![Provenance::claim("US1", 0)],
            }],
        };
        let json = patent_graph_to_json(&g);
        assert!(json.contains(
            r#"["second recipient luminophoric mediums", "comprise", "second xsrx phosphor", "hierarchical", [0]]"#
        ));
        assert_eq!(patent_graph_from_json(&json).unwrap(), g);
    }

    #[test]
    fn schema_errors_carry_paths() {
        let err = patent_graph_from_json(r#"{"US1": {"entities": [], "relationships": [["a", "b", "c", "sideways", [0]]]}}"#)
            .unwrap_err();
        match err {
            GraphError::Json { path, .. } => assert_eq!(path, "US1.relationships[0][3]"),
            other => panic!("{other:?}"),
        }
        let err = patent_graph_from_json(r#"{"US1": {"entities": ["a"], "relationships": [["a", "r", "z", "hierarchical", []]]}}"#)
            .unwrap_err();
        assert!(matches!(err, GraphError::Schema { ref path, .. } if path == "US1.relationships[0][2]"));
        assert!(patent_graph_from_json(r#"{"A": {"entities": [], "relationships": []}, "B": {"entities": [], "relationships": []}}"#).is_err());
        assert!(patent_graph_from_json("[]").is_err());
    }

    fn graph_strategy() -> impl Strategy<Value = PatentGraph> {
        (
            "US[0-9]{1,7}",
            proptest::collection::btree_set("[a-z ]{1,12}", 1..8),
            proptest::collection::vec((0usize..8, "[a-z]{1,6}", 0usize..8, any::<bool>(), proptest::collection::btree_set(0u32..5, 0..3)), 0..10),
        )
            .prop_map(|(id, ents, raw_facts)| {
                let entities: Vec<String> = ents.into_iter().collect();
                let facts = raw_facts
                    .into_iter()
                    .map(|(h, r, t, hier, claims)| Fact {
                        head: entities[h % entities.len()].clone(),
                        relation: r,
                        tail: entities[t % entities.len()].clone(),
                        kind: if hier { RelationKind::Hierarchical } else { RelationKind::NonHierarchical },
                        inferred: false,
                        provenance: claims.into_iter().map(|c| Provenance::claim(id.clone(), c)).collect(),
                    })
                    .collect();
                PatentGraph { patent_id: id, entities, facts }
            })
    }

    proptest! {
        #[test]
        fn json_round_trip(g in graph_strategy()) {
            prop_assert_eq!(patent_graph_from_json(&patent_graph_to_json(&g)).unwrap(), g);
        }
    }
}
