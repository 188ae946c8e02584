//! On-disk layout: `<year>/<index>.jsonl` files of per-patent JSON lines,
//! an optional `derived.json` for facts that belong to no single patent
//! (inferred facts, hand-built facts), and a `manifest.json` listing every
//! file with its SHA-256.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::num::NonZeroUsize;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::merged::{CanonicalFact, EntityId, MergedGraph};
use super::{patent_graph_from_json, patent_graph_to_json, GraphError};
use crate::extraction::PatentGraph;
use crate::fact::{Fact, Provenance};
use crate::ingest::{shard_by, ShardKey};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DERIVED_FILE: &str = "derived.json";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub shard_size: usize,
    pub shards: Vec<ShardEntry>,
    pub derived: Option<DerivedEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShardEntry {
    pub path: String,
    /// Application year, or `unknown`.
    pub group: String,
    pub index: usize,
    pub patents: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedEntry {
    pub path: String,
    pub entities: usize,
    pub facts: usize,
    pub sha256: String,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DerivedDoc {
    entities: Vec<String>,
    facts: Vec<CanonicalFact>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), GraphError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| GraphError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| GraphError::io(path, e))
}

/// Write patent graphs into year shards of at most `shard_size` patents,
/// keeping input order inside each year.
pub fn write_patent_shards(
    dir: &Path,
    graphs: Vec<(PatentGraph, Option<u16>)>,
    shard_size: NonZeroUsize,
) -> Result<Manifest, GraphError> {
    write_layout(dir, graphs, shard_size, DerivedDoc::default())
}

fn write_layout(
    dir: &Path,
    graphs: Vec<(PatentGraph, Option<u16>)>,
    shard_size: NonZeroUsize,
    derived: DerivedDoc,
) -> Result<Manifest, GraphError> {
    fs::create_dir_all(dir).map_err(|e| GraphError::io(dir, e))?;
    let mut manifest = Manifest {
        format_version: FORMAT_VERSION,
        shard_size: shard_size.get(),
        shards: Vec::new(),
        derived: None,
    };

    for shard in shard_by(graphs, shard_size, |(_, year)| ShardKey::from_year(*year)) {
        let rel = format!("{}/{}.jsonl", shard.key, shard.index);
        let mut body = String::new();
        for (graph, _) in &shard.records {
            body.push_str(&patent_graph_to_json(graph));
            body.push('\n');
        }
        write_file(&dir.join(&rel), body.as_bytes())?;
        manifest.shards.push(ShardEntry {
            path: rel,
            group: shard.key.to_string(),
            index: shard.index,
            patents: shard.records.len(),
            sha256: sha256_hex(body.as_bytes()),
        });
    }

    if !derived.entities.is_empty() || !derived.facts.is_empty() {
        let mut body = serde_json::to_string(&derived).expect("in-memory serialization cannot fail");
        body.push('\n');
        write_file(&dir.join(DERIVED_FILE), body.as_bytes())?;
        manifest.derived = Some(DerivedEntry {
            path: DERIVED_FILE.to_string(),
            entities: derived.entities.len(),
            facts: derived.facts.len(),
            sha256: sha256_hex(body.as_bytes()),
        });
    }

    let mut text = serde_json::to_string_pretty(&manifest).expect("in-memory serialization cannot fail");
    text.push('\n');
    write_file(&dir.join(MANIFEST_FILE), text.as_bytes())?;
    Ok(manifest)
}

/// Persist a merged graph so that [`load_shards`] restores it exactly.
///
/// Each registered patent is written back as its own per-patent graph. Facts
/// or provenance entries that cannot be attributed to a patent (inferred
/// facts, facts whose endpoints are not among the patent's entities) and
/// entities owned by no patent go to `derived.json`.
pub fn save_shards(
    graph: &MergedGraph,
    dir: &Path,
    shard_size: NonZeroUsize,
) -> Result<Manifest, GraphError> {
    let owned: HashMap<&str, HashSet<EntityId>> = graph
        .patents()
        .iter()
        .map(|(id, entry)| (id.as_str(), entry.entities.iter().copied().collect()))
        .collect();

    let mut per_patent: HashMap<&str, Vec<Fact>> = HashMap::new();
    let mut derived = DerivedDoc::default();
    for (i, fact) in graph.facts().iter().enumerate() {
        let mut leftover: Vec<Provenance> = Vec::new();
        let mut by_patent: Vec<(&str, Provenance)> = Vec::new();
        for p in &fact.provenance {
            let owner = match p {
                Provenance::Claim(id, _) if !fact.inferred => owned
                    .get_key_value(id.as_str())
                    .filter(|(_, ents)| ents.contains(&fact.head) && ents.contains(&fact.tail))
                    .map(|(k, _)| *k),
                _ => None,
            };
            match owner {
                Some(id) => by_patent.push((id, p.clone())),
                None => leftover.push(p.clone()),
            }
        }
        for (id, p) in by_patent {
            let facts = per_patent.entry(id).or_default();
            match facts.last_mut() {
                Some(last) if last.key() == fact_key(graph, i) => last.provenance.push(p),
                _ => facts.push(Fact {
                    provenance: vec![p],
                    ..graph.resolve(i)
                }),
            }
        }
        if !leftover.is_empty() || fact.provenance.is_empty() {
            derived.facts.push(CanonicalFact::from(Fact {
                provenance: leftover,
                ..graph.resolve(i)
            }));
        }
    }

    let all_owned: HashSet<EntityId> = owned.values().flatten().copied().collect();
    derived.entities = (0..graph.entity_count() as EntityId)
        .filter(|id| !all_owned.contains(id))
        .map(|id| graph.entity(id).to_string())
        .collect();

    let graphs = graph
        .patents()
        .iter()
        .map(|(id, entry)| {
            let pg = PatentGraph {
                patent_id: id.clone(),
                entities: entry
                    .entities
                    .iter()
                    .map(|&e| graph.entity(e).to_string())
                    .collect(),
                facts: per_patent.remove(id.as_str()).unwrap_or_default(),
            };
            (pg, entry.year)
        })
        .collect();
    write_layout(dir, graphs, shard_size, derived)
}

fn fact_key(graph: &MergedGraph, idx: usize) -> crate::fact::FactKey {
    let f = &graph.facts()[idx];
    (
        graph.entity(f.head).to_string(),
        f.relation.clone(),
        graph.entity(f.tail).to_string(),
        f.kind,
        f.inferred,
    )
}

fn read_checked(dir: &Path, rel: &str, expected: &str) -> Result<String, GraphError> {
    let path = dir.join(rel);
    let bytes = fs::read(&path).map_err(|e| GraphError::io(&path, e))?;
    let actual = sha256_hex(&bytes);
    if actual != expected {
        return Err(GraphError::Corruption {
            shard: rel.to_string(),
            expected: expected.to_string(),
            actual,
        });
    }
    String::from_utf8(bytes).map_err(|e| GraphError::Schema {
        path: rel.to_string(),
        message: e.to_string(),
    })
}

fn locate(err: GraphError, file: &str, line: usize) -> GraphError {
    match err {
        GraphError::Json { path, message } => GraphError::Json {
            path: format!("{file}:{line}: {path}"),
            message,
        },
        GraphError::Schema { path, message } => GraphError::Schema {
            path: format!("{file}:{line}: {path}"),
            message,
        },
        other => other,
    }
}

/// Load and merge every shard listed in `dir/manifest.json`, verifying each
/// file's hash first.
pub fn load_shards(dir: &Path) -> Result<MergedGraph, GraphError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|e| GraphError::io(&manifest_path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let manifest: Manifest = serde_path_to_error::deserialize(de).map_err(|e| GraphError::Json {
        path: format!("{MANIFEST_FILE}: {}", e.path()),
        message: e.inner().to_string(),
    })?;

    let mut graph = MergedGraph::new();
    for entry in &manifest.shards {
        let key: ShardKey = entry.group.parse().map_err(|message| GraphError::Schema {
            path: format!("{MANIFEST_FILE}: {}", entry.path),
            message,
        })?;
        let body = read_checked(dir, &entry.path, &entry.sha256)?;
        for (i, line) in body.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let pg = patent_graph_from_json(line).map_err(|e| locate(e, &entry.path, i + 1))?;
            graph.add_patent(&pg, key.year());
        }
    }

    if let Some(entry) = &manifest.derived {
        let body = read_checked(dir, &entry.path, &entry.sha256)?;
        let de = &mut serde_json::Deserializer::from_str(&body);
        let doc: DerivedDoc = serde_path_to_error::deserialize(de).map_err(|e| GraphError::Json {
            path: format!("{}: {}", entry.path, e.path()),
            message: e.inner().to_string(),
        })?;
        for e in &doc.entities {
            graph.intern(e);
        }
        for f in doc.facts {
            graph.insert_fact(f.into());
        }
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fact::RelationKind;

    fn size(n: usize) -> NonZeroUsize {
        NonZeroUsize::new(n).unwrap()
    }

    fn sample() -> MergedGraph {
        let pg = |id: &str, h: &str, t: &str| PatentGraph {
            patent_id: id.into(),
            entities: vec![h.into(), t.into(), "spare part".into()],
            facts: vec![Fact {
                head: h.into(),
                relation: "comprises".into(),
                tail: t.into(),
                kind: RelationKind::Hierarchical,
                inferred: false,
                provenance: vec![Provenance::claim(id, 0), Provenance::claim(id, 2)],
            }],
        };
        let mut g = MergedGraph::merge_dated([
            (pg("US1", "car", "engine"), Some(1980)),
            (pg("US2", "engine", "piston"), Some(1980)),
            (pg("US3", "car", "engine"), None),
        ]);
        g.insert_fact(Fact {
            head: "car".into(),
            relation: "comprises".into(),
            tail: "piston".into(),
            kind: RelationKind::Hierarchical,
            inferred: true,
            provenance: vec![Provenance::rule("transitive")],
        });
        g.insert_fact(Fact {
            head: "loose".into(),
            relation: "touches".into(),
            tail: "car".into(),
            kind: RelationKind::NonHierarchical,
            inferred: false,
            provenance: vec![Provenance::claim("US9", 1)],
        });
        g.intern("orphan");
        g
    }

    #[test]
    fn empty_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = save_shards(&MergedGraph::new(), dir.path(), size(10)).unwrap();
        assert!(manifest.shards.is_empty());
        let back = load_shards(dir.path()).unwrap();
        assert_eq!(back.entity_count(), 0);
        assert_eq!(back.fact_count(), 0);
    }

    #[test]
    fn lossless_round_trip() {
        let g = sample();
        let dir = tempfile::tempdir().unwrap();
        let manifest = save_shards(&g, dir.path(), size(1)).unwrap();
        let paths: Vec<&str> = manifest.shards.iter().map(|s| s.path.as_str()).collect();
        assert_eq!(paths, vec!["1980/0.jsonl", "1980/1.jsonl", "unknown/0.jsonl"]);
        assert!(manifest.derived.is_some());
        let back = load_shards(dir.path()).unwrap();
        assert_eq!(back.to_canonical_json(), g.to_canonical_json());
    }

    #[test]
    fn tampered_shard_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        save_shards(&sample(), dir.path(), size(10)).unwrap();
        let shard = dir.path().join("1980/0.jsonl");
        let mut bytes = fs::read(&shard).unwrap();
        bytes[5] ^= 0x01;
        fs::write(&shard, bytes).unwrap();
        match load_shards(dir.path()).unwrap_err() {
            GraphError::Corruption { shard, .. } => assert_eq!(shard, "1980/0.jsonl"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_manifest_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_shards(dir.path()), Err(GraphError::Io { .. })));
    }
}
