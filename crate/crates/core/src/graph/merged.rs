use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::GraphError;
use crate::extraction::PatentGraph;
use crate::fact::{Fact, Provenance, RelationKind};

pub type EntityId = u32;

type MergedKey = (EntityId, String, EntityId, RelationKind, bool);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergedFact {
    pub head: EntityId,
    pub relation: String,
    pub tail: EntityId,
    pub kind: RelationKind,
    pub inferred: bool,
    /// Sorted, without duplicates.
    pub provenance: Vec<Provenance>,
}

/// A patent that contributed to the graph.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PatentEntry {
    pub year: Option<u16>,
    /// The patent's own entities, in first-occurrence order.
    pub entities: Vec<EntityId>,
}

/// Corpus-level graph. Entities are interned by exact surface string into
/// dense ids; facts are unique on (head, relation, tail, kind, inferred).
#[derive(Debug, Clone, Default)]
pub struct MergedGraph {
    entities: Vec<String>,
    entity_ids: HashMap<String, EntityId>,
    facts: Vec<MergedFact>,
    fact_ids: HashMap<MergedKey, usize>,
    outgoing: Vec<Vec<usize>>,
    incoming: Vec<Vec<usize>>,
    patents: BTreeMap<String, PatentEntry>,
}

impl MergedGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Merge patent graphs that carry no year.
    pub fn merge<I: IntoIterator<Item = PatentGraph>>(graphs: I) -> Self {
        Self::merge_dated(graphs.into_iter().map(|g| (g, None)))
    }

    pub fn merge_dated<I: IntoIterator<Item = (PatentGraph, Option<u16>)>>(graphs: I) -> Self {
        let mut merged = MergedGraph::new();
        for (g, year) in graphs {
            merged.add_patent(&g, year);
        }
        merged
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn fact_count(&self) -> usize {
        self.facts.len()
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn entity(&self, id: EntityId) -> &str {
        &self.entities[id as usize]
    }

    pub fn entity_id(&self, surface: &str) -> Option<EntityId> {
        self.entity_ids.get(surface).copied()
    }

    pub fn facts(&self) -> &[MergedFact] {
        &self.facts
    }

    /// Fact indices leaving `id`, ascending.
    pub fn outgoing(&self, id: EntityId) -> &[usize] {
        &self.outgoing[id as usize]
    }

    /// Fact indices entering `id`, ascending.
    pub fn incoming(&self, id: EntityId) -> &[usize] {
        &self.incoming[id as usize]
    }

    pub fn patents(&self) -> &BTreeMap<String, PatentEntry> {
        &self.patents
    }

    pub fn intern(&mut self, surface: &str) -> EntityId {
        if let Some(&id) = self.entity_ids.get(surface) {
            return id;
        }
        let id = EntityId::try_from(self.entities.len()).expect("entity id space exhausted");
        self.entities.push(surface.to_string());
        self.entity_ids.insert(surface.to_string(), id);
        self.outgoing.push(Vec::new());
        self.incoming.push(Vec::new());
        id
    }

    /// Insert a fact, interning its endpoints. An existing fact with the same
    /// identity absorbs the provenance instead. Returns the fact index.
    pub fn insert_fact(&mut self, fact: Fact) -> usize {
        let head = self.intern(&fact.head);
        let tail = self.intern(&fact.tail);
        let key = (head, fact.relation, tail, fact.kind, fact.inferred);
        if let Some(&idx) = self.fact_ids.get(&key) {
            let existing = &mut self.facts[idx].provenance;
            existing.extend(fact.provenance);
            existing.sort();
            existing.dedup();
            return idx;
        }
        let mut provenance = fact.provenance;
        provenance.sort();
        provenance.dedup();
        let idx = self.facts.len();
        self.facts.push(MergedFact {
            head,
            relation: key.1.clone(),
            tail,
            kind: key.3,
            inferred: key.4,
            provenance,
        });
        self.fact_ids.insert(key, idx);
        self.outgoing[head as usize].push(idx);
        self.incoming[tail as usize].push(idx);
        idx
    }

    /// Register a patent and union in its entities and facts.
    pub fn add_patent(&mut self, graph: &PatentGraph, year: Option<u16>) {
        let ids: Vec<EntityId> = graph.entities.iter().map(|e| self.intern(e)).collect();
        self.register_patent(&graph.patent_id, year, ids);
        for fact in &graph.facts {
            self.insert_fact(fact.clone());
        }
    }

    fn register_patent(&mut self, patent_id: &str, year: Option<u16>, ids: Vec<EntityId>) {
        let entry = self.patents.entry(patent_id.to_string()).or_default();
        entry.year = match (entry.year, year) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        for id in ids {
            if !entry.entities.contains(&id) {
                entry.entities.push(id);
            }
        }
    }

    /// Union `other` into `self`. Used to reduce partial merges.
    pub fn absorb(&mut self, other: &MergedGraph) {
        let remap: Vec<EntityId> = other.entities.iter().map(|e| self.intern(e)).collect();
        for (id, entry) in &other.patents {
            let ids = entry.entities.iter().map(|&e| remap[e as usize]).collect();
            self.register_patent(id, entry.year, ids);
        }
        for i in 0..other.facts.len() {
            self.insert_fact(other.resolve(i));
        }
    }

    /// Fact `idx` with entity names resolved.
    pub fn resolve(&self, idx: usize) -> Fact {
        let f = &self.facts[idx];
        Fact {
            head: self.entity(f.head).to_string(),
            relation: f.relation.clone(),
            tail: self.entity(f.tail).to_string(),
            kind: f.kind,
            inferred: f.inferred,
            provenance: f.provenance.clone(),
        }
    }

    /// Check the adjacency indexes against a rebuild from the fact list.
    pub fn adjacency_consistent(&self) -> bool {
        let n = self.entities.len();
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for (i, f) in self.facts.iter().enumerate() {
            out[f.head as usize].push(i);
            inc[f.tail as usize].push(i);
        }
        out == self.outgoing
            && inc == self.incoming
            && self.entity_ids.len() == n
            && self
                .entities
                .iter()
                .enumerate()
                .all(|(i, e)| self.entity_ids.get(e) == Some(&(i as EntityId)))
    }

    /// Order-independent view: everything sorted.
    pub fn canonical(&self) -> CanonicalGraph {
        let mut entities = self.entities.clone();
        entities.sort();
        let patents = self
            .patents
            .iter()
            .map(|(id, entry)| {
                let mut names: Vec<String> = entry
                    .entities
                    .iter()
                    .map(|&e| self.entity(e).to_string())
                    .collect();
                names.sort();
                CanonicalPatent {
                    patent_id: id.clone(),
                    year: entry.year,
                    entities: names,
                }
            })
            .collect();
        let mut facts: Vec<CanonicalFact> = (0..self.facts.len())
            .map(|i| CanonicalFact::from(self.resolve(i)))
            .collect();
        facts.sort();
        CanonicalGraph {
            patents,
            entities,
            facts,
        }
    }

    /// Compact JSON of [`MergedGraph::canonical`]. Two graphs with the same
    /// content produce the same bytes.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(&self.canonical()).expect("in-memory serialization cannot fail")
    }

    pub fn from_canonical(c: CanonicalGraph) -> Self {
        let mut g = MergedGraph::new();
        for e in &c.entities {
            g.intern(e);
        }
        for p in c.patents {
            let ids = p.entities.iter().map(|e| g.intern(e)).collect();
            g.register_patent(&p.patent_id, p.year, ids);
        }
        for f in c.facts {
            g.insert_fact(f.into());
        }
        g
    }

    pub fn from_canonical_json(text: &str) -> Result<Self, GraphError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let c: CanonicalGraph = serde_path_to_error::deserialize(de).map_err(|e| GraphError::Json {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        Ok(Self::from_canonical(c))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalGraph {
    pub patents: Vec<CanonicalPatent>,
    pub entities: Vec<String>,
    pub facts: Vec<CanonicalFact>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalPatent {
    pub patent_id: String,
    pub year: Option<u16>,
    pub entities: Vec<String>,
}

/// A fact in the canonical and fact-record formats; field order is the sort
/// order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalFact {
    pub head: String,
    pub relation: String,
    pub tail: String,
    pub kind: RelationKind,
    pub inferred: bool,
    pub provenance: Vec<Provenance>,
}

impl From<Fact> for CanonicalFact {
    fn from(f: Fact) -> Self {
        CanonicalFact {
            head: f.head,
            relation: f.relation,
            tail: f.tail,
            kind: f.kind,
            inferred: f.inferred,
            provenance: f.provenance,
        }
    }
}

impl From<CanonicalFact> for Fact {
    fn from(f: CanonicalFact) -> Self {
        Fact {
            head: f.head,
            relation: f.relation,
            tail: f.tail,
            kind: f.kind,
            inferred: f.inferred,
            provenance: f.provenance,
        }
    }
}
