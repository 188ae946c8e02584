//! Rule-based extraction of an engineering knowledge graph from patent claims.
//!
//! The pipeline reads claim corpora ([`ingest`]), cleans each claim
//! ([`cleaning`]), tags it with Penn Treebank tags ([`tagging`]), and pulls
//! ⟨entity, relationship, entity⟩ facts out of the determiner and verb
//! structure of the claim ([`extraction`]). Per-patent graphs are merged by
//! exact entity string into a corpus graph ([`graph`]), which can be closed
//! under the transitive containment rule ([`inference`]) and evaluated for
//! term coverage and size ([`evaluation`]).

pub mod cleaning;
pub mod evaluation;
pub mod extraction;
pub mod fact;
pub mod graph;
pub mod inference;
pub mod ingest;
pub mod pipeline;
pub mod tagging;

pub use cleaning::{clean_text, filter_tags, CleaningConfig};
pub use extraction::{
    aggregate_patent, extract_claim_facts, extract_entities, extract_relations, segment_claim,
    EntityMention, PatentGraph, Segment,
};
pub use fact::{Fact, Provenance, RelationKind};
pub use graph::{MergedGraph, Subgraph};
pub use ingest::{parse_corpus, shard_records, ClaimRecord, CorpusFormat, Shard, ShardKey};
pub use pipeline::{Pipeline, PipelineConfig};
pub use tagging::{apply_overrides, tokenize, HierarchyLexicon, Tag, TaggedToken, Tagger};
