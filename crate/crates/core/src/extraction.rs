//! Fact extraction from tagged claims.
//!
//! A claim is split into segments at `which`/`that`, with the entity right
//! before the split copied into the next segment. Entities are runs of
//! nouns and adjectives opened by a determiner or a cardinal; relations are
//! the verbs found in the gap between two entities.

use std::collections::{HashMap, HashSet};
use std::ops::Range;

use crate::cleaning::filter_tags;
use crate::fact::{Fact, FactKey, Provenance, RelationKind};
use crate::ingest::ClaimRecord;
use crate::pipeline::Pipeline;
use crate::tagging::{apply_overrides, HierarchyLexicon, Tag, TaggedToken};

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// A WDT-free run of tagged tokens.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Segment {
    pub tokens: Vec<TaggedToken>,
    /// Leading tokens copied from the previous segment. They form one closed
    /// entity that never absorbs the words after it.
    pub carried: usize,
}

impl Segment {
    pub fn new(tokens: Vec<TaggedToken>) -> Self {
        Segment { tokens, carried: 0 }
    }

    pub fn tokens(&self) -> &[TaggedToken] {
        &self.tokens
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityMention {
    pub surface: String,
    /// `DT` or `CD`.
    pub marker: Tag,
    /// Token range within the segment, marker included.
    pub span: Range<usize>,
    pub raw_tokens: Vec<TaggedToken>,
}

/// Entities and facts of one patent.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PatentGraph {
    pub patent_id: String,
    pub entities: Vec<String>,
    pub facts: Vec<Fact>,
}

/// What one claim contributes to its patent graph.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClaimFacts {
    pub entities: Vec<String>,
    pub facts: Vec<Fact>,
    /// Distinct mentions, counted by the source position of their marker so
    /// that boundary copies made by segmentation count once.
    pub mention_count: usize,
    /// DT and CD tokens in the filtered claim.
    pub marker_count: usize,
}

/// Marker-opened entity spans over `tokens`: each DT/CD followed by a
/// non-empty run of nouns and adjectives. A run starting before `barrier`
/// stops there.
fn entity_spans(tokens: &[TaggedToken], barrier: usize) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i].tag.is_marker() {
            let stop = if i < barrier { barrier } else { tokens.len() };
            let mut end = i + 1;
            while end < stop && tokens[end].tag.is_entity_word() {
                end += 1;
            }
            if end > i + 1 {
                spans.push(i..end);
            }
            i = end;
        } else {
            i += 1;
        }
    }
    spans
}

/// Split a claim at WDT tokens.
///
/// At each WDT the current segment is closed and the next one opens with a
/// copy of the last entity of the closed segment. A WDT with no entity
/// before it is dropped without splitting.
pub fn segment_claim(tagged: &[TaggedToken]) -> Vec<Segment> {
    let mut segments = Vec::new();
    let mut current = Segment::default();
    for token in tagged {
        if token.tag != Tag::WDT {
            current.tokens.push(token.clone());
            continue;
        }
        if let Some(last) = entity_spans(&current.tokens, current.carried).pop() {
            let next = Segment {
                tokens: current.tokens[last.clone()].to_vec(),
                carried: last.len(),
            };
            segments.push(std::mem::replace(&mut current, next));
        }
    }
    segments.push(current);
    segments
}

/// Entities of a segment, left to right.
pub fn extract_entities(segment: &Segment) -> Vec<EntityMention> {
    let tokens = segment.tokens();
    entity_spans(tokens, segment.carried)
        .into_iter()
        .filter_map(|span| {
            let marker = &tokens[span.start];
            let words = &tokens[span.start + 1..span.end];
            let mut parts: Vec<&str> = Vec::with_capacity(words.len() + 1);
            if marker.tag == Tag::CD {
                parts.push(&marker.surface);
            }
            parts.extend(
                words
                    .iter()
                    .map(|t| t.surface.as_str())
                    .filter(|w| !ARTICLES.contains(w)),
            );
            if parts.is_empty() {
                return None;
            }
            Some(EntityMention {
                surface: parts.join(" "),
                marker: marker.tag,
                raw_tokens: tokens[span.clone()].to_vec(),
                span,
            })
        })
        .collect()
}

/// Verbs between two mentions, or `None` for a verb-free gap.
fn gap_relation(
    tokens: &[TaggedToken],
    left: &EntityMention,
    right: &EntityMention,
    lexicon: &HierarchyLexicon,
) -> Option<(String, RelationKind)> {
    let verbs: Vec<&str> = tokens[left.span.end..right.span.start]
        .iter()
        .filter(|t| t.tag.is_verb())
        .map(|t| t.surface.as_str())
        .collect();
    if verbs.is_empty() {
        return None;
    }
    let kind = if verbs.iter().any(|v| lexicon.contains(v)) {
        RelationKind::Hierarchical
    } else {
        RelationKind::NonHierarchical
    };
    Some((verbs.join(" "), kind))
}

/// Facts between consecutive mentions of one segment.
///
/// A verb-bearing gap links the mention before it to the mention after it.
/// Hierarchical relations also fan out to every following mention reached
/// through verb-free gaps ("A comprises B, C and D").
pub fn extract_relations(
    segment: &Segment,
    mentions: &[EntityMention],
    lexicon: &HierarchyLexicon,
) -> Vec<Fact> {
    let tokens = segment.tokens();
    let mut facts = Vec::new();
    for k in 0..mentions.len().saturating_sub(1) {
        let Some((relation, kind)) = gap_relation(tokens, &mentions[k], &mentions[k + 1], lexicon)
        else {
            continue;
        };
        let mut push = |target: &EntityMention| {
            facts.push(Fact {
                head: mentions[k].surface.clone(),
                relation: relation.clone(),
                tail: target.surface.clone(),
                kind,
                inferred: false,
                provenance: Vec::new(),
            });
        };
        push(&mentions[k + 1]);
        if kind.is_hierarchical() {
            let mut j = k + 1;
            while j + 1 < mentions.len()
                && gap_relation(tokens, &mentions[j], &mentions[j + 1], lexicon).is_none()
            {
                push(&mentions[j + 1]);
                j += 1;
            }
        }
    }
    facts
}

/// Run the rules over tokens that are already tagged. Overrides and tag
/// filtering are applied here.
pub fn extract_tagged_facts(
    tagged: Vec<TaggedToken>,
    patent_id: &str,
    claim_index: u32,
    lexicon: &HierarchyLexicon,
) -> ClaimFacts {
    let tokens = filter_tags(apply_overrides(tagged, lexicon));
    let mut out = ClaimFacts {
        marker_count: tokens.iter().filter(|t| t.tag.is_marker()).count(),
        ..ClaimFacts::default()
    };
    let mut seen_entities: HashSet<String> = HashSet::new();
    let mut seen_facts: HashSet<FactKey> = HashSet::new();
    let mut anchors: HashSet<usize> = HashSet::new();
    for segment in segment_claim(&tokens) {
        let mentions = extract_entities(&segment);
        anchors.extend(mentions.iter().map(|m| m.raw_tokens[0].position));
        for fact in extract_relations(&segment, &mentions, lexicon) {
            if seen_facts.insert(fact.key()) {
                out.facts.push(Fact {
                    provenance: vec![Provenance::claim(patent_id, claim_index)],
                    ..fact
                });
            }
        }
        for m in mentions {
            if seen_entities.insert(m.surface.clone()) {
                out.entities.push(m.surface);
            }
        }
    }
    out.mention_count = anchors.len();
    out
}

/// Clean, tag and extract one raw claim.
pub fn extract_claim_facts(
    raw: &str,
    patent_id: &str,
    claim_index: u32,
    pipeline: &Pipeline,
) -> ClaimFacts {
    let tagged = pipeline.tag_claim(raw);
    extract_tagged_facts(tagged, patent_id, claim_index, pipeline.lexicon())
}

impl PatentGraph {
    pub fn new(patent_id: impl Into<String>) -> Self {
        PatentGraph {
            patent_id: patent_id.into(),
            ..Default::default()
        }
    }

    /// Union per-claim results: entities in first-occurrence order, facts
    /// de-duplicated with their claim provenance merged.
    pub fn from_claims(
        patent_id: impl Into<String>,
        claims: impl IntoIterator<Item = ClaimFacts>,
    ) -> Self {
        let mut graph = PatentGraph::new(patent_id);
        let mut entity_seen: HashSet<String> = HashSet::new();
        let mut fact_pos: HashMap<FactKey, usize> = HashMap::new();
        for claim in claims {
            for e in claim.entities {
                if entity_seen.insert(e.clone()) {
                    graph.entities.push(e);
                }
            }
            for fact in claim.facts {
                match fact_pos.get(&fact.key()) {
                    Some(&i) => graph.facts[i].provenance.extend(fact.provenance),
                    None => {
                        fact_pos.insert(fact.key(), graph.facts.len());
                        graph.facts.push(fact);
                    }
                }
            }
        }
        for fact in &mut graph.facts {
            fact.normalize_provenance();
        }
        graph
    }

    /// Every fact endpoint is a listed entity.
    pub fn is_consistent(&self) -> bool {
        let entities: HashSet<&str> = self.entities.iter().map(String::as_str).collect();
        self.facts
            .iter()
            .all(|f| entities.contains(f.head.as_str()) && entities.contains(f.tail.as_str()))
    }
}

/// Build the graph of one patent from its claims.
pub fn aggregate_patent(record: &ClaimRecord, pipeline: &Pipeline) -> PatentGraph {
    PatentGraph::from_claims(
        record.patent_id.clone(),
        record
            .claims
            .iter()
            .enumerate()
            .map(|(i, claim)| extract_claim_facts(claim, &record.patent_id, i as u32, pipeline)),
    )
}
