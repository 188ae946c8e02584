//! Configuration and corpus-level orchestration of the extraction rules.

use std::collections::HashMap;
use std::fmt;
use std::num::NonZeroUsize;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cleaning::{clean_text, CleaningConfig};
use crate::extraction::{aggregate_patent, extract_tagged_facts, ClaimFacts, PatentGraph};
use crate::ingest::ClaimRecord;
use crate::tagging::{tokenize, BaselineTagger, HierarchyLexicon, PretaggedClaim, TaggedToken, Tagger};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("hierarchy words may not be removed during cleaning: {0:?}")]
    LexiconClash(Vec<String>),
    #[error("failed to build worker pool: {0}")]
    WorkerPool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaggerBackend {
    #[default]
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaggingConfig {
    pub backend: TaggerBackend,
    /// Words added to the hierarchy lexicon.
    pub extra_hierarchy_words: Vec<String>,
}

/// Everything that controls how a claim becomes facts.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub cleaning: CleaningConfig,
    pub tagging: TaggingConfig,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Parse(e.to_string()))
    }
}

/// A validated, immutable extraction setup. Shareable across threads.
pub struct Pipeline {
    cleaning: CleaningConfig,
    lexicon: HierarchyLexicon,
    tagger: Box<dyn Tagger>,
}

impl fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Pipeline")
            .field("cleaning", &self.cleaning)
            .field("lexicon", &self.lexicon)
            .finish_non_exhaustive()
    }
}

impl Default for Pipeline {
    fn default() -> Self {
        Pipeline::new(PipelineConfig::default()).expect("default config is valid")
    }
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self, ConfigError> {
        let lexicon = HierarchyLexicon::extended(&config.tagging.extra_hierarchy_words);
        let mut cleaning = config.cleaning;
        cleaning.normalize();
        cleaning.validate(&lexicon)?;
        let tagger: Box<dyn Tagger> = match config.tagging.backend {
            TaggerBackend::Baseline => Box::new(BaselineTagger::new(lexicon.clone())),
        };
        Ok(Pipeline {
            cleaning,
            lexicon,
            tagger,
        })
    }

    /// Swap in another tagging backend.
    pub fn with_tagger(mut self, tagger: Box<dyn Tagger>) -> Self {
        self.tagger = tagger;
        self
    }

    pub fn lexicon(&self) -> &HierarchyLexicon {
        &self.lexicon
    }

    pub fn cleaning(&self) -> &CleaningConfig {
        &self.cleaning
    }

    pub fn tagger(&self) -> &dyn Tagger {
        self.tagger.as_ref()
    }

    /// Clean, tokenize and tag a raw claim. Overrides are not applied yet.
    pub fn tag_claim(&self, raw: &str) -> Vec<TaggedToken> {
        let cleaned = clean_text(raw, &self.cleaning);
        self.tagger.tag(&tokenize(&cleaned))
    }

    /// Extract every record, `jobs` patents at a time. The output order
    /// matches the input order whatever the parallelism.
    pub fn extract_records(
        &self,
        records: &[ClaimRecord],
        jobs: NonZeroUsize,
    ) -> Result<Vec<PatentGraph>, ConfigError> {
        if jobs.get() == 1 {
            return Ok(records.iter().map(|r| aggregate_patent(r, self)).collect());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.get())
            .build()
            .map_err(|e| ConfigError::WorkerPool(e.to_string()))?;
        Ok(pool.install(|| {
            records
                .par_iter()
                .map(|r| aggregate_patent(r, self))
                .collect()
        }))
    }
}

/// Build patent graphs from pre-tagged claims, grouped by patent in order of
/// first appearance. Overrides still apply.
pub fn extract_pretagged(claims: &[PretaggedClaim], lexicon: &HierarchyLexicon) -> Vec<PatentGraph> {
    let mut order: Vec<&str> = Vec::new();
    let mut grouped: HashMap<&str, Vec<ClaimFacts>> = HashMap::new();
    for claim in claims {
        let facts = extract_tagged_facts(
            claim.tokens.clone(),
            &claim.patent_id,
            claim.claim_index,
            lexicon,
        );
        grouped
            .entry(claim.patent_id.as_str())
            .or_insert_with(|| {
                order.push(claim.patent_id.as_str());
                Vec::new()
            })
            .push(facts);
    }
    order
        .into_iter()
        .map(|id| PatentGraph::from_claims(id, grouped.remove(id).unwrap_or_default()))
        .collect()
}

/// Counts reported after an extraction run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ExtractSummary {
    pub patents: usize,
    pub claims: usize,
    pub entities: usize,
    pub facts: usize,
}

impl ExtractSummary {
    pub fn from_graphs<'a>(graphs: impl IntoIterator<Item = &'a PatentGraph>, claims: usize) -> Self {
        let mut summary = ExtractSummary {
            claims,
            ..Default::default()
        };
        for g in graphs {
            summary.patents += 1;
            summary.entities += g.entities.len();
            summary.facts += g.facts.len();
        }
        summary
    }
}

impl fmt::Display for ExtractSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "patents={} claims={} entities={} facts={}",
            self.patents, self.claims, self.entities, self.facts
        )
    }
}
