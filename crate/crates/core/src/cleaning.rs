//! Claim text cleaning and tag filtering.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::pipeline::ConfigError;
use crate::tagging::{HierarchyLexicon, Tag, TaggedToken};

const STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// Words shipped in `data/stopwords.txt`.
pub fn default_stoplist() -> BTreeSet<String> {
    STOPWORDS
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleaningConfig {
    pub boilerplate_phrases: Vec<String>,
    pub noise_tokens: BTreeSet<String>,
    pub stoplist: BTreeSet<String>,
    pub drop_digit_tokens: bool,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        CleaningConfig {
            boilerplate_phrases: vec!["as claimed in claim".to_string()],
            noise_tokens: ["claim", "said", "wherein", "further"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            stoplist: default_stoplist(),
            drop_digit_tokens: true,
        }
    }
}

impl CleaningConfig {
    /// Parse a JSON config, lowercase its word lists and check it against
    /// `lexicon`.
    pub fn from_json(text: &str, lexicon: &HierarchyLexicon) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let mut config: CleaningConfig = serde_path_to_error::deserialize(de)
            .map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.normalize();
        config.validate(lexicon)?;
        Ok(config)
    }

    pub(crate) fn normalize(&mut self) {
        let lower = |set: &BTreeSet<String>| -> BTreeSet<String> {
            set.iter()
                .map(|w| w.trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect()
        };
        self.noise_tokens = lower(&self.noise_tokens);
        self.stoplist = lower(&self.stoplist);
    }

    /// Hierarchy words must survive cleaning, so neither removal list may
    /// contain one.
    pub fn validate(&self, lexicon: &HierarchyLexicon) -> Result<(), ConfigError> {
        let clash: Vec<String> = self
            .stoplist
            .iter()
            .chain(self.noise_tokens.iter())
            .filter(|w| lexicon.contains(w))
            .cloned()
            .collect();
        if clash.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::LexiconClash(clash))
        }
    }

    fn phrase_token_lists(&self) -> Vec<Vec<String>> {
        self.boilerplate_phrases
            .iter()
            .map(|p| split_normalized(&p.to_lowercase()))
            .filter(|p| !p.is_empty())
            .collect()
    }
}

fn is_separator(c: char) -> bool {
    !c.is_alphanumeric() && !c.is_whitespace()
}

fn split_normalized(lower: &str) -> Vec<String> {
    lower
        .split(|c: char| c.is_whitespace() || is_separator(c))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Remove every occurrence of each phrase, repeating until none is left.
fn remove_phrases(mut tokens: Vec<String>, phrases: &[Vec<String>]) -> Vec<String> {
    loop {
        let mut changed = false;
        for phrase in phrases {
            let mut out = Vec::with_capacity(tokens.len());
            let mut i = 0;
            while i < tokens.len() {
                if tokens[i..].starts_with(phrase) {
                    i += phrase.len();
                    changed = true;
                } else {
                    out.push(std::mem::take(&mut tokens[i]));
                    i += 1;
                }
            }
            tokens = out;
        }
        if !changed {
            return tokens;
        }
    }
}

/// Clean one raw claim.
///
/// Newline markers go first, then boilerplate phrases (matched on whole
/// words, case-insensitively). The text is lowercased and punctuation or
/// operator characters become spaces. Digit-bearing tokens, noise tokens and
/// stop words are dropped and whitespace is collapsed.
pub fn clean_text(raw: &str, config: &CleaningConfig) -> String {
    let text = raw.replace("\\n", " ").replace('\n', " ").to_lowercase();
    let phrases = config.phrase_token_lists();
    let tokens = remove_phrases(split_normalized(&text), &phrases);
    let kept: Vec<String> = tokens
        .into_iter()
        .filter(|t| !(config.drop_digit_tokens && t.chars().any(char::is_numeric)))
        .filter(|t| !config.noise_tokens.contains(t) && !config.stoplist.contains(t))
        .collect();
    remove_phrases(kept, &phrases).join(" ")
}

/// Keep only tokens in the working tag set, in order.
pub fn filter_tags(tagged: Vec<TaggedToken>) -> Vec<TaggedToken> {
    tagged.into_iter().filter(|t| t.tag != Tag::Other).collect()
}
