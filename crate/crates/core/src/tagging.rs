//! Tokenization and Penn Treebank tagging of cleaned claim text.
//!
//! The downstream rules only look at a handful of tag classes, so the
//! [`BaselineTagger`] is a deterministic closed-class lexicon with suffix
//! heuristics rather than a statistical model. Pre-tagged input can bypass
//! it entirely through [`load_pretagged`].

use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The working tag set. Everything outside it collapses to `Other`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    NN,
    NNS,
    NNP,
    NNPS,
    DT,
    CD,
    JJ,
    JJR,
    JJS,
    VB,
    VBD,
    VBG,
    VBN,
    VBP,
    VBZ,
    WDT,
    Other,
}

/// Tags of the full Penn Treebank set that fall outside [`Tag`]'s working set.
const OTHER_PENN_TAGS: &[&str] = &[
    "CC", "EX", "FW", "IN", "LS", "MD", "PDT", "POS", "PRP", "PRP$", "RB", "RBR", "RBS", "RP",
    "SYM", "TO", "UH", "WP", "WP$", "WRB", "$", "``", "''", "(", ")", ",", "--", ".", ":", "#",
];

impl Tag {
    pub const WORKING_SET: [Tag; 16] = [
        Tag::NN,
        Tag::NNS,
        Tag::NNP,
        Tag::NNPS,
        Tag::DT,
        Tag::CD,
        Tag::JJ,
        Tag::JJR,
        Tag::JJS,
        Tag::VB,
        Tag::VBD,
        Tag::VBG,
        Tag::VBN,
        Tag::VBP,
        Tag::VBZ,
        Tag::WDT,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::NN => "NN",
            Tag::NNS => "NNS",
            Tag::NNP => "NNP",
            Tag::NNPS => "NNPS",
            Tag::DT => "DT",
            Tag::CD => "CD",
            Tag::JJ => "JJ",
            Tag::JJR => "JJR",
            Tag::JJS => "JJS",
            Tag::VB => "VB",
            Tag::VBD => "VBD",
            Tag::VBG => "VBG",
            Tag::VBN => "VBN",
            Tag::VBP => "VBP",
            Tag::VBZ => "VBZ",
            Tag::WDT => "WDT",
            Tag::Other => "OTHER",
        }
    }

    /// Map a Penn tag string onto the working set. The flag is `false` when
    /// the string is not a Penn Treebank tag at all.
    pub fn from_penn(s: &str) -> (Tag, bool) {
        if let Some(tag) = Tag::WORKING_SET.iter().find(|t| t.as_str() == s) {
            return (*tag, true);
        }
        (Tag::Other, s == "OTHER" || OTHER_PENN_TAGS.contains(&s))
    }

    pub fn is_noun(self) -> bool {
        matches!(self, Tag::NN | Tag::NNS | Tag::NNP | Tag::NNPS)
    }

    pub fn is_adjective(self) -> bool {
        matches!(self, Tag::JJ | Tag::JJR | Tag::JJS)
    }

    pub fn is_verb(self) -> bool {
        matches!(
            self,
            Tag::VB | Tag::VBD | Tag::VBG | Tag::VBN | Tag::VBP | Tag::VBZ
        )
    }

    /// DT or CD: the tags that open an entity.
    pub fn is_marker(self) -> bool {
        matches!(self, Tag::DT | Tag::CD)
    }

    /// Nouns and adjectives, the words an entity is made of.
    pub fn is_entity_word(self) -> bool {
        self.is_noun() || self.is_adjective()
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TaggedToken {
    pub surface: String,
    pub tag: Tag,
    /// Index in the claim's token stream.
    pub position: usize,
}

impl TaggedToken {
    pub fn new(surface: impl Into<String>, tag: Tag, position: usize) -> Self {
        TaggedToken {
            surface: surface.into(),
            tag,
            position,
        }
    }
}

/// Verbs denoting a system–subsystem relationship.
pub const DEFAULT_HIERARCHY_WORDS: [&str; 14] = [
    "comprising",
    "comprises",
    "comprise",
    "comprised",
    "include",
    "including",
    "includes",
    "included",
    "consist",
    "consists",
    "consisted",
    "consisting",
    "has",
    "having",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchyLexicon {
    words: HashSet<String>,
}

impl Default for HierarchyLexicon {
    fn default() -> Self {
        HierarchyLexicon {
            words: DEFAULT_HIERARCHY_WORDS.iter().map(|w| w.to_string()).collect(),
        }
    }
}

impl HierarchyLexicon {
    /// The default lexicon plus `extra` words (lowercased).
    pub fn extended<I, S>(extra: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut lexicon = Self::default();
        for w in extra {
            let w = w.as_ref().trim().to_lowercase();
            if !w.is_empty() {
                lexicon.words.insert(w);
            }
        }
        lexicon
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Words in sorted order.
    pub fn words(&self) -> Vec<&str> {
        let mut words: Vec<&str> = self.words.iter().map(String::as_str).collect();
        words.sort_unstable();
        words
    }
}

/// Split cleaned text on whitespace.
pub fn tokenize(cleaned: &str) -> Vec<String> {
    cleaned.split_whitespace().map(str::to_string).collect()
}

/// A part-of-speech tagging backend.
pub trait Tagger: Send + Sync {
    /// Tag `tokens`, returning exactly one token per input in the same order.
    fn tag(&self, tokens: &[String]) -> Vec<TaggedToken>;
}

pub fn tag(tokens: &[String], backend: &dyn Tagger) -> Vec<TaggedToken> {
    backend.tag(tokens)
}

/// Force every lexicon word to `VB`, leaving other tokens alone.
pub fn apply_overrides(tagged: Vec<TaggedToken>, lexicon: &HierarchyLexicon) -> Vec<TaggedToken> {
    tagged
        .into_iter()
        .map(|mut t| {
            if lexicon.contains(&t.surface) {
                t.tag = Tag::VB;
            }
            t
        })
        .collect()
}

const NUMBER_WORDS: [&str; 10] = [
    "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
];

const ORDINALS: [&str; 10] = [
    "first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth",
];

const AUXILIARIES: [(&str, Tag); 15] = [
    ("is", Tag::VBZ),
    ("are", Tag::VBP),
    ("am", Tag::VBP),
    ("was", Tag::VBD),
    ("were", Tag::VBD),
    ("be", Tag::VB),
    ("been", Tag::VBN),
    ("being", Tag::VBG),
    ("has", Tag::VBZ),
    ("have", Tag::VBP),
    ("had", Tag::VBD),
    ("having", Tag::VBG),
    ("does", Tag::VBZ),
    ("do", Tag::VBP),
    ("did", Tag::VBD),
];

// Modals, adverbs, prepositions, conjunctions and pronouns. Claim cleaning
// removes most of these already; the tagger still needs them for input that
// was cleaned with a smaller stoplist.
const CLOSED_OTHER: &[&str] = &[
    "may", "can", "could", "will", "would", "shall", "should", "must", "might", "not", "also",
    "only", "then", "thereby", "therein", "thereof", "therefrom", "thereto", "therebetween",
    "whereby", "when", "where", "while", "so", "too", "very", "of", "in", "on", "at", "to", "for",
    "by", "with", "from", "into", "onto", "over", "under", "between", "through", "about",
    "and", "or", "but", "nor", "than", "it", "its", "they", "them", "their", "he", "she",
    "we", "who", "whom", "whose", "what", "how", "such", "each", "every", "any", "all", "both",
    "either", "neither", "this", "these", "those", "some", "no", "if",
];

const COMPARATIVES: &[&str] = &[
    "more", "less", "lesser", "better", "worse", "further", "farther", "greater", "larger",
    "smaller", "higher", "lower", "longer", "shorter", "wider", "narrower", "thicker", "thinner",
    "bigger", "faster", "slower", "stronger", "weaker", "deeper", "shallower", "heavier",
    "lighter", "closer", "nearer", "harder", "softer", "hotter", "colder", "warmer", "cooler",
    "denser", "tighter", "looser", "rougher", "smoother", "flatter", "broader", "earlier",
    "later", "older", "newer", "fewer", "stiffer", "finer", "coarser",
];

const SUPERLATIVES: &[&str] = &[
    "most", "least", "best", "worst", "furthest", "farthest", "greatest", "largest", "smallest",
    "highest", "lowest", "longest", "shortest", "widest", "narrowest", "thickest", "thinnest",
    "biggest", "fastest", "slowest", "strongest", "weakest", "deepest", "heaviest", "lightest",
    "closest", "nearest", "hardest", "softest", "hottest", "coldest", "earliest", "latest",
    "oldest", "newest", "fewest", "finest",
];

const LY_NOUNS: &[&str] = &[
    "assembly", "supply", "family", "anomaly", "butterfly", "monopoly", "jelly", "belly",
    "rally", "reply", "poly", "ply", "doily", "lily",
];

const EED_VERBS: &[&str] = &["exceed", "proceed", "succeed"];

/// Closed-class lexicon plus suffix heuristics; unknown words are `NN`.
#[derive(Debug, Clone, Default)]
pub struct BaselineTagger {
    lexicon: HierarchyLexicon,
}

impl BaselineTagger {
    pub fn new(lexicon: HierarchyLexicon) -> Self {
        BaselineTagger { lexicon }
    }

    fn is_known_verb(&self, word: &str) -> bool {
        self.lexicon.contains(word) || AUXILIARIES.iter().any(|(w, _)| *w == word)
    }

    fn tag_word(&self, word: &str, prev: Option<Tag>, next: Option<&str>) -> Tag {
        if let Some(tag) = closed_class(word) {
            return tag;
        }
        if !word.is_empty() && word.bytes().all(|b| b.is_ascii_digit()) {
            return Tag::CD;
        }

        let after_modifier = prev.is_some_and(|t| t.is_marker() || t.is_adjective());
        let next_is_verb = next.is_some_and(|w| self.is_known_verb(w));
        let next_is_marker = next.is_some_and(is_marker_word);

        if is_adverb(word) {
            return Tag::Other;
        }
        if COMPARATIVES.contains(&word) {
            return Tag::JJR;
        }
        if SUPERLATIVES.contains(&word) {
            return Tag::JJS;
        }
        if is_ing_candidate(word) {
            return if after_modifier || next.is_none() || next_is_verb {
                Tag::NN
            } else {
                Tag::VBG
            };
        }
        if is_ed_candidate(word) {
            return if after_modifier || next.is_none() || next_is_verb {
                Tag::JJ
            } else {
                Tag::VBN
            };
        }
        if word.ends_with("ous") || word.ends_with("ible") || word.ends_with("ful") {
            return Tag::JJ;
        }
        if is_plural_candidate(word) {
            // "the gear engages the shaft": a plural-looking word between a
            // noun and an entity marker is read as a third-person verb.
            return if prev.is_some_and(Tag::is_noun) && next_is_marker {
                Tag::VBZ
            } else {
                Tag::NNS
            };
        }
        Tag::NN
    }
}

impl Tagger for BaselineTagger {
    fn tag(&self, tokens: &[String]) -> Vec<TaggedToken> {
        let mut out: Vec<TaggedToken> = Vec::with_capacity(tokens.len());
        for (i, word) in tokens.iter().enumerate() {
            let prev = out.last().map(|t| t.tag);
            let next = tokens.get(i + 1).map(String::as_str);
            let tag = self.tag_word(word, prev, next);
            out.push(TaggedToken::new(word.clone(), tag, i));
        }
        out
    }
}

fn closed_class(word: &str) -> Option<Tag> {
    match word {
        "a" | "an" | "the" => return Some(Tag::DT),
        "which" | "that" => return Some(Tag::WDT),
        _ => {}
    }
    if NUMBER_WORDS.contains(&word) {
        return Some(Tag::CD);
    }
    if ORDINALS.contains(&word) {
        return Some(Tag::JJ);
    }
    if let Some((_, tag)) = AUXILIARIES.iter().find(|(w, _)| *w == word) {
        return Some(*tag);
    }
    if CLOSED_OTHER.contains(&word) {
        return Some(Tag::Other);
    }
    None
}

fn is_marker_word(word: &str) -> bool {
    matches!(word, "a" | "an" | "the")
        || NUMBER_WORDS.contains(&word)
        || (!word.is_empty() && word.bytes().all(|b| b.is_ascii_digit()))
}

fn has_vowel(s: &str) -> bool {
    s.chars().any(|c| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y'))
}

fn is_adverb(word: &str) -> bool {
    word.len() >= 5
        && word.ends_with("ly")
        && !LY_NOUNS.iter().any(|n| word.ends_with(n))
}

fn is_ing_candidate(word: &str) -> bool {
    word.len() >= 6
        && word
            .strip_suffix("ing")
            .is_some_and(has_vowel)
}

fn is_ed_candidate(word: &str) -> bool {
    if word.len() < 5 || !word.ends_with("ed") {
        return false;
    }
    if word.ends_with("eed") && !EED_VERBS.iter().any(|v| word.ends_with(v)) {
        return false;
    }
    word.strip_suffix("ed").is_some_and(has_vowel)
}

fn is_plural_candidate(word: &str) -> bool {
    word.len() >= 4
        && word.ends_with('s')
        && !(word.ends_with("ss") || word.ends_with("us") || word.ends_with("is"))
}

/// One claim read from pre-tagged JSONL.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PretaggedClaim {
    pub patent_id: String,
    pub claim_index: u32,
    pub tokens: Vec<TaggedToken>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PretaggedCorpus {
    pub claims: Vec<PretaggedClaim>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum PretaggedError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("failed to read pre-tagged input: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Deserialize, Serialize)]
struct PretaggedRow {
    patent_id: String,
    claim_index: u32,
    tokens: Vec<(String, String)>,
}

/// Read `{"patent_id", "claim_index", "tokens": [["the","DT"], ..]}` lines.
///
/// Surfaces are lowercased; tags outside the working set become
/// [`Tag::Other`], with a warning when the string is not a Penn tag at all.
pub fn load_pretagged<R: BufRead>(reader: R) -> Result<PretaggedCorpus, PretaggedError> {
    let mut out = PretaggedCorpus::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: PretaggedRow =
            serde_json::from_str(&line).map_err(|e| PretaggedError::Malformed {
                line: idx + 1,
                message: e.to_string(),
            })?;
        let tokens = row
            .tokens
            .into_iter()
            .enumerate()
            .map(|(pos, (surface, tag))| {
                let (parsed, known) = Tag::from_penn(&tag);
                if !known {
                    let msg = format!(
                        "line {}: unknown tag `{tag}` on token `{surface}`, treated as OTHER",
                        idx + 1
                    );
                    log::warn!("{msg}");
                    out.warnings.push(msg);
                }
                TaggedToken::new(surface.to_lowercase(), parsed, pos)
            })
            .collect();
        out.claims.push(PretaggedClaim {
            patent_id: row.patent_id,
            claim_index: row.claim_index,
            tokens,
        });
    }
    Ok(out)
}
