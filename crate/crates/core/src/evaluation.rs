//! Term coverage against an engineering dictionary, and graph size
//! statistics.

use std::collections::{BTreeMap, HashSet};
use std::fmt::{self, Write as _};
use std::io::Read;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::MergedGraph;

/// Prepositions removed by [`normalize_term`].
pub const NORMALIZATION_PREPOSITIONS: [&str; 13] = [
    "of", "for", "in", "on", "at", "to", "by", "with", "from", "into", "onto", "over", "under",
];

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("dictionary line {line}: {message}")]
    Dictionary { line: u64, message: String },
    #[error("dictionary is empty")]
    EmptyDictionary,
    #[error("reading dictionary: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Civil,
    Material,
    Mech,
    Mining,
    Nuclear,
    Software,
    Other,
}

impl Field {
    pub const ALL: [Field; 7] = [
        Field::Civil,
        Field::Material,
        Field::Mech,
        Field::Mining,
        Field::Nuclear,
        Field::Software,
        Field::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Field::Civil => "civil",
            Field::Material => "material",
            Field::Mech => "mech",
            Field::Mining => "mining",
            Field::Nuclear => "nuclear",
            Field::Software => "software",
            Field::Other => "other",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Field {
    type Err = String;

    /// Case-insensitive; accepts the long forms used in dictionary sources
    /// ("mechanical", "materials", "civil engineering").
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_lowercase();
        let head = lower.split_whitespace().next().unwrap_or("");
        match head {
            "civil" => Ok(Field::Civil),
            "material" | "materials" => Ok(Field::Material),
            "mech" | "mechanical" => Ok(Field::Mech),
            "mining" => Ok(Field::Mining),
            "nuclear" => Ok(Field::Nuclear),
            "software" => Ok(Field::Software),
            "other" => Ok(Field::Other),
            _ => Err(format!("unknown field `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DictionaryEntry {
    pub term: String,
    pub field: Field,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TermDictionary {
    entries: Vec<DictionaryEntry>,
}

impl TermDictionary {
    /// Terms are trimmed; an empty term is rejected with its 1-based position.
    pub fn new<I, S>(entries: I) -> Result<Self, EvaluationError>
    where
        I: IntoIterator<Item = (S, Field)>,
        S: AsRef<str>,
    {
        let mut out = Vec::new();
        for (i, (term, field)) in entries.into_iter().enumerate() {
            let term = term.as_ref().trim();
            if term.is_empty() {
                return Err(EvaluationError::Dictionary {
                    line: i as u64 + 1,
                    message: "empty term".into(),
                });
            }
            out.push(DictionaryEntry {
                term: term.to_string(),
                field,
            });
        }
        Ok(TermDictionary { entries: out })
    }

    /// Read `term,field` rows. A first row reading `term,field` is treated as
    /// a header.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, EvaluationError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut entries = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let line = record.position().map_or(i as u64 + 1, |p| p.line());
            if record.len() != 2 {
                return Err(EvaluationError::Dictionary {
                    line,
                    message: format!("expected 2 columns, found {}", record.len()),
                });
            }
            if i == 0
                && record[0].eq_ignore_ascii_case("term")
                && record[1].eq_ignore_ascii_case("field")
            {
                continue;
            }
            if record[0].is_empty() {
                return Err(EvaluationError::Dictionary {
                    line,
                    message: "empty term".into(),
                });
            }
            let field = record[1]
                .parse()
                .map_err(|message| EvaluationError::Dictionary { line, message })?;
            entries.push(DictionaryEntry {
                term: record[0].to_string(),
                field,
            });
        }
        Ok(TermDictionary { entries })
    }

    pub fn entries(&self) -> &[DictionaryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Insert a space at lower-to-upper transitions ("ObjectWorks") and before
/// the last capital of an acronym run that opens a word ("TCPServer").
fn split_camel(term: &str) -> String {
    let chars: Vec<char> = term.chars().collect();
    let mut out = String::with_capacity(term.len() + 4);
    for (i, &c) in chars.iter().enumerate() {
        if i > 0 && c.is_uppercase() {
            let prev = chars[i - 1];
            let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            if prev.is_lowercase() || (prev.is_uppercase() && next_lower) {
                out.push(' ');
            }
        }
        out.push(c);
    }
    out
}

/// Normalize a term for adjusted matching: split camel case, lowercase,
/// turn punctuation into spaces, then drop digit-bearing tokens and
/// prepositions. May return an empty string.
pub fn normalize_term(term: &str) -> String {
    split_camel(term)
        .to_lowercase()
        .split(|c: char| c.is_whitespace() || !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .filter(|t| !t.chars().any(char::is_numeric))
        .filter(|t| !NORMALIZATION_PREPOSITIONS.contains(t))
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TermOutcome {
    pub term: String,
    pub field: Field,
    pub normalized: String,
    pub raw: bool,
    pub adjusted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    /// Field name, or `total`.
    pub label: String,
    pub checked: usize,
    pub raw_found: usize,
    pub raw_fraction: f64,
    pub adjusted_found: Option<usize>,
    pub adjusted_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Miss {
    pub term: String,
    pub field: Field,
    pub normalized: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub adjusted: bool,
    /// Fields present in the dictionary, in [`Field::ALL`] order.
    pub fields: Vec<CoverageRow>,
    pub total: CoverageRow,
    /// Terms not found under the active protocol, in dictionary order.
    pub misses: Vec<Miss>,
    pub outcomes: Vec<TermOutcome>,
}

impl CoverageReport {
    /// Aligned text table with one row per field and a total row.
    pub fn to_table(&self) -> String {
        let mut header = vec!["field", "terms", "raw found", "raw coverage"];
        if self.adjusted {
            header.extend(["adjusted found", "adjusted coverage"]);
        }
        let mut rows: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        for row in self.fields.iter().chain(std::iter::once(&self.total)) {
            let mut cells = vec![
                row.label.clone(),
                row.checked.to_string(),
                row.raw_found.to_string(),
                format!("{:.3}", row.raw_fraction),
            ];
            if let (Some(found), Some(frac)) = (row.adjusted_found, row.adjusted_fraction) {
                cells.push(found.to_string());
                cells.push(format!("{frac:.3}"));
            }
            rows.push(cells);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &rows {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, cell)| {
                    if c == 0 {
                        format!("{cell:<w$}", w = widths[c])
                    } else {
                        format!("{cell:>w$}", w = widths[c])
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", line.join("  "));
        }
        out
    }
}

fn row(label: &str, outcomes: &[&TermOutcome], adjusted: bool) -> CoverageRow {
    let checked = outcomes.len();
    let raw_found = outcomes.iter().filter(|o| o.raw).count();
    let adj_found = outcomes.iter().filter(|o| o.adjusted).count();
    let frac = |n: usize| n as f64 / checked as f64;
    CoverageRow {
        label: label.to_string(),
        checked,
        raw_found,
        raw_fraction: frac(raw_found),
        adjusted_found: adjusted.then_some(adj_found),
        adjusted_fraction: adjusted.then(|| frac(adj_found)),
    }
}

/// Coverage of `dict` by the entity surfaces of `graph`.
///
/// A raw match is an exact surface match. An adjusted match is a raw match,
/// or the normalized term equalling some surface or some normalized surface.
/// An empty normalized term never matches.
pub fn coverage(dict: &TermDictionary, graph: &MergedGraph, adjusted: bool) -> Result<CoverageReport, EvaluationError> {
    if dict.is_empty() {
        return Err(EvaluationError::EmptyDictionary);
    }
    let surfaces: HashSet<&str> = graph.entities().iter().map(String::as_str).collect();
    let normalized_surfaces: HashSet<String> = if adjusted {
        graph
            .entities()
            .par_iter()
            .map(|e| normalize_term(e))
            .filter(|e| !e.is_empty())
            .collect()
    } else {
        HashSet::new()
    };

    let outcomes: Vec<TermOutcome> = dict
        .entries()
        .par_iter()
        .map(|entry| {
            let normalized = normalize_term(&entry.term);
            let raw = surfaces.contains(entry.term.as_str());
            let adj = adjusted
                && (raw
                    || (!normalized.is_empty()
                        && (surfaces.contains(normalized.as_str())
                            || normalized_surfaces.contains(&normalized))));
            TermOutcome {
                term: entry.term.clone(),
                field: entry.field,
                normalized,
                raw,
                adjusted: adj,
            }
        })
        .collect();

    let mut by_field: BTreeMap<Field, Vec<&TermOutcome>> = BTreeMap::new();
    for o in &outcomes {
        by_field.entry(o.field).or_default().push(o);
    }
    let fields = by_field
        .iter()
        .map(|(field, list)| row(field.as_str(), list, adjusted))
        .collect();
    let all: Vec<&TermOutcome> = outcomes.iter().collect();
    let total = row("total", &all, adjusted);
    let misses = outcomes
        .iter()
        .filter(|o| if adjusted { !o.adjusted } else { !o.raw })
        .map(|o| Miss {
            term: o.term.clone(),
            field: o.field,
            normalized: o.normalized.clone(),
        })
        .collect();
    Ok(CoverageReport {
        adjusted,
        fields,
        total,
        misses,
        outcomes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphStats {
    pub entities: usize,
    /// Extracted facts, inferred ones excluded.
    pub facts: usize,
    pub inferred: usize,
    /// `facts / entities` rounded to three decimals; `None` for an empty graph.
    pub facts_per_entity: Option<f64>,
    /// Out-degree over extracted facts, mapped to the number of entities
    /// with that degree.
    pub out_degree_histogram: BTreeMap<usize, usize>,
}

pub fn graph_stats(graph: &MergedGraph) -> GraphStats {
    let mut degree = vec![0usize; graph.entity_count()];
    let mut inferred = 0;
    for f in graph.facts() {
        if f.inferred {
            inferred += 1;
        } else {
            degree[f.head as usize] += 1;
        }
    }
    let facts = graph.fact_count() - inferred;
    let mut out_degree_histogram = BTreeMap::new();
    for d in degree {
        *out_degree_histogram.entry(d).or_insert(0) += 1;
    }
    let entities = graph.entity_count();
    GraphStats {
        entities,
        facts,
        inferred,
        facts_per_entity: (entities > 0)
            .then(|| (facts as f64 / entities as f64 * 1000.0).round() / 1000.0),
        out_degree_histogram,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::PatentGraph;
    use crate::fact::{Fact, Provenance, RelationKind};
    use proptest::prelude::*;

    fn graph_with(entities: &[&str]) -> MergedGraph {
        MergedGraph::merge([PatentGraph {
            patent_id: "US1".into(),
            entities: entities.iter().map(|s| s.to_string()).collect(),
            facts: vec![],
        }])
    }

    fn dict(terms: &[&str]) -> TermDictionary {
        TermDictionary::new(terms.iter().map(|t| (*t, Field::Mech))).unwrap()
    }

    #[test]
    fn normalization_rows() {
        assert_eq!(normalize_term("center of gravity"), "center gravity");
        assert_eq!(normalize_term("tcp/ip"), "tcp ip");
        assert_eq!(normalize_term("ObjectWorks"), "object works");
        assert_eq!(normalize_term("dod std 2168"), "dod std");
        assert_eq!(normalize_term("Clean coal"), "clean coal");
        assert_eq!(normalize_term("x.225"), "x");
        assert_eq!(normalize_term("TCPServer"), "tcp server");
        assert_eq!(normalize_term("of 42"), "");
    }

    #[test]
    fn raw_and_adjusted() {
        let g = graph_with(&["gear", "center gravity"]);
        let r = coverage(&dict(&["gear"]), &g, false).unwrap();
        assert_eq!((r.total.raw_found, r.total.checked), (1, 1));
        let r = coverage(&dict(&["gear", "flux capacitor"]), &g, false).unwrap();
        assert_eq!(r.total.raw_fraction, 0.5);
        assert_eq!(r.misses[0].term, "flux capacitor");
        assert_eq!(r.total.adjusted_found, None);
        let r = coverage(&dict(&["center of gravity"]), &g, true).unwrap();
        assert_eq!(r.total.raw_found, 0);
        assert_eq!(r.total.adjusted_found, Some(1));
        assert_eq!(r.total.adjusted_fraction, Some(1.0));
        assert!(r.misses.is_empty());
        assert!(matches!(coverage(&TermDictionary::default(), &g, true), Err(EvaluationError::EmptyDictionary)));
    }

    #[test]
    fn adjusted_matches_normalized_surfaces() {
        let g = graph_with(&["tcp/ip stack"]);
        let r = coverage(&dict(&["TCP IP stack"]), &g, true).unwrap();
        assert_eq!(r.total.adjusted_found, Some(1));
    }

    #[test]
    fn csv_parsing() {
        let d = TermDictionary::from_csv("term,field\ngear, Mechanical\n\"center of gravity\",civil\n".as_bytes()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.entries()[0].field, Field::Mech);
        assert_eq!(d.entries()[1].term, "center of gravity");
        let err = TermDictionary::from_csv("gear,astrology\n".as_bytes()).unwrap_err();
        assert!(matches!(err, EvaluationError::Dictionary { line: 1, .. }));
        assert!(TermDictionary::from_csv(" ,civil\n".as_bytes()).is_err());
        assert!(TermDictionary::new([("  ", Field::Civil)]).is_err());
    }

    #[test]
    fn table_layout() {
        let g = graph_with(&["gear"]);
        let d = TermDictionary::new([("gear", Field::Mech), ("dam", Field::Civil)]).unwrap();
        let table = coverage(&d, &g, true).unwrap().to_table();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("field"));
        assert!(lines[1].starts_with("civil"));
        assert!(lines[3].starts_with("total") && lines[3].ends_with("0.500"));
        let widths: HashSet<usize> = lines.iter().map(|l| l.len()).collect();
        assert_eq!(widths.len(), 1);
    }

    #[test]
    fn stats() {
        let empty = graph_stats(&MergedGraph::new());
        assert_eq!((empty.entities, empty.facts, empty.facts_per_entity), (0, 0, None));
        let mut g = MergedGraph::new();
        for (h, t, inferred) in [("a", "b", false), ("b", "c", false), ("a", "c", true)] {
            g.insert_fact(Fact {
                head: h.into(),
                relation: "comprises".into(),
                tail: t.into(),
                kind: RelationKind::Hierarchical,
                inferred,
                provenance: vec![Provenance::claim("US1", 0)],
            });
        }
        let s = graph_stats(&g);
        assert_eq!((s.entities, s.facts, s.inferred), (3, 2, 1));
        assert_eq!(s.facts_per_entity, Some(0.667));
        assert_eq!(s.out_degree_histogram, BTreeMap::from([(0, 1), (1, 2)]));
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "[A-Za-z0-9 ./_-]{0,30}") {
            let once = normalize_term(&s);
            prop_assert_eq!(normalize_term(&once), once);
        }
    }
}
