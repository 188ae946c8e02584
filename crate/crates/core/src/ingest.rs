//! Reading claim corpora and grouping them into year-keyed shards.
//!
//! Two line-oriented formats are accepted:
//!
//! * TSV with three columns, `patent_id<TAB>year<TAB>claims_json_array`, where
//!   `year` may be empty and the claims column is a JSON array of strings.
//! * JSONL with one `{"patent_id": .., "year": .., "claims": [..]}` per line.
//!
//! Blank lines are ignored in both formats.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::BufRead;
use std::num::NonZeroUsize;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Application years covered by the patent database.
pub const YEAR_RANGE: RangeInclusive<u16> = 1975..=2019;

/// Patents per shard file.
pub const DEFAULT_SHARD_SIZE: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub patent_id: String,
    #[serde(default)]
    pub year: Option<u16>,
    #[serde(default)]
    pub claims: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Tsv { header: bool },
    Jsonl,
}

impl FromStr for CorpusFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(CorpusFormat::Tsv { header: false }),
            "jsonl" => Ok(CorpusFormat::Jsonl),
            other => Err(format!("unknown corpus format `{other}` (expected tsv or jsonl)")),
        }
    }
}

/// How [`parse_corpus`] reacts to a malformed row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorMode {
    #[default]
    FailFast,
    SkipAndLog,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed record at {0}")]
    Record(#[from] RecordError),
    #[error("failed to read corpus: {0}")]
    Io(#[from] std::io::Error),
}

/// Records parsed from a corpus together with the rows that were skipped.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedCorpus {
    pub records: Vec<ClaimRecord>,
    pub skipped: Vec<RecordError>,
}

#[derive(Deserialize)]
struct JsonlRow {
    patent_id: String,
    #[serde(default)]
    year: Option<u16>,
    claims: Vec<String>,
}

/// Parse a claim corpus, one record per non-blank row, preserving order.
///
/// Claim strings are returned untouched. In [`ErrorMode::FailFast`] the first
/// malformed row aborts the parse; otherwise it is logged and collected in
/// [`ParsedCorpus::skipped`].
pub fn parse_corpus<R: BufRead>(
    reader: R,
    format: CorpusFormat,
    mode: ErrorMode,
) -> Result<ParsedCorpus, IngestError> {
    let mut out = ParsedCorpus::default();
    let mut first_seen: HashMap<String, usize> = HashMap::new();
    let mut header_pending = matches!(format, CorpusFormat::Tsv { header: true });

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let text = line.trim_end_matches('\r');
        if text.trim().is_empty() {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }

        let parsed = match format {
            CorpusFormat::Tsv { .. } => parse_tsv_row(text),
            CorpusFormat::Jsonl => parse_jsonl_row(text),
        }
        .and_then(|record| match first_seen.get(&record.patent_id) {
            Some(prev) => Err(format!(
                "duplicate patent id `{}` (first seen on line {prev})",
                record.patent_id
            )),
            None => Ok(record),
        });

        match parsed {
            Ok(record) => {
                first_seen.insert(record.patent_id.clone(), line_no);
                out.records.push(record);
            }
            Err(message) => {
                let err = RecordError {
                    line: line_no,
                    message,
                };
                match mode {
                    ErrorMode::FailFast => return Err(err.into()),
                    ErrorMode::SkipAndLog => {
                        log::warn!("skipping {err}");
                        out.skipped.push(err);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn parse_tsv_row(text: &str) -> Result<ClaimRecord, String> {
    let cols: Vec<&str> = text.split('\t').collect();
    if cols.len() != 3 {
        return Err(format!("expected 3 tab-separated columns, found {}", cols.len()));
    }
    let patent_id = parse_patent_id(cols[0])?;
    let year = match cols[1].trim() {
        "" => None,
        y => Some(parse_year(y)?),
    };
    let claims: Vec<String> = serde_json::from_str(cols[2])
        .map_err(|e| format!("claims column is not a JSON array of strings: {e}"))?;
    Ok(ClaimRecord {
        patent_id,
        year,
        claims,
    })
}

fn parse_jsonl_row(text: &str) -> Result<ClaimRecord, String> {
    let row: JsonlRow =
        serde_json::from_str(text).map_err(|e| format!("invalid JSONL record: {e}"))?;
    let patent_id = parse_patent_id(&row.patent_id)?;
    if let Some(year) = row.year {
        check_year(year)?;
    }
    Ok(ClaimRecord {
        patent_id,
        year: row.year,
        claims: row.claims,
    })
}

fn parse_patent_id(raw: &str) -> Result<String, String> {
    let id = raw.trim();
    if id.is_empty() {
        Err("empty patent id".to_string())
    } else {
        Ok(id.to_string())
    }
}

fn parse_year(raw: &str) -> Result<u16, String> {
    let year: u16 = raw
        .parse()
        .map_err(|_| format!("year `{raw}` is not an integer"))?;
    check_year(year)?;
    Ok(year)
}

fn check_year(year: u16) -> Result<(), String> {
    if YEAR_RANGE.contains(&year) {
        Ok(())
    } else {
        Err(format!(
            "year {year} outside {}-{}",
            YEAR_RANGE.start(),
            YEAR_RANGE.end()
        ))
    }
}

/// Year group of a shard. Records without a year land in `Unknown`, which
/// sorts after every dated group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ShardKey {
    Year(u16),
    Unknown,
}

impl ShardKey {
    pub fn from_year(year: Option<u16>) -> Self {
        year.map_or(ShardKey::Unknown, ShardKey::Year)
    }

    pub fn year(self) -> Option<u16> {
        match self {
            ShardKey::Year(y) => Some(y),
            ShardKey::Unknown => None,
        }
    }
}

impl fmt::Display for ShardKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShardKey::Year(y) => write!(f, "{y}"),
            ShardKey::Unknown => f.write_str("unknown"),
        }
    }
}

impl FromStr for ShardKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "unknown" {
            return Ok(ShardKey::Unknown);
        }
        s.parse::<u16>()
            .map(ShardKey::Year)
            .map_err(|_| format!("invalid shard group `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shard<T = ClaimRecord> {
    pub key: ShardKey,
    pub index: usize,
    pub records: Vec<T>,
}

/// Group records by year, then chunk each group in input order.
pub fn shard_records(records: Vec<ClaimRecord>, shard_size: NonZeroUsize) -> Vec<Shard> {
    shard_by(records, shard_size, |r| ShardKey::from_year(r.year))
}

/// Generic form of [`shard_records`] used for anything keyed by year.
pub fn shard_by<T>(
    items: Vec<T>,
    shard_size: NonZeroUsize,
    key: impl Fn(&T) -> ShardKey,
) -> Vec<Shard<T>> {
    let mut groups: BTreeMap<ShardKey, Vec<T>> = BTreeMap::new();
    for item in items {
        groups.entry(key(&item)).or_default().push(item);
    }
    let mut shards = Vec::new();
    for (key, items) in groups {
        let mut iter = items.into_iter().peekable();
        let mut index = 0;
        while iter.peek().is_some() {
            let records: Vec<T> = iter.by_ref().take(shard_size.get()).collect();
            shards.push(Shard {
                key,
                index,
                records,
            });
            index += 1;
        }
    }
    shards
}
