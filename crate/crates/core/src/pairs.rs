//! Evaluation sentence pairs: ingestion of delimiter-separated corpora into
//! normalized [`PairRecord`]s, group-vs-group alignment and a minimal-pair
//! lint.
//!
//! The normalized on-disk schema is a CSV with the columns
//! `pair_id,domain,group,sentence_id,text,gold_emotion,template_id,corpus_tag`.
//! Source corpora in other layouts are read through a [`ColumnMapping`], a
//! small `key = value` file:
//!
//! ```text
//! # EEC-style layout
//! pair_id = Template+Emotion word+Person pair
//! group = Gender
//! text = Sentence
//! gold_emotion = Emotion
//! sentence_id = ID
//! group.male = M
//! group.female = F
//! ```
//!
//! `pair_id` may join several columns with `+`. `group.<raw> = <code>` remaps
//! raw group values; otherwise values are parsed as group codes or names.
//! Rows whose mapped gold emotion is empty or not one of the four emotions are
//! dropped and counted.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::labels::{Domain, Emotion, Group, UnknownLabel};
use crate::lexicon::Lexicon;
use crate::text::tokenize;

pub const NORMALIZED_COLUMNS: [&str; 8] =
    ["pair_id", "domain", "group", "sentence_id", "text", "gold_emotion", "template_id", "corpus_tag"];

#[derive(Debug, thiserror::Error)]
pub enum PairError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Mapping { path: String, line: usize, reason: String },
    #[error("{path}: mapped column `{column}` not found in header")]
    MissingColumn { path: String, column: String },
    #[error("{path}: duplicate (pair_id, group) = ({pair_id}, {group})")]
    DuplicatePair { path: String, pair_id: String, group: Group },
    #[error("{path}: duplicate sentence_id `{sentence_id}`")]
    DuplicateSentence { path: String, sentence_id: String },
    #[error("{path}:{row}: empty text")]
    EmptyText { path: String, row: usize },
    #[error("{path}:{row}: {label}")]
    Label { path: String, row: usize, label: UnknownLabel },
    #[error("{path}:{row}: domain column says {stated} but group {group} belongs to {actual}")]
    DomainMismatch { path: String, row: usize, stated: Domain, group: Group, actual: Domain },
    #[error("cannot pair {g1} with {g2}: {reason}")]
    InvalidPairing { g1: Group, g2: Group, reason: String },
    #[error("no aligned pairs for {domain} {g1}×{g2}")]
    NoAlignedPairs { domain: Domain, g1: Group, g2: Group },
}

/// One evaluation sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub pair_id: String,
    pub domain: Domain,
    pub group: Group,
    pub sentence_id: String,
    pub text: String,
    #[serde(default, with = "optional_emotion")]
    pub gold_emotion: Option<Emotion>,
    #[serde(default, with = "optional_string")]
    pub template_id: Option<String>,
    pub corpus_tag: String,
}

/// Column names of a source corpus, plus group value remapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMapping {
    pub pair_id: Vec<String>,
    pub group: String,
    pub text: String,
    pub gold_emotion: Option<String>,
    pub sentence_id: Option<String>,
    pub template_id: Option<String>,
    pub domain: Option<String>,
    pub delimiter: u8,
    pub group_values: HashMap<String, Group>,
}

impl ColumnMapping {
    /// Mapping for files already in the normalized schema.
    pub fn normalized() -> Self {
        ColumnMapping {
            pair_id: vec!["pair_id".into()],
            group: "group".into(),
            text: "text".into(),
            gold_emotion: Some("gold_emotion".into()),
            sentence_id: Some("sentence_id".into()),
            template_id: Some("template_id".into()),
            domain: Some("domain".into()),
            delimiter: b',',
            group_values: HashMap::new(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PairError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| PairError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self, PairError> {
        let err = |line: usize, reason: String| PairError::Mapping { path: source_name.to_string(), line, reason };
        let mut keys: BTreeMap<String, String> = BTreeMap::new();
        let mut group_values = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content.split_once('=').ok_or_else(|| err(line, format!("expected key = value, got `{content}`")))?;
            let (k, v) = (k.trim(), v.trim());
            if let Some(raw_value) = k.strip_prefix("group.") {
                let g: Group = v.parse().map_err(|e: UnknownLabel| err(line, e.to_string()))?;
                group_values.insert(raw_value.to_string(), g);
                continue;
            }
            match k {
                "pair_id" | "group" | "text" | "gold_emotion" | "sentence_id" | "template_id" | "domain"
                | "delimiter" => {
                    keys.insert(k.to_string(), v.to_string());
                }
                _ => return Err(err(line, format!("unknown key `{k}`"))),
            }
        }
        let required = |k: &str| {
            keys.get(k).cloned().filter(|v| !v.is_empty()).ok_or_else(|| err(0, format!("missing required key `{k}`")))
        };
        let delimiter = match keys.get("delimiter").map(String::as_str) {
            None | Some(",") => b',',
            Some("tab") | Some("\\t") => b'\t',
            Some(d) if d.len() == 1 => d.as_bytes()[0],
            Some(d) => return Err(err(0, format!("delimiter must be one byte or `tab`, got `{d}`"))),
        };
        Ok(ColumnMapping {
            pair_id: required("pair_id")?.split('+').map(|c| c.trim().to_string()).collect(),
            group: required("group")?,
            text: required("text")?,
            gold_emotion: keys.get("gold_emotion").cloned(),
            sentence_id: keys.get("sentence_id").cloned(),
            template_id: keys.get("template_id").cloned(),
            domain: keys.get("domain").cloned(),
            delimiter,
            group_values,
        })
    }

    fn group(&self, raw: &str) -> Result<Group, UnknownLabel> {
        match self.group_values.get(raw.trim()) {
            Some(g) => Ok(*g),
            None => raw.parse(),
        }
    }
}

/// Result of [`ingest_corpus`]: `rows_in = records.len() + dropped_rows`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ingested {
    pub records: Vec<PairRecord>,
    pub rows_in: usize,
    /// Rows whose gold emotion is outside the four basic emotions.
    pub dropped_rows: usize,
}

/// Reads a delimiter-separated corpus into validated records.
pub fn ingest_corpus(path: impl AsRef<Path>, corpus_tag: &str, mapping: &ColumnMapping) -> Result<Ingested, PairError> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let file = fs::File::open(path).map_err(|source| PairError::Io { path: name.clone(), source })?;
    ingest_reader(file, &name, corpus_tag, mapping)
}

pub fn ingest_reader(
    reader: impl std::io::Read,
    name: &str,
    corpus_tag: &str,
    mapping: &ColumnMapping,
) -> Result<Ingested, PairError> {
    let csv_err = |source| PairError::Csv { path: name.to_string(), source };
    let mut rdr = csv::ReaderBuilder::new().delimiter(mapping.delimiter).flexible(false).from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let col = |c: &str| {
        headers
            .iter()
            .position(|h| h.trim() == c)
            .ok_or_else(|| PairError::MissingColumn { path: name.to_string(), column: c.to_string() })
    };
    let pair_cols = mapping.pair_id.iter().map(|c| col(c)).collect::<Result<Vec<_>, _>>()?;
    let group_col = col(&mapping.group)?;
    let text_col = col(&mapping.text)?;
    let gold_col = mapping.gold_emotion.as_deref().map(col).transpose()?;
    let sid_col = mapping.sentence_id.as_deref().map(col).transpose()?;
    let tpl_col = mapping.template_id.as_deref().map(col).transpose()?;
    let dom_col = mapping.domain.as_deref().map(col).transpose()?;
    let tag_col = headers.iter().position(|h| h.trim() == "corpus_tag");

    let mut records = Vec::new();
    let mut rows_in = 0;
    let mut dropped_rows = 0;
    let mut seen_pairs: HashSet<(String, Group)> = HashSet::new();
    let mut seen_sentences: HashSet<String> = HashSet::new();

    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let line = i + 2;
        rows_in += 1;
        let field = |c: usize| row.get(c).unwrap_or("").trim();

        let gold_emotion = match gold_col {
            None => None,
            Some(c) => match field(c).parse::<Emotion>() {
                Ok(e) => Some(e),
                // An empty gold field in a normalized file means "no gold".
                Err(_) if field(c).is_empty() && mapping.gold_emotion.as_deref() == Some("gold_emotion") => None,
                Err(_) => {
                    dropped_rows += 1;
                    continue;
                }
            },
        };
        let group = mapping.group(field(group_col)).map_err(|label| PairError::Label { path: name.to_string(), row: line, label })?;
        let domain = group.domain();
        if let Some(c) = dom_col {
            let stated: Domain =
                field(c).parse().map_err(|label| PairError::Label { path: name.to_string(), row: line, label })?;
            if stated != domain {
                return Err(PairError::DomainMismatch { path: name.to_string(), row: line, stated, group, actual: domain });
            }
        }
        let text = field(text_col);
        if text.is_empty() {
            return Err(PairError::EmptyText { path: name.to_string(), row: line });
        }
        let pair_id = pair_cols.iter().map(|&c| field(c)).collect::<Vec<_>>().join("|");
        if !seen_pairs.insert((pair_id.clone(), group)) {
            return Err(PairError::DuplicatePair { path: name.to_string(), pair_id, group });
        }
        let tag = tag_col.map(field).filter(|t| !t.is_empty()).unwrap_or(corpus_tag).to_string();
        let sentence_id = match sid_col.map(field).filter(|s| !s.is_empty()) {
            Some(s) => s.to_string(),
            None => format!("{tag}:{pair_id}:{group}"),
        };
        if !seen_sentences.insert(sentence_id.clone()) {
            return Err(PairError::DuplicateSentence { path: name.to_string(), sentence_id });
        }
        let template_id = tpl_col.map(field).filter(|s| !s.is_empty()).map(str::to_string);
        records.push(PairRecord {
            pair_id,
            domain,
            group,
            sentence_id,
            text: text.to_string(),
            gold_emotion,
            template_id,
            corpus_tag: tag,
        });
    }
    if dropped_rows > 0 {
        log::info!("{name}: dropped {dropped_rows} row(s) without one of the four emotions");
    }
    Ok(Ingested { records, rows_in, dropped_rows })
}

/// Reads a file in the normalized schema.
pub fn read_normalized(path: impl AsRef<Path>) -> Result<Vec<PairRecord>, PairError> {
    let path = path.as_ref();
    let ingested = ingest_corpus(path, "custom", &ColumnMapping::normalized())?;
    Ok(ingested.records)
}

/// Writes records in the normalized schema.
pub fn write_normalized(records: &[PairRecord], writer: impl std::io::Write) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(NORMALIZED_COLUMNS)?;
    for r in records {
        w.write_record([
            r.pair_id.as_str(),
            r.domain.name(),
            r.group.code(),
            r.sentence_id.as_str(),
            r.text.as_str(),
            r.gold_emotion.map(Emotion::name).unwrap_or(""),
            r.template_id.as_deref().unwrap_or(""),
            r.corpus_tag.as_str(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Records of two groups aligned on `pair_id`, ordered `(group_a, group_b)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPairing {
    pub domain: Domain,
    pub group_a: Group,
    pub group_b: Group,
    pub pairs: Vec<(PairRecord, PairRecord)>,
    /// Records of either group whose pair_id has no counterpart.
    pub excluded: usize,
}

impl GroupPairing {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Corpus tag shared by all pairs.
    pub fn corpus_tag(&self) -> &str {
        self.pairs.first().map(|(a, _)| a.corpus_tag.as_str()).unwrap_or("")
    }

    /// `"M×F"`-style label.
    pub fn label(&self) -> String {
        format!("{}×{}", self.group_a, self.group_b)
    }
}

/// Aligns the records of `g1` and `g2` within one domain on `pair_id`.
///
/// Pairs come out in `g1` record order. Records whose pair_id is missing on
/// the other side, or whose gold emotion, template or corpus tag disagree
/// with their counterpart, are excluded and counted.
pub fn build_pairing(records: &[PairRecord], domain: Domain, g1: Group, g2: Group) -> Result<GroupPairing, PairError> {
    if g1 == g2 {
        return Err(PairError::InvalidPairing { g1, g2, reason: "groups must differ".into() });
    }
    for g in [g1, g2] {
        if g.domain() != domain {
            return Err(PairError::InvalidPairing { g1, g2, reason: format!("{g} is not a {domain} group") });
        }
    }
    let side_b: HashMap<(&str, &str), &PairRecord> = records
        .iter()
        .filter(|r| r.group == g2 && r.domain == domain)
        .map(|r| ((r.corpus_tag.as_str(), r.pair_id.as_str()), r))
        .collect();
    let side_a: Vec<&PairRecord> = records.iter().filter(|r| r.group == g1 && r.domain == domain).collect();

    let mut pairs = Vec::new();
    let mut matched_b: BTreeSet<(&str, &str)> = BTreeSet::new();
    let mut excluded = 0;
    for a in &side_a {
        let key = (a.corpus_tag.as_str(), a.pair_id.as_str());
        match side_b.get(&key) {
            Some(b) if structurally_paired(a, b) => {
                matched_b.insert(key);
                pairs.push(((*a).clone(), (*b).clone()));
            }
            Some(b) => {
                log::warn!("pair {} differs in gold emotion or template between {g1} and {g2}", b.pair_id);
                excluded += 1;
            }
            None => excluded += 1,
        }
    }
    excluded += side_b.len() - matched_b.len();
    if excluded > 0 {
        log::info!("{domain} {g1}×{g2}: {excluded} record(s) without a counterpart excluded");
    }
    if pairs.is_empty() {
        return Err(PairError::NoAlignedPairs { domain, g1, g2 });
    }
    Ok(GroupPairing { domain, group_a: g1, group_b: g2, pairs, excluded })
}

fn structurally_paired(a: &PairRecord, b: &PairRecord) -> bool {
    let agree = |x: &Option<String>, y: &Option<String>| x.is_none() || y.is_none() || x == y;
    let gold_agree = a.gold_emotion.is_none() || b.gold_emotion.is_none() || a.gold_emotion == b.gold_emotion;
    a.corpus_tag == b.corpus_tag && gold_agree && agree(&a.template_id, &b.template_id)
}

/// Outcome of [`verify_minimal_pair`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum MinimalPairVerdict {
    /// Every differing token position holds a target term on both sides.
    Minimal,
    /// Token positions where the texts differ on a non-target term.
    NonMinimal { positions: Vec<usize> },
    LengthMismatch { len_a: usize, len_b: usize },
}

/// Checks that two texts differ only at positions occupied by target terms.
pub fn verify_minimal_pair(a: &str, b: &str, lexicon: &Lexicon) -> MinimalPairVerdict {
    let ta = tokenize(a);
    let tb = tokenize(b);
    if ta.len() != tb.len() {
        return MinimalPairVerdict::LengthMismatch { len_a: ta.len(), len_b: tb.len() };
    }
    let is_target = |t: &str| !lexicon.mask(t).groups_only().is_empty();
    let positions: Vec<usize> = ta
        .iter()
        .zip(&tb)
        .enumerate()
        .filter(|(_, (x, y))| x != y && !(is_target(x) && is_target(y)))
        .map(|(i, _)| i)
        .collect();
    if positions.is_empty() {
        MinimalPairVerdict::Minimal
    } else {
        MinimalPairVerdict::NonMinimal { positions }
    }
}

mod optional_emotion {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::labels::Emotion;

    pub fn serialize<S: Serializer>(v: &Option<Emotion>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(v.map(Emotion::name).unwrap_or(""))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Emotion>, D::Error> {
        let s = String::deserialize(d)?;
        if s.trim().is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(serde::de::Error::custom)
        }
    }
}

mod optional_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<String>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(v.as_deref().unwrap_or(""))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
        let s = String::deserialize(d)?;
        Ok(if s.is_empty() { None } else { Some(s) })
    }
}
