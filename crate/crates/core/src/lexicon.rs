//! Emotion-term and target-term lexicons.
//!
//! File format: UTF-8, one term per line, grouped under `[label]` section
//! headers, `#` starts a comment. Emotion lexicons use `[anger]`, `[fear]`,
//! `[joy]`, `[sadness]`; target lexicons use `[domain:group]`, e.g.
//! `[gender:M]`.
//!
//! ```text
//! [joy]
//! happy
//! bliss
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::digest::sha256_hex;
use crate::labels::{Domain, Emotion, Group, UnknownLabel};
use crate::text::{is_apostrophe, normalize_term};

pub const SHIPPED_AFFECTIVE: &str = include_str!("../data/lexicons/affective.lex");
pub const SHIPPED_TARGETS: &str = include_str!("../data/lexicons/targets.lex");

/// Which kind of sections a lexicon file holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LexiconKind {
    Emotion,
    Target,
}

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("{source_name}: {source}")]
    Io {
        source_name: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{source_name}:{line}: malformed lexicon: {reason}")]
    Malformed { source_name: String, line: usize, reason: String },
    #[error("{source_name}:{line}: empty term")]
    EmptyTerm { source_name: String, line: usize },
    #[error("{source_name}:{line}: term `{term}` contains whitespace")]
    Whitespace { source_name: String, line: usize, term: String },
    #[error("{source_name}:{line}: {label}")]
    UnknownLabel { source_name: String, line: usize, label: UnknownLabel },
    #[error("term `{term}` is listed under both {first} and {second}; emotion sets must be disjoint")]
    EmotionOverlap { term: String, first: Emotion, second: Emotion },
}

/// A set a term may belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TermLabel {
    Emotion { emotion: Emotion },
    Target { domain: Domain, group: Group },
}

impl TermLabel {
    pub fn target(group: Group) -> Self {
        TermLabel::Target { domain: group.domain(), group }
    }
}

impl fmt::Display for TermLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermLabel::Emotion { emotion } => write!(f, "{emotion}"),
            TermLabel::Target { domain, group } => write!(f, "{domain}:{group}"),
        }
    }
}

/// Bit set over the four emotions (bits 0..4) and eight groups (bits 4..12).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct LabelMask(u16);

impl LabelMask {
    pub const EMPTY: LabelMask = LabelMask(0);
    const EMOTION_BITS: u16 = 0x000F;

    pub fn emotion(e: Emotion) -> Self {
        LabelMask(1 << e.index())
    }

    pub fn group(g: Group) -> Self {
        LabelMask(1 << (4 + g.index()))
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn has_emotion(self, e: Emotion) -> bool {
        self.0 & (1 << e.index()) != 0
    }

    pub fn has_group(self, g: Group) -> bool {
        self.0 & (1 << (4 + g.index())) != 0
    }

    pub fn emotions_only(self) -> Self {
        LabelMask(self.0 & Self::EMOTION_BITS)
    }

    pub fn groups_only(self) -> Self {
        LabelMask(self.0 & !Self::EMOTION_BITS)
    }

    pub fn emotions(self) -> impl Iterator<Item = Emotion> {
        Emotion::ALL.into_iter().filter(move |e| self.has_emotion(*e))
    }

    pub fn groups(self) -> impl Iterator<Item = Group> {
        Group::ALL.into_iter().filter(move |g| self.has_group(*g))
    }
}

impl std::ops::BitOr for LabelMask {
    type Output = LabelMask;
    fn bitor(self, rhs: Self) -> Self {
        LabelMask(self.0 | rhs.0)
    }
}

impl std::ops::BitOrAssign for LabelMask {
    fn bitor_assign(&mut self, rhs: Self) {
        self.0 |= rhs.0;
    }
}

/// Where a lexicon section came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub kind: LexiconKind,
    pub sha256: String,
    pub duplicates_collapsed: usize,
}

/// An entry of [`Lexicon::overlap_report`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Overlap {
    pub term: String,
    pub labels: Vec<TermLabel>,
}

/// Emotion terms and social-group target terms, immutable once built.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    emotion_terms: BTreeMap<Emotion, BTreeSet<String>>,
    target_terms: BTreeMap<Group, BTreeSet<String>>,
    provenance: Vec<Provenance>,
    index: FxHashMap<Box<str>, LabelMask>,
}

impl PartialEq for Lexicon {
    /// Two lexicons are equal when they hold the same term sets; provenance
    /// is ignored.
    fn eq(&self, other: &Self) -> bool {
        self.emotion_terms == other.emotion_terms && self.target_terms == other.target_terms
    }
}

impl Lexicon {
    /// Reads and validates a lexicon file.
    pub fn load(path: impl AsRef<Path>, kind: LexiconKind) -> Result<Self, LexiconError> {
        let path = path.as_ref();
        let source_name = path.display().to_string();
        let bytes = fs::read(path).map_err(|source| LexiconError::Io { source_name: source_name.clone(), source })?;
        let text = String::from_utf8(bytes).map_err(|e| LexiconError::Malformed {
            source_name: source_name.clone(),
            line: 0,
            reason: format!("not valid UTF-8 ({e})"),
        })?;
        Self::parse(&text, kind, &source_name)
    }

    /// Parses lexicon text; `source_name` is used in errors and provenance.
    pub fn parse(text: &str, kind: LexiconKind, source_name: &str) -> Result<Self, LexiconError> {
        let mut emotion_terms: BTreeMap<Emotion, BTreeSet<String>> = BTreeMap::new();
        let mut target_terms: BTreeMap<Group, BTreeSet<String>> = BTreeMap::new();
        let mut current: Option<TermLabel> = None;
        let mut duplicates = 0usize;
        let mut n_terms = 0usize;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let label = rest.strip_suffix(']').ok_or_else(|| LexiconError::Malformed {
                    source_name: source_name.to_string(),
                    line,
                    reason: format!("unterminated section header `{content}`"),
                })?;
                let parsed = parse_section(label.trim(), kind).map_err(|label| LexiconError::UnknownLabel {
                    source_name: source_name.to_string(),
                    line,
                    label,
                })?;
                match parsed {
                    TermLabel::Emotion { emotion } => {
                        emotion_terms.entry(emotion).or_default();
                    }
                    TermLabel::Target { group, .. } => {
                        target_terms.entry(group).or_default();
                    }
                }
                current = Some(parsed);
                continue;
            }

            let section = current.ok_or_else(|| LexiconError::Malformed {
                source_name: source_name.to_string(),
                line,
                reason: "term before any section header".into(),
            })?;
            let term = validate_term(content, source_name, line)?;
            let set = match section {
                TermLabel::Emotion { emotion } => emotion_terms.entry(emotion).or_default(),
                TermLabel::Target { group, .. } => target_terms.entry(group).or_default(),
            };
            n_terms += 1;
            if !set.insert(term.clone()) {
                duplicates += 1;
                log::warn!("{source_name}:{line}: duplicate term `{term}` under [{section}] collapsed");
            }
        }

        if n_terms == 0 {
            return Err(LexiconError::Malformed {
                source_name: source_name.to_string(),
                line: 0,
                reason: "no terms found".into(),
            });
        }

        let provenance = Provenance {
            source: source_name.to_string(),
            kind,
            sha256: sha256_hex(text.as_bytes()),
            duplicates_collapsed: duplicates,
        };
        Self::build(emotion_terms, target_terms, vec![provenance])
    }

    /// Builds a lexicon from in-memory sets; terms are normalized.
    pub fn from_sets(
        emotions: impl IntoIterator<Item = (Emotion, Vec<String>)>,
        targets: impl IntoIterator<Item = (Group, Vec<String>)>,
    ) -> Result<Self, LexiconError> {
        let mut emotion_terms: BTreeMap<Emotion, BTreeSet<String>> = BTreeMap::new();
        for (e, terms) in emotions {
            let set = emotion_terms.entry(e).or_default();
            for t in terms {
                set.insert(validate_term(&t, "<memory>", 0)?);
            }
        }
        let mut target_terms: BTreeMap<Group, BTreeSet<String>> = BTreeMap::new();
        for (g, terms) in targets {
            let set = target_terms.entry(g).or_default();
            for t in terms {
                set.insert(validate_term(&t, "<memory>", 0)?);
            }
        }
        Self::build(emotion_terms, target_terms, Vec::new())
    }

    /// The affective and target lexicons bundled with the crate.
    pub fn shipped() -> Self {
        Self::shipped_emotions()
            .merge(Self::shipped_targets())
            .expect("shipped lexicons are consistent")
    }

    pub fn shipped_emotions() -> Self {
        Self::parse(SHIPPED_AFFECTIVE, LexiconKind::Emotion, "builtin:affective.lex")
            .expect("shipped affective lexicon is valid")
    }

    pub fn shipped_targets() -> Self {
        Self::parse(SHIPPED_TARGETS, LexiconKind::Target, "builtin:targets.lex")
            .expect("shipped target lexicon is valid")
    }

    fn build(
        emotion_terms: BTreeMap<Emotion, BTreeSet<String>>,
        target_terms: BTreeMap<Group, BTreeSet<String>>,
        provenance: Vec<Provenance>,
    ) -> Result<Self, LexiconError> {
        let mut index: FxHashMap<Box<str>, LabelMask> = FxHashMap::default();
        let mut owner: FxHashMap<&str, Emotion> = FxHashMap::default();
        for (&e, terms) in &emotion_terms {
            for t in terms {
                if let Some(&first) = owner.get(t.as_str()) {
                    return Err(LexiconError::EmotionOverlap { term: t.clone(), first, second: e });
                }
                owner.insert(t, e);
                *index.entry(t.as_str().into()).or_default() |= LabelMask::emotion(e);
            }
        }
        for (&g, terms) in &target_terms {
            for t in terms {
                *index.entry(t.as_str().into()).or_default() |= LabelMask::group(g);
            }
        }
        Ok(Lexicon { emotion_terms, target_terms, provenance, index })
    }

    /// Union of two lexicons (typically an emotion file and a target file).
    pub fn merge(self, other: Lexicon) -> Result<Self, LexiconError> {
        let mut emotion_terms = self.emotion_terms;
        for (e, terms) in other.emotion_terms {
            emotion_terms.entry(e).or_default().extend(terms);
        }
        let mut target_terms = self.target_terms;
        for (g, terms) in other.target_terms {
            target_terms.entry(g).or_default().extend(terms);
        }
        let mut provenance = self.provenance;
        provenance.extend(other.provenance);
        Self::build(emotion_terms, target_terms, provenance)
    }

    pub fn emotion_terms(&self) -> &BTreeMap<Emotion, BTreeSet<String>> {
        &self.emotion_terms
    }

    pub fn target_terms(&self) -> &BTreeMap<Group, BTreeSet<String>> {
        &self.target_terms
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    /// Groups that have a section in this lexicon.
    pub fn groups(&self) -> impl Iterator<Item = Group> + '_ {
        self.target_terms.keys().copied()
    }

    pub fn emotion_counts(&self) -> BTreeMap<Emotion, usize> {
        self.emotion_terms.iter().map(|(e, s)| (*e, s.len())).collect()
    }

    pub fn target_counts(&self) -> BTreeMap<Group, usize> {
        self.target_terms.iter().map(|(g, s)| (*g, s.len())).collect()
    }

    /// Label mask of an already case-folded token.
    #[inline]
    pub fn mask(&self, token: &str) -> LabelMask {
        self.index.get(token).copied().unwrap_or_default()
    }

    /// Every emotion and every (domain, group) whose term set contains the
    /// token. The token must already be case-folded.
    pub fn classify_token(&self, token: &str) -> BTreeSet<TermLabel> {
        let mask = match self.index.get(token) {
            Some(m) => *m,
            None if token.chars().any(|c| c != '\'' && is_apostrophe(c)) => {
                self.mask(&crate::text::normalize_apostrophes(token))
            }
            None => LabelMask::EMPTY,
        };
        mask_labels(mask).collect()
    }

    /// Terms that appear in more than one set, sorted by term.
    pub fn overlap_report(&self) -> Vec<Overlap> {
        let mut out: Vec<Overlap> = self
            .index
            .iter()
            .filter_map(|(term, mask)| {
                let labels: Vec<TermLabel> = mask_labels(*mask).collect();
                (labels.len() > 1).then(|| Overlap { term: term.to_string(), labels })
            })
            .collect();
        out.sort_by(|a, b| a.term.cmp(&b.term));
        out
    }

    /// Serializes the sections of the given kind back to the file format.
    pub fn to_lex_string(&self, kind: LexiconKind) -> String {
        let mut out = String::new();
        match kind {
            LexiconKind::Emotion => {
                for (e, terms) in &self.emotion_terms {
                    out.push_str(&format!("[{e}]\n"));
                    for t in terms {
                        out.push_str(t);
                        out.push('\n');
                    }
                }
            }
            LexiconKind::Target => {
                for (g, terms) in &self.target_terms {
                    out.push_str(&format!("[{}:{}]\n", g.domain(), g));
                    for t in terms {
                        out.push_str(t);
                        out.push('\n');
                    }
                }
            }
        }
        out
    }
}

fn mask_labels(mask: LabelMask) -> impl Iterator<Item = TermLabel> {
    mask.emotions()
        .map(|emotion| TermLabel::Emotion { emotion })
        .chain(mask.groups().map(TermLabel::target))
}

fn parse_section(label: &str, kind: LexiconKind) -> Result<TermLabel, UnknownLabel> {
    match kind {
        LexiconKind::Emotion => Ok(TermLabel::Emotion { emotion: label.parse()? }),
        LexiconKind::Target => {
            let (domain, group) = label.split_once(':').ok_or_else(|| UnknownLabel {
                kind: "target section",
                value: label.to_string(),
            })?;
            let domain: Domain = domain.parse()?;
            let group: Group = group.parse()?;
            if group.domain() != domain {
                return Err(UnknownLabel { kind: "group for this domain", value: label.to_string() });
            }
            Ok(TermLabel::target(group))
        }
    }
}

fn validate_term(raw: &str, source_name: &str, line: usize) -> Result<String, LexiconError> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(LexiconError::EmptyTerm { source_name: source_name.to_string(), line });
    }
    if raw.chars().any(char::is_whitespace) {
        return Err(LexiconError::Whitespace { source_name: source_name.to_string(), line, term: raw.to_string() });
    }
    let term = normalize_term(raw);
    let valid_chars = term.chars().all(|c| c.is_alphanumeric() || c == '-' || c == '\'');
    let valid_edges = !term.starts_with(['-', '\'']) && !term.ends_with(['-', '\'']);
    if !valid_chars || !valid_edges {
        return Err(LexiconError::Malformed {
            source_name: source_name.to_string(),
            line,
            reason: format!("term `{raw}` can never match a token"),
        });
    }
    Ok(term)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emo(e: Emotion) -> TermLabel {
        TermLabel::Emotion { emotion: e }
    }

    #[test]
    fn shipped_cardinalities() {
        let lex = Lexicon::shipped();
        let e = lex.emotion_counts();
        assert_eq!(e[&Emotion::Anger], 162);
        assert_eq!(e[&Emotion::Fear], 143);
        assert_eq!(e[&Emotion::Joy], 222);
        assert_eq!(e[&Emotion::Sadness], 208);
        assert_eq!(e.values().sum::<usize>(), 735);
        let t = lex.target_counts();
        assert_eq!((t[&Group::M], t[&Group::F], t[&Group::Nb]), (199, 211, 97));
        assert_eq!((t[&Group::AA], t[&Group::EA]), (82, 85));
        assert_eq!((t[&Group::Mu], t[&Group::Jw], t[&Group::Ch]), (122, 111, 99));
    }

    #[test]
    fn classify() {
        let lex = Lexicon::shipped();
        assert_eq!(lex.classify_token("happy"), BTreeSet::from([emo(Emotion::Joy)]));
        assert_eq!(
            lex.classify_token("nephews"),
            BTreeSet::from([TermLabel::target(Group::M), TermLabel::target(Group::F)])
        );
        assert!(lex.classify_token("zzzz").is_empty());
        // The typographic apostrophe in the shipped list is normalized.
        assert_eq!(lex.classify_token("ma'am"), BTreeSet::from([TermLabel::target(Group::F)]));
        assert_eq!(lex.classify_token("ma\u{2019}am"), lex.classify_token("ma'am"));
    }

    #[test]
    fn overlap_report_shipped() {
        let report = Lexicon::shipped_targets().overlap_report();
        let nephews = report.iter().find(|o| o.term == "nephews").expect("nephews overlap");
        assert_eq!(nephews.labels, vec![TermLabel::target(Group::M), TermLabel::target(Group::F)]);
    }

    #[test]
    fn overlap_report_constructed() {
        let lex = Lexicon::from_sets([(Emotion::Joy, vec!["a".into()])], [(Group::M, vec!["b".into()])]).unwrap();
        assert!(lex.overlap_report().is_empty());

        let lex = Lexicon::from_sets([(Emotion::Joy, vec!["a".into()])], [(Group::F, vec!["a".into()])]).unwrap();
        assert_eq!(
            lex.overlap_report(),
            vec![Overlap { term: "a".into(), labels: vec![emo(Emotion::Joy), TermLabel::target(Group::F)] }]
        );
    }

    #[test]
    fn emotion_sets_must_be_disjoint() {
        let err = Lexicon::parse("[joy]\na\n[anger]\na\n", LexiconKind::Emotion, "t").unwrap_err();
        assert!(matches!(err, LexiconError::EmotionOverlap { ref term, .. } if term == "a"), "{err}");
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(Lexicon::parse("", LexiconKind::Emotion, "t"), Err(LexiconError::Malformed { .. })));
        assert!(matches!(
            Lexicon::parse("# only a comment\n", LexiconKind::Emotion, "t"),
            Err(LexiconError::Malformed { .. })
        ));
        assert!(matches!(
            Lexicon::parse("happy\n", LexiconKind::Emotion, "t"),
            Err(LexiconError::Malformed { line: 1, .. })
        ));
        assert!(matches!(
            Lexicon::parse("[joy]\nvery happy\n", LexiconKind::Emotion, "t"),
            Err(LexiconError::Whitespace { line: 2, .. })
        ));
        assert!(matches!(
            Lexicon::parse("[surprise]\nwow\n", LexiconKind::Emotion, "t"),
            Err(LexiconError::UnknownLabel { line: 1, .. })
        ));
        assert!(matches!(
            Lexicon::parse("[gender:EA]\nwow\n", LexiconKind::Target, "t"),
            Err(LexiconError::UnknownLabel { .. })
        ));
        assert!(matches!(
            Lexicon::parse("[martian:M]\nwow\n", LexiconKind::Target, "t"),
            Err(LexiconError::UnknownLabel { .. })
        ));
        assert!(matches!(
            Lexicon::parse("[joy]\nhap.py\n", LexiconKind::Emotion, "t"),
            Err(LexiconError::Malformed { line: 2, .. })
        ));
    }

    #[test]
    fn duplicates_collapse() {
        let lex = Lexicon::parse("[joy]\nHappy\nhappy\n[fear]\nscared\n", LexiconKind::Emotion, "t").unwrap();
        assert_eq!(lex.emotion_counts()[&Emotion::Joy], 1);
        assert_eq!(lex.provenance()[0].duplicates_collapsed, 1);
    }

    #[test]
    fn round_trip() {
        let lex = Lexicon::shipped();
        let again = Lexicon::parse(&lex.to_lex_string(LexiconKind::Emotion), LexiconKind::Emotion, "e")
            .unwrap()
            .merge(Lexicon::parse(&lex.to_lex_string(LexiconKind::Target), LexiconKind::Target, "t").unwrap())
            .unwrap();
        assert_eq!(again, lex);
        assert_eq!(again.emotion_counts(), lex.emotion_counts());
        assert_eq!(again.target_counts(), lex.target_counts());
    }

    #[test]
    fn classify_is_pure() {
        let lex = Lexicon::shipped();
        for tok in ["he", "wife", "fear", "the", "hunter"] {
            assert_eq!(lex.classify_token(tok), lex.classify_token(tok));
        }
        assert!(lex.classify_token("the").is_empty());
    }
}
