use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::labels::{Domain, Emotion, Group};
use crate::lexicon::{LabelMask, Lexicon};
use crate::stats::sample_stats;

/// How emotion occurrences are counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountingMode {
    /// At most one occurrence per emotion per sentence.
    #[default]
    Sentence,
    /// Every matching token counts toward `occ`; co-occurrence stays
    /// per-sentence.
    Token,
}

/// Emotion occurrence and emotion × group co-occurrence counters.
///
/// Counters only ever grow and [`AffectCounts::merge`] is plain addition, so
/// partial counts from any split of a corpus on sentence boundaries combine
/// to the same result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "CountsRepr", try_from = "CountsRepr")]
pub struct AffectCounts {
    mode: CountingMode,
    tracked: LabelMask,
    occ: [u64; 4],
    coocc: [[u64; 4]; 8],
    sentences_scanned: u64,
    tokens_scanned: u64,
}

impl AffectCounts {
    /// Zero counts tracking every group that has a section in `lexicon`.
    pub fn new(lexicon: &Lexicon, mode: CountingMode) -> Self {
        Self::for_groups(lexicon.groups(), mode)
    }

    pub fn for_groups(groups: impl IntoIterator<Item = Group>, mode: CountingMode) -> Self {
        let mut tracked = LabelMask::EMPTY;
        for g in groups {
            tracked |= LabelMask::group(g);
        }
        AffectCounts { mode, tracked, occ: [0; 4], coocc: [[0; 4]; 8], sentences_scanned: 0, tokens_scanned: 0 }
    }

    pub fn mode(&self) -> CountingMode {
        self.mode
    }

    pub fn occ(&self, e: Emotion) -> u64 {
        self.occ[e.index()]
    }

    pub fn coocc(&self, e: Emotion, g: Group) -> u64 {
        self.coocc[g.index()][e.index()]
    }

    pub fn sentences_scanned(&self) -> u64 {
        self.sentences_scanned
    }

    pub fn tokens_scanned(&self) -> u64 {
        self.tokens_scanned
    }

    pub fn tracked_groups(&self) -> impl Iterator<Item = Group> {
        self.tracked.groups()
    }

    /// Records one sentence given the union of its tokens' label masks and,
    /// in token mode, per-emotion matching token counts.
    #[inline]
    pub(crate) fn record_sentence(&mut self, mask: LabelMask, emotion_tokens: &[u64; 4], n_tokens: u64) {
        self.sentences_scanned += 1;
        self.tokens_scanned += n_tokens;
        if mask.emotions_only().is_empty() {
            return;
        }
        for e in mask.emotions() {
            self.occ[e.index()] += match self.mode {
                CountingMode::Sentence => 1,
                CountingMode::Token => emotion_tokens[e.index()],
            };
        }
        for g in mask.groups_only().groups() {
            for e in mask.emotions() {
                self.coocc[g.index()][e.index()] += 1;
            }
        }
    }

    /// Adds `other` into `self`. Both must use the same counting mode.
    pub fn merge(&mut self, other: &AffectCounts) {
        assert_eq!(self.mode, other.mode, "cannot merge counts from different counting modes");
        self.tracked |= other.tracked;
        for i in 0..4 {
            self.occ[i] += other.occ[i];
        }
        for g in 0..8 {
            for e in 0..4 {
                self.coocc[g][e] += other.coocc[g][e];
            }
        }
        self.sentences_scanned += other.sentences_scanned;
        self.tokens_scanned += other.tokens_scanned;
    }

    /// Counts with the given totals; `sentences_scanned` and
    /// `tokens_scanned` are zero. Groups listed in `coocc` are tracked.
    pub fn from_totals(mode: CountingMode, occ: [u64; 4], coocc: &[(Group, [u64; 4])]) -> Self {
        let mut c = Self::for_groups(coocc.iter().map(|(g, _)| *g), mode);
        c.occ = occ;
        for (g, row) in coocc {
            c.coocc[g.index()] = *row;
        }
        c
    }

    pub fn merged(mut self, other: &AffectCounts) -> Self {
        self.merge(other);
        self
    }
}

/// Serialized layout: `occ` keyed by emotion, `coocc` nested
/// domain → group → emotion.
#[derive(Serialize, Deserialize)]
struct CountsRepr {
    mode: CountingMode,
    sentences_scanned: u64,
    tokens_scanned: u64,
    occ: BTreeMap<Emotion, u64>,
    coocc: BTreeMap<Domain, BTreeMap<Group, BTreeMap<Emotion, u64>>>,
}

impl From<AffectCounts> for CountsRepr {
    fn from(c: AffectCounts) -> Self {
        let occ = Emotion::ALL.iter().map(|e| (*e, c.occ(*e))).collect();
        let mut coocc: BTreeMap<Domain, BTreeMap<Group, BTreeMap<Emotion, u64>>> = BTreeMap::new();
        for g in c.tracked_groups() {
            let row = Emotion::ALL.iter().map(|e| (*e, c.coocc(*e, g))).collect();
            coocc.entry(g.domain()).or_default().insert(g, row);
        }
        CountsRepr {
            mode: c.mode,
            sentences_scanned: c.sentences_scanned,
            tokens_scanned: c.tokens_scanned,
            occ,
            coocc,
        }
    }
}

impl TryFrom<CountsRepr> for AffectCounts {
    type Error = String;

    fn try_from(r: CountsRepr) -> Result<Self, Self::Error> {
        let groups: Vec<Group> = r.coocc.values().flat_map(|m| m.keys().copied()).collect();
        let mut c = AffectCounts::for_groups(groups, r.mode);
        c.sentences_scanned = r.sentences_scanned;
        c.tokens_scanned = r.tokens_scanned;
        for (e, n) in r.occ {
            c.occ[e.index()] = n;
        }
        for (d, groups) in r.coocc {
            for (g, row) in groups {
                if g.domain() != d {
                    return Err(format!("group {g} listed under domain {d}"));
                }
                for (e, n) in row {
                    c.coocc[g.index()][e.index()] = n;
                }
            }
        }
        Ok(c)
    }
}

/// Per-emotion totals with their sum and sample standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccurrenceSummary {
    pub occ: BTreeMap<Emotion, u64>,
    pub total_affective: u64,
    /// Sample standard deviation (divisor N − 1) of the four counts.
    pub stddev: f64,
}

impl OccurrenceSummary {
    pub fn from_counts(occ: [u64; 4]) -> Self {
        let xs: Vec<f64> = occ.iter().map(|&n| n as f64).collect();
        let (_, stddev) = sample_stats(&xs).expect("four values");
        OccurrenceSummary {
            occ: Emotion::ALL.iter().map(|e| (*e, occ[e.index()])).collect(),
            total_affective: occ.iter().sum(),
            stddev,
        }
    }
}

pub fn summarize_occurrence(counts: &AffectCounts) -> OccurrenceSummary {
    OccurrenceSummary::from_counts(counts.occ)
}

/// Co-occurrence percentages per group: for each group the four emotion
/// shares of its total co-occurrence count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooccurrenceTable {
    pub columns: BTreeMap<Group, [f64; 4]>,
}

impl CooccurrenceTable {
    pub fn percent(&self, e: Emotion, g: Group) -> Option<f64> {
        self.columns.get(&g).map(|col| col[e.index()])
    }

    pub fn groups_in(&self, d: Domain) -> impl Iterator<Item = Group> + '_ {
        self.columns.keys().copied().filter(move |g| g.domain() == d)
    }
}

/// `pct[E,T] = 100 · coocc[E,T] / Σ_E' coocc[E',T]`; all zeros when the group
/// never co-occurs.
pub fn cooccurrence_percentages(counts: &AffectCounts) -> CooccurrenceTable {
    let columns = counts
        .tracked_groups()
        .map(|g| {
            let col = counts.coocc[g.index()];
            let total: u64 = col.iter().sum();
            let mut pct = [0.0; 4];
            if total > 0 {
                for (p, &n) in pct.iter_mut().zip(col.iter()) {
                    *p = 100.0 * n as f64 / total as f64;
                }
            }
            (g, pct)
        })
        .collect();
    CooccurrenceTable { columns }
}

#[cfg(test)]
pub(crate) fn counts_with(occ: [u64; 4], coocc: &[(Group, [u64; 4])]) -> AffectCounts {
    AffectCounts::from_totals(CountingMode::Sentence, occ, coocc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_table_rows() {
        let s = OccurrenceSummary::from_counts([984, 1472, 1579, 1131]);
        assert_eq!(s.total_affective, 5166);
        assert!((s.stddev - 280.21).abs() < 0.01);

        let s = OccurrenceSummary::from_counts([533_111, 745_221, 2_479_326, 1_802_466]);
        assert_eq!(s.total_affective, 5_560_124);
        assert!((s.stddev - 914_103.94).abs() < 0.5);

        let s = OccurrenceSummary::from_counts([10; 4]);
        assert_eq!((s.total_affective, s.stddev), (40, 0.0));
    }

    #[test]
    fn percentages() {
        let c = counts_with(
            [10, 10, 10, 10],
            &[(Group::M, [1, 1, 1, 1]), (Group::F, [0, 0, 3, 1]), (Group::Nb, [0, 0, 0, 0])],
        );
        let t = cooccurrence_percentages(&c);
        assert_eq!(t.columns[&Group::M], [25.0; 4]);
        assert_eq!(t.columns[&Group::F], [0.0, 0.0, 75.0, 25.0]);
        assert_eq!(t.columns[&Group::Nb], [0.0; 4]);
        assert!(t.percent(Emotion::Joy, Group::EA).is_none());
    }

    #[test]
    fn json_round_trip() {
        let c = counts_with([3, 0, 2, 1], &[(Group::M, [1, 0, 2, 0]), (Group::Jw, [0, 0, 0, 1])]);
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"religion\":{\"Jw\""), "{json}");
        let back: AffectCounts = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn merge_adds() {
        let a = counts_with([1, 2, 3, 4], &[(Group::M, [1, 1, 0, 0])]);
        let b = counts_with([1, 0, 0, 0], &[(Group::F, [1, 0, 0, 0])]);
        let m = a.clone().merged(&b);
        assert_eq!(m.occ(Emotion::Anger), 2);
        assert_eq!(m.coocc(Emotion::Anger, Group::M), 1);
        assert_eq!(m.coocc(Emotion::Anger, Group::F), 1);
        assert_eq!(m.tracked_groups().collect::<Vec<_>>(), vec![Group::M, Group::F]);
        assert_eq!(b.clone().merged(&a), m);
    }
}
