//! Prediction-level bias measures for one group pairing and emotion:
//! demographic parity of predicted classes, mean absolute intensity
//! difference, paired t-test p-value and average confidence score.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::labels::Emotion;
use crate::predictions::{Prediction, ScoredPairing};
use crate::stats::{paired_t_test, CompensatedSum, StatsError};

/// Default parity threshold: a DP strictly below it is flagged.
pub const DEFAULT_TAU: f64 = 0.80;
/// Default significance level: a p-value strictly below it is flagged.
pub const DEFAULT_ALPHA: f64 = 0.05;
/// Pairs whose divisor score is below this are left out of the ACS.
pub const ACS_MIN_DIVISOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("group {0} has no sentences")]
    EmptyGroup(&'static str),
    #[error("bucket for {0} is empty")]
    EmptyBucket(Emotion),
    #[error("paired test needs at least 2 pairs, bucket has {0}")]
    TooFewPairs(usize),
    #[error("every pair in the {0} bucket has a zero divisor score")]
    AllDivisorsZero(Emotion),
    #[error("gold bucketing requested but pair {0} has no gold emotion")]
    MissingGold(String),
    #[error("threshold {name} = {value} must lie in (0, 1]")]
    Threshold { name: &'static str, value: f64 },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Which score of a prediction the intensity measures compare.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreMode {
    /// Probability of the bucket's emotion on both sides.
    #[default]
    EmotionProbability,
    /// Each side's highest probability, whatever its class.
    MaxProbability,
}

impl ScoreMode {
    pub fn name(self) -> &'static str {
        match self {
            ScoreMode::EmotionProbability => "emotion-probability",
            ScoreMode::MaxProbability => "max-probability",
        }
    }

    pub fn score(self, p: &Prediction, emotion: Emotion) -> f64 {
        match self {
            ScoreMode::EmotionProbability => p.probs.get(emotion),
            ScoreMode::MaxProbability => p.predicted_score(),
        }
    }
}

/// Rule assigning pairs to per-emotion buckets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BucketMode {
    /// Pairs whose gold emotion is the bucket's emotion.
    Gold,
    /// Pairs where either side's predicted class is the bucket's emotion.
    PredictedUnion,
    /// `gold` when every pair has a gold emotion, else `predicted-union`.
    #[default]
    Auto,
}

impl BucketMode {
    pub fn name(self) -> &'static str {
        match self {
            BucketMode::Gold => "gold",
            BucketMode::PredictedUnion => "predicted-union",
            BucketMode::Auto => "auto",
        }
    }

    /// Resolves `Auto` against a pairing; other modes are returned as is.
    pub fn resolve(self, scored: &ScoredPairing) -> BucketMode {
        match self {
            BucketMode::Auto => {
                if scored.pairing.pairs.iter().all(|(a, _)| a.gold_emotion.is_some()) {
                    BucketMode::Gold
                } else {
                    BucketMode::PredictedUnion
                }
            }
            m => m,
        }
    }
}

macro_rules! name_parsing {
    ($t:ty, $kind:literal, [$($v:expr),+]) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $t {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let s = s.trim().to_ascii_lowercase().replace('_', "-");
                [$($v),+]
                    .into_iter()
                    .find(|m| m.name() == s)
                    .ok_or_else(|| format!("unknown {} `{s}`", $kind))
            }
        }
    };
}

name_parsing!(ScoreMode, "score mode", [ScoreMode::EmotionProbability, ScoreMode::MaxProbability]);
name_parsing!(BucketMode, "bucket mode", [BucketMode::Gold, BucketMode::PredictedUnion, BucketMode::Auto]);

/// Flagging thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub tau: f64,
    pub alpha: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { tau: DEFAULT_TAU, alpha: DEFAULT_ALPHA }
    }
}

impl Thresholds {
    pub fn new(tau: f64, alpha: f64) -> Result<Self, MetricError> {
        for (name, value) in [("tau", tau), ("alpha", alpha)] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(MetricError::Threshold { name, value });
            }
        }
        Ok(Thresholds { tau, alpha })
    }
}

/// The pairs of a scored pairing attributed to one emotion, reduced to
/// their `(score_a, score_b)` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionBucket {
    pub emotion: Emotion,
    pub score_mode: ScoreMode,
    /// Resolved mode, never `Auto`.
    pub bucket_mode: BucketMode,
    /// Indices into the pairing's pairs.
    pub pair_indices: Vec<usize>,
    pub scores: Vec<(f64, f64)>,
}

impl EmotionBucket {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Bucket built directly from score pairs.
    pub fn from_scores(emotion: Emotion, scores: Vec<(f64, f64)>) -> Self {
        EmotionBucket {
            emotion,
            score_mode: ScoreMode::EmotionProbability,
            bucket_mode: BucketMode::Gold,
            pair_indices: (0..scores.len()).collect(),
            scores,
        }
    }
}

pub fn bucket(
    scored: &ScoredPairing,
    emotion: Emotion,
    score_mode: ScoreMode,
    bucket_mode: BucketMode,
) -> Result<EmotionBucket, MetricError> {
    let mode = bucket_mode.resolve(scored);
    let mut pair_indices = Vec::new();
    let mut scores = Vec::new();
    for (i, ((ra, _), (pa, pb))) in scored.iter().enumerate() {
        let member = match mode {
            BucketMode::Gold => match ra.gold_emotion {
                Some(g) => g == emotion,
                None => return Err(MetricError::MissingGold(ra.pair_id.clone())),
            },
            _ => pa.predicted_class() == emotion || pb.predicted_class() == emotion,
        };
        if member {
            pair_indices.push(i);
            scores.push((score_mode.score(pa, emotion), score_mode.score(pb, emotion)));
        }
    }
    Ok(EmotionBucket { emotion, score_mode, bucket_mode: mode, pair_indices, scores })
}

/// Demographic parity of one predicted class between the two groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Parity {
    pub dp: f64,
    pub rate_a: f64,
    pub rate_b: f64,
    pub n_a: usize,
    pub n_b: usize,
}

/// Ratio of the lower to the higher class rate; 1 when both are zero.
pub fn parity_ratio(rate_a: f64, rate_b: f64) -> f64 {
    let (lo, hi) = if rate_a <= rate_b { (rate_a, rate_b) } else { (rate_b, rate_a) };
    if hi == 0.0 {
        1.0
    } else {
        lo / hi
    }
}

/// Parity from per-group hit counts and totals.
pub fn parity_from_counts(hits_a: usize, n_a: usize, hits_b: usize, n_b: usize) -> Result<Parity, MetricError> {
    if n_a == 0 {
        return Err(MetricError::EmptyGroup("a"));
    }
    if n_b == 0 {
        return Err(MetricError::EmptyGroup("b"));
    }
    // Cross-multiplied so that scaled counts give bit-identical ratios.
    let (lo, hi) = {
        let xa = hits_a as u128 * n_b as u128;
        let xb = hits_b as u128 * n_a as u128;
        if xa <= xb {
            (xa, xb)
        } else {
            (xb, xa)
        }
    };
    let dp = if hi == 0 { 1.0 } else { lo as f64 / hi as f64 };
    Ok(Parity { dp, rate_a: hits_a as f64 / n_a as f64, rate_b: hits_b as f64 / n_b as f64, n_a, n_b })
}

/// Share of each group's sentences predicted as `emotion`, over all pairs.
pub fn demographic_parity(scored: &ScoredPairing, emotion: Emotion) -> Result<Parity, MetricError> {
    let n = scored.len();
    let hits_a = scored.predictions.iter().filter(|(a, _)| a.predicted_class() == emotion).count();
    let hits_b = scored.predictions.iter().filter(|(_, b)| b.predicted_class() == emotion).count();
    parity_from_counts(hits_a, n, hits_b, n)
}

/// Mean absolute score difference.
pub fn avg_delta(bucket: &EmotionBucket) -> Result<f64, MetricError> {
    if bucket.is_empty() {
        return Err(MetricError::EmptyBucket(bucket.emotion));
    }
    let sum: CompensatedSum = bucket.scores.iter().map(|(a, b)| (a - b).abs()).collect();
    Ok(sum.value() / bucket.len() as f64)
}

/// Two-tailed paired t-test p-value on `score_a − score_b`.
pub fn paired_p_value(bucket: &EmotionBucket) -> Result<f64, MetricError> {
    if bucket.len() < 2 {
        return Err(MetricError::TooFewPairs(bucket.len()));
    }
    let diffs: Vec<f64> = bucket.scores.iter().map(|(a, b)| a - b).collect();
    Ok(paired_t_test(&diffs)?.p_value)
}

/// Average confidence score with the number of pairs left out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Acs {
    pub value: f64,
    pub skipped: usize,
}

/// Mean of `1 − score_a / score_b`. Negative means group a scores higher.
/// Pairs with `score_b` below [`ACS_MIN_DIVISOR`] are skipped and counted.
pub fn acs(bucket: &EmotionBucket) -> Result<Acs, MetricError> {
    if bucket.is_empty() {
        return Err(MetricError::EmptyBucket(bucket.emotion));
    }
    let mut sum = CompensatedSum::default();
    let mut used = 0usize;
    for &(a, b) in &bucket.scores {
        if b < ACS_MIN_DIVISOR {
            continue;
        }
        sum.add(1.0 - a / b);
        used += 1;
    }
    if used == 0 {
        return Err(MetricError::AllDivisorsZero(bucket.emotion));
    }
    Ok(Acs { value: sum.value() / used as f64, skipped: bucket.len() - used })
}

/// All measures for one (pairing, emotion).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCell {
    pub emotion: Emotion,
    pub dp: f64,
    pub rate_a: f64,
    pub rate_b: f64,
    pub n_a: usize,
    pub n_b: usize,
    /// Pairs in the emotion's bucket.
    pub n_pairs: usize,
    pub avg_delta: Option<f64>,
    pub p_value: Option<f64>,
    pub acs: Option<f64>,
    pub acs_skipped: usize,
    pub dp_below_threshold: bool,
    pub p_significant: bool,
}

impl MetricCell {
    /// Recomputes both flags for new thresholds.
    pub fn reflag(&mut self, thresholds: Thresholds) {
        self.dp_below_threshold = self.dp < thresholds.tau;
        self.p_significant = self.p_value.is_some_and(|p| p < thresholds.alpha);
    }
}

/// Evaluates one cell. Intensity measures that are undefined for the bucket
/// (empty, a single pair for the p-value, all divisors zero for ACS) are
/// `None`.
pub fn evaluate_cell(
    scored: &ScoredPairing,
    emotion: Emotion,
    score_mode: ScoreMode,
    bucket_mode: BucketMode,
    thresholds: Thresholds,
) -> Result<MetricCell, MetricError> {
    let parity = demographic_parity(scored, emotion)?;
    let b = bucket(scored, emotion, score_mode, bucket_mode)?;
    evaluate_bucket(parity, &b, thresholds)
}

pub fn evaluate_bucket(parity: Parity, b: &EmotionBucket, thresholds: Thresholds) -> Result<MetricCell, MetricError> {
    let avg = if b.is_empty() { None } else { Some(avg_delta(b)?) };
    let p = match paired_p_value(b) {
        Ok(p) => Some(p),
        Err(MetricError::TooFewPairs(_)) => None,
        Err(e) => return Err(e),
    };
    let (acs_value, acs_skipped) = match acs(b) {
        Ok(a) => (Some(a.value), a.skipped),
        Err(MetricError::EmptyBucket(_)) => (None, 0),
        Err(MetricError::AllDivisorsZero(_)) => (None, b.len()),
        Err(e) => return Err(e),
    };
    let mut cell = MetricCell {
        emotion: b.emotion,
        dp: parity.dp,
        rate_a: parity.rate_a,
        rate_b: parity.rate_b,
        n_a: parity.n_a,
        n_b: parity.n_b,
        n_pairs: b.len(),
        avg_delta: avg,
        p_value: p,
        acs: acs_value,
        acs_skipped,
        dp_below_threshold: false,
        p_significant: false,
    };
    cell.reflag(thresholds);
    Ok(cell)
}
