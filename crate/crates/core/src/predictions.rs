//! Classifier prediction files and their join with sentence pairs.
//!
//! One JSON object per line:
//!
//! ```json
//! {"sentence_id":"s1","model_tag":"bert","probs":{"anger":0.1,"fear":0.2,"joy":0.6,"sadness":0.1}}
//! ```
//!
//! `predicted_class` and `predicted_score` may be present; they are always
//! recomputed from `probs` and must agree when given.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::labels::Emotion;
use crate::pairs::{GroupPairing, PairRecord};

/// Allowed deviation of the probability sum from 1.
pub const SUM_TOLERANCE: f64 = 1e-4;
/// Allowed deviation of a stated `predicted_score` from the recomputed one.
const SCORE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum PredictionError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Json {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}:{line}: sentence {sentence_id}: {reason}")]
    Invalid { path: String, line: usize, sentence_id: String, reason: String },
    #[error("{path}:{line}: duplicate sentence_id `{sentence_id}`")]
    Duplicate { path: String, line: usize, sentence_id: String },
    #[error("{} sentence(s) have no prediction: {}", .ids.len(), preview(.ids))]
    Missing { ids: Vec<String> },
    #[error("mixed model tags within one pairing: {0:?}")]
    MixedModelTags(Vec<String>),
}

fn preview(ids: &[String]) -> String {
    const SHOWN: usize = 20;
    let mut s = ids.iter().take(SHOWN).cloned().collect::<Vec<_>>().join(", ");
    if ids.len() > SHOWN {
        s.push_str(&format!(", … ({} more)", ids.len() - SHOWN));
    }
    s
}

/// Emotion probability vector in the order anger, fear, joy, sadness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Probs {
    pub anger: f64,
    pub fear: f64,
    pub joy: f64,
    pub sadness: f64,
}

impl Probs {
    pub fn from_array(p: [f64; 4]) -> Self {
        Probs { anger: p[0], fear: p[1], joy: p[2], sadness: p[3] }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.anger, self.fear, self.joy, self.sadness]
    }

    pub fn get(&self, e: Emotion) -> f64 {
        self.to_array()[e.index()]
    }

    /// Checks range and sum.
    pub fn validate(&self) -> Result<(), String> {
        let arr = self.to_array();
        for (e, p) in Emotion::ALL.iter().zip(arr) {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(format!("probability for {e} is {p}, outside [0, 1]"));
            }
        }
        let sum: f64 = arr.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(format!("probabilities sum to {sum}, not 1"));
        }
        Ok(())
    }

    /// Most probable emotion; ties go to the earliest of anger, fear, joy,
    /// sadness.
    pub fn argmax(&self) -> Emotion {
        let arr = self.to_array();
        let mut best = 0;
        for i in 1..4 {
            if arr[i] > arr[best] {
                best = i;
            }
        }
        Emotion::ALL[best]
    }

    pub fn max(&self) -> f64 {
        self.to_array().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A validated prediction for one sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub sentence_id: String,
    pub model_tag: String,
    pub probs: Probs,
}

impl Prediction {
    pub fn new(sentence_id: impl Into<String>, model_tag: impl Into<String>, probs: Probs) -> Result<Self, String> {
        probs.validate()?;
        Ok(Prediction { sentence_id: sentence_id.into(), model_tag: model_tag.into(), probs })
    }

    pub fn predicted_class(&self) -> Emotion {
        self.probs.argmax()
    }

    pub fn predicted_score(&self) -> f64 {
        self.probs.max()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionLine {
    sentence_id: String,
    model_tag: String,
    probs: Probs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    predicted_class: Option<Emotion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    predicted_score: Option<f64>,
}

/// Predictions keyed by sentence id, in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionSet {
    records: Vec<Prediction>,
    index: HashMap<String, usize>,
}

impl PredictionSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, sentence_id: &str) -> Option<&Prediction> {
        self.index.get(sentence_id).map(|&i| &self.records[i])
    }

    pub fn records(&self) -> &[Prediction] {
        &self.records
    }

    /// Distinct model tags in first-seen order.
    pub fn model_tags(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.records.iter().filter(|p| seen.insert(p.model_tag.as_str())).map(|p| p.model_tag.clone()).collect()
    }

    /// Predictions carrying `model_tag`.
    pub fn for_model(&self, model_tag: &str) -> PredictionSet {
        let mut out = PredictionSet::default();
        for p in self.records.iter().filter(|p| p.model_tag == model_tag) {
            out.index.insert(p.sentence_id.clone(), out.records.len());
            out.records.push(p.clone());
        }
        out
    }

    /// Adds one prediction; rejects a second prediction for the same sentence.
    pub fn push(&mut self, p: Prediction) -> Result<(), Prediction> {
        if self.index.contains_key(&p.sentence_id) {
            return Err(p);
        }
        self.index.insert(p.sentence_id.clone(), self.records.len());
        self.records.push(p);
        Ok(())
    }

    pub fn from_predictions(preds: impl IntoIterator<Item = Prediction>) -> Result<Self, PredictionError> {
        let mut set = PredictionSet::default();
        for (i, p) in preds.into_iter().enumerate() {
            set.push(p).map_err(|p| PredictionError::Duplicate {
                path: "<memory>".into(),
                line: i + 1,
                sentence_id: p.sentence_id,
            })?;
        }
        Ok(set)
    }

    pub fn extend_from(&mut self, other: PredictionSet, path: &str) -> Result<(), PredictionError> {
        for (i, p) in other.records.into_iter().enumerate() {
            self.push(p).map_err(|p| PredictionError::Duplicate {
                path: path.to_string(),
                line: i + 1,
                sentence_id: p.sentence_id,
            })?;
        }
        Ok(())
    }
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<PredictionSet, PredictionError> {
    let path = path.as_ref();
    let name = path.display().to_string();
    let file = fs::File::open(path).map_err(|source| PredictionError::Io { path: name.clone(), source })?;
    parse_predictions(BufReader::new(file), &name)
}

pub fn parse_predictions(reader: impl BufRead, name: &str) -> Result<PredictionSet, PredictionError> {
    let mut set = PredictionSet::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| PredictionError::Io { path: name.to_string(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: PredictionLine = serde_json::from_str(&line)
            .map_err(|source| PredictionError::Json { path: name.to_string(), line: line_no, source })?;
        let invalid = |reason: String| PredictionError::Invalid {
            path: name.to_string(),
            line: line_no,
            sentence_id: raw.sentence_id.clone(),
            reason,
        };
        raw.probs.validate().map_err(invalid)?;
        let class = raw.probs.argmax();
        let score = raw.probs.max();
        if let Some(stated) = raw.predicted_class {
            if stated != class {
                return Err(invalid(format!("predicted_class {stated} disagrees with argmax {class}")));
            }
        }
        if let Some(stated) = raw.predicted_score {
            if (stated - score).abs() > SCORE_TOLERANCE {
                return Err(invalid(format!("predicted_score {stated} disagrees with max probability {score}")));
            }
        }
        let pred = Prediction { sentence_id: raw.sentence_id, model_tag: raw.model_tag, probs: raw.probs };
        set.push(pred).map_err(|p| PredictionError::Duplicate {
            path: name.to_string(),
            line: line_no,
            sentence_id: p.sentence_id,
        })?;
    }
    Ok(set)
}

/// Writes predictions as JSON lines including the derived class and score.
pub fn write_predictions<'a>(
    preds: impl IntoIterator<Item = &'a Prediction>,
    mut writer: impl Write,
) -> std::io::Result<()> {
    for p in preds {
        let line = PredictionLine {
            sentence_id: p.sentence_id.clone(),
            model_tag: p.model_tag.clone(),
            probs: p.probs,
            predicted_class: Some(p.predicted_class()),
            predicted_score: Some(p.predicted_score()),
        };
        serde_json::to_writer(&mut writer, &line)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

/// A [`GroupPairing`] with a prediction for both sides of every pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPairing {
    pub pairing: GroupPairing,
    /// Parallel to `pairing.pairs`.
    pub predictions: Vec<(Prediction, Prediction)>,
    pub model_tag: String,
    /// Predictions in the set that no sentence of this pairing used.
    pub unused_predictions: usize,
}

impl ScoredPairing {
    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(PairRecord, PairRecord), &(Prediction, Prediction))> {
        self.pairing.pairs.iter().zip(&self.predictions)
    }
}

/// Attaches predictions to both sides of every pair. Fails listing every
/// sentence id without a prediction.
pub fn join(pairing: GroupPairing, preds: &PredictionSet) -> Result<ScoredPairing, PredictionError> {
    let mut missing = Vec::new();
    let mut joined = Vec::with_capacity(pairing.pairs.len());
    for (a, b) in &pairing.pairs {
        let pa = preds.get(&a.sentence_id);
        let pb = preds.get(&b.sentence_id);
        if pa.is_none() {
            missing.push(a.sentence_id.clone());
        }
        if pb.is_none() {
            missing.push(b.sentence_id.clone());
        }
        if let (Some(pa), Some(pb)) = (pa, pb) {
            joined.push((pa.clone(), pb.clone()));
        }
    }
    if !missing.is_empty() {
        return Err(PredictionError::Missing { ids: missing });
    }
    let mut tags: Vec<String> = joined.iter().flat_map(|(a, b)| [a.model_tag.clone(), b.model_tag.clone()]).collect();
    tags.sort();
    tags.dedup();
    if tags.len() > 1 {
        return Err(PredictionError::MixedModelTags(tags));
    }
    let used: HashSet<&str> =
        pairing.pairs.iter().flat_map(|(a, b)| [a.sentence_id.as_str(), b.sentence_id.as_str()]).collect();
    let unused_predictions = preds.len() - used.len();
    if unused_predictions > 0 {
        log::debug!("{}: {unused_predictions} prediction(s) not used by this pairing", pairing.label());
    }
    Ok(ScoredPairing { model_tag: tags.pop().unwrap_or_default(), pairing, predictions: joined, unused_predictions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::{Domain, Group};
    use crate::pairs::build_pairing;
    use proptest::prelude::*;

    fn line(id: &str, p: [f64; 4]) -> String {
        format!(
            r#"{{"sentence_id":"{id}","model_tag":"m","probs":{{"anger":{},"fear":{},"joy":{},"sadness":{}}}}}"#,
            p[0], p[1], p[2], p[3]
        )
    }

    fn parse(text: &str) -> Result<PredictionSet, PredictionError> {
        parse_predictions(text.as_bytes(), "t")
    }

    #[test]
    fn derived_fields() {
        let set = parse(&line("s1", [0.1, 0.2, 0.6, 0.1])).unwrap();
        let p = set.get("s1").unwrap();
        assert_eq!(p.predicted_class(), Emotion::Joy);
        assert_eq!(p.predicted_score(), 0.6);

        let set = parse(&line("s2", [0.25; 4])).unwrap();
        assert_eq!(set.get("s2").unwrap().predicted_class(), Emotion::Anger);
    }

    #[test]
    fn rejects_invalid_records() {
        assert!(matches!(parse(&line("s", [0.2, 0.2, 0.2, 0.2])), Err(PredictionError::Invalid { .. })));
        assert!(matches!(parse(&line("s", [1.2, -0.2, 0.0, 0.0])), Err(PredictionError::Invalid { .. })));
        let two = format!("{}\n{}\n", line("s", [0.25; 4]), line("s", [0.25; 4]));
        assert!(matches!(parse(&two), Err(PredictionError::Duplicate { line: 2, .. })));
        let unknown = r#"{"sentence_id":"s","model_tag":"m","probs":{"anger":0.25,"fear":0.25,"joy":0.25,"surprise":0.25}}"#;
        assert!(matches!(parse(unknown), Err(PredictionError::Json { .. })));
        let extra = r#"{"sentence_id":"s","model_tag":"m","probs":{"anger":0.25,"fear":0.25,"joy":0.25,"sadness":0.25},"x":1}"#;
        assert!(matches!(parse(extra), Err(PredictionError::Json { .. })));
        let wrong_class = r#"{"sentence_id":"s","model_tag":"m","probs":{"anger":0.1,"fear":0.1,"joy":0.7,"sadness":0.1},"predicted_class":"fear"}"#;
        assert!(matches!(parse(wrong_class), Err(PredictionError::Invalid { .. })));
        let wrong_score = r#"{"sentence_id":"s","model_tag":"m","probs":{"anger":0.1,"fear":0.1,"joy":0.7,"sadness":0.1},"predicted_score":0.6}"#;
        assert!(matches!(parse(wrong_score), Err(PredictionError::Invalid { .. })));
    }

    #[test]
    fn error_names_record() {
        let err = parse(&line("bad-7", [0.5, 0.5, 0.5, 0.5])).unwrap_err();
        assert!(err.to_string().contains("bad-7"), "{err}");
    }

    fn records() -> Vec<PairRecord> {
        let mk = |pid: &str, g: Group| PairRecord {
            pair_id: pid.into(),
            domain: g.domain(),
            group: g,
            sentence_id: format!("{pid}{g}"),
            text: "x".into(),
            gold_emotion: None,
            template_id: None,
            corpus_tag: "c".into(),
        };
        vec![mk("1", Group::M), mk("1", Group::F), mk("2", Group::M), mk("2", Group::F)]
    }

    #[test]
    fn join_total_and_extras() {
        let pairing = build_pairing(&records(), Domain::Gender, Group::M, Group::F).unwrap();
        let text = ["1M", "1F", "2M", "2F", "9X"].iter().map(|id| line(id, [0.25; 4])).collect::<Vec<_>>().join("\n");
        let scored = join(pairing.clone(), &parse(&text).unwrap()).unwrap();
        assert_eq!(scored.len(), 2);
        assert_eq!(scored.unused_predictions, 1);
        assert_eq!(scored.model_tag, "m");

        let text = ["1M", "1F", "2M"].iter().map(|id| line(id, [0.25; 4])).collect::<Vec<_>>().join("\n");
        match join(pairing, &parse(&text).unwrap()) {
            Err(PredictionError::Missing { ids }) => assert_eq!(ids, vec!["2F"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn join_rejects_mixed_tags() {
        let pairing = build_pairing(&records(), Domain::Gender, Group::M, Group::F).unwrap();
        let mut text = ["1M", "1F", "2M"].iter().map(|id| line(id, [0.25; 4])).collect::<Vec<_>>().join("\n");
        text.push('\n');
        text.push_str(&line("2F", [0.25; 4]).replace("\"m\"", "\"other\""));
        assert!(matches!(join(pairing, &parse(&text).unwrap()), Err(PredictionError::MixedModelTags(_))));
    }

    fn probs_strategy() -> impl Strategy<Value = [f64; 4]> {
        prop::array::uniform4(0u32..1000).prop_filter("non-zero", |w| w.iter().sum::<u32>() > 0).prop_map(|w| {
            let total: u32 = w.iter().sum();
            w.map(|x| x as f64 / total as f64)
        })
    }

    proptest! {
        #[test]
        fn derived_fields_satisfy_invariants(p in probs_strategy()) {
            let pred = Prediction::new("s", "m", Probs::from_array(p)).unwrap();
            let class = pred.predicted_class();
            prop_assert_eq!(pred.predicted_score(), p[class.index()]);
            for (i, &x) in p.iter().enumerate() {
                prop_assert!(x <= p[class.index()]);
                if i < class.index() {
                    prop_assert!(x < p[class.index()]);
                }
            }
        }

        #[test]
        fn write_read_round_trip(ps in prop::collection::vec(probs_strategy(), 1..20)) {
            let preds: Vec<Prediction> = ps
                .iter()
                .enumerate()
                .map(|(i, p)| Prediction::new(format!("s{i}"), "m", Probs::from_array(*p)).unwrap())
                .collect();
            let mut first = Vec::new();
            write_predictions(&preds, &mut first).unwrap();
            let back = parse_predictions(first.as_slice(), "rt").unwrap();
            prop_assert_eq!(back.records(), preds.as_slice());
            let mut second = Vec::new();
            write_predictions(back.records(), &mut second).unwrap();
            prop_assert_eq!(first, second);
        }
    }
}
