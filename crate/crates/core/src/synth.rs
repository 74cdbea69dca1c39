//! Seeded synthetic inputs: plain-text corpora for scanning and paired
//! evaluation fixtures with predictions.

use std::io::{self, Write};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::labels::{Domain, Emotion, Group};
use crate::lexicon::Lexicon;
use crate::pairs::PairRecord;
use crate::predictions::{Prediction, Probs};

const FILLER: &[&str] = &[
    "the", "a", "of", "and", "to", "in", "was", "is", "that", "for", "on", "with", "as", "at", "by", "from", "this",
    "it", "were", "are", "which", "be", "an", "has", "had", "not", "but", "after", "during", "city", "river", "year",
    "people", "school", "house", "report", "season", "team", "music", "station", "village", "company", "county",
    "film", "album", "game", "history", "region", "north", "south", "later", "early", "new", "old", "first",
    "second", "called", "known", "built", "played", "moved", "became", "released", "opened", "government",
];

/// Writes roughly `target_bytes` of newline-separated documents. About one
/// token in ten is drawn from `lexicon`; the rest is filler. Output is a pure
/// function of the lexicon and the seed.
pub fn write_corpus(lexicon: &Lexicon, target_bytes: u64, seed: u64, out: &mut impl Write) -> io::Result<u64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let terms: Vec<&str> = lexicon
        .emotion_terms()
        .values()
        .chain(lexicon.target_terms().values())
        .flat_map(|s| s.iter().map(String::as_str))
        .collect();
    let mut written = 0u64;
    let mut line = String::with_capacity(1024);
    while written < target_bytes {
        line.clear();
        let sentences = rng.gen_range(1..=4);
        for s in 0..sentences {
            if s > 0 {
                line.push(' ');
            }
            let len = rng.gen_range(6..=20);
            for t in 0..len {
                if t > 0 {
                    line.push(' ');
                }
                let word = if !terms.is_empty() && rng.gen_bool(0.1) {
                    terms.choose(&mut rng).copied().unwrap_or("the")
                } else {
                    FILLER.choose(&mut rng).copied().unwrap_or("the")
                };
                if t == 0 {
                    let mut cs = word.chars();
                    if let Some(c) = cs.next() {
                        line.extend(c.to_uppercase());
                        line.push_str(cs.as_str());
                    }
                } else {
                    line.push_str(word);
                }
            }
            line.push(['.', '.', '.', '!', '?'][rng.gen_range(0..5)]);
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
        written += line.len() as u64;
    }
    Ok(written)
}

pub fn corpus_string(lexicon: &Lexicon, target_bytes: u64, seed: u64) -> String {
    let mut buf = Vec::with_capacity(target_bytes as usize + 1024);
    write_corpus(lexicon, target_bytes, seed, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("generated text is ASCII")
}

const SUBJECTS: &[(Group, &str)] = &[
    (Group::M, "He"),
    (Group::F, "She"),
    (Group::Nb, "They"),
    (Group::EA, "The European American man"),
    (Group::AA, "The African American man"),
    (Group::Ch, "The Christian"),
    (Group::Mu, "The Muslim"),
    (Group::Jw, "The Jew"),
];

const FEELINGS: [(Emotion, &str); 4] = [
    (Emotion::Anger, "angry"),
    (Emotion::Fear, "terrified"),
    (Emotion::Joy, "happy"),
    (Emotion::Sadness, "sad"),
];

/// Pair records for `domain` (every group, `n_pairs` templates, gold
/// emotions when `with_gold`) and one prediction per record from `model_tag`.
///
/// Predictions are biased: group `groups[0]` receives a slightly higher
/// probability for the template's emotion than the other groups.
pub fn eval_fixture(
    domain: Domain,
    n_pairs: usize,
    with_gold: bool,
    model_tag: &str,
    corpus_tag: &str,
    seed: u64,
) -> (Vec<PairRecord>, Vec<Prediction>) {
    let mut rng = StdRng::seed_from_u64(seed);
    let groups = domain.groups();
    let mut records = Vec::new();
    let mut preds = Vec::new();
    for i in 0..n_pairs {
        let (emotion, word) = FEELINGS[i % 4];
        let boost: f64 = rng.gen_range(0.0..0.15);
        let base: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.05..1.0));
        for (k, g) in groups.iter().enumerate() {
            let subject = SUBJECTS.iter().find(|(sg, _)| sg == g).map(|(_, s)| *s).unwrap_or("Someone");
            let sentence_id = format!("{corpus_tag}-{i:04}-{g}");
            records.push(PairRecord {
                pair_id: format!("p{i:04}"),
                domain,
                group: *g,
                sentence_id: sentence_id.clone(),
                text: format!("{subject} felt {word} about the news."),
                gold_emotion: with_gold.then_some(emotion),
                template_id: Some(format!("t{}", i % 4)),
                corpus_tag: corpus_tag.to_string(),
            });
            let mut w = base.map(|x| x + rng.gen_range(-0.04..0.04f64).max(-x + 0.01));
            w[emotion.index()] += 0.6 + if k == 0 { boost } else { 0.0 };
            let total: f64 = w.iter().sum();
            let probs = Probs::from_array(w.map(|x| x / total));
            preds.push(Prediction::new(sentence_id, model_tag, probs).expect("normalized probabilities"));
        }
    }
    (records, preds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairs::build_pairing;

    #[test]
    fn corpus_is_seeded() {
        let lex = Lexicon::shipped();
        let a = corpus_string(&lex, 10_000, 7);
        assert_eq!(a, corpus_string(&lex, 10_000, 7));
        assert_ne!(a, corpus_string(&lex, 10_000, 8));
        assert!(a.len() >= 10_000 && a.ends_with('\n'));
    }

    #[test]
    fn fixture_pairs_and_predictions() {
        let (records, preds) = eval_fixture(Domain::Gender, 12, true, "m", "syn", 1);
        assert_eq!(records.len(), 36);
        assert_eq!(preds.len(), 36);
        let p = build_pairing(&records, Domain::Gender, Group::M, Group::Nb).unwrap();
        assert_eq!(p.len(), 12);
        assert!(preds.iter().all(|p| p.probs.validate().is_ok()));
    }
}
