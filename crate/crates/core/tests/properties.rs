use std::io::Cursor;
use std::num::NonZeroUsize;

use affect_audit::labels::{Domain, Emotion, Group};
use affect_audit::metrics::{avg_delta, demographic_parity, paired_p_value, parity_from_counts, EmotionBucket};
use affect_audit::pairs::{build_pairing, PairRecord};
use affect_audit::predictions::{join, Prediction, PredictionSet, Probs};
use affect_audit::scan::{scan_corpus, scan_str, AffectCounts, CountingMode, SentenceStream};
use affect_audit::stats::{regularized_incomplete_beta, sample_stats, student_t_sf2, StudentT};
use affect_audit::Lexicon;
use proptest::prelude::*;

fn vocabulary() -> Vec<&'static str> {
    vec![
        "happy", "glad", "angry", "furious", "afraid", "scared", "sad", "grief", "wife", "he", "she", "boy", "girl",
        "muslim", "christian", "jew", "the", "a", "city", "ran", "blue", "sky", "of", "and",
    ]
}

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vocabulary()), 0..12).prop_map(|w| w.join(" "))
}

fn corpus_lines() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(
        prop::collection::vec(sentence(), 1..4).prop_map(|s| s.join(". ")),
        0..40,
    )
}

fn counts_of(lines: &[String], mode: CountingMode) -> AffectCounts {
    scan_str(&Lexicon::shipped(), &lines.join("\n"), mode)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn merge_is_a_commutative_monoid(a in corpus_lines(), b in corpus_lines(), c in corpus_lines()) {
        let lex = Lexicon::shipped();
        let (ca, cb, cc) = (
            counts_of(&a, CountingMode::Sentence),
            counts_of(&b, CountingMode::Sentence),
            counts_of(&c, CountingMode::Sentence),
        );
        let zero = AffectCounts::new(&lex, CountingMode::Sentence);
        prop_assert_eq!(ca.clone().merged(&zero), ca.clone());
        prop_assert_eq!(ca.clone().merged(&cb), cb.clone().merged(&ca));
        prop_assert_eq!(ca.clone().merged(&cb).merged(&cc), ca.clone().merged(&cb.clone().merged(&cc)));
        let joined: Vec<String> = a.iter().chain(&b).cloned().collect();
        prop_assert_eq!(counts_of(&joined, CountingMode::Sentence), ca.merged(&cb));
    }

    #[test]
    fn parallel_scan_equals_sequential(lines in corpus_lines(), splits in 1usize..6, workers in 2usize..9) {
        let lex = Lexicon::shipped();
        let seq = counts_of(&lines, CountingMode::Sentence);
        let mut stream = SentenceStream::empty();
        let chunk = lines.len().div_ceil(splits).max(1);
        for (i, part) in lines.chunks(chunk).enumerate() {
            stream.push_reader(format!("part{i}"), Cursor::new(part.join("\n").into_bytes()));
        }
        let out = scan_corpus(&lex, stream, NonZeroUsize::new(workers).unwrap(), CountingMode::Sentence).unwrap();
        prop_assert_eq!(out.counts, seq);
    }

    #[test]
    fn cooccurrence_bounded_by_occurrence(lines in corpus_lines()) {
        let c = counts_of(&lines, CountingMode::Sentence);
        let t = counts_of(&lines, CountingMode::Token);
        for e in Emotion::ALL {
            prop_assert!(c.occ(e) <= c.sentences_scanned());
            prop_assert!(t.occ(e) >= c.occ(e));
            for g in Group::ALL {
                prop_assert!(c.coocc(e, g) <= c.occ(e));
                prop_assert_eq!(c.coocc(e, g), t.coocc(e, g));
            }
        }
    }

    #[test]
    fn incomplete_beta_symmetry(a in 0.05f64..50.0, b in 0.05f64..50.0, x in 0.0f64..=1.0) {
        let lhs = regularized_incomplete_beta(a, b, x).unwrap();
        let rhs = regularized_incomplete_beta(b, a, 1.0 - x).unwrap();
        prop_assert!((lhs + rhs - 1.0).abs() < 1e-10, "{lhs} + {rhs}");
        prop_assert!((0.0..=1.0).contains(&lhs));
    }

    #[test]
    fn t_tail_even_and_monotone(t in 0.0f64..50.0, dt in 0.0f64..5.0, df in 0.5f64..200.0) {
        let p = student_t_sf2(t, df).unwrap();
        prop_assert_eq!(p, student_t_sf2(-t, df).unwrap());
        prop_assert!(student_t_sf2(t + dt, df).unwrap() <= p + 1e-15);
        let dist = StudentT::new(df).unwrap();
        prop_assert!(dist.cdf(t + dt).unwrap() >= dist.cdf(t).unwrap() - 1e-15);
        prop_assert!(dist.cdf(-t - dt).unwrap() <= dist.cdf(-t).unwrap() + 1e-15);
    }

    #[test]
    fn cauchy_closed_form(t in -100.0f64..100.0) {
        let cdf = StudentT::new(1.0).unwrap().cdf(t).unwrap();
        let exact = 0.5 + t.atan() / std::f64::consts::PI;
        prop_assert!((cdf - exact).abs() < 1e-12, "{cdf} vs {exact}");
    }

    #[test]
    fn stddev_translation_invariant(xs in prop::collection::vec(-1e3f64..1e3, 2..30), c in -1e4f64..1e4) {
        let (_, sd) = sample_stats(&xs).unwrap();
        let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
        let (_, sd2) = sample_stats(&shifted).unwrap();
        prop_assert!((sd - sd2).abs() < 1e-9 * sd.max(1.0));
    }

    #[test]
    fn parity_symmetric_bounded_scale_free(
        (n_a, hits_a) in (1usize..200).prop_flat_map(|n| (Just(n), 0..=n)),
        (n_b, hits_b) in (1usize..200).prop_flat_map(|n| (Just(n), 0..=n)),
        k in 1usize..50,
    ) {
        let p = parity_from_counts(hits_a, n_a, hits_b, n_b).unwrap();
        let q = parity_from_counts(hits_b, n_b, hits_a, n_a).unwrap();
        prop_assert_eq!(p.dp, q.dp);
        prop_assert!((0.0..=1.0).contains(&p.dp));
        prop_assert_eq!(p.dp == 1.0, hits_a * n_b == hits_b * n_a);
        prop_assert_eq!(parity_from_counts(hits_a * k, n_a * k, hits_b * k, n_b * k).unwrap().dp, p.dp);
    }

    #[test]
    fn intensity_measures_symmetric(scores in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..40), c in -0.5f64..0.5) {
        let fwd = EmotionBucket::from_scores(Emotion::Joy, scores.clone());
        let rev = EmotionBucket::from_scores(Emotion::Joy, scores.iter().map(|&(a, b)| (b, a)).collect());
        prop_assert!((avg_delta(&fwd).unwrap() - avg_delta(&rev).unwrap()).abs() < 1e-15);
        let p = paired_p_value(&fwd).unwrap();
        prop_assert!((p - paired_p_value(&rev).unwrap()).abs() < 1e-12);
        let shifted = EmotionBucket::from_scores(Emotion::Joy, scores.iter().map(|&(a, b)| (a + c, b + c)).collect());
        prop_assert!((p - paired_p_value(&shifted).unwrap()).abs() < 1e-9);
    }
}

fn records_strategy() -> impl Strategy<Value = Vec<PairRecord>> {
    prop::collection::vec((0u8..30, 0usize..3), 1..60).prop_map(|rows| {
        let mut seen = std::collections::HashSet::new();
        rows.into_iter()
            .filter(|k| seen.insert(*k))
            .map(|(pid, gi)| {
                let g = Domain::Religion.groups()[gi];
                PairRecord {
                    pair_id: format!("p{pid}"),
                    domain: Domain::Religion,
                    group: g,
                    sentence_id: format!("p{pid}-{g}"),
                    text: "x".into(),
                    gold_emotion: None,
                    template_id: None,
                    corpus_tag: "c".into(),
                }
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn pairing_swap_symmetry(records in records_strategy()) {
        let fwd = build_pairing(&records, Domain::Religion, Group::Ch, Group::Mu);
        let rev = build_pairing(&records, Domain::Religion, Group::Mu, Group::Ch);
        match (fwd, rev) {
            (Ok(f), Ok(r)) => {
                let mut fp: Vec<_> = f.pairs.iter().map(|(a, b)| (a.pair_id.clone(), a.group, b.group)).collect();
                let mut rp: Vec<_> = r.pairs.iter().map(|(a, b)| (a.pair_id.clone(), b.group, a.group)).collect();
                fp.sort();
                rp.sort();
                prop_assert_eq!(fp, rp);
                prop_assert_eq!(f.excluded, r.excluded);
                for (a, b) in &f.pairs {
                    prop_assert_eq!(&a.pair_id, &b.pair_id);
                    prop_assert_eq!((a.group, b.group), (Group::Ch, Group::Mu));
                }
            }
            (Err(_), Err(_)) => {}
            (f, r) => prop_assert!(false, "asymmetric outcome: {:?} / {:?}", f.is_ok(), r.is_ok()),
        }
    }

    #[test]
    fn demographic_parity_independent_of_orientation(
        classes in prop::collection::vec((0usize..4, 0usize..4), 1..40)
    ) {
        let mut records = Vec::new();
        let mut preds = Vec::new();
        for (i, (ca, cb)) in classes.iter().enumerate() {
            for (g, c) in [(Group::M, ca), (Group::F, cb)] {
                let sid = format!("{i}{g}");
                records.push(PairRecord {
                    pair_id: i.to_string(),
                    domain: Domain::Gender,
                    group: g,
                    sentence_id: sid.clone(),
                    text: "x".into(),
                    gold_emotion: None,
                    template_id: None,
                    corpus_tag: "c".into(),
                });
                let mut p = [0.1; 4];
                p[*c] = 0.7;
                preds.push(Prediction::new(sid, "m", Probs::from_array(p)).unwrap());
            }
        }
        let set = PredictionSet::from_predictions(preds).unwrap();
        let mf = join(build_pairing(&records, Domain::Gender, Group::M, Group::F).unwrap(), &set).unwrap();
        let fm = join(build_pairing(&records, Domain::Gender, Group::F, Group::M).unwrap(), &set).unwrap();
        for e in Emotion::ALL {
            prop_assert_eq!(demographic_parity(&mf, e).unwrap().dp, demographic_parity(&fm, e).unwrap().dp);
        }
    }
}

/// Standard normal CDF by composite Simpson integration of the density.
fn normal_cdf(x: f64) -> f64 {
    let n = 20_000;
    let (lo, hi) = (0.0, x.abs());
    let h = (hi - lo) / n as f64;
    let f = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let half = s * h / 3.0;
    if x >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

#[test]
fn t_cdf_approaches_normal() {
    let dist = StudentT::new(1e6).unwrap();
    for i in -60..=60 {
        let x = i as f64 / 10.0;
        let diff = (dist.cdf(x).unwrap() - normal_cdf(x)).abs();
        assert!(diff < 1e-4, "x={x}: {diff}");
    }
}
