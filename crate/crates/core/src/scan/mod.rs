//! Corpus-level occurrence and co-occurrence counting.
//!
//! For every sentence, each emotion with at least one matching token is
//! counted once in `occ`, and each (emotion, group) pair whose emotion and
//! group both appear in the sentence is counted once in `coocc`. Per-sentence
//! flags are reset at every sentence boundary.

mod counts;
mod stream;

use std::num::NonZeroUsize;

use serde::{Deserialize, Serialize};

pub use counts::{
    cooccurrence_percentages, summarize_occurrence, AffectCounts, CooccurrenceTable, CountingMode,
    OccurrenceSummary,
};
pub use stream::{decode_lossy, SentenceStream, SHARD_BYTES};

use crate::lexicon::{LabelMask, Lexicon};
use crate::text::{for_each_sentence, for_each_token};

#[derive(Debug, thiserror::Error)]
pub enum ScanError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scan worker panicked")]
    WorkerPanicked,
}

/// Counts plus stream-level bookkeeping from one corpus scan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanOutput {
    pub counts: AffectCounts,
    pub bytes_read: u64,
    /// Invalid UTF-8 sequences replaced with U+FFFD.
    pub decode_replacements: u64,
    pub sources: Vec<String>,
}

/// Applies one tokenized sentence to `counts`.
pub fn scan_sentence<S: AsRef<str>>(lexicon: &Lexicon, tokens: &[S], counts: &mut AffectCounts) {
    let mut mask = LabelMask::EMPTY;
    let mut per_emotion = [0u64; 4];
    for t in tokens {
        let m = lexicon.mask(t.as_ref());
        tally(m, &mut mask, &mut per_emotion);
    }
    counts.record_sentence(mask, &per_emotion, tokens.len() as u64);
}

#[inline]
fn tally(m: LabelMask, mask: &mut LabelMask, per_emotion: &mut [u64; 4]) {
    if m.is_empty() {
        return;
    }
    *mask |= m;
    for e in m.emotions() {
        per_emotion[e.index()] += 1;
    }
}

/// Single-threaded scanner holding a reusable token buffer.
pub struct Scanner<'a> {
    lexicon: &'a Lexicon,
    buf: String,
}

impl<'a> Scanner<'a> {
    pub fn new(lexicon: &'a Lexicon) -> Self {
        Scanner { lexicon, buf: String::with_capacity(64) }
    }

    /// Segments `text` into sentences and scans each.
    pub fn scan_text(&mut self, text: &str, counts: &mut AffectCounts) {
        let lexicon = self.lexicon;
        let buf = &mut self.buf;
        for_each_sentence(text, |sentence| {
            let mut mask = LabelMask::EMPTY;
            let mut per_emotion = [0u64; 4];
            let mut n_tokens = 0u64;
            for_each_token(sentence, buf, |tok| {
                n_tokens += 1;
                tally(lexicon.mask(tok), &mut mask, &mut per_emotion);
            });
            counts.record_sentence(mask, &per_emotion, n_tokens);
        });
    }
}

/// Scans an in-memory text sequentially.
pub fn scan_str(lexicon: &Lexicon, text: &str, mode: CountingMode) -> AffectCounts {
    let mut counts = AffectCounts::new(lexicon, mode);
    Scanner::new(lexicon).scan_text(text, &mut counts);
    counts
}

struct Partial {
    counts: AffectCounts,
    replacements: u64,
}

impl Partial {
    fn new(lexicon: &Lexicon, mode: CountingMode) -> Self {
        Partial { counts: AffectCounts::new(lexicon, mode), replacements: 0 }
    }

    fn absorb(&mut self, scanner: &mut Scanner<'_>, shard: &[u8]) {
        let (text, replaced) = decode_lossy(shard);
        self.replacements += replaced;
        scanner.scan_text(&text, &mut self.counts);
    }
}

/// Scans every sentence of `source` with `workers` threads.
///
/// Shards are whole lines, so sentences never straddle workers; each worker
/// owns its counters and the partial results are summed at the end. The
/// result is identical for any worker count.
pub fn scan_corpus(
    lexicon: &Lexicon,
    mut source: SentenceStream,
    workers: NonZeroUsize,
    mode: CountingMode,
) -> Result<ScanOutput, ScanError> {
    let total = if workers.get() == 1 {
        let mut scanner = Scanner::new(lexicon);
        let mut partial = Partial::new(lexicon, mode);
        while let Some(shard) = source.next_shard()? {
            partial.absorb(&mut scanner, &shard);
        }
        partial
    } else {
        scan_parallel(lexicon, &mut source, workers.get(), mode)?
    };

    if total.replacements > 0 {
        log::warn!("replaced {} undecodable byte sequence(s) while scanning", total.replacements);
    }
    Ok(ScanOutput {
        counts: total.counts,
        bytes_read: source.bytes_read(),
        decode_replacements: total.replacements,
        sources: source.files().to_vec(),
    })
}

fn scan_parallel(
    lexicon: &Lexicon,
    source: &mut SentenceStream,
    workers: usize,
    mode: CountingMode,
) -> Result<Partial, ScanError> {
    let (tx, rx) = crossbeam_channel::bounded::<Vec<u8>>(workers * 2);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                let rx = rx.clone();
                scope.spawn(move || {
                    let mut scanner = Scanner::new(lexicon);
                    let mut partial = Partial::new(lexicon, mode);
                    for shard in rx {
                        partial.absorb(&mut scanner, &shard);
                    }
                    partial
                })
            })
            .collect();
        drop(rx);

        let mut read_result = Ok(());
        loop {
            match source.next_shard() {
                Ok(Some(shard)) => {
                    if tx.send(shard).is_err() {
                        break;
                    }
                }
                Ok(None) => break,
                Err(e) => {
                    read_result = Err(e);
                    break;
                }
            }
        }
        drop(tx);

        let mut total = Partial::new(lexicon, mode);
        for h in handles {
            let p = h.join().map_err(|_| ScanError::WorkerPanicked)?;
            total.counts.merge(&p.counts);
            total.replacements += p.replacements;
        }
        read_result.map(|_| total)
    })
}
