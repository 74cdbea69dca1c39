//! Sentence segmentation and word tokenization.
//!
//! Both are deliberately simple and deterministic: sentences end at `.`, `!`,
//! `?` (when followed by whitespace or end of text) and at newlines; tokens are
//! maximal runs of letters, digits, hyphens and apostrophes, case-folded.

use std::borrow::Cow;

/// Lowercase words that, followed by a period, do not end a sentence.
const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "st", "prof", "sr", "jr", "vs", "rev", "gen", "col", "capt", "lt",
    "sgt", "mt", "fr", "e.g", "i.e",
];

/// Typographic apostrophe variants folded to ASCII `'`.
pub fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}' | '\u{2018}' | '\u{02BC}' | '\u{2032}' | '\u{FF07}')
}

/// Replaces typographic apostrophes with ASCII `'`.
pub fn normalize_apostrophes(s: &str) -> Cow<'_, str> {
    if s.chars().all(|c| c == '\'' || !is_apostrophe(c)) {
        Cow::Borrowed(s)
    } else {
        Cow::Owned(s.chars().map(|c| if is_apostrophe(c) { '\'' } else { c }).collect())
    }
}

/// Case folding plus apostrophe normalization, the canonical form of a term.
pub fn normalize_term(s: &str) -> String {
    normalize_apostrophes(s.trim()).to_lowercase()
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201D}' | '\u{2019}')
}

/// Calls `f` with each sentence of `text`, in order. Sentences are trimmed;
/// empty ones are skipped.
pub fn for_each_sentence<'a>(text: &'a str, mut f: impl FnMut(&'a str)) {
    let mut emit = |s: &'a str| {
        let s = s.trim();
        if !s.is_empty() {
            f(s);
        }
    };
    let bytes = text.as_bytes();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b == b'\n' || b == b'\r' {
            emit(&text[start..i]);
            i += 1;
            start = i;
            continue;
        }
        if !(b == b'.' || b == b'!' || b == b'?') {
            i += 1;
            continue;
        }
        // Terminator run, then any closing quotes or brackets.
        let term_start = i;
        let mut end = i;
        let mut rest = text[i..].char_indices();
        let mut run_len = 0;
        for (off, c) in rest.by_ref() {
            if is_terminator(c) {
                run_len += 1;
                end = i + off + c.len_utf8();
            } else {
                break;
            }
        }
        for c in text[end..].chars() {
            if is_closer(c) {
                end += c.len_utf8();
            } else {
                break;
            }
        }
        let at_boundary = match text[end..].chars().next() {
            None => true,
            Some(c) => c.is_whitespace(),
        };
        if at_boundary && !(run_len == 1 && b == b'.' && is_abbreviation(&text[start..term_start])) {
            emit(&text[start..end]);
            start = end;
        }
        i = end.max(i + 1);
    }
    emit(&text[start..]);
}

fn is_abbreviation(before: &str) -> bool {
    let word = before
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .trim_start_matches(|c: char| !c.is_alphanumeric());
    if word.is_empty() || word.len() > 5 {
        return false;
    }
    let lower = word.to_ascii_lowercase();
    ABBREVIATIONS.contains(&lower.as_str())
}

/// Splits text into sentences.
pub fn segment_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for_each_sentence(text, |s| out.push(s));
    out
}

/// Streams the tokens of `sentence` through `f`, reusing `buf` for the
/// case-folded token text. Leading and trailing hyphens/apostrophes are
/// stripped from each token; tokens that are only punctuation are dropped.
pub fn for_each_token(sentence: &str, buf: &mut String, mut f: impl FnMut(&str)) {
    buf.clear();
    for c in sentence.chars() {
        if c.is_ascii() {
            if c.is_ascii_alphanumeric() {
                buf.push(c.to_ascii_lowercase());
            } else if c == '-' || c == '\'' {
                buf.push(c);
            } else {
                flush(buf, &mut f);
            }
        } else if is_apostrophe(c) {
            buf.push('\'');
        } else if c.is_alphanumeric() {
            buf.extend(c.to_lowercase());
        } else {
            flush(buf, &mut f);
        }
    }
    flush(buf, &mut f);
}

#[inline]
fn flush(buf: &mut String, f: &mut impl FnMut(&str)) {
    if buf.is_empty() {
        return;
    }
    let tok = buf.trim_matches(|c| c == '-' || c == '\'');
    if !tok.is_empty() {
        f(tok);
    }
    buf.clear();
}

/// Case-folded tokens of a sentence.
pub fn tokenize(sentence: &str) -> Vec<String> {
    let mut buf = String::new();
    let mut out = Vec::new();
    for_each_token(sentence, &mut buf, |t| out.push(t.to_string()));
    out
}
