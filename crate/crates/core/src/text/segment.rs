//! Rule-based sentence segmentation.
//!
//! A boundary is placed after a run of `.`, `?` or `!` (plus any closing
//! quotes or brackets) when it is followed by whitespace and then an
//! uppercase letter or an opening quote/bracket. A period ending one of the
//! [`ABBREVIATIONS`] never ends a sentence.

use super::document::Sentence;

/// Lowercased tokens (without the final period) that never end a sentence.
pub const ABBREVIATIONS: &[&str] = &["dr", "mr", "mrs", "ms", "vs", "etc", "e.g", "i.e", "st", "no"];

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '?' | '!')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | '\u{201D}' | '\u{2019}' | ')' | ']')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '\u{201C}' | '\u{2018}' | '(' | '[')
}

/// The whitespace-delimited token ending just before byte offset `dot`,
/// with leading punctuation stripped and lowercased.
fn token_before(text: &str, dot: usize) -> String {
    let head = &text[..dot];
    let start = head
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_whitespace())
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(0);
    head[start..]
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
}

/// Split `text` into trimmed, non-empty sentences indexed from 0.
pub fn segment_sentences(text: &str) -> Vec<Sentence> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;

    while i < chars.len() {
        let (pos, c) = chars[i];
        if !is_terminator(c) {
            i += 1;
            continue;
        }
        let first_term = pos;
        let mut j = i;
        while j < chars.len() && is_terminator(chars[j].1) {
            j += 1;
        }
        while j < chars.len() && is_closer(chars[j].1) {
            j += 1;
        }
        let end = chars.get(j).map(|&(p, _)| p).unwrap_or(text.len());

        let mut k = j;
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        let boundary = if k == chars.len() {
            true
        } else if k == j {
            false
        } else {
            let next = chars[k].1;
            next.is_uppercase() || is_opener(next)
        };
        let abbreviation =
            c == '.' && j == i + 1 && ABBREVIATIONS.contains(&token_before(text, first_term).as_str());

        if boundary && !abbreviation {
            push(&mut out, &text[start..end]);
            start = end;
        }
        i = j.max(i + 1);
    }
    push(&mut out, &text[start..]);
    out
}

fn push(out: &mut Vec<Sentence>, piece: &str) {
    let t = piece.trim();
    if !t.is_empty() {
        let idx = out.len();
        out.push(Sentence::new(t, idx));
    }
}
