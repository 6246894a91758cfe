//! Shared text utilities: whitespace and phrase normalization, phrase
//! containment, word counting and sentence splitting.
//!
//! Keyword coverage in reports and Supp/Cont scoring both go through
//! [`normalize_phrase`] and [`contains_phrase`], so the two metrics always
//! agree on what "a keyword appears in the text" means.

/// Collapses every run of whitespace to one space and trims both ends.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Case-folded, punctuation-tolerant form of a phrase.
///
/// Every non-alphanumeric character (hyphens, quotes, commas, periods)
/// becomes a space and whitespace runs collapse, so `"Paul-Henri"` and
/// `"paul henri"` normalize identically.
pub fn normalize_phrase(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending_space = false;
    for c in s.chars() {
        if c.is_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.extend(c.to_lowercase());
        } else {
            pending_space = true;
        }
    }
    out
}

/// Whole-phrase containment after [`normalize_phrase`] on both sides.
///
/// A phrase that normalizes to nothing (pure punctuation) is never contained.
pub fn contains_phrase(text: &str, phrase: &str) -> bool {
    let needle = normalize_phrase(phrase);
    if needle.is_empty() {
        return false;
    }
    let haystack = normalize_phrase(text);
    format!(" {haystack} ").contains(&format!(" {needle} "))
}

/// Number of whitespace-separated words.
pub fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Lowercased alphanumeric word tokens.
pub fn lower_words(s: &str) -> Vec<String> {
    word_spans(s)
        .into_iter()
        .map(|(a, b)| s[a..b].to_lowercase())
        .collect()
}

/// Byte ranges of maximal alphanumeric runs.
pub fn word_spans(s: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices() {
        match (c.is_alphanumeric(), start) {
            (true, None) => start = Some(i),
            (false, Some(st)) => {
                spans.push((st, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(st) = start {
        spans.push((st, s.len()));
    }
    spans
}

/// One sentence located inside an article paragraph. `start..end` is a byte
/// range into that paragraph and `text` equals the slice it covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub paragraph: usize,
    pub start: usize,
    pub end: usize,
    pub text: String,
}

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "st", "jr", "sr", "gen", "sen", "rep", "gov", "lt", "col", "capt",
    "sgt", "cmdr", "adm", "prof", "rev", "inc", "corp", "co", "ltd", "vs", "etc", "no", "mt",
    "ft", "u.s", "u.k", "u.n", "e.g", "i.e", "a.m", "p.m", "jan", "feb", "mar", "apr", "jun",
    "jul", "aug", "sep", "sept", "oct", "nov", "dec",
];

const CLOSERS: &[char] = &['"', '\u{201d}', '\u{2019}', '\'', ')', ']'];
const OPENERS: &[char] = &['"', '\u{201c}', '\u{2018}', '\'', '(', '['];

fn is_abbreviation(paragraph: &str, dot: usize) -> bool {
    let before = &paragraph[..dot];
    let word_start = before
        .rfind(|c: char| c.is_whitespace())
        .map(|i| i + 1)
        .unwrap_or(0);
    let word: String = before[word_start..]
        .trim_start_matches(|c: char| OPENERS.contains(&c))
        .to_lowercase();
    if word.is_empty() {
        return false;
    }
    // single-letter initials such as "J." in "J. Smith"
    if word.chars().count() == 1 && word.chars().all(|c| c.is_alphabetic()) {
        return true;
    }
    ABBREVIATIONS.contains(&word.as_str())
}

/// Splits each paragraph into sentences.
///
/// A boundary is a terminal `.`, `!` or `?` (optionally followed by closing
/// quotes or brackets) that is followed by whitespace and then an uppercase
/// letter, digit or opening quote, or by the end of the paragraph. A period
/// ending a known abbreviation or a single-letter initial is not a boundary.
pub fn split_sentences(paragraphs: &[String]) -> Vec<Sentence> {
    let mut out = Vec::new();
    for (pi, para) in paragraphs.iter().enumerate() {
        let mut seg_start = 0usize;
        let chars: Vec<(usize, char)> = para.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (pos, c) = chars[i];
            if matches!(c, '.' | '!' | '?') {
                let mut j = i + 1;
                while j < chars.len() && CLOSERS.contains(&chars[j].1) {
                    j += 1;
                }
                let end = if j < chars.len() { chars[j].0 } else { para.len() };
                let mut k = j;
                while k < chars.len() && chars[k].1.is_whitespace() {
                    k += 1;
                }
                let at_end = k >= chars.len();
                let boundary = if at_end {
                    true
                } else if k == j {
                    false
                } else {
                    let next = chars[k].1;
                    let starts_new = next.is_uppercase() || next.is_ascii_digit() || OPENERS.contains(&next);
                    starts_new && !(c == '.' && is_abbreviation(para, pos))
                };
                if boundary {
                    push_sentence(&mut out, pi, para, seg_start, end);
                    seg_start = end;
                    i = j;
                    continue;
                }
            }
            i += 1;
        }
        if seg_start < para.len() {
            push_sentence(&mut out, pi, para, seg_start, para.len());
        }
    }
    out
}

fn push_sentence(out: &mut Vec<Sentence>, paragraph: usize, para: &str, start: usize, end: usize) {
    let slice = &para[start..end];
    let lead = slice.len() - slice.trim_start().len();
    let trimmed = slice.trim();
    if trimmed.is_empty() {
        return;
    }
    let s = start + lead;
    out.push(Sentence {
        paragraph,
        start: s,
        end: s + trimmed.len(),
        text: trimmed.to_string(),
    });
}
