use std::collections::BTreeMap;

use super::{PlotKind, PlotPoint, Span};
use crate::cluster::{normalized, representatives, spherical_kmeans};
use crate::ingest::{ArticleRecord, MediaKind};
use crate::text::{lower_words, split_sentences, word_count};

const ATTRIBUTION_VERBS: &[&str] = &[
    "said", "says", "say", "told", "tells", "added", "adds", "stated", "states", "explained", "wrote", "writes",
    "asked", "warned", "noted", "confirmed", "announced", "claimed", "insisted", "tweeted", "according",
];
const MAX_PRE_ATTRIBUTION_WORDS: usize = 12;
const MAX_POST_ATTRIBUTION_WORDS: usize = 6;
const KMEANS_MAX_ITER: usize = 50;

const STOPWORDS: &[&str] = &[
    "a", "about", "after", "again", "all", "also", "an", "and", "any", "are", "as", "at", "be", "been", "before",
    "being", "but", "by", "can", "could", "did", "do", "does", "for", "from", "had", "has", "have", "he", "her",
    "here", "him", "his", "how", "i", "if", "in", "into", "is", "it", "its", "just", "me", "more", "most", "my",
    "no", "not", "now", "of", "on", "once", "only", "or", "other", "our", "out", "over", "own", "said", "same",
    "she", "should", "so", "some", "such", "than", "that", "the", "their", "them", "then", "there", "these",
    "they", "this", "those", "through", "to", "too", "under", "until", "up", "very", "was", "we", "were", "what",
    "when", "where", "which", "while", "who", "whom", "why", "will", "with", "would", "you", "your",
];

fn has_attribution(text: &str) -> bool {
    lower_words(text).iter().any(|w| ATTRIBUTION_VERBS.contains(&w.as_str()))
}

/// Pairs quotation marks in a paragraph. Straight quotes alternate open and
/// close; typographic ones are directional. Returns balanced (open, close)
/// byte positions and whether anything was left unpaired.
fn pair_quotes(para: &str) -> (Vec<(usize, usize)>, bool) {
    let mut pairs = Vec::new();
    let mut open: Option<(usize, char)> = None;
    let mut unbalanced = false;
    for (i, c) in para.char_indices() {
        match (c, open) {
            ('"', None) | ('\u{201c}', None) => open = Some((i, c)),
            ('"', Some((o, '"'))) | ('\u{201d}', Some((o, '\u{201c}'))) => {
                pairs.push((o, i));
                open = None;
            }
            ('\u{201d}', _) | ('\u{201c}', Some(_)) | ('"', Some(_)) => {
                // mismatched mark: restart pairing from here
                unbalanced = true;
                open = if c == '\u{201d}' { None } else { Some((i, c)) };
            }
            _ => {}
        }
    }
    (pairs, unbalanced || open.is_some())
}

fn sentence_start_before(para: &str, pos: usize) -> usize {
    let before = &para[..pos];
    let mut start = 0;
    for (i, c) in before.char_indices() {
        if matches!(c, '.' | '!' | '?') && before[i + 1..].starts_with(char::is_whitespace) {
            start = i + 1;
        }
    }
    start + (before[start..].len() - before[start..].trim_start().len())
}

/// Quoted spans of at least three words.
pub fn extract_quotes(article: &ArticleRecord) -> Vec<PlotPoint> {
    extract_quotes_with(article, super::DEFAULT_MIN_QUOTE_WORDS).0
}

/// Quote points plus the indices of paragraphs with unbalanced quote marks.
pub(crate) fn extract_quotes_with(article: &ArticleRecord, min_words: usize) -> (Vec<PlotPoint>, Vec<usize>) {
    let mut points = Vec::new();
    let mut unbalanced = Vec::new();
    for (pi, para) in article.paragraphs.iter().enumerate() {
        let (pairs, bad) = pair_quotes(para);
        if bad {
            unbalanced.push(pi);
        }
        let mut prev_end = 0;
        for (open, close) in pairs {
            let close_end = close + para[close..].chars().next().map_or(1, char::len_utf8);
            let open_end = open + para[open..].chars().next().map_or(1, char::len_utf8);
            let inner = &para[open_end..close];
            if word_count(inner) < min_words {
                continue;
            }
            let mut start = open;
            let pre_start = sentence_start_before(para, open).max(prev_end);
            let pre = &para[pre_start..open];
            if !pre.trim().is_empty() && has_attribution(pre) && word_count(pre) <= MAX_PRE_ATTRIBUTION_WORDS {
                start = pre_start;
            }
            let mut end = close_end;
            let rest = &para[close_end..];
            let window_len = rest
                .find(|c: char| matches!(c, '.' | '!' | '?' | '"' | '\u{201c}' | '\u{201d}'))
                .unwrap_or(rest.len());
            let post = &rest[..window_len];
            if start == open && has_attribution(post) && word_count(post) <= MAX_POST_ATTRIBUTION_WORDS {
                end = close_end + post.trim_end_matches(|c: char| c.is_whitespace() || c == ',').len();
            }
            prev_end = end;
            points.push(PlotPoint::new(
                &article.id,
                PlotKind::Quote,
                &para[start..end],
                Some(Span {
                    paragraph: pi,
                    start,
                    end,
                }),
            ));
        }
    }
    (points, unbalanced)
}

/// L2-normalized term-frequency vectors over a sorted vocabulary of
/// lowercased alphabetic non-stopword tokens.
pub(crate) fn sentence_vectors(sentences: &[&str]) -> Vec<Vec<f64>> {
    let bags: Vec<BTreeMap<String, usize>> = sentences
        .iter()
        .map(|s| {
            let mut bag = BTreeMap::new();
            for w in lower_words(s) {
                if w.chars().all(char::is_alphabetic) && !STOPWORDS.contains(&w.as_str()) {
                    *bag.entry(w).or_insert(0) += 1;
                }
            }
            bag
        })
        .collect();
    let vocab: Vec<&String> = {
        let mut v: Vec<&String> = bags.iter().flat_map(|b| b.keys()).collect();
        v.sort();
        v.dedup();
        v
    };
    bags.iter()
        .map(|b| {
            let raw: Vec<f64> = vocab.iter().map(|t| b.get(*t).copied().unwrap_or(0) as f64).collect();
            normalized(&raw)
        })
        .collect()
}

/// Up to `k` representative sentences chosen by spherical k-means, in
/// document order. Seeds are the first `k` sentences with distinct vectors.
pub fn extract_evidence(article: &ArticleRecord, k: usize) -> Vec<PlotPoint> {
    let sentences = split_sentences(&article.paragraphs);
    let chosen: Vec<usize> = if sentences.len() <= k {
        (0..sentences.len()).collect()
    } else {
        let texts: Vec<&str> = sentences.iter().map(|s| s.text.as_str()).collect();
        let vectors = sentence_vectors(&texts);
        let mut seeds: Vec<usize> = Vec::new();
        for i in 0..vectors.len() {
            if seeds.len() == k {
                break;
            }
            if seeds.iter().all(|&j| vectors[j] != vectors[i]) {
                seeds.push(i);
            }
        }
        for i in 0..vectors.len() {
            if seeds.len() == k {
                break;
            }
            if !seeds.contains(&i) {
                seeds.push(i);
            }
        }
        let clustering = spherical_kmeans(&vectors, &seeds, KMEANS_MAX_ITER);
        let mut reps = representatives(&vectors, &clustering);
        reps.sort_unstable();
        reps
    };
    chosen
        .into_iter()
        .map(|i| {
            let s = &sentences[i];
            PlotPoint::new(
                &article.id,
                PlotKind::Evidence,
                s.text.clone(),
                Some(Span {
                    paragraph: s.paragraph,
                    start: s.start,
                    end: s.end,
                }),
            )
        })
        .collect()
}

/// One point per media link, surface text being the URL.
pub fn extract_media(article: &ArticleRecord) -> Vec<PlotPoint> {
    article
        .media_links
        .iter()
        .filter(|m| !m.url.trim().is_empty())
        .map(|m| {
            let kind = match m.kind {
                MediaKind::Photo => PlotKind::Photo,
                MediaKind::Video => PlotKind::Video,
                MediaKind::Audio => PlotKind::Audio,
            };
            PlotPoint::new(&article.id, kind, m.url.clone(), None)
        })
        .collect()
}
