use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;

use super::external::SpanAnnotator;
use super::resources::{CausalCueSet, EntityLabel, Gazetteer};
use super::{ExtractError, PlotKind, PlotPoint, Span};
use crate::ingest::ArticleRecord;
use crate::text::{lower_words, normalize_phrase, split_sentences, word_spans};

const MONTHS: &str = "January|February|March|April|May|June|July|August|September|October|November|December|\
                      Jan|Feb|Mar|Apr|Jun|Jul|Aug|Sep|Sept|Oct|Nov|Dec";

static DATE_TIME: LazyLock<Regex> = LazyLock::new(|| {
    let day_month = format!(r"\b\d{{1,2}}(?:st|nd|rd|th)? (?:{MONTHS})\b(?:,? \d{{4}}\b)?");
    let month_day = format!(r"\b(?:{MONTHS}) \d{{1,2}}(?:st|nd|rd|th)?\b(?:, \d{{4}}\b)?");
    let iso = r"\b\d{4}-\d{2}-\d{2}\b";
    let clock = r"\b\d{1,2}(?::\d{2})? ?(?i:am\b|pm\b|a\.m\.|p\.m\.)";
    let hhmm = r"\b\d{1,2}:\d{2}\b";
    let weekday = r"\b(?:Monday|Tuesday|Wednesday|Thursday|Friday|Saturday|Sunday)\b";
    Regex::new(&[day_month.as_str(), month_day.as_str(), iso, clock, hhmm, weekday].join("|")).unwrap()
});

fn label_of(text: &str) -> EntityLabel {
    let lower = text.to_lowercase();
    if lower.contains(':') || lower.ends_with('m') || lower.ends_with("m.") {
        EntityLabel::TIME
    } else {
        EntityLabel::DATE
    }
}

fn entity_point(article: &ArticleRecord, paragraph: usize, start: usize, end: usize, label: EntityLabel) -> PlotPoint {
    let text = &article.paragraphs[paragraph][start..end];
    PlotPoint::new(&article.id, label.kind(), text, Some(Span { paragraph, start, end }))
        .with_meta("label", label.as_str())
}

/// Entity (Who/What/When/Where) and causal (Why) points.
pub fn extract_lead(article: &ArticleRecord, gaz: &Gazetteer, cues: &CausalCueSet) -> Vec<PlotPoint> {
    extract_lead_with(article, gaz, cues, None).expect("no external annotator")
}

pub(crate) fn extract_lead_with(
    article: &ArticleRecord,
    gaz: &Gazetteer,
    cues: &CausalCueSet,
    ner: Option<&dyn SpanAnnotator>,
) -> Result<Vec<PlotPoint>, ExtractError> {
    let mut entities = Vec::new();
    for (pi, para) in article.paragraphs.iter().enumerate() {
        let gaz_hits = gaz.find_all(para);
        let overlaps = |s: usize, e: usize| gaz_hits.iter().any(|(a, b, _)| s < *b && *a < e);
        for &(s, e, label) in &gaz_hits {
            entities.push(entity_point(article, pi, s, e, label));
        }
        for m in DATE_TIME.find_iter(para) {
            if !overlaps(m.start(), m.end()) {
                entities.push(entity_point(article, pi, m.start(), m.end(), label_of(m.as_str())));
            }
        }
        if let Some(ner) = ner {
            for span in ner.annotate(para)? {
                if let Ok(label) = span.label.parse::<EntityLabel>() {
                    if !overlaps(span.start, span.end) {
                        entities.push(entity_point(article, pi, span.start, span.end, label));
                    }
                }
            }
        }
    }
    entities.sort_by(|a, b| a.span.cmp(&b.span));
    let mut seen = HashSet::new();
    let mut out: Vec<PlotPoint> = entities
        .into_iter()
        .filter(|p| seen.insert((p.kind, normalize_phrase(&p.surface_text))))
        .collect();
    out.extend(extract_why(article, cues));
    Ok(out)
}

fn cue_fires(words: &[String], cue: &[String], guarded: bool) -> bool {
    if cue.is_empty() || words.len() < cue.len() {
        return false;
    }
    (0..=words.len() - cue.len()).any(|i| {
        words[i..i + cue.len()] == *cue
            && (!guarded || words.len() - (i + cue.len()) >= CausalCueSet::CLAUSE_MIN_TOKENS)
    })
}

/// Sentences holding a causal cue word. Guarded cues ("for", "as", ...)
/// need at least three following tokens in the same sentence.
pub fn extract_why(article: &ArticleRecord, cues: &CausalCueSet) -> Vec<PlotPoint> {
    let cue_words: Vec<(Vec<String>, bool)> = cues
        .cues()
        .iter()
        .map(|c| (lower_words(c), CausalCueSet::GUARDED.contains(&c.as_str())))
        .collect();
    split_sentences(&article.paragraphs)
        .into_iter()
        .filter(|s| {
            let words: Vec<String> = word_spans(&s.text).into_iter().map(|(a, b)| s.text[a..b].to_lowercase()).collect();
            cue_words.iter().any(|(cue, guarded)| cue_fires(&words, cue, *guarded))
        })
        .map(|s| {
            PlotPoint::new(
                &article.id,
                PlotKind::Why,
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
