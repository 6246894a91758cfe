use std::collections::HashSet;

use regex::RegexBuilder;

use super::external::SpanAnnotator;
use super::resources::{SentimentLexicon, TacticRuleSet};
use super::{ExtractError, PlotKind, PlotPoint, Span};
use crate::ingest::ArticleRecord;
use crate::text::{contains_phrase, lower_words, split_sentences};

const SNIPPET_STOPS: &[char] = &[',', ';', ':', '.', '!', '?'];

/// Counts occurrences of each term (single or multi-word) in `words`.
fn count_hits<'a>(words: &[String], terms: impl Iterator<Item = &'a String>) -> usize {
    terms
        .map(|t| {
            let tw = lower_words(t);
            if tw.is_empty() || tw.len() > words.len() {
                return 0;
            }
            words.windows(tw.len()).filter(|w| *w == tw.as_slice()).count()
        })
        .sum()
}

/// (polarity, positive hits, negative hits) over the article body.
pub fn polarity(text: &str, lex: &SentimentLexicon) -> (f64, usize, usize) {
    let words = lower_words(text);
    let p = count_hits(&words, lex.positive.iter());
    let n = count_hits(&words, lex.negative.iter());
    let pol = (p as f64 - n as f64) / (p + n).max(1) as f64;
    (pol, p, n)
}

/// Exactly one point per article labelled negative, neutral or positive.
pub fn extract_sentiment(article: &ArticleRecord, lex: &SentimentLexicon) -> PlotPoint {
    let (pol, p, n) = polarity(&article.body_text, lex);
    let label = if pol <= lex.neg_cut {
        "negative"
    } else if pol >= lex.pos_cut {
        "positive"
    } else {
        "neutral"
    };
    PlotPoint::new(&article.id, PlotKind::Sentiment, label, None)
        .with_meta("polarity", pol)
        .with_meta("positive_hits", p)
        .with_meta("negative_hits", n)
}

/// Paragraph-level multi-label tactic detection. Each matching rule gives
/// one point whose surface runs from the cue to the next clause break.
pub fn extract_tactics(article: &ArticleRecord, rules: &TacticRuleSet) -> Vec<PlotPoint> {
    extract_tactics_with(article, rules, None).expect("no external classifier")
}

pub(crate) fn extract_tactics_with(
    article: &ArticleRecord,
    rules: &TacticRuleSet,
    classifier: Option<&dyn SpanAnnotator>,
) -> Result<Vec<PlotPoint>, ExtractError> {
    let compiled: Vec<(&str, Vec<regex::Regex>)> = rules
        .rules()
        .iter()
        .map(|r| {
            let pats = r
                .patterns
                .iter()
                .filter(|p| !p.trim().is_empty())
                .map(|p| {
                    RegexBuilder::new(&format!(r"\b{}", regex::escape(p.trim())))
                        .case_insensitive(true)
                        .build()
                        .expect("escaped pattern compiles")
                })
                .collect();
            (r.label.as_str(), pats)
        })
        .collect();

    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (pi, para) in article.paragraphs.iter().enumerate() {
        for (label, pats) in &compiled {
            let Some(start) = pats.iter().filter_map(|re| re.find(para).map(|m| m.start())).min() else {
                continue;
            };
            if !seen.insert((label.to_string(), pi)) {
                continue;
            }
            let stop = para[start..].find(SNIPPET_STOPS).map_or(para.len(), |i| start + i);
            let end = start + para[start..stop].trim_end().len();
            out.push(
                PlotPoint::new(&article.id, PlotKind::PersTactic, &para[start..end], Some(Span { paragraph: pi, start, end }))
                    .with_meta("label", *label),
            );
        }
        if let Some(c) = classifier {
            for span in c.annotate(para)? {
                if span.surface.trim().is_empty() || !seen.insert((span.label.clone(), pi)) {
                    continue;
                }
                let sp = Span {
                    paragraph: pi,
                    start: span.start,
                    end: span.end,
                };
                out.push(
                    PlotPoint::new(&article.id, PlotKind::PersTactic, span.surface, Some(sp))
                        .with_meta("label", span.label),
                );
            }
        }
    }
    Ok(out)
}

/// Sentences carrying a subjective cue word or phrase.
pub fn extract_opinions<S: AsRef<str>>(article: &ArticleRecord, cues: &[S]) -> Vec<PlotPoint> {
    split_sentences(&article.paragraphs)
        .into_iter()
        .filter(|s| cues.iter().any(|c| contains_phrase(&s.text, c.as_ref())))
        .map(|s| {
            PlotPoint::new(
                &article.id,
                PlotKind::Opinion,
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

#[cfg(test)]
mod tests {
    use super::super::testutil::article;
    use super::super::{TacticRule, DEFAULT_OPINION_CUES};
    use super::*;

    fn lex() -> SentimentLexicon {
        SentimentLexicon::new(["hope", "safe"], ["dead", "disaster", "loss"], -0.1, 0.1).unwrap()
    }

    #[test]
    fn sentiment_labels_follow_polarity() {
        let neutral = extract_sentiment(&article(&["Nothing to see."]), &lex());
        assert_eq!(neutral.surface_text, "neutral");
        assert_eq!(neutral.meta["polarity"], 0.0);

        let pos = extract_sentiment(&article(&["There is hope. All safe."]), &lex());
        assert_eq!(pos.surface_text, "positive");
        assert_eq!(pos.meta["polarity"], 1.0);

        let neg = extract_sentiment(&article(&["There is hope, but a disaster, a loss, and five dead."]), &lex());
        assert_eq!(neg.meta["polarity"], -0.5);
        assert_eq!(neg.surface_text, "negative");
    }

    #[test]
    fn overshadow_rule_fires_with_snippet() {
        let rules = TacticRuleSet::new([TacticRule {
            label: "distraction/overshadowing".into(),
            patterns: vec!["overshadow".into()],
        }])
        .unwrap();
        let a = article(&["Critics argued the coverage overshadowed the bigger Greece migrant vessel disaster, which killed hundreds."]);
        let t = extract_tactics(&a, &rules);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].surface_text, "overshadowed the bigger Greece migrant vessel disaster");
        assert_eq!(t[0].label(), Some("distraction/overshadowing"));
        t[0].validate(&a).unwrap();
    }

    #[test]
    fn multi_label_and_empty_rules() {
        let a = article(&["The reckless operator made a heartbreaking choice."]);
        let t = extract_tactics(&a, &TacticRuleSet::default());
        let mut labels: Vec<_> = t.iter().map(|p| p.label().unwrap()).collect();
        labels.sort();
        assert_eq!(labels, ["attack on reputation", "pathos"]);
        assert!(extract_tactics(&a, &TacticRuleSet::empty()).is_empty());
    }

    #[test]
    fn same_label_twice_in_paragraph_collapses() {
        let a = article(&["Reckless, negligent and reckless again."]);
        let t = extract_tactics(&a, &TacticRuleSet::default());
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].surface_text, "Reckless");
    }

    #[test]
    fn opinions_use_cue_sentences() {
        let a = article(&["Officials should have acted sooner. The train had 38 cars."]);
        let o = extract_opinions(&a, DEFAULT_OPINION_CUES);
        assert_eq!(o.len(), 1);
        assert_eq!(o[0].surface_text, "Officials should have acted sooner.");
        assert!(extract_opinions(&article(&["The train had 38 cars."]), DEFAULT_OPINION_CUES).is_empty());
    }
}
