use std::collections::HashMap;

use chrono::{DateTime, Utc};
use scraper::{ElementRef, Html, Selector};

use super::{parse_timestamp, ArticleRecord, FeedEntry, FeedSource, IngestError, MediaKind, MediaLink};
use crate::text::normalize_whitespace;

const BOILERPLATE: &[&str] = &[
    "script", "style", "nav", "header", "footer", "aside", "form", "noscript", "template", "button",
];

fn selector(s: &str) -> Selector {
    Selector::parse(s).expect("static selector")
}

fn in_boilerplate(el: &ElementRef<'_>) -> bool {
    el.ancestors()
        .filter_map(ElementRef::wrap)
        .any(|a| BOILERPLATE.contains(&a.value().name()))
}

fn element_text(el: &ElementRef<'_>) -> String {
    normalize_whitespace(&el.text().collect::<String>())
}

/// Picks the article paragraphs: every `<p>` outside boilerplate containers
/// scores its parent with its text length and its grandparent with half of
/// it; the highest-scoring container wins (earliest on ties) and its
/// descendant paragraphs are returned in document order.
fn content_paragraphs(doc: &Html) -> Vec<String> {
    let p_sel = selector("p");
    let mut eligible = Vec::new();
    for p in doc.select(&p_sel) {
        if in_boilerplate(&p) {
            continue;
        }
        let text = element_text(&p);
        if !text.is_empty() {
            eligible.push((p, text));
        }
    }
    if eligible.is_empty() {
        return Vec::new();
    }

    let mut scores: HashMap<ego_tree::NodeId, (f64, usize)> = HashMap::new();
    let mut order = 0usize;
    for (p, text) in &eligible {
        let len = text.chars().count() as f64;
        let mut ancestors = p.ancestors();
        for weight in [1.0, 0.5] {
            if let Some(node) = ancestors.next() {
                let entry = scores.entry(node.id()).or_insert_with(|| {
                    order += 1;
                    (0.0, order)
                });
                entry.0 += len * weight;
            }
        }
    }
    let best = scores
        .iter()
        .max_by(|a, b| a.1 .0.total_cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
        .map(|(id, _)| *id)
        .expect("non-empty scores");

    eligible
        .into_iter()
        .filter(|(p, _)| p.ancestors().any(|a| a.id() == best))
        .map(|(_, t)| t)
        .collect()
}

fn media_links(doc: &Html) -> Vec<MediaLink> {
    let sel = selector("img, video, audio, source");
    let mut out: Vec<MediaLink> = Vec::new();
    for el in doc.select(&sel) {
        if in_boilerplate(&el) {
            continue;
        }
        let Some(src) = el.value().attr("src").map(str::trim).filter(|s| !s.is_empty()) else {
            continue;
        };
        let kind = match el.value().name() {
            "img" => MediaKind::Photo,
            "video" => MediaKind::Video,
            "audio" => MediaKind::Audio,
            _ => match el.parent().and_then(ElementRef::wrap).map(|p| p.value().name()) {
                Some("video") => MediaKind::Video,
                Some("audio") => MediaKind::Audio,
                _ => continue,
            },
        };
        let link = MediaLink {
            kind,
            url: src.to_string(),
        };
        if !out.contains(&link) {
            out.push(link);
        }
    }
    out
}

fn first_text(doc: &Html, sel: &str) -> Option<String> {
    doc.select(&selector(sel))
        .map(|e| element_text(&e))
        .find(|t| !t.is_empty())
}

fn meta_content(doc: &Html, sel: &str) -> Option<String> {
    doc.select(&selector(sel))
        .filter_map(|e| e.value().attr("content").map(normalize_whitespace))
        .find(|t| !t.is_empty())
}

fn page_published(doc: &Html) -> Option<DateTime<Utc>> {
    meta_content(doc, r#"meta[property="article:published_time"]"#)
        .and_then(|s| parse_timestamp(&s))
        .or_else(|| {
            doc.select(&selector("time[datetime]"))
                .filter_map(|e| e.value().attr("datetime"))
                .find_map(parse_timestamp)
        })
}

/// Turns a downloaded article page into an [`ArticleRecord`].
///
/// The headline comes from the feed entry title (falling back to the first
/// `<h1>`, then `<title>`), the body from the densest paragraph container
/// with scripts, styles and navigation stripped, and media links from
/// `img`, `video`, `audio` and nested `source` elements. Pages with no
/// paragraph text are rejected with [`IngestError::EmptyBody`].
pub fn extract_article(
    html: &str,
    entry: &FeedEntry,
    source: &FeedSource,
    fetched_at: DateTime<Utc>,
) -> Result<ArticleRecord, IngestError> {
    if html.trim().is_empty() {
        return Err(IngestError::EmptyBody);
    }
    let doc = Html::parse_document(html);
    let paragraphs = content_paragraphs(&doc);
    if paragraphs.is_empty() {
        return Err(IngestError::EmptyBody);
    }
    let headline = Some(normalize_whitespace(&entry.title))
        .filter(|t| !t.is_empty())
        .or_else(|| first_text(&doc, "h1"))
        .or_else(|| first_text(&doc, "title"))
        .unwrap_or_default();
    let authors = if entry.authors.is_empty() {
        meta_content(&doc, r#"meta[name="author"]"#).into_iter().collect()
    } else {
        entry.authors.clone()
    };
    let published = entry.published.or_else(|| page_published(&doc));
    Ok(ArticleRecord::from_parts(
        headline,
        authors,
        source.name.clone(),
        entry.link.clone(),
        published,
        paragraphs,
        media_links(&doc),
        fetched_at,
    ))
}

/// Imports a locally supplied report document (plain text or loose HTML).
///
/// Plain text is split into paragraphs on blank lines; a single-line first
/// block is taken as the headline.
pub fn import_report(
    text: &str,
    url: &str,
    source: &FeedSource,
    fetched_at: DateTime<Utc>,
) -> Result<ArticleRecord, IngestError> {
    let lower = text.to_ascii_lowercase();
    if lower.contains("<p") || lower.contains("<html") || lower.contains("<body") {
        let entry = FeedEntry {
            title: String::new(),
            link: url.to_string(),
            authors: Vec::new(),
            summary: None,
            published: None,
        };
        return extract_article(text, &entry, source, fetched_at);
    }

    let normalized = text.replace("\r\n", "\n");
    let mut blocks: Vec<&str> = normalized
        .split("\n\n")
        .map(str::trim)
        .filter(|b| !b.is_empty())
        .collect();
    if blocks.is_empty() {
        return Err(IngestError::EmptyBody);
    }
    let headline = if blocks.len() > 1 && !blocks[0].contains('\n') {
        normalize_whitespace(blocks.remove(0))
    } else {
        normalize_whitespace(blocks[0].lines().next().unwrap_or_default())
    };
    let paragraphs = blocks.into_iter().map(normalize_whitespace).collect();
    Ok(ArticleRecord::from_parts(
        headline,
        Vec::new(),
        source.name.clone(),
        url.to_string(),
        None,
        paragraphs,
        Vec::new(),
        fetched_at,
    ))
}
