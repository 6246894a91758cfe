//! Narrative plot concept extraction: turns an article into Lead, Body and
//! Tail plot points.
//!
//! | level | kinds |
//! |-------|-------|
//! | Lead  | Who, What, When, Where, Why |
//! | Body  | Evidence, Quote, Photo, Video, Audio |
//! | Tail  | Opinion, PersTactic, Sentiment |
//!
//! Named entities come from a longest-match gazetteer plus date/time
//! patterns, causal sentences from cue words, evidence from spherical
//! k-means over sentence term vectors, and tail features from rule
//! lexicons. Optional HTTP hooks can add entities and tactic labels from an
//! external model.

mod body;
mod external;
mod lead;
mod resources;
mod tail;

pub use body::{extract_evidence, extract_media, extract_quotes};
pub use external::{ExternalSpan, HttpAnnotator, SpanAnnotator};
pub use lead::{extract_lead, extract_why};
pub use resources::{
    CausalCueSet, EntityLabel, Gazetteer, NpceResources, SentimentLexicon, TacticRule, TacticRuleSet,
    DEFAULT_EVIDENCE_K, DEFAULT_MIN_QUOTE_WORDS, DEFAULT_OPINION_CUES,
};
pub use tail::{extract_opinions, extract_sentiment, extract_tactics, polarity};

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ingest::ArticleRecord;

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("{file}:{line}: {message}")]
    Resource { file: String, line: usize, message: String },
    #[error("invalid resource: {0}")]
    InvalidResource(String),
    #[error("external annotator failed: {0}")]
    External(String),
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("plot point record {line}: {message}")]
    CorruptRecord { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    Lead,
    Body,
    Tail,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Lead, Level::Body, Level::Tail];

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Lead => "Lead",
            Level::Body => "Body",
            Level::Tail => "Tail",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The thirteen plot element kinds, declared in pyramid order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PlotKind {
    Who,
    What,
    When,
    Where,
    Why,
    Evidence,
    Quote,
    Photo,
    Video,
    Audio,
    Opinion,
    PersTactic,
    Sentiment,
}

impl PlotKind {
    pub const ALL: [PlotKind; 13] = [
        PlotKind::Who,
        PlotKind::What,
        PlotKind::When,
        PlotKind::Where,
        PlotKind::Why,
        PlotKind::Evidence,
        PlotKind::Quote,
        PlotKind::Photo,
        PlotKind::Video,
        PlotKind::Audio,
        PlotKind::Opinion,
        PlotKind::PersTactic,
        PlotKind::Sentiment,
    ];

    pub fn level(self) -> Level {
        use PlotKind::*;
        match self {
            Who | What | When | Where | Why => Level::Lead,
            Evidence | Quote | Photo | Video | Audio => Level::Body,
            Opinion | PersTactic | Sentiment => Level::Tail,
        }
    }

    pub fn as_str(self) -> &'static str {
        use PlotKind::*;
        match self {
            Who => "Who",
            What => "What",
            When => "When",
            Where => "Where",
            Why => "Why",
            Evidence => "Evidence",
            Quote => "Quote",
            Photo => "Photo",
            Video => "Video",
            Audio => "Audio",
            Opinion => "Opinion",
            PersTactic => "PersTactic",
            Sentiment => "Sentiment",
        }
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown plot kind {s:?}"))
    }
}

/// Byte range inside one article paragraph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub paragraph: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub id: String,
    pub article_id: String,
    pub level: Level,
    pub kind: PlotKind,
    pub surface_text: String,
    pub span: Option<Span>,
    #[serde(default)]
    pub meta: BTreeMap<String, serde_json::Value>,
}

impl PlotPoint {
    pub fn new(article_id: &str, kind: PlotKind, surface_text: impl Into<String>, span: Option<Span>) -> Self {
        let mut p = Self {
            id: String::new(),
            article_id: article_id.to_string(),
            level: kind.level(),
            kind,
            surface_text: surface_text.into(),
            span,
            meta: BTreeMap::new(),
        };
        p.refresh_id();
        p
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self.refresh_id();
        self
    }

    /// The `label` metadata entry, when present (entity or tactic label).
    pub fn label(&self) -> Option<&str> {
        self.meta.get("label").and_then(|v| v.as_str())
    }

    fn refresh_id(&mut self) {
        let mut h = Sha256::new();
        h.update(self.article_id.as_bytes());
        h.update([0]);
        h.update(self.kind.as_str().as_bytes());
        h.update([0]);
        if let Some(s) = self.span {
            h.update(format!("{}:{}:{}", s.paragraph, s.start, s.end).as_bytes());
        }
        h.update([0]);
        h.update(self.surface_text.as_bytes());
        h.update([0]);
        if let Some(label) = self.label() {
            h.update(label.as_bytes());
        }
        self.id = hex::encode(&h.finalize()[..12]);
    }

    /// Checks the structural invariants against the source article.
    pub fn validate(&self, article: &ArticleRecord) -> Result<(), String> {
        if self.level != self.kind.level() {
            return Err(format!("{} point carries level {}", self.kind, self.level));
        }
        if self.surface_text.trim().is_empty() {
            return Err(format!("{} point has empty surface text", self.kind));
        }
        if let Some(span) = self.span {
            let para = article
                .paragraphs
                .get(span.paragraph)
                .ok_or_else(|| format!("span paragraph {} out of range", span.paragraph))?;
            let text = para
                .get(span.start..span.end)
                .ok_or_else(|| format!("span {}..{} outside paragraph", span.start, span.end))?;
            if text != self.surface_text {
                return Err(format!("span text {text:?} differs from surface {:?}", self.surface_text));
            }
        }
        Ok(())
    }

    fn order_key(&self) -> (PlotKind, Option<Span>, &str, &str) {
        (self.kind, self.span, self.surface_text.as_str(), self.id.as_str())
    }
}

/// Non-fatal finding raised while extracting one article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractDiagnostic {
    pub article_id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionResult {
    pub article_id: String,
    pub plot_points: Vec<PlotPoint>,
    /// article id → ids of the points extracted from it
    pub mapping: BTreeMap<String, Vec<String>>,
    pub diagnostics: Vec<ExtractDiagnostic>,
}

/// Runs every extractor over one article and returns the union, ordered by
/// kind (pyramid order) and then by position in the article.
///
/// An article with no body text still yields its (neutral) sentiment point.
pub fn run_npce(article: &ArticleRecord, res: &NpceResources) -> Result<ExtractionResult, ExtractError> {
    let mut points = Vec::new();
    let mut diagnostics = Vec::new();
    let has_body = !article.body_text.trim().is_empty() && !article.paragraphs.is_empty();

    if has_body {
        points.extend(lead::extract_lead_with(article, &res.gazetteer, &res.causal_cues, res.ner.as_deref())?);
        let (quotes, unbalanced) = body::extract_quotes_with(article, res.min_quote_words);
        points.extend(quotes);
        for paragraph in unbalanced {
            diagnostics.push(ExtractDiagnostic {
                article_id: article.id.clone(),
                message: format!("unbalanced quotes in paragraph {paragraph}"),
            });
        }
        points.extend(extract_evidence(article, res.evidence_k));
        points.extend(extract_media(article));
        points.extend(tail::extract_tactics_with(article, &res.tactics, res.tactic_classifier.as_deref())?);
        points.extend(extract_opinions(article, &res.opinion_cues));
    }
    points.push(extract_sentiment(article, &res.sentiment));

    points.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
    points.dedup_by(|a, b| a.id == b.id);

    let mut mapping = BTreeMap::new();
    mapping.insert(article.id.clone(), points.iter().map(|p| p.id.clone()).collect());
    Ok(ExtractionResult {
        article_id: article.id.clone(),
        plot_points: points,
        mapping,
        diagnostics,
    })
}

/// Writes plot points as newline-delimited JSON.
pub fn write_plot_points(path: &Path, points: &[PlotPoint]) -> Result<(), ExtractError> {
    let io_err = |source| ExtractError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err)?;
    }
    let mut buf = Vec::new();
    for p in points {
        serde_json::to_writer(&mut buf, p).map_err(|e| ExtractError::InvalidResource(e.to_string()))?;
        buf.push(b'\n');
    }
    let mut f = std::fs::File::create(path).map_err(io_err)?;
    f.write_all(&buf).map_err(io_err)
}

pub fn read_plot_points(path: &Path) -> Result<Vec<PlotPoint>, ExtractError> {
    let text = std::fs::read_to_string(path).map_err(|source| ExtractError::Io {
        path: path.display().to_string(),
        source,
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let p: PlotPoint = serde_json::from_str(l).map_err(|e| ExtractError::CorruptRecord {
                line: i + 1,
                message: e.to_string(),
            })?;
            if p.level != p.kind.level() {
                return Err(ExtractError::CorruptRecord {
                    line: i + 1,
                    message: format!("{} point carries level {}", p.kind, p.level),
                });
            }
            Ok(p)
        })
        .collect()
}
