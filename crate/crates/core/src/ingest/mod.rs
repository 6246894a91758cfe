//! News corpus ingestion: RSS feed parsing, HTML article extraction and the
//! line-delimited article store.

mod fetch;
mod html;
mod rss;
mod store;

pub use fetch::{FetchError, Fetcher, FileFetcher, HttpFetcher};
pub use html::{extract_article, import_report};
pub use rss::parse_rss;
pub use store::{ArticleStore, StoreDiagnostic};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed feed: {0}")]
    MalformedFeed(String),
    #[error("article has no paragraph text")]
    EmptyBody,
    #[error("invalid feed source: {0}")]
    InvalidSource(String),
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to serialize record: {0}")]
    Serialize(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FeedKind {
    #[default]
    Rss,
    /// Locally supplied report documents imported as plain text or loose HTML.
    Report,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedSource {
    pub name: String,
    pub url: String,
    #[serde(default)]
    pub kind: FeedKind,
}

impl FeedSource {
    pub fn new(name: impl Into<String>, url: impl Into<String>, kind: FeedKind) -> Result<Self, IngestError> {
        let source = Self {
            name: name.into(),
            url: url.into(),
            kind,
        };
        source.validate()?;
        Ok(source)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.name.trim().is_empty() {
            return Err(IngestError::InvalidSource("empty name".into()));
        }
        if self.url.trim().is_empty() {
            return Err(IngestError::InvalidSource(format!("source {:?} has an empty url", self.name)));
        }
        Ok(())
    }
}

/// One `<item>` of a feed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedEntry {
    pub title: String,
    pub link: String,
    pub authors: Vec<String>,
    pub summary: Option<String>,
    pub published: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaKind {
    Photo,
    Video,
    Audio,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MediaLink {
    pub kind: MediaKind,
    pub url: String,
}

/// A normalized news document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub id: String,
    pub headline: String,
    pub authors: Vec<String>,
    pub source: String,
    pub url: String,
    pub published: Option<DateTime<Utc>>,
    pub body_text: String,
    pub paragraphs: Vec<String>,
    pub media_links: Vec<MediaLink>,
    pub fetched_at: DateTime<Utc>,
}

impl ArticleRecord {
    /// Content-derived identifier: the first 16 bytes of
    /// SHA-256(`url` NUL `body_text`), hex encoded.
    pub fn compute_id(url: &str, body_text: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(url.as_bytes());
        hasher.update([0u8]);
        hasher.update(body_text.as_bytes());
        hex::encode(&hasher.finalize()[..16])
    }

    /// Builds a record from already-normalized paragraphs, computing the
    /// joined body text and id.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        headline: String,
        authors: Vec<String>,
        source: String,
        url: String,
        published: Option<DateTime<Utc>>,
        paragraphs: Vec<String>,
        media_links: Vec<MediaLink>,
        fetched_at: DateTime<Utc>,
    ) -> Self {
        let body_text = paragraphs.join(" ");
        let id = Self::compute_id(&url, &body_text);
        Self {
            id,
            headline,
            authors,
            source,
            url,
            published,
            body_text,
            paragraphs,
            media_links,
            fetched_at,
        }
    }
}

/// Parses the date formats seen in feeds and article metadata: RFC 2822
/// (`pubDate`) and RFC 3339 (`dc:date`, `<time datetime>`). Anything else is
/// treated as unknown rather than guessed.
pub fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if raw.is_empty() {
        return None;
    }
    if let Ok(t) = DateTime::parse_from_rfc2822(raw) {
        return Some(t.with_timezone(&Utc));
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(raw) {
        return Some(t.with_timezone(&Utc));
    }
    if let Ok(d) = chrono::NaiveDate::parse_from_str(raw, "%Y-%m-%d") {
        return d.and_hms_opt(0, 0, 0).map(|n| n.and_utc());
    }
    None
}
