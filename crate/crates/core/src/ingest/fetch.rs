use std::path::{Path, PathBuf};
use std::time::Duration;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("request to {url} failed: {message}")]
    Request { url: String, message: String },
    #[error("{url} returned HTTP {status}")]
    Status { url: String, status: u16 },
    #[error("no local copy of {url} at {path}")]
    Missing { url: String, path: String },
}

/// Retrieves raw feed or page text. Parsers never touch the network; they
/// take whatever a fetcher returned.
pub trait Fetcher: Send + Sync {
    fn fetch(&self, url: &str) -> Result<String, FetchError>;
}

pub struct HttpFetcher {
    client: reqwest::blocking::Client,
}

impl HttpFetcher {
    pub fn new(timeout: Duration) -> Result<Self, FetchError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .user_agent(concat!("plotline/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| FetchError::Request {
                url: String::new(),
                message: e.to_string(),
            })?;
        Ok(Self { client })
    }
}

impl Fetcher for HttpFetcher {
    fn fetch(&self, url: &str) -> Result<String, FetchError> {
        let request_err = |e: reqwest::Error| FetchError::Request {
            url: url.to_string(),
            message: e.to_string(),
        };
        let resp = self.client.get(url).send().map_err(request_err)?;
        let status = resp.status();
        if !status.is_success() {
            return Err(FetchError::Status {
                url: url.to_string(),
                status: status.as_u16(),
            });
        }
        resp.text().map_err(request_err)
    }
}

/// Serves pages from a directory: a URL maps to its last path segment, with
/// `.html` appended when the segment has no extension.
pub struct FileFetcher {
    root: PathBuf,
}

impl FileFetcher {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn local_path(&self, url: &str) -> PathBuf {
        let trimmed = url.split(['?', '#']).next().unwrap_or(url).trim_end_matches('/');
        let segment = trimmed.rsplit('/').next().unwrap_or(trimmed);
        let name = if Path::new(segment).extension().is_some() {
            segment.to_string()
        } else {
            format!("{segment}.html")
        };
        self.root.join(name)
    }
}

impl Fetcher for FileFetcher {
    fn fetch(&self, url: &str) -> Result<String, FetchError> {
        let path = self.local_path(url);
        std::fs::read_to_string(&path).map_err(|_| FetchError::Missing {
            url: url.to_string(),
            path: path.display().to_string(),
        })
    }
}
