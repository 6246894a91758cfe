use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::ReportError;
use crate::http::{ReqwestTransport, Transport, TransportError};
use crate::text::{normalize_whitespace, word_count};

/// Fixed carrier text used by [`StubBackend`]. Anything else in stub output
/// comes from the prompt's keyword list.
pub const STUB_INTRO: &str = "This section is generated from retrieved plot points.";
pub const STUB_LEAD_IN: &str = "Reported details:";

pub trait GenerationBackend: Send + Sync {
    fn id(&self) -> String;
    /// Produces at most `cap` words for `prompt`.
    fn generate(&self, prompt: &str, cap: usize) -> Result<String, ReportError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendSpec {
    Stub,
    Remote(RemoteSpec),
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec::Stub
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteSpec {
    pub endpoint: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default)]
    pub token_env: Option<String>,
    pub model: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
}

fn default_timeout_secs() -> u64 {
    30
}

fn default_retries() -> u32 {
    3
}

fn default_backoff_ms() -> u64 {
    500
}

impl RemoteSpec {
    pub fn validate(&self) -> Result<(), ReportError> {
        if self.endpoint.trim().is_empty() {
            return Err(ReportError::InvalidConfig("remote endpoint is empty".into()));
        }
        if self.timeout_secs == 0 {
            return Err(ReportError::InvalidConfig("remote timeout must be positive".into()));
        }
        Ok(())
    }
}

/// The keyword list between the last `<` and the final `>` of a prompt.
pub fn bracket_contents(prompt: &str) -> &str {
    let trimmed = prompt.trim_end();
    let body = trimmed.strip_suffix('>').unwrap_or(trimmed);
    match body.rfind(": <") {
        Some(i) => &body[i + 3..],
        None => body.rfind('<').map_or(body, |i| &body[i + 1..]),
    }
}

/// Offline backend: restates the prompt keywords in fixed carrier text.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubBackend;

impl GenerationBackend for StubBackend {
    fn id(&self) -> String {
        "stub".into()
    }

    fn generate(&self, prompt: &str, cap: usize) -> Result<String, ReportError> {
        let keywords: Vec<String> = bracket_contents(prompt)
            .split(", ")
            .map(normalize_whitespace)
            .filter(|k| !k.is_empty())
            .collect();
        if let Some(k) = keywords.iter().find(|k| word_count(k) > cap) {
            return Err(ReportError::CapUnsatisfiable {
                keyword: k.clone(),
                cap,
            });
        }
        let list = keywords.join(", ");
        let stop = |l: &str| if l.ends_with(['.', '!', '?']) { "" } else { "." };
        let intro_words = word_count(STUB_INTRO);
        let lead_words = word_count(STUB_LEAD_IN);
        let list_words = word_count(&list);
        if intro_words + lead_words + list_words <= cap {
            return Ok(format!("{STUB_INTRO} {STUB_LEAD_IN} {list}{}", stop(&list)));
        }
        if lead_words + list_words <= cap {
            return Ok(format!("{STUB_LEAD_IN} {list}{}", stop(&list)));
        }
        // keep as many whole keywords as fit
        let mut kept = Vec::new();
        let mut used = 0;
        for k in &keywords {
            let w = word_count(k);
            if used + w > cap {
                break;
            }
            used += w;
            kept.push(k.as_str());
        }
        let list = kept.join(", ");
        Ok(format!("{list}{}", stop(&list)))
    }
}

/// Cuts `text` to at most `cap` words, ending at the last sentence boundary
/// inside the limit when there is one.
pub fn truncate_to_cap(text: &str, cap: usize) -> String {
    let words: Vec<&str> = text.split_whitespace().collect();
    if words.len() <= cap {
        return words.join(" ");
    }
    let head = &words[..cap];
    let ends_sentence = |w: &&str| {
        let w = w.trim_end_matches(|c| matches!(c, '"' | '\'' | ')' | '\u{201d}' | '\u{2019}'));
        w.ends_with('.') || w.ends_with('!') || w.ends_with('?')
    };
    match head.iter().rposition(ends_sentence) {
        Some(i) => head[..=i].join(" "),
        None => head.join(" "),
    }
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    max_tokens: usize,
}

#[derive(Deserialize)]
struct CompletionReply {
    text: String,
}

/// Completion endpoint client with retries and exponential backoff.
pub struct RemoteBackend {
    spec: RemoteSpec,
    token: Option<String>,
    transport: Arc<dyn Transport>,
    sleep: Box<dyn Fn(Duration) + Send + Sync>,
}

impl RemoteBackend {
    /// Reads the bearer token from the environment variable named in `spec`.
    pub fn from_spec(spec: RemoteSpec) -> Result<Self, ReportError> {
        spec.validate()?;
        let token = match &spec.token_env {
            Some(var) => Some(std::env::var(var).map_err(|_| ReportError::MissingToken(var.clone()))?),
            None => None,
        };
        Ok(Self::with_transport(spec, token, Arc::new(ReqwestTransport::new())))
    }

    pub fn with_transport(spec: RemoteSpec, token: Option<String>, transport: Arc<dyn Transport>) -> Self {
        Self {
            spec,
            token,
            transport,
            sleep: Box::new(std::thread::sleep),
        }
    }

    /// Replaces the backoff sleep (tests record delays instead of waiting).
    pub fn with_sleep(mut self, sleep: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleep = Box::new(sleep);
        self
    }

    fn attempt(&self, body: &serde_json::Value) -> Result<String, (ReportError, bool)> {
        let timeout = Duration::from_secs(self.spec.timeout_secs);
        let reply = self
            .transport
            .post_json(&self.spec.endpoint, self.token.as_deref(), body, timeout)
            .map_err(|e| match e {
                TransportError::Timeout => (ReportError::BackendTimeout, true),
                other => (ReportError::BackendTransport(other.to_string()), true),
            })?;
        if !(200..300).contains(&reply.status) {
            let retryable = reply.status == 429 || reply.status >= 500;
            return Err((ReportError::BackendHttp(reply.status), retryable));
        }
        serde_json::from_str::<CompletionReply>(&reply.body)
            .map(|r| r.text)
            .map_err(|e| (ReportError::BackendReply(e.to_string()), false))
    }
}

impl GenerationBackend for RemoteBackend {
    fn id(&self) -> String {
        format!("remote:{}", self.spec.model)
    }

    fn generate(&self, prompt: &str, cap: usize) -> Result<String, ReportError> {
        let body = serde_json::to_value(CompletionRequest {
            model: &self.spec.model,
            prompt,
            max_tokens: cap * 2,
        })
        .expect("request serializes");
        let mut delay = Duration::from_millis(self.spec.backoff_ms);
        let mut tries = 0;
        loop {
            match self.attempt(&body) {
                Ok(text) => return Ok(truncate_to_cap(&text, cap)),
                Err((err, retryable)) => {
                    if !retryable || tries >= self.spec.max_retries {
                        return Err(err);
                    }
                    tries += 1;
                    (self.sleep)(delay);
                    delay *= 2;
                }
            }
        }
    }
}
