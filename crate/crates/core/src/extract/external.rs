use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::ExtractError;
use crate::http::{ReqwestTransport, Transport};

/// One labelled span returned by an external model. Offsets are byte
/// offsets into the text that was sent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalSpan {
    pub surface: String,
    pub label: String,
    pub start: usize,
    pub end: usize,
}

/// Slot for an external entity recognizer or tactic classifier.
pub trait SpanAnnotator: Send + Sync {
    fn annotate(&self, text: &str) -> Result<Vec<ExternalSpan>, ExtractError>;
}

#[derive(Deserialize)]
struct Reply {
    entities: Vec<ExternalSpan>,
}

/// Posts `{"text": ...}` and expects `{"entities": [{surface, label, start, end}]}`.
pub struct HttpAnnotator {
    url: String,
    timeout: Duration,
    transport: Arc<dyn Transport>,
}

impl HttpAnnotator {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        Self::with_transport(url, timeout, Arc::new(ReqwestTransport::new()))
    }

    pub fn with_transport(url: impl Into<String>, timeout: Duration, transport: Arc<dyn Transport>) -> Self {
        Self {
            url: url.into(),
            timeout,
            transport,
        }
    }
}

impl SpanAnnotator for HttpAnnotator {
    fn annotate(&self, text: &str) -> Result<Vec<ExternalSpan>, ExtractError> {
        let body = serde_json::json!({ "text": text });
        let reply = self
            .transport
            .post_json(&self.url, None, &body, self.timeout)
            .map_err(|e| ExtractError::External(e.to_string()))?;
        if !(200..300).contains(&reply.status) {
            return Err(ExtractError::External(format!("{} returned status {}", self.url, reply.status)));
        }
        let parsed: Reply =
            serde_json::from_str(&reply.body).map_err(|e| ExtractError::External(format!("bad reply: {e}")))?;
        Ok(parsed
            .entities
            .into_iter()
            .filter(|s| text.get(s.start..s.end) == Some(s.surface.as_str()))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::{HttpReply, TransportError};
    use serde_json::Value;

    struct Canned(u16, &'static str);

    impl Transport for Canned {
        fn post_json(&self, _: &str, _: Option<&str>, body: &Value, _: Duration) -> Result<HttpReply, TransportError> {
            assert!(body["text"].is_string());
            Ok(HttpReply {
                status: self.0,
                body: self.1.to_string(),
            })
        }
    }

    #[test]
    fn parses_entities_and_drops_misaligned_spans() {
        let a = HttpAnnotator::with_transport(
            "http://ner.test",
            Duration::from_secs(1),
            Arc::new(Canned(
                200,
                r#"{"entities":[{"surface":"Titan","label":"PRODUCT","start":4,"end":9},
                               {"surface":"Nope","label":"ORG","start":0,"end":4}]}"#,
            )),
        );
        let spans = a.annotate("The Titan sank").unwrap();
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].label, "PRODUCT");
    }

    #[test]
    fn error_status_is_reported() {
        let a = HttpAnnotator::with_transport("http://ner.test", Duration::from_secs(1), Arc::new(Canned(500, "")));
        assert!(matches!(a.annotate("x"), Err(ExtractError::External(_))));
    }
}
