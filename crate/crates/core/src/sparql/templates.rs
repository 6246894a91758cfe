use regex::Regex;

use super::{parse_query, QueryError, SelectQuery};
use crate::extract::Level;

const LEAD: &str = include_str!("../../queries/lead.rq");
const BODY: &str = include_str!("../../queries/body.rq");
const TAIL: &str = include_str!("../../queries/tail.rq");
const PLACEHOLDER: &str = "{{EVENT}}";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TemplateOptions {
    /// Use the event text as a regex instead of escaping it.
    pub raw_regex: bool,
}

fn sparql_string_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n")
}

/// The template for `level` with the event query substituted.
pub fn template_text(level: Level, event: &str, opts: TemplateOptions) -> Result<String, QueryError> {
    if event.trim().is_empty() {
        return Err(QueryError::InvalidRegex {
            pattern: event.to_string(),
            message: "event query is empty".into(),
        });
    }
    let pattern = if opts.raw_regex {
        Regex::new(event).map_err(|e| QueryError::InvalidRegex {
            pattern: event.to_string(),
            message: e.to_string(),
        })?;
        event.to_string()
    } else {
        regex::escape(event)
    };
    let template = match level {
        Level::Lead => LEAD,
        Level::Body => BODY,
        Level::Tail => TAIL,
    };
    Ok(template.replace(PLACEHOLDER, &sparql_string_escape(&pattern)))
}

pub fn template_for(level: Level, event: &str, opts: TemplateOptions) -> Result<SelectQuery, QueryError> {
    parse_query(&template_text(level, event, opts)?)
}

pub fn lead_template(event: &str) -> Result<SelectQuery, QueryError> {
    template_for(Level::Lead, event, TemplateOptions::default())
}

pub fn body_template(event: &str) -> Result<SelectQuery, QueryError> {
    template_for(Level::Body, event, TemplateOptions::default())
}

pub fn tail_template(event: &str) -> Result<SelectQuery, QueryError> {
    template_for(Level::Tail, event, TemplateOptions::default())
}
