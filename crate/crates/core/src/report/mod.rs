//! Report generation: keyword prompt sets retrieved from the event plot
//! graph, linearized prompts, generation backends and report assembly.

mod backend;

use std::collections::BTreeMap;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{
    bracket_contents, truncate_to_cap, BackendSpec, GenerationBackend, RemoteBackend, RemoteSpec, StubBackend,
    STUB_INTRO, STUB_LEAD_IN,
};

use crate::extract::{Level, PlotKind};
use crate::graph::{EnoClass, EnoProperty, EventPlotGraph, Iri, Term};
use crate::num::ratio;
use crate::sparql::{execute, template_for, QueryError, TemplateOptions};
use crate::text::{contains_phrase, normalize_whitespace, word_count};

/// Bumped whenever the instruction sentences below change.
pub const PROMPT_VERSION: &str = "v1";

const LEAD_INSTRUCTION: &str =
    "Write the lead paragraph of an intelligence report on this event, stating who was involved, what happened, when, where and why, using these keywords";
const BODY_INSTRUCTION: &str =
    "Write the body of an intelligence report on this event, presenting the evidence and quotations in these keywords";
const TAIL_INSTRUCTION: &str =
    "Write the closing paragraph of an intelligence report on this event, describing the opinions and persuasion tactics in these keywords";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReportError {
    #[error("no plot points retrieved for event {0:?}")]
    EmptyRetrieval(String),
    #[error("the {0} section has no keywords")]
    EmptySection(Level),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("generation backend timed out")]
    BackendTimeout,
    #[error("generation backend returned HTTP {0}")]
    BackendHttp(u16),
    #[error("generation backend unreachable: {0}")]
    BackendTransport(String),
    #[error("malformed backend reply: {0}")]
    BackendReply(String),
    #[error("keyword {keyword:?} is longer than the {cap}-word cap")]
    CapUnsatisfiable { keyword: String, cap: usize },
    #[error("environment variable {0} holding the backend token is not set")]
    MissingToken(String),
    #[error("invalid generation config: {0}")]
    InvalidConfig(String),
}

pub fn instruction(level: Level) -> &'static str {
    match level {
        Level::Lead => LEAD_INSTRUCTION,
        Level::Body => BODY_INSTRUCTION,
        Level::Tail => TAIL_INSTRUCTION,
    }
}

/// Which plot kinds feed each prompt section.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptSetOptions {
    pub lead: Vec<PlotKind>,
    pub body: Vec<PlotKind>,
    pub tail: Vec<PlotKind>,
    /// Treat the event query as a regex rather than literal text.
    pub raw_regex: bool,
}

impl Default for PromptSetOptions {
    fn default() -> Self {
        use PlotKind::*;
        Self {
            lead: vec![Who, What, When, Where, Why],
            body: vec![Evidence, Quote],
            tail: vec![PersTactic],
            raw_regex: false,
        }
    }
}

impl PromptSetOptions {
    pub fn kinds(&self, level: Level) -> &[PlotKind] {
        match level {
            Level::Lead => &self.lead,
            Level::Body => &self.body,
            Level::Tail => &self.tail,
        }
    }

    pub fn validate(&self) -> Result<(), ReportError> {
        for level in Level::ALL {
            if let Some(k) = self.kinds(level).iter().find(|k| k.level() != level) {
                return Err(ReportError::InvalidConfig(format!("{k} does not belong to the {level} section")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptKeyword {
    pub text: String,
    pub kind: PlotKind,
    /// Plot points whose value produced this keyword.
    pub points: Vec<Iri>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NarrativePromptSet {
    pub event_query: String,
    pub lead: Vec<PromptKeyword>,
    pub body: Vec<PromptKeyword>,
    pub tail: Vec<PromptKeyword>,
}

impl NarrativePromptSet {
    pub fn section(&self, level: Level) -> &[PromptKeyword] {
        match level {
            Level::Lead => &self.lead,
            Level::Body => &self.body,
            Level::Tail => &self.tail,
        }
    }

    pub fn keywords(&self, level: Level) -> Vec<&str> {
        self.section(level).iter().map(|k| k.text.as_str()).collect()
    }

    /// Keyword text to the plot-point IRIs behind it, per section.
    pub fn provenance(&self, level: Level) -> BTreeMap<&str, &[Iri]> {
        self.section(level).iter().map(|k| (k.text.as_str(), k.points.as_slice())).collect()
    }

    pub fn is_empty(&self) -> bool {
        Level::ALL.iter().all(|l| self.section(*l).is_empty())
    }
}

/// Plot kind of a point node, read off its leaf class.
pub fn point_kind(g: &EventPlotGraph, point: &Iri) -> Option<PlotKind> {
    let leaf = EnoClass::leaves().into_iter().find(|c| g.has_type(point, &c.iri()))?;
    Some(match leaf {
        EnoClass::Who => PlotKind::Who,
        EnoClass::What => PlotKind::What,
        EnoClass::When => PlotKind::When,
        EnoClass::Where => PlotKind::Where,
        EnoClass::Why => PlotKind::Why,
        EnoClass::Evidence => PlotKind::Evidence,
        EnoClass::Quote => PlotKind::Quote,
        EnoClass::MediaObject => {
            let media = g.objects(point, &EnoProperty::MediaType.iri());
            match media.first().map(Term::str_value) {
                Some("video") => PlotKind::Video,
                Some("audio") => PlotKind::Audio,
                _ => PlotKind::Photo,
            }
        }
        EnoClass::Opinion => PlotKind::Opinion,
        EnoClass::PersTactic => PlotKind::PersTactic,
        EnoClass::Sentiment => PlotKind::Sentiment,
        _ => return None,
    })
}

fn section_keywords(
    g: &EventPlotGraph,
    level: Level,
    event: &str,
    opts: &PromptSetOptions,
) -> Result<Vec<PromptKeyword>, ReportError> {
    let q = template_for(level, event, TemplateOptions { raw_regex: opts.raw_regex })?;
    let rows = execute(g, &q)?;
    let mut hits: Vec<(PlotKind, String, Iri)> = Vec::new();
    for i in 0..rows.len() {
        let row = rows.row_map(i);
        let (Some(Term::Literal(value)), Some(Term::Iri(point))) = (row.get("value"), row.get("point")) else {
            continue;
        };
        let Some(kind) = point_kind(g, point) else { continue };
        if !opts.kinds(level).contains(&kind) {
            continue;
        }
        let text = normalize_whitespace(value.lexical());
        if !text.is_empty() {
            hits.push((kind, text, point.clone()));
        }
    }
    hits.sort();
    let mut out: Vec<PromptKeyword> = Vec::new();
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    for (kind, text, point) in hits {
        let key = text.to_lowercase();
        match index.get(&key) {
            Some(&i) => {
                if !out[i].points.contains(&point) {
                    out[i].points.push(point);
                }
            }
            None => {
                index.insert(key, out.len());
                out.push(PromptKeyword {
                    text,
                    kind,
                    points: vec![point],
                });
            }
        }
    }
    for k in &mut out {
        k.points.sort();
    }
    Ok(out)
}

/// Runs the three section templates for `event` and collects keywords.
pub fn build_prompt_set(
    g: &EventPlotGraph,
    event: &str,
    opts: &PromptSetOptions,
) -> Result<NarrativePromptSet, ReportError> {
    opts.validate()?;
    let ps = NarrativePromptSet {
        event_query: event.to_string(),
        lead: section_keywords(g, Level::Lead, event, opts)?,
        body: section_keywords(g, Level::Body, event, opts)?,
        tail: section_keywords(g, Level::Tail, event, opts)?,
    };
    if ps.is_empty() {
        return Err(ReportError::EmptyRetrieval(event.to_string()));
    }
    Ok(ps)
}

/// `"<instruction>: <k1, k2, ...>"`
pub fn linearize_keywords(level: Level, keywords: &[&str]) -> Result<String, ReportError> {
    if keywords.is_empty() {
        return Err(ReportError::EmptySection(level));
    }
    Ok(format!("{}: <{}>", instruction(level), keywords.join(", ")))
}

pub fn linearize(ps: &NarrativePromptSet, level: Level) -> Result<String, ReportError> {
    linearize_keywords(level, &ps.keywords(level))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub lead_body_word_cap: usize,
    pub tail_word_cap: usize,
    pub backend: BackendSpec,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            lead_body_word_cap: 500,
            tail_word_cap: 100,
            backend: BackendSpec::Stub,
        }
    }
}

impl GenerationConfig {
    pub fn cap(&self, level: Level) -> usize {
        match level {
            Level::Tail => self.tail_word_cap,
            _ => self.lead_body_word_cap,
        }
    }

    pub fn validate(&self) -> Result<(), ReportError> {
        if self.lead_body_word_cap == 0 || self.tail_word_cap == 0 {
            return Err(ReportError::InvalidConfig("word caps must be at least 1".into()));
        }
        if let BackendSpec::Remote(r) = &self.backend {
            r.validate()?;
        }
        Ok(())
    }

    pub fn make_backend(&self) -> Result<Box<dyn GenerationBackend>, ReportError> {
        self.validate()?;
        Ok(match &self.backend {
            BackendSpec::Stub => Box::new(StubBackend),
            BackendSpec::Remote(r) => Box::new(RemoteBackend::from_spec(r.clone())?),
        })
    }
}

/// Generates one section and enforces the cap on whatever comes back.
pub fn generate_section(backend: &dyn GenerationBackend, prompt: &str, cap: usize) -> Result<String, ReportError> {
    let text = backend.generate(prompt, cap)?;
    Ok(truncate_to_cap(&text, cap))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSection {
    pub text: String,
    pub keywords: Vec<String>,
    pub provenance: Vec<Iri>,
    pub coverage: f64,
    pub word_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntelligenceReport {
    pub event_query: String,
    pub prompt_version: String,
    pub backend_id: String,
    pub generated_at: DateTime<Utc>,
    pub lead: Option<ReportSection>,
    pub body: Option<ReportSection>,
    pub tail: Option<ReportSection>,
}

/// Share of `keywords` found in `text` as whole phrases.
pub fn keyword_coverage<S: AsRef<str>>(text: &str, keywords: &[S]) -> f64 {
    let hit = keywords.iter().filter(|k| contains_phrase(text, k.as_ref())).count();
    ratio(hit, keywords.len())
}

/// Builds the report record from generated section texts. Sections with no
/// text (or no keywords) are left out.
pub fn assemble_report(
    ps: &NarrativePromptSet,
    texts: &BTreeMap<Level, String>,
    backend_id: &str,
    generated_at: DateTime<Utc>,
) -> IntelligenceReport {
    let section = |level: Level| {
        let text = texts.get(&level)?;
        let kws = ps.section(level);
        if kws.is_empty() {
            return None;
        }
        let keywords: Vec<String> = kws.iter().map(|k| k.text.clone()).collect();
        let mut provenance: Vec<Iri> = kws.iter().flat_map(|k| k.points.iter().cloned()).collect();
        provenance.sort();
        provenance.dedup();
        Some(ReportSection {
            coverage: keyword_coverage(text, &keywords),
            word_count: word_count(text),
            text: text.clone(),
            keywords,
            provenance,
        })
    };
    IntelligenceReport {
        event_query: ps.event_query.clone(),
        prompt_version: PROMPT_VERSION.to_string(),
        backend_id: backend_id.to_string(),
        generated_at,
        lead: section(Level::Lead),
        body: section(Level::Body),
        tail: section(Level::Tail),
    }
}

/// Linearizes and generates every non-empty section (concurrently), then
/// assembles the report.
pub fn generate_report(
    ps: &NarrativePromptSet,
    backend: &dyn GenerationBackend,
    cfg: &GenerationConfig,
    generated_at: DateTime<Utc>,
) -> Result<IntelligenceReport, ReportError> {
    cfg.validate()?;
    let mut prompts = Vec::new();
    for level in Level::ALL {
        if !ps.section(level).is_empty() {
            prompts.push((level, linearize(ps, level)?));
        }
    }
    let results: Vec<(Level, Result<String, ReportError>)> = std::thread::scope(|s| {
        let handles: Vec<_> = prompts
            .iter()
            .map(|(level, prompt)| {
                let cap = cfg.cap(*level);
                (*level, s.spawn(move || generate_section(backend, prompt, cap)))
            })
            .collect();
        handles
            .into_iter()
            .map(|(l, h)| (l, h.join().expect("generation thread panicked")))
            .collect()
    });
    let mut texts = BTreeMap::new();
    for (level, r) in results {
        texts.insert(level, r?);
    }
    Ok(assemble_report(ps, &texts, &backend.id(), generated_at))
}

impl IntelligenceReport {
    pub fn section(&self, level: Level) -> Option<&ReportSection> {
        match level {
            Level::Lead => self.lead.as_ref(),
            Level::Body => self.body.as_ref(),
            Level::Tail => self.tail.as_ref(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// Markdown with one heading per section.
    pub fn render_markdown(&self) -> String {
        let mut out = format!("# Intelligence report: {}\n\n", self.event_query);
        out.push_str(&format!(
            "Generated {} by `{}` (prompt {}).\n",
            self.generated_at.to_rfc3339_opts(SecondsFormat::Secs, true),
            self.backend_id,
            self.prompt_version
        ));
        for level in Level::ALL {
            let Some(s) = self.section(level) else { continue };
            let title = match level {
                Level::Lead => "Lead",
                Level::Body => "Body",
                Level::Tail => "Tail",
            };
            out.push_str(&format!("\n## {title}\n\n{}\n\n", s.text));
            out.push_str(&format!(
                "_Keyword coverage {:.2} ({} words). Sources: {}_\n",
                s.coverage,
                s.word_count,
                s.provenance.iter().map(|i| format!("<{i}>")).collect::<Vec<_>>().join(" ")
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{ns, EnoProperty, Literal, Triple};
    use chrono::TimeZone;

    fn add_point(g: &mut EventPlotGraph, article: &Iri, name: &str, class: EnoClass, value: &str) {
        let p = ns::epg(name);
        for c in class.with_ancestors() {
            g.insert(Triple::new(p.clone(), ns::rdf_type(), c.iri()));
        }
        g.insert(Triple::new(p.clone(), EnoProperty::Value.iri(), Literal::string(value)));
        g.insert(Triple::new(article.clone(), EnoProperty::HasPlotPoint.iri(), p));
    }

    fn graph() -> EventPlotGraph {
        let mut g = EventPlotGraph::new();
        let a = ns::epg("NewsA");
        g.insert(Triple::new(a.clone(), ns::rdf_type(), EnoClass::NewsArticle.iri()));
        g.insert(Triple::new(a.clone(), EnoProperty::ArticleHeadline.iri(), Literal::string("Ohio train derails")));
        add_point(&mut g, &a, "P1", EnoClass::Where, "Ohio");
        add_point(&mut g, &a, "P2", EnoClass::Who, "Norfolk Southern");
        add_point(&mut g, &a, "P3", EnoClass::Where, "ohio");
        add_point(&mut g, &a, "P4", EnoClass::When, "3 February");
        add_point(&mut g, &a, "P5", EnoClass::Evidence, "Cars burned for days.");
        add_point(&mut g, &a, "P6", EnoClass::Sentiment, "negative");
        add_point(&mut g, &a, "P7", EnoClass::PersTactic, "overblown claims");
        g
    }

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap()
    }

    #[test]
    fn prompt_set_orders_by_kind_and_dedupes() {
        let ps = build_prompt_set(&graph(), "train", &PromptSetOptions::default()).unwrap();
        assert_eq!(ps.keywords(Level::Lead), ["Norfolk Southern", "3 February", "Ohio"]);
        assert_eq!(ps.lead[2].points, [ns::epg("P1"), ns::epg("P3")]);
        assert_eq!(ps.keywords(Level::Body), ["Cars burned for days."]);
        assert_eq!(ps.keywords(Level::Tail), ["overblown claims"]);

        let mut opts = PromptSetOptions::default();
        opts.tail.push(PlotKind::Sentiment);
        let ps = build_prompt_set(&graph(), "train", &opts).unwrap();
        assert_eq!(ps.keywords(Level::Tail), ["overblown claims", "negative"]);
    }

    #[test]
    fn unknown_event_and_bad_options() {
        assert_eq!(
            build_prompt_set(&graph(), "volcano", &PromptSetOptions::default()),
            Err(ReportError::EmptyRetrieval("volcano".into()))
        );
        let mut opts = PromptSetOptions::default();
        opts.lead.push(PlotKind::Quote);
        assert!(matches!(build_prompt_set(&graph(), "train", &opts), Err(ReportError::InvalidConfig(_))));
    }

    #[test]
    fn linearization() {
        let p = linearize_keywords(Level::Lead, &["A", "B"]).unwrap();
        assert!(p.ends_with(": <A, B>"));
        assert!(p.starts_with(LEAD_INSTRUCTION));
        assert_eq!(bracket_contents(&p), "A, B");
        assert_eq!(linearize_keywords(Level::Tail, &[]), Err(ReportError::EmptySection(Level::Tail)));
    }

    #[test]
    fn coverage_arithmetic() {
        let ps = NarrativePromptSet {
            event_query: "e".into(),
            lead: Vec::new(),
            body: ["debris", "sonar", "implosion", "ROV"]
                .into_iter()
                .map(|t| PromptKeyword {
                    text: t.into(),
                    kind: PlotKind::Evidence,
                    points: vec![ns::epg(t)],
                })
                .collect(),
            tail: Vec::new(),
        };
        let texts = BTreeMap::from([(Level::Body, "Debris and sonar data point to an implosion.".to_string())]);
        let r = assemble_report(&ps, &texts, "x", t0());
        assert_eq!(r.body.as_ref().unwrap().coverage, 0.75);
        assert!(r.lead.is_none() && r.tail.is_none());
    }

    #[test]
    fn stub_report_has_full_coverage_and_stable_bytes() {
        let ps = build_prompt_set(&graph(), "train", &PromptSetOptions::default()).unwrap();
        let cfg = GenerationConfig::default();
        let a = generate_report(&ps, &StubBackend, &cfg, t0()).unwrap();
        let b = generate_report(&ps, &StubBackend, &cfg, t0()).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        for level in Level::ALL {
            let s = a.section(level).unwrap();
            assert_eq!(s.coverage, 1.0);
            assert!(s.word_count <= cfg.cap(level));
        }
        assert_eq!(IntelligenceReport::from_json(&a.to_json()).unwrap(), a);
        let md = a.render_markdown();
        assert!(md.contains("## Lead") && md.contains("## Body") && md.contains("## Tail"));
    }
}
