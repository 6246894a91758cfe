use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, Context, Result};
use serde::Deserialize;

use plotline::extract::{
    CausalCueSet, Gazetteer, HttpAnnotator, NpceResources, PlotKind, SentimentLexicon, TacticRuleSet,
};
use plotline::ingest::FeedSource;
use plotline::report::{GenerationConfig, PromptSetOptions};

/// Raw TOML layout. Relative paths resolve against the config file's
/// directory.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    store: PathBuf,
    points: PathBuf,
    graph: PathBuf,
    #[serde(default)]
    reports: Option<PathBuf>,
    #[serde(default)]
    feeds: Vec<FeedSource>,
    #[serde(default)]
    fetch_timeout_secs: Option<u64>,
    #[serde(default)]
    resources: RawResources,
    #[serde(default)]
    prompts: RawPrompts,
    #[serde(default)]
    generation: GenerationConfig,
    #[serde(default)]
    evaluation: RawEvaluation,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawResources {
    gazetteer: Option<PathBuf>,
    causal_cues: Option<PathBuf>,
    positive_lexicon: Option<PathBuf>,
    negative_lexicon: Option<PathBuf>,
    sentiment_cuts: Option<(f64, f64)>,
    tactics: Option<PathBuf>,
    opinion_cues: Option<PathBuf>,
    evidence_k: Option<usize>,
    min_quote_words: Option<usize>,
    ner_endpoint: Option<String>,
    tactic_endpoint: Option<String>,
    annotator_timeout_secs: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrompts {
    lead: Option<Vec<String>>,
    body: Option<Vec<String>>,
    tail: Option<Vec<String>>,
    raw_regex: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvaluation {
    reference: Option<PathBuf>,
    gold: Option<PathBuf>,
    annotations: Option<PathBuf>,
    likert: Option<Vec<i64>>,
}

#[derive(Debug, Clone, Default)]
pub struct EvaluationPaths {
    pub reference: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
    pub likert: Vec<i64>,
}

pub struct PipelineConfig {
    pub store: PathBuf,
    pub points: PathBuf,
    pub graph: PathBuf,
    pub reports: PathBuf,
    pub feeds: Vec<FeedSource>,
    pub fetch_timeout: Duration,
    pub resources: NpceResources,
    pub prompts: PromptSetOptions,
    pub generation: GenerationConfig,
    pub evaluation: EvaluationPaths,
}

fn kinds(field: &str, names: &[String], problems: &mut Vec<String>) -> Vec<PlotKind> {
    names
        .iter()
        .filter_map(|n| match n.parse::<PlotKind>() {
            Ok(k) => Some(k),
            Err(_) => {
                problems.push(format!("prompts.{field}: unknown plot kind {n:?}"));
                None
            }
        })
        .collect()
}

impl PipelineConfig {
    /// Reads and checks the whole file, reporting every problem at once.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let raw: RawConfig = toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let at = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };

        let mut problems = Vec::new();
        let mut need = |field: &str, p: &Option<PathBuf>| -> Option<PathBuf> {
            let full = at(p.as_ref()?);
            if !full.exists() {
                problems.push(format!("{field}: {} does not exist", full.display()));
                return None;
            }
            Some(full)
        };
        let r = &raw.resources;
        let gazetteer = need("resources.gazetteer", &r.gazetteer);
        let causal = need("resources.causal_cues", &r.causal_cues);
        let positive = need("resources.positive_lexicon", &r.positive_lexicon);
        let negative = need("resources.negative_lexicon", &r.negative_lexicon);
        let tactics = need("resources.tactics", &r.tactics);
        let opinion = need("resources.opinion_cues", &r.opinion_cues);
        let e = &raw.evaluation;
        let evaluation = EvaluationPaths {
            reference: need("evaluation.reference", &e.reference),
            gold: need("evaluation.gold", &e.gold),
            annotations: need("evaluation.annotations", &e.annotations),
            likert: e.likert.clone().unwrap_or_default(),
        };
        if r.positive_lexicon.is_some() != r.negative_lexicon.is_some() {
            problems.push("resources: positive_lexicon and negative_lexicon must be given together".into());
        }
        for (i, f) in raw.feeds.iter().enumerate() {
            if let Err(err) = f.validate() {
                problems.push(format!("feeds[{i}]: {err}"));
            }
        }
        if let Err(err) = raw.generation.validate() {
            problems.push(format!("generation: {err}"));
        }
        let defaults = PromptSetOptions::default();
        let p = &raw.prompts;
        let prompts = PromptSetOptions {
            lead: p.lead.as_ref().map_or(defaults.lead.clone(), |v| kinds("lead", v, &mut problems)),
            body: p.body.as_ref().map_or(defaults.body.clone(), |v| kinds("body", v, &mut problems)),
            tail: p.tail.as_ref().map_or(defaults.tail.clone(), |v| kinds("tail", v, &mut problems)),
            raw_regex: p.raw_regex.unwrap_or(false),
        };
        if let Err(err) = prompts.validate() {
            problems.push(format!("prompts: {err}"));
        }
        if !problems.is_empty() {
            return Err(anyhow!("config {} has problems:\n  {}", path.display(), problems.join("\n  ")));
        }

        let mut res = NpceResources::default();
        if let Some(g) = gazetteer {
            res.gazetteer = Gazetteer::load(&g)?;
        }
        if let Some(c) = causal {
            res.causal_cues = CausalCueSet::load(&c)?;
        }
        if let (Some(pos), Some(neg)) = (positive, negative) {
            let (lo, hi) = r.sentiment_cuts.unwrap_or((-0.1, 0.1));
            res.sentiment = SentimentLexicon::load(&pos, &neg, lo, hi)?;
        }
        if let Some(t) = tactics {
            res.tactics = TacticRuleSet::load(&t)?;
        }
        if let Some(o) = opinion {
            res.opinion_cues = NpceResources::load_opinion_cues(&o)?;
        }
        if let Some(k) = r.evidence_k {
            res.evidence_k = k;
        }
        if let Some(m) = r.min_quote_words {
            res.min_quote_words = m;
        }
        let timeout = Duration::from_secs(r.annotator_timeout_secs.unwrap_or(10));
        if let Some(url) = &r.ner_endpoint {
            res.ner = Some(Arc::new(HttpAnnotator::new(url.clone(), timeout)));
        }
        if let Some(url) = &r.tactic_endpoint {
            res.tactic_classifier = Some(Arc::new(HttpAnnotator::new(url.clone(), timeout)));
        }
        res.validate()?;

        Ok(Self {
            store: at(&raw.store),
            points: at(&raw.points),
            graph: at(&raw.graph),
            reports: raw.reports.as_deref().map_or_else(|| base.join("reports"), at),
            feeds: raw.feeds,
            fetch_timeout: Duration::from_secs(raw.fetch_timeout_secs.unwrap_or(20)),
            resources: res,
            prompts,
            generation: raw.generation,
            evaluation,
        })
    }
}
