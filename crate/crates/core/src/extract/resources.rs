use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::external::SpanAnnotator;
use super::{ExtractError, PlotKind};

pub const DEFAULT_EVIDENCE_K: usize = 4;
pub const DEFAULT_MIN_QUOTE_WORDS: usize = 3;
pub const DEFAULT_OPINION_CUES: &[&str] = &[
    "believe",
    "believes",
    "clearly",
    "should",
    "outrageous",
    "in my view",
    "in our view",
    "ought to",
    "must be held",
    "unacceptable",
];

const DEFAULT_CAUSAL_CUES: &[&str] = &["cause", "causing", "caused by", "because", "since", "after", "for", "as", "of"];

const DEFAULT_POSITIVE: &[&str] = &[
    "safe", "safely", "rescued", "success", "successful", "hope", "hopeful", "relief", "praised", "recovered",
    "improve", "improved", "support", "welcome", "welcomed", "good", "great", "positive", "resilient", "brave",
];

const DEFAULT_NEGATIVE: &[&str] = &[
    "dead", "died", "death", "deaths", "killed", "disaster", "catastrophic", "implosion", "imploded", "toxic",
    "failure", "failed", "tragedy", "tragic", "fear", "fears", "danger", "dangerous", "crisis", "loss", "lost",
    "missing", "derailed", "derailment", "evacuate", "evacuated", "burning", "explosion", "contaminated", "anger",
    "warned", "criticism", "criticized", "blame", "sick",
];

/// The entity label taxonomy used for the 5W elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[allow(non_camel_case_types)]
pub enum EntityLabel {
    PERSON,
    NORP,
    ORG,
    EVENT,
    FAC,
    PRODUCT,
    WORK_OF_ART,
    LAW,
    MONEY,
    LANGUAGE,
    PERCENT,
    QUANTITY,
    ORDINAL,
    CARDINAL,
    DATE,
    TIME,
    GPE,
    LOC,
}

impl EntityLabel {
    pub const ALL: [EntityLabel; 18] = [
        EntityLabel::PERSON,
        EntityLabel::NORP,
        EntityLabel::ORG,
        EntityLabel::EVENT,
        EntityLabel::FAC,
        EntityLabel::PRODUCT,
        EntityLabel::WORK_OF_ART,
        EntityLabel::LAW,
        EntityLabel::MONEY,
        EntityLabel::LANGUAGE,
        EntityLabel::PERCENT,
        EntityLabel::QUANTITY,
        EntityLabel::ORDINAL,
        EntityLabel::CARDINAL,
        EntityLabel::DATE,
        EntityLabel::TIME,
        EntityLabel::GPE,
        EntityLabel::LOC,
    ];

    pub fn kind(self) -> PlotKind {
        use EntityLabel::*;
        match self {
            PERSON | NORP | ORG => PlotKind::Who,
            EVENT | FAC | PRODUCT | WORK_OF_ART | LAW | MONEY | LANGUAGE | PERCENT | QUANTITY | ORDINAL
            | CARDINAL => PlotKind::What,
            DATE | TIME => PlotKind::When,
            GPE | LOC => PlotKind::Where,
        }
    }

    pub fn as_str(self) -> &'static str {
        use EntityLabel::*;
        match self {
            PERSON => "PERSON",
            NORP => "NORP",
            ORG => "ORG",
            EVENT => "EVENT",
            FAC => "FAC",
            PRODUCT => "PRODUCT",
            WORK_OF_ART => "WORK_OF_ART",
            LAW => "LAW",
            MONEY => "MONEY",
            LANGUAGE => "LANGUAGE",
            PERCENT => "PERCENT",
            QUANTITY => "QUANTITY",
            ORDINAL => "ORDINAL",
            CARDINAL => "CARDINAL",
            DATE => "DATE",
            TIME => "TIME",
            GPE => "GPE",
            LOC => "LOC",
        }
    }
}

impl fmt::Display for EntityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s.trim())
            .ok_or_else(|| format!("unknown entity label {s:?}"))
    }
}

/// Tokens for gazetteer matching: alphanumeric runs, where `.`, `-` and `'`
/// between two alphanumerics stay inside the token ("U.S", "9pm",
/// "Paul-Henri"). Any other non-space character is a token of its own.
pub(crate) fn gaz_tokens(s: &str) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = s.char_indices().collect();
    let end_of = |i: usize| chars.get(i + 1).map_or(s.len(), |(b, _)| *b);
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphanumeric() {
            let mut j = i;
            while j + 1 < chars.len() {
                let next = chars[j + 1].1;
                if next.is_alphanumeric() {
                    j += 1;
                } else if matches!(next, '.' | '-' | '\'' | '\u{2019}')
                    && chars.get(j + 2).is_some_and(|(_, c)| c.is_alphanumeric())
                {
                    j += 2;
                } else {
                    break;
                }
            }
            out.push((start, end_of(j)));
            i = j + 1;
        } else {
            out.push((start, end_of(i)));
            i += 1;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GazetteerEntry {
    pub surface: String,
    pub label: EntityLabel,
    tokens: Vec<String>,
}

/// Surface form → entity label table, matched case-sensitively by whole
/// tokens with longest match first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Gazetteer {
    entries: Vec<GazetteerEntry>,
}

impl Gazetteer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, EntityLabel)>) -> Result<Self, ExtractError> {
        let mut g = Self::new();
        for (surface, label) in pairs {
            g.insert(surface, label)?;
        }
        Ok(g)
    }

    /// Adds an entry. A repeated surface form keeps its first label.
    pub fn insert(&mut self, surface: &str, label: EntityLabel) -> Result<(), ExtractError> {
        let surface = surface.trim();
        if surface.is_empty() {
            return Err(ExtractError::InvalidResource("empty gazetteer surface form".into()));
        }
        if self.entries.iter().any(|e| e.surface == surface) {
            return Ok(());
        }
        let tokens = gaz_tokens(surface).into_iter().map(|(a, b)| surface[a..b].to_string()).collect();
        self.entries.push(GazetteerEntry {
            surface: surface.to_string(),
            label,
            tokens,
        });
        Ok(())
    }

    pub fn entries(&self) -> &[GazetteerEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries ordered by token length, longest first; ties keep file order.
    pub fn by_length(&self) -> Vec<&GazetteerEntry> {
        let mut v: Vec<_> = self.entries.iter().collect();
        v.sort_by(|a, b| b.tokens.len().cmp(&a.tokens.len()));
        v
    }

    /// Non-overlapping matches in `text` as (byte start, byte end, label).
    pub fn find_all(&self, text: &str) -> Vec<(usize, usize, EntityLabel)> {
        let toks = gaz_tokens(text);
        let ordered = self.by_length();
        let mut out = Vec::new();
        let mut i = 0;
        while i < toks.len() {
            let hit = ordered.iter().find(|e| {
                let n = e.tokens.len();
                i + n <= toks.len() && e.tokens.iter().zip(&toks[i..i + n]).all(|(t, (a, b))| t == &text[*a..*b])
            });
            match hit {
                Some(e) => {
                    let n = e.tokens.len();
                    out.push((toks[i].0, toks[i + n - 1].1, e.label));
                    i += n;
                }
                None => i += 1,
            }
        }
        out
    }

    /// Parses `surface<TAB>label` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str, file: &str) -> Result<Self, ExtractError> {
        let mut g = Self::new();
        for (i, line) in content_lines(text) {
            let err = |message: String| ExtractError::Resource {
                file: file.to_string(),
                line: i,
                message,
            };
            let (surface, label) = line.split_once('\t').ok_or_else(|| err("expected surface<TAB>label".into()))?;
            let label: EntityLabel = label.parse().map_err(err)?;
            g.insert(surface, label).map_err(|e| err(e.to_string()))?;
        }
        Ok(g)
    }

    pub fn load(path: &Path) -> Result<Self, ExtractError> {
        Self::parse(&read(path)?, &path.display().to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalCueSet {
    cues: Vec<String>,
}

impl Default for CausalCueSet {
    fn default() -> Self {
        Self {
            cues: DEFAULT_CAUSAL_CUES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl CausalCueSet {
    /// Cue words that only count when a clause follows them.
    pub const GUARDED: [&'static str; 5] = ["for", "as", "of", "since", "after"];
    pub const CLAUSE_MIN_TOKENS: usize = 3;

    pub fn new<S: AsRef<str>>(cues: impl IntoIterator<Item = S>) -> Result<Self, ExtractError> {
        let cues: Vec<String> = cues
            .into_iter()
            .map(|c| c.as_ref().trim().to_string())
            .filter(|c| !c.is_empty())
            .collect();
        if cues.is_empty() {
            return Err(ExtractError::InvalidResource("causal cue set is empty".into()));
        }
        if let Some(c) = cues.iter().find(|c| c.to_lowercase() != **c) {
            return Err(ExtractError::InvalidResource(format!("causal cue {c:?} is not lowercase")));
        }
        Ok(Self { cues })
    }

    pub fn cues(&self) -> &[String] {
        &self.cues
    }

    pub fn load(path: &Path) -> Result<Self, ExtractError> {
        Self::new(terms(&read(path)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentimentLexicon {
    pub positive: BTreeSet<String>,
    pub negative: BTreeSet<String>,
    pub neg_cut: f64,
    pub pos_cut: f64,
}

impl Default for SentimentLexicon {
    fn default() -> Self {
        Self::new(
            DEFAULT_POSITIVE.iter().copied(),
            DEFAULT_NEGATIVE.iter().copied(),
            -0.1,
            0.1,
        )
        .expect("built-in lexicon is valid")
    }
}

impl SentimentLexicon {
    pub fn new<'a>(
        positive: impl IntoIterator<Item = &'a str>,
        negative: impl IntoIterator<Item = &'a str>,
        neg_cut: f64,
        pos_cut: f64,
    ) -> Result<Self, ExtractError> {
        let lower = |it: &mut dyn Iterator<Item = &'a str>| it.map(|s| s.trim().to_lowercase()).filter(|s| !s.is_empty()).collect();
        let positive: BTreeSet<String> = lower(&mut positive.into_iter());
        let negative: BTreeSet<String> = lower(&mut negative.into_iter());
        if let Some(t) = positive.intersection(&negative).next() {
            return Err(ExtractError::InvalidResource(format!("{t:?} is both positive and negative")));
        }
        if !(neg_cut < 0.0 && 0.0 < pos_cut) {
            return Err(ExtractError::InvalidResource(format!(
                "sentiment thresholds must satisfy neg_cut < 0 < pos_cut, got {neg_cut} and {pos_cut}"
            )));
        }
        Ok(Self {
            positive,
            negative,
            neg_cut,
            pos_cut,
        })
    }

    pub fn load(positive: &Path, negative: &Path, neg_cut: f64, pos_cut: f64) -> Result<Self, ExtractError> {
        let p = read(positive)?;
        let n = read(negative)?;
        Self::new(terms(&p), terms(&n), neg_cut, pos_cut)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TacticRule {
    pub label: String,
    pub patterns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TacticRuleSet {
    rules: Vec<TacticRule>,
}

impl Default for TacticRuleSet {
    fn default() -> Self {
        let rules: &[(&str, &[&str])] = &[
            ("ethos", &["experts say", "according to experts", "as a veteran", "trusted", "credentials"]),
            ("pathos", &["heartbreaking", "devastating", "terrifying", "grieving", "tragic", "horrific"]),
            ("logos", &["statistics show", "data show", "percent of", "evidence shows", "studies show"]),
            ("attack on reputation", &["reckless", "negligent", "incompetent", "cut corners", "ignored warnings"]),
            ("distraction/overshadowing", &["overshadow", "distract", "diverted attention"]),
            ("exaggeration", &["overblown", "exaggerated", "blown out of proportion", "hysteria"]),
        ];
        Self::new(rules.iter().map(|(l, ps)| TacticRule {
            label: l.to_string(),
            patterns: ps.iter().map(|p| p.to_string()).collect(),
        }))
        .expect("built-in tactic rules are valid")
    }
}

impl TacticRuleSet {
    pub fn empty() -> Self {
        Self { rules: Vec::new() }
    }

    pub fn new(rules: impl IntoIterator<Item = TacticRule>) -> Result<Self, ExtractError> {
        let rules: Vec<TacticRule> = rules.into_iter().collect();
        let mut seen = BTreeSet::new();
        for r in &rules {
            if r.label.trim().is_empty() {
                return Err(ExtractError::InvalidResource("tactic rule with empty label".into()));
            }
            if !seen.insert(r.label.as_str()) {
                return Err(ExtractError::InvalidResource(format!("duplicate tactic label {:?}", r.label)));
            }
            if r.patterns.iter().all(|p| p.trim().is_empty()) {
                return Err(ExtractError::InvalidResource(format!("tactic {:?} has no patterns", r.label)));
            }
        }
        Ok(Self { rules })
    }

    pub fn rules(&self) -> &[TacticRule] {
        &self.rules
    }

    /// Parses `label<TAB>pattern1|pattern2` lines.
    pub fn parse(text: &str, file: &str) -> Result<Self, ExtractError> {
        let mut rules = Vec::new();
        for (i, line) in content_lines(text) {
            let err = |message: String| ExtractError::Resource {
                file: file.to_string(),
                line: i,
                message,
            };
            let (label, pats) = line.split_once('\t').ok_or_else(|| err("expected label<TAB>patterns".into()))?;
            let patterns: Vec<String> = pats
                .split('|')
                .map(|p| p.trim().to_string())
                .filter(|p| !p.is_empty())
                .collect();
            if patterns.is_empty() {
                return Err(err(format!("tactic {label:?} has no patterns")));
            }
            rules.push(TacticRule {
                label: label.trim().to_string(),
                patterns,
            });
        }
        Self::new(rules).map_err(|e| ExtractError::Resource {
            file: file.to_string(),
            line: 0,
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ExtractError> {
        Self::parse(&read(path)?, &path.display().to_string())
    }
}

/// Everything the extractor needs, immutable once built.
#[derive(Clone)]
pub struct NpceResources {
    pub gazetteer: Gazetteer,
    pub causal_cues: CausalCueSet,
    pub sentiment: SentimentLexicon,
    pub tactics: TacticRuleSet,
    pub opinion_cues: Vec<String>,
    pub evidence_k: usize,
    pub min_quote_words: usize,
    pub ner: Option<Arc<dyn SpanAnnotator>>,
    pub tactic_classifier: Option<Arc<dyn SpanAnnotator>>,
}

impl Default for NpceResources {
    fn default() -> Self {
        Self {
            gazetteer: Gazetteer::default(),
            causal_cues: CausalCueSet::default(),
            sentiment: SentimentLexicon::default(),
            tactics: TacticRuleSet::default(),
            opinion_cues: DEFAULT_OPINION_CUES.iter().map(|s| s.to_string()).collect(),
            evidence_k: DEFAULT_EVIDENCE_K,
            min_quote_words: DEFAULT_MIN_QUOTE_WORDS,
            ner: None,
            tactic_classifier: None,
        }
    }
}

impl fmt::Debug for NpceResources {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NpceResources")
            .field("gazetteer", &self.gazetteer.len())
            .field("tactics", &self.tactics.rules().len())
            .field("evidence_k", &self.evidence_k)
            .field("min_quote_words", &self.min_quote_words)
            .field("ner", &self.ner.is_some())
            .field("tactic_classifier", &self.tactic_classifier.is_some())
            .finish()
    }
}

impl NpceResources {
    pub fn validate(&self) -> Result<(), ExtractError> {
        if self.evidence_k == 0 {
            return Err(ExtractError::InvalidResource("evidence k must be at least 1".into()));
        }
        if self.min_quote_words == 0 {
            return Err(ExtractError::InvalidResource("minimum quote length must be at least 1".into()));
        }
        Ok(())
    }

    pub fn load_opinion_cues(path: &Path) -> Result<Vec<String>, ExtractError> {
        Ok(terms(&read(path)?).into_iter().map(|s| s.to_lowercase()).collect())
    }
}

fn read(path: &Path) -> Result<String, ExtractError> {
    std::fs::read_to_string(path).map_err(|source| ExtractError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Non-blank, non-comment lines with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn terms(text: &str) -> Vec<&str> {
    content_lines(text).map(|(_, l)| l.trim()).collect()
}
