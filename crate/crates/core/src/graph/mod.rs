//! RDF triple store for the event plot graph, the narrative ontology it is
//! typed against, and Turtle persistence.
//!
//! Triples are kept in three ordered indexes (subject, predicate and object
//! first), so any pattern with at least one bound position is a range scan
//! and every result comes back in canonical term order.

mod assert;
mod eno;
mod turtle;

pub use assert::{article_iri, assert_article, assert_plot_point, plot_point_iri};
pub use eno::{ns, EnoClass, EnoProperty, EnoSchema};
pub use turtle::{parse_turtle, serialize_turtle};

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::ops::Bound;

use chrono::{DateTime, SecondsFormat, Utc};
use regex::RegexBuilder;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("invalid IRI {0:?}")]
    InvalidIri(String),
    #[error("invalid {datatype} literal {lexical:?}")]
    InvalidLiteral { lexical: String, datatype: &'static str },
    #[error("{0} is not typed as a news article")]
    UnknownArticle(String),
    #[error("Turtle syntax error at line {line}, column {column}: {message}")]
    TurtleSyntax { line: usize, column: usize, message: String },
}

/// An absolute IRI.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Iri(String);

impl Iri {
    pub fn new(value: impl Into<String>) -> Result<Self, GraphError> {
        let value = value.into();
        let bad = |c: char| c.is_whitespace() || c.is_control() || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\');
        if value.is_empty() || value.contains(bad) || !value.contains(':') {
            return Err(GraphError::InvalidIri(value));
        }
        Ok(Self(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The smallest IRI in the ordering, used as a range-scan bound.
    fn min() -> Self {
        Self(String::new())
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for Iri {
    type Error = GraphError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<Iri> for String {
    fn from(i: Iri) -> Self {
        i.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Datatype {
    String,
    DateTime,
}

impl Datatype {
    pub fn iri(self) -> &'static str {
        match self {
            Datatype::String => "http://www.w3.org/2001/XMLSchema#string",
            Datatype::DateTime => "http://www.w3.org/2001/XMLSchema#dateTime",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    lexical: String,
    datatype: Datatype,
}

impl Literal {
    pub fn string(lexical: impl Into<String>) -> Self {
        Self {
            lexical: lexical.into(),
            datatype: Datatype::String,
        }
    }

    pub fn date_time(t: DateTime<Utc>) -> Self {
        Self {
            lexical: t.to_rfc3339_opts(SecondsFormat::AutoSi, true),
            datatype: Datatype::DateTime,
        }
    }

    pub fn typed(lexical: impl Into<String>, datatype: Datatype) -> Result<Self, GraphError> {
        let lexical = lexical.into();
        if datatype == Datatype::DateTime && DateTime::parse_from_rfc3339(&lexical).is_err() {
            return Err(GraphError::InvalidLiteral {
                lexical,
                datatype: "dateTime",
            });
        }
        Ok(Self { lexical, datatype })
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> Datatype {
        self.datatype
    }
}

/// An RDF term. IRIs order before literals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Term {
    Iri(Iri),
    Literal(Literal),
}

impl Term {
    pub fn iri(value: impl Into<String>) -> Result<Self, GraphError> {
        Iri::new(value).map(Term::Iri)
    }

    pub fn string(lexical: impl Into<String>) -> Self {
        Term::Literal(Literal::string(lexical))
    }

    /// The SPARQL `str()` value: IRI text or literal lexical form.
    pub fn str_value(&self) -> &str {
        match self {
            Term::Iri(i) => i.as_str(),
            Term::Literal(l) => l.lexical(),
        }
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(i) => Some(i),
            Term::Literal(_) => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(l) => Some(l),
            Term::Iri(_) => None,
        }
    }

    fn min() -> Self {
        Term::Iri(Iri::min())
    }
}

impl From<Iri> for Term {
    fn from(i: Iri) -> Self {
        Term::Iri(i)
    }
}

impl From<Literal> for Term {
    fn from(l: Literal) -> Self {
        Term::Literal(l)
    }
}

impl fmt::Display for Term {
    /// N-Triples style rendering.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(i) => write!(f, "<{i}>"),
            Term::Literal(l) => {
                write!(f, "\"{}\"", turtle::escape_string(l.lexical()))?;
                if l.datatype() == Datatype::DateTime {
                    write!(f, "^^<{}>", Datatype::DateTime.iri())?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub s: Iri,
    pub p: Iri,
    pub o: Term,
}

impl Triple {
    pub fn new(s: Iri, p: Iri, o: impl Into<Term>) -> Self {
        Self { s, p, o: o.into() }
    }
}

/// Set of triples with subject-, predicate- and object-first indexes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventPlotGraph {
    spo: BTreeSet<Triple>,
    pos: BTreeSet<(Iri, Term, Iri)>,
    osp: BTreeSet<(Term, Iri, Iri)>,
}

impl EventPlotGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.spo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spo.is_empty()
    }

    /// Adds a triple; returns false when it was already present.
    pub fn insert(&mut self, t: Triple) -> bool {
        if self.spo.contains(&t) {
            return false;
        }
        self.pos.insert((t.p.clone(), t.o.clone(), t.s.clone()));
        self.osp.insert((t.o.clone(), t.s.clone(), t.p.clone()));
        self.spo.insert(t);
        true
    }

    pub fn extend(&mut self, triples: impl IntoIterator<Item = Triple>) {
        for t in triples {
            self.insert(t);
        }
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.spo.contains(t)
    }

    /// All triples in canonical (subject, predicate, object) order.
    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.spo.iter()
    }

    /// Triples matching a pattern where `None` is a wildcard, in canonical order.
    pub fn matches(&self, s: Option<&Iri>, p: Option<&Iri>, o: Option<&Term>) -> Vec<Triple> {
        let mut out: Vec<Triple> = match (s, p, o) {
            (Some(s), Some(p), Some(o)) => {
                let t = Triple::new(s.clone(), p.clone(), o.clone());
                if self.spo.contains(&t) {
                    vec![t]
                } else {
                    vec![]
                }
            }
            (Some(s), p, o) => {
                let lo = Triple::new(s.clone(), p.cloned().unwrap_or_else(Iri::min), Term::min());
                self.spo
                    .range((Bound::Included(lo), Bound::Unbounded))
                    .take_while(|t| &t.s == s && p.map_or(true, |p| &t.p == p))
                    .filter(|t| o.map_or(true, |o| &t.o == o))
                    .cloned()
                    .collect()
            }
            (None, Some(p), o) => {
                let lo = (p.clone(), o.cloned().unwrap_or_else(Term::min), Iri::min());
                self.pos
                    .range((Bound::Included(lo), Bound::Unbounded))
                    .take_while(|(tp, to, _)| tp == p && o.map_or(true, |o| to == o))
                    .map(|(p, o, s)| Triple::new(s.clone(), p.clone(), o.clone()))
                    .collect()
            }
            (None, None, Some(o)) => {
                let lo = (o.clone(), Iri::min(), Iri::min());
                self.osp
                    .range((Bound::Included(lo), Bound::Unbounded))
                    .take_while(|(to, _, _)| to == o)
                    .map(|(o, s, p)| Triple::new(s.clone(), p.clone(), o.clone()))
                    .collect()
            }
            (None, None, None) => self.spo.iter().cloned().collect(),
        };
        out.sort();
        out
    }

    pub fn count(&self, s: Option<&Iri>, p: Option<&Iri>, o: Option<&Term>) -> usize {
        self.matches(s, p, o).len()
    }

    /// Objects of `(s, p, *)`.
    pub fn objects(&self, s: &Iri, p: &Iri) -> Vec<Term> {
        self.matches(Some(s), Some(p), None).into_iter().map(|t| t.o).collect()
    }

    pub fn has_type(&self, s: &Iri, class: &Iri) -> bool {
        self.contains(&Triple::new(s.clone(), ns::rdf_type(), class.clone()))
    }

    /// Checks that the three indexes hold the same triple set.
    pub fn indexes_consistent(&self) -> bool {
        self.spo.len() == self.pos.len()
            && self.spo.len() == self.osp.len()
            && self.spo.iter().all(|t| {
                self.pos.contains(&(t.p.clone(), t.o.clone(), t.s.clone()))
                    && self.osp.contains(&(t.o.clone(), t.s.clone(), t.p.clone()))
            })
    }
}

impl FromIterator<Triple> for EventPlotGraph {
    fn from_iter<I: IntoIterator<Item = Triple>>(iter: I) -> Self {
        let mut g = Self::new();
        g.extend(iter);
        g
    }
}

/// The closure of every news article whose headline matches `event_query`
/// (case-insensitive regex; an invalid regex is matched literally): the
/// article's own triples plus all triples of the plot points it links to.
pub fn subgraph_for_event(g: &EventPlotGraph, event_query: &str) -> EventPlotGraph {
    let re = RegexBuilder::new(event_query)
        .case_insensitive(true)
        .build()
        .unwrap_or_else(|_| {
            RegexBuilder::new(&regex::escape(event_query))
                .case_insensitive(true)
                .build()
                .expect("escaped pattern compiles")
        });
    let headline = EnoProperty::ArticleHeadline.iri();
    let news = EnoClass::NewsArticle.iri();
    let has_point = EnoProperty::HasPlotPoint.iri();

    let mut out = EventPlotGraph::new();
    let mut articles: BTreeSet<Iri> = BTreeSet::new();
    for t in g.matches(None, Some(&headline), None) {
        if re.is_match(t.o.str_value()) && g.has_type(&t.s, &news) {
            articles.insert(t.s);
        }
    }
    let mut queue: VecDeque<Iri> = articles.iter().cloned().collect();
    let mut visited = articles.clone();
    while let Some(node) = queue.pop_front() {
        for t in g.matches(Some(&node), None, None) {
            if articles.contains(&node) && t.p == has_point {
                if let Term::Iri(pt) = &t.o {
                    if visited.insert(pt.clone()) {
                        queue.push_back(pt.clone());
                    }
                }
            }
            out.insert(t);
        }
    }
    out
}

/// One violation found by [`check_well_formed`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WellFormednessIssue {
    pub instance: Iri,
    pub message: String,
}

impl fmt::Display for WellFormednessIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.instance, self.message)
    }
}

/// Every plot-point instance must carry exactly one leaf class and be linked
/// from at least one news article.
pub fn check_well_formed(g: &EventPlotGraph) -> Vec<WellFormednessIssue> {
    let rdf_type = ns::rdf_type();
    let news = EnoClass::NewsArticle.iri();
    let has_point = EnoProperty::HasPlotPoint.iri();
    let leaves: Vec<Iri> = EnoClass::leaves().iter().map(|c| c.iri()).collect();

    let mut issues = Vec::new();
    for t in g.matches(None, Some(&rdf_type), Some(&Term::Iri(EnoClass::PlotPoint.iri()))) {
        let point = t.s;
        let leaf_count = g
            .objects(&point, &rdf_type)
            .iter()
            .filter(|o| o.as_iri().is_some_and(|i| leaves.contains(i)))
            .count();
        if leaf_count != 1 {
            issues.push(WellFormednessIssue {
                instance: point.clone(),
                message: format!("has {leaf_count} leaf plot classes, expected 1"),
            });
        }
        let linked = g
            .matches(None, Some(&has_point), Some(&Term::Iri(point.clone())))
            .iter()
            .any(|e| g.has_type(&e.s, &news));
        if !linked {
            issues.push(WellFormednessIssue {
                instance: point,
                message: "no incoming hasPlotPoint edge from a news article".into(),
            });
        }
    }
    issues
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iri(s: &str) -> Iri {
        Iri::new(format!("http://x.test/{s}")).unwrap()
    }

    #[test]
    fn iri_validation() {
        assert!(Iri::new("").is_err());
        assert!(Iri::new("http://a b").is_err());
        assert!(Iri::new("nocolon").is_err());
        assert!(Iri::new("http://ok/x").is_ok());
    }

    #[test]
    fn date_time_literals_are_validated() {
        assert!(Literal::typed("2023-06-18T00:00:00Z", Datatype::DateTime).is_ok());
        assert!(Literal::typed("June 18", Datatype::DateTime).is_err());
    }

    #[test]
    fn set_semantics_and_pattern_access() {
        let mut g = EventPlotGraph::new();
        assert!(g.matches(None, None, None).is_empty());
        let t = Triple::new(iri("a"), iri("p"), Term::string("v"));
        assert!(g.insert(t.clone()));
        assert!(!g.insert(t.clone()));
        g.insert(Triple::new(iri("a"), iri("q"), iri("b")));
        g.insert(Triple::new(iri("c"), iri("p"), Term::string("v")));
        assert_eq!(g.len(), 3);
        assert_eq!(g.count(Some(&iri("a")), Some(&iri("p")), Some(&Term::string("v"))), 1);
        assert_eq!(g.count(Some(&iri("a")), None, None), 2);
        assert_eq!(g.count(None, Some(&iri("p")), None), 2);
        assert_eq!(g.count(None, None, Some(&Term::string("v"))), 2);
        assert_eq!(g.count(Some(&iri("a")), None, Some(&Term::Iri(iri("b")))), 1);
        assert!(g.indexes_consistent());
    }

    #[test]
    fn iris_sort_before_literals() {
        assert!(Term::Iri(iri("z")) < Term::string("a"));
    }
}
