//! A small SPARQL SELECT engine: basic graph patterns, one UNION block,
//! `FILTER regex(str(?v), "...")` and DISTINCT, plus the Lead/Body/Tail
//! retrieval templates.

mod parser;
mod templates;

pub use parser::parse_query;
pub use templates::{body_template, lead_template, tail_template, template_for, template_text, TemplateOptions};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use regex::{Regex, RegexBuilder};
use thiserror::Error;

use crate::graph::{EventPlotGraph, Iri, Literal, Term};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("query syntax error at line {line}, column {column}: {message}")]
    QuerySyntax { line: usize, column: usize, message: String },
    #[error("unsupported SPARQL feature: {0}")]
    UnsupportedFeature(String),
    #[error("filter references ?{0}, which no pattern binds")]
    UnboundFilterVariable(String),
    #[error("invalid regex {pattern:?}: {message}")]
    InvalidRegex { pattern: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternTerm {
    Var(String),
    Iri(Iri),
    Literal(Literal),
}

impl PatternTerm {
    fn var(&self) -> Option<&str> {
        match self {
            PatternTerm::Var(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TriplePattern {
    pub s: PatternTerm,
    pub p: PatternTerm,
    pub o: PatternTerm,
}

impl TriplePattern {
    pub fn vars(&self) -> impl Iterator<Item = &str> {
        [&self.s, &self.p, &self.o].into_iter().filter_map(PatternTerm::var)
    }
}

#[derive(Debug, Clone)]
pub struct RegexFilter {
    pub variable: String,
    pub pattern: String,
    pub case_insensitive: bool,
    regex: Regex,
}

impl PartialEq for RegexFilter {
    fn eq(&self, other: &Self) -> bool {
        self.variable == other.variable
            && self.pattern == other.pattern
            && self.case_insensitive == other.case_insensitive
    }
}

impl RegexFilter {
    pub fn new(variable: &str, pattern: &str, case_insensitive: bool) -> Result<Self, QueryError> {
        let regex = RegexBuilder::new(pattern)
            .case_insensitive(case_insensitive)
            .build()
            .map_err(|e| QueryError::InvalidRegex {
                pattern: pattern.to_string(),
                message: e.to_string(),
            })?;
        Ok(Self {
            variable: variable.to_string(),
            pattern: pattern.to_string(),
            case_insensitive,
            regex,
        })
    }

    /// Unbound variables never pass.
    fn accepts(&self, row: &Binding) -> bool {
        row.get(&self.variable).is_some_and(|t| self.regex.is_match(t.str_value()))
    }
}

/// One alternative of a UNION block.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Group {
    pub patterns: Vec<TriplePattern>,
    pub filters: Vec<RegexFilter>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectQuery {
    pub distinct: bool,
    pub projection: Vec<String>,
    pub patterns: Vec<TriplePattern>,
    pub filters: Vec<RegexFilter>,
    pub union: Option<Vec<Group>>,
}

impl SelectQuery {
    /// Every variable bound somewhere in the query, in first-seen order.
    pub fn variables(&self) -> Vec<String> {
        let mut seen = Vec::new();
        let groups = self.union.iter().flatten().flat_map(|g| g.patterns.iter());
        for v in self.patterns.iter().chain(groups).flat_map(TriplePattern::vars) {
            if !seen.iter().any(|s: &String| s == v) {
                seen.push(v.to_string());
            }
        }
        seen
    }
}

type Binding = BTreeMap<String, Term>;

/// Query results: one column per projected variable, rows sorted canonically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BindingSet {
    pub variables: Vec<String>,
    pub rows: Vec<Vec<Option<Term>>>,
}

impl BindingSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Bound values of one column, in row order.
    pub fn column(&self, var: &str) -> Vec<&Term> {
        let Some(i) = self.variables.iter().position(|v| v == var) else {
            return Vec::new();
        };
        self.rows.iter().filter_map(|r| r[i].as_ref()).collect()
    }

    pub fn row_map(&self, i: usize) -> BTreeMap<&str, &Term> {
        self.variables
            .iter()
            .zip(&self.rows[i])
            .filter_map(|(v, t)| t.as_ref().map(|t| (v.as_str(), t)))
            .collect()
    }

    /// SPARQL TSV: `?var` header, then N-Triples style terms per row.
    pub fn to_tsv(&self) -> String {
        let mut out = self.variables.iter().map(|v| format!("?{v}")).collect::<Vec<_>>().join("\t");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|t| t.as_ref().map(Term::to_string).unwrap_or_default()).collect();
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for BindingSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_tsv())
    }
}

fn resolve(t: &PatternTerm, row: &Binding) -> Option<Term> {
    match t {
        PatternTerm::Var(v) => row.get(v).cloned(),
        PatternTerm::Iri(i) => Some(Term::Iri(i.clone())),
        PatternTerm::Literal(l) => Some(Term::Literal(l.clone())),
    }
}

fn bind(row: &mut Binding, t: &PatternTerm, value: &Term) -> bool {
    match t {
        PatternTerm::Var(v) => match row.get(v) {
            Some(existing) => existing == value,
            None => {
                row.insert(v.clone(), value.clone());
                true
            }
        },
        _ => true,
    }
}

/// Extends each row with every way to satisfy one pattern.
fn join_pattern(g: &EventPlotGraph, rows: Vec<Binding>, pat: &TriplePattern) -> Vec<Binding> {
    let mut out = Vec::new();
    for row in rows {
        let s = resolve(&pat.s, &row);
        let p = resolve(&pat.p, &row);
        let o = resolve(&pat.o, &row);
        // a literal (or unbindable term) in subject or predicate position never matches
        let s_iri = match &s {
            Some(Term::Iri(i)) => Some(i),
            Some(Term::Literal(_)) => continue,
            None => None,
        };
        let p_iri = match &p {
            Some(Term::Iri(i)) => Some(i),
            Some(Term::Literal(_)) => continue,
            None => None,
        };
        for t in g.matches(s_iri, p_iri, o.as_ref()) {
            let mut next = row.clone();
            if bind(&mut next, &pat.s, &Term::Iri(t.s.clone()))
                && bind(&mut next, &pat.p, &Term::Iri(t.p.clone()))
                && bind(&mut next, &pat.o, &t.o)
            {
                out.push(next);
            }
        }
    }
    out
}

/// Joins a basic graph pattern, picking at each step the pattern with the
/// most positions already fixed.
fn eval_bgp(g: &EventPlotGraph, seed: Vec<Binding>, patterns: &[TriplePattern]) -> Vec<Binding> {
    let mut rows = seed;
    let mut bound: BTreeSet<String> = rows.first().map(|r| r.keys().cloned().collect()).unwrap_or_default();
    let mut remaining: Vec<&TriplePattern> = patterns.iter().collect();
    while !remaining.is_empty() && !rows.is_empty() {
        let fixed = |p: &TriplePattern| {
            [&p.s, &p.p, &p.o]
                .iter()
                .filter(|t| t.var().map_or(true, |v| bound.contains(v)))
                .count()
        };
        let (idx, _) = remaining
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| fixed(a).cmp(&fixed(b)).then(ib.cmp(ia)))
            .expect("non-empty");
        let pat = remaining.remove(idx);
        rows = join_pattern(g, rows, pat);
        bound.extend(pat.vars().map(str::to_string));
    }
    rows
}

fn check_filter_scope(filters: &[RegexFilter], bound: &BTreeSet<&str>) -> Result<(), QueryError> {
    match filters.iter().find(|f| !bound.contains(f.variable.as_str())) {
        Some(f) => Err(QueryError::UnboundFilterVariable(f.variable.clone())),
        None => Ok(()),
    }
}

/// Evaluates a query: shared patterns joined with the union of the group
/// alternatives, filters applied, then projection, DISTINCT and a canonical sort.
pub fn execute(g: &EventPlotGraph, q: &SelectQuery) -> Result<BindingSet, QueryError> {
    let shared_vars: BTreeSet<&str> = q.patterns.iter().flat_map(TriplePattern::vars).collect();
    let mut all_vars = shared_vars.clone();
    for group in q.union.iter().flatten() {
        let mut scope = shared_vars.clone();
        scope.extend(group.patterns.iter().flat_map(TriplePattern::vars));
        check_filter_scope(&group.filters, &scope)?;
        all_vars.extend(scope);
    }
    check_filter_scope(&q.filters, &all_vars)?;

    let mut rows = eval_bgp(g, vec![Binding::new()], &q.patterns);
    if let Some(groups) = &q.union {
        let mut merged = Vec::new();
        for group in groups {
            let mut part = eval_bgp(g, rows.clone(), &group.patterns);
            part.retain(|r| group.filters.iter().all(|f| f.accepts(r)));
            merged.extend(part);
        }
        rows = merged;
    }
    rows.retain(|r| q.filters.iter().all(|f| f.accepts(r)));

    let mut projected: Vec<Vec<Option<Term>>> = rows
        .into_iter()
        .map(|r| q.projection.iter().map(|v| r.get(v).cloned()).collect())
        .collect();
    projected.sort();
    if q.distinct {
        projected.dedup();
    }
    Ok(BindingSet {
        variables: q.projection.clone(),
        rows: projected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{ns, Triple};

    fn graph() -> EventPlotGraph {
        let news = ns::epg("N1");
        let who = ns::epg("P1");
        let what = ns::epg("P2");
        [
            Triple::new(news.clone(), ns::rdf_type(), ns::narr("NewsArticle")),
            Triple::new(news.clone(), ns::narr("articleHeadline"), Term::string("Oceangate sub lost")),
            Triple::new(news.clone(), ns::narr("hasPlotPoint"), who.clone()),
            Triple::new(news.clone(), ns::narr("hasPlotPoint"), what.clone()),
            Triple::new(who.clone(), ns::rdf_type(), ns::narr("Who")),
            Triple::new(who.clone(), ns::narr("value"), Term::string("Hamish Harding")),
            Triple::new(what.clone(), ns::rdf_type(), ns::narr("What")),
            Triple::new(what.clone(), ns::narr("value"), Term::string("Titanic")),
        ]
        .into_iter()
        .collect()
    }

    #[test]
    fn empty_graph_gives_empty_result() {
        let q = parse_query("SELECT ?x WHERE { ?x a narr:Who . }").unwrap();
        assert!(execute(&EventPlotGraph::new(), &q).unwrap().is_empty());
    }

    #[test]
    fn union_with_filter() {
        let q = parse_query(
            r#"SELECT DISTINCT ?v WHERE {
                 ?a narr:hasPlotPoint ?x . ?x narr:value ?v . ?a narr:articleHeadline ?h .
                 { ?x a narr:Who } UNION { ?x a narr:What }
                 FILTER regex(str(?h), "oceangate")
               }"#,
        )
        .unwrap();
        let r = execute(&graph(), &q).unwrap();
        let vals: Vec<_> = r.column("v").iter().map(|t| t.str_value()).collect();
        assert_eq!(vals, ["Hamish Harding", "Titanic"]);
    }

    #[test]
    fn unbound_filter_variable_is_an_error() {
        let q = parse_query(r#"SELECT ?x WHERE { ?x a narr:Who . FILTER regex(str(?nope), "x") }"#).unwrap();
        assert_eq!(execute(&graph(), &q), Err(QueryError::UnboundFilterVariable("nope".into())));
    }

    #[test]
    fn tsv_encoding() {
        let q = parse_query("SELECT ?x ?v WHERE { ?x narr:value ?v }").unwrap();
        let tsv = execute(&graph(), &q).unwrap().to_tsv();
        let mut lines = tsv.lines();
        assert_eq!(lines.next(), Some("?x\t?v"));
        assert_eq!(lines.next(), Some("<http://example.org/epg/P1>\t\"Hamish Harding\""));
    }

    #[test]
    fn literal_subject_variable_never_matches() {
        let q = parse_query("SELECT ?s WHERE { ?x narr:value ?v . ?v narr:value ?s }").unwrap();
        assert!(execute(&graph(), &q).unwrap().is_empty());
    }
}
