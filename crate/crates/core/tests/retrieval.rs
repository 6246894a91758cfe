mod common;

use std::collections::BTreeSet;

use plotline::extract::{Level, PlotKind};
use plotline::graph::{parse_turtle, subgraph_for_event, EventPlotGraph, Term};
use plotline::report::{
    build_prompt_set, generate_report, instruction, linearize, linearize_keywords, GenerationConfig, PromptSetOptions,
    ReportError, StubBackend,
};
use plotline::sparql::{body_template, execute, lead_template, parse_query, tail_template, QueryError};

fn fixture_graph(name: &str) -> EventPlotGraph {
    let text = std::fs::read_to_string(common::fixtures().join("graphs").join(name)).unwrap();
    parse_turtle(&text).unwrap()
}

fn values(g: &EventPlotGraph, q: &plotline::sparql::SelectQuery) -> BTreeSet<String> {
    execute(g, q).unwrap().column("value").iter().map(|t| t.str_value().to_string()).collect()
}

#[test]
fn lead_query_ignores_other_events() {
    let g = fixture_graph("oceangate.ttl");
    let lead = values(&g, &lead_template("Oceangate").unwrap());
    assert!(!lead.contains("Norfolk Southern"));
    assert!(!lead.contains("Ohio"));
    let rail = values(&g, &lead_template("derails").unwrap());
    assert_eq!(rail, BTreeSet::from(["Norfolk Southern".to_string(), "Ohio".to_string()]));
}

#[test]
fn body_and_tail_queries_on_fixture() {
    let g = fixture_graph("oceangate.ttl");
    let body = values(&g, &body_template("oceangate").unwrap());
    for v in ["debris", "ROV", "sonar", "banging", "implosion"] {
        assert!(body.contains(v), "{v} missing from {body:?}");
    }
    assert!(body.iter().any(|v| v.starts_with("United States Coast Guard said")));
    let tail = values(&g, &tail_template("Oceangate").unwrap());
    assert!(tail.contains("overshadowed the bigger Greece migrant vessel disaster"));
    assert!(tail.contains("negative"));
}

#[test]
fn event_subgraph_keeps_only_matching_articles() {
    let g = fixture_graph("oceangate.ttl");
    let sub = subgraph_for_event(&g, "oceangate");
    assert!(sub.len() < g.len());
    assert!(sub.iter().all(|t| g.contains(t)));
    let text: Vec<&str> = sub.iter().map(|t| t.o.str_value()).collect();
    assert!(text.contains(&"Stockton Rush"));
    assert!(!text.contains(&"Norfolk Southern"));
    // querying the subgraph gives the same lead answers as the full graph
    let q = lead_template("Oceangate").unwrap();
    assert_eq!(execute(&sub, &q).unwrap(), execute(&g, &q).unwrap());
    assert!(subgraph_for_event(&g, "no such headline").is_empty());
}

#[test]
fn derailment_prompt_set_matches_expected_keywords() {
    let g = fixture_graph("derailment.ttl");
    let ps = build_prompt_set(&g, "derailment", &PromptSetOptions::default()).unwrap();
    assert_eq!(
        ps.keywords(Level::Lead),
        ["Norfolk Southern Train", "chemicals", "3 February", "9pm", "East Palestine", "Ohio"]
    );
    assert_eq!(
        ps.keywords(Level::Body),
        [
            "derailment",
            "hazardous",
            "The EPA said it “did not detect chemical contaminants at concerning levels in the hours after venting.”"
        ]
    );
    assert_eq!(ps.keywords(Level::Tail), ["overblown characterisations about the derailment disaster"]);
    let kinds: Vec<PlotKind> = ps.section(Level::Lead).iter().map(|k| k.kind).collect();
    assert_eq!(
        kinds,
        [PlotKind::Who, PlotKind::What, PlotKind::When, PlotKind::When, PlotKind::Where, PlotKind::Where]
    );
    for kw in ps.section(Level::Lead).iter().chain(ps.section(Level::Body)) {
        assert_eq!(kw.points.len(), 1, "{} has provenance {:?}", kw.text, kw.points);
        assert!(kw.points[0].as_str().contains("/epg/Plot"));
    }
}

#[test]
fn derailment_lead_linearization() {
    let list = ["Norfolk Southern Train", "chemicals", "East Palestine", "Ohio", "9pm", "3 February"];
    let got = linearize_keywords(Level::Lead, &list).unwrap();
    let expected = format!(
        "{}: <Norfolk Southern Train, chemicals, East Palestine, Ohio, 9pm, 3 February>",
        instruction(Level::Lead)
    );
    assert_eq!(got, expected);
    assert!(matches!(linearize_keywords(Level::Tail, &[]), Err(ReportError::EmptySection(Level::Tail))));

    let g = fixture_graph("derailment.ttl");
    let ps = build_prompt_set(&g, "derailment", &PromptSetOptions::default()).unwrap();
    let tail = linearize(&ps, Level::Tail).unwrap();
    assert!(tail.ends_with(": <overblown characterisations about the derailment disaster>"));
}

#[test]
fn configured_kinds_narrow_the_prompt_set() {
    let g = fixture_graph("oceangate.ttl");
    let opts = PromptSetOptions {
        lead: vec![PlotKind::Where],
        body: vec![PlotKind::Quote],
        tail: vec![PlotKind::Sentiment],
        raw_regex: false,
    };
    let ps = build_prompt_set(&g, "Oceangate", &opts).unwrap();
    assert_eq!(ps.keywords(Level::Lead), ["Atlantic Ocean", "Canada", "Newfoundland"]);
    assert_eq!(ps.keywords(Level::Tail), ["negative"]);
    assert_eq!(ps.section(Level::Body).len(), 1);
}

#[test]
fn unknown_event_is_empty_retrieval() {
    let g = fixture_graph("oceangate.ttl");
    let err = build_prompt_set(&g, "volcano", &PromptSetOptions::default()).unwrap_err();
    assert_eq!(err, ReportError::EmptyRetrieval("volcano".into()));
}

#[test]
fn event_text_is_escaped_in_templates() {
    let g = fixture_graph("oceangate.ttl");
    // a quote in the event text must not break the query
    let q = lead_template("Ocean\"gate").unwrap();
    assert!(execute(&g, &q).unwrap().is_empty());
    // regex metacharacters are literal unless raw regex mode is asked for
    assert!(values(&g, &lead_template("Titan.").unwrap()).is_empty());
}

#[test]
fn stub_report_on_fixture_covers_keywords() {
    let g = fixture_graph("oceangate.ttl");
    let ps = build_prompt_set(&g, "Oceangate", &PromptSetOptions::default()).unwrap();
    let cfg = GenerationConfig::default();
    let r = generate_report(&ps, &StubBackend, &cfg, common::fixed_time()).unwrap();
    let lead = r.section(Level::Lead).unwrap();
    assert_eq!(lead.coverage, 1.0);
    assert!(lead.text.contains("Stockton Rush"));
    let md = r.render_markdown();
    assert!(md.contains("## Lead") && md.contains("## Body") && md.contains("## Tail"));
    let back = plotline::report::IntelligenceReport::from_json(&r.to_json()).unwrap();
    assert_eq!(back.to_json(), r.to_json());
}

#[test]
fn malformed_queries_are_rejected() {
    for bad in [
        "SELECT ?x WHERE { ?x ?p }",
        "SELECT ?y WHERE { ?x ?p ?o . }",
        "CONSTRUCT { ?x ?p ?o } WHERE { ?x ?p ?o . }",
        "SELECT ?x WHERE { { ?x ?p ?o . } UNION { ?x ?p ?o . } UNION { ?x ?p ?o . } { ?x ?p ?o . } UNION { ?x ?p ?o . } }",
    ] {
        assert!(parse_query(bad).is_err(), "accepted {bad}");
    }
    let q = parse_query("SELECT ?x WHERE { ?x ?p ?o . FILTER regex(str(?z), \"a\") }").unwrap();
    assert_eq!(execute(&EventPlotGraph::new(), &q), Err(QueryError::UnboundFilterVariable("z".into())));
    assert!(matches!(
        parse_query("SELECT ?x WHERE { ?x ?p ?o . FILTER regex(str(?x), \"(\") }"),
        Err(QueryError::InvalidRegex { .. })
    ));
}

#[test]
fn literal_values_compare_by_lexical_form() {
    let g = fixture_graph("oceangate.ttl");
    let q = parse_query(
        "PREFIX narr: <http://example.org/eno#> SELECT ?p WHERE { ?p narr:value \"Stockton Rush\" . }",
    )
    .unwrap();
    let rows = execute(&g, &q).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(matches!(rows.column("p")[0], Term::Iri(_)));
}
