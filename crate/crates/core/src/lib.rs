//! Event narratives from news coverage.
//!
//! Articles are ingested from RSS feeds or local files, mined for plot
//! points (who, what, when, where, why, evidence, quotes, media, opinions,
//! persuasion tactics, sentiment), asserted into an RDF event plot graph and
//! retrieved with SPARQL templates to build keyword prompts for report
//! generation. The [`eval`] module scores the resulting reports.
//!
//! Numeric code (clustering, metrics) is generic over [`num::Real`]; the
//! aliases below fix it to `f64`.

pub mod cluster;
pub mod eval;
pub mod extract;
pub mod graph;
pub mod http;
pub mod ingest;
pub mod num;
pub mod pipeline;
pub mod report;
pub mod sparql;
pub mod text;

pub type Clustering = cluster::Clustering<f64>;
pub type RougeScore = eval::RougeScore<f64>;

pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> RougeScore {
    eval::rouge_n(candidate, reference, n)
}

pub fn cohen_kappa(t: &eval::AnnotationTable) -> Result<f64, eval::EvalError> {
    eval::cohen_kappa(t)
}

pub fn likert_average(scores: &[i64]) -> Result<f64, eval::EvalError> {
    eval::likert_average(scores)
}
