#![allow(dead_code)]

use std::path::{Path, PathBuf};

use chrono::{DateTime, TimeZone, Utc};
use plotline::extract::{CausalCueSet, Gazetteer, NpceResources, SentimentLexicon, TacticRuleSet};
use plotline::ingest::ArticleStore;
use plotline::pipeline::ingest_directory;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixed_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2023, 7, 1, 0, 0, 0).unwrap()
}

/// The resources the demo config points at.
pub fn fixture_resources() -> NpceResources {
    let r = fixtures().join("resources");
    NpceResources {
        gazetteer: Gazetteer::load(&r.join("gazetteer.tsv")).unwrap(),
        causal_cues: CausalCueSet::load(&r.join("causal_cues.txt")).unwrap(),
        sentiment: SentimentLexicon::load(&r.join("positive.txt"), &r.join("negative.txt"), -0.1, 0.1).unwrap(),
        tactics: TacticRuleSet::load(&r.join("tactics.tsv")).unwrap(),
        opinion_cues: NpceResources::load_opinion_cues(&r.join("opinion_cues.txt")).unwrap(),
        evidence_k: 2,
        ..NpceResources::default()
    }
}

/// Ingests the bundled corpus into a fresh store under `dir`.
pub fn corpus_store(dir: &Path) -> ArticleStore {
    let mut store = ArticleStore::new(dir.join("articles.jsonl"));
    let summary = ingest_directory(&mut store, &fixtures().join("corpus"), fixed_time());
    assert!(summary.warnings.is_empty(), "{:?}", summary.warnings);
    store
}
