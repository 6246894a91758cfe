//! End-to-end stages over on-disk artifacts: ingest feeds into a store, run
//! extraction over every stored article, and assert the results as a graph.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};

use crate::extract::{run_npce, ExtractDiagnostic, ExtractError, NpceResources, PlotPoint};
use crate::graph::{article_iri, assert_article, assert_plot_point, EventPlotGraph, GraphError};
use crate::ingest::{
    extract_article, import_report, parse_rss, ArticleStore, FeedKind, FeedSource, Fetcher, FileFetcher,
};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestSummary {
    pub added: usize,
    pub duplicates: usize,
    pub sources_ok: usize,
    pub sources_failed: usize,
    pub warnings: Vec<String>,
}

impl IngestSummary {
    /// True when there were sources and none of them could be read.
    pub fn all_failed(&self) -> bool {
        self.sources_failed > 0 && self.sources_ok == 0
    }

    fn absorb(&mut self, other: IngestSummary) {
        self.added += other.added;
        self.duplicates += other.duplicates;
        self.sources_ok += other.sources_ok;
        self.sources_failed += other.sources_failed;
        self.warnings.extend(other.warnings);
    }
}

fn push(store: &mut ArticleStore, rec: crate::ingest::ArticleRecord, s: &mut IngestSummary) {
    if store.append(rec) {
        s.added += 1;
    } else {
        s.duplicates += 1;
    }
}

fn ingest_feed_text(
    store: &mut ArticleStore,
    xml: &str,
    source: &FeedSource,
    pages: &dyn Fetcher,
    fetched_at: DateTime<Utc>,
) -> IngestSummary {
    let mut s = IngestSummary::default();
    let entries = match parse_rss(xml, source) {
        Ok(e) => e,
        Err(e) => {
            s.sources_failed += 1;
            s.warnings.push(e.to_string());
            return s;
        }
    };
    s.sources_ok += 1;
    for entry in entries {
        let page = match pages.fetch(&entry.link) {
            Ok(p) => p,
            Err(e) => {
                s.warnings.push(e.to_string());
                continue;
            }
        };
        match extract_article(&page, &entry, source, fetched_at) {
            Ok(rec) => push(store, rec, &mut s),
            Err(e) => s.warnings.push(format!("{}: {e}", entry.link)),
        }
    }
    s
}

/// Fetches every configured source. Failures of single sources or pages
/// become warnings.
pub fn ingest_sources(
    store: &mut ArticleStore,
    sources: &[FeedSource],
    fetcher: &dyn Fetcher,
    fetched_at: DateTime<Utc>,
) -> IngestSummary {
    let mut total = IngestSummary::default();
    for source in sources {
        let text = match fetcher.fetch(&source.url) {
            Ok(t) => t,
            Err(e) => {
                total.sources_failed += 1;
                total.warnings.push(format!("{}: {e}", source.name));
                continue;
            }
        };
        match source.kind {
            FeedKind::Rss => total.absorb(ingest_feed_text(store, &text, source, fetcher, fetched_at)),
            FeedKind::Report => match import_report(&text, &source.url, source, fetched_at) {
                Ok(rec) => {
                    total.sources_ok += 1;
                    push(store, rec, &mut total);
                }
                Err(e) => {
                    total.sources_failed += 1;
                    total.warnings.push(format!("{}: {e}", source.name));
                }
            },
        }
    }
    total
}

fn sorted_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .map(|rd| rd.filter_map(|e| e.ok()).map(|e| e.path()).filter(|p| p.is_file()).collect())
        .unwrap_or_default();
    v.sort();
    v
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Offline ingest from `dir/feeds/*.xml`, with article pages resolved in
/// `dir/pages/` and plain report documents taken from `dir/reports/`.
pub fn ingest_directory(store: &mut ArticleStore, dir: &Path, fetched_at: DateTime<Utc>) -> IngestSummary {
    let mut total = IngestSummary::default();
    let pages = FileFetcher::new(dir.join("pages"));
    for feed in sorted_files(&dir.join("feeds")) {
        if feed.extension().and_then(|e| e.to_str()) != Some("xml") {
            continue;
        }
        let stem = feed.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let source = FeedSource {
            name: stem,
            url: format!("feeds/{}", file_name(&feed)),
            kind: FeedKind::Rss,
        };
        match std::fs::read_to_string(&feed) {
            Ok(xml) => total.absorb(ingest_feed_text(store, &xml, &source, &pages, fetched_at)),
            Err(e) => {
                total.sources_failed += 1;
                total.warnings.push(format!("{}: {e}", feed.display()));
            }
        }
    }
    for report in sorted_files(&dir.join("reports")) {
        let name = file_name(&report);
        let source = FeedSource {
            name: "reports".into(),
            url: format!("reports/{name}"),
            kind: FeedKind::Report,
        };
        let outcome = std::fs::read_to_string(&report)
            .map_err(|e| e.to_string())
            .and_then(|t| import_report(&t, &source.url, &source, fetched_at).map_err(|e| e.to_string()));
        match outcome {
            Ok(rec) => {
                total.sources_ok += 1;
                push(store, rec, &mut total);
            }
            Err(e) => {
                total.sources_failed += 1;
                total.warnings.push(format!("{}: {e}", report.display()));
            }
        }
    }
    total
}

/// Runs extraction over every stored article, in store order.
pub fn extract_all(
    store: &ArticleStore,
    res: &NpceResources,
) -> Result<(Vec<PlotPoint>, Vec<ExtractDiagnostic>), ExtractError> {
    res.validate()?;
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = store.records().iter().map(|a| s.spawn(move || run_npce(a, res))).collect();
        handles.into_iter().map(|h| h.join().expect("extraction thread panicked")).collect()
    });
    let mut points = Vec::new();
    let mut diags = Vec::new();
    for r in results {
        let r = r?;
        points.extend(r.plot_points);
        diags.extend(r.diagnostics);
    }
    Ok((points, diags))
}

/// Asserts every article and every plot point into `g`.
pub fn assert_all(g: &mut EventPlotGraph, store: &ArticleStore, points: &[PlotPoint]) -> Result<(), GraphError> {
    for a in store.records() {
        assert_article(g, a);
    }
    for p in points {
        assert_plot_point(g, &article_iri(&p.article_id), p)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::FetchError;
    use chrono::TimeZone;
    use std::collections::HashMap;

    struct Pages(HashMap<&'static str, &'static str>);

    impl Fetcher for Pages {
        fn fetch(&self, url: &str) -> Result<String, FetchError> {
            self.0.get(url).map(|s| s.to_string()).ok_or_else(|| FetchError::Missing {
                url: url.into(),
                path: String::new(),
            })
        }
    }

    const FEED: &str = r#"<rss version="2.0"><channel><title>t</title>
<item><title>Sub lost near wreck</title><link>http://n.test/a</link></item>
<item><title>Gone</title><link>http://n.test/missing</link></item>
</channel></rss>"#;

    #[test]
    fn partial_failures_are_warnings() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = ArticleStore::new(dir.path().join("s.jsonl"));
        let fetcher = Pages(HashMap::from([
            ("http://n.test/feed", FEED),
            ("http://n.test/a", "<html><body><p>The submersible vanished on Sunday.</p></body></html>"),
        ]));
        let sources = [
            FeedSource::new("ok", "http://n.test/feed", FeedKind::Rss).unwrap(),
            FeedSource::new("down", "http://n.test/down", FeedKind::Rss).unwrap(),
        ];
        let t = Utc.with_ymd_and_hms(2023, 6, 20, 0, 0, 0).unwrap();
        let s = ingest_sources(&mut store, &sources, &fetcher, t);
        assert_eq!((s.added, s.sources_ok, s.sources_failed), (1, 1, 1));
        assert_eq!(s.warnings.len(), 2);
        assert!(!s.all_failed());
        let again = ingest_sources(&mut store, &sources, &fetcher, t);
        assert_eq!((again.added, again.duplicates), (0, 1));
    }

    #[test]
    fn extract_and_assert_store() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = ArticleStore::new(dir.path().join("s.jsonl"));
        store.append(crate::extract::testutil::article(&["Stockton Rush piloted the sub."]));
        let (points, _) = extract_all(&store, &NpceResources::default()).unwrap();
        let mut g = EventPlotGraph::new();
        assert_all(&mut g, &store, &points).unwrap();
        assert!(crate::graph::check_well_formed(&g).is_empty());
        assert!(g.len() > points.len());
    }
}
