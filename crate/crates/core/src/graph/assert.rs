use sha2::{Digest, Sha256};

use super::eno::{ns, EnoClass, EnoProperty};
use super::{EventPlotGraph, GraphError, Iri, Literal, Term, Triple};
use crate::extract::{PlotKind, PlotPoint};
use crate::ingest::ArticleRecord;

fn short_hash(id: &str) -> String {
    hex::encode(&Sha256::digest(id.as_bytes())[..6])
}

/// `epg:News<hash>` for an article id.
pub fn article_iri(article_id: &str) -> Iri {
    ns::epg(&format!("News{}", short_hash(article_id)))
}

/// `epg:Plot<hash>` for a plot point id.
pub fn plot_point_iri(point_id: &str) -> Iri {
    ns::epg(&format!("Plot{}", short_hash(point_id)))
}

/// Asserts an article node with its headline, authors, source and
/// publication date. Re-assertion adds nothing.
pub fn assert_article(g: &mut EventPlotGraph, a: &ArticleRecord) -> Iri {
    let node = article_iri(&a.id);
    g.insert(Triple::new(node.clone(), ns::rdf_type(), EnoClass::NewsArticle.iri()));
    g.insert(Triple::new(node.clone(), EnoProperty::ArticleHeadline.iri(), Literal::string(&a.headline)));
    for author in &a.authors {
        g.insert(Triple::new(node.clone(), EnoProperty::AuthorOfArticle.iri(), Literal::string(author)));
    }
    g.insert(Triple::new(node.clone(), EnoProperty::PublishedBy.iri(), Literal::string(&a.source)));
    if let Some(t) = a.published {
        g.insert(Triple::new(node.clone(), EnoProperty::PublishedDate.iri(), Literal::date_time(t)));
    }
    node
}

/// Asserts a plot point typed with its leaf class and every ancestor class,
/// its value literal, and the `hasPlotPoint` edge from the article.
pub fn assert_plot_point(g: &mut EventPlotGraph, article: &Iri, p: &PlotPoint) -> Result<Iri, GraphError> {
    if !g.has_type(article, &EnoClass::NewsArticle.iri()) {
        return Err(GraphError::UnknownArticle(article.to_string()));
    }
    let node = plot_point_iri(&p.id);
    for class in EnoClass::for_kind(p.kind).with_ancestors() {
        g.insert(Triple::new(node.clone(), ns::rdf_type(), class.iri()));
    }
    g.insert(Triple::new(node.clone(), EnoProperty::Value.iri(), Literal::string(&p.surface_text)));
    if let Some(label) = p.label() {
        g.insert(Triple::new(node.clone(), EnoProperty::Label.iri(), Literal::string(label)));
    }
    let media = match p.kind {
        PlotKind::Photo => Some("photo"),
        PlotKind::Video => Some("video"),
        PlotKind::Audio => Some("audio"),
        _ => None,
    };
    if let Some(m) = media {
        g.insert(Triple::new(node.clone(), EnoProperty::MediaType.iri(), Literal::string(m)));
    }
    g.insert(Triple::new(article.clone(), EnoProperty::HasPlotPoint.iri(), Term::Iri(node.clone())));
    Ok(node)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::check_well_formed;
    use chrono::{TimeZone, Utc};

    fn article(authors: &[&str]) -> ArticleRecord {
        ArticleRecord::from_parts(
            "H".into(),
            authors.iter().map(|s| s.to_string()).collect(),
            "S".into(),
            "http://x/a".into(),
            Some(Utc.with_ymd_and_hms(2023, 6, 18, 0, 0, 0).unwrap()),
            vec!["Body.".into()],
            vec![],
            Utc.with_ymd_and_hms(2023, 6, 19, 0, 0, 0).unwrap(),
        )
    }

    #[test]
    fn article_yields_five_triples_idempotently() {
        let mut g = EventPlotGraph::new();
        let a = article(&["A"]);
        let iri = assert_article(&mut g, &a);
        assert_eq!(g.len(), 5);
        assert_eq!(assert_article(&mut g, &a), iri);
        assert_eq!(g.len(), 5);
    }

    #[test]
    fn two_authors_two_author_triples() {
        let mut g = EventPlotGraph::new();
        let iri = assert_article(&mut g, &article(&["A", "B"]));
        assert_eq!(g.count(Some(&iri), Some(&EnoProperty::AuthorOfArticle.iri()), None), 2);
    }

    #[test]
    fn who_point_is_typed_valued_and_linked() {
        let mut g = EventPlotGraph::new();
        let a = article(&["A"]);
        let news = assert_article(&mut g, &a);
        let p = PlotPoint::new(&a.id, PlotKind::Who, "Hamish Harding", None);
        let pt = assert_plot_point(&mut g, &news, &p).unwrap();
        assert!(g.has_type(&pt, &EnoClass::Who.iri()));
        assert!(g.has_type(&pt, &EnoClass::Lead.iri()));
        assert!(g.has_type(&pt, &EnoClass::PlotPoint.iri()));
        assert!(g.contains(&Triple::new(pt.clone(), EnoProperty::Value.iri(), Literal::string("Hamish Harding"))));
        assert!(g.contains(&Triple::new(news.clone(), EnoProperty::HasPlotPoint.iri(), Term::Iri(pt.clone()))));
        let n = g.len();
        assert_plot_point(&mut g, &news, &p).unwrap();
        assert_eq!(g.len(), n);
        assert!(check_well_formed(&g).is_empty());
    }

    #[test]
    fn unknown_article_is_rejected() {
        let mut g = EventPlotGraph::new();
        let p = PlotPoint::new("x", PlotKind::Who, "W", None);
        let err = assert_plot_point(&mut g, &ns::epg("Nowhere"), &p).unwrap_err();
        assert!(matches!(err, GraphError::UnknownArticle(_)));
        assert!(g.is_empty());
    }

    #[test]
    fn media_points_become_media_objects() {
        let mut g = EventPlotGraph::new();
        let a = article(&[]);
        let news = assert_article(&mut g, &a);
        let pt = assert_plot_point(&mut g, &news, &PlotPoint::new(&a.id, PlotKind::Video, "v.mp4", None)).unwrap();
        assert!(g.has_type(&pt, &EnoClass::MediaObject.iri()));
        assert_eq!(g.objects(&pt, &EnoProperty::MediaType.iri()), [Term::string("video")]);
    }

    #[test]
    fn missing_link_is_reported() {
        let mut g = EventPlotGraph::new();
        let orphan = ns::epg("Plot0");
        g.insert(Triple::new(orphan.clone(), ns::rdf_type(), EnoClass::PlotPoint.iri()));
        g.insert(Triple::new(orphan.clone(), ns::rdf_type(), EnoClass::Who.iri()));
        g.insert(Triple::new(orphan.clone(), ns::rdf_type(), EnoClass::What.iri()));
        let issues = check_well_formed(&g);
        assert_eq!(issues.len(), 2);
        assert!(issues.iter().all(|i| i.instance == orphan));
    }
}
