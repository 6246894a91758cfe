use super::{EventPlotGraph, Iri, Term, Triple};
use crate::extract::{Level, PlotKind};

pub mod ns {
    use super::Iri;

    pub const NARR: &str = "http://example.org/eno#";
    pub const EPG: &str = "http://example.org/epg/";
    pub const RDF: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
    pub const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
    pub const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

    /// Prefix table used for Turtle output and as SPARQL defaults.
    pub const PREFIXES: [(&str, &str); 5] = [("epg", EPG), ("narr", NARR), ("rdf", RDF), ("rdfs", RDFS), ("xsd", XSD)];

    pub fn narr(local: &str) -> Iri {
        Iri::new(format!("{NARR}{local}")).expect("valid ontology IRI")
    }

    pub fn epg(local: &str) -> Iri {
        Iri::new(format!("{EPG}{local}")).expect("valid instance IRI")
    }

    pub fn rdf_type() -> Iri {
        Iri::new(format!("{RDF}type")).expect("valid rdf:type")
    }
}

/// The sixteen ontology classes: two generic ones and fourteen plot
/// subclasses arranged under Lead, Body and Tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnoClass {
    NewsArticle,
    PlotPoint,
    Lead,
    Body,
    Tail,
    Who,
    What,
    When,
    Where,
    Why,
    Evidence,
    Quote,
    MediaObject,
    Opinion,
    PersTactic,
    Sentiment,
}

impl EnoClass {
    pub const ALL: [EnoClass; 16] = [
        EnoClass::NewsArticle,
        EnoClass::PlotPoint,
        EnoClass::Lead,
        EnoClass::Body,
        EnoClass::Tail,
        EnoClass::Who,
        EnoClass::What,
        EnoClass::When,
        EnoClass::Where,
        EnoClass::Why,
        EnoClass::Evidence,
        EnoClass::Quote,
        EnoClass::MediaObject,
        EnoClass::Opinion,
        EnoClass::PersTactic,
        EnoClass::Sentiment,
    ];

    pub fn name(self) -> &'static str {
        use EnoClass::*;
        match self {
            NewsArticle => "NewsArticle",
            PlotPoint => "PlotPoint",
            Lead => "Lead",
            Body => "Body",
            Tail => "Tail",
            Who => "Who",
            What => "What",
            When => "When",
            Where => "Where",
            Why => "Why",
            Evidence => "Evidence",
            Quote => "Quote",
            MediaObject => "MediaObject",
            Opinion => "Opinion",
            PersTactic => "PersTactic",
            Sentiment => "Sentiment",
        }
    }

    pub fn iri(self) -> Iri {
        ns::narr(self.name())
    }

    pub fn parent(self) -> Option<EnoClass> {
        use EnoClass::*;
        match self {
            NewsArticle | PlotPoint => None,
            Lead | Body | Tail => Some(PlotPoint),
            Who | What | When | Where | Why => Some(Lead),
            Evidence | Quote | MediaObject => Some(Body),
            Opinion | PersTactic | Sentiment => Some(Tail),
        }
    }

    /// The class itself followed by its ancestors up to the root.
    pub fn with_ancestors(self) -> Vec<EnoClass> {
        let mut out = vec![self];
        let mut c = self;
        while let Some(p) = c.parent() {
            out.push(p);
            c = p;
        }
        out
    }

    /// Classes with no subclasses below them in the plot tree.
    pub fn leaves() -> Vec<EnoClass> {
        EnoClass::ALL
            .into_iter()
            .filter(|c| *c != EnoClass::NewsArticle && !EnoClass::ALL.iter().any(|d| d.parent() == Some(*c)))
            .collect()
    }

    pub fn for_kind(kind: PlotKind) -> EnoClass {
        use PlotKind::*;
        match kind {
            Who => EnoClass::Who,
            What => EnoClass::What,
            When => EnoClass::When,
            Where => EnoClass::Where,
            Why => EnoClass::Why,
            Evidence => EnoClass::Evidence,
            Quote => EnoClass::Quote,
            Photo | Video | Audio => EnoClass::MediaObject,
            Opinion => EnoClass::Opinion,
            PersTactic => EnoClass::PersTactic,
            Sentiment => EnoClass::Sentiment,
        }
    }

    pub fn for_level(level: Level) -> EnoClass {
        match level {
            Level::Lead => EnoClass::Lead,
            Level::Body => EnoClass::Body,
            Level::Tail => EnoClass::Tail,
        }
    }

    /// Direct leaf subclasses of a level class, in declaration order.
    pub fn level_members(level: Level) -> Vec<EnoClass> {
        let parent = EnoClass::for_level(level);
        EnoClass::ALL.into_iter().filter(|c| c.parent() == Some(parent)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnoProperty {
    ArticleHeadline,
    AuthorOfArticle,
    PublishedBy,
    PublishedDate,
    HasPlotPoint,
    /// Surface text of a plot point.
    Value,
    /// Entity or tactic label of a plot point.
    Label,
    /// photo, video or audio for media plot points.
    MediaType,
}

impl EnoProperty {
    pub const ALL: [EnoProperty; 8] = [
        EnoProperty::ArticleHeadline,
        EnoProperty::AuthorOfArticle,
        EnoProperty::PublishedBy,
        EnoProperty::PublishedDate,
        EnoProperty::HasPlotPoint,
        EnoProperty::Value,
        EnoProperty::Label,
        EnoProperty::MediaType,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnoProperty::ArticleHeadline => "articleHeadline",
            EnoProperty::AuthorOfArticle => "authorOfArticle",
            EnoProperty::PublishedBy => "publishedBy",
            EnoProperty::PublishedDate => "publishedDate",
            EnoProperty::HasPlotPoint => "hasPlotPoint",
            EnoProperty::Value => "value",
            EnoProperty::Label => "label",
            EnoProperty::MediaType => "mediaType",
        }
    }

    pub fn iri(self) -> Iri {
        ns::narr(self.name())
    }
}

/// The ontology as data, with an RDF rendering for publishing alongside a graph.
#[derive(Debug, Clone, Copy, Default)]
pub struct EnoSchema;

impl EnoSchema {
    pub fn classes(&self) -> &'static [EnoClass] {
        &EnoClass::ALL
    }

    pub fn subclass_edges(&self) -> Vec<(EnoClass, EnoClass)> {
        EnoClass::ALL.iter().filter_map(|c| c.parent().map(|p| (*c, p))).collect()
    }

    pub fn properties(&self) -> &'static [EnoProperty] {
        &EnoProperty::ALL
    }

    pub fn to_graph(&self) -> EventPlotGraph {
        let rdf_type = ns::rdf_type();
        let class = Iri::new(format!("{}Class", ns::RDFS)).unwrap();
        let property = Iri::new(format!("{}Property", ns::RDF)).unwrap();
        let sub = Iri::new(format!("{}subClassOf", ns::RDFS)).unwrap();
        let mut g = EventPlotGraph::new();
        for c in EnoClass::ALL {
            g.insert(Triple::new(c.iri(), rdf_type.clone(), Term::Iri(class.clone())));
            if let Some(p) = c.parent() {
                g.insert(Triple::new(c.iri(), sub.clone(), Term::Iri(p.iri())));
            }
        }
        for p in EnoProperty::ALL {
            g.insert(Triple::new(p.iri(), rdf_type.clone(), Term::Iri(property.clone())));
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_classes_fourteen_subclasses() {
        assert_eq!(EnoClass::ALL.len(), 16);
        let schema = EnoSchema;
        assert_eq!(schema.subclass_edges().len(), 14);
        let roots: Vec<_> = EnoClass::ALL.iter().filter(|c| c.parent().is_none()).collect();
        assert_eq!(roots, [&EnoClass::NewsArticle, &EnoClass::PlotPoint]);
        for c in EnoClass::ALL {
            if c != EnoClass::NewsArticle {
                assert_eq!(*c.with_ancestors().last().unwrap(), EnoClass::PlotPoint);
            }
        }
    }

    #[test]
    fn level_members_and_leaves() {
        assert_eq!(EnoClass::level_members(Level::Lead).len(), 5);
        assert_eq!(
            EnoClass::level_members(Level::Body),
            [EnoClass::Evidence, EnoClass::Quote, EnoClass::MediaObject]
        );
        assert_eq!(EnoClass::leaves().len(), 11);
        for k in PlotKind::ALL {
            let c = EnoClass::for_kind(k);
            assert_eq!(c.parent(), Some(EnoClass::for_level(k.level())));
        }
    }

    #[test]
    fn schema_graph_has_one_type_per_term() {
        let g = EnoSchema.to_graph();
        assert_eq!(g.len(), 16 + 14 + EnoProperty::ALL.len());
    }
}
