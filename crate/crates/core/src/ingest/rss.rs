use roxmltree::{Document, Node, ParsingOptions};

use super::{parse_timestamp, FeedEntry, FeedSource, IngestError};
use crate::text::normalize_whitespace;

fn text_of(node: Node<'_, '_>) -> String {
    let raw: String = node
        .descendants()
        .filter(|n| n.is_text())
        .filter_map(|n| n.text())
        .collect();
    normalize_whitespace(&raw)
}

fn child<'a, 'i>(item: Node<'a, 'i>, local: &str) -> Option<Node<'a, 'i>> {
    item.children()
        .find(|c| c.is_element() && c.tag_name().name().eq_ignore_ascii_case(local))
}

/// Parses RSS 2.0 (and RSS 1.0/RDF) feed text into entries, one per `<item>`
/// in document order.
///
/// Field mapping: `title`, `link` (falling back to a permalink `guid`),
/// `author` and `dc:creator` (each element one author), `description`, and
/// `pubDate` or `dc:date`. Items without any usable link are skipped since an
/// entry cannot be fetched without one.
pub fn parse_rss(feed_xml: &str, source: &FeedSource) -> Result<Vec<FeedEntry>, IngestError> {
    let opts = ParsingOptions {
        allow_dtd: true,
        ..ParsingOptions::default()
    };
    let doc = Document::parse_with_options(feed_xml, opts)
        .map_err(|e| IngestError::MalformedFeed(format!("{}: {e}", source.name)))?;

    let root = doc.root_element();
    let root_name = root.tag_name().name();
    if !(root_name.eq_ignore_ascii_case("rss") || root_name.eq_ignore_ascii_case("RDF") || root_name == "channel") {
        return Err(IngestError::MalformedFeed(format!(
            "{}: unexpected root element <{root_name}>",
            source.name
        )));
    }

    let mut entries = Vec::new();
    for item in root
        .descendants()
        .filter(|n| n.is_element() && n.tag_name().name() == "item")
    {
        let title = child(item, "title").map(text_of).unwrap_or_default();
        let mut link = child(item, "link").map(text_of).unwrap_or_default();
        if link.is_empty() {
            if let Some(guid) = child(item, "guid") {
                let permalink = guid.attribute("isPermaLink").map_or(true, |v| v != "false");
                if permalink {
                    link = text_of(guid);
                }
            }
        }
        if link.is_empty() {
            if let Some(about) = item.attributes().find(|a| a.name() == "about") {
                link = about.value().trim().to_string();
            }
        }
        if link.is_empty() {
            continue;
        }
        let authors = item
            .children()
            .filter(|c| c.is_element())
            .filter(|c| {
                let n = c.tag_name().name();
                n == "author" || n == "creator"
            })
            .map(text_of)
            .filter(|a| !a.is_empty())
            .collect();
        let summary = child(item, "description").map(text_of).filter(|s| !s.is_empty());
        let published = child(item, "pubDate")
            .or_else(|| child(item, "date"))
            .and_then(|n| parse_timestamp(&text_of(n)));
        entries.push(FeedEntry {
            title,
            link,
            authors,
            summary,
            published,
        });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::FeedKind;

    fn src() -> FeedSource {
        FeedSource::new("test", "http://x/feed", FeedKind::Rss).unwrap()
    }

    fn channel(items: &str) -> String {
        format!(r#"<?xml version="1.0"?><rss version="2.0"><channel><title>T</title>{items}</channel></rss>"#)
    }

    #[test]
    fn empty_channel_yields_no_entries() {
        assert!(parse_rss(&channel(""), &src()).unwrap().is_empty());
    }

    #[test]
    fn single_item_maps_fields() {
        let xml = channel("<item><title>T</title><link>http://x/a</link></item>");
        let entries = parse_rss(&xml, &src()).unwrap();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].title, "T");
        assert_eq!(entries[0].link, "http://x/a");
        assert!(entries[0].authors.is_empty());
        assert_eq!(entries[0].summary, None);
        assert_eq!(entries[0].published, None);
    }

    #[test]
    fn order_is_preserved() {
        let xml = channel(
            "<item><title>1</title><link>http://x/1</link></item>\
             <item><title>2</title><link>http://x/2</link></item>\
             <item><title>3</title><link>http://x/3</link></item>",
        );
        let titles: Vec<_> = parse_rss(&xml, &src()).unwrap().into_iter().map(|e| e.title).collect();
        assert_eq!(titles, ["1", "2", "3"]);
    }

    #[test]
    fn metadata_fields_and_namespaces() {
        let xml = r#"<?xml version="1.0"?>
<rss version="2.0" xmlns:dc="http://purl.org/dc/elements/1.1/"><channel>
<item>
  <title><![CDATA[Titan  sub missing]]></title>
  <link> http://x/titan </link>
  <dc:creator>James Bryan</dc:creator>
  <author>news@x (Desk)</author>
  <description>Search under way.</description>
  <pubDate>Sun, 18 Jun 2023 22:00:00 GMT</pubDate>
</item></channel></rss>"#;
        let e = &parse_rss(xml, &src()).unwrap()[0];
        assert_eq!(e.title, "Titan sub missing");
        assert_eq!(e.link, "http://x/titan");
        assert_eq!(e.authors, ["James Bryan", "news@x (Desk)"]);
        assert_eq!(e.summary.as_deref(), Some("Search under way."));
        assert_eq!(e.published.unwrap().to_rfc3339(), "2023-06-18T22:00:00+00:00");
    }

    #[test]
    fn unparseable_date_is_absent() {
        let xml = channel("<item><title>x</title><link>http://x/1</link><pubDate>soon</pubDate></item>");
        assert_eq!(parse_rss(&xml, &src()).unwrap()[0].published, None);
    }

    #[test]
    fn guid_permalink_fallback() {
        let xml = channel("<item><title>x</title><guid>http://x/g</guid></item><item><title>y</title><guid isPermaLink=\"false\">abc</guid></item>");
        let entries = parse_rss(&xml, &src()).unwrap();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].link, "http://x/g");
    }

    #[test]
    fn malformed_xml_is_rejected() {
        assert!(matches!(
            parse_rss("<rss><channel><item>", &src()),
            Err(IngestError::MalformedFeed(_))
        ));
        assert!(matches!(parse_rss("<html></html>", &src()), Err(IngestError::MalformedFeed(_))));
    }
}
