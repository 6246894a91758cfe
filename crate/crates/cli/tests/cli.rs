use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const NOW: &str = "2023-07-01T00:00:00Z";

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").canonicalize().unwrap()
}

/// A config in a temp dir that writes its outputs there and reads the
/// bundled resources.
struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self::with_extra("")
    }

    fn with_extra(extra: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let f = fixtures();
        let res = f.join("resources");
        let ev = f.join("eval");
        let toml = format!(
            r#"store = "articles.jsonl"
points = "points.jsonl"
graph = "epg.ttl"
{extra}
[resources]
gazetteer = "{gaz}"
causal_cues = "{cues}"
positive_lexicon = "{pos}"
negative_lexicon = "{neg}"
tactics = "{tac}"
opinion_cues = "{op}"
evidence_k = 2

[generation.backend]
kind = "stub"

[evaluation]
gold = "{gold}"
annotations = "{ann}"
"#,
            gaz = res.join("gazetteer.tsv").display(),
            cues = res.join("causal_cues.txt").display(),
            pos = res.join("positive.txt").display(),
            neg = res.join("negative.txt").display(),
            tac = res.join("tactics.tsv").display(),
            op = res.join("opinion_cues.txt").display(),
            gold = ev.join("gold_oceangate.txt").display(),
            ann = ev.join("annotations.tsv").display(),
        );
        std::fs::write(dir.path().join("plotline.toml"), toml).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        let config = self.path("plotline.toml");
        Command::new(env!("CARGO_BIN_EXE_plotline"))
            .arg("--config")
            .arg(&config)
            .args(["--timestamp", NOW])
            .args(args)
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> String {
        let out = self.run(args);
        assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    }

    fn build_graph(&self) {
        let corpus = fixtures().join("corpus");
        self.ok(&["ingest", "--from-files", corpus.to_str().unwrap()]);
        self.ok(&["extract"]);
        self.ok(&["assert"]);
    }
}

fn json(s: &str) -> serde_json::Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn ingest_from_files_is_idempotent() {
    let ws = Workspace::new();
    let corpus = fixtures().join("corpus");
    let first = json(&ws.ok(&["--json", "ingest", "--from-files", corpus.to_str().unwrap()]));
    assert_eq!(first["added"], 11);
    assert_eq!(first["duplicates"], 1);
    let second = json(&ws.ok(&["--json", "ingest", "--from-files", corpus.to_str().unwrap()]));
    assert_eq!(second["added"], 0);
    assert_eq!(second["total"], 11);
}

#[test]
fn missing_resource_is_a_config_error_naming_the_field() {
    let ws = Workspace::new();
    let cfg = std::fs::read_to_string(ws.path("plotline.toml")).unwrap();
    let broken = cfg.replace("tactics.tsv", "no-such-tactics.tsv");
    std::fs::write(ws.path("plotline.toml"), broken).unwrap();
    let out = ws.run(&["extract"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("resources.tactics"), "{err}");
    assert!(err.contains("no-such-tactics.tsv"), "{err}");
}

#[test]
fn unknown_config_key_is_rejected() {
    let ws = Workspace::with_extra("colour = \"blue\"");
    let out = ws.run(&["extract"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

/// Serves `/feed.xml` and the fixture pages until the test process ends.
fn serve_fixture_feed() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let feed = format!(
        r#"<?xml version="1.0"?><rss version="2.0"><channel><title>mock</title>
<item><title>OceanGate Titan submersible missing near Titanic wreck</title><link>{base}/pages/titan-lost</link></item>
<item><title>Search teams hear sonar signals</title><link>{base}/pages/search-sonar</link></item>
<item><title>Broken link</title><link>{base}/pages/missing</link></item>
</channel></rss>"#
    );
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut line = String::new();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            reader.read_line(&mut line).unwrap();
            loop {
                let mut h = String::new();
                if reader.read_line(&mut h).unwrap() == 0 || h == "\r\n" {
                    break;
                }
            }
            let path = line.split_whitespace().nth(1).unwrap_or("/").to_string();
            let page = path.strip_prefix("/pages/").map(|slug| fixtures().join("corpus/pages").join(format!("{slug}.html")));
            let (status, body) = match (path.as_str(), page) {
                ("/feed.xml", _) => ("200 OK", feed.clone()),
                (_, Some(p)) if p.exists() => ("200 OK", std::fs::read_to_string(p).unwrap()),
                _ => ("404 Not Found", String::new()),
            };
            let _ = write!(
                stream,
                "HTTP/1.1 {status}\r\nContent-Length: {}\r\nContent-Type: text/html; charset=utf-8\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    base
}

#[test]
fn fetch_survives_one_unreachable_feed() {
    let base = serve_fixture_feed();
    // port 9 on localhost is closed, so this feed fails to connect
    let feeds = format!(
        "fetch_timeout_secs = 5\n\n[[feeds]]\nname = \"mock\"\nurl = \"{base}/feed.xml\"\n\n[[feeds]]\nname = \"down\"\nurl = \"http://127.0.0.1:9/feed.xml\"\n"
    );
    let ws = Workspace::with_extra(&feeds);
    let out = ws.run(&["--json", "ingest", "--fetch"]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(out.status.success(), "{err}");
    let summary = json(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(summary["added"], 2);
    assert_eq!(summary["sources_ok"], 1);
    assert_eq!(summary["sources_failed"], 1);
    assert!(err.contains("warning") && err.contains("down"), "{err}");
}

#[test]
fn fetch_with_every_feed_down_exits_3() {
    let ws = Workspace::with_extra("fetch_timeout_secs = 2\n\n[[feeds]]\nname = \"down\"\nurl = \"http://127.0.0.1:9/feed.xml\"\n");
    let out = ws.run(&["ingest", "--fetch"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn extract_and_assert_are_deterministic() {
    let a = Workspace::new();
    let b = Workspace::new();
    a.build_graph();
    b.build_graph();
    let ga = std::fs::read_to_string(a.path("epg.ttl")).unwrap();
    assert_eq!(ga, std::fs::read_to_string(b.path("epg.ttl")).unwrap());
    assert_eq!(
        std::fs::read_to_string(a.path("points.jsonl")).unwrap(),
        std::fs::read_to_string(b.path("points.jsonl")).unwrap()
    );
    // asserting again over an existing graph adds nothing
    let again = json(&a.ok(&["--json", "assert"]));
    assert_eq!(again["added"], 0);
    assert_eq!(std::fs::read_to_string(a.path("epg.ttl")).unwrap(), ga);
}

#[test]
fn empty_store_gives_header_only_graph() {
    let ws = Workspace::new();
    let empty = tempfile::tempdir().unwrap();
    std::fs::create_dir(empty.path().join("feeds")).unwrap();
    ws.ok(&["ingest", "--from-files", empty.path().to_str().unwrap()]);
    ws.ok(&["extract"]);
    ws.ok(&["assert"]);
    let ttl = std::fs::read_to_string(ws.path("epg.ttl")).unwrap();
    assert!(ttl.lines().all(|l| l.is_empty() || l.starts_with("@prefix")), "{ttl}");
}

#[test]
fn query_templates_and_files() {
    let ws = Workspace::new();
    ws.build_graph();
    let lead = ws.ok(&["query", "--event", "Oceangate", "--level", "lead"]);
    let mut lines = lead.lines();
    assert_eq!(lines.next(), Some("?value\t?point"));
    let values: Vec<&str> = lines.map(|l| l.split('\t').next().unwrap()).collect();
    for v in ["\"Stockton Rush\"", "\"Newfoundland\""] {
        assert!(values.contains(&v), "{v} not in {values:?}");
    }
    let tail = json(&ws.ok(&["--json", "query", "--event", "Oceangate", "--level", "tail"]));
    let tail_values: Vec<&str> = tail.as_array().unwrap().iter().map(|r| r["value"].as_str().unwrap()).collect();
    assert!(tail_values.iter().any(|v| v.contains("overshadowed")), "{tail_values:?}");

    std::fs::write(ws.path("bad.rq"), "SELECT ?x WHERE { ?x ").unwrap();
    let out = ws.run(&["query", "--file", ws.path("bad.rq").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5));
    let out = ws.run(&["query", "--file", ws.path("absent.rq").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(
        ws.path("who.rq"),
        "PREFIX narr: <http://example.org/eno#>\nSELECT DISTINCT ?v WHERE { ?p a narr:Who ; narr:value ?v . FILTER regex(str(?v), \"dawood\") }\n",
    )
    .unwrap();
    let rows = ws.ok(&["query", "--file", ws.path("who.rq").to_str().unwrap()]);
    assert_eq!(rows, "?v\n\"Shahzada Dawood\"\n\"Suleman Dawood\"\n");
}

#[test]
fn generate_writes_report_with_full_coverage() {
    let ws = Workspace::new();
    ws.build_graph();
    let out = ws.path("og.json");
    ws.ok(&["generate", "--event", "Oceangate", "--out", out.to_str().unwrap()]);
    let report = json(&std::fs::read_to_string(&out).unwrap());
    for level in ["lead", "body", "tail"] {
        assert_eq!(report[level]["coverage"], 1.0, "{level}");
    }
    assert_eq!(report["generated_at"], NOW);
    assert!(std::fs::read_to_string(out.with_extension("md")).unwrap().contains("## Lead"));
    // default location is under the reports directory
    ws.ok(&["generate", "--event", "derailment"]);
    assert!(ws.path("reports/derailment.json").exists());

    let missing = ws.run(&["generate", "--event", "volcano eruption"]);
    assert_eq!(missing.status.code(), Some(6));
}

#[test]
fn evaluate_against_itself_and_gold() {
    let ws = Workspace::new();
    ws.build_graph();
    let out = ws.path("og.json");
    ws.ok(&["generate", "--event", "Oceangate", "--out", out.to_str().unwrap()]);
    let path = out.to_str().unwrap();
    let scores = json(&ws.ok(&["--json", "evaluate", "--report", path, "--reference", path, "--likert", "4,4,5,4,4"]));
    assert_eq!(scores["rouge1"]["recall"], 1.0);
    assert_eq!(scores["rouge2"]["recall"], 1.0);
    assert_eq!(scores["fluency"], 4.2);
    let sc = &scores["supp_cont"];
    assert_eq!(sc["gold_size"], 16);
    assert_eq!(sc["supp"].as_u64().unwrap() + sc["cont"].as_u64().unwrap(), 16);

    let bad = ws.run(&["evaluate", "--report", path, "--likert", "4,9"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn kappa_gold_out_reproduces_the_gold_file() {
    let ws = Workspace::new();
    let gold_out = ws.path("gold.txt");
    let out = json(&ws.ok(&[
        "--json",
        "kappa",
        "--threshold",
        "0.6",
        "--event",
        "Oceangate",
        "--gold-out",
        gold_out.to_str().unwrap(),
    ]));
    assert!(out["kappa"].as_f64().unwrap() > 0.6);
    let written = plotline::eval::GoldPlotSet::load(&gold_out).unwrap();
    let fixture = plotline::eval::GoldPlotSet::load(&fixtures().join("eval/gold_oceangate.txt")).unwrap();
    let mut a = written.points.clone();
    let mut b = fixture.points.clone();
    a.sort();
    b.sort();
    assert_eq!(a, b);
    assert_eq!(written.event_query, "Oceangate");
}

#[test]
fn kappa_rejects_labels_outside_the_set() {
    let ws = Workspace::new();
    let ann = fixtures().join("eval/annotations.tsv");
    let out = ws.run(&["kappa", "--annotations", ann.to_str().unwrap(), "--labels", "yes"]);
    assert_eq!(out.status.code(), Some(2));
}
