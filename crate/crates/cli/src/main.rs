mod config;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use chrono::{DateTime, Utc};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use plotline::eval::{self, AnnotationTable, EventScores, GoldPlotSet, ReferenceText};
use plotline::extract::{read_plot_points, write_plot_points, Level};
use plotline::graph::{parse_turtle, serialize_turtle, EventPlotGraph};
use plotline::ingest::{ArticleStore, HttpFetcher};
use plotline::pipeline::{assert_all, extract_all, ingest_directory, ingest_sources, IngestSummary};
use plotline::report::{build_prompt_set, generate_report, IntelligenceReport, ReportError};
use plotline::sparql::{execute, parse_query, template_for, TemplateOptions};
use plotline::text::contains_phrase;

use config::PipelineConfig;

/// Exit codes.
mod code {
    pub const CONFIG: u8 = 2;
    pub const ALL_SOURCES_FAILED: u8 = 3;
    pub const READ: u8 = 4;
    pub const QUERY_SYNTAX: u8 = 5;
    pub const EMPTY_RETRIEVAL: u8 = 6;
    pub const BACKEND: u8 = 7;
}

#[derive(Parser)]
#[command(name = "plotline", version, about = "Build event plot graphs from news and generate intelligence reports")]
struct Cli {
    /// Pipeline config file.
    #[arg(long, global = true, default_value = "plotline.toml")]
    config: PathBuf,
    /// Suppress warnings on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Fixed RFC 3339 time used for fetch and generation stamps.
    #[arg(long, global = true)]
    timestamp: Option<DateTime<Utc>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Lead,
    Body,
    Tail,
}

impl From<LevelArg> for Level {
    fn from(l: LevelArg) -> Self {
        match l {
            LevelArg::Lead => Level::Lead,
            LevelArg::Body => Level::Body,
            LevelArg::Tail => Level::Tail,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Add articles from feeds to the article store.
    Ingest {
        /// Read DIR/feeds/*.xml, DIR/pages/ and DIR/reports/ instead of fetching.
        #[arg(long, value_name = "DIR", conflicts_with = "fetch")]
        from_files: Option<PathBuf>,
        /// Fetch the feeds listed in the config.
        #[arg(long)]
        fetch: bool,
    },
    /// Extract plot points from every stored article.
    Extract,
    /// Assert articles and plot points into the Turtle graph.
    Assert,
    /// Run a retrieval template or a SPARQL file against the graph.
    Query {
        #[arg(long, required_unless_present = "file", conflicts_with = "file")]
        event: Option<String>,
        #[arg(long, value_enum, default_value = "lead")]
        level: LevelArg,
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Generate an intelligence report for an event.
    Generate {
        #[arg(long)]
        event: String,
        /// Output JSON path; a Markdown rendering is written beside it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a report against a reference text and optional gold set.
    Evaluate {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Comma-separated 1..5 fluency scores.
        #[arg(long, value_delimiter = ',')]
        likert: Vec<i64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inter-annotator agreement for an annotation file.
    Kappa {
        #[arg(long)]
        annotations: Option<PathBuf>,
        /// Allowed labels, comma-separated (default: labels seen in the file).
        #[arg(long, value_delimiter = ',')]
        labels: Vec<String>,
        #[arg(long, default_value_t = 0.6)]
        threshold: f64,
        /// Write points whose kappa exceeds the threshold as a gold file.
        #[arg(long, requires = "event")]
        gold_out: Option<PathBuf>,
        #[arg(long)]
        event: Option<String>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

type Outcome = Result<(), Failure>;

trait OrExit<T> {
    fn or_exit(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Display> OrExit<T> for Result<T, E> {
    fn or_exit(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code,
            message: format!("{e:#}"),
        })
    }
}

struct Ctx {
    quiet: bool,
    json: bool,
    now: DateTime<Utc>,
}

impl Ctx {
    fn warn(&self, msg: impl Display) {
        if !self.quiet {
            eprintln!("warning: {msg}");
        }
    }
}

fn load_config(path: &Path) -> Result<PipelineConfig, Failure> {
    PipelineConfig::load(path).or_exit(code::CONFIG)
}

fn write_file(path: &Path, contents: &str) -> Outcome {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).or_exit(code::READ)?;
    }
    std::fs::write(path, contents)
        .map_err(|e| anyhow!("cannot write {}: {e}", path.display()))
        .or_exit(code::READ)
}

fn load_store(path: &Path) -> Result<ArticleStore, Failure> {
    let (store, diags) = ArticleStore::load(path).or_exit(code::READ)?;
    for d in diags {
        eprintln!("warning: {}:{}: {}", path.display(), d.line, d.message);
    }
    Ok(store)
}

fn load_graph(path: &Path) -> Result<EventPlotGraph, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow!("cannot read graph {}: {e}", path.display()))
        .or_exit(code::READ)?;
    parse_turtle(&text).or_exit(code::READ)
}

fn ingest(ctx: &Ctx, cfg: &PipelineConfig, from_files: Option<PathBuf>, fetch: bool) -> Outcome {
    let (mut store, diags) = ArticleStore::load_or_new(&cfg.store).or_exit(code::READ)?;
    for d in diags {
        ctx.warn(format!("{}:{}: {}", cfg.store.display(), d.line, d.message));
    }
    let before = store.len();
    let summary: IngestSummary = match (from_files, fetch) {
        (Some(dir), _) => {
            if !dir.is_dir() {
                return Err(Failure {
                    code: code::CONFIG,
                    message: format!("--from-files: {} is not a directory", dir.display()),
                });
            }
            ingest_directory(&mut store, &dir, ctx.now)
        }
        (None, true) => {
            if cfg.feeds.is_empty() {
                return Err(Failure {
                    code: code::CONFIG,
                    message: "feeds: no feed sources configured".into(),
                });
            }
            let fetcher = HttpFetcher::new(cfg.fetch_timeout).or_exit(code::CONFIG)?;
            ingest_sources(&mut store, &cfg.feeds, &fetcher, ctx.now)
        }
        (None, false) => {
            return Err(Failure {
                code: code::CONFIG,
                message: "ingest needs --from-files DIR or --fetch".into(),
            })
        }
    };
    for w in &summary.warnings {
        ctx.warn(w);
    }
    if summary.all_failed() {
        return Err(Failure {
            code: code::ALL_SOURCES_FAILED,
            message: format!("all {} sources failed", summary.sources_failed),
        });
    }
    store.save().or_exit(code::READ)?;
    if ctx.json {
        println!(
            "{}",
            json!({
                "added": summary.added,
                "duplicates": summary.duplicates,
                "sources_ok": summary.sources_ok,
                "sources_failed": summary.sources_failed,
                "total": store.len(),
            })
        );
    } else {
        println!(
            "added {} articles ({} already stored); store has {} (was {before})",
            summary.added,
            summary.duplicates,
            store.len()
        );
    }
    Ok(())
}

fn extract(ctx: &Ctx, cfg: &PipelineConfig) -> Outcome {
    let store = load_store(&cfg.store)?;
    let (points, diags) = extract_all(&store, &cfg.resources).or_exit(code::READ)?;
    for d in &diags {
        ctx.warn(format!("{}: {}", d.article_id, d.message));
    }
    write_plot_points(&cfg.points, &points).or_exit(code::READ)?;
    if ctx.json {
        println!("{}", json!({ "articles": store.len(), "plot_points": points.len() }));
    } else {
        println!("extracted {} plot points from {} articles", points.len(), store.len());
    }
    Ok(())
}

fn assert_cmd(ctx: &Ctx, cfg: &PipelineConfig) -> Outcome {
    let store = load_store(&cfg.store)?;
    let points = read_plot_points(&cfg.points).or_exit(code::READ)?;
    let mut g = if cfg.graph.exists() { load_graph(&cfg.graph)? } else { EventPlotGraph::new() };
    let before = g.len();
    assert_all(&mut g, &store, &points).or_exit(code::READ)?;
    write_file(&cfg.graph, &serialize_turtle(&g))?;
    if ctx.json {
        println!("{}", json!({ "triples": g.len(), "added": g.len() - before }));
    } else {
        println!("graph has {} triples ({} new)", g.len(), g.len() - before);
    }
    Ok(())
}

fn query(ctx: &Ctx, cfg: &PipelineConfig, event: Option<String>, level: LevelArg, file: Option<PathBuf>) -> Outcome {
    let q = match (event, file) {
        (Some(e), _) => template_for(level.into(), &e, TemplateOptions { raw_regex: cfg.prompts.raw_regex })
            .or_exit(code::QUERY_SYNTAX)?,
        (None, Some(f)) => {
            let text = std::fs::read_to_string(&f)
                .map_err(|e| anyhow!("cannot read {}: {e}", f.display()))
                .or_exit(code::CONFIG)?;
            parse_query(&text)
                .map_err(|e| anyhow!("{}: {e}", f.display()))
                .or_exit(code::QUERY_SYNTAX)?
        }
        (None, None) => unreachable!("clap requires --event or --file"),
    };
    let g = load_graph(&cfg.graph)?;
    let rows = execute(&g, &q).or_exit(code::QUERY_SYNTAX)?;
    if ctx.json {
        let out: Vec<BTreeMap<&str, String>> = (0..rows.len())
            .map(|i| rows.row_map(i).into_iter().map(|(k, v)| (k, v.str_value().to_string())).collect())
            .collect();
        println!("{}", serde_json::to_string_pretty(&out).expect("rows serialize"));
    } else {
        print!("{}", rows.to_tsv());
    }
    Ok(())
}

fn slug(event: &str) -> String {
    let s: String = event
        .chars()
        .map(|c| if c.is_alphanumeric() { c.to_ascii_lowercase() } else { '-' })
        .collect();
    let s = s.split('-').filter(|p| !p.is_empty()).collect::<Vec<_>>().join("-");
    if s.is_empty() {
        "report".into()
    } else {
        s
    }
}

fn generate(ctx: &Ctx, cfg: &PipelineConfig, event: &str, out: Option<PathBuf>) -> Outcome {
    let g = load_graph(&cfg.graph)?;
    let ps = build_prompt_set(&g, event, &cfg.prompts).map_err(|e| Failure {
        code: match e {
            ReportError::EmptyRetrieval(_) => code::EMPTY_RETRIEVAL,
            ReportError::Query(_) => code::QUERY_SYNTAX,
            _ => code::CONFIG,
        },
        message: e.to_string(),
    })?;
    let backend = cfg.generation.make_backend().or_exit(code::CONFIG)?;
    let report = generate_report(&ps, backend.as_ref(), &cfg.generation, ctx.now).or_exit(code::BACKEND)?;
    let path = out.unwrap_or_else(|| cfg.reports.join(format!("{}.json", slug(event))));
    let json = report.to_json();
    write_file(&path, &format!("{json}\n"))?;
    write_file(&path.with_extension("md"), &report.render_markdown())?;
    if ctx.json {
        println!("{json}");
    } else {
        println!("wrote {}", path.display());
        for level in Level::ALL {
            if let Some(s) = report.section(level) {
                println!("{level}: {} words, keyword coverage {:.2}", s.word_count, s.coverage);
            }
        }
    }
    Ok(())
}

fn report_text(r: &IntelligenceReport) -> String {
    Level::ALL
        .iter()
        .filter_map(|l| r.section(*l).map(|s| s.text.as_str()))
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Prompt keywords that made it into their section's text.
fn matched_keywords(r: &IntelligenceReport) -> Vec<String> {
    Level::ALL
        .iter()
        .filter_map(|l| r.section(*l))
        .flat_map(|s| s.keywords.iter().filter(|k| contains_phrase(&s.text, k)).cloned())
        .collect()
}

fn load_report(path: &Path) -> Result<IntelligenceReport, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow!("cannot read report {}: {e}", path.display()))
        .or_exit(code::CONFIG)?;
    IntelligenceReport::from_json(&text)
        .map_err(|e| anyhow!("{} is not a report file: {e}", path.display()))
        .or_exit(code::CONFIG)
}

fn evaluate(
    ctx: &Ctx,
    cfg: &PipelineConfig,
    report: &Path,
    reference: Option<PathBuf>,
    gold: Option<PathBuf>,
    likert: Vec<i64>,
    out: Option<PathBuf>,
) -> Outcome {
    let r = load_report(report)?;
    let text = report_text(&r);
    let mut scores = EventScores {
        event_query: r.event_query.clone(),
        rouge1: None,
        rouge2: None,
        supp_cont: None,
        kappa: None,
        fluency: None,
    };
    if let Some(path) = reference.or_else(|| cfg.evaluation.reference.clone()) {
        // a report file works as a reference too
        let ref_text = match std::fs::read_to_string(&path).ok().and_then(|t| IntelligenceReport::from_json(&t).ok()) {
            Some(other) => report_text(&other),
            None => ReferenceText::load(&path, &r.event_query).or_exit(code::CONFIG)?.text,
        };
        scores.rouge1 = Some(plotline::rouge_n(&text, &ref_text, 1));
        scores.rouge2 = Some(plotline::rouge_n(&text, &ref_text, 2));
    }
    if let Some(path) = gold.or_else(|| cfg.evaluation.gold.clone()) {
        let g = GoldPlotSet::load(&path).or_exit(code::CONFIG)?;
        scores.supp_cont = Some(eval::supp_cont(&matched_keywords(&r), &g));
    }
    if let Some(path) = &cfg.evaluation.annotations {
        let t = AnnotationTable::load(path, None).or_exit(code::CONFIG)?;
        scores.kappa = Some(plotline::cohen_kappa(&t).or_exit(code::CONFIG)?);
    }
    let likert = if likert.is_empty() { cfg.evaluation.likert.clone() } else { likert };
    if !likert.is_empty() {
        scores.fluency = Some(plotline::likert_average(&likert).or_exit(code::CONFIG)?);
    }
    let doc = serde_json::to_string_pretty(&scores).expect("scores serialize");
    if let Some(path) = out {
        write_file(&path, &format!("{doc}\n"))?;
    }
    if ctx.json {
        println!("{doc}");
    } else {
        println!("event: {}", scores.event_query);
        for r in [scores.rouge1, scores.rouge2].into_iter().flatten() {
            println!("ROUGE-{}: recall {:.4}  precision {:.4}  f1 {:.4}", r.n, r.recall, r.precision, r.f1);
        }
        if let Some(s) = scores.supp_cont {
            println!("supp {}  cont {}  (gold {})", s.supp, s.cont, s.gold_size);
        }
        if let Some(k) = scores.kappa {
            println!("kappa {k:.4}");
        }
        if let Some(f) = scores.fluency {
            println!("fluency {f:.2}");
        }
    }
    Ok(())
}

fn kappa(
    ctx: &Ctx,
    config: &Path,
    annotations: Option<PathBuf>,
    labels: Vec<String>,
    threshold: f64,
    gold_out: Option<PathBuf>,
    event: Option<String>,
) -> Outcome {
    // the annotation file alone is enough; the config is only a fallback
    let path = match annotations {
        Some(p) => p,
        None => load_config(config)?.evaluation.annotations.ok_or(Failure {
            code: code::CONFIG,
            message: "no --annotations given and evaluation.annotations is not set".into(),
        })?,
    };
    let label_set: Option<BTreeSet<String>> = (!labels.is_empty()).then(|| labels.into_iter().collect());
    let table = AnnotationTable::load(&path, label_set.as_ref()).or_exit(code::CONFIG)?;
    let overall = plotline::cohen_kappa(&table).or_exit(code::CONFIG)?;
    let groups = table.group_by_item();
    let mut per_item = Vec::new();
    for (item, t) in &groups {
        per_item.push((item.clone(), plotline::cohen_kappa(t).or_exit(code::CONFIG)?));
    }
    if let Some(out) = gold_out {
        let gold = eval::filter_gold_by_kappa(event.as_deref().unwrap_or_default(), &groups, threshold)
            .or_exit(code::CONFIG)?;
        write_file(&out, &gold.to_file_string())?;
        if !ctx.json {
            println!("kept {} of {} points in {}", gold.len(), groups.len(), out.display());
        }
    }
    if ctx.json {
        let items: Vec<_> = per_item.iter().map(|(i, k)| json!({ "item": i, "kappa": k })).collect();
        println!("{}", json!({ "kappa": overall, "items": items }));
    } else {
        println!("kappa {overall:.4} over {} rows", table.len());
        for (item, k) in per_item {
            println!("{item}\t{k:.4}");
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let ctx = Ctx {
        quiet: cli.quiet,
        json: cli.json,
        now: cli.timestamp.unwrap_or_else(Utc::now),
    };
    match cli.command {
        Command::Kappa {
            annotations,
            labels,
            threshold,
            gold_out,
            event,
        } => kappa(&ctx, &cli.config, annotations, labels, threshold, gold_out, event),
        command => {
            let cfg = load_config(&cli.config)?;
            match command {
                Command::Ingest { from_files, fetch } => ingest(&ctx, &cfg, from_files, fetch),
                Command::Extract => extract(&ctx, &cfg),
                Command::Assert => assert_cmd(&ctx, &cfg),
                Command::Query { event, level, file } => query(&ctx, &cfg, event, level, file),
                Command::Generate { event, out } => generate(&ctx, &cfg, &event, out),
                Command::Evaluate {
                    report,
                    reference,
                    gold,
                    likert,
                    out,
                } => evaluate(&ctx, &cfg, &report, reference, gold, likert, out),
                Command::Kappa { .. } => unreachable!(),
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
