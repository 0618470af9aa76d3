use std::fs;
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use scisearch_cli::server::{self, AppState};
use scisearch_cli::{open_engine, output, ScorerCommand};
use scisearch_core::corpus::{load_corpus, load_topics, LoadOptions};
use scisearch_core::eval::{evaluate_run, read_qrels, read_run, save_run, BprefVariant, EvalConfig, NdcgVariant};
use scisearch_core::fusion::TfidfScaling;
use scisearch_core::graph::{build_bipartite_graph, generate_tuples, write_tuples};
use scisearch_core::index::{Embedder, HashEmbedder, DEFAULT_EMBEDDER_SEED};
use scisearch_core::pipeline::{build_index, PipelineConfig, TopicField};
use scisearch_core::rank::{serve_scorer, ReferenceExtractor, ReferenceSummarizer};

#[derive(Parser)]
#[command(name = "scisearch", version, about = "Hybrid search over scientific papers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a snapshot (keyword index, paragraph embeddings, manifest) from a corpus.
    Index(IndexArgs),
    /// Run one query against a snapshot.
    Search(SearchArgs),
    /// Run every topic of a topics file and write a TREC run.
    RunTopics(RunTopicsArgs),
    /// Export balanced paragraph/citation training tuples as TSV.
    Tuples(TuplesArgs),
    /// Score a run against qrels.
    Evaluate(EvaluateArgs),
    /// Serve GET /search and GET /health.
    Serve(ServeArgs),
    /// Speak the scorer protocol on stdin/stdout with the reference scorers.
    Scorer(ScorerArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Pipeline configuration as JSON; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    rrf_k: Option<f64>,
    #[arg(long)]
    pool_size: Option<usize>,
    #[arg(long, value_enum)]
    tfidf_scaling: Option<Scaling>,
    /// Run tag written in TREC output.
    #[arg(long)]
    tag: Option<String>,
    /// External scorer program speaking the line protocol.
    #[arg(long)]
    scorer: Option<String>,
    /// Argument for the scorer program (repeatable).
    #[arg(long = "scorer-arg", allow_hyphen_values = true)]
    scorer_args: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scaling {
    Max,
    Raw,
}

impl ConfigArgs {
    fn pipeline(&self) -> anyhow::Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => PipelineConfig::default(),
        };
        if let Some(mu) = self.mu {
            cfg.fusion.mu = mu;
        }
        if let Some(k) = self.rrf_k {
            cfg.fusion.rrf_k = k;
        }
        if let Some(p) = self.pool_size {
            cfg.fusion.pool_size = p;
        }
        if let Some(s) = self.tfidf_scaling {
            cfg.fusion.tfidf_scaling = match s {
                Scaling::Max => TfidfScaling::Max,
                Scaling::Raw => TfidfScaling::Raw,
            };
        }
        if let Some(tag) = &self.tag {
            cfg.run_tag = tag.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn scorer(&self) -> Option<ScorerCommand> {
        self.scorer.as_ref().map(|program| ScorerCommand {
            program: program.clone(),
            args: self.scorer_args.clone(),
        })
    }
}

#[derive(Args)]
struct IndexArgs {
    /// JSONL file or directory of JSONL files.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Fail on the first malformed record instead of skipping it.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    dimension: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k1: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
    Trec,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, env = "SCISEARCH_SNAPSHOT")]
    snapshot: PathBuf,
    #[arg(short, long, default_value_t = 10)]
    n: usize,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Topic id used for `--format trec`.
    #[arg(long, default_value_t = 1)]
    topic_id: u32,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(required = true, num_args = 1..)]
    query: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Field {
    Query,
    Question,
    Narrative,
    Concat,
}

#[derive(Args)]
struct RunTopicsArgs {
    #[arg(long, env = "SCISEARCH_SNAPSHOT")]
    snapshot: PathBuf,
    #[arg(long)]
    topics: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "query")]
    field: Field,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct TuplesArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    strict: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum NdcgArg {
    Paper,
    Standard,
}

#[derive(Clone, Copy, ValueEnum)]
enum BprefArg {
    Paper,
    Trec,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Table,
    Json,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long)]
    run: PathBuf,
    /// Drop unjudged documents before P@n, nDCG and AP.
    #[arg(long)]
    judged_only: bool,
    #[arg(long, value_enum, default_value = "paper")]
    ndcg_variant: NdcgArg,
    #[arg(long, value_enum, default_value = "paper")]
    bpref_variant: BprefArg,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    rel_threshold: u8,
    #[arg(long, value_enum, default_value = "table")]
    format: ReportFormat,
    /// Also write the report as JSON to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "SCISEARCH_SNAPSHOT")]
    snapshot: PathBuf,
    #[arg(long, env = "SCISEARCH_PORT", default_value_t = 8080)]
    port: u16,
    #[arg(long, env = "SCISEARCH_HOST", default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct ScorerArgs {
    #[arg(long, default_value_t = 256)]
    dimension: usize,
    #[arg(long, default_value_t = DEFAULT_EMBEDDER_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    max_spans: usize,
}

fn index(args: IndexArgs) -> anyhow::Result<()> {
    let mut cfg = match &args.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
        None => PipelineConfig::default(),
    };
    if args.dimension.is_some() || args.seed.is_some() {
        let dimension = args.dimension.unwrap_or(cfg.dimension);
        let seed = args.seed.unwrap_or(cfg.embedder()?.seed());
        cfg.dimension = dimension;
        cfg.embedder_id = HashEmbedder::new(dimension, seed).id();
    }
    if let Some(k1) = args.k1 {
        cfg.bm25.k1 = k1;
    }
    if let Some(b) = args.b {
        cfg.bm25.b = b;
    }
    let loaded = load_corpus(&args.corpus, LoadOptions { strict: args.strict })?;
    let index = build_index(loaded.documents, &cfg)?;
    index.save(&args.out)?;
    let m = index.manifest();
    println!(
        "indexed {} documents, {} paragraphs ({} records skipped)",
        m.document_count, m.paragraph_count, loaded.skipped
    );
    println!("checksum {}", m.checksum);
    Ok(())
}

fn search(args: SearchArgs) -> anyhow::Result<()> {
    let cfg = args.config.pipeline()?;
    let tag = cfg.run_tag.clone();
    let engine = open_engine(&args.snapshot, cfg, args.config.scorer().as_ref())?;
    let response = engine.search(&args.query.join(" "), args.n)?;
    let text = match args.format {
        Format::Table => output::table(&response),
        Format::Json => output::json(&response),
        Format::Trec => output::trec(&response, args.topic_id, &tag)?,
    };
    io::stdout().write_all(text.as_bytes())?;
    Ok(())
}

fn run_topics(args: RunTopicsArgs) -> anyhow::Result<()> {
    let cfg = args.config.pipeline()?;
    let engine = open_engine(&args.snapshot, cfg, args.config.scorer().as_ref())?;
    let topics = load_topics(&args.topics)?;
    let field = match args.field {
        Field::Query => TopicField::Query,
        Field::Question => TopicField::Question,
        Field::Narrative => TopicField::Narrative,
        Field::Concat => TopicField::Concat,
    };
    let run = engine.run_topics(&topics, field)?;
    save_run(&run, &args.out)?;
    println!("wrote {} topics to {}", run.topic_ids().count(), args.out.display());
    Ok(())
}

fn tuples(args: TuplesArgs) -> anyhow::Result<()> {
    let loaded = load_corpus(&args.corpus, LoadOptions { strict: args.strict })?;
    let graph = build_bipartite_graph(&loaded.documents);
    let tuples = generate_tuples(&graph, args.seed)?;
    let file = fs::File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut out = BufWriter::new(file);
    write_tuples(&tuples, &mut out)?;
    out.flush()?;
    println!(
        "{} paragraphs, {} citations, {} edges, {} tuples",
        graph.paragraph_nodes.len(),
        graph.citation_nodes.len(),
        graph.edge_count(),
        tuples.len()
    );
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> anyhow::Result<()> {
    let cfg = EvalConfig {
        rel_threshold: args.rel_threshold,
        ndcg_variant: match args.ndcg_variant {
            NdcgArg::Paper => NdcgVariant::Paper,
            NdcgArg::Standard => NdcgVariant::Standard,
        },
        bpref_variant: match args.bpref_variant {
            BprefArg::Paper => BprefVariant::Paper,
            BprefArg::Trec => BprefVariant::Trec,
        },
        judged_only: args.judged_only,
    };
    let report = evaluate_run(&read_run(&args.run)?, &read_qrels(&args.qrels)?, &cfg)?;
    let json = serde_json::to_string_pretty(&report)? + "\n";
    match args.format {
        ReportFormat::Table => print!("{}", report.render_table()),
        ReportFormat::Json => print!("{json}"),
    }
    if let Some(path) = &args.out {
        fs::write(path, &json).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn serve(args: ServeArgs) -> anyhow::Result<()> {
    let cfg = args.config.pipeline()?;
    let scorer = args.config.scorer();
    let snapshot = args.snapshot.clone();
    if !snapshot.exists() {
        bail!("snapshot {} does not exist", snapshot.display());
    }
    let addr = SocketAddr::new(args.host, args.port);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(server::serve(addr, AppState::new(), move || {
        open_engine(Path::new(&snapshot), cfg, scorer.as_ref())
    }))
}

fn scorer(args: ScorerArgs) -> anyhow::Result<()> {
    let embedder = Arc::new(HashEmbedder::new(args.dimension, args.seed));
    let extractor = ReferenceExtractor {
        max_spans: args.max_spans,
    };
    let summarizer = ReferenceSummarizer::new(embedder);
    serve_scorer(&extractor, &summarizer, io::stdin().lock(), io::stdout().lock())?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Index(a) => index(a),
        Command::Search(a) => search(a),
        Command::RunTopics(a) => run_topics(a),
        Command::Tuples(a) => tuples(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Serve(a) => serve(a),
        Command::Scorer(a) => scorer(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
