use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use rand::seq::IteratorRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use patkg_core::evaluation::{coverage, graph_stats, TermDictionary};
use patkg_core::graph::{
    export_dot, load_shards, neighborhood, save_shards, write_patent_shards, Direction,
    KindFilter, NeighborhoodQuery,
};
use patkg_core::inference::{apply_inferred, transitive_closure, RuleSpec};
use patkg_core::ingest::{ErrorMode, DEFAULT_SHARD_SIZE};
use patkg_core::pipeline::{extract_pretagged, ExtractSummary};
use patkg_core::tagging::load_pretagged;
use patkg_core::{
    parse_corpus, shard_records, CleaningConfig, CorpusFormat, MergedGraph, Pipeline,
    PipelineConfig, Subgraph,
};

/// Build and query an engineering knowledge graph from patent claims.
#[derive(Parser)]
#[command(name = "patkg", version)]
struct Cli {
    /// Pipeline configuration (JSON with `cleaning` and `tagging` sections).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cleaning configuration (JSON), replacing the `cleaning` section.
    #[arg(long, global = true)]
    cleaning_config: Option<PathBuf>,
    /// Worker threads; defaults to the number of processors.
    #[arg(long, global = true)]
    jobs: Option<NonZeroUsize>,
    /// Stop at the first malformed record instead of skipping it.
    #[arg(long, global = true)]
    fail_fast: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a claim corpus and split it into year shards.
    Ingest(IngestArgs),
    /// Extract per-patent graphs into year shards.
    Extract(ExtractArgs),
    /// Merge shard directories or canonical graphs into one graph.
    Merge(MergeArgs),
    /// Add transitively inferred containment facts.
    Infer(InferArgs),
    /// Print the neighbourhood of an entity as JSON.
    Query(QueryArgs),
    /// Term coverage of a dictionary by the graph's entities.
    Coverage(CoverageArgs),
    /// Entity and fact counts.
    Stats(GraphArg),
    /// Render the neighbourhood of an entity as Graphviz DOT.
    ExportDot(ExportDotArgs),
}

#[derive(Args)]
struct CorpusArgs {
    /// Corpus file.
    #[arg(long)]
    input: PathBuf,
    /// Corpus format: tsv or jsonl.
    #[arg(long, default_value = "tsv")]
    format: CorpusFormat,
    /// The TSV corpus starts with a header row.
    #[arg(long)]
    header: bool,
    /// Output directory.
    #[arg(long)]
    output: PathBuf,
    /// Patents per shard file.
    #[arg(long, default_value_t = NonZeroUsize::new(DEFAULT_SHARD_SIZE).unwrap())]
    shard_size: NonZeroUsize,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
}

#[derive(Args)]
struct ExtractArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Input is pre-tagged JSONL rather than raw claims.
    #[arg(long)]
    pretagged: bool,
}

#[derive(Args)]
struct GraphArg {
    /// Shard directory or canonical graph JSON file.
    #[arg(long)]
    graph: PathBuf,
}

#[derive(Args)]
struct MergeArgs {
    /// Shard directories or canonical graph files.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// A `.json` path receives canonical JSON; anything else is a shard directory.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = NonZeroUsize::new(DEFAULT_SHARD_SIZE).unwrap())]
    shard_size: NonZeroUsize,
}

#[derive(Args)]
struct InferArgs {
    #[command(flatten)]
    graph: GraphArg,
    /// `hierarchical`, or `labels` together with `--labels`.
    #[arg(long, default_value = "hierarchical")]
    scope: String,
    /// Relation labels followed when the scope is `labels`.
    #[arg(long, value_delimiter = ',')]
    labels: Vec<String>,
    /// Longest path, in edges, that may be collapsed.
    #[arg(long)]
    max_depth: Option<usize>,
    /// Where the closed graph goes (`.json` or shard directory).
    #[arg(long)]
    output: PathBuf,
    /// Also write the inferred facts as JSON lines.
    #[arg(long)]
    facts_output: Option<PathBuf>,
    #[arg(long, default_value_t = NonZeroUsize::new(DEFAULT_SHARD_SIZE).unwrap())]
    shard_size: NonZeroUsize,
}

#[derive(Args)]
struct NeighborhoodArgs {
    #[command(flatten)]
    graph: GraphArg,
    /// Exact entity surface.
    #[arg(long)]
    entity: String,
    #[arg(long, default_value_t = 1)]
    depth: usize,
    /// out, in or both.
    #[arg(long, default_value = "out")]
    direction: Direction,
    /// all, hierarchical or non-hierarchical.
    #[arg(long, default_value = "all")]
    kind: KindFilter,
    /// Keep the first N facts in traversal order.
    #[arg(long)]
    limit: Option<usize>,
    /// Keep a random sample of N facts; requires `--seed`.
    #[arg(long, requires = "seed")]
    sample: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Leave inferred facts out.
    #[arg(long)]
    no_inferred: bool,
}

#[derive(Args)]
struct QueryArgs {
    #[command(flatten)]
    query: NeighborhoodArgs,
}

#[derive(Args)]
struct ExportDotArgs {
    #[command(flatten)]
    query: NeighborhoodArgs,
    /// Write to a file instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CoverageArgs {
    #[command(flatten)]
    graph: GraphArg,
    /// CSV of `term,field` rows.
    #[arg(long)]
    dictionary: PathBuf,
    /// Also count matches after normalization.
    #[arg(long)]
    adjusted: bool,
    /// Print JSON instead of the text table.
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(errors) => {
            eprintln!("error: {errors} record(s) skipped");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Write to standard output. A closed pipe (`patkg query .. | head`) is not
/// an error.
fn emit(text: &str) -> Result<()> {
    let mut out = io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

/// Returns the number of records skipped.
fn run(cli: &Cli) -> Result<usize> {
    match &cli.command {
        Command::Ingest(args) => cmd_ingest(cli, args),
        Command::Extract(args) => cmd_extract(cli, args),
        Command::Merge(args) => cmd_merge(args).map(|_| 0),
        Command::Infer(args) => cmd_infer(args).map(|_| 0),
        Command::Query(args) => {
            let sub = run_query(&args.query)?;
            emit(&format!("{}\n", serde_json::to_string_pretty(&sub)?))?;
            Ok(0)
        }
        Command::Coverage(args) => cmd_coverage(args).map(|_| 0),
        Command::Stats(args) => {
            let graph = load_graph(&args.graph)?;
            emit(&format!("{}\n", serde_json::to_string_pretty(&graph_stats(&graph))?))?;
            Ok(0)
        }
        Command::ExportDot(args) => {
            let dot = export_dot(&run_query(&args.query)?);
            match &args.output {
                Some(path) => fs::write(path, dot).with_context(|| format!("writing {}", path.display()))?,
                None => emit(&dot)?,
            }
            Ok(0)
        }
    }
}

fn jobs(cli: &Cli) -> NonZeroUsize {
    cli.jobs.unwrap_or_else(|| {
        std::thread::available_parallelism().unwrap_or(NonZeroUsize::MIN)
    })
}

fn error_mode(cli: &Cli) -> ErrorMode {
    if cli.fail_fast {
        ErrorMode::FailFast
    } else {
        ErrorMode::SkipAndLog
    }
}

fn pipeline(cli: &Cli) -> Result<Pipeline> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::from_json(&read(path)?)
            .with_context(|| format!("loading {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(path) = &cli.cleaning_config {
        // Validated against the full lexicon when the pipeline is built.
        let base = patkg_core::HierarchyLexicon::default();
        config.cleaning = CleaningConfig::from_json(&read(path)?, &base)
            .with_context(|| format!("loading {}", path.display()))?;
    }
    Pipeline::new(config).context("building pipeline")
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Refuse to write into the input path or a directory containing it.
fn check_output(input: &Path, output: &Path) -> Result<()> {
    let input = fs::canonicalize(input).with_context(|| format!("reading {}", input.display()))?;
    let output_abs = match fs::canonicalize(output) {
        Ok(p) => p,
        Err(_) => std::env::current_dir()?.join(output),
    };
    if input == output_abs || input.starts_with(&output_abs) {
        bail!(
            "output {} must be distinct from input {}",
            output.display(),
            input.display()
        );
    }
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn corpus_format(args: &CorpusArgs) -> CorpusFormat {
    match args.format {
        CorpusFormat::Tsv { .. } => CorpusFormat::Tsv { header: args.header },
        other => other,
    }
}

fn cmd_ingest(cli: &Cli, args: &IngestArgs) -> Result<usize> {
    let c = &args.corpus;
    check_output(&c.input, &c.output)?;
    let parsed = parse_corpus(open(&c.input)?, corpus_format(c), error_mode(cli))?;
    let records = parsed.records.len();
    fs::create_dir_all(&c.output).with_context(|| format!("creating {}", c.output.display()))?;
    let shards = shard_records(parsed.records, c.shard_size);
    for shard in &shards {
        let path = c.output.join(shard.key.to_string()).join(format!("{}.jsonl", shard.index));
        fs::create_dir_all(path.parent().expect("shard path has a parent"))?;
        let mut body = String::new();
        for record in &shard.records {
            body.push_str(&serde_json::to_string(record)?);
            body.push('\n');
        }
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        info!("wrote {}", path.display());
    }
    emit(&format!(
        "records={records} shards={} skipped={}\n",
        shards.len(),
        parsed.skipped.len()
    ))?;
    Ok(parsed.skipped.len())
}

fn cmd_extract(cli: &Cli, args: &ExtractArgs) -> Result<usize> {
    let c = &args.corpus;
    check_output(&c.input, &c.output)?;
    let pipeline = pipeline(cli)?;
    let (graphs, claims, skipped) = if args.pretagged {
        let corpus = load_pretagged(open(&c.input)?)?;
        let graphs = extract_pretagged(&corpus.claims, pipeline.lexicon());
        let claims = corpus.claims.len();
        (graphs.into_iter().map(|g| (g, None)).collect::<Vec<_>>(), claims, 0)
    } else {
        let parsed = parse_corpus(open(&c.input)?, corpus_format(c), error_mode(cli))?;
        let claims = parsed.records.iter().map(|r| r.claims.len()).sum();
        info!("extracting {} patents with {} jobs", parsed.records.len(), jobs(cli));
        let graphs = pipeline.extract_records(&parsed.records, jobs(cli))?;
        let dated = graphs
            .into_iter()
            .zip(parsed.records.iter().map(|r| r.year))
            .collect();
        (dated, claims, parsed.skipped.len())
    };
    let summary = ExtractSummary::from_graphs(graphs.iter().map(|(g, _)| g), claims);
    let manifest = write_patent_shards(&c.output, graphs, c.shard_size)?;
    info!("wrote {} shard(s) to {}", manifest.shards.len(), c.output.display());
    emit(&format!("{summary} skipped={skipped}\n"))?;
    Ok(skipped)
}

/// A directory holding a manifest is read as shards, anything else as
/// canonical graph JSON.
fn load_graph(path: &Path) -> Result<MergedGraph> {
    let graph = if path.is_dir() {
        load_shards(path)?
    } else {
        MergedGraph::from_canonical_json(&read(path)?)?
    };
    info!(
        "loaded {}: {} entities, {} facts",
        path.display(),
        graph.entity_count(),
        graph.fact_count()
    );
    Ok(graph)
}

fn save_graph(graph: &MergedGraph, path: &Path, shard_size: NonZeroUsize) -> Result<()> {
    if path.extension().is_some_and(|e| e == "json") {
        let mut text = graph.to_canonical_json();
        text.push('\n');
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    } else {
        save_shards(graph, path, shard_size)?;
    }
    info!("wrote {}", path.display());
    Ok(())
}

fn cmd_merge(args: &MergeArgs) -> Result<()> {
    let mut merged = MergedGraph::new();
    for input in &args.input {
        check_output(input, &args.output)?;
        merged.absorb(&load_graph(input)?);
    }
    save_graph(&merged, &args.output, args.shard_size)?;
    emit(&format!(
        "patents={} entities={} facts={}\n",
        merged.patents().len(),
        merged.entity_count(),
        merged.fact_count()
    ))
}

fn cmd_infer(args: &InferArgs) -> Result<()> {
    check_output(&args.graph.graph, &args.output)?;
    let graph = load_graph(&args.graph.graph)?;
    let spec = match args.scope.as_str() {
        "hierarchical" => RuleSpec::hierarchical(),
        "labels" => RuleSpec::labels(args.labels.iter().cloned())?,
        other => bail!("unknown scope `{other}` (expected hierarchical or labels)"),
    }
    .with_max_depth(args.max_depth);
    let inferred = transitive_closure(&graph, &spec);
    let count = inferred.len();
    if let Some(path) = &args.facts_output {
        let mut out = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
        for fact in &inferred {
            writeln!(out, "{}", serde_json::to_string(fact)?)?;
        }
    }
    let closed = apply_inferred(&graph, inferred)?;
    save_graph(&closed, &args.output, args.shard_size)?;
    emit(&format!("inferred={count} facts={}\n", closed.fact_count()))
}

fn run_query(args: &NeighborhoodArgs) -> Result<Subgraph> {
    let graph = load_graph(&args.graph.graph)?;
    let query = NeighborhoodQuery {
        entity: args.entity.clone(),
        depth: args.depth,
        direction: args.direction,
        kind: args.kind,
        limit: args.limit,
        include_inferred: !args.no_inferred,
    };
    let mut sub = neighborhood(&graph, &query)?;
    if let (Some(n), Some(seed)) = (args.sample, args.seed) {
        sample_facts(&mut sub, n, seed);
    }
    Ok(sub)
}

/// Keep a seeded reservoir sample of `n` facts, in their original order,
/// and the nodes they touch.
fn sample_facts(sub: &mut Subgraph, n: usize, seed: u64) {
    if sub.facts.len() <= n {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = (0..sub.facts.len()).choose_multiple(&mut rng, n);
    keep.sort_unstable();
    let facts: Vec<_> = keep.into_iter().map(|i| sub.facts[i].clone()).collect();
    sub.nodes.retain(|node| {
        node.name == sub.center
            || facts.iter().any(|f| f.head == node.name || f.tail == node.name)
    });
    sub.facts = facts;
    sub.truncated = true;
}

fn cmd_coverage(args: &CoverageArgs) -> Result<()> {
    let dict = TermDictionary::from_csv(open(&args.dictionary)?)
        .with_context(|| format!("reading {}", args.dictionary.display()))?;
    let graph = load_graph(&args.graph.graph)?;
    let report = coverage(&dict, &graph, args.adjusted)?;
    if args.json {
        emit(&format!("{}\n", serde_json::to_string_pretty(&report)?))
    } else {
        emit(&report.to_table())
    }
}
