//! Subcommands. Each stage can be run on its own from files, or all at once
//! from a config with `run`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nprox_core::attraction::{compute_attraction, format_records_csv, parse_records_csv, AttractionConfig};
use nprox_core::embed::{load_embedding, store_embedding};
use nprox_core::graph::ppmi_transform;
use nprox_core::ingest::{CooccurrenceCounts, SynthParams};
use nprox_core::interp::{evaluate_model, rank_models, ModelReport};
use nprox_core::proximity::{MaskingRule, ProximityConfig, ProximityStack};
use nprox_core::rng::derive_seed;
use nprox_core::textio::{self, write_atomic};
use serde::Serialize;

use crate::config::{load_config, ModelSpec, RunConfig, SynthSettings};
use crate::error::{io_err, CliError};
use crate::persist::{read_stack, write_stack};
use crate::pipeline::{self, run_pipeline, IngestArtifact};
use crate::report::{emit_report, format_table_csv, ReportFormat};

#[derive(Debug, Parser)]
#[command(name = "nprox", version, about = "Interpretability of inter-node distances in node embeddings")]
pub struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic community corpus (playlist format) and its labels.
    Synth(SynthArgs),
    /// Build co-occurrence counts from the dataset named in a config.
    Ingest(IngestArgs),
    /// PPMI transform and low-degree filter of a count matrix.
    Ppmi(PpmiArgs),
    /// Build the S/P/H proximity stack with weight classes.
    Proximity(ProximityArgs),
    /// Embed a network with one model.
    Embed(EmbedArgs),
    /// Score neighbourhood attraction of an embedding against a stack.
    Attraction(AttractionArgs),
    /// Interpretability scores and ranking from attraction records.
    Interpret(InterpretArgs),
    /// Run the whole pipeline from a config.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub communities: Option<usize>,
    #[arg(long)]
    pub nodes_per_community: Option<usize>,
    #[arg(long)]
    pub groups: Option<usize>,
    #[arg(long)]
    pub intra_prob: Option<f64>,
    #[arg(long)]
    pub min_group_size: Option<usize>,
    #[arg(long)]
    pub max_group_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PpmiArgs {
    /// Count triplets (`i j weight`).
    #[arg(long)]
    pub counts: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub max_removal_fraction: f64,
    /// `item-id<TAB>label` file for modularity diagnostics.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProximityArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// Output directory for the stack files.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    #[arg(long, value_enum, default_value = "prose")]
    pub masking: Masking,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum Masking {
    Prose,
    Formula,
}

impl From<Masking> for MaskingRule {
    fn from(m: Masking) -> Self {
        match m {
            Masking::Prose => MaskingRule::Prose,
            Masking::Formula => MaskingRule::Formula,
        }
    }
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// Embedding file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// `svd`, `deepwalk`, `node2vec` or `gaussian`.
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub walks_per_node: Option<usize>,
    #[arg(long)]
    pub walk_length: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Asynchronous multi-threaded training (not reproducible).
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Args)]
pub struct AttractionArgs {
    /// Directory written by `proximity`.
    #[arg(long)]
    pub stack: PathBuf,
    #[arg(long)]
    pub embedding: PathBuf,
    /// Records CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5000)]
    pub control_cap: usize,
    /// Score every control node.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Args)]
pub struct InterpretArgs {
    #[arg(long)]
    pub vocab: PathBuf,
    /// `name=records.csv`, once per model.
    #[arg(long = "records", required = true)]
    pub records: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, value_enum)]
    pub masking: Option<Masking>,
    #[arg(long)]
    pub max_removal_fraction: Option<f64>,
    #[arg(long)]
    pub control_cap: Option<usize>,
    #[arg(long)]
    pub exact: bool,
    /// Recompute every stage without reading or writing the cache.
    #[arg(long)]
    pub no_cache: bool,
    /// Report files to write (default: all).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub format: Vec<ReportFormat>,
}

fn config_base(path: &Path) -> PathBuf {
    path.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    Ok(write_atomic(path, text.as_bytes())?)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    write_text(path, &s)
}

fn synth(a: &SynthArgs) -> Result<(), CliError> {
    let d = SynthSettings::default();
    let params = SynthParams {
        communities: a.communities.unwrap_or(d.communities),
        nodes_per_community: a.nodes_per_community.unwrap_or(d.nodes_per_community),
        groups: a.groups.unwrap_or(d.groups),
        intra_prob: a.intra_prob.unwrap_or(d.intra_prob),
        min_group_size: a.min_group_size.unwrap_or(d.min_group_size),
        max_group_size: a.max_group_size.unwrap_or(d.max_group_size),
        seed: a.seed,
    };
    let (corpus, labels) = pipeline::synth_files(&params)?;
    create_dir(&a.out)?;
    write_text(&a.out.join("corpus.txt"), &corpus)?;
    write_text(&a.out.join("labels.tsv"), &labels)
}

fn ingest(a: &IngestArgs) -> Result<(), CliError> {
    let mut cfg = load_config(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let valid = cfg.validate(&config_base(&a.config))?;
    let IngestArtifact {
        counts: CooccurrenceCounts { matrix, vocab },
        groups,
        labels,
    } = pipeline::ingest(&valid)?;
    create_dir(&a.out)?;
    textio::write_triplets(&a.out.join("counts.tsv"), &matrix)?;
    textio::write_vocab(&a.out.join("vocab.tsv"), &vocab)?;
    if !labels.is_empty() {
        let pairs: Vec<(String, String)> = labels.into_iter().collect();
        write_text(&a.out.join("labels.tsv"), &textio::format_labels(&pairs))?;
    }
    if let Some(g) = groups {
        log::info!("{g} groups, {} items, {} pairs", vocab.len(), matrix.edge_count());
    }
    Ok(())
}

fn ppmi(a: &PpmiArgs) -> Result<(), CliError> {
    if !(0.0..1.0).contains(&a.max_removal_fraction) {
        return Err(CliError::Validation(format!(
            "max_removal_fraction {} outside [0, 1)",
            a.max_removal_fraction
        )));
    }
    let vocab = textio::read_vocab(&a.vocab)?;
    let matrix = textio::read_triplets(&a.counts, vocab.len())?;
    let mut labels = std::collections::BTreeMap::new();
    if let Some(path) = &a.labels {
        for (i, l) in textio::read_labels(path, &vocab)? {
            labels.insert(vocab.id(i).to_string(), l);
        }
    }
    let ingested = IngestArtifact {
        counts: CooccurrenceCounts { matrix, vocab },
        groups: None,
        labels,
    };
    let s = ppmi_transform(&ingested.counts).map_err(CliError::stage("ppmi"))?;
    let g = pipeline::filter_graph(&s, &ingested, a.max_removal_fraction)?;
    create_dir(&a.out)?;
    textio::write_triplets(&a.out.join("ppmi.tsv"), &s)?;
    textio::write_triplets(&a.out.join("graph.tsv"), &g.graph)?;
    textio::write_vocab(&a.out.join("graph_vocab.tsv"), &g.vocab)?;
    write_json(&a.out.join("summary.json"), &g.summary)
}

fn proximity(a: &ProximityArgs) -> Result<(), CliError> {
    let vocab = textio::read_vocab(&a.vocab)?;
    let graph = textio::read_triplets(&a.graph, vocab.len())?;
    let cfg = ProximityConfig {
        threshold: a.threshold,
        masking: a.masking.into(),
    };
    let stack = ProximityStack::build(&graph, &cfg).map_err(CliError::stage("proximity"))?;
    write_stack(&a.out, &stack, &vocab)
}

fn embed(a: &EmbedArgs) -> Result<(), CliError> {
    let vocab = textio::read_vocab(&a.vocab)?;
    let graph = textio::read_triplets(&a.graph, vocab.len())?;
    let spec = ModelSpec {
        kind: a.model.clone(),
        dim: a.dim,
        p: a.p,
        q: a.q,
        preset: a.preset.clone(),
        walks_per_node: a.walks_per_node,
        walk_length: a.walk_length,
        window: a.window,
        negatives: a.negatives,
        epochs: a.epochs,
        learning_rate: a.learning_rate,
        parallel: Some(a.parallel),
        ..Default::default()
    };
    if spec.kind == "import" {
        return Err(CliError::Validation("import is only meaningful inside `run`".into()));
    }
    let model = RunConfig {
        seed: a.seed,
        dataset: crate::config::DatasetConfig::Synth(SynthSettings::default()),
        filters: Default::default(),
        proximity: Default::default(),
        models: vec![spec],
        evaluation: Default::default(),
    }
    .validate(Path::new("."))?
    .models
    .remove(0);
    let artifact = pipeline::GraphArtifact {
        summary: pipeline::GraphSummary {
            raw_nodes: graph.dim(),
            raw_edges: graph.edge_count(),
            gamma: 0,
            nodes: graph.dim(),
            edges: graph.edge_count(),
            components: 0,
            largest_component: 0,
            mean_shortest_path: None,
            modularity_before: None,
            modularity_after: None,
        },
        graph,
        vocab,
    };
    let emb = pipeline::embed_model(&model, &artifact, a.seed)?;
    if let Some(dir) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    Ok(store_embedding(&a.out, &emb)?)
}

fn attraction(a: &AttractionArgs) -> Result<(), CliError> {
    if a.control_cap == 0 {
        return Err(CliError::Validation("control_cap must be positive".into()));
    }
    let (stack, vocab) = read_stack(&a.stack)?;
    let emb = load_embedding(&a.embedding, Some(&vocab))?;
    let cfg = AttractionConfig {
        control_cap: (!a.exact).then_some(a.control_cap),
        seed: derive_seed(a.seed, "attraction"),
    };
    let run = compute_attraction(&stack, &emb, &cfg).map_err(CliError::stage("attraction"))?;
    log::info!(
        "null delta {:.4}; {} of {} records valid",
        run.null.delta,
        run.valid_records().count(),
        run.records.len()
    );
    write_text(&a.out, &format_records_csv(&run.records, &vocab))
}

#[derive(Serialize)]
struct InterpretOutput {
    models: Vec<ModelReport>,
    ranking: Option<nprox_core::interp::Ranking>,
}

fn interpret(a: &InterpretArgs) -> Result<(), CliError> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(CliError::Validation(format!("alpha {} outside (0, 1)", a.alpha)));
    }
    let vocab = textio::read_vocab(&a.vocab)?;
    let mut models = Vec::new();
    for spec in &a.records {
        let (name, path) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("expected name=path, got {spec:?}")))?;
        let path = Path::new(path);
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let records = parse_records_csv(&text, path, &vocab)?;
        models.push(evaluate_model(name, &records, None, a.alpha));
    }
    let ranking = if models.len() >= 2 {
        rank_models(&models).ok()
    } else {
        None
    };
    create_dir(&a.out)?;
    let refs: Vec<&ModelReport> = models.iter().collect();
    write_text(&a.out.join("table.csv"), &format_table_csv(&refs))?;
    write_json(&a.out.join("interpretability.json"), &InterpretOutput { models, ranking })
}

fn run(a: &RunArgs) -> Result<(), CliError> {
    let mut cfg = load_config(&a.config)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(x) = a.alpha {
        cfg.evaluation.alpha = x;
    }
    if let Some(x) = a.threshold {
        cfg.proximity.threshold = x;
    }
    if let Some(m) = a.masking {
        cfg.proximity.masking = m.into();
    }
    if let Some(x) = a.max_removal_fraction {
        cfg.filters.max_removal_fraction = x;
    }
    if let Some(x) = a.control_cap {
        cfg.evaluation.control_cap = x;
    }
    if a.exact {
        cfg.evaluation.exact = true;
    }
    let valid = cfg.validate(&config_base(&a.config))?;
    let cache = (!a.no_cache).then(|| a.out.join("cache"));
    let out = run_pipeline(&valid, cache.as_deref())?;
    for s in &out.stages {
        eprintln!("{:<24} {}", s.stage, if s.cached { "cached" } else { "computed" });
    }
    let formats = if a.format.is_empty() {
        ReportFormat::ALL.to_vec()
    } else {
        a.format.clone()
    };
    for f in formats {
        let path = emit_report(&out.report, f, &a.out)?;
        println!("{}", path.display());
    }
    for (name, csv) in &out.records {
        let path = a.out.join("records").join(format!("{name}.csv"));
        write_text(&path, csv)?;
        println!("{}", path.display());
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Ingest(a) => ingest(a),
        Command::Ppmi(a) => ppmi(a),
        Command::Proximity(a) => proximity(a),
        Command::Embed(a) => embed(a),
        Command::Attraction(a) => attraction(a),
        Command::Interpret(a) => interpret(a),
        Command::Run(a) => run(a),
    }
}
