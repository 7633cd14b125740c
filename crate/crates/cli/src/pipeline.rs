//! The staged pipeline: ingest, PPMI, degree filter, proximity stack, then
//! embedding, attraction and interpretability per model.

use std::collections::BTreeMap;
use std::path::Path;

use nprox_core::attraction::{
    abscissae, compute_attraction, fit_sigmoid, format_records_csv, AttractionConfig,
    AttractionRun, CellId, X_MAX, X_MIN,
};
use nprox_core::embed::{
    generate_walks, load_embedding, svd_embed, train_sgns, EmbeddingMatrix, SgnsConfig,
};
use nprox_core::graph::{component_report, low_degree_filter, modularity, ppmi_transform};
use nprox_core::ingest::{
    build_cooccurrence, clean_playlists, sessionize, synth_corpus, CooccurrenceCounts,
    GroupedCorpus, SynthTruth,
};
use nprox_core::interp::{evaluate_model, rank_models, ModelReport, Ranking};
use nprox_core::proximity::{Network, ProximityConfig, ProximityStack};
use nprox_core::rng::derive_seed;
use nprox_core::textio;
use nprox_core::{SparseSymmetricMatrix, Vocab};
use serde::{Deserialize, Serialize};

use crate::cache::{file_digest, stage_key, Cache, StageStatus};
use crate::config::{DatasetConfig, Model, NamedModel, ValidConfig};
use crate::error::CliError;

/// Number of x positions in exported curves.
pub const CURVE_POINTS: usize = 121;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestArtifact {
    pub counts: CooccurrenceCounts,
    /// Groups that survived cleaning; `None` for count-file inputs.
    pub groups: Option<usize>,
    /// Item id to category, used for modularity diagnostics.
    pub labels: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub raw_nodes: usize,
    pub raw_edges: usize,
    pub gamma: usize,
    pub nodes: usize,
    pub edges: usize,
    pub components: usize,
    pub largest_component: usize,
    pub mean_shortest_path: Option<f64>,
    pub modularity_before: Option<f64>,
    pub modularity_after: Option<f64>,
}

/// The filtered PPMI network `S` and its vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphArtifact {
    pub graph: SparseSymmetricMatrix,
    pub vocab: Vocab,
    pub summary: GraphSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSummary {
    pub network: Network,
    pub edges: usize,
    /// Ascending k-means centroids; absent when the network has too few
    /// distinct weights to segment.
    pub class_means: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub source: String,
    pub groups: Option<usize>,
    pub graph: GraphSummary,
    pub networks: Vec<NetworkSummary>,
}

/// Target-averaged hit curve of one class and the sigmoid fitted to it,
/// resampled on [`CURVE_POINTS`] evenly spaced x positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveData {
    pub network: Network,
    /// 0 is the control cell.
    pub class: usize,
    pub count: usize,
    pub g: f64,
    pub s: f64,
    pub hit: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub report: ModelReport,
    pub records: usize,
    pub valid_records: usize,
    pub curves: Vec<CurveData>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub dataset: DatasetSummary,
    pub models: Vec<ModelEntry>,
    pub ranking: Option<Ranking>,
    pub notes: Vec<String>,
}

pub struct PipelineOutput {
    pub report: RunReport,
    /// `(model name, attraction records CSV)`.
    pub records: Vec<(String, String)>,
    pub stages: Vec<StageStatus>,
}

fn source_name(d: &DatasetConfig) -> &'static str {
    match d {
        DatasetConfig::Logs { .. } => "logs",
        DatasetConfig::Playlists { .. } => "playlists",
        DatasetConfig::Triplets { .. } => "triplets",
        DatasetConfig::Synth(_) => "synth",
    }
}

fn counts_from(corpus: &GroupedCorpus, cfg: &ValidConfig) -> Result<CooccurrenceCounts, CliError> {
    build_cooccurrence(
        corpus,
        cfg.filters.normalize_for(&cfg.dataset),
        cfg.filters.min_count_for(&cfg.dataset),
    )
    .map_err(CliError::stage("ingest"))
}

pub fn ingest(cfg: &ValidConfig) -> Result<IngestArtifact, CliError> {
    let stage = CliError::stage;
    let f = &cfg.filters;
    let (counts, groups, mut labels) = match &cfg.dataset {
        DatasetConfig::Logs { path, .. } => {
            let log = textio::read_event_log(path).map_err(stage("ingest"))?;
            let corpus = sessionize(&log, f.gap, f.skip).map_err(stage("ingest"))?;
            (counts_from(&corpus, cfg)?, Some(corpus.len()), BTreeMap::new())
        }
        DatasetConfig::Playlists { path, .. } => {
            let raw = textio::read_playlists(path).map_err(stage("ingest"))?;
            let corpus =
                clean_playlists(&raw, f.min_unique, f.sigma_mult).map_err(stage("ingest"))?;
            (counts_from(&corpus, cfg)?, Some(corpus.len()), BTreeMap::new())
        }
        DatasetConfig::Triplets { path, vocab, .. } => {
            let vocab = textio::read_vocab(vocab).map_err(stage("ingest"))?;
            let matrix = textio::read_triplets(path, vocab.len()).map_err(stage("ingest"))?;
            (CooccurrenceCounts { matrix, vocab }, None, BTreeMap::new())
        }
        DatasetConfig::Synth(s) => {
            let params = s.params(derive_seed(cfg.seed, "synth"));
            let (corpus, truth) = synth_corpus(&params).map_err(stage("ingest"))?;
            let labels = truth.labels().into_iter().collect();
            (counts_from(&corpus, cfg)?, Some(corpus.len()), labels)
        }
    };
    if let Some(path) = cfg.dataset.labels() {
        let by_index = textio::read_labels(path, &counts.vocab).map_err(stage("ingest"))?;
        labels = by_index
            .into_iter()
            .map(|(i, l)| (counts.vocab.id(i).to_string(), l))
            .collect();
    }
    Ok(IngestArtifact {
        counts,
        groups,
        labels,
    })
}

fn labels_by_index(labels: &BTreeMap<String, String>, vocab: &Vocab) -> BTreeMap<usize, String> {
    labels
        .iter()
        .filter_map(|(id, l)| vocab.index_of(id).map(|i| (i, l.clone())))
        .collect()
}

pub fn filter_graph(
    ppmi: &SparseSymmetricMatrix,
    ingest: &IngestArtifact,
    max_removal_fraction: f64,
) -> Result<GraphArtifact, CliError> {
    let f = low_degree_filter(ppmi, max_removal_fraction).map_err(CliError::stage("filter"))?;
    let vocab = ingest.counts.vocab.subset(&f.kept);
    let comps = component_report(&f.graph);
    let q = |g: &SparseSymmetricMatrix, v: &Vocab| {
        let labels = labels_by_index(&ingest.labels, v);
        (!labels.is_empty())
            .then(|| modularity(g, &labels, true).ok())
            .flatten()
    };
    let summary = GraphSummary {
        raw_nodes: ppmi.dim(),
        raw_edges: ppmi.edge_count(),
        gamma: f.gamma,
        nodes: f.graph.dim(),
        edges: f.graph.edge_count(),
        components: comps.components.len(),
        largest_component: comps.components.first().map_or(0, Vec::len),
        mean_shortest_path: comps.largest_mean_shortest_path,
        modularity_before: q(ppmi, &ingest.counts.vocab),
        modularity_after: q(&f.graph, &vocab),
    };
    Ok(GraphArtifact {
        graph: f.graph,
        vocab,
        summary,
    })
}

pub fn embed_model(
    m: &NamedModel,
    graph: &GraphArtifact,
    root_seed: u64,
) -> Result<EmbeddingMatrix, CliError> {
    let stage_name = format!("embed/{}", m.name);
    let seed = derive_seed(root_seed, &stage_name);
    let stage = || CliError::stage(stage_name.clone());
    match &m.model {
        Model::Svd { dim, svd } => {
            svd_embed(&graph.graph, &graph.vocab, *dim, seed, svd).map_err(stage())
        }
        Model::Walk(w) => {
            let corpus = generate_walks(
                &graph.graph,
                w.strategy,
                w.walks_per_node,
                w.walk_length,
                derive_seed(seed, "walks"),
            )
            .map_err(stage())?;
            let cfg = SgnsConfig {
                dim: w.dim,
                window: w.window,
                negatives: w.negatives,
                epochs: w.epochs,
                learning_rate: w.learning_rate,
                seed: derive_seed(seed, "sgns"),
                mode: w.mode,
                ..SgnsConfig::default()
            };
            let (emb, trace) = train_sgns(&corpus, &graph.vocab, &cfg).map_err(stage())?;
            if let (Some(first), Some(last)) = (trace.monitor_loss.first(), trace.monitor_loss.last()) {
                log::info!("{stage_name}: monitor loss {first:.4} -> {last:.4}");
            }
            Ok(emb)
        }
        Model::Import { path } => load_embedding(path, Some(&graph.vocab)).map_err(stage()),
        Model::Gaussian { dim } => Ok(EmbeddingMatrix::gaussian(graph.vocab.clone(), *dim, seed)),
    }
}

fn interpolate(curve: &[f64], x: f64) -> f64 {
    let last = curve.len() - 1;
    let pos = (x - X_MIN) / (X_MAX - X_MIN) * last as f64;
    let i = (pos.floor() as usize).min(last - 1);
    let frac = (pos - i as f64).clamp(0.0, 1.0);
    curve[i] + frac * (curve[i + 1] - curve[i])
}

/// Mean hit curve and its sigmoid fit for every populated cell, control
/// repeated under each network so a plot per network is self-contained.
fn class_curves(run: &AttractionRun) -> Vec<CurveData> {
    let xs = abscissae(CURVE_POINTS);
    let mut out = Vec::new();
    for network in Network::ALL {
        for class in 0..=4usize {
            let cell = if class == 0 {
                CellId::Control
            } else {
                CellId::Class {
                    network,
                    class: class as u8,
                }
            };
            let Some(mean) = run.mean_curves.iter().find(|m| m.cell == cell) else {
                continue;
            };
            let Ok(fit) = fit_sigmoid(&mean.curve) else {
                continue;
            };
            out.push(CurveData {
                network,
                class,
                count: mean.count,
                g: fit.g,
                s: fit.s,
                hit: xs.iter().map(|&x| interpolate(&mean.curve, x)).collect(),
            });
        }
    }
    out
}

fn dataset_inputs(cfg: &ValidConfig) -> Result<serde_json::Value, CliError> {
    let mut digests = Vec::new();
    match &cfg.dataset {
        DatasetConfig::Logs { path, labels } | DatasetConfig::Playlists { path, labels } => {
            digests.push(file_digest(path)?);
            if let Some(l) = labels {
                digests.push(file_digest(l)?);
            }
        }
        DatasetConfig::Triplets { path, vocab, labels } => {
            digests.push(file_digest(path)?);
            digests.push(file_digest(vocab)?);
            if let Some(l) = labels {
                digests.push(file_digest(l)?);
            }
        }
        DatasetConfig::Synth(_) => {}
    }
    let mut dataset = serde_json::to_value(&cfg.dataset).expect("dataset serializes");
    // Paths do not matter, contents do.
    if let Some(obj) = dataset.as_object_mut() {
        obj.retain(|k, _| !matches!(k.as_str(), "path" | "vocab" | "labels"));
    }
    Ok(serde_json::json!({
        "seed": cfg.seed,
        "dataset": dataset,
        "digests": digests,
        "gap": cfg.filters.gap,
        "skip": cfg.filters.skip,
        "min_unique": cfg.filters.min_unique,
        "sigma_mult": cfg.filters.sigma_mult,
        "min_count": cfg.filters.min_count_for(&cfg.dataset),
        "normalize": cfg.filters.normalize_for(&cfg.dataset),
    }))
}

/// Runs every stage, reusing cached artifacts whose inputs are unchanged.
pub fn run_pipeline(cfg: &ValidConfig, cache_dir: Option<&Path>) -> Result<PipelineOutput, CliError> {
    let mut cache = Cache::new(cache_dir.map(Path::to_path_buf));

    let ingest_key = stage_key("ingest", &dataset_inputs(cfg)?);
    let ingested: IngestArtifact = cache.get_or_compute("ingest", &ingest_key, || ingest(cfg))?;

    let ppmi_key = stage_key("ppmi", &ingest_key);
    let ppmi: SparseSymmetricMatrix = cache.get_or_compute("ppmi", &ppmi_key, || {
        ppmi_transform(&ingested.counts).map_err(CliError::stage("ppmi"))
    })?;

    let fraction = cfg.filters.max_removal_fraction;
    let filter_key = stage_key("filter", &(&ppmi_key, fraction));
    let graph: GraphArtifact = cache.get_or_compute("filter", &filter_key, || {
        filter_graph(&ppmi, &ingested, fraction)
    })?;
    log::info!(
        "network: {} nodes, {} edges (gamma = {})",
        graph.summary.nodes,
        graph.summary.edges,
        graph.summary.gamma
    );

    let prox = ProximityConfig {
        threshold: cfg.proximity.threshold,
        masking: cfg.proximity.masking,
    };
    let stack_key = stage_key("proximity", &(&filter_key, &prox));
    let stack: ProximityStack = cache.get_or_compute("proximity", &stack_key, || {
        ProximityStack::build(&graph.graph, &prox).map_err(CliError::stage("proximity"))
    })?;
    let networks = Network::ALL
        .into_iter()
        .map(|n| {
            let net = stack.network(n);
            if !net.is_segmented() {
                log::warn!("network {n} has too few distinct weights for four classes; skipped");
            }
            NetworkSummary {
                network: n,
                edges: net.matrix.edge_count(),
                class_means: net.class_means(),
            }
        })
        .collect();

    let control_cap = cfg.control_cap();
    let mut models = Vec::with_capacity(cfg.models.len());
    let mut records = Vec::with_capacity(cfg.models.len());
    for m in &cfg.models {
        let import_digest = match &m.model {
            Model::Import { path } => Some(file_digest(path)?),
            _ => None,
        };
        let mut spec = serde_json::to_value(&m.model).expect("model serializes");
        if let Some(obj) = spec.as_object_mut() {
            obj.remove("path");
        }
        let embed_stage = format!("embed/{}", m.name);
        let embed_key = stage_key(&embed_stage, &(&filter_key, cfg.seed, &m.name, &spec, &import_digest));
        let emb: EmbeddingMatrix =
            cache.get_or_compute(&embed_stage, &embed_key, || embed_model(m, &graph, cfg.seed))?;

        let att_stage = format!("attraction/{}", m.name);
        let att_cfg = AttractionConfig {
            control_cap,
            seed: derive_seed(cfg.seed, &att_stage),
        };
        let att_key = stage_key(&att_stage, &(&stack_key, &embed_key, &att_cfg));
        let run: AttractionRun = cache.get_or_compute(&att_stage, &att_key, || {
            compute_attraction(&stack, &emb, &att_cfg).map_err(CliError::stage(att_stage.clone()))
        })?;

        let interp_stage = format!("interp/{}", m.name);
        let alpha = cfg.evaluation.alpha;
        let interp_key = stage_key(&interp_stage, &(&att_key, alpha));
        let report: ModelReport = cache.get_or_compute(&interp_stage, &interp_key, || {
            Ok(evaluate_model(&m.name, &run.records, Some(run.null.delta), alpha))
        })?;
        for s in &report.skipped {
            log::warn!("{}: network {} not scored: {}", m.name, s.network, s.reason);
        }

        records.push((m.name.clone(), format_records_csv(&run.records, &graph.vocab)));
        models.push(ModelEntry {
            curves: class_curves(&run),
            records: run.records.len(),
            valid_records: run.valid_records().count(),
            report,
        });
    }

    let mut notes = vec![
        "table values in parentheses are the population standard deviation of the ten pairwise Jensen-Shannon distances".to_string(),
        "a leading * marks a network where all ten class pairs differ under a Bonferroni-corrected two-sample KS test".to_string(),
    ];
    let reports: Vec<ModelReport> = models.iter().map(|m| m.report.clone()).collect();
    let ranking = if reports.len() >= 2 {
        match rank_models(&reports) {
            Ok(r) => Some(r),
            Err(e) => {
                notes.push(format!("no ranking: {e}"));
                None
            }
        }
    } else {
        None
    };

    let report = RunReport {
        seed: cfg.seed,
        dataset: DatasetSummary {
            source: source_name(&cfg.dataset).into(),
            groups: ingested.groups,
            graph: graph.summary.clone(),
            networks,
        },
        models,
        ranking,
        notes,
    };
    Ok(PipelineOutput {
        report,
        records,
        stages: cache.statuses().to_vec(),
    })
}

/// Synthetic corpus in playlist format plus community labels.
pub fn synth_files(params: &nprox_core::ingest::SynthParams) -> Result<(String, String), CliError> {
    let (corpus, truth): (GroupedCorpus, SynthTruth) =
        synth_corpus(params).map_err(CliError::stage("synth"))?;
    Ok((
        textio::format_groups(&corpus),
        textio::format_labels(&truth.labels()),
    ))
}
