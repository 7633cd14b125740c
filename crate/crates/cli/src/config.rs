//! Run configuration (TOML) and its validation.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use nprox_core::embed::{SgnsMode, SvdConfig, WalkStrategy};
use nprox_core::ingest::SynthParams;
use nprox_core::proximity::MaskingRule;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed; every stage derives its own generator from it.
    pub seed: u64,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub filters: FilterConfig,
    #[serde(default)]
    pub proximity: ProximitySettings,
    #[serde(default = "default_models")]
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetConfig {
    /// Tab-separated `owner, timestamp, item[, duration]` records.
    Logs {
        path: PathBuf,
        labels: Option<PathBuf>,
    },
    /// One playlist per line, item ids separated by spaces.
    Playlists {
        path: PathBuf,
        labels: Option<PathBuf>,
    },
    /// Co-occurrence counts as `i j weight` triplets plus a vocabulary file.
    Triplets {
        path: PathBuf,
        vocab: PathBuf,
        labels: Option<PathBuf>,
    },
    Synth(SynthSettings),
}

impl DatasetConfig {
    pub fn labels(&self) -> Option<&Path> {
        match self {
            DatasetConfig::Logs { labels, .. }
            | DatasetConfig::Playlists { labels, .. }
            | DatasetConfig::Triplets { labels, .. } => labels.as_deref(),
            DatasetConfig::Synth(_) => None,
        }
    }

    fn paths_mut(&mut self) -> Vec<&mut PathBuf> {
        match self {
            DatasetConfig::Logs { path, labels } | DatasetConfig::Playlists { path, labels } => {
                std::iter::once(path).chain(labels.as_mut()).collect()
            }
            DatasetConfig::Triplets { path, vocab, labels } => {
                [path, vocab].into_iter().chain(labels.as_mut()).collect()
            }
            DatasetConfig::Synth(_) => Vec::new(),
        }
    }
}

/// Generator parameters; the seed comes from the run's root seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSettings {
    pub communities: usize,
    pub nodes_per_community: usize,
    pub groups: usize,
    pub intra_prob: f64,
    pub min_group_size: usize,
    pub max_group_size: usize,
}

impl Default for SynthSettings {
    fn default() -> Self {
        let p = SynthParams::default();
        SynthSettings {
            communities: p.communities,
            nodes_per_community: p.nodes_per_community,
            groups: p.groups,
            intra_prob: p.intra_prob,
            min_group_size: p.min_group_size,
            max_group_size: p.max_group_size,
        }
    }
}

impl SynthSettings {
    pub fn params(&self, seed: u64) -> SynthParams {
        SynthParams {
            communities: self.communities,
            nodes_per_community: self.nodes_per_community,
            groups: self.groups,
            intra_prob: self.intra_prob,
            min_group_size: self.min_group_size,
            max_group_size: self.max_group_size,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    /// Session split gap in seconds.
    pub gap: f64,
    /// Streams shorter than this many seconds are skips.
    pub skip: f64,
    pub min_unique: usize,
    pub sigma_mult: f64,
    pub max_removal_fraction: f64,
    /// Hapax threshold on raw pair counts. Defaults to 2 for playlists and
    /// synthetic corpora and to 0 (off) for sessions.
    pub min_count: Option<u64>,
    /// Divide each owner's counts by their group count. Defaults to on for
    /// sessions only.
    pub per_owner_normalize: Option<bool>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            gap: 1200.0,
            skip: 30.0,
            min_unique: 10,
            sigma_mult: 2.0,
            max_removal_fraction: 0.5,
            min_count: None,
            per_owner_normalize: None,
        }
    }
}

impl FilterConfig {
    pub fn min_count_for(&self, d: &DatasetConfig) -> u64 {
        self.min_count.unwrap_or(match d {
            DatasetConfig::Logs { .. } => 0,
            _ => 2,
        })
    }

    pub fn normalize_for(&self, d: &DatasetConfig) -> bool {
        self.per_owner_normalize
            .unwrap_or(matches!(d, DatasetConfig::Logs { .. }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProximitySettings {
    pub threshold: f64,
    pub masking: MaskingRule,
}

impl Default for ProximitySettings {
    fn default() -> Self {
        ProximitySettings {
            threshold: 0.0,
            masking: MaskingRule::Prose,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub control_cap: usize,
    /// Score every control node instead of a capped sample.
    pub exact: bool,
    pub alpha: f64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            control_cap: 5000,
            exact: false,
            alpha: 0.05,
        }
    }
}

/// One roster entry as written in the config file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// `svd`, `deepwalk`, `node2vec`, `import` or `gaussian`.
    pub kind: String,
    pub name: Option<String>,
    pub dim: Option<usize>,
    /// Embedding file for `import`.
    pub path: Option<PathBuf>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    /// `session` or `playlist` node2vec preset.
    pub preset: Option<String>,
    pub walks_per_node: Option<usize>,
    pub walk_length: Option<usize>,
    pub window: Option<usize>,
    pub negatives: Option<usize>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub parallel: Option<bool>,
}

fn default_models() -> Vec<ModelSpec> {
    ["svd", "deepwalk", "node2vec"]
        .into_iter()
        .map(|k| ModelSpec {
            kind: k.into(),
            ..Default::default()
        })
        .collect()
}

pub const DEFAULT_DIM: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkModel {
    pub dim: usize,
    pub strategy: WalkStrategy,
    pub walks_per_node: usize,
    pub walk_length: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub mode: SgnsMode,
}

/// A validated roster entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Svd { dim: usize, svd: SvdConfig },
    Walk(WalkModel),
    Import { path: PathBuf },
    Gaussian { dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedModel {
    pub name: String,
    pub model: Model,
}

impl ModelSpec {
    fn resolve(&self) -> Result<NamedModel, String> {
        let dim = self.dim.unwrap_or(DEFAULT_DIM);
        if dim == 0 {
            return Err("dim must be at least 1".into());
        }
        let walk = |strategy| -> Result<Model, String> {
            let m = WalkModel {
                dim,
                strategy,
                walks_per_node: self.walks_per_node.unwrap_or(10),
                walk_length: self.walk_length.unwrap_or(20),
                window: self.window.unwrap_or(10),
                negatives: self.negatives.unwrap_or(5),
                epochs: self.epochs.unwrap_or(100),
                learning_rate: self.learning_rate.unwrap_or(0.025),
                mode: if self.parallel.unwrap_or(false) {
                    SgnsMode::Parallel
                } else {
                    SgnsMode::Deterministic
                },
            };
            if m.walk_length < 2 {
                return Err("walk_length must be at least 2".into());
            }
            if m.walks_per_node == 0 || m.window == 0 || m.epochs == 0 {
                return Err("walks_per_node, window and epochs must be at least 1".into());
            }
            if !(m.learning_rate > 0.0) {
                return Err("learning_rate must be positive".into());
            }
            Ok(Model::Walk(m))
        };
        let model = match self.kind.as_str() {
            "svd" => Model::Svd {
                dim,
                svd: SvdConfig::default(),
            },
            "deepwalk" => walk(WalkStrategy::Uniform)?,
            "node2vec" => {
                let base = match &self.preset {
                    Some(name) => WalkStrategy::preset(name)
                        .ok_or_else(|| format!("unknown node2vec preset {name:?}"))?,
                    None => WalkStrategy::Node2vec { p: 1.0, q: 1.0 },
                };
                let WalkStrategy::Node2vec { p, q } = base else {
                    unreachable!("presets are node2vec strategies")
                };
                let (p, q) = (self.p.unwrap_or(p), self.q.unwrap_or(q));
                if !(p > 0.0 && q > 0.0 && p.is_finite() && q.is_finite()) {
                    return Err(format!("p and q must be positive and finite (p = {p}, q = {q})"));
                }
                walk(WalkStrategy::Node2vec { p, q })?
            }
            "import" => Model::Import {
                path: self.path.clone().ok_or("import needs a path")?,
            },
            "gaussian" => Model::Gaussian { dim },
            other => return Err(format!("unknown model kind {other:?}")),
        };
        let name = match (&self.name, &model) {
            (Some(n), _) => n.clone(),
            (None, Model::Import { path }) => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "import".into()),
            (None, _) => self.kind.clone(),
        };
        if name.is_empty() || name.contains(['/', '\\', ',']) {
            return Err(format!("model name {name:?} must be non-empty without '/', '\\' or ','"));
        }
        Ok(NamedModel { name, model })
    }
}

/// A configuration that passed validation, with paths made absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidConfig {
    pub seed: u64,
    pub dataset: DatasetConfig,
    pub filters: FilterConfig,
    pub proximity: ProximitySettings,
    pub models: Vec<NamedModel>,
    pub evaluation: EvaluationConfig,
}

impl ValidConfig {
    pub fn control_cap(&self) -> Option<usize> {
        (!self.evaluation.exact).then_some(self.evaluation.control_cap)
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Validation(msg()))
    }
}

impl RunConfig {
    /// Checks every setting and input path. Relative paths are taken relative
    /// to `base`.
    pub fn validate(&self, base: &Path) -> Result<ValidConfig, CliError> {
        let mut dataset = self.dataset.clone();
        for p in dataset.paths_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
            check(p.is_file(), || format!("input file {} does not exist", p.display()))?;
        }
        if let DatasetConfig::Synth(s) = &dataset {
            check(s.communities > 0 && s.nodes_per_community > 0, || {
                "synth needs at least one community and one node per community".into()
            })?;
            check((0.0..=1.0).contains(&s.intra_prob), || {
                format!("intra_prob {} outside [0, 1]", s.intra_prob)
            })?;
            check(s.min_group_size >= 2 && s.min_group_size <= s.max_group_size, || {
                format!(
                    "group sizes need 2 <= min ({}) <= max ({})",
                    s.min_group_size, s.max_group_size
                )
            })?;
        }

        let f = &self.filters;
        check(f.gap > 0.0, || format!("gap {} must be positive", f.gap))?;
        check(f.skip >= 0.0, || format!("skip {} must be non-negative", f.skip))?;
        check(f.sigma_mult > 0.0, || format!("sigma_mult {} must be positive", f.sigma_mult))?;
        check((0.0..1.0).contains(&f.max_removal_fraction), || {
            format!("max_removal_fraction {} outside [0, 1)", f.max_removal_fraction)
        })?;
        check(self.proximity.threshold >= 0.0, || {
            format!("proximity threshold {} must be non-negative", self.proximity.threshold)
        })?;
        let e = &self.evaluation;
        check(e.alpha > 0.0 && e.alpha < 1.0, || format!("alpha {} outside (0, 1)", e.alpha))?;
        check(e.control_cap > 0, || "control_cap must be positive".into())?;

        check(!self.models.is_empty(), || "the model roster is empty".into())?;
        let mut models = Vec::with_capacity(self.models.len());
        let mut names = BTreeSet::new();
        for (k, spec) in self.models.iter().enumerate() {
            let mut m = spec
                .resolve()
                .map_err(|msg| CliError::Validation(format!("models[{k}] ({}): {msg}", spec.kind)))?;
            if let Model::Import { path } = &mut m.model {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
                check(path.is_file(), || {
                    format!("models[{k}]: embedding file {} does not exist", path.display())
                })?;
            }
            check(names.insert(m.name.clone()), || format!("duplicate model name {:?}", m.name))?;
            models.push(m);
        }

        Ok(ValidConfig {
            seed: self.seed,
            dataset,
            filters: self.filters.clone(),
            proximity: self.proximity,
            models,
            evaluation: self.evaluation.clone(),
        })
    }
}
