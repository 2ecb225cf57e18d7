//! Declarative experiment configuration (JSON, versioned).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::covdim::ProfileConfig;
use crate::dataset::PointSet;
use crate::error::{Error, Result};
use crate::synth;
use crate::trees::{BuildConfig, SplitRule, DEFAULT_BAG_SIZE, DEFAULT_MAX_DEPTH, DEFAULT_MAX_ITERS, DEFAULT_OUTLIER_RATIO, DEFAULT_RESTARTS};

pub const CONFIG_VERSION: u32 = 1;
pub const DEFAULT_FOLDS: usize = 10;
pub const PRESET_NAMES: [&str; 3] = ["fig4_dimest", "fig5_slopes", "swissroll_dimest"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "lowercase")]
pub enum DatasetSpec {
    Sinusoid(SinusoidSpec),
    Swissroll(SwissrollSpec),
    Affine(AffineSpec),
    Csv(CsvSpec),
}

/// One data set per entry of `dims`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinusoidSpec {
    pub n: usize,
    pub dims: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwissrollSpec {
    pub n: usize,
    #[serde(default = "default_noise")]
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineSpec {
    pub n: usize,
    pub dim: usize,
    pub d: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSpec {
    pub path: PathBuf,
}

fn default_noise() -> f64 {
    synth::SWISSROLL_DEFAULT_NOISE
}

impl DatasetSpec {
    /// Materializes every data set this spec describes, in a fixed order.
    pub fn load(&self, seed: u64) -> Result<Vec<PointSet>> {
        match self {
            DatasetSpec::Sinusoid(s) => s.dims.iter().map(|&d| synth::sinusoid_manifold(s.n, d, seed)).collect(),
            DatasetSpec::Swissroll(s) => Ok(vec![synth::noisy_swissroll(s.n, s.noise_sigma, seed)?]),
            DatasetSpec::Affine(s) => Ok(vec![synth::affine_cloud(s.n, s.dim, s.d, seed)?]),
            DatasetSpec::Csv(s) => Ok(vec![PointSet::load(&s.path)?]),
        }
    }

    pub fn count(&self) -> usize {
        match self {
            DatasetSpec::Sinusoid(s) => s.dims.len(),
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeSpec {
    pub rule: String,
    #[serde(default = "default_min_size")]
    pub min_size: usize,
    #[serde(default = "default_max_depth")]
    pub max_depth: usize,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_true")]
    pub enable_distance_split: bool,
    #[serde(default = "default_bag_size")]
    pub bag_size: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

fn default_min_size() -> usize {
    1
}
fn default_max_depth() -> usize {
    DEFAULT_MAX_DEPTH
}
fn default_c() -> f64 {
    DEFAULT_OUTLIER_RATIO
}
fn default_true() -> bool {
    true
}
fn default_bag_size() -> usize {
    DEFAULT_BAG_SIZE
}
fn default_restarts() -> usize {
    DEFAULT_RESTARTS
}
fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}

impl TreeSpec {
    pub fn new(rule: &str) -> Self {
        TreeSpec {
            rule: rule.to_string(),
            min_size: 1,
            max_depth: DEFAULT_MAX_DEPTH,
            c: DEFAULT_OUTLIER_RATIO,
            enable_distance_split: true,
            bag_size: DEFAULT_BAG_SIZE,
            restarts: DEFAULT_RESTARTS,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }

    pub fn split_rule(&self) -> Result<SplitRule> {
        Ok(match self.rule.parse::<SplitRule>()? {
            SplitRule::Rp { .. } => SplitRule::Rp { bag_size: self.bag_size },
            SplitRule::TwoMeans { .. } => SplitRule::TwoMeans {
                restarts: self.restarts,
                max_iters: self.max_iters,
            },
            other => other,
        })
    }

    pub fn build_config(&self, seed: u64) -> Result<BuildConfig> {
        let cfg = BuildConfig::new(self.split_rule()?)
            .with_min_size(self.min_size)
            .with_max_depth(self.max_depth)
            .with_outlier_ratio(self.c)
            .with_distance_split(self.enable_distance_split)
            .with_seed(seed);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Profile,
    Quantize,
    Nn,
    Regress,
    Dimest,
}

impl Task {
    pub fn uses_folds(self) -> bool {
        matches!(self, Task::Quantize | Task::Nn | Task::Regress)
    }

    pub fn uses_trees(self) -> bool {
        self != Task::Dimest
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub trees: Vec<TreeSpec>,
    #[serde(default)]
    pub covdim: ProfileConfig,
    pub tasks: Vec<Task>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    /// Deepest level evaluated by the fold tasks; defaults to the deepest
    /// tree built.
    #[serde(default)]
    pub max_level: Option<usize>,
    /// Level window `[l0, l1]` for slope fits of the profile task.
    #[serde(default)]
    pub slope_window: Option<[usize; 2]>,
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_folds() -> usize {
    DEFAULT_FOLDS
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn config_error(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

fn probe<T: serde::de::DeserializeOwned>(body: serde_json::Value) -> Option<Error> {
    serde_path_to_error::deserialize::<_, T>(body)
        .err()
        .map(|e| config_error(format!("dataset.{}", e.path()), e.into_inner().to_string()))
}

/// The tagged dataset enum hides which field failed; redo the parse on the
/// selected variant alone to recover the path.
fn dataset_error(text: &str) -> Option<Error> {
    let value: serde_json::Value = serde_json::from_str(text).ok()?;
    let mut body = value.get("dataset")?.as_object()?.clone();
    let generator = body.remove("generator")?;
    let body = serde_json::Value::Object(body);
    match generator.as_str()? {
        "sinusoid" => probe::<SinusoidSpec>(body),
        "swissroll" => probe::<SwissrollSpec>(body),
        "affine" => probe::<AffineSpec>(body),
        "csv" => probe::<CsvSpec>(body),
        _ => None,
    }
}

impl RunConfig {
    /// Parses and validates a config. Errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            if path == "dataset" {
                if let Some(err) = dataset_error(text) {
                    return err;
                }
            }
            config_error(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let text = match name {
            "fig4_dimest" => include_str!("../presets/fig4_dimest.json"),
            "fig5_slopes" => include_str!("../presets/fig5_slopes.json"),
            "swissroll_dimest" => include_str!("../presets/swissroll_dimest.json"),
            other => {
                return Err(Error::param(format!(
                    "unknown preset `{other}` (available: {})",
                    PRESET_NAMES.join(", ")
                )))
            }
        };
        Self::from_json(text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn has_task(&self, task: Task) -> bool {
        self.tasks.contains(&task)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(config_error(
                "version",
                format!("unsupported version {}, expected {CONFIG_VERSION}", self.version),
            ));
        }
        if self.tasks.is_empty() {
            return Err(config_error("tasks", "at least one task is required"));
        }
        match &self.dataset {
            DatasetSpec::Sinusoid(SinusoidSpec { n, dims }) => {
                if *n == 0 {
                    return Err(config_error("dataset.n", "must be at least 1"));
                }
                if dims.is_empty() {
                    return Err(config_error("dataset.dims", "at least one dimension is required"));
                }
                if let Some(d) = dims.iter().find(|&&d| d == 0 || d % 2 != 0) {
                    return Err(config_error("dataset.dims", format!("dimensions must be even and positive, got {d}")));
                }
            }
            DatasetSpec::Swissroll(SwissrollSpec { n, noise_sigma }) => {
                if *n == 0 {
                    return Err(config_error("dataset.n", "must be at least 1"));
                }
                if !(*noise_sigma >= 0.0) || !noise_sigma.is_finite() {
                    return Err(config_error("dataset.noise_sigma", "must be a finite value >= 0"));
                }
            }
            DatasetSpec::Affine(AffineSpec { n, dim, d }) => {
                if *n == 0 {
                    return Err(config_error("dataset.n", "must be at least 1"));
                }
                if *d == 0 || d > dim {
                    return Err(config_error("dataset.d", format!("need 1 <= d <= dim, got d={d}, dim={dim}")));
                }
            }
            DatasetSpec::Csv(_) => {}
        }
        let needs_trees = self.tasks.iter().any(|t| t.uses_trees());
        if needs_trees && self.trees.is_empty() {
            return Err(config_error("trees", "tree tasks need at least one tree"));
        }
        let mut names = Vec::new();
        for (i, t) in self.trees.iter().enumerate() {
            t.build_config(self.seed)
                .map_err(|e| config_error(format!("trees[{i}]"), e.to_string()))?;
            if names.contains(&t.rule) {
                return Err(config_error(format!("trees[{i}].rule"), format!("rule `{}` listed twice", t.rule)));
            }
            names.push(t.rule.clone());
        }
        if self.tasks.iter().any(|t| t.uses_folds()) {
            if self.folds < 2 {
                return Err(config_error("folds", "must be at least 2"));
            }
            if self.dataset.count() > 1 {
                return Err(config_error(
                    "dataset.dims",
                    "quantize, nn and regress take a single data set",
                ));
            }
        }
        if let Some([l0, l1]) = self.slope_window {
            if l1 <= l0 {
                return Err(config_error("slope_window", format!("need l0 < l1, got [{l0}, {l1}]")));
            }
        }
        if self.has_task(Task::Dimest) {
            let c = &self.covdim;
            if c.num_radii == 0 || c.center_cap == 0 || c.epsilons.is_empty() {
                return Err(config_error("covdim", "num_radii, center_cap and epsilons must be nonempty"));
            }
            if let Some(e) = c.epsilons.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
                return Err(config_error("covdim.epsilons", format!("epsilon must lie in (0, 1), got {e}")));
            }
        }
        Ok(())
    }
}
