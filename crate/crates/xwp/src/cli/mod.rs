//! Config-driven orchestration behind the `xwp` binary.
//!
//! A run is described by one JSON [`RunConfig`] document. Every subcommand
//! starts from the same loading pipeline: read the config file (or the
//! built-in defaults), apply `--set key.path=value` overrides onto the raw
//! JSON, then deserialize strictly so typos fail loudly. All entropy comes
//! from seeds recorded in the config; reruns with the same config and input
//! files produce byte-identical outputs.

pub mod commands;

use std::env;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attribution::{Method, MethodConfigs, TargetMode};
use crate::data::{split, synthetic, ImageDataset, Subset};
use crate::error::{Error, Result};
use crate::evaluation::{AverageDropConfig, BenchmarkConfig, DeletionConfig};
use crate::nn::TrainConfig;
use crate::viz::RenderStyle;

/// Environment variable that overrides the dataset cache directory.
pub const DATA_DIR_ENV: &str = "XWP_DATA_DIR";

/// Which dataset a run loads.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    #[default]
    FashionMnist,
    Tmnist,
    /// Seeded in-memory bar images; needs no files on disk.
    Synthetic,
}

impl DatasetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::FashionMnist => "fashion_mnist",
            DatasetKind::Tmnist => "tmnist",
            DatasetKind::Synthetic => "synthetic",
        }
    }
}

impl std::str::FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fashion_mnist" => Ok(DatasetKind::FashionMnist),
            "tmnist" => Ok(DatasetKind::Tmnist),
            "synthetic" => Ok(DatasetKind::Synthetic),
            other => Err(Error::Config(format!(
                "unknown dataset {other:?} (expected fashion_mnist, tmnist, or synthetic)"
            ))),
        }
    }
}

/// Shape of the generated synthetic dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub samples: usize,
    pub side: usize,
    pub classes: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            samples: 600,
            side: 12,
            classes: 10,
        }
    }
}

/// Dataset selection and file locations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub dataset: DatasetKind,
    /// Dataset cache directory; `XWP_DATA_DIR` takes precedence, then this
    /// value, then `./data`.
    pub data_dir: Option<PathBuf>,
    /// TMNIST CSV location; defaults to `tmnist/TMNIST_Data.csv` inside the
    /// data directory.
    pub tmnist_csv: Option<PathBuf>,
    /// Name of the class column in the TMNIST CSV.
    pub tmnist_label_column: String,
    /// Test share for datasets without an official split (tmnist,
    /// synthetic).
    pub test_fraction: f64,
    pub synthetic: SyntheticConfig,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            dataset: DatasetKind::default(),
            data_dir: None,
            tmnist_csv: None,
            tmnist_label_column: "labels".into(),
            test_fraction: 0.2,
            synthetic: SyntheticConfig::default(),
        }
    }
}

/// Classifier architecture: hidden widths between the data-determined
/// input size and the 10-class softmax output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            hidden: vec![400, 100],
        }
    }
}

/// Sampling and metric settings for `benchmark`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSection {
    pub sample_count: usize,
    pub target_mode: TargetMode,
    pub random_control: bool,
    pub deletion: DeletionConfig,
    pub average_drop: AverageDropConfig,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        let b = BenchmarkConfig::default();
        EvaluationSection {
            sample_count: b.sample_count,
            target_mode: b.target_mode,
            random_control: b.random_control,
            deletion: b.deletion,
            average_drop: b.average_drop,
        }
    }
}

/// Output locations and rendering style.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub style: RenderStyle,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            style: RenderStyle::default(),
        }
    }
}

/// One run, fully described: dataset, architecture, training, methods,
/// evaluation, rendering, and the run seed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub methods: Vec<Method>,
    pub method_configs: MethodConfigs,
    pub evaluation: EvaluationSection,
    pub output: OutputConfig,
    /// Seed for the dataset split, the benchmark sample draw, and synthetic
    /// data generation. Training keeps its own `train.seed`.
    pub seed: u64,
    /// Minimum test accuracy `train` must reach; below it the checkpoint is
    /// still saved but the command fails.
    pub accuracy_floor: Option<f64>,
}

impl RunConfig {
    /// Methods to run: the configured list, or every method when empty.
    pub fn selected_methods(&self) -> Vec<Method> {
        if self.methods.is_empty() {
            Method::ALL.to_vec()
        } else {
            self.methods.clone()
        }
    }

    /// Assembles the benchmark settings from the evaluation and method
    /// sections.
    pub fn benchmark_config(&self) -> BenchmarkConfig {
        BenchmarkConfig {
            sample_count: self.evaluation.sample_count,
            seed: self.seed,
            target_mode: self.evaluation.target_mode,
            random_control: self.evaluation.random_control,
            deletion: self.evaluation.deletion,
            average_drop: self.evaluation.average_drop,
            method_configs: self.method_configs.clone(),
        }
    }

    /// Re-seeds every stage of the run from one value: the run seed,
    /// training, and the stochastic attribution methods.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        self.train.seed = seed;
        self.method_configs.shapley.seed = seed;
        self.method_configs.rise.seed = seed;
    }

    /// Shrinks the stochastic workloads for CI: 20 samples, 50 Shapley
    /// permutations, 500 RISE masks.
    pub fn apply_fast_profile(&mut self) {
        self.evaluation.sample_count = 20;
        self.method_configs.shapley.permutations = 50;
        self.method_configs.rise.masks = 500;
    }
}

/// Reads a config file, or starts from defaults when `path` is `None`,
/// then applies `--set` overrides.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("config {}: {e}", p.display())))?
        }
        None => serde_json::to_value(RunConfig::default())?,
    };
    for setting in overrides {
        apply_override(&mut value, setting)?;
    }
    serde_json::from_value(value).map_err(|e| Error::Config(format!("config: {e}")))
}

/// Applies one `key.path=value` override onto raw config JSON. The value
/// is parsed as JSON when possible and falls back to a plain string, so
/// `train.epochs=3` and `data.dataset=synthetic` both work unquoted.
fn apply_override(root: &mut serde_json::Value, setting: &str) -> Result<()> {
    let (path, raw) = setting.split_once('=').ok_or_else(|| {
        Error::Config(format!("override {setting:?} is not of the form key.path=value"))
    })?;
    if path.is_empty() {
        return Err(Error::Config(format!("override {setting:?} has an empty key")));
    }
    let value: serde_json::Value = serde_json::from_str(raw)
        .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut node = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, segment) in segments.iter().enumerate() {
        if !node.is_object() {
            return Err(Error::Config(format!(
                "override {setting:?}: {} is not an object",
                segments[..i].join(".")
            )));
        }
        let map = node.as_object_mut().unwrap();
        if i == segments.len() - 1 {
            map.insert(segment.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(segment.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    unreachable!("split never yields zero segments");
}

/// Dataset cache directory: `XWP_DATA_DIR`, then the config value, then
/// `./data`.
pub fn resolve_data_dir(cfg: &DataConfig) -> PathBuf {
    data_dir_from(env::var_os(DATA_DIR_ENV).map(PathBuf::from), cfg)
}

fn data_dir_from(env_dir: Option<PathBuf>, cfg: &DataConfig) -> PathBuf {
    env_dir
        .or_else(|| cfg.data_dir.clone())
        .unwrap_or_else(|| PathBuf::from("data"))
}

/// Expected location of the TMNIST CSV for this config.
pub fn tmnist_csv_path(cfg: &DataConfig) -> PathBuf {
    cfg.tmnist_csv
        .clone()
        .unwrap_or_else(|| resolve_data_dir(cfg).join("tmnist").join("TMNIST_Data.csv"))
}

/// The four official Fashion-MNIST IDX files, as (images, labels) pairs
/// for the train and test subsets.
pub const FASHION_FILES: [(&str, &str, Subset); 2] = [
    (
        "train-images-idx3-ubyte.gz",
        "train-labels-idx1-ubyte.gz",
        Subset::Train,
    ),
    (
        "t10k-images-idx3-ubyte.gz",
        "t10k-labels-idx1-ubyte.gz",
        Subset::Test,
    ),
];

/// Loads the configured dataset as (train split, test split).
///
/// Missing files come back as data errors naming the expected path and the
/// command that provides it.
pub fn load_dataset(cfg: &DataConfig, seed: u64) -> Result<(ImageDataset, ImageDataset)> {
    match cfg.dataset {
        DatasetKind::Synthetic => {
            let s = cfg.synthetic;
            let data = synthetic::bars_with(s.samples, s.side, s.classes, seed);
            split(&data, cfg.test_fraction, seed)
        }
        DatasetKind::Tmnist => {
            let path = tmnist_csv_path(cfg);
            if !path.exists() {
                return Err(Error::Data(format!(
                    "TMNIST CSV not found at {}; download TMNIST_Data.csv there or point \
                     data.tmnist_csv (or {DATA_DIR_ENV}) at it",
                    path.display()
                )));
            }
            let data = crate::data::load_tmnist_csv(&path, &cfg.tmnist_label_column, None)?;
            split(&data, cfg.test_fraction, seed)
        }
        DatasetKind::FashionMnist => {
            let dir = resolve_data_dir(cfg).join("fashion_mnist");
            let mut sets = Vec::with_capacity(2);
            for (images, labels, subset) in FASHION_FILES {
                let images_path = dir.join(images);
                let labels_path = dir.join(labels);
                for p in [&images_path, &labels_path] {
                    if !p.exists() {
                        return Err(Error::Data(format!(
                            "Fashion-MNIST file not found at {}; run `xwp fetch-data` or set \
                             {DATA_DIR_ENV} to a directory that holds it",
                            p.display()
                        )));
                    }
                }
                sets.push(crate::data::load_idx_pair(
                    &images_path,
                    &labels_path,
                    "fashion_mnist",
                    subset,
                )?);
            }
            let test = sets.pop().expect("two subsets loaded");
            let train = sets.pop().expect("two subsets loaded");
            Ok((train, test))
        }
    }
}

/// How `attribute` picks test-set samples: a leading count or an explicit
/// index list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SampleSpec {
    /// The first `n` samples of the test split.
    First(usize),
    /// Explicit test-split indices, kept in the given order.
    Indices(Vec<usize>),
}

impl SampleSpec {
    /// Parses `"5"` as the first five samples and `"3,17,42"` as explicit
    /// indices.
    pub fn parse(text: &str) -> Result<Self> {
        let parse_one = |s: &str| -> Result<usize> {
            s.trim().parse().map_err(|_| {
                Error::Config(format!("sample spec {text:?}: {s:?} is not an index"))
            })
        };
        if text.contains(',') {
            let indices = text.split(',').map(parse_one).collect::<Result<Vec<_>>>()?;
            Ok(SampleSpec::Indices(indices))
        } else {
            Ok(SampleSpec::First(parse_one(text)?))
        }
    }

    /// Resolves to concrete test-split indices, rejecting anything outside
    /// `0..len`.
    pub fn resolve(&self, len: usize) -> Result<Vec<usize>> {
        match self {
            SampleSpec::First(n) => {
                if *n == 0 || *n > len {
                    return Err(Error::Config(format!(
                        "sample count {n} is outside the valid range 1..={len}"
                    )));
                }
                Ok((0..*n).collect())
            }
            SampleSpec::Indices(indices) => {
                if let Some(&bad) = indices.iter().find(|&&i| i >= len) {
                    return Err(Error::Config(format!(
                        "sample index {bad} is outside the valid range 0..={}",
                        len - 1
                    )));
                }
                Ok(indices.clone())
            }
        }
    }
}

impl std::str::FromStr for SampleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SampleSpec::parse(s)
    }
}

/// Parses a comma-separated method list, reporting unknown names without
/// stopping: the second element collects every name that did not parse.
pub fn parse_method_list(text: &str) -> (Vec<Method>, Vec<String>) {
    let mut methods = Vec::new();
    let mut unknown = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        if part == "all" {
            methods.extend(Method::ALL);
            continue;
        }
        match part.parse::<Method>() {
            Ok(m) => methods.push(m),
            Err(_) => unknown.push(part.to_string()),
        }
    }
    (methods, unknown)
}
