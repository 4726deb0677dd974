//! Benchmark driver: every method on a seeded sample of a test set,
//! aggregated into metric rows and mean deletion curves.
//!
//! Runs are fully deterministic: the sample draw and every stochastic
//! method derive their seeds from the benchmark seed, the method key, and
//! the sample id, so results do not depend on thread scheduling or method
//! order. Per-sample work runs in parallel; aggregation is a sequential
//! reduction in sample order.

use ndarray::ArrayView1;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{auc, average_drop, deletion_curve, AverageDropConfig, DeletionConfig};
use crate::attribution::{
    attribute, complement_reset_scores, resolve_target, AttributionMap, Method, MethodConfigs,
    Orientation, TargetMode,
};
use crate::data::ImageDataset;
use crate::error::{Error, Result};
use crate::nn::{ModelPair, PairMetadata};

/// Sampling, metric, and method settings for one benchmark run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    /// How many test samples to draw.
    pub sample_count: usize,
    /// Seed for the sample draw and for every derived method seed.
    pub seed: u64,
    /// How the explained class is chosen per sample.
    pub target_mode: TargetMode,
    /// Also score a random ranking as a control row.
    pub random_control: bool,
    pub deletion: DeletionConfig,
    pub average_drop: AverageDropConfig,
    pub method_configs: MethodConfigs,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            sample_count: 100,
            seed: 0,
            target_mode: TargetMode::Predicted,
            random_control: false,
            deletion: DeletionConfig::default(),
            average_drop: AverageDropConfig::default(),
            method_configs: MethodConfigs::default(),
        }
    }
}

/// Aggregated metrics for one method on one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: String,
    pub dataset: String,
    pub average_drop: f64,
    pub deletion_auc: f64,
    pub n_samples: usize,
    pub config_digest: String,
}

/// Pointwise mean of one method's deletion curves over all samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanCurve {
    pub method: String,
    pub fractions_removed: Vec<f64>,
    pub mean_confidences: Vec<f64>,
}

/// A method whose row was abandoned, with the first error it produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowError {
    pub method: String,
    pub message: String,
}

/// Everything needed to regenerate the run: seeds, sample ids, model
/// metadata, the expanded method keys, and any per-method failures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub dataset: String,
    pub target_mode: TargetMode,
    pub test_set_len: usize,
    pub sample_ids: Vec<usize>,
    pub model: PairMetadata,
    pub methods: Vec<String>,
    pub config: BenchmarkConfig,
    pub errors: Vec<RowError>,
}

/// One benchmark run: metric rows, mean curves, and provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<MetricsRow>,
    pub mean_curves: Vec<MeanCurve>,
    pub provenance: Provenance,
}

/// Expands method selections into report keys: the complement reset
/// produces one key per sign convention, everything else maps one to one.
fn expand_keys(methods: &[Method], random_control: bool) -> Vec<String> {
    let mut keys = Vec::new();
    for &m in methods {
        match m {
            Method::XwpC => {
                for o in Orientation::ALL {
                    keys.push(format!("xwp_c_{}", o.as_str()));
                }
            }
            other => keys.push(other.as_str().to_string()),
        }
    }
    if random_control {
        keys.push("random".to_string());
    }
    keys.dedup();
    let mut seen = std::collections::HashSet::new();
    keys.retain(|k| seen.insert(k.clone()));
    keys
}

/// Mixes the benchmark seed, a method key, and a sample id into an
/// independent stream seed.
fn derive_seed(base: u64, key: &str, sample_id: usize) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(base.to_le_bytes());
    hasher.update(key.as_bytes());
    hasher.update((sample_id as u64).to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

fn config_digest(cfg: &BenchmarkConfig, keys: &[String], pair: &ModelPair, len: usize) -> String {
    #[derive(Serialize)]
    struct DigestInput<'a> {
        config: &'a BenchmarkConfig,
        methods: &'a [String],
        model_seed: u64,
        model: &'a PairMetadata,
        test_set_len: usize,
    }
    let canonical = serde_json::to_vec(&DigestInput {
        config: cfg,
        methods: keys,
        model_seed: pair.seed,
        model: &pair.metadata,
        test_set_len: len,
    })
    .expect("benchmark config serializes");
    hex::encode(Sha256::digest(canonical))
}

fn scores_for_key(
    pair: &ModelPair,
    x: ArrayView1<f64>,
    target: usize,
    key: &str,
    cfg: &BenchmarkConfig,
    sample_id: usize,
) -> Result<Vec<f64>> {
    let scores = match key {
        "xwp_c_as_written" => {
            complement_reset_scores(pair, x, target, Orientation::AsWritten)?.to_vec()
        }
        "xwp_c_negated" => complement_reset_scores(pair, x, target, Orientation::Negated)?.to_vec(),
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, key, sample_id));
            (0..x.len()).map(|_| rng.random::<f64>()).collect()
        }
        _ => {
            let method: Method = key.parse()?;
            let mut configs = cfg.method_configs.clone();
            configs.shapley.seed = derive_seed(cfg.seed, "shapley", sample_id);
            configs.rise.seed = derive_seed(cfg.seed, "rise", sample_id);
            attribute(pair, x, target, method, &configs)?.to_vec()
        }
    };
    Ok(scores)
}

struct KeyMetrics {
    auc: f64,
    drop: Option<f64>,
    confidences: Vec<f64>,
}

struct SampleOutcome {
    zero_confidence: bool,
    per_key: Vec<Result<KeyMetrics>>,
}

fn evaluate_sample(
    pair: &ModelPair,
    test_set: &ImageDataset,
    keys: &[String],
    cfg: &BenchmarkConfig,
    sample_id: usize,
) -> Result<SampleOutcome> {
    let x = test_set.image(sample_id);
    let target = resolve_target(
        &pair.trained,
        x,
        cfg.target_mode,
        Some(test_set.label(sample_id) as usize),
    )?;
    let mut zero_confidence = false;
    let per_key = keys
        .iter()
        .map(|key| {
            let scores = scores_for_key(pair, x, target, key, cfg, sample_id)?;
            let map = AttributionMap {
                method: key.clone(),
                sample_id,
                target,
                target_mode: cfg.target_mode,
                scores,
            };
            let curve = deletion_curve(&pair.trained, x, &map, &cfg.deletion)?;
            let area = auc(&curve)?;
            let drop = match average_drop(&pair.trained, x, &map, &cfg.average_drop) {
                Ok(d) => Some(d),
                Err(Error::ZeroConfidence(_)) => {
                    zero_confidence = true;
                    None
                }
                Err(e) => return Err(e),
            };
            Ok(KeyMetrics {
                auc: area,
                drop,
                confidences: curve.confidences,
            })
        })
        .collect();
    Ok(SampleOutcome {
        zero_confidence,
        per_key,
    })
}

/// Runs every requested method over a seeded draw of test samples and
/// aggregates Average Drop and deletion-curve area per method.
///
/// A method that fails on any sample loses its row; the first failure is
/// recorded in the provenance instead of aborting the run. Samples whose
/// target confidence is exactly zero are skipped for Average Drop with a
/// warning and still count toward the curve and its area.
pub fn run_benchmark(
    pair: &ModelPair,
    test_set: &ImageDataset,
    methods: &[Method],
    cfg: &BenchmarkConfig,
) -> Result<BenchmarkReport> {
    pair.check_consistent()?;
    if methods.is_empty() && !cfg.random_control {
        return Err(Error::Config("no methods requested".into()));
    }
    if test_set.is_empty() {
        return Err(Error::Data("test set is empty".into()));
    }
    if test_set.n_features() != pair.trained.input_dim() {
        return Err(Error::Dimension(format!(
            "test set has {} features but the model expects {}",
            test_set.n_features(),
            pair.trained.input_dim()
        )));
    }
    if cfg.sample_count == 0 || cfg.sample_count > test_set.len() {
        return Err(Error::Config(format!(
            "sample_count {} must be between 1 and the test set size {}",
            cfg.sample_count,
            test_set.len()
        )));
    }
    let budget = cfg.deletion.pixels_per_step * cfg.deletion.n_steps;
    if budget > test_set.n_features() {
        return Err(Error::Config(format!(
            "removal budget {budget} exceeds the {} available features",
            test_set.n_features()
        )));
    }

    let mut sample_ids: Vec<usize> = (0..test_set.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    sample_ids.shuffle(&mut rng);
    sample_ids.truncate(cfg.sample_count);

    if cfg.target_mode == TargetMode::TrueLabel {
        let out = pair.trained.output_dim();
        for &sid in &sample_ids {
            if test_set.label(sid) as usize >= out {
                return Err(Error::Config(format!(
                    "label {} of sample {sid} out of range for {out} outputs",
                    test_set.label(sid)
                )));
            }
        }
    }

    let keys = expand_keys(methods, cfg.random_control);
    let outcomes: Vec<Result<SampleOutcome>> = sample_ids
        .par_iter()
        .map(|&sid| evaluate_sample(pair, test_set, &keys, cfg, sid))
        .collect();

    let mut resolved = Vec::with_capacity(outcomes.len());
    for (outcome, &sid) in outcomes.into_iter().zip(&sample_ids) {
        let outcome = outcome?;
        if outcome.zero_confidence {
            log::warn!("sample {sid}: target confidence is zero, skipped for average drop");
        }
        resolved.push(outcome);
    }

    let digest = config_digest(cfg, &keys, pair, test_set.len());
    let n_points = cfg.deletion.n_steps + 1;
    let fractions: Vec<f64> = (0..n_points)
        .map(|k| (k * cfg.deletion.pixels_per_step) as f64 / test_set.n_features() as f64)
        .collect();

    let mut rows = Vec::new();
    let mut mean_curves = Vec::new();
    let mut errors = Vec::new();
    for (ki, key) in keys.iter().enumerate() {
        let mut failure: Option<String> = None;
        let mut aucs = Vec::with_capacity(resolved.len());
        let mut drops = Vec::new();
        let mut curve_sum = vec![0.0; n_points];
        for outcome in &resolved {
            match &outcome.per_key[ki] {
                Ok(metrics) => {
                    aucs.push(metrics.auc);
                    if let Some(d) = metrics.drop {
                        drops.push(d);
                    }
                    for (s, &c) in curve_sum.iter_mut().zip(&metrics.confidences) {
                        *s += c;
                    }
                }
                Err(e) => {
                    failure = Some(e.to_string());
                    break;
                }
            }
        }
        if failure.is_none() && drops.is_empty() {
            failure = Some("every sample had zero target confidence".into());
        }
        if let Some(message) = failure {
            errors.push(RowError {
                method: key.clone(),
                message,
            });
            continue;
        }
        rows.push(MetricsRow {
            method: key.clone(),
            dataset: pair.metadata.dataset.clone(),
            average_drop: drops.iter().sum::<f64>() / drops.len() as f64,
            deletion_auc: aucs.iter().sum::<f64>() / aucs.len() as f64,
            n_samples: cfg.sample_count,
            config_digest: digest.clone(),
        });
        mean_curves.push(MeanCurve {
            method: key.clone(),
            fractions_removed: fractions.clone(),
            mean_confidences: curve_sum
                .into_iter()
                .map(|s| s / resolved.len() as f64)
                .collect(),
        });
    }

    Ok(BenchmarkReport {
        rows,
        mean_curves,
        provenance: Provenance {
            seed: cfg.seed,
            dataset: pair.metadata.dataset.clone(),
            target_mode: cfg.target_mode,
            test_set_len: test_set.len(),
            sample_ids,
            model: pair.metadata.clone(),
            methods: keys,
            config: cfg.clone(),
            errors,
        },
    })
}
