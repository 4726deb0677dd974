//! Faithfulness metrics for attribution maps and the benchmark driver that
//! aggregates them into a report.
//!
//! Both metrics perturb the input along the map's ranking and watch the
//! target-class confidence: [`deletion_curve`] removes features in blocks
//! and records the confidence trajectory whose area [`auc`] summarizes
//! (lower is more faithful), and [`average_drop`] removes the top fifth in
//! one cut and measures the relative confidence loss (higher means the map
//! found the evidence). Because both depend only on the score ranking,
//! they are invariant under strictly increasing transforms of the scores.

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::attribution::AttributionMap;
use crate::error::{Error, Result};
use crate::nn::Network;

pub mod benchmark;
pub mod report;

pub use benchmark::{
    run_benchmark, BenchmarkConfig, BenchmarkReport, MeanCurve, MetricsRow, Provenance, RowError,
};
pub use report::{read_report, write_report, ReportFiles};

/// Removal schedule for [`deletion_curve`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeletionConfig {
    /// Features removed per step.
    pub pixels_per_step: usize,
    /// Number of removal steps after the unperturbed point.
    pub n_steps: usize,
    /// Value a removed feature is set to.
    pub baseline: f64,
}

impl Default for DeletionConfig {
    fn default() -> Self {
        DeletionConfig {
            pixels_per_step: 8,
            n_steps: 40,
            baseline: 0.0,
        }
    }
}

/// Masking rule for [`average_drop`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AverageDropConfig {
    /// Fraction of the features to remove, taken from the top of the
    /// ranking; the count is rounded down.
    pub mask_fraction: f64,
    /// Value a removed feature is set to.
    pub baseline: f64,
}

impl Default for AverageDropConfig {
    fn default() -> Self {
        AverageDropConfig {
            mask_fraction: 0.2,
            baseline: 0.0,
        }
    }
}

/// Target confidence after each block of removals, starting unperturbed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeletionCurve {
    pub method: String,
    pub sample_id: usize,
    /// Fraction of features removed before each confidence reading,
    /// starting at zero and strictly increasing.
    pub fractions_removed: Vec<f64>,
    /// Target-class probability at each reading.
    pub confidences: Vec<f64>,
}

/// Feature indices ordered by score descending, ties broken by ascending
/// index.
///
/// Panics if a score is NaN; the metric entry points validate first.
pub fn deletion_ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .expect("scores are finite")
            .then(a.cmp(&b))
    });
    order
}

fn validate_map(net: &Network, x: ArrayView1<f64>, map: &AttributionMap) -> Result<()> {
    super::attribution::validate_inputs(net, x, map.target)?;
    if map.scores.len() != x.len() {
        return Err(Error::Dimension(format!(
            "map has {} scores for {} features",
            map.scores.len(),
            x.len()
        )));
    }
    if let Some(bad) = map.scores.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("attribution score {bad}")));
    }
    Ok(())
}

/// Removes features in descending-score blocks and records the target
/// confidence after each block, starting with the unperturbed input.
pub fn deletion_curve(
    net: &Network,
    x: ArrayView1<f64>,
    map: &AttributionMap,
    cfg: &DeletionConfig,
) -> Result<DeletionCurve> {
    validate_map(net, x, map)?;
    if cfg.pixels_per_step == 0 || cfg.n_steps == 0 {
        return Err(Error::Config(
            "pixels_per_step and n_steps must be at least 1".into(),
        ));
    }
    if !cfg.baseline.is_finite() {
        return Err(Error::NonFinite(format!("baseline {}", cfg.baseline)));
    }
    let n = x.len();
    let budget = cfg.pixels_per_step * cfg.n_steps;
    if budget > n {
        return Err(Error::Config(format!(
            "removal budget {budget} exceeds the {n} available features"
        )));
    }

    let order = deletion_ranking(&map.scores);
    let mut masked: Vec<f64> = x.iter().copied().collect();
    let mut scratch = net.scratch();
    let mut fractions = Vec::with_capacity(cfg.n_steps + 1);
    let mut confidences = Vec::with_capacity(cfg.n_steps + 1);
    fractions.push(0.0);
    confidences.push(net.probabilities_into(&masked, &mut scratch)[map.target]);
    for k in 1..=cfg.n_steps {
        for &i in &order[(k - 1) * cfg.pixels_per_step..k * cfg.pixels_per_step] {
            masked[i] = cfg.baseline;
        }
        fractions.push((k * cfg.pixels_per_step) as f64 / n as f64);
        confidences.push(net.probabilities_into(&masked, &mut scratch)[map.target]);
    }
    Ok(DeletionCurve {
        method: map.method.clone(),
        sample_id: map.sample_id,
        fractions_removed: fractions,
        confidences,
    })
}

/// Trapezoidal area under the curve, normalized by the fraction span so a
/// constant curve at `c` scores exactly `c`.
pub fn auc(curve: &DeletionCurve) -> Result<f64> {
    let f = &curve.fractions_removed;
    let c = &curve.confidences;
    if f.len() != c.len() {
        return Err(Error::Dimension(format!(
            "curve has {} fractions and {} confidences",
            f.len(),
            c.len()
        )));
    }
    if f.len() < 2 {
        return Err(Error::Config(
            "area needs at least two curve points".into(),
        ));
    }
    let mut area = 0.0;
    for k in 0..f.len() - 1 {
        area += 0.5 * (c[k] + c[k + 1]) * (f[k + 1] - f[k]);
    }
    let span = f[f.len() - 1] - f[0];
    if span <= 0.0 {
        return Err(Error::Config("curve fractions must increase".into()));
    }
    Ok(area / span)
}

/// Relative confidence loss after removing the top-ranked fraction of the
/// features in one cut: `max(0, p - p_masked) / p`.
///
/// A target confidence of exactly zero cannot be normalized; the sample is
/// rejected with [`Error::ZeroConfidence`] so callers can skip it.
pub fn average_drop(
    net: &Network,
    x: ArrayView1<f64>,
    map: &AttributionMap,
    cfg: &AverageDropConfig,
) -> Result<f64> {
    validate_map(net, x, map)?;
    if !(cfg.mask_fraction > 0.0 && cfg.mask_fraction < 1.0) {
        return Err(Error::Config(format!(
            "mask_fraction {} must be in (0, 1)",
            cfg.mask_fraction
        )));
    }
    if !cfg.baseline.is_finite() {
        return Err(Error::NonFinite(format!("baseline {}", cfg.baseline)));
    }

    let mut scratch = net.scratch();
    let mut masked: Vec<f64> = x.iter().copied().collect();
    let full = net.probabilities_into(&masked, &mut scratch)[map.target];
    if full == 0.0 {
        return Err(Error::ZeroConfidence(map.sample_id));
    }
    let top = (cfg.mask_fraction * x.len() as f64).floor() as usize;
    let order = deletion_ranking(&map.scores);
    for &i in &order[..top] {
        masked[i] = cfg.baseline;
    }
    let dropped = net.probabilities_into(&masked, &mut scratch)[map.target];
    Ok((full - dropped).max(0.0) / full)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::TargetMode;
    use crate::nn::{init_network, Activation, LayerSpec, Network};
    use ndarray::{array, Array1};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn map_of(scores: Vec<f64>, target: usize) -> AttributionMap {
        AttributionMap {
            method: "test".into(),
            sample_id: 0,
            target,
            target_mode: TargetMode::Predicted,
            scores,
        }
    }

    fn toy_net(in_dim: usize, seed: u64) -> Network {
        let specs = vec![
            LayerSpec::new(in_dim, 5, Activation::Relu),
            LayerSpec::new(5, 3, Activation::Softmax),
        ];
        init_network(&specs, seed).unwrap()
    }

    #[test]
    fn ranking_is_descending_with_index_tie_break() {
        let scores = [0.5, 0.9, 0.5, -1.0, 0.9];
        assert_eq!(deletion_ranking(&scores), vec![1, 4, 0, 2, 3]);
        let equal = [0.3; 4];
        assert_eq!(deletion_ranking(&equal), vec![0, 1, 2, 3]);
    }

    #[test]
    fn curve_matches_brute_force_masking_on_a_toy_model() {
        let net = toy_net(4, 40);
        let x = array![0.9, 0.2, 0.7, 0.4];
        let map = map_of(vec![0.1, 0.8, 0.3, 0.5], 1);
        let cfg = DeletionConfig {
            pixels_per_step: 1,
            n_steps: 4,
            baseline: 0.0,
        };
        let curve = deletion_curve(&net, x.view(), &map, &cfg).unwrap();
        assert_eq!(curve.fractions_removed, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let order = [1usize, 3, 2, 0];
        let mut masked = x.clone();
        let mut expect = vec![net.probabilities(masked.view()).unwrap()[1]];
        for &i in &order {
            masked[i] = 0.0;
            expect.push(net.probabilities(masked.view()).unwrap()[1]);
        }
        assert_eq!(curve.confidences, expect);
    }

    #[test]
    fn all_equal_scores_remove_pixels_in_index_order() {
        let net = toy_net(4, 41);
        let x = array![0.9, 0.2, 0.7, 0.4];
        let map = map_of(vec![0.5; 4], 0);
        let cfg = DeletionConfig {
            pixels_per_step: 2,
            n_steps: 2,
            baseline: 0.0,
        };
        let curve = deletion_curve(&net, x.view(), &map, &cfg).unwrap();
        let mut masked = x.clone();
        masked[0] = 0.0;
        masked[1] = 0.0;
        assert_eq!(
            curve.confidences[1],
            net.probabilities(masked.view()).unwrap()[0]
        );
    }

    #[test]
    fn untrained_uniform_predictor_holds_a_flat_tenth() {
        let weights = ndarray::Array2::zeros((4, 10));
        let net = Network::from_parts(
            vec![LayerSpec::new(4, 10, Activation::Softmax)],
            vec![weights],
            vec![Array1::zeros(10)],
        )
        .unwrap();
        let x = array![0.0, 0.0, 0.0, 0.0];
        let map = map_of(vec![0.4, 0.3, 0.2, 0.1], 7);
        let cfg = DeletionConfig {
            pixels_per_step: 1,
            n_steps: 4,
            baseline: 0.0,
        };
        let curve = deletion_curve(&net, x.view(), &map, &cfg).unwrap();
        for &c in &curve.confidences {
            assert_eq!(c, 0.1);
        }
        assert_eq!(auc(&curve).unwrap(), 0.1);
    }

    #[test]
    fn removal_budget_beyond_the_feature_count_is_rejected() {
        let net = toy_net(4, 42);
        let x = array![0.1, 0.2, 0.3, 0.4];
        let map = map_of(vec![1.0, 2.0, 3.0, 4.0], 0);
        let cfg = DeletionConfig {
            pixels_per_step: 3,
            n_steps: 2,
            baseline: 0.0,
        };
        assert!(deletion_curve(&net, x.view(), &map, &cfg).is_err());
    }

    #[test]
    fn area_of_known_shapes() {
        let flat = DeletionCurve {
            method: "test".into(),
            sample_id: 0,
            fractions_removed: vec![0.0, 0.25, 0.5],
            confidences: vec![0.62, 0.62, 0.62],
        };
        assert!((auc(&flat).unwrap() - 0.62).abs() <= 1e-15);
        let descent = DeletionCurve {
            method: "test".into(),
            sample_id: 0,
            fractions_removed: vec![0.0, 1.0],
            confidences: vec![1.0, 0.0],
        };
        assert_eq!(auc(&descent).unwrap(), 0.5);
        let single = DeletionCurve {
            method: "test".into(),
            sample_id: 0,
            fractions_removed: vec![0.0],
            confidences: vec![1.0],
        };
        assert!(auc(&single).is_err());
    }

    #[test]
    fn area_matches_a_fine_grained_midpoint_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let fractions: Vec<f64> = (0..9).map(|k| k as f64 * 0.4 / 8.0).collect();
        let confidences: Vec<f64> = (0..9).map(|_| rng.random::<f64>()).collect();
        let curve = DeletionCurve {
            method: "test".into(),
            sample_id: 0,
            fractions_removed: fractions.clone(),
            confidences: confidences.clone(),
        };
        let mut oracle = 0.0;
        for k in 0..8 {
            let width = fractions[k + 1] - fractions[k];
            let substeps = 1000;
            for s in 0..substeps {
                let t = (s as f64 + 0.5) / substeps as f64;
                let value = confidences[k] + t * (confidences[k + 1] - confidences[k]);
                oracle += value * width / substeps as f64;
            }
        }
        oracle /= fractions[8] - fractions[0];
        assert!(
            (auc(&curve).unwrap() - oracle).abs() <= 1e-12,
            "{} vs {oracle}",
            auc(&curve).unwrap()
        );
    }

    #[test]
    fn average_drop_matches_a_hand_computed_masked_forward() {
        let net = toy_net(4, 43);
        let x = array![0.9, 0.2, 0.7, 0.4];
        let map = map_of(vec![0.1, 0.8, 0.3, 0.5], 2);
        let cfg = AverageDropConfig {
            mask_fraction: 0.5,
            baseline: 0.0,
        };
        let drop = average_drop(&net, x.view(), &map, &cfg).unwrap();
        let full = net.probabilities(x.view()).unwrap()[2];
        let mut masked = x.clone();
        masked[1] = 0.0;
        masked[3] = 0.0;
        let lost = net.probabilities(masked.view()).unwrap()[2];
        assert_eq!(drop, (full - lost).max(0.0) / full);
        assert!((0.0..=1.0).contains(&drop));
    }

    #[test]
    fn masking_only_zero_pixels_drops_nothing() {
        let net = toy_net(5, 44);
        let x = array![0.0, 0.6, 0.0, 0.8, 0.9];
        let map = map_of(vec![10.0, 0.1, 9.0, 0.2, 0.3], 1);
        let cfg = AverageDropConfig {
            mask_fraction: 0.4,
            baseline: 0.0,
        };
        assert_eq!(average_drop(&net, x.view(), &map, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn zero_confidence_targets_are_rejected_for_normalization() {
        let weights = array![[500.0, -500.0], [500.0, -500.0]];
        let net = Network::from_parts(
            vec![LayerSpec::new(2, 2, Activation::Softmax)],
            vec![weights],
            vec![Array1::zeros(2)],
        )
        .unwrap();
        let x = array![1.0, 1.0];
        let map = AttributionMap {
            method: "test".into(),
            sample_id: 9,
            target: 1,
            target_mode: TargetMode::Predicted,
            scores: vec![0.5, 0.4],
        };
        let cfg = AverageDropConfig::default();
        match average_drop(&net, x.view(), &map, &cfg) {
            Err(Error::ZeroConfidence(id)) => assert_eq!(id, 9),
            other => panic!("expected zero-confidence rejection, got {other:?}"),
        }
    }

    #[test]
    fn metrics_are_bit_identical_under_increasing_score_transforms() {
        let net = toy_net(6, 45);
        let x = array![0.9, 0.2, 0.7, 0.4, 0.1, 0.6];
        let scores = vec![0.11, -0.4, 0.32, 0.05, -0.2, 0.5];
        let del_cfg = DeletionConfig {
            pixels_per_step: 2,
            n_steps: 3,
            baseline: 0.0,
        };
        let ad_cfg = AverageDropConfig::default();
        let base_map = map_of(scores.clone(), 1);
        let base_curve = deletion_curve(&net, x.view(), &base_map, &del_cfg).unwrap();
        let base_drop = average_drop(&net, x.view(), &base_map, &ad_cfg).unwrap();
        let transforms: [&dyn Fn(f64) -> f64; 2] = [&|s| 2.0 * s + 5.0, &|s| s * s * s];
        for g in transforms {
            let mapped = map_of(scores.iter().map(|&s| g(s)).collect(), 1);
            let curve = deletion_curve(&net, x.view(), &mapped, &del_cfg).unwrap();
            let drop = average_drop(&net, x.view(), &mapped, &ad_cfg).unwrap();
            assert_eq!(curve.confidences, base_curve.confidences);
            assert_eq!(curve.fractions_removed, base_curve.fractions_removed);
            assert_eq!(drop, base_drop);
        }
    }

    #[test]
    fn curves_stay_finite_and_inside_the_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for seed in 0..5u64 {
            let net = toy_net(9, 60 + seed);
            let x = Array1::from_iter((0..9).map(|_| rng.random::<f64>()));
            let scores: Vec<f64> = (0..9).map(|_| rng.random::<f64>() - 0.5).collect();
            let map = map_of(scores, (seed % 3) as usize);
            let cfg = DeletionConfig {
                pixels_per_step: 3,
                n_steps: 3,
                baseline: 0.0,
            };
            let curve = deletion_curve(&net, x.view(), &map, &cfg).unwrap();
            for &c in &curve.confidences {
                assert!((0.0..=1.0).contains(&c));
            }
            let area = auc(&curve).unwrap();
            assert!((0.0..=1.0).contains(&area));
        }
    }
}
