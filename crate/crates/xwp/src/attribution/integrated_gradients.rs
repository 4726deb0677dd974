//! Integrated gradients along the straight path from a constant baseline.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use super::validate_inputs;
use crate::error::{Error, Result};
use crate::nn::{input_gradient, Network, OutputUnit};

/// Path discretization for [`integrated_gradient_scores`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratedGradientsConfig {
    /// Number of midpoint samples along the path.
    pub steps: usize,
    /// Constant input the path starts from.
    pub baseline: f64,
    /// Output quantity whose gradient is integrated.
    pub at: OutputUnit,
}

impl Default for IntegratedGradientsConfig {
    fn default() -> Self {
        IntegratedGradientsConfig {
            steps: 50,
            baseline: 0.0,
            at: OutputUnit::Probability,
        }
    }
}

/// Scores every feature with the midpoint-rule path integral of the target
/// gradient, scaled by the feature's distance from the baseline.
///
/// The path is `baseline + alpha * (x - baseline)` and the gradient is
/// sampled at `alpha = (k - 0.5) / steps` for `k = 1..=steps`. A feature
/// already at the baseline scores exactly `0.0`.
pub fn integrated_gradient_scores(
    net: &Network,
    x: ArrayView1<f64>,
    target: usize,
    cfg: &IntegratedGradientsConfig,
) -> Result<Array1<f64>> {
    validate_inputs(net, x, target)?;
    if cfg.steps == 0 {
        return Err(Error::Config("steps must be at least 1".into()));
    }
    if !cfg.baseline.is_finite() {
        return Err(Error::NonFinite(format!("baseline {}", cfg.baseline)));
    }

    let delta = x.mapv(|v| v - cfg.baseline);
    let mut total = Array1::zeros(x.len());
    for k in 1..=cfg.steps {
        let alpha = (k as f64 - 0.5) / cfg.steps as f64;
        let point = delta.mapv(|d| cfg.baseline + alpha * d);
        total += &input_gradient(net, point.view(), target, cfg.at)?;
    }
    let steps = cfg.steps as f64;
    Ok(Array1::from_iter(
        delta
            .iter()
            .zip(total.iter())
            .map(|(&d, &g)| if d == 0.0 { 0.0 } else { d * g / steps }),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_network, Activation, LayerSpec};
    use ndarray::array;
    use ndarray::Array1;

    #[test]
    fn linear_logit_attribution_is_exact() {
        let specs = vec![LayerSpec::new(4, 3, Activation::Identity)];
        let net = init_network(&specs, 71).unwrap();
        let x = array![0.8, -0.5, 0.0, 1.1];
        let cfg = IntegratedGradientsConfig {
            steps: 3,
            at: OutputUnit::Logit,
            ..IntegratedGradientsConfig::default()
        };
        let scores = integrated_gradient_scores(&net, x.view(), 1, &cfg).unwrap();
        let total: f64 = scores.sum();
        let full = net.forward(x.view()).unwrap().pre_activations[0][1];
        let empty = net
            .forward(Array1::zeros(4).view())
            .unwrap()
            .pre_activations[0][1];
        assert!(
            (total - (full - empty)).abs() <= 1e-12,
            "sum {total} vs exact {}",
            full - empty
        );
        for i in 0..4 {
            let exact = x[i] * net.weights()[0][(i, 1)];
            assert!((scores[i] - exact).abs() <= 1e-12);
        }
    }

    #[test]
    fn path_sum_approximates_the_probability_change() {
        for seed in 0..5u64 {
            let specs = vec![
                LayerSpec::new(6, 8, Activation::Relu),
                LayerSpec::new(8, 4, Activation::Softmax),
            ];
            let net = init_network(&specs, 80 + seed).unwrap();
            let x = array![0.9, -0.7, 0.4, 0.0, 1.0, -0.2];
            let cfg = IntegratedGradientsConfig::default();
            let scores = integrated_gradient_scores(&net, x.view(), 2, &cfg).unwrap();
            let full = net.probabilities(x.view()).unwrap()[2];
            let empty = net.probabilities(Array1::zeros(6).view()).unwrap()[2];
            let gap = (scores.sum() - (full - empty)).abs();
            assert!(gap < 1e-2, "seed {seed}: completeness gap {gap}");
        }
    }

    #[test]
    fn baseline_valued_features_score_exactly_zero() {
        let specs = vec![
            LayerSpec::new(5, 6, Activation::Relu),
            LayerSpec::new(6, 3, Activation::Softmax),
        ];
        let net = init_network(&specs, 90).unwrap();
        let x = array![0.5, 0.3, 0.9, 0.3, 0.1];
        let cfg = IntegratedGradientsConfig {
            baseline: 0.3,
            ..IntegratedGradientsConfig::default()
        };
        let scores = integrated_gradient_scores(&net, x.view(), 0, &cfg).unwrap();
        assert!(scores[1] == 0.0);
        assert!(scores[3] == 0.0);
    }

    #[test]
    fn single_step_uses_the_path_midpoint() {
        let specs = vec![
            LayerSpec::new(3, 4, Activation::Relu),
            LayerSpec::new(4, 2, Activation::Softmax),
        ];
        let net = init_network(&specs, 91).unwrap();
        let x = array![0.6, -0.8, 0.4];
        let cfg = IntegratedGradientsConfig {
            steps: 1,
            ..IntegratedGradientsConfig::default()
        };
        let scores = integrated_gradient_scores(&net, x.view(), 1, &cfg).unwrap();
        let midpoint = x.mapv(|v| 0.5 * v);
        let g = input_gradient(&net, midpoint.view(), 1, OutputUnit::Probability).unwrap();
        for i in 0..3 {
            assert!((scores[i] - x[i] * g[i]).abs() <= 1e-15);
        }
    }

    #[test]
    fn zero_steps_is_rejected() {
        let specs = vec![LayerSpec::new(3, 2, Activation::Identity)];
        let net = init_network(&specs, 92).unwrap();
        let x = array![0.1, 0.2, 0.3];
        let cfg = IntegratedGradientsConfig {
            steps: 0,
            ..IntegratedGradientsConfig::default()
        };
        assert!(integrated_gradient_scores(&net, x.view(), 0, &cfg).is_err());
    }
}
