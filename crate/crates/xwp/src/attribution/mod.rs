//! Feature attribution for fully connected classifiers.
//!
//! Every method maps one input sample to a per-feature score vector for a
//! chosen target class. Two methods score features by substituting rows of
//! the first weight matrix with their untrained initial values
//! ([`weight_reset_scores`] resets the feature's own row,
//! [`complement_reset_scores`] resets every other row); the remaining
//! methods perturb or decompose activations and serve as baselines:
//! patch occlusion, permutation-sampled Shapley values, randomized masking,
//! integrated gradients, and epsilon-stabilized relevance propagation.
//!
//! [`attribute`] dispatches on [`Method`] with a shared [`MethodConfigs`]
//! bundle, and [`AttributionMap`] is the serializable result row used by the
//! JSON-lines readers and writers.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{ModelPair, Network};

pub mod integrated_gradients;
pub mod lrp;
pub mod occlusion;
pub mod rise;
pub mod shapley;
pub mod weight_perturbation;

pub use integrated_gradients::{integrated_gradient_scores, IntegratedGradientsConfig};
pub use lrp::{lrp_scores, LrpConfig};
pub use occlusion::{occlusion_scores, OcclusionConfig};
pub use rise::{rise_scores, RiseConfig};
pub use shapley::{shapley_scores, ShapleyConfig};
pub use weight_perturbation::{complement_reset_scores, weight_reset_scores, Orientation};

/// The implemented attribution methods, keyed by their command-line names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Reset one first-layer weight row to its untrained value per feature.
    #[serde(rename = "xwp")]
    Xwp,
    /// Reset every first-layer weight row except the feature's own.
    #[serde(rename = "xwp_c")]
    XwpC,
    /// Slide a baseline patch over the image and average the drops.
    #[serde(rename = "occlusion")]
    Occlusion,
    /// Permutation-sampled Shapley values against a baseline input.
    #[serde(rename = "shapley")]
    Shapley,
    /// Randomized low-resolution masks weighted by the masked confidence.
    #[serde(rename = "rise")]
    Rise,
    /// Path-integrated input gradients from a baseline to the sample.
    #[serde(rename = "ig")]
    IntegratedGradients,
    /// Layer-wise relevance propagation with an epsilon stabilizer.
    #[serde(rename = "lrp")]
    Lrp,
}

impl Method {
    /// Every method, in the order reports list them.
    pub const ALL: [Method; 7] = [
        Method::Xwp,
        Method::XwpC,
        Method::Occlusion,
        Method::Shapley,
        Method::Rise,
        Method::IntegratedGradients,
        Method::Lrp,
    ];

    /// The stable command-line and report key for this method.
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Xwp => "xwp",
            Method::XwpC => "xwp_c",
            Method::Occlusion => "occlusion",
            Method::Shapley => "shapley",
            Method::Rise => "rise",
            Method::IntegratedGradients => "ig",
            Method::Lrp => "lrp",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

/// How the target class of an attribution is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    /// The class the trained network predicts for the sample.
    Predicted,
    /// The sample's ground-truth label.
    TrueLabel,
}

/// Picks the class to explain: the argmax prediction (lowest index on ties)
/// or the provided ground-truth label.
pub fn resolve_target(
    net: &Network,
    x: ArrayView1<f64>,
    mode: TargetMode,
    true_label: Option<usize>,
) -> Result<usize> {
    match mode {
        TargetMode::Predicted => {
            let p = net.probabilities(x)?;
            let mut best = 0;
            for (j, &pj) in p.iter().enumerate() {
                if pj > p[best] {
                    best = j;
                }
            }
            Ok(best)
        }
        TargetMode::TrueLabel => {
            let label = true_label.ok_or_else(|| {
                Error::Config("target mode true_label needs a label for the sample".into())
            })?;
            if label >= net.output_dim() {
                return Err(Error::Config(format!(
                    "label {label} out of range for {} outputs",
                    net.output_dim()
                )));
            }
            Ok(label)
        }
    }
}

/// One attribution result row: a score per input feature for one sample.
///
/// `method` is a report key rather than a [`Method`] so rows can carry
/// expanded names such as the two orientations of the complement reset or a
/// random-ranking control.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributionMap {
    pub method: String,
    pub sample_id: usize,
    pub target: usize,
    pub target_mode: TargetMode,
    pub scores: Vec<f64>,
}

/// Writes one JSON object per line, in slice order.
pub fn write_attribution_jsonl(path: &Path, maps: &[AttributionMap]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for map in maps {
        serde_json::to_writer(&mut out, map)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a file of line-delimited attribution rows, skipping blank lines.
pub fn read_attribution_jsonl(path: &Path) -> Result<Vec<AttributionMap>> {
    let reader = BufReader::new(File::open(path)?);
    let mut maps = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        maps.push(serde_json::from_str(&line)?);
    }
    Ok(maps)
}

/// Settings for every configurable method, with the documented defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodConfigs {
    /// Sign convention for [`complement_reset_scores`].
    pub orientation: Orientation,
    pub occlusion: OcclusionConfig,
    pub shapley: ShapleyConfig,
    pub rise: RiseConfig,
    pub integrated_gradients: IntegratedGradientsConfig,
    pub lrp: LrpConfig,
}

/// Runs `method` on one sample and returns its per-feature scores.
pub fn attribute(
    pair: &ModelPair,
    x: ArrayView1<f64>,
    target: usize,
    method: Method,
    configs: &MethodConfigs,
) -> Result<Array1<f64>> {
    match method {
        Method::Xwp => weight_reset_scores(pair, x, target),
        Method::XwpC => complement_reset_scores(pair, x, target, configs.orientation),
        Method::Occlusion => occlusion_scores(&pair.trained, x, target, &configs.occlusion),
        Method::Shapley => shapley_scores(&pair.trained, x, target, &configs.shapley),
        Method::Rise => rise_scores(&pair.trained, x, target, &configs.rise),
        Method::IntegratedGradients => {
            integrated_gradient_scores(&pair.trained, x, target, &configs.integrated_gradients)
        }
        Method::Lrp => lrp_scores(&pair.trained, x, target, &configs.lrp),
    }
}

/// Signed contrast between two output vectors: the target entry counts
/// positively, every other entry negatively.
pub(crate) fn indicator_contrast(target: usize, a: &[f64], b: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (j, (&aj, &bj)) in a.iter().zip(b).enumerate() {
        let diff = aj - bj;
        sum += if j == target { diff } else { -diff };
    }
    sum
}

/// Shared validation for attribution entry points.
pub(crate) fn validate_inputs(net: &Network, x: ArrayView1<f64>, target: usize) -> Result<()> {
    if x.len() != net.input_dim() {
        return Err(Error::Dimension(format!(
            "sample has {} features but the network expects {}",
            x.len(),
            net.input_dim()
        )));
    }
    if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("input contains {bad}")));
    }
    if target >= net.output_dim() {
        return Err(Error::Config(format!(
            "target {target} out of range for {} outputs",
            net.output_dim()
        )));
    }
    Ok(())
}

/// Interprets a flat feature vector as a square image.
pub(crate) fn image_side(len: usize) -> Result<usize> {
    let side = (len as f64).sqrt().round() as usize;
    if side > 0 && side * side == len {
        Ok(side)
    } else {
        Err(Error::Dimension(format!(
            "input length {len} is not a perfect square image"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_network, Activation, LayerSpec};
    use tempfile::tempdir;

    fn small_net() -> Network {
        let specs = vec![
            LayerSpec::new(4, 5, Activation::Relu),
            LayerSpec::new(5, 3, Activation::Softmax),
        ];
        init_network(&specs, 11).unwrap()
    }

    #[test]
    fn method_names_round_trip() {
        for method in Method::ALL {
            assert_eq!(method.as_str().parse::<Method>().unwrap(), method);
            assert_eq!(method.to_string(), method.as_str());
        }
    }

    #[test]
    fn unknown_method_name_is_rejected_with_the_valid_list() {
        let err = "saliency".parse::<Method>().unwrap_err();
        let message = err.to_string();
        assert!(message.contains("saliency"));
        assert!(message.contains("xwp_c"));
    }

    #[test]
    fn method_serde_uses_the_command_line_names() {
        let json = serde_json::to_string(&Method::IntegratedGradients).unwrap();
        assert_eq!(json, "\"ig\"");
        let back: Method = serde_json::from_str("\"xwp_c\"").unwrap();
        assert_eq!(back, Method::XwpC);
    }

    #[test]
    fn predicted_target_is_the_probability_argmax() {
        let net = small_net();
        let x = ndarray::array![0.2, -0.3, 0.8, 0.1];
        let p = net.probabilities(x.view()).unwrap();
        let expect = (0..3).max_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap()).unwrap();
        let got = resolve_target(&net, x.view(), TargetMode::Predicted, None).unwrap();
        assert_eq!(got, expect);
    }

    #[test]
    fn true_label_target_requires_a_label_in_range() {
        let net = small_net();
        let x = ndarray::array![0.2, -0.3, 0.8, 0.1];
        assert_eq!(
            resolve_target(&net, x.view(), TargetMode::TrueLabel, Some(2)).unwrap(),
            2
        );
        assert!(resolve_target(&net, x.view(), TargetMode::TrueLabel, None).is_err());
        assert!(resolve_target(&net, x.view(), TargetMode::TrueLabel, Some(3)).is_err());
    }

    #[test]
    fn indicator_contrast_matches_a_literal_signed_sum() {
        let a = [0.5, 0.2, 0.3];
        let b = [0.1, 0.7, 0.2];
        let expect = (0.2 - 0.7) - (0.5 - 0.1) - (0.3 - 0.2);
        assert_eq!(indicator_contrast(1, &a, &b), expect);
    }

    #[test]
    fn jsonl_round_trip_preserves_rows_and_order() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("maps.jsonl");
        let maps = vec![
            AttributionMap {
                method: "xwp".into(),
                sample_id: 3,
                target: 1,
                target_mode: TargetMode::Predicted,
                scores: vec![0.25, -0.5, 0.0, 1.0 / 3.0],
            },
            AttributionMap {
                method: "xwp_c_negated".into(),
                sample_id: 4,
                target: 0,
                target_mode: TargetMode::TrueLabel,
                scores: vec![1e-300, -0.0, 2.5],
            },
        ];
        write_attribution_jsonl(&path, &maps).unwrap();
        let back = read_attribution_jsonl(&path).unwrap();
        assert_eq!(back, maps);
    }

    #[test]
    fn image_side_accepts_only_perfect_squares() {
        assert_eq!(image_side(784).unwrap(), 28);
        assert_eq!(image_side(9).unwrap(), 3);
        assert!(image_side(10).is_err());
        assert!(image_side(0).is_err());
    }

    #[test]
    fn validate_inputs_rejects_bad_shapes_targets_and_values() {
        let net = small_net();
        let short = ndarray::array![0.1, 0.2];
        assert!(validate_inputs(&net, short.view(), 0).is_err());
        let nan = ndarray::array![0.1, f64::NAN, 0.0, 0.0];
        assert!(validate_inputs(&net, nan.view(), 0).is_err());
        let x = ndarray::array![0.1, 0.2, 0.3, 0.4];
        assert!(validate_inputs(&net, x.view(), 3).is_err());
        assert!(validate_inputs(&net, x.view(), 2).is_ok());
    }
}
