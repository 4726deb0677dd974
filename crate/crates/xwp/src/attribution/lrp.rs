//! Layer-wise relevance propagation with an epsilon stabilizer.
//!
//! Relevance starts as the target's final pre-activation and flows backward
//! layer by layer: each unit's relevance is split over its inputs in
//! proportion to their signed contributions, with a small epsilon added to
//! every denominator to keep near-zero pre-activations from blowing up.
//! The rule assumes rectified hidden layers, so other hidden activations
//! are rejected.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use super::validate_inputs;
use crate::error::{Error, Result};
use crate::nn::{Activation, Network};

/// Stabilizer strength for [`lrp_scores`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LrpConfig {
    /// Magnitude added to each denominator, carrying the sign of the
    /// pre-activation it stabilizes.
    pub epsilon: f64,
}

impl Default for LrpConfig {
    fn default() -> Self {
        LrpConfig { epsilon: 1e-6 }
    }
}

/// Distributes the target logit's relevance back to the input features.
///
/// At every layer, input `i` receives
/// `z_i * sum_j w_ij * R_j / (pre_j + epsilon * sign(pre_j))`, where `z` is
/// the layer's input, `pre` its pre-activation, and `sign(0) = +1`. An
/// input feature with value exactly zero therefore scores exactly `0.0`.
pub fn lrp_scores(
    net: &Network,
    x: ArrayView1<f64>,
    target: usize,
    cfg: &LrpConfig,
) -> Result<Array1<f64>> {
    validate_inputs(net, x, target)?;
    if !(cfg.epsilon > 0.0 && cfg.epsilon.is_finite()) {
        return Err(Error::Config(format!(
            "epsilon {} must be positive and finite",
            cfg.epsilon
        )));
    }
    for (l, spec) in net.specs().iter().enumerate().take(net.n_layers() - 1) {
        if spec.activation != Activation::Relu {
            return Err(Error::Config(format!(
                "relevance propagation needs rectified hidden layers, layer {l} is {:?}",
                spec.activation
            )));
        }
    }

    let trace = net.forward(x)?;
    let last = net.n_layers() - 1;
    let mut relevance = Array1::zeros(net.output_dim());
    relevance[target] = trace.pre_activations[last][target];
    for l in (0..net.n_layers()).rev() {
        let pre = &trace.pre_activations[l];
        let z = &trace.activations[l];
        let factors = Array1::from_iter(pre.iter().zip(relevance.iter()).map(|(&p, &r)| {
            let stabilizer = if p >= 0.0 { cfg.epsilon } else { -cfg.epsilon };
            r / (p + stabilizer)
        }));
        let weighted = net.weights()[l].dot(&factors);
        relevance = z * &weighted;
    }
    Ok(relevance)
}
