//! Backpropagation for the cross-entropy objective and input-space
//! gradients of a chosen output unit.

use ndarray::{Array1, Array2, ArrayView1, Axis};

use super::{Activation, ForwardTrace, Network, OutputUnit};
use crate::error::{Error, Result};

/// Parameter gradients, one entry per layer, shaped like the parameters.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Cross-entropy loss and full parameter gradients for one labeled sample.
///
/// The loss is `-ln p_label` where `p` is the softmax of the final
/// pre-activation, so the final layer's declared activation does not enter.
pub fn backprop(net: &Network, x: ArrayView1<f64>, label: usize) -> Result<(Gradients, f64)> {
    if label >= net.output_dim() {
        return Err(Error::Config(format!(
            "label {label} out of range for {} outputs",
            net.output_dim()
        )));
    }
    let trace = net.forward(x)?;
    let loss = -trace.probabilities[label].ln();
    let mut delta_last = trace.probabilities.clone();
    delta_last[label] -= 1.0;
    let deltas = backward_deltas(net, &trace, delta_last);
    let mut weights = Vec::with_capacity(net.n_layers());
    let mut biases = Vec::with_capacity(net.n_layers());
    for l in 0..net.n_layers() {
        let z = trace.activations[l].view().insert_axis(Axis(1));
        let d = deltas[l].view().insert_axis(Axis(0));
        weights.push(z.dot(&d));
        biases.push(deltas[l].clone());
    }
    Ok((Gradients { weights, biases }, loss))
}

/// Gradient of one output unit with respect to the input vector.
///
/// With [`OutputUnit::Logit`] this differentiates the final pre-activation
/// of class `target`; with [`OutputUnit::Probability`] the softmax
/// probability of that class.
pub fn input_gradient(
    net: &Network,
    x: ArrayView1<f64>,
    target: usize,
    unit: OutputUnit,
) -> Result<Array1<f64>> {
    if target >= net.output_dim() {
        return Err(Error::Config(format!(
            "target {target} out of range for {} outputs",
            net.output_dim()
        )));
    }
    let trace = net.forward(x)?;
    let k = net.output_dim();
    let delta_last = match unit {
        OutputUnit::Logit => {
            let mut d = Array1::zeros(k);
            d[target] = 1.0;
            d
        }
        OutputUnit::Probability => {
            let p = &trace.probabilities;
            let pt = p[target];
            let mut d = p.mapv(|pc| -pt * pc);
            d[target] += pt;
            d
        }
    };
    let deltas = backward_deltas(net, &trace, delta_last);
    Ok(net.weights()[0].dot(&deltas[0]))
}

/// Propagates a gradient at the final pre-activation back to the
/// pre-activation of every layer.
fn backward_deltas(net: &Network, trace: &ForwardTrace, delta_last: Array1<f64>) -> Vec<Array1<f64>> {
    let n = net.n_layers();
    let mut deltas = vec![Array1::zeros(0); n];
    deltas[n - 1] = delta_last;
    for l in (1..n).rev() {
        let mut propagated = net.weights()[l].dot(&deltas[l]);
        if net.specs()[l - 1].activation == Activation::Relu {
            for (v, &pre) in propagated.iter_mut().zip(trace.pre_activations[l - 1].iter()) {
                if pre <= 0.0 {
                    *v = 0.0;
                }
            }
        }
        deltas[l - 1] = propagated;
    }
    deltas
}
