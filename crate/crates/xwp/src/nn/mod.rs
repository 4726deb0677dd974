//! Fully connected networks with explicit layer geometry, a paired
//! trained/untrained model type, and deterministic forward kernels.
//!
//! Layer `l` maps an activation vector of length `in_dim` to `out_dim`
//! through a weight matrix of shape `(in_dim, out_dim)` plus a bias row, so
//! the weights attached to input feature `i` are exactly row `i` of the
//! first layer's matrix. All single-sample forwards in the crate go through
//! the same accumulation kernel, which keeps exactness checks between the
//! full and the incrementally updated forward paths meaningful.

use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod checkpoint;
pub mod gradients;
pub mod perturb;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use gradients::{backprop, input_gradient, Gradients};
pub use perturb::{substitute_input_weights, SubstitutionMode};
pub use train::{evaluate_accuracy, train, Optimizer, TrainConfig};

/// Elementwise nonlinearity applied after a layer's affine map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Softmax,
    Identity,
}

impl Activation {
    /// One-byte encoding used by the checkpoint format.
    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Softmax => 1,
            Activation::Identity => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Activation::Relu),
            1 => Ok(Activation::Softmax),
            2 => Ok(Activation::Identity),
            other => Err(Error::Checkpoint(format!(
                "unknown activation code {other}"
            ))),
        }
    }
}

/// Geometry and nonlinearity of one fully connected layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        LayerSpec {
            in_dim,
            out_dim,
            activation,
        }
    }
}

/// Checks dimensions chain and that softmax appears only on the final layer.
fn validate_chain(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::Config("network needs at least one layer".into()));
    }
    for (l, spec) in specs.iter().enumerate() {
        if spec.in_dim == 0 || spec.out_dim == 0 {
            return Err(Error::Config(format!(
                "layer {l} has a zero dimension ({} -> {})",
                spec.in_dim, spec.out_dim
            )));
        }
        if l > 0 && specs[l - 1].out_dim != spec.in_dim {
            return Err(Error::Dimension(format!(
                "layer {l} expects {} inputs but layer {} produces {}",
                spec.in_dim,
                l - 1,
                specs[l - 1].out_dim
            )));
        }
        if spec.activation == Activation::Softmax && l != specs.len() - 1 {
            return Err(Error::Config(format!(
                "softmax is only valid on the final layer, found on layer {l}"
            )));
        }
    }
    Ok(())
}

/// Chain validation plus the classifier placement rule: relu must not be the
/// final activation. Used by [`init_network`] and training; hand-built test
/// networks may relax this through [`Network::from_parts`].
pub(crate) fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
    validate_chain(specs)?;
    let last = specs.len() - 1;
    if specs[last].activation == Activation::Relu {
        return Err(Error::Config(
            "relu is not a valid final activation for a classifier".into(),
        ));
    }
    Ok(())
}

/// A fully connected network. Weight matrix `l` has shape
/// `(specs[l].in_dim, specs[l].out_dim)`; biases are one row per layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    specs: Vec<LayerSpec>,
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
}

impl Network {
    /// Builds a network from explicit parameters, validating shapes,
    /// finiteness, and softmax placement. Unlike [`init_network`] this
    /// accepts a relu final layer so small hand-built networks can be used
    /// in numerical checks.
    pub fn from_parts(
        specs: Vec<LayerSpec>,
        weights: Vec<Array2<f64>>,
        biases: Vec<Array1<f64>>,
    ) -> Result<Self> {
        validate_chain(&specs)?;
        if weights.len() != specs.len() || biases.len() != specs.len() {
            return Err(Error::Dimension(format!(
                "{} layer specs but {} weight matrices and {} bias rows",
                specs.len(),
                weights.len(),
                biases.len()
            )));
        }
        for (l, spec) in specs.iter().enumerate() {
            if weights[l].dim() != (spec.in_dim, spec.out_dim) {
                return Err(Error::Dimension(format!(
                    "layer {l} weights are {:?}, expected ({}, {})",
                    weights[l].dim(),
                    spec.in_dim,
                    spec.out_dim
                )));
            }
            if biases[l].len() != spec.out_dim {
                return Err(Error::Dimension(format!(
                    "layer {l} biases have length {}, expected {}",
                    biases[l].len(),
                    spec.out_dim
                )));
            }
            if weights[l].iter().any(|v| !v.is_finite())
                || biases[l].iter().any(|v| !v.is_finite())
            {
                return Err(Error::NonFinite(format!("parameters of layer {l}")));
            }
            if !weights[l].is_standard_layout() {
                return Err(Error::Config(format!(
                    "layer {l} weights must be in row-major layout"
                )));
            }
        }
        Ok(Network {
            specs,
            weights,
            biases,
        })
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub fn n_layers(&self) -> usize {
        self.specs.len()
    }

    pub fn input_dim(&self) -> usize {
        self.specs[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.specs[self.specs.len() - 1].out_dim
    }

    fn check_input(&self, x: &ArrayView1<f64>) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "input has {} values, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network input".into()));
        }
        Ok(())
    }

    /// Runs the network and records every intermediate vector.
    ///
    /// `activations[0]` is the input, `pre_activations[l]` is the affine
    /// output of layer `l`, and `activations[l + 1]` its nonlinearity.
    /// `probabilities` is always the softmax of the final pre-activation,
    /// regardless of the final layer's declared activation.
    pub fn forward(&self, x: ArrayView1<f64>) -> Result<ForwardTrace> {
        self.check_input(&x)?;
        let input = x.to_vec();
        let mut activations = vec![Array1::from_vec(input.clone())];
        let mut pre_activations = Vec::with_capacity(self.specs.len());
        let mut z = input;
        for l in 0..self.specs.len() {
            let mut pre = vec![0.0; self.specs[l].out_dim];
            affine_into(&self.weights[l], &self.biases[l], &z, &mut pre);
            pre_activations.push(Array1::from_vec(pre.clone()));
            apply_activation_in_place(self.specs[l].activation, &mut pre);
            activations.push(Array1::from_vec(pre.clone()));
            z = pre;
        }
        let mut probs = pre_activations[self.specs.len() - 1].to_vec();
        softmax_in_place(&mut probs);
        Ok(ForwardTrace {
            activations,
            pre_activations,
            probabilities: Array1::from_vec(probs),
        })
    }

    /// Class probabilities for one input (validating, allocating wrapper
    /// around [`Network::probabilities_into`]).
    pub fn probabilities(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        self.check_input(&x)?;
        let mut scratch = self.scratch();
        let x = x.to_vec();
        Ok(Array1::from_vec(
            self.probabilities_into(&x, &mut scratch).to_vec(),
        ))
    }

    /// Allocates reusable buffers for the fast forward entry points.
    pub fn scratch(&self) -> ForwardScratch {
        ForwardScratch {
            bufs: self
                .specs
                .iter()
                .map(|s| vec![0.0; s.out_dim])
                .collect(),
        }
    }

    /// Class probabilities without validation or allocation. `x` must have
    /// `input_dim` finite values and `scratch` must come from
    /// [`Network::scratch`] on this network.
    pub fn probabilities_into<'s>(&self, x: &[f64], scratch: &'s mut ForwardScratch) -> &'s [f64] {
        affine_into(&self.weights[0], &self.biases[0], x, &mut scratch.bufs[0]);
        self.run_deep(scratch, OutputUnit::Probability)
    }

    /// The first layer's affine output for `x`, before any nonlinearity.
    pub fn first_preactivation(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.specs[0].out_dim];
        affine_into(&self.weights[0], &self.biases[0], x, &mut out);
        out
    }

    /// Resumes the forward pass from a first-layer pre-activation. Together
    /// with [`Network::first_preactivation`] this lets callers apply rank-1
    /// or incremental updates to the first layer without redoing its full
    /// matrix product.
    pub fn outputs_from_first<'s>(
        &self,
        first_pre: &[f64],
        unit: OutputUnit,
        scratch: &'s mut ForwardScratch,
    ) -> &'s [f64] {
        scratch.bufs[0].copy_from_slice(first_pre);
        self.run_deep(scratch, unit)
    }

    /// Probability variant of [`Network::outputs_from_first`].
    pub fn probabilities_from_first<'s>(
        &self,
        first_pre: &[f64],
        scratch: &'s mut ForwardScratch,
    ) -> &'s [f64] {
        self.outputs_from_first(first_pre, OutputUnit::Probability, scratch)
    }

    fn run_deep<'s>(&self, scratch: &'s mut ForwardScratch, unit: OutputUnit) -> &'s [f64] {
        let n = self.specs.len();
        for l in 0..n - 1 {
            let (head, tail) = scratch.bufs.split_at_mut(l + 1);
            let z = &mut head[l];
            apply_activation_in_place(self.specs[l].activation, z);
            affine_into(&self.weights[l + 1], &self.biases[l + 1], z, &mut tail[0]);
        }
        let last = &mut scratch.bufs[n - 1];
        if unit == OutputUnit::Probability {
            softmax_in_place(last);
        }
        last
    }
}

/// Which output quantity a method reads: softmax probabilities or the raw
/// final pre-activation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputUnit {
    Probability,
    Logit,
}

/// Reusable buffers for the non-allocating forward entry points.
#[derive(Clone, Debug)]
pub struct ForwardScratch {
    bufs: Vec<Vec<f64>>,
}

/// Every intermediate vector of one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    /// `activations[0]` is the input; `activations[l + 1]` is layer `l`'s
    /// output after its nonlinearity.
    pub activations: Vec<Array1<f64>>,
    /// `pre_activations[l]` is the affine output of layer `l`.
    pub pre_activations: Vec<Array1<f64>>,
    /// Softmax of the final pre-activation.
    pub probabilities: Array1<f64>,
}

/// A trained network together with the untrained network it started from.
/// Both share the same layer specs and the same `seed`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelPair {
    pub trained: Network,
    pub initial: Network,
    pub seed: u64,
    pub metadata: PairMetadata,
}

impl ModelPair {
    pub fn new(
        trained: Network,
        initial: Network,
        seed: u64,
        metadata: PairMetadata,
    ) -> Result<Self> {
        if trained.specs != initial.specs {
            return Err(Error::Config(
                "trained and initial networks have different layer specs".into(),
            ));
        }
        Ok(ModelPair {
            trained,
            initial,
            seed,
            metadata,
        })
    }

    pub(crate) fn check_consistent(&self) -> Result<()> {
        if self.trained.specs != self.initial.specs {
            return Err(Error::Config(
                "model pair networks have diverging layer specs".into(),
            ));
        }
        Ok(())
    }
}

/// Provenance carried inside a checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairMetadata {
    pub dataset: String,
    pub epochs: u32,
    pub test_accuracy: f64,
}

/// Draws a fresh network for the given specs: weights uniform in
/// `[-sqrt(6 / in_dim), sqrt(6 / in_dim)]` per layer, biases zero. The draw
/// order (layers in order, each matrix row-major) is fixed, so the result is
/// bit-identical for identical `(specs, seed)`.
pub fn init_network(specs: &[LayerSpec], seed: u64) -> Result<Network> {
    validate_specs(specs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = Vec::with_capacity(specs.len());
    let mut biases = Vec::with_capacity(specs.len());
    for spec in specs {
        let bound = (6.0 / spec.in_dim as f64).sqrt();
        let mut values = Vec::with_capacity(spec.in_dim * spec.out_dim);
        for _ in 0..spec.in_dim * spec.out_dim {
            values.push(bound * (2.0 * rng.random::<f64>() - 1.0));
        }
        let w = Array2::from_shape_vec((spec.in_dim, spec.out_dim), values)
            .expect("shape matches value count");
        weights.push(w);
        biases.push(Array1::zeros(spec.out_dim));
    }
    Network::from_parts(specs.to_vec(), weights, biases)
}

/// Numerically stable softmax of a logit vector.
pub fn softmax(logits: ArrayView1<f64>) -> Array1<f64> {
    let mut values = logits.to_vec();
    softmax_in_place(&mut values);
    Array1::from_vec(values)
}

pub(crate) fn softmax_in_place(values: &mut [f64]) {
    let max = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut sum = 0.0;
    for v in values.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in values.iter_mut() {
        *v /= sum;
    }
}

/// `out = z * W + b`, accumulating row by row and skipping exactly-zero
/// inputs. Zero entries of `z` therefore contribute nothing, bit for bit,
/// which the exactness guarantees of the attribution methods rely on.
pub(crate) fn affine_into(w: &Array2<f64>, b: &Array1<f64>, z: &[f64], out: &mut [f64]) {
    debug_assert_eq!(w.nrows(), z.len());
    debug_assert_eq!(w.ncols(), out.len());
    out.copy_from_slice(b.as_slice().expect("biases are contiguous"));
    for (&zi, row) in z.iter().zip(w.rows()) {
        if zi != 0.0 {
            let row = row.to_slice().expect("weights are row-major");
            for (o, &wij) in out.iter_mut().zip(row) {
                *o += zi * wij;
            }
        }
    }
}

pub(crate) fn apply_activation_in_place(activation: Activation, values: &mut [f64]) {
    match activation {
        Activation::Relu => {
            for v in values.iter_mut() {
                *v = if *v > 0.0 { *v } else { 0.0 };
            }
        }
        Activation::Softmax => softmax_in_place(values),
        Activation::Identity => {}
    }
}
