//! Shapley value estimation by permutation sampling.
//!
//! Features are toggled from a constant baseline to their actual values in
//! random orders, and each feature is credited with the change it causes in
//! the chosen output unit. Because toggling feature `i` shifts the first
//! pre-activation by `(x_i - baseline) * W[0] row i`, a walk through one
//! permutation costs one incremental row update plus one pass through the
//! deeper layers per feature, never a full first-layer product.

use ndarray::{Array1, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::validate_inputs;
use crate::error::{Error, Result};
use crate::nn::{Network, OutputUnit};

/// Sampling parameters for [`shapley_scores`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapleyConfig {
    /// Number of random feature orders to average over.
    pub permutations: usize,
    /// Input value a feature takes while absent from the coalition.
    pub baseline: f64,
    /// Output quantity whose marginal changes are credited.
    pub at: OutputUnit,
    /// Seed for the permutation stream.
    pub seed: u64,
}

impl Default for ShapleyConfig {
    fn default() -> Self {
        ShapleyConfig {
            permutations: 200,
            baseline: 0.0,
            at: OutputUnit::Probability,
            seed: 0,
        }
    }
}

/// Estimates Shapley values for every feature of one sample.
///
/// Each sampled permutation starts from the all-baseline input and inserts
/// features in permuted order; a feature's credit is the resulting change in
/// the target's output unit, and its score is the mean credit over all
/// permutations. Features already equal to the baseline can never change
/// the walk and score exactly `0.0`.
pub fn shapley_scores(
    net: &Network,
    x: ArrayView1<f64>,
    target: usize,
    cfg: &ShapleyConfig,
) -> Result<Array1<f64>> {
    validate_inputs(net, x, target)?;
    if cfg.permutations == 0 {
        return Err(Error::Config("permutations must be at least 1".into()));
    }
    if !cfg.baseline.is_finite() {
        return Err(Error::NonFinite(format!("baseline {}", cfg.baseline)));
    }

    let active: Vec<usize> = x
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != cfg.baseline)
        .map(|(i, _)| i)
        .collect();
    let mut scores = Array1::zeros(x.len());
    if active.is_empty() {
        return Ok(scores);
    }

    let baseline_input = vec![cfg.baseline; x.len()];
    let base_first = net.first_preactivation(&baseline_input);
    let mut scratch = net.scratch();
    let base_value = net.outputs_from_first(&base_first, cfg.at, &mut scratch)[target];

    let weights = &net.weights()[0];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut first = base_first.clone();
    let mut credits = vec![0.0; x.len()];
    for _ in 0..cfg.permutations {
        let mut order = active.clone();
        order.shuffle(&mut rng);
        first.copy_from_slice(&base_first);
        let mut previous = base_value;
        for &i in &order {
            let step = x[i] - cfg.baseline;
            let row = weights.row(i);
            let row = row.to_slice().expect("weights are row-major");
            for (f, &w) in first.iter_mut().zip(row) {
                *f += step * w;
            }
            let value = net.outputs_from_first(&first, cfg.at, &mut scratch)[target];
            credits[i] += value - previous;
            previous = value;
        }
    }
    for &i in &active {
        scores[i] = credits[i] / cfg.permutations as f64;
    }
    Ok(scores)
}
