//! Mini-batch cross-entropy training with SGD or Adam.
//!
//! Training is a pure function of `(specs, datasets, config)`: the weight
//! draw, the per-epoch shuffles, and the update arithmetic all derive from
//! `config.seed`, so two runs with identical inputs produce bit-identical
//! model pairs.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{init_network, softmax_in_place, validate_specs, Activation, LayerSpec, ModelPair, Network, PairMetadata};
use crate::data::ImageDataset;
use crate::error::{Error, Result};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Gradient update rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam,
}

/// Hyperparameters for [`train`]. `epochs: 0` is allowed and produces a
/// pair whose trained network still equals its initialization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: u32,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 64,
            learning_rate: 1e-3,
            optimizer: Optimizer::Adam,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::Config(format!(
                "learning_rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Trains a fresh network and returns it as a [`ModelPair`] together with
/// the test accuracy measured after each epoch.
pub fn train(
    specs: &[LayerSpec],
    train_set: &ImageDataset,
    test_set: &ImageDataset,
    config: &TrainConfig,
) -> Result<(ModelPair, Vec<f64>)> {
    validate_specs(specs)?;
    config.validate()?;
    for (set, role) in [(train_set, "train"), (test_set, "test")] {
        if set.n_features() != specs[0].in_dim {
            return Err(Error::Dimension(format!(
                "{role} set has {} features, network expects {}",
                set.n_features(),
                specs[0].in_dim
            )));
        }
        let out_dim = specs[specs.len() - 1].out_dim;
        if let Some(&bad) = set.labels().iter().find(|&&l| usize::from(l) >= out_dim) {
            return Err(Error::Config(format!(
                "{role} set contains label {bad} but the network has {out_dim} outputs"
            )));
        }
    }

    let initial = init_network(specs, config.seed)?;
    let mut net = initial.clone();
    let mut optimizer = OptimizerState::new(&net, config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(config.epochs as usize);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            train_batch(&mut net, train_set, batch, &mut optimizer);
        }
        history.push(evaluate_accuracy(&net, test_set));
    }

    let test_accuracy = history
        .last()
        .copied()
        .unwrap_or_else(|| evaluate_accuracy(&net, test_set));
    let metadata = PairMetadata {
        dataset: train_set.name().to_string(),
        epochs: config.epochs,
        test_accuracy,
    };
    let pair = ModelPair::new(net, initial, config.seed, metadata)?;
    Ok((pair, history))
}

/// Fraction of samples whose highest-probability class equals the label.
/// Argmax ties resolve to the lowest class index.
pub fn evaluate_accuracy(net: &Network, set: &ImageDataset) -> f64 {
    let mut correct = 0usize;
    let all: Vec<usize> = (0..set.len()).collect();
    for chunk in all.chunks(512) {
        let logits = batch_logits(net, &set.images().select(Axis(0), chunk));
        for (row, &sample) in logits.rows().into_iter().zip(chunk) {
            let mut best = 0usize;
            let mut best_value = f64::NEG_INFINITY;
            for (j, &v) in row.iter().enumerate() {
                if v > best_value {
                    best_value = v;
                    best = j;
                }
            }
            if best == usize::from(set.label(sample)) {
                correct += 1;
            }
        }
    }
    correct as f64 / set.len() as f64
}

/// Final pre-activations for a batch of inputs (row per sample).
fn batch_logits(net: &Network, x: &Array2<f64>) -> Array2<f64> {
    let n = net.n_layers();
    let mut z = x.clone();
    for l in 0..n {
        let mut pre = z.dot(&net.weights[l]) + &net.biases[l];
        if l == n - 1 {
            return pre;
        }
        apply_hidden_activation(net.specs[l].activation, &mut pre);
        z = pre;
    }
    unreachable!("networks have at least one layer")
}

fn apply_hidden_activation(activation: Activation, values: &mut Array2<f64>) {
    if activation == Activation::Relu {
        values.mapv_inplace(|v| if v > 0.0 { v } else { 0.0 });
    }
}

fn train_batch(net: &mut Network, set: &ImageDataset, batch: &[usize], optimizer: &mut OptimizerState) {
    let n = net.n_layers();
    let b = batch.len() as f64;
    let x = set.images().select(Axis(0), batch);

    let mut zs: Vec<Array2<f64>> = Vec::with_capacity(n);
    let mut pres: Vec<Array2<f64>> = Vec::with_capacity(n);
    zs.push(x);
    for l in 0..n {
        let pre = zs[l].dot(&net.weights[l]) + &net.biases[l];
        pres.push(pre);
        if l < n - 1 {
            let mut z = pres[l].clone();
            apply_hidden_activation(net.specs[l].activation, &mut z);
            zs.push(z);
        }
    }

    let mut probs = pres[n - 1].clone();
    for mut row in probs.rows_mut() {
        softmax_in_place(row.as_slice_mut().expect("batch rows are contiguous"));
    }
    let mut delta = probs;
    for (mut row, &sample) in delta.rows_mut().into_iter().zip(batch) {
        row[usize::from(set.label(sample))] -= 1.0;
    }
    delta.mapv_inplace(|v| v / b);

    optimizer.begin_step();
    for l in (0..n).rev() {
        let grad_w = zs[l].t().dot(&delta);
        let grad_b = delta.sum_axis(Axis(0));
        let next_delta = if l > 0 {
            let mut d = delta.dot(&net.weights[l].t());
            if net.specs[l - 1].activation == Activation::Relu {
                for (dv, &pre) in d.iter_mut().zip(pres[l - 1].iter()) {
                    if pre <= 0.0 {
                        *dv = 0.0;
                    }
                }
            }
            Some(d)
        } else {
            None
        };
        optimizer.apply(l, &mut net.weights[l], &mut net.biases[l], &grad_w, &grad_b);
        if let Some(d) = next_delta {
            delta = d;
        }
    }
}

struct OptimizerState {
    rule: Optimizer,
    learning_rate: f64,
    step: u64,
    m_weights: Vec<Array2<f64>>,
    v_weights: Vec<Array2<f64>>,
    m_biases: Vec<Array1<f64>>,
    v_biases: Vec<Array1<f64>>,
}

impl OptimizerState {
    fn new(net: &Network, config: &TrainConfig) -> Self {
        let zeros_w: Vec<Array2<f64>> = net.weights.iter().map(|w| Array2::zeros(w.dim())).collect();
        let zeros_b: Vec<Array1<f64>> = net.biases.iter().map(|b| Array1::zeros(b.len())).collect();
        OptimizerState {
            rule: config.optimizer,
            learning_rate: config.learning_rate,
            step: 0,
            m_weights: zeros_w.clone(),
            v_weights: zeros_w,
            m_biases: zeros_b.clone(),
            v_biases: zeros_b,
        }
    }

    fn begin_step(&mut self) {
        self.step += 1;
    }

    fn apply(
        &mut self,
        layer: usize,
        weights: &mut Array2<f64>,
        biases: &mut Array1<f64>,
        grad_w: &Array2<f64>,
        grad_b: &Array1<f64>,
    ) {
        match self.rule {
            Optimizer::Sgd => {
                weights.zip_mut_with(grad_w, |w, &g| *w -= self.learning_rate * g);
                biases.zip_mut_with(grad_b, |b, &g| *b -= self.learning_rate * g);
            }
            Optimizer::Adam => {
                let bias1 = 1.0 - ADAM_BETA1.powi(self.step as i32);
                let bias2 = 1.0 - ADAM_BETA2.powi(self.step as i32);
                let lr = self.learning_rate;
                adam_update(
                    weights.as_slice_mut().expect("weights are contiguous"),
                    grad_w.as_slice().expect("gradients are contiguous"),
                    self.m_weights[layer].as_slice_mut().unwrap(),
                    self.v_weights[layer].as_slice_mut().unwrap(),
                    lr,
                    bias1,
                    bias2,
                );
                adam_update(
                    biases.as_slice_mut().expect("biases are contiguous"),
                    grad_b.as_slice().expect("gradients are contiguous"),
                    self.m_biases[layer].as_slice_mut().unwrap(),
                    self.v_biases[layer].as_slice_mut().unwrap(),
                    lr,
                    bias1,
                    bias2,
                );
            }
        }
    }
}

fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    lr: f64,
    bias1: f64,
    bias2: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g;
        v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = m[i] / bias1;
        let v_hat = v[i] / bias2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{split, synthetic};

    fn small_specs(in_dim: usize) -> Vec<LayerSpec> {
        vec![
            LayerSpec::new(in_dim, 24, Activation::Relu),
            LayerSpec::new(24, 10, Activation::Softmax),
        ]
    }

    fn nets_bit_equal(a: &Network, b: &Network) -> bool {
        a.weights().iter().zip(b.weights()).all(|(x, y)| {
            x.iter().zip(y.iter()).all(|(u, v)| u.to_bits() == v.to_bits())
        }) && a.biases().iter().zip(b.biases()).all(|(x, y)| {
            x.iter().zip(y.iter()).all(|(u, v)| u.to_bits() == v.to_bits())
        })
    }

    #[test]
    fn zero_epochs_is_a_no_op_pair() {
        let data = synthetic::bars(40, 0);
        let (train_set, test_set) = split(&data, 0.25, 0).unwrap();
        let config = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let (pair, history) = train(&small_specs(784), &train_set, &test_set, &config).unwrap();
        assert!(history.is_empty());
        assert!(nets_bit_equal(&pair.trained, &pair.initial));
        assert_eq!(pair.metadata.epochs, 0);
    }

    #[test]
    fn identical_configs_give_bit_identical_pairs() {
        let data = synthetic::bars(80, 3);
        let (train_set, test_set) = split(&data, 0.25, 1).unwrap();
        let config = TrainConfig {
            epochs: 2,
            batch_size: 16,
            ..TrainConfig::default()
        };
        let (a, history_a) = train(&small_specs(784), &train_set, &test_set, &config).unwrap();
        let (b, history_b) = train(&small_specs(784), &train_set, &test_set, &config).unwrap();
        assert!(nets_bit_equal(&a.trained, &b.trained));
        assert!(nets_bit_equal(&a.initial, &b.initial));
        assert_eq!(history_a, history_b);

        let other_seed = TrainConfig { seed: 9, ..config };
        let (c, _) = train(&small_specs(784), &train_set, &test_set, &other_seed).unwrap();
        assert!(!nets_bit_equal(&a.trained, &c.trained));
    }

    #[test]
    fn adam_separates_the_synthetic_classes() {
        let data = synthetic::bars(600, 7);
        let (train_set, test_set) = split(&data, 0.2, 7).unwrap();
        let config = TrainConfig {
            epochs: 6,
            ..TrainConfig::default()
        };
        let (pair, history) = train(&small_specs(784), &train_set, &test_set, &config).unwrap();
        assert_eq!(history.len(), 6);
        assert!(
            pair.metadata.test_accuracy >= 0.95,
            "accuracy {} too low",
            pair.metadata.test_accuracy
        );
        assert_eq!(pair.metadata.dataset, "synthetic_bars");
    }

    #[test]
    fn sgd_also_learns() {
        let data = synthetic::bars(400, 2);
        let (train_set, test_set) = split(&data, 0.2, 2).unwrap();
        let config = TrainConfig {
            epochs: 4,
            optimizer: Optimizer::Sgd,
            learning_rate: 0.5,
            ..TrainConfig::default()
        };
        let (pair, history) = train(&small_specs(784), &train_set, &test_set, &config).unwrap();
        let untrained = evaluate_accuracy(&pair.initial, &test_set);
        assert!(
            history.last().unwrap() > &untrained,
            "sgd did not improve on {untrained}"
        );
    }

    #[test]
    fn label_outside_output_range_is_rejected() {
        let data = synthetic::bars(40, 0);
        let (train_set, test_set) = split(&data, 0.25, 0).unwrap();
        let narrow = vec![
            LayerSpec::new(784, 8, Activation::Relu),
            LayerSpec::new(8, 4, Activation::Softmax),
        ];
        assert!(matches!(
            train(&narrow, &train_set, &test_set, &TrainConfig::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn invalid_hyperparameters_are_rejected() {
        let data = synthetic::bars(20, 0);
        let (train_set, test_set) = split(&data, 0.25, 0).unwrap();
        let zero_batch = TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        };
        assert!(train(&small_specs(784), &train_set, &test_set, &zero_batch).is_err());
        let bad_lr = TrainConfig {
            learning_rate: -1.0,
            ..TrainConfig::default()
        };
        assert!(train(&small_specs(784), &train_set, &test_set, &bad_lr).is_err());
    }

    #[test]
    fn accuracy_counts_argmax_matches() {
        let net = Network::from_parts(
            vec![LayerSpec::new(2, 2, Activation::Softmax)],
            vec![ndarray::array![[1.0, 0.0], [0.0, 1.0]]],
            vec![ndarray::array![0.0, 0.0]],
        )
        .unwrap();
        let images = ndarray::array![[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]];
        let data = ImageDataset::new("acc", crate::data::Subset::Full, images, vec![0, 1, 1]).unwrap();
        let accuracy = evaluate_accuracy(&net, &data);
        assert!((accuracy - 2.0 / 3.0).abs() < 1e-12);
    }
}
