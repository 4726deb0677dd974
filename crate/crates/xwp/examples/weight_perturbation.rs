//! Scores one test image with the weight-reset methods and checks their
//! defining identities numerically: resetting a pixel's first-layer weight
//! column changes the class contrast by exactly twice the probability
//! change, and an input equal to the reset baseline scores exactly zero.

use xwp::attribution::{complement_reset_scores, weight_reset_scores, Orientation};
use xwp::data::{split, synthetic};
use xwp::nn::{substitute_input_weights, train, Activation, LayerSpec, SubstitutionMode, TrainConfig};

fn main() -> xwp::Result<()> {
    let data = synthetic::bars_with(600, 12, 10, 3);
    let (train_set, test_set) = split(&data, 0.2, 3)?;
    let specs = [
        LayerSpec::new(train_set.n_features(), 32, Activation::Relu),
        LayerSpec::new(32, 10, Activation::Softmax),
    ];
    let config = TrainConfig {
        epochs: 12,
        seed: 3,
        ..TrainConfig::default()
    };
    let (pair, _) = train(&specs, &train_set, &test_set, &config)?;

    let x = test_set.image(0);
    let probabilities = pair.trained.probabilities(x)?;
    let target = probabilities
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("ten classes");
    println!(
        "sample 0: predicted class {target} with confidence {:.4}",
        probabilities[target]
    );

    let scores = weight_reset_scores(&pair, x, target)?;
    let mut ranked: Vec<usize> = (0..scores.len()).collect();
    ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    println!("top pixels by single-column reset:");
    for &i in ranked.iter().take(5) {
        println!("  pixel {:>3} (row {}, col {}): {:+.5}", i, i / 12, i % 12, scores[i]);
    }

    // The score of pixel i is the class contrast lost when its incoming
    // weights revert to initialization, which for softmax outputs collapses
    // to 2 * (p_target(x) - p'_target(x)).
    let best = ranked[0];
    let reverted = substitute_input_weights(&pair, &[best], SubstitutionMode::ResetListed)?;
    let perturbed = reverted.probabilities(x)?;
    let two_delta = 2.0 * (probabilities[target] - perturbed[target]);
    println!(
        "pixel {best}: score {:+.10} vs 2*(p - p') {:+.10} (difference {:.2e})",
        scores[best],
        two_delta,
        (scores[best] - two_delta).abs()
    );

    // Pixels at the reset baseline cannot move the forward pass, so their
    // scores are exactly zero, not merely small.
    let zero_pixels = x.iter().filter(|&&v| v == 0.0).count();
    let exact_zeros = (0..scores.len())
        .filter(|&i| x[i] == 0.0 && scores[i] == 0.0)
        .count();
    println!("baseline pixels scoring exactly 0.0: {exact_zeros} of {zero_pixels}");

    let complement = complement_reset_scores(&pair, x, target, Orientation::Negated)?;
    let agree = ranked[..5]
        .iter()
        .filter(|&&i| complement[i] > 0.0)
        .count();
    println!("complement reset (negated) agrees on {agree} of the top 5 pixels");
    Ok(())
}
