//! Walks through the two evaluation metrics on one sample: the deletion
//! curve (confidence as top-ranked pixels are progressively grayed out)
//! and the Average Drop after masking the top fifth of pixels.

use xwp::attribution::{resolve_target, weight_reset_scores, AttributionMap, TargetMode};
use xwp::data::{split, synthetic};
use xwp::evaluation::{auc, average_drop, deletion_curve, AverageDropConfig, DeletionConfig};
use xwp::nn::{train, Activation, LayerSpec, TrainConfig};

fn main() -> xwp::Result<()> {
    let data = synthetic::bars_with(600, 12, 10, 9);
    let (train_set, test_set) = split(&data, 0.2, 9)?;
    let specs = [
        LayerSpec::new(train_set.n_features(), 32, Activation::Relu),
        LayerSpec::new(32, 10, Activation::Softmax),
    ];
    let config = TrainConfig {
        epochs: 12,
        seed: 9,
        ..TrainConfig::default()
    };
    let (pair, _) = train(&specs, &train_set, &test_set, &config)?;

    let x = test_set.image(0);
    let target = resolve_target(&pair.trained, x, TargetMode::Predicted, None)?;
    let scores = weight_reset_scores(&pair, x, target)?;
    let map = AttributionMap {
        method: "xwp".to_string(),
        sample_id: 0,
        target,
        target_mode: TargetMode::Predicted,
        scores: scores.to_vec(),
    };

    // 144 features, so remove 4 pixels per step for 18 steps: half the image.
    let deletion = DeletionConfig {
        pixels_per_step: 4,
        n_steps: 18,
        baseline: 0.0,
    };
    let curve = deletion_curve(&pair.trained, x, &map, &deletion)?;
    println!("deletion curve for sample 0 (target {target}):");
    for (f, c) in curve.fractions_removed.iter().zip(&curve.confidences) {
        let bar = "#".repeat((c * 40.0).round() as usize);
        println!("  removed {:>5.1}%  confidence {c:.4} {bar}", f * 100.0);
    }
    println!("area under the curve: {:.4} (lower means faster confidence collapse)", auc(&curve)?);

    let drop_cfg = AverageDropConfig::default();
    let drop = average_drop(&pair.trained, x, &map, &drop_cfg)?;
    println!(
        "average drop after masking the top {:.0}% of pixels: {:.4} (higher means the mask hit \
         what mattered)",
        drop_cfg.mask_fraction * 100.0,
        drop
    );
    Ok(())
}
