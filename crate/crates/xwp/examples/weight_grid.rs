//! Renders the incoming first-layer weights of a few neurons as image
//! tiles, before and after training, so the learned bar detectors are
//! visible next to the random initialization.

use std::fs;
use std::path::PathBuf;

use xwp::data::{split, synthetic};
use xwp::nn::{train, Activation, LayerSpec, TrainConfig};
use xwp::viz::{render_weight_grid, RenderStyle};

fn main() -> xwp::Result<()> {
    let data = synthetic::bars_with(600, 12, 10, 21);
    let (train_set, test_set) = split(&data, 0.2, 21)?;
    let specs = [
        LayerSpec::new(train_set.n_features(), 16, Activation::Relu),
        LayerSpec::new(16, 10, Activation::Softmax),
    ];
    let config = TrainConfig {
        epochs: 12,
        seed: 21,
        ..TrainConfig::default()
    };
    let (pair, _) = train(&specs, &train_set, &test_set, &config)?;
    println!("model accuracy: {:.4}", pair.metadata.test_accuracy);

    let out_dir = PathBuf::from("target/examples/weight_grid");
    fs::create_dir_all(&out_dir)?;
    let style = RenderStyle::default();
    let neurons: Vec<usize> = (0..8).collect();

    let before = out_dir.join("weights_initial.png");
    render_weight_grid(&pair.initial, &neurons, &style, &before)?;
    let after = out_dir.join("weights_trained.png");
    render_weight_grid(&pair.trained, &neurons, &style, &after)?;

    println!(
        "rendered neurons 0..8 to {} and {}",
        before.display(),
        after.display()
    );
    println!("red cells pull the neuron up, blue cells push it down; training turns noise into bar detectors");
    Ok(())
}
