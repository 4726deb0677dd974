//! Trains a small classifier on the synthetic bar dataset and prints the
//! per-epoch test accuracy, showing the full training loop without any
//! files on disk.

use xwp::data::{split, synthetic};
use xwp::nn::{train, Activation, LayerSpec, TrainConfig};

fn main() -> xwp::Result<()> {
    let data = synthetic::bars_with(600, 12, 10, 7);
    let (train_set, test_set) = split(&data, 0.2, 7)?;
    println!(
        "dataset {}: {} train / {} test samples, {} features",
        data.name(),
        train_set.len(),
        test_set.len(),
        train_set.n_features()
    );

    let specs = [
        LayerSpec::new(train_set.n_features(), 32, Activation::Relu),
        LayerSpec::new(32, 10, Activation::Softmax),
    ];
    let config = TrainConfig {
        epochs: 12,
        seed: 7,
        ..TrainConfig::default()
    };
    let (pair, history) = train(&specs, &train_set, &test_set, &config)?;

    for (epoch, accuracy) in history.iter().enumerate() {
        println!("epoch {:>2}: test accuracy {accuracy:.4}", epoch + 1);
    }
    println!(
        "final model: {} epochs on {}, accuracy {:.4}",
        pair.metadata.epochs, pair.metadata.dataset, pair.metadata.test_accuracy
    );
    Ok(())
}
