//! Runs a small benchmark comparing four methods plus a random control,
//! prints the metric table, and writes the report files and the mean
//! deletion-curve chart.

use std::path::PathBuf;

use xwp::attribution::Method;
use xwp::data::{split, synthetic};
use xwp::evaluation::{run_benchmark, write_report, BenchmarkConfig, DeletionConfig};
use xwp::nn::{train, Activation, LayerSpec, TrainConfig};
use xwp::viz::render_curves;

fn main() -> xwp::Result<()> {
    let data = synthetic::bars_with(600, 12, 10, 11);
    let (train_set, test_set) = split(&data, 0.2, 11)?;
    let specs = [
        LayerSpec::new(train_set.n_features(), 32, Activation::Relu),
        LayerSpec::new(32, 10, Activation::Softmax),
    ];
    let train_cfg = TrainConfig {
        epochs: 12,
        seed: 11,
        ..TrainConfig::default()
    };
    let (pair, _) = train(&specs, &train_set, &test_set, &train_cfg)?;
    println!("model accuracy: {:.4}", pair.metadata.test_accuracy);

    let mut cfg = BenchmarkConfig {
        sample_count: 20,
        seed: 11,
        random_control: true,
        deletion: DeletionConfig {
            pixels_per_step: 4,
            n_steps: 18,
            baseline: 0.0,
        },
        ..BenchmarkConfig::default()
    };
    cfg.method_configs.shapley.permutations = 25;
    cfg.method_configs.rise.masks = 400;
    cfg.method_configs.rise.grid = 4;

    let methods = [Method::Xwp, Method::XwpC, Method::Occlusion, Method::Lrp];
    let report = run_benchmark(&pair, &test_set, &methods, &cfg)?;

    println!("{:<18} {:>8} {:>8} {:>10}", "method", "AD", "AUC", "n_samples");
    for row in &report.rows {
        println!(
            "{:<18} {:>8.4} {:>8.4} {:>10}",
            row.method, row.average_drop, row.deletion_auc, row.n_samples
        );
    }
    println!("(AD higher is better; AUC lower is better; \"random\" is the control)");

    let out_dir = PathBuf::from("target/examples/benchmark_report");
    let files = write_report(&report, &out_dir)?;
    render_curves(&report.mean_curves, &out_dir.join("curves.svg"))?;
    println!(
        "wrote {}, {}, {}, and curves.svg",
        files.json.display(),
        files.table.display(),
        files.curves.display()
    );
    Ok(())
}
