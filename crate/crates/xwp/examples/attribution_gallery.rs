//! Runs every attribution method on a few test images and renders the
//! results: one grayscale PNG per sample and one diverging heatmap per
//! (method, sample), plus a JSON-lines file with the raw scores.

use std::fs;
use std::path::PathBuf;

use xwp::attribution::{
    attribute, resolve_target, write_attribution_jsonl, AttributionMap, Method, MethodConfigs,
    TargetMode,
};
use xwp::data::{split, synthetic};
use xwp::nn::{train, Activation, LayerSpec, TrainConfig};
use xwp::viz::{heatmap_filename, render_heatmap, render_sample, RenderStyle};

fn main() -> xwp::Result<()> {
    let data = synthetic::bars_with(600, 12, 10, 5);
    let (train_set, test_set) = split(&data, 0.2, 5)?;
    let specs = [
        LayerSpec::new(train_set.n_features(), 32, Activation::Relu),
        LayerSpec::new(32, 10, Activation::Softmax),
    ];
    let config = TrainConfig {
        epochs: 12,
        seed: 5,
        ..TrainConfig::default()
    };
    let (pair, _) = train(&specs, &train_set, &test_set, &config)?;
    println!("model accuracy: {:.4}", pair.metadata.test_accuracy);

    let mut method_configs = MethodConfigs::default();
    method_configs.shapley.permutations = 25;
    method_configs.rise.masks = 400;
    method_configs.rise.grid = 4;

    let out_dir = PathBuf::from("target/examples/attribution_gallery");
    fs::create_dir_all(&out_dir)?;
    let style = RenderStyle::default();

    let mut maps = Vec::new();
    for sample_id in 0..2 {
        let x = test_set.image(sample_id);
        let target = resolve_target(&pair.trained, x, TargetMode::Predicted, None)?;
        render_sample(x, style.upscale, &out_dir.join(format!("sample_{sample_id}.png")))?;
        println!("sample {sample_id}: explaining predicted class {target}");

        for method in Method::ALL {
            let scores = attribute(&pair, x, target, method, &method_configs)?;
            let map = AttributionMap {
                method: method.as_str().to_string(),
                sample_id,
                target,
                target_mode: TargetMode::Predicted,
                scores: scores.to_vec(),
            };
            render_heatmap(&map, &style, &out_dir.join(heatmap_filename(&map.method, sample_id)))?;
            let peak = map
                .scores
                .iter()
                .cloned()
                .fold(0.0_f64, |m, v| m.max(v.abs()));
            println!("  {:<10} peak |score| {peak:.5}", map.method);
            maps.push(map);
        }
    }
    write_attribution_jsonl(&out_dir.join("maps.jsonl"), &maps)?;
    println!(
        "wrote {} maps, {} heatmaps, and 2 sample images to {}",
        maps.len(),
        maps.len(),
        out_dir.display()
    );
    Ok(())
}
