//! The five subcommands behind the `xwp` binary.
//!
//! Each command is an ordinary function over a loaded [`RunConfig`] plus
//! its own inputs, returning the paths it wrote, so the whole surface is
//! drivable from tests without spawning processes. Progress and summaries
//! go to stdout; warnings go through `log`.

use std::fs;
use std::path::{Path, PathBuf};

use super::{load_dataset, resolve_data_dir, tmnist_csv_path, RunConfig, SampleSpec};
use crate::attribution::{
    attribute, resolve_target, write_attribution_jsonl, AttributionMap, Method, Orientation,
    TargetMode,
};
use crate::data::{fetch_manifest, load_manifest, ImageDataset, Manifest, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::evaluation::{run_benchmark, write_report, BenchmarkReport, ReportFiles};
use crate::nn::{load_checkpoint, save_checkpoint, train, Activation, LayerSpec, ModelPair};
use crate::viz::{heatmap_filename, render_curves, render_heatmap, render_sample, render_weight_grid};

/// Manifest shipped with the crate: canonical Fashion-MNIST URLs whose
/// digests must be filled in from a trusted copy before fetching.
pub const FASHION_MANIFEST_JSON: &str = include_str!("../../manifests/fashion_mnist.json");

/// Downloads and checksum-verifies the Fashion-MNIST files, then checks
/// whether the TMNIST CSV is in place. Returns the verified paths.
pub fn cmd_fetch_data(config: &RunConfig, manifest_path: Option<&Path>) -> Result<Vec<PathBuf>> {
    let manifest: Manifest = match manifest_path {
        Some(p) => load_manifest(p)?,
        None => serde_json::from_str(FASHION_MANIFEST_JSON)
            .expect("the embedded manifest is valid JSON"),
    };
    let dest = resolve_data_dir(&config.data).join("fashion_mnist");
    let paths = fetch_manifest(&manifest, &dest)?;
    for path in &paths {
        println!("verified {}", path.display());
    }
    let tmnist = tmnist_csv_path(&config.data);
    if tmnist.exists() {
        println!("tmnist csv present at {}", tmnist.display());
    } else {
        log::warn!(
            "TMNIST is not fetched automatically: download TMNIST_Data.csv (the \"MNIST style\" \
             typeface dataset) and place it at {}",
            tmnist.display()
        );
    }
    Ok(paths)
}

/// What `train` wrote and measured.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub checkpoint: PathBuf,
    pub accuracy_log: PathBuf,
    pub per_epoch_accuracy: Vec<f64>,
    pub final_accuracy: f64,
}

/// Builds the layer specs for a dataset with `n_features` inputs: the
/// configured hidden widths with relu, then a 10-class softmax readout.
pub fn layer_specs(config: &RunConfig, n_features: usize) -> Vec<LayerSpec> {
    let mut dims = Vec::with_capacity(config.model.hidden.len() + 2);
    dims.push(n_features);
    dims.extend_from_slice(&config.model.hidden);
    dims.push(NUM_CLASSES);
    dims.windows(2)
        .enumerate()
        .map(|(i, w)| {
            let last = i == dims.len() - 2;
            LayerSpec::new(
                w[0],
                w[1],
                if last {
                    Activation::Softmax
                } else {
                    Activation::Relu
                },
            )
        })
        .collect()
}

/// Trains on the configured dataset, saves the checkpoint and a per-epoch
/// accuracy CSV, prints the final test accuracy, and enforces the accuracy
/// floor if one is configured. A floor violation is reported only after
/// the checkpoint and log are safely on disk.
pub fn cmd_train(config: &RunConfig, out: Option<&Path>) -> Result<TrainOutcome> {
    let (train_set, test_set) = load_dataset(&config.data, config.seed)?;
    let specs = layer_specs(config, train_set.n_features());
    let (pair, history) = train(&specs, &train_set, &test_set, &config.train)?;

    let checkpoint = match out {
        Some(p) => p.to_path_buf(),
        None => config.output.dir.join("model.xwpck"),
    };
    if let Some(parent) = checkpoint.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    save_checkpoint(&pair, &checkpoint)?;

    let accuracy_log = checkpoint.with_extension("accuracy.csv");
    let mut writer = csv::Writer::from_path(&accuracy_log)?;
    writer.write_record(["epoch", "test_accuracy"])?;
    for (epoch, acc) in history.iter().enumerate() {
        writer.write_record([(epoch + 1).to_string(), format!("{acc}")])?;
    }
    writer.flush()?;

    let final_accuracy = pair.metadata.test_accuracy;
    println!(
        "trained {} for {} epochs: test accuracy {:.4}",
        pair.metadata.dataset, config.train.epochs, final_accuracy
    );
    println!("checkpoint written to {}", checkpoint.display());

    if let Some(floor) = config.accuracy_floor {
        if final_accuracy < floor {
            return Err(Error::AccuracyFloor {
                achieved: final_accuracy,
                floor,
            });
        }
    }
    Ok(TrainOutcome {
        checkpoint,
        accuracy_log,
        per_epoch_accuracy: history,
        final_accuracy,
    })
}

/// What `attribute` wrote.
#[derive(Clone, Debug)]
pub struct AttributeOutcome {
    pub maps_file: PathBuf,
    pub heatmaps: Vec<PathBuf>,
    pub sample_images: Vec<PathBuf>,
    pub maps: Vec<AttributionMap>,
}

/// Label for a method under the configured sign convention. The complement
/// reset always carries its orientation so its maps line up with the
/// benchmark's row keys.
fn method_label(method: Method, orientation: Orientation) -> String {
    match method {
        Method::XwpC => format!("xwp_c_{}", orientation.as_str()),
        _ => method.as_str().to_string(),
    }
}

/// Computes attribution maps for the selected test samples and methods,
/// writing one JSON-lines map file, one heatmap PNG per (method, sample),
/// and one grayscale PNG per sample.
pub fn cmd_attribute(
    config: &RunConfig,
    checkpoint: &Path,
    methods: &[Method],
    samples: &SampleSpec,
    out: Option<&Path>,
) -> Result<AttributeOutcome> {
    if methods.is_empty() {
        return Err(Error::Config("no valid methods selected".into()));
    }
    let pair = load_checkpoint(checkpoint)?;
    let (_, test_set) = load_dataset(&config.data, config.seed)?;
    check_features(&pair, &test_set)?;
    let indices = samples.resolve(test_set.len())?;

    let out_dir = out.unwrap_or(&config.output.dir).to_path_buf();
    fs::create_dir_all(&out_dir)?;

    let mut maps = Vec::with_capacity(indices.len() * methods.len());
    let mut heatmaps = Vec::with_capacity(indices.len() * methods.len());
    let mut sample_images = Vec::with_capacity(indices.len());
    for &sample_id in &indices {
        let x = test_set.image(sample_id);
        let true_label = match config.evaluation.target_mode {
            TargetMode::TrueLabel => Some(usize::from(test_set.label(sample_id))),
            TargetMode::Predicted => None,
        };
        let target = resolve_target(
            &pair.trained,
            x,
            config.evaluation.target_mode,
            true_label,
        )?;

        let sample_path = out_dir.join(format!("sample_{sample_id}.png"));
        render_sample(x, config.output.style.upscale, &sample_path)?;
        sample_images.push(sample_path);

        for &method in methods {
            let scores = attribute(&pair, x, target, method, &config.method_configs)?;
            let map = AttributionMap {
                method: method_label(method, config.method_configs.orientation),
                sample_id,
                target,
                target_mode: config.evaluation.target_mode,
                scores: scores.to_vec(),
            };
            let heatmap = out_dir.join(heatmap_filename(&map.method, sample_id));
            render_heatmap(&map, &config.output.style, &heatmap)?;
            heatmaps.push(heatmap);
            maps.push(map);
        }
    }

    let maps_file = out_dir.join("maps.jsonl");
    write_attribution_jsonl(&maps_file, &maps)?;
    println!(
        "wrote {} maps for {} samples to {}",
        maps.len(),
        indices.len(),
        out_dir.display()
    );
    Ok(AttributeOutcome {
        maps_file,
        heatmaps,
        sample_images,
        maps,
    })
}

/// What `benchmark` wrote.
#[derive(Clone, Debug)]
pub struct BenchmarkOutcome {
    pub report: BenchmarkReport,
    pub files: ReportFiles,
    pub curves_svg: Option<PathBuf>,
}

/// Runs the configured benchmark on the checkpoint's test split, writes
/// the report files and the curve chart, and prints a summary table with
/// the best method per metric marked.
pub fn cmd_benchmark(
    config: &RunConfig,
    checkpoint: &Path,
    methods: &[Method],
    out: Option<&Path>,
) -> Result<BenchmarkOutcome> {
    let pair = load_checkpoint(checkpoint)?;
    let (_, test_set) = load_dataset(&config.data, config.seed)?;
    check_features(&pair, &test_set)?;

    let bench_cfg = config.benchmark_config();
    let report = run_benchmark(&pair, &test_set, methods, &bench_cfg)?;

    let out_dir = out.unwrap_or(&config.output.dir).to_path_buf();
    let files = write_report(&report, &out_dir)?;
    let curves_svg = if report.mean_curves.is_empty() {
        log::warn!("no method produced a mean curve; skipping the curve chart");
        None
    } else {
        let path = out_dir.join("curves.svg");
        render_curves(&report.mean_curves, &path)?;
        Some(path)
    };

    print_summary(&report);
    println!("report written to {}", out_dir.display());
    Ok(BenchmarkOutcome {
        report,
        files,
        curves_svg,
    })
}

/// Prints the benchmark rows with the best Average Drop (highest) and best
/// Deletion AUC (lowest) marked by an asterisk.
fn print_summary(report: &BenchmarkReport) {
    println!(
        "\n{} on {} samples of {} (target: {:?})",
        report.provenance.dataset,
        report.provenance.sample_ids.len(),
        report.provenance.test_set_len,
        report.provenance.target_mode
    );
    let best_ad = report
        .rows
        .iter()
        .max_by(|a, b| a.average_drop.total_cmp(&b.average_drop))
        .map(|r| r.method.clone());
    let best_auc = report
        .rows
        .iter()
        .min_by(|a, b| a.deletion_auc.total_cmp(&b.deletion_auc))
        .map(|r| r.method.clone());
    println!("{:<20} {:>10} {:>10}", "method", "AD", "AUC");
    for row in &report.rows {
        let ad_mark = if Some(&row.method) == best_ad.as_ref() { "*" } else { " " };
        let auc_mark = if Some(&row.method) == best_auc.as_ref() { "*" } else { " " };
        println!(
            "{:<20} {:>9.4}{ad_mark} {:>9.4}{auc_mark}",
            row.method, row.average_drop, row.deletion_auc
        );
    }
    if !report.rows.is_empty() {
        println!("(* best column value: AD higher is better, AUC lower is better)");
    }
    for error in &report.provenance.errors {
        println!("{} failed: {}", error.method, error.message);
    }
    println!("config digest: {}", report.rows.first().map_or("-", |r| &r.config_digest));
}

/// Renders the incoming first-layer weights of selected neurons from the
/// trained network, or from the untrained initialization with `initial`.
pub fn cmd_render_weights(
    config: &RunConfig,
    checkpoint: &Path,
    neurons: Option<&[usize]>,
    initial: bool,
    out: Option<&Path>,
) -> Result<PathBuf> {
    let pair = load_checkpoint(checkpoint)?;
    let net = if initial { &pair.initial } else { &pair.trained };
    let owned;
    let indices: &[usize] = match neurons {
        Some(list) => list,
        None => {
            let n1 = net.specs()[0].out_dim;
            owned = (0..n1.min(12)).collect::<Vec<_>>();
            &owned
        }
    };
    let path = match out {
        Some(p) => p.to_path_buf(),
        None => config.output.dir.join("weights.png"),
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    render_weight_grid(net, indices, &config.output.style, &path)?;
    println!(
        "rendered {} {} neurons to {}",
        indices.len(),
        if initial { "initial" } else { "trained" },
        path.display()
    );
    Ok(path)
}

fn check_features(pair: &ModelPair, set: &ImageDataset) -> Result<()> {
    if pair.trained.input_dim() != set.n_features() {
        return Err(Error::Dimension(format!(
            "checkpoint expects {} inputs but dataset {} has {} features; was it trained on a \
             different dataset?",
            pair.trained.input_dim(),
            set.name(),
            set.n_features()
        )));
    }
    Ok(())
}

/// Parses a comma-separated list of neuron indices.
pub fn parse_neuron_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Config(format!("neuron list: {s:?} is not an index")))
        })
        .collect()
}
