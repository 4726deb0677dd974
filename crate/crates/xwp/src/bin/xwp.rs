//! Command-line front end: fetch data, train a classifier, explain its
//! predictions, score the explanations, and draw what the first layer
//! learned.
//!
//! Exit codes: 0 on success, 1 for usage or configuration problems, 2 for
//! missing or corrupt data and I/O failures, 3 when a trained model misses
//! the configured accuracy floor.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use xwp::attribution::{Method, Orientation, TargetMode};
use xwp::cli::commands::{
    cmd_attribute, cmd_benchmark, cmd_fetch_data, cmd_render_weights, cmd_train, parse_neuron_list,
};
use xwp::cli::{load_config, parse_method_list, DatasetKind, RunConfig, SampleSpec};
use xwp::{Error, Result};

#[derive(Parser)]
#[command(
    name = "xwp",
    version,
    about = "Train fully connected image classifiers and benchmark feature attributions"
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file (JSON); defaults apply when omitted
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override one configuration key, e.g. --set train.epochs=3 (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Seed for every stage: splits, initialization, training, and sampling
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Dataset to operate on: fashion_mnist, tmnist, or synthetic
    #[arg(long, global = true, value_name = "NAME")]
    dataset: Option<DatasetKind>,

    /// Output directory or file, depending on the subcommand
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Download and checksum-verify the Fashion-MNIST files
    FetchData {
        /// Manifest of artifact names, URLs, and digests (JSON)
        #[arg(long, value_name = "PATH")]
        manifest: Option<PathBuf>,
    },
    /// Train a classifier and save the initial/trained checkpoint pair
    Train,
    /// Write attribution maps and heatmaps for selected test samples
    Attribute {
        #[command(flatten)]
        model: ModelArgs,

        /// Samples: a count like "5" or explicit indices like "3,17,42"
        #[arg(long, value_name = "SPEC", default_value = "1")]
        samples: SampleSpec,

        /// Sign convention for the complement reset scores
        #[arg(long, value_enum, value_name = "NAME")]
        orientation: Option<OrientationArg>,

        /// Output class the scores explain
        #[arg(long, value_enum, value_name = "NAME")]
        target: Option<TargetArg>,
    },
    /// Score attribution methods with deletion curves and confidence drops
    Benchmark {
        #[command(flatten)]
        model: ModelArgs,

        /// Number of seeded test samples to draw
        #[arg(long, value_name = "N")]
        samples: Option<usize>,

        /// Sign convention for the complement reset scores
        #[arg(long, value_enum, value_name = "NAME")]
        orientation: Option<OrientationArg>,

        /// Output class the scores explain
        #[arg(long, value_enum, value_name = "NAME")]
        target: Option<TargetArg>,

        /// Shrink sampling and mask counts to finish in a few minutes
        #[arg(long)]
        fast: bool,
    },
    /// Render first-layer incoming weights as image tiles
    RenderWeights {
        /// Checkpoint produced by `xwp train`
        #[arg(long, value_name = "PATH")]
        checkpoint: Option<PathBuf>,

        /// Neuron indices to draw, e.g. "0,3,7"; the first twelve if omitted
        #[arg(long, value_name = "LIST")]
        neurons: Option<String>,

        /// Draw the untrained initialization instead of the trained weights
        #[arg(long)]
        initial: bool,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Checkpoint produced by `xwp train`
    #[arg(long, value_name = "PATH")]
    checkpoint: Option<PathBuf>,

    /// Comma-separated methods, or "all"
    #[arg(long, value_name = "LIST")]
    methods: Option<String>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
enum OrientationArg {
    AsWritten,
    Negated,
}

impl From<OrientationArg> for Orientation {
    fn from(value: OrientationArg) -> Self {
        match value {
            OrientationArg::AsWritten => Orientation::AsWritten,
            OrientationArg::Negated => Orientation::Negated,
        }
    }
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum TargetArg {
    /// The class the trained model predicts for the sample
    Predicted,
    /// The sample's ground-truth label
    Label,
}

impl From<TargetArg> for TargetMode {
    fn from(value: TargetArg) -> Self {
        match value {
            TargetArg::Predicted => TargetMode::Predicted,
            TargetArg::Label => TargetMode::TrueLabel,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = load_config(cli.common.config.as_deref(), &cli.common.overrides)?;
    if let Some(seed) = cli.common.seed {
        config.reseed(seed);
    }
    if let Some(dataset) = cli.common.dataset {
        config.data.dataset = dataset;
    }
    let out = cli.common.out.as_deref();

    match cli.command {
        Command::FetchData { manifest } => {
            if let Some(dir) = out {
                config.data.data_dir = Some(dir.to_path_buf());
            }
            cmd_fetch_data(&config, manifest.as_deref())?;
        }
        Command::Train => {
            cmd_train(&config, out)?;
        }
        Command::Attribute {
            model,
            samples,
            orientation,
            target,
        } => {
            apply_scoring_flags(&mut config, orientation, target);
            let methods = selected_methods(&config, model.methods.as_deref())?;
            let checkpoint = checkpoint_path(&config, model.checkpoint);
            cmd_attribute(&config, &checkpoint, &methods, &samples, out)?;
        }
        Command::Benchmark {
            model,
            samples,
            orientation,
            target,
            fast,
        } => {
            apply_scoring_flags(&mut config, orientation, target);
            if fast {
                config.apply_fast_profile();
            }
            if let Some(n) = samples {
                config.evaluation.sample_count = n;
            }
            let methods = selected_methods(&config, model.methods.as_deref())?;
            let checkpoint = checkpoint_path(&config, model.checkpoint);
            cmd_benchmark(&config, &checkpoint, &methods, out)?;
        }
        Command::RenderWeights {
            checkpoint,
            neurons,
            initial,
        } => {
            let checkpoint = checkpoint_path(&config, checkpoint);
            let neurons = neurons.as_deref().map(parse_neuron_list).transpose()?;
            cmd_render_weights(&config, &checkpoint, neurons.as_deref(), initial, out)?;
        }
    }
    Ok(())
}

fn apply_scoring_flags(
    config: &mut RunConfig,
    orientation: Option<OrientationArg>,
    target: Option<TargetArg>,
) {
    if let Some(o) = orientation {
        config.method_configs.orientation = o.into();
    }
    if let Some(t) = target {
        config.evaluation.target_mode = t.into();
    }
}

/// Methods from the flag if given, else from the configuration, warning
/// about and skipping names that are not known methods.
fn selected_methods(config: &RunConfig, flag: Option<&str>) -> Result<Vec<Method>> {
    let methods = match flag {
        Some(text) => {
            let (methods, unknown) = parse_method_list(text);
            for name in &unknown {
                log::warn!("skipping unknown method {name:?}");
            }
            if methods.is_empty() {
                return Err(Error::Config(format!(
                    "no valid methods in {text:?}; known methods: {}, or \"all\"",
                    Method::ALL.map(Method::as_str).join(", ")
                )));
            }
            methods
        }
        None => config.selected_methods(),
    };
    Ok(methods)
}

fn checkpoint_path(config: &RunConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.unwrap_or_else(|| config.output.dir.join("model.xwpck"))
}
