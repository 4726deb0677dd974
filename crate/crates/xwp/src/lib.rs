//! Weight-perturbation feature attribution for fully connected image
//! classifiers, with a benchmark harness that compares it against standard
//! attribution baselines.
//!
//! The crate trains small dense networks while keeping their untrained
//! initialization around as a paired reference. Attribution methods that
//! need that reference (weight substitution per input feature) live next to
//! classical baselines (occlusion, Shapley sampling, RISE, integrated
//! gradients, LRP-epsilon), and an evaluation layer scores all of them with
//! deletion curves and average-drop statistics, renders heatmaps, and writes
//! machine-readable reports.
//!
//! Every seeded operation is bit-deterministic: identical inputs, configs,
//! and seeds produce identical checkpoints, attribution maps, reports, and
//! rendered images.
//!
//! The `examples/` directory demonstrates each capability end to end on
//! synthetic data; the `xwp` binary exposes the same pipeline as a small
//! command line tool (`fetch-data`, `train`, `attribute`, `benchmark`,
//! `render-weights`).

pub mod attribution;
pub mod cli;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod nn;
pub mod viz;

pub use error::{Error, Result};
