//! Sliding-patch occlusion over square image inputs.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use super::{image_side, validate_inputs};
use crate::error::{Error, Result};
use crate::nn::Network;

/// Patch geometry and fill value for [`occlusion_scores`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OcclusionConfig {
    /// Side length of the square patch, in pixels.
    pub patch: usize,
    /// Offset between neighboring patch positions, in pixels.
    pub stride: usize,
    /// Value written over the occluded pixels.
    pub baseline: f64,
}

impl Default for OcclusionConfig {
    fn default() -> Self {
        OcclusionConfig {
            patch: 3,
            stride: 1,
            baseline: 0.0,
        }
    }
}

/// Scores every pixel by the average drop in target probability over all
/// patch positions that cover it.
///
/// The patch slides across the square image in `stride` steps, never
/// crossing the border. Each position contributes the drop
/// `p_target(x) - p_target(x with the patch filled by the baseline)` to all
/// pixels inside the patch, and a pixel's score is the mean over the
/// positions that touched it. Pixels no position reaches score zero.
pub fn occlusion_scores(
    net: &Network,
    x: ArrayView1<f64>,
    target: usize,
    cfg: &OcclusionConfig,
) -> Result<Array1<f64>> {
    validate_inputs(net, x, target)?;
    let side = image_side(x.len())?;
    if cfg.patch == 0 || cfg.patch > side {
        return Err(Error::Config(format!(
            "patch size {} must be between 1 and the image side {side}",
            cfg.patch
        )));
    }
    if cfg.stride == 0 {
        return Err(Error::Config("stride must be at least 1".into()));
    }
    if !cfg.baseline.is_finite() {
        return Err(Error::NonFinite(format!("baseline {}", cfg.baseline)));
    }

    let mut occluded: Vec<f64> = x.iter().copied().collect();
    let mut scratch = net.scratch();
    let full = net.probabilities_into(&occluded, &mut scratch)[target];

    let mut drops = vec![0.0; x.len()];
    let mut coverage = vec![0usize; x.len()];
    let positions: Vec<usize> = (0..=side - cfg.patch).step_by(cfg.stride).collect();
    for &top in &positions {
        for &left in &positions {
            for r in top..top + cfg.patch {
                for c in left..left + cfg.patch {
                    occluded[r * side + c] = cfg.baseline;
                }
            }
            let masked = net.probabilities_into(&occluded, &mut scratch)[target];
            let drop = full - masked;
            for r in top..top + cfg.patch {
                for c in left..left + cfg.patch {
                    let i = r * side + c;
                    drops[i] += drop;
                    coverage[i] += 1;
                    occluded[i] = x[i];
                }
            }
        }
    }

    let scores = drops
        .into_iter()
        .zip(coverage)
        .map(|(d, n)| if n == 0 { 0.0 } else { d / n as f64 })
        .collect();
    Ok(scores)
}
