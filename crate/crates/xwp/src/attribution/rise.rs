//! Attribution from randomized low-resolution input masks.
//!
//! Each mask is a coarse Bernoulli grid, shifted by a random sub-cell
//! offset and bilinearly upsampled to image resolution, so masked pixels
//! fade smoothly instead of cutting hard edges. A pixel's score is the
//! average target probability of the masked inputs, weighted by how much
//! each mask kept that pixel, normalized by the keep probability.

use ndarray::{Array1, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{image_side, validate_inputs};
use crate::error::{Error, Result};
use crate::nn::Network;

/// Mask generation parameters for [`rise_scores`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiseConfig {
    /// Number of random masks to average over.
    pub masks: usize,
    /// Side length of the coarse Bernoulli grid.
    pub grid: usize,
    /// Probability that a grid cell keeps its pixels.
    pub keep_prob: f64,
    /// Seed for the mask stream.
    pub seed: u64,
}

impl Default for RiseConfig {
    fn default() -> Self {
        RiseConfig {
            masks: 2000,
            grid: 7,
            keep_prob: 0.5,
            seed: 0,
        }
    }
}

fn validate_config(cfg: &RiseConfig) -> Result<()> {
    if cfg.masks == 0 {
        return Err(Error::Config("masks must be at least 1".into()));
    }
    if cfg.grid == 0 {
        return Err(Error::Config("grid must be at least 1".into()));
    }
    if !(cfg.keep_prob > 0.0 && cfg.keep_prob <= 1.0) {
        return Err(Error::Config(format!(
            "keep_prob {} must be in (0, 1]",
            cfg.keep_prob
        )));
    }
    Ok(())
}

/// Draws every mask for one scoring run, each as a `side * side` row-major
/// pixel grid with values in `[0, 1]`.
///
/// Per mask the stream yields `grid * grid` cell indicators in row-major
/// order, then a row shift and a column shift, both in `[0, 1)` cell units.
/// Cells are upsampled bilinearly with edge clamping.
pub(crate) fn generate_masks(side: usize, cfg: &RiseConfig) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let g = cfg.grid;
    let cell = side as f64 / g as f64;
    let clamp = |k: isize| -> usize { k.clamp(0, g as isize - 1) as usize };
    let mut masks = Vec::with_capacity(cfg.masks);
    let mut cells = vec![0.0; g * g];
    for _ in 0..cfg.masks {
        for value in cells.iter_mut() {
            *value = if rng.random::<f64>() < cfg.keep_prob {
                1.0
            } else {
                0.0
            };
        }
        let row_shift = rng.random::<f64>();
        let col_shift = rng.random::<f64>();
        let mut mask = vec![0.0; side * side];
        for r in 0..side {
            let u = (r as f64 + 0.5) / cell + row_shift - 0.5;
            let r0 = u.floor();
            let fr = u - r0;
            let (ra, rb) = (clamp(r0 as isize), clamp(r0 as isize + 1));
            for c in 0..side {
                let v = (c as f64 + 0.5) / cell + col_shift - 0.5;
                let c0 = v.floor();
                let fc = v - c0;
                let (ca, cb) = (clamp(c0 as isize), clamp(c0 as isize + 1));
                let lerp = |a: f64, b: f64, t: f64| a + t * (b - a);
                let top = lerp(cells[ra * g + ca], cells[ra * g + cb], fc);
                let bottom = lerp(cells[rb * g + ca], cells[rb * g + cb], fc);
                mask[r * side + c] = lerp(top, bottom, fr);
            }
        }
        masks.push(mask);
    }
    masks
}

/// Scores every pixel by averaging masked target probabilities, weighted by
/// the mask value at that pixel and normalized by `masks * keep_prob`.
pub fn rise_scores(
    net: &Network,
    x: ArrayView1<f64>,
    target: usize,
    cfg: &RiseConfig,
) -> Result<Array1<f64>> {
    validate_inputs(net, x, target)?;
    validate_config(cfg)?;
    let side = image_side(x.len())?;

    let masks = generate_masks(side, cfg);
    let mut scratch = net.scratch();
    let mut masked = vec![0.0; x.len()];
    let mut scores = Array1::zeros(x.len());
    for mask in &masks {
        for ((m, &xi), &mi) in masked.iter_mut().zip(x.iter()).zip(mask) {
            *m = xi * mi;
        }
        let p = net.probabilities_into(&masked, &mut scratch)[target];
        for (s, &mi) in scores.iter_mut().zip(mask) {
            *s += p * mi;
        }
    }
    let norm = cfg.masks as f64 * cfg.keep_prob;
    scores.mapv_inplace(|s| s / norm);
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_network, Activation, LayerSpec};
    use ndarray::Array1;

    fn image_net(side: usize, seed: u64) -> Network {
        let specs = vec![
            LayerSpec::new(side * side, 6, Activation::Relu),
            LayerSpec::new(6, 3, Activation::Softmax),
        ];
        init_network(&specs, seed).unwrap()
    }

    #[test]
    fn matches_recomputation_through_the_validating_forward_pass() {
        let net = image_net(4, 31);
        let x = Array1::from_iter((0..16).map(|i| 0.06 * i as f64));
        let cfg = RiseConfig {
            masks: 30,
            grid: 2,
            keep_prob: 0.5,
            seed: 3,
        };
        let fast = rise_scores(&net, x.view(), 1, &cfg).unwrap();
        let masks = generate_masks(4, &cfg);
        assert_eq!(masks.len(), 30);
        let mut slow: Array1<f64> = Array1::zeros(16);
        for mask in &masks {
            let masked = Array1::from_iter(x.iter().zip(mask).map(|(&xi, &mi)| xi * mi));
            let p = net.probabilities(masked.view()).unwrap()[1];
            for i in 0..16 {
                slow[i] += p * mask[i];
            }
        }
        slow.mapv_inplace(|s| s / (30.0 * 0.5));
        for i in 0..16 {
            assert!(
                (fast[i] - slow[i]).abs() <= 1e-12,
                "pixel {i}: {} vs {}",
                fast[i],
                slow[i]
            );
        }
    }

    #[test]
    fn mask_values_stay_within_the_unit_interval() {
        for seed in 0..4u64 {
            let cfg = RiseConfig {
                masks: 8,
                grid: 3,
                keep_prob: 0.4,
                seed,
            };
            for mask in generate_masks(7, &cfg) {
                for &m in &mask {
                    assert!((0.0..=1.0).contains(&m), "mask value {m}");
                }
            }
        }
    }

    #[test]
    fn single_cell_grid_yields_constant_masks() {
        let cfg = RiseConfig {
            masks: 12,
            grid: 1,
            keep_prob: 0.5,
            seed: 5,
        };
        let masks = generate_masks(5, &cfg);
        let mut seen_kept = false;
        let mut seen_dropped = false;
        for mask in &masks {
            for &m in mask {
                assert_eq!(m, mask[0]);
            }
            match mask[0] {
                1.0 => seen_kept = true,
                0.0 => seen_dropped = true,
                other => panic!("constant mask should be 0 or 1, got {other}"),
            }
        }
        assert!(seen_kept && seen_dropped);
    }

    #[test]
    fn certain_keep_probability_recovers_the_unmasked_confidence() {
        let net = image_net(3, 32);
        let x = Array1::from_iter((0..9).map(|i| 0.1 * i as f64));
        let cfg = RiseConfig {
            masks: 16,
            grid: 2,
            keep_prob: 1.0,
            seed: 6,
        };
        let scores = rise_scores(&net, x.view(), 0, &cfg).unwrap();
        let p = net.probabilities(x.view()).unwrap()[0];
        for &s in &scores {
            assert!((s - p).abs() <= 1e-9, "score {s} vs confidence {p}");
        }
    }

    #[test]
    fn same_seed_is_bitwise_reproducible_and_seeds_differ() {
        let net = image_net(3, 33);
        let x = Array1::from_elem(9, 0.5);
        let cfg = RiseConfig {
            masks: 10,
            grid: 2,
            keep_prob: 0.5,
            seed: 8,
        };
        let a = rise_scores(&net, x.view(), 2, &cfg).unwrap();
        let b = rise_scores(&net, x.view(), 2, &cfg).unwrap();
        assert_eq!(a, b);
        let c = rise_scores(&net, x.view(), 2, &RiseConfig { seed: 9, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_configurations_are_rejected() {
        let net = image_net(3, 34);
        let x = Array1::zeros(9);
        for cfg in [
            RiseConfig {
                masks: 0,
                ..RiseConfig::default()
            },
            RiseConfig {
                grid: 0,
                ..RiseConfig::default()
            },
            RiseConfig {
                keep_prob: 0.0,
                ..RiseConfig::default()
            },
            RiseConfig {
                keep_prob: 1.5,
                ..RiseConfig::default()
            },
        ] {
            assert!(rise_scores(&net, x.view(), 0, &cfg).is_err());
        }
    }
}
