//! Rendering of attribution heatmaps, input samples, first-layer weight
//! grids, and deletion-curve charts as image files.
//!
//! Raster output is PNG and curve charts are SVG, both generated in this
//! crate so identical inputs produce byte-identical files. Signed scores
//! are drawn with a diverging blue-white-red map by default: zero is white,
//! the strongest positive score is pure red, the strongest negative pure
//! blue, and negating a map exactly swaps the red and blue channels.

mod png;
mod svg;

pub use svg::render_curves;

use std::fs;
use std::path::Path;

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::attribution::{image_side, AttributionMap};
use crate::error::{Error, Result};
use crate::nn::Network;

/// Pixel color scheme for score grids.
///
/// The diverging map is odd-symmetric: the colors for `s` and `-s` are
/// red/blue swaps of each other. Grayscale maps the normalized range
/// linearly from black to white and is meant for unsigned data.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Colormap {
    #[default]
    DivergingBlueWhiteRed,
    Grayscale,
}

/// How raw scores are mapped into the colormap domain `[-1, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Divide by the largest absolute score, so zero stays at the white
    /// midpoint and positive and negative scores remain distinguishable.
    #[default]
    SymmetricMaxAbs,
    /// Stretch `[min, max]` linearly over the full range.
    MinMax,
}

/// Rendering options shared by the heatmap and weight-grid renderers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderStyle {
    pub colormap: Colormap,
    /// Nearest-neighbor magnification; each score cell becomes an
    /// `upscale x upscale` pixel block.
    pub upscale: usize,
    pub normalization: Normalization,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            colormap: Colormap::default(),
            upscale: 8,
            normalization: Normalization::default(),
        }
    }
}

impl Colormap {
    fn rgb(self, u: f64) -> [u8; 3] {
        let u = u.clamp(-1.0, 1.0);
        match self {
            Colormap::DivergingBlueWhiteRed => {
                if u >= 0.0 {
                    let c = ((1.0 - u) * 255.0).round() as u8;
                    [255, c, c]
                } else {
                    let c = ((1.0 + u) * 255.0).round() as u8;
                    [c, c, 255]
                }
            }
            Colormap::Grayscale => {
                let g = ((u + 1.0) / 2.0 * 255.0).round() as u8;
                [g, g, g]
            }
        }
    }
}

/// Maps raw scores into `[-1, 1]`. Degenerate inputs (all zero, or all
/// equal under min-max) land on 0, the colormap midpoint.
fn normalize(scores: &[f64], normalization: Normalization) -> Vec<f64> {
    match normalization {
        Normalization::SymmetricMaxAbs => {
            let m = scores.iter().fold(0.0f64, |m, s| m.max(s.abs()));
            if m == 0.0 {
                vec![0.0; scores.len()]
            } else {
                scores.iter().map(|s| s / m).collect()
            }
        }
        Normalization::MinMax => {
            let lo = scores.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            let hi = scores.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            if hi == lo {
                vec![0.0; scores.len()]
            } else {
                scores.iter().map(|s| 2.0 * (s - lo) / (hi - lo) - 1.0).collect()
            }
        }
    }
}

fn check_style(style: &RenderStyle) -> Result<()> {
    if style.upscale == 0 {
        return Err(Error::Config("upscale must be at least 1".into()));
    }
    Ok(())
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what.into()));
    }
    Ok(())
}

/// Repeats every pixel into a `factor x factor` block.
fn upscale_rgb(rgb: &[u8], width: usize, height: usize, factor: usize) -> Vec<u8> {
    if factor == 1 {
        return rgb.to_vec();
    }
    let mut out = Vec::with_capacity(rgb.len() * factor * factor);
    for y in 0..height {
        let mut row = Vec::with_capacity(width * factor * 3);
        for x in 0..width {
            let at = (y * width + x) * 3;
            for _ in 0..factor {
                row.extend_from_slice(&rgb[at..at + 3]);
            }
        }
        for _ in 0..factor {
            out.extend_from_slice(&row);
        }
    }
    out
}

fn colorize(units: &[f64], colormap: Colormap) -> Vec<u8> {
    let mut rgb = Vec::with_capacity(units.len() * 3);
    for &u in units {
        rgb.extend_from_slice(&colormap.rgb(u));
    }
    rgb
}

/// Renders one attribution map as a colorized square PNG.
///
/// The score vector is reshaped row-major to its square side, normalized
/// per [`RenderStyle::normalization`], colorized, and magnified. An
/// all-zero map renders solid white rather than failing.
pub fn render_heatmap(map: &AttributionMap, style: &RenderStyle, path: &Path) -> Result<()> {
    check_style(style)?;
    check_finite(&map.scores, "attribution scores")?;
    let side = image_side(map.scores.len())?;
    let units = normalize(&map.scores, style.normalization);
    let rgb = colorize(&units, style.colormap);
    let scaled = upscale_rgb(&rgb, side, side, style.upscale);
    let bytes = png::encode_rgb(side * style.upscale, side * style.upscale, &scaled)?;
    fs::write(path, bytes)?;
    Ok(())
}

/// Renders an input image as a grayscale PNG, zero black and one white.
/// Values are clamped to `[0, 1]` before quantization.
pub fn render_sample(x: ArrayView1<f64>, upscale: usize, path: &Path) -> Result<()> {
    if upscale == 0 {
        return Err(Error::Config("upscale must be at least 1".into()));
    }
    let values: Vec<f64> = x.iter().copied().collect();
    check_finite(&values, "sample pixels")?;
    let side = image_side(values.len())?;
    let mut rgb = Vec::with_capacity(values.len() * 3);
    for v in values {
        let g = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        rgb.extend_from_slice(&[g, g, g]);
    }
    let scaled = upscale_rgb(&rgb, side, side, upscale);
    let bytes = png::encode_rgb(side * upscale, side * upscale, &scaled)?;
    fs::write(path, bytes)?;
    Ok(())
}

const GUTTER: usize = 2;
const GUTTER_RGB: [u8; 3] = [200, 200, 200];

/// Renders the incoming first-layer weights of the selected neurons as a
/// single row of square tiles separated by gutters.
///
/// Each neuron's weight column is reshaped to the input image square and
/// normalized independently, so a faint neuron still shows its own
/// structure next to a strong one.
pub fn render_weight_grid(
    net: &Network,
    neuron_indices: &[usize],
    style: &RenderStyle,
    path: &Path,
) -> Result<()> {
    check_style(style)?;
    if neuron_indices.is_empty() {
        return Err(Error::Config("no neurons selected to render".into()));
    }
    let n1 = net.specs()[0].out_dim;
    if let Some(&bad) = neuron_indices.iter().find(|&&j| j >= n1) {
        return Err(Error::Config(format!(
            "neuron index {bad} is out of range for a first layer of {n1} units"
        )));
    }
    let side = image_side(net.input_dim())?;
    let tile = side * style.upscale;
    let k = neuron_indices.len();
    let width = k * tile + (k + 1) * GUTTER;
    let height = tile + 2 * GUTTER;

    let mut canvas = Vec::with_capacity(width * height * 3);
    for _ in 0..width * height {
        canvas.extend_from_slice(&GUTTER_RGB);
    }
    for (i, &j) in neuron_indices.iter().enumerate() {
        let column: Vec<f64> = net.weights()[0].column(j).iter().copied().collect();
        let units = normalize(&column, style.normalization);
        let rgb = colorize(&units, style.colormap);
        let scaled = upscale_rgb(&rgb, side, side, style.upscale);
        let x0 = GUTTER + i * (tile + GUTTER);
        for ty in 0..tile {
            let src = ty * tile * 3;
            let dst = ((GUTTER + ty) * width + x0) * 3;
            canvas[dst..dst + tile * 3].copy_from_slice(&scaled[src..src + tile * 3]);
        }
    }
    let bytes = png::encode_rgb(width, height, &canvas)?;
    fs::write(path, bytes)?;
    Ok(())
}

/// Standard asset name for a rendered attribution map.
pub fn heatmap_filename(method: &str, sample_id: usize) -> String {
    format!("{method}_{sample_id}.png")
}
