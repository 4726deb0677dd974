//! Deterministic synthetic datasets for examples, tests, and dry runs.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ImageDataset, Subset, NUM_CLASSES};

/// Ten-class, 28x28 dataset of noisy bar patterns; see [`bars_with`].
pub fn bars(n: usize, seed: u64) -> ImageDataset {
    bars_with(n, 28, NUM_CLASSES, seed)
}

/// Builds `n` square images of `side * side` pixels in `classes` classes.
///
/// Class `k` draws a vertical and a horizontal bar whose positions are
/// unique to `k`, over a low-noise background, so a small dense classifier
/// separates the classes within an epoch or two. Pixels are quantized to
/// the 1/255 grid, matching what the binary loaders produce. The result is
/// bit-deterministic in `(n, side, classes, seed)`.
///
/// # Panics
///
/// Panics if `n == 0`, `side < 8`, or `classes` is 0 or above
/// [`NUM_CLASSES`].
pub fn bars_with(n: usize, side: usize, classes: usize, seed: u64) -> ImageDataset {
    assert!(n > 0, "need at least one sample");
    assert!(side >= 8, "side must be at least 8");
    assert!(
        (1..=NUM_CLASSES).contains(&classes),
        "classes must be in 1..={NUM_CLASSES}"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bar = 3.min(side / 4).max(1);
    let slots = 5usize;
    let usable = side - bar - 2;
    let column_of = |k: usize| 1 + (k % slots) * usable / slots;
    let row_of = |k: usize| 1 + (k / slots) * usable / 2.min(slots);

    let mut pixels = Vec::with_capacity(n * side * side);
    let mut labels = Vec::with_capacity(n);
    for sample in 0..n {
        let class = sample % classes;
        labels.push(class as u8);
        let col0 = column_of(class);
        let row0 = row_of(class);
        for r in 0..side {
            for c in 0..side {
                let on_vertical = c >= col0 && c < col0 + bar;
                let on_horizontal = r >= row0 && r < row0 + bar;
                let value = if on_vertical || on_horizontal {
                    0.70 + 0.30 * rng.random::<f64>()
                } else {
                    0.05 * rng.random::<f64>()
                };
                pixels.push((value * 255.0).round() / 255.0);
            }
        }
    }
    let images = Array2::from_shape_vec((n, side * side), pixels)
        .expect("shape matches value count");
    ImageDataset::new("synthetic_bars", Subset::Full, images, labels)
        .expect("generated data is valid by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_bit_deterministic() {
        let a = bars(30, 4);
        let b = bars(30, 4);
        let bits = |d: &ImageDataset| -> Vec<u64> { d.images().iter().map(|v| v.to_bits()).collect() };
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a.labels(), b.labels());
        let c = bars(30, 5);
        assert_ne!(bits(&a), bits(&c));
    }

    #[test]
    fn labels_cycle_through_all_classes() {
        let d = bars(25, 0);
        for i in 0..25 {
            assert_eq!(d.label(i), (i % 10) as u8);
        }
    }

    #[test]
    fn every_class_has_a_unique_bar_signature() {
        let d = bars_with(10, 28, 10, 1);
        let strongest = |values: Vec<f64>| -> usize {
            values
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0
        };
        let mut signatures = Vec::new();
        for i in 0..10 {
            let img = d.image(i);
            let col_means: Vec<f64> = (0..28)
                .map(|c| (0..28).map(|r| img[r * 28 + c]).sum::<f64>() / 28.0)
                .collect();
            let row_means: Vec<f64> = (0..28)
                .map(|r| (0..28).map(|c| img[r * 28 + c]).sum::<f64>() / 28.0)
                .collect();
            signatures.push((strongest(col_means), strongest(row_means)));
        }
        signatures.sort();
        signatures.dedup();
        assert_eq!(signatures.len(), 10, "classes share a bar layout");
    }

    #[test]
    fn pixels_sit_on_the_quantization_grid() {
        let d = bars(12, 9);
        for &v in d.images().iter() {
            let q = (v * 255.0).round() / 255.0;
            assert_eq!(v.to_bits(), q.to_bits());
        }
    }
}
