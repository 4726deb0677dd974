//! Image datasets: the in-memory type, IDX and CSV loaders, seeded
//! train/test splitting, synthetic fixtures, and checksum-verified
//! downloads.

use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod fetch;
pub mod idx;
pub mod synthetic;
pub mod tmnist;

pub use fetch::{fetch_manifest, file_sha256, load_manifest, Manifest, ManifestEntry};
pub use idx::{load_idx_pair, write_idx_pair};
pub use tmnist::load_tmnist_csv;

/// Number of label classes every dataset in this crate may use.
pub const NUM_CLASSES: usize = 10;

/// Which portion of a dataset an [`ImageDataset`] instance holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    Full,
    Train,
    Test,
}

/// A labeled image dataset with pixels normalized to `[0, 1]`.
///
/// Images are stored row-per-sample; all samples share one feature count
/// (784 for the 28x28 benchmark datasets). Labels are class indices below
/// [`NUM_CLASSES`].
#[derive(Clone, Debug)]
pub struct ImageDataset {
    name: String,
    subset: Subset,
    images: Array2<f64>,
    labels: Vec<u8>,
}

impl ImageDataset {
    pub fn new(
        name: impl Into<String>,
        subset: Subset,
        images: Array2<f64>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        let name = name.into();
        if images.nrows() == 0 {
            return Err(Error::Data(format!("dataset {name} has no samples")));
        }
        if images.nrows() != labels.len() {
            return Err(Error::Data(format!(
                "dataset {name} has {} images but {} labels",
                images.nrows(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().position(|&l| usize::from(l) >= NUM_CLASSES) {
            return Err(Error::Data(format!(
                "dataset {name} label at row {bad} is {} (must be below {NUM_CLASSES})",
                labels[bad]
            )));
        }
        if let Some((idx, &v)) = images
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || !(0.0..=1.0).contains(*v))
        {
            let row = idx / images.ncols();
            return Err(Error::Data(format!(
                "dataset {name} pixel in row {row} is {v}, outside [0, 1]"
            )));
        }
        Ok(ImageDataset {
            name,
            subset,
            images,
            labels,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn subset(&self) -> Subset {
        self.subset
    }

    pub fn images(&self) -> &Array2<f64> {
        &self.images
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.images.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_features(&self) -> usize {
        self.images.ncols()
    }

    pub fn image(&self, index: usize) -> ArrayView1<'_, f64> {
        self.images.row(index)
    }

    pub fn label(&self, index: usize) -> u8 {
        self.labels[index]
    }
}

/// Splits a dataset into train and test parts with a seeded shuffle.
///
/// The sample order is shuffled deterministically from `seed`; the last
/// `round(len * test_fraction)` positions (clamped so both sides stay
/// non-empty) become the test split. The two parts partition the input:
/// every sample lands in exactly one side.
pub fn split(
    dataset: &ImageDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(ImageDataset, ImageDataset)> {
    if !test_fraction.is_finite() || test_fraction <= 0.0 || test_fraction >= 1.0 {
        return Err(Error::Config(format!(
            "test_fraction must be strictly between 0 and 1, got {test_fraction}"
        )));
    }
    let n = dataset.len();
    if n < 2 {
        return Err(Error::Data(format!(
            "dataset {} has {n} samples, cannot split",
            dataset.name
        )));
    }
    let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let (train_idx, test_idx) = order.split_at(n - n_test);

    let take = |indices: &[usize], subset: Subset| -> Result<ImageDataset> {
        ImageDataset::new(
            dataset.name.clone(),
            subset,
            dataset.images.select(Axis(0), indices),
            indices.iter().map(|&i| dataset.labels[i]).collect(),
        )
    };
    Ok((take(train_idx, Subset::Train)?, take(test_idx, Subset::Test)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn tiny(n: usize) -> ImageDataset {
        let images = Array2::from_shape_fn((n, 4), |(r, c)| ((r * 4 + c) % 17) as f64 / 16.0);
        let labels: Vec<u8> = (0..n).map(|i| (i % 3) as u8).collect();
        ImageDataset::new("tiny", Subset::Full, images, labels).unwrap()
    }

    #[test]
    fn validation_rejects_inconsistent_data() {
        let images = Array2::zeros((2, 4));
        assert!(matches!(
            ImageDataset::new("x", Subset::Full, images.clone(), vec![0]),
            Err(Error::Data(_))
        ));
        assert!(matches!(
            ImageDataset::new("x", Subset::Full, images.clone(), vec![0, 10]),
            Err(Error::Data(_))
        ));
        let mut out_of_range = images.clone();
        out_of_range[(1, 2)] = 1.5;
        assert!(matches!(
            ImageDataset::new("x", Subset::Full, out_of_range, vec![0, 1]),
            Err(Error::Data(_))
        ));
        let mut non_finite = images;
        non_finite[(0, 0)] = f64::NAN;
        assert!(matches!(
            ImageDataset::new("x", Subset::Full, non_finite, vec![0, 1]),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn split_sizes_follow_the_fraction() {
        let (train, test) = split(&tiny(10), 0.2, 0).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(test.len(), 2);
        assert_eq!(train.subset(), Subset::Train);
        assert_eq!(test.subset(), Subset::Test);
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let data = tiny(20);
        let (a_train, a_test) = split(&data, 0.25, 7).unwrap();
        let (b_train, b_test) = split(&data, 0.25, 7).unwrap();
        assert_eq!(a_train.images(), b_train.images());
        assert_eq!(a_test.images(), b_test.images());
        assert_eq!(a_train.labels(), b_train.labels());
        let (c_train, _) = split(&data, 0.25, 8).unwrap();
        assert_ne!(a_train.images(), c_train.images());
    }

    #[test]
    fn split_partitions_every_sample() {
        let data = tiny(13);
        let (train, test) = split(&data, 0.3, 3).unwrap();
        assert_eq!(train.len() + test.len(), data.len());
        let mut seen: Vec<Vec<u64>> = Vec::new();
        for set in [&train, &test] {
            for i in 0..set.len() {
                seen.push(set.image(i).iter().map(|v| v.to_bits()).collect());
            }
        }
        seen.sort();
        let mut original: Vec<Vec<u64>> = (0..data.len())
            .map(|i| data.image(i).iter().map(|v| v.to_bits()).collect())
            .collect();
        original.sort();
        assert_eq!(seen, original);
    }

    #[test]
    fn degenerate_fractions_are_rejected() {
        let data = tiny(10);
        for bad in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(split(&data, bad, 0).is_err(), "fraction {bad} accepted");
        }
    }
}
