//! The IDX binary format used by the MNIST-style datasets, with optional
//! gzip compression. Image files carry magic `0x00000803` and three
//! big-endian dimensions, label files magic `0x00000801` and one.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use ndarray::Array2;

use super::{ImageDataset, Subset};
use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

/// Loads an images/labels file pair into a dataset with pixels divided by
/// 255. Gzip-compressed files are detected by content, not extension.
pub fn load_idx_pair(
    images_path: &Path,
    labels_path: &Path,
    name: impl Into<String>,
    subset: Subset,
) -> Result<ImageDataset> {
    let image_bytes = read_maybe_gzipped(images_path)?;
    let label_bytes = read_maybe_gzipped(labels_path)?;

    let (images, n_images) = parse_images(&image_bytes, images_path)?;
    let labels = parse_labels(&label_bytes, labels_path)?;
    if labels.len() != n_images {
        return Err(Error::Data(format!(
            "{} holds {} images but {} holds {} labels",
            images_path.display(),
            n_images,
            labels_path.display(),
            labels.len()
        )));
    }
    ImageDataset::new(name, subset, images, labels)
}

/// Writes a dataset back out as an IDX pair, quantizing each pixel to
/// `round(v * 255)`. Reading the pair back reproduces the pixel values of
/// any dataset whose pixels lie on the 1/255 grid, which holds for
/// everything produced by the loaders in this module.
pub fn write_idx_pair(
    dataset: &ImageDataset,
    images_path: &Path,
    labels_path: &Path,
    gzip: bool,
) -> Result<()> {
    let side = image_side(dataset.n_features())?;
    let n = u32::try_from(dataset.len())
        .map_err(|_| Error::Data("too many samples for the IDX format".into()))?;

    let mut image_bytes = Vec::with_capacity(16 + dataset.len() * dataset.n_features());
    image_bytes.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    image_bytes.extend_from_slice(&n.to_be_bytes());
    image_bytes.extend_from_slice(&side.to_be_bytes());
    image_bytes.extend_from_slice(&side.to_be_bytes());
    for v in dataset.images().iter() {
        image_bytes.push((v * 255.0).round() as u8);
    }

    let mut label_bytes = Vec::with_capacity(8 + dataset.len());
    label_bytes.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    label_bytes.extend_from_slice(&n.to_be_bytes());
    label_bytes.extend_from_slice(dataset.labels());

    write_maybe_gzipped(images_path, &image_bytes, gzip)?;
    write_maybe_gzipped(labels_path, &label_bytes, gzip)?;
    Ok(())
}

fn image_side(n_features: usize) -> Result<u32> {
    let side = (n_features as f64).sqrt().round() as usize;
    if side * side != n_features {
        return Err(Error::Data(format!(
            "{n_features} pixels per image is not a square, cannot write IDX"
        )));
    }
    Ok(side as u32)
}

fn read_maybe_gzipped(path: &Path) -> Result<Vec<u8>> {
    let raw = std::fs::read(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut decoded = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut decoded)
            .map_err(|e| Error::Data(format!("cannot decompress {}: {e}", path.display())))?;
        Ok(decoded)
    } else {
        Ok(raw)
    }
}

fn write_maybe_gzipped(path: &Path, bytes: &[u8], gzip: bool) -> Result<()> {
    let file = File::create(path)?;
    if gzip {
        let mut encoder = GzEncoder::new(file, Compression::default());
        encoder.write_all(bytes)?;
        encoder.finish()?;
    } else {
        let mut file = file;
        file.write_all(bytes)?;
    }
    Ok(())
}

fn parse_images(bytes: &[u8], path: &Path) -> Result<(Array2<f64>, usize)> {
    let header = read_header(bytes, 3, path)?;
    if header.magic != IMAGES_MAGIC {
        return Err(Error::Data(format!(
            "{} has magic {:#010x}, expected an IDX image file ({:#010x})",
            path.display(),
            header.magic,
            IMAGES_MAGIC
        )));
    }
    let [n, rows, cols] = [header.dims[0], header.dims[1], header.dims[2]];
    let expected = n * rows * cols;
    let pixels = &bytes[header.offset..];
    if pixels.len() != expected {
        return Err(Error::Data(format!(
            "{} declares {n} images of {rows}x{cols} but holds {} pixel bytes",
            path.display(),
            pixels.len()
        )));
    }
    let values: Vec<f64> = pixels.iter().map(|&b| f64::from(b) / 255.0).collect();
    let images = Array2::from_shape_vec((n, rows * cols), values)
        .expect("shape matches value count");
    Ok((images, n))
}

fn parse_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    let header = read_header(bytes, 1, path)?;
    if header.magic != LABELS_MAGIC {
        return Err(Error::Data(format!(
            "{} has magic {:#010x}, expected an IDX label file ({:#010x})",
            path.display(),
            header.magic,
            LABELS_MAGIC
        )));
    }
    let n = header.dims[0];
    let labels = &bytes[header.offset..];
    if labels.len() != n {
        return Err(Error::Data(format!(
            "{} declares {n} labels but holds {}",
            path.display(),
            labels.len()
        )));
    }
    Ok(labels.to_vec())
}

struct IdxHeader {
    magic: u32,
    dims: [usize; 3],
    offset: usize,
}

fn read_header(bytes: &[u8], n_dims: usize, path: &Path) -> Result<IdxHeader> {
    let needed = 4 + 4 * n_dims;
    if bytes.len() < needed {
        return Err(Error::Data(format!(
            "{} is too short for an IDX header",
            path.display()
        )));
    }
    let magic = u32::from_be_bytes(bytes[0..4].try_into().unwrap());
    let mut dims = [1usize; 3];
    for (i, dim) in dims.iter_mut().take(n_dims).enumerate() {
        let start = 4 + 4 * i;
        *dim = u32::from_be_bytes(bytes[start..start + 4].try_into().unwrap()) as usize;
    }
    Ok(IdxHeader {
        magic,
        dims,
        offset: needed,
    })
}
