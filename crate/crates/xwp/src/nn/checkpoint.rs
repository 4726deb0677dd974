//! Binary checkpoint format for a trained/initial model pair.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic "XWPM" | u32 version (1) | u64 seed | u32 layer count
//! per layer: u32 in_dim | u32 out_dim | u8 activation (relu 0, softmax 1, identity 2)
//! trained parameters: per layer, weights row-major as f64, then biases as f64
//! initial parameters: same layout
//! u32 metadata length | metadata JSON (dataset, epochs, test_accuracy)
//! ```
//!
//! Writing and re-reading a pair reproduces every parameter bit for bit.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Activation, LayerSpec, ModelPair, Network, PairMetadata};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"XWPM";
const VERSION: u32 = 1;

/// Serializes a model pair to `path`.
pub fn save_checkpoint(pair: &ModelPair, path: &Path) -> Result<()> {
    pair.check_consistent()?;
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&pair.seed.to_le_bytes())?;
    let n_layers = u32::try_from(pair.trained.n_layers())
        .map_err(|_| Error::Config("too many layers for checkpoint format".into()))?;
    out.write_all(&n_layers.to_le_bytes())?;
    for spec in pair.trained.specs() {
        let in_dim = u32::try_from(spec.in_dim)
            .map_err(|_| Error::Config("layer too wide for checkpoint format".into()))?;
        let out_dim = u32::try_from(spec.out_dim)
            .map_err(|_| Error::Config("layer too wide for checkpoint format".into()))?;
        out.write_all(&in_dim.to_le_bytes())?;
        out.write_all(&out_dim.to_le_bytes())?;
        out.write_all(&[spec.activation.code()])?;
    }
    for net in [&pair.trained, &pair.initial] {
        write_parameters(&mut out, net)?;
    }
    let metadata = serde_json::to_vec(&pair.metadata)?;
    let len = u32::try_from(metadata.len())
        .map_err(|_| Error::Config("metadata too large for checkpoint format".into()))?;
    out.write_all(&len.to_le_bytes())?;
    out.write_all(&metadata)?;
    out.flush()?;
    Ok(())
}

fn write_parameters(out: &mut impl Write, net: &Network) -> Result<()> {
    for l in 0..net.n_layers() {
        for value in net.weights()[l].iter() {
            out.write_all(&value.to_le_bytes())?;
        }
        for value in net.biases()[l].iter() {
            out.write_all(&value.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads back a model pair written by [`save_checkpoint`].
pub fn load_checkpoint(path: &Path) -> Result<ModelPair> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let mut cursor = Cursor {
        bytes: &bytes,
        offset: 0,
    };

    let magic = cursor.take(4)?;
    if magic != MAGIC {
        return Err(Error::Checkpoint(format!(
            "bad magic {magic:?}, not a model checkpoint"
        )));
    }
    let version = cursor.read_u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let seed = cursor.read_u64()?;
    let n_layers = cursor.read_u32()? as usize;
    let mut specs = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let in_dim = cursor.read_u32()? as usize;
        let out_dim = cursor.read_u32()? as usize;
        let activation = Activation::from_code(cursor.read_u8()?)?;
        specs.push(LayerSpec::new(in_dim, out_dim, activation));
    }

    let trained = read_parameters(&mut cursor, &specs)?;
    let initial = read_parameters(&mut cursor, &specs)?;

    let metadata_len = cursor.read_u32()? as usize;
    let metadata_bytes = cursor.take(metadata_len)?;
    let metadata: PairMetadata = serde_json::from_slice(metadata_bytes)
        .map_err(|e| Error::Checkpoint(format!("metadata is not valid JSON: {e}")))?;
    if cursor.offset != bytes.len() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes after metadata",
            bytes.len() - cursor.offset
        )));
    }

    ModelPair::new(trained, initial, seed, metadata)
}

fn read_parameters(cursor: &mut Cursor, specs: &[LayerSpec]) -> Result<Network> {
    let mut weights = Vec::with_capacity(specs.len());
    let mut biases = Vec::with_capacity(specs.len());
    for spec in specs {
        let mut w = Vec::with_capacity(spec.in_dim * spec.out_dim);
        for _ in 0..spec.in_dim * spec.out_dim {
            w.push(cursor.read_f64()?);
        }
        weights.push(
            Array2::from_shape_vec((spec.in_dim, spec.out_dim), w)
                .map_err(|e| Error::Checkpoint(format!("weight shape: {e}")))?,
        );
        let mut b = Vec::with_capacity(spec.out_dim);
        for _ in 0..spec.out_dim {
            b.push(cursor.read_f64()?);
        }
        biases.push(Array1::from_vec(b));
    }
    Network::from_parts(specs.to_vec(), weights, biases)
        .map_err(|e| Error::Checkpoint(format!("invalid parameters: {e}")))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.offset + n > self.bytes.len() {
            return Err(Error::Checkpoint(format!(
                "truncated at byte {} (wanted {n} more)",
                self.offset
            )));
        }
        let slice = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(slice)
    }

    fn read_u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn read_u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn read_u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn read_f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
