//! Checksum-verified dataset downloads driven by a JSON manifest.

use std::fs::{self, File};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A list of artifacts to download.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub artifacts: Vec<ManifestEntry>,
}

/// One downloadable file: its destination name, source URL, and the
/// SHA-256 hex digest it must match.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub url: String,
    pub sha256: String,
}

/// Reads a manifest from a JSON file.
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read manifest {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("manifest {}: {e}", path.display())))
}

/// Downloads every artifact into `dest`, verifying its SHA-256.
///
/// Files that already exist with the right digest are kept without any
/// network traffic; an existing file with a wrong digest is removed and
/// re-downloaded. A failed or mismatched download never leaves a partial
/// file behind. Returns the path of every verified artifact.
pub fn fetch_manifest(manifest: &Manifest, dest: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dest)?;
    let mut paths = Vec::with_capacity(manifest.artifacts.len());
    for entry in &manifest.artifacts {
        validate_entry(entry)?;
        let target = dest.join(&entry.name);
        let expected = entry.sha256.to_ascii_lowercase();
        if target.exists() {
            let actual = file_sha256(&target)?;
            if actual == expected {
                log::info!("{}: cached copy matches, skipping download", entry.name);
                paths.push(target);
                continue;
            }
            log::warn!(
                "{}: cached copy has digest {actual}, expected {expected}; re-downloading",
                entry.name
            );
            fs::remove_file(&target)?;
        }
        download_verified(entry, &target, &expected)?;
        paths.push(target);
    }
    Ok(paths)
}

/// SHA-256 hex digest of a file, streamed in chunks.
pub fn file_sha256(path: &Path) -> Result<String> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

fn validate_entry(entry: &ManifestEntry) -> Result<()> {
    if entry.name.is_empty()
        || entry.name.contains(['/', '\\'])
        || entry.name.starts_with("..")
    {
        return Err(Error::Config(format!(
            "artifact name {:?} must be a plain file name",
            entry.name
        )));
    }
    let digest_ok =
        entry.sha256.len() == 64 && entry.sha256.chars().all(|c| c.is_ascii_hexdigit());
    if !digest_ok {
        return Err(Error::Config(format!(
            "artifact {:?} needs a 64-character hex sha256, got {:?}; compute one from a trusted copy and fill in the manifest",
            entry.name, entry.sha256
        )));
    }
    Ok(())
}

fn download_verified(entry: &ManifestEntry, target: &Path, expected: &str) -> Result<()> {
    let partial = target.with_file_name(format!("{}.part", entry.name));
    let result = (|| -> Result<()> {
        let mut response = ureq::get(&entry.url)
            .call()
            .map_err(|e| Error::Fetch(format!("{}: {e}", entry.url)))?;
        let mut file = File::create(&partial)?;
        let mut reader = response.body_mut().as_reader();
        std::io::copy(&mut reader, &mut file)
            .map_err(|e| Error::Fetch(format!("{}: {e}", entry.url)))?;
        file.flush()?;
        drop(file);
        let actual = file_sha256(&partial)?;
        if actual != expected {
            return Err(Error::ChecksumMismatch {
                name: entry.name.clone(),
                expected: expected.to_string(),
                actual,
            });
        }
        fs::rename(&partial, target)?;
        Ok(())
    })();
    if result.is_err() && partial.exists() {
        let _ = fs::remove_file(&partial);
    }
    result
}
