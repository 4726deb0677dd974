//! Minimal PNG encoder for 8-bit RGB images.
//!
//! Pixels are emitted as one IDAT chunk holding a zlib stream of stored
//! (uncompressed) deflate blocks, with filter type 0 on every row. Stored
//! blocks trade file size for byte-level determinism: the output depends
//! only on the pixel values, never on a compressor version, so golden-file
//! and rerun-identity tests can compare whole files.

use crate::error::{Error, Result};

const SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A];

const CRC_TABLE: [u32; 256] = {
    let mut table = [0u32; 256];
    let mut n = 0;
    while n < 256 {
        let mut c = n as u32;
        let mut k = 0;
        while k < 8 {
            c = if c & 1 != 0 {
                0xEDB8_8320 ^ (c >> 1)
            } else {
                c >> 1
            };
            k += 1;
        }
        table[n] = c;
        n += 1;
    }
    table
};

fn crc32(bytes: &[u8]) -> u32 {
    let mut c = 0xFFFF_FFFFu32;
    for &b in bytes {
        c = CRC_TABLE[((c ^ b as u32) & 0xFF) as usize] ^ (c >> 8);
    }
    c ^ 0xFFFF_FFFF
}

fn adler32(bytes: &[u8]) -> u32 {
    const MOD: u32 = 65_521;
    let mut a = 1u32;
    let mut b = 0u32;
    for chunk in bytes.chunks(5552) {
        for &byte in chunk {
            a += byte as u32;
            b += a;
        }
        a %= MOD;
        b %= MOD;
    }
    (b << 16) | a
}

fn push_chunk(out: &mut Vec<u8>, kind: &[u8; 4], data: &[u8]) {
    out.extend_from_slice(&(data.len() as u32).to_be_bytes());
    out.extend_from_slice(kind);
    out.extend_from_slice(data);
    let mut crc_input = Vec::with_capacity(4 + data.len());
    crc_input.extend_from_slice(kind);
    crc_input.extend_from_slice(data);
    out.extend_from_slice(&crc32(&crc_input).to_be_bytes());
}

/// Wraps raw bytes in a zlib stream of stored deflate blocks.
fn zlib_stored(raw: &[u8]) -> Vec<u8> {
    let mut out = vec![0x78, 0x01];
    let blocks: Vec<&[u8]> = if raw.is_empty() {
        vec![&[]]
    } else {
        raw.chunks(0xFFFF).collect()
    };
    for (i, block) in blocks.iter().enumerate() {
        let last = i == blocks.len() - 1;
        out.push(if last { 0x01 } else { 0x00 });
        let len = block.len() as u16;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(&(!len).to_le_bytes());
        out.extend_from_slice(block);
    }
    out.extend_from_slice(&adler32(raw).to_be_bytes());
    out
}

/// Encodes `width * height` RGB triples (row-major, 3 bytes per pixel)
/// into a complete PNG file image.
pub(crate) fn encode_rgb(width: usize, height: usize, rgb: &[u8]) -> Result<Vec<u8>> {
    if width == 0 || height == 0 {
        return Err(Error::Config(format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }
    if rgb.len() != width * height * 3 {
        return Err(Error::Dimension(format!(
            "{} pixel bytes for a {width}x{height} RGB image, expected {}",
            rgb.len(),
            width * height * 3
        )));
    }
    if width > u32::MAX as usize || height > u32::MAX as usize {
        return Err(Error::Config(format!(
            "image dimensions {width}x{height} exceed the PNG limit"
        )));
    }

    let mut ihdr = Vec::with_capacity(13);
    ihdr.extend_from_slice(&(width as u32).to_be_bytes());
    ihdr.extend_from_slice(&(height as u32).to_be_bytes());
    ihdr.extend_from_slice(&[8, 2, 0, 0, 0]);

    let row_bytes = width * 3;
    let mut raw = Vec::with_capacity(height * (row_bytes + 1));
    for row in rgb.chunks(row_bytes) {
        raw.push(0);
        raw.extend_from_slice(row);
    }

    let mut out = Vec::new();
    out.extend_from_slice(&SIGNATURE);
    push_chunk(&mut out, b"IHDR", &ihdr);
    push_chunk(&mut out, b"IDAT", &zlib_stored(&raw));
    push_chunk(&mut out, b"IEND", &[]);
    Ok(out)
}

#[cfg(test)]
pub(crate) fn decode_rgb(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let fail = |msg: &str| Error::Data(format!("png decode: {msg}"));
    if bytes.len() < 8 || bytes[..8] != SIGNATURE {
        return Err(fail("bad signature"));
    }
    let mut pos = 8;
    let mut width = 0usize;
    let mut height = 0usize;
    let mut idat = Vec::new();
    let mut seen_end = false;
    while pos + 12 <= bytes.len() {
        let len = u32::from_be_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        let kind = &bytes[pos + 4..pos + 8];
        let data = &bytes[pos + 8..pos + 8 + len];
        let stored_crc = u32::from_be_bytes(bytes[pos + 8 + len..pos + 12 + len].try_into().unwrap());
        let mut crc_input = kind.to_vec();
        crc_input.extend_from_slice(data);
        if crc32(&crc_input) != stored_crc {
            return Err(fail("chunk crc mismatch"));
        }
        match kind {
            b"IHDR" => {
                width = u32::from_be_bytes(data[0..4].try_into().unwrap()) as usize;
                height = u32::from_be_bytes(data[4..8].try_into().unwrap()) as usize;
                if data[8] != 8 || data[9] != 2 || data[10] != 0 || data[11] != 0 || data[12] != 0 {
                    return Err(fail("not plain 8-bit RGB"));
                }
            }
            b"IDAT" => idat.extend_from_slice(data),
            b"IEND" => {
                seen_end = true;
                break;
            }
            _ => {}
        }
        pos += 12 + len;
    }
    if !seen_end {
        return Err(fail("missing IEND"));
    }

    if idat.len() < 6 || idat[0] != 0x78 {
        return Err(fail("bad zlib header"));
    }
    let mut raw = Vec::new();
    let mut pos = 2;
    loop {
        let header = idat[pos];
        if header & 0x06 != 0 {
            return Err(fail("only stored deflate blocks are supported"));
        }
        let len = u16::from_le_bytes(idat[pos + 1..pos + 3].try_into().unwrap());
        let nlen = u16::from_le_bytes(idat[pos + 3..pos + 5].try_into().unwrap());
        if nlen != !len {
            return Err(fail("stored block length check failed"));
        }
        let start = pos + 5;
        raw.extend_from_slice(&idat[start..start + len as usize]);
        pos = start + len as usize;
        if header & 0x01 != 0 {
            break;
        }
    }
    if adler32(&raw) != u32::from_be_bytes(idat[pos..pos + 4].try_into().unwrap()) {
        return Err(fail("adler-32 mismatch"));
    }

    let row_bytes = width * 3;
    if raw.len() != height * (row_bytes + 1) {
        return Err(fail("pixel payload has the wrong size"));
    }
    let mut rgb = Vec::with_capacity(width * height * 3);
    for row in raw.chunks(row_bytes + 1) {
        if row[0] != 0 {
            return Err(fail("unexpected row filter"));
        }
        rgb.extend_from_slice(&row[1..]);
    }
    Ok((width, height, rgb))
}
