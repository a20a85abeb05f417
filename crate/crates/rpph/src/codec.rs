//! Bit-exact file formats for keys and sketches.
//!
//! Key file, 154 octets total:
//! magic "RPPH1" | version 0x01 | param block (lambda, ell, t, t_enc, m, n,
//! k, q, W, p_r as u64 little-endian) | seed (32 octets) | retry counter
//! (u32 little-endian) | fingerprint (32 octets).
//!
//! Sketch file: magic "RSKT1" | version 0x01 | key fingerprint (32 octets) |
//! payload of k*W*n entries in (row, column, coordinate) order, each a
//! fixed-width little-endian integer of ceil(ceil(log2 q)/8) octets.
//!
//! The fingerprint is `XOF(param block || seed || counter)`, the same value
//! embedded in every sketch, so files produced under different keys can
//! never be combined silently. Keys store only the seed; rows, columns, and
//! the reverse index are re-derived on read (domain tags "RSE/A" for
//! columns, "RSE/R" for rows, "RSE/RETRY" for resampled working seeds).

use std::fmt;

use crate::encoding::{EncodingKey, SampleError, Sketch};
use crate::params::{self, Params, Violation};

pub const KEY_MAGIC: &[u8; 5] = b"RPPH1";
pub const SKETCH_MAGIC: &[u8; 5] = b"RSKT1";
pub const FORMAT_VERSION: u8 = 0x01;

/// Fixed size of a serialized key.
pub const KEY_FILE_LEN: usize = 5 + 1 + 80 + 32 + 4 + 32;
/// Sketch header size; the payload length depends on the parameters.
pub const SKETCH_HEADER_LEN: usize = 5 + 1 + 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodecError {
    BadMagic,
    UnsupportedVersion(u8),
    Truncated { expected: usize, got: usize },
    EntryOutOfRange { index: usize, value: u64, modulus: u64 },
    FingerprintMismatch,
    Params(Violation),
    Reconstruction(SampleError),
}

impl fmt::Display for CodecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodecError::BadMagic => write!(f, "unrecognized magic"),
            CodecError::UnsupportedVersion(v) => write!(f, "unsupported format version {v}"),
            CodecError::Truncated { expected, got } => {
                write!(f, "truncated or padded file: expected {expected} octets, got {got}")
            }
            CodecError::EntryOutOfRange {
                index,
                value,
                modulus,
            } => write!(f, "payload entry {index} is {value}, not below modulus {modulus}"),
            CodecError::FingerprintMismatch => write!(f, "key fingerprint mismatch"),
            CodecError::Params(v) => write!(f, "parameter constraint violated: {v}"),
            CodecError::Reconstruction(e) => write!(f, "key reconstruction failed: {e}"),
        }
    }
}

impl std::error::Error for CodecError {}

pub fn encode_key(key: &EncodingKey) -> Vec<u8> {
    let mut out = Vec::with_capacity(KEY_FILE_LEN);
    out.extend_from_slice(KEY_MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&key.params().to_block());
    out.extend_from_slice(key.seed());
    out.extend_from_slice(&key.retry_counter().to_le_bytes());
    out.extend_from_slice(key.fingerprint());
    debug_assert_eq!(out.len(), KEY_FILE_LEN);
    out
}

pub fn decode_key(bytes: &[u8]) -> Result<EncodingKey, CodecError> {
    if bytes.len() < 6 {
        return Err(CodecError::Truncated {
            expected: KEY_FILE_LEN,
            got: bytes.len(),
        });
    }
    if &bytes[..5] != KEY_MAGIC {
        return Err(CodecError::BadMagic);
    }
    if bytes[5] != FORMAT_VERSION {
        return Err(CodecError::UnsupportedVersion(bytes[5]));
    }
    if bytes.len() != KEY_FILE_LEN {
        return Err(CodecError::Truncated {
            expected: KEY_FILE_LEN,
            got: bytes.len(),
        });
    }
    let block: [u8; 80] = bytes[6..86].try_into().expect("fixed slice");
    let seed: [u8; 32] = bytes[86..118].try_into().expect("fixed slice");
    let counter = u32::from_le_bytes(bytes[118..122].try_into().expect("fixed slice"));
    let stored_fp: [u8; 32] = bytes[122..154].try_into().expect("fixed slice");

    if crate::xof::fingerprint(&block, &seed, counter) != stored_fp {
        return Err(CodecError::FingerprintMismatch);
    }
    let p = Params::from_block(&block);
    params::validate(&p).map_err(CodecError::Params)?;
    EncodingKey::rebuild(p, seed, counter).map_err(CodecError::Reconstruction)
}

pub fn encode_sketch(sketch: &Sketch) -> Vec<u8> {
    let width = entry_width(sketch.modulus());
    let cells = sketch.cells();
    let mut out = Vec::with_capacity(SKETCH_HEADER_LEN + cells.len() * width);
    out.extend_from_slice(SKETCH_MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(sketch.fingerprint());
    for &v in cells {
        out.extend_from_slice(&v.to_le_bytes()[..width]);
    }
    out
}

/// Parses a sketch produced under `key`. The embedded fingerprint must match
/// the key's; every entry must lie below the key's modulus.
pub fn decode_sketch(bytes: &[u8], key: &EncodingKey) -> Result<Sketch, CodecError> {
    let p = key.params();
    let (k, w, n) = (p.k as usize, p.w as usize, p.n as usize);
    let width = p.entry_width();
    let expected = SKETCH_HEADER_LEN + k * w * n * width;
    if bytes.len() < 6 {
        return Err(CodecError::Truncated {
            expected,
            got: bytes.len(),
        });
    }
    if &bytes[..5] != SKETCH_MAGIC {
        return Err(CodecError::BadMagic);
    }
    if bytes[5] != FORMAT_VERSION {
        return Err(CodecError::UnsupportedVersion(bytes[5]));
    }
    if bytes.len() < SKETCH_HEADER_LEN {
        return Err(CodecError::Truncated {
            expected,
            got: bytes.len(),
        });
    }
    if &bytes[6..38] != key.fingerprint() {
        return Err(CodecError::FingerprintMismatch);
    }
    if bytes.len() != expected {
        return Err(CodecError::Truncated {
            expected,
            got: bytes.len(),
        });
    }
    let mut cells = Vec::with_capacity(k * w * n);
    for (index, chunk) in bytes[SKETCH_HEADER_LEN..].chunks_exact(width).enumerate() {
        let mut le = [0u8; 8];
        le[..width].copy_from_slice(chunk);
        let value = u64::from_le_bytes(le);
        if value >= p.q {
            return Err(CodecError::EntryOutOfRange {
                index,
                value,
                modulus: p.q,
            });
        }
        cells.push(value);
    }
    Ok(Sketch::from_parts(cells, k, w, n, p.q, *key.fingerprint()))
}

fn entry_width(q: u64) -> usize {
    (64 - (q - 1).leading_zeros()).div_ceil(8) as usize
}
