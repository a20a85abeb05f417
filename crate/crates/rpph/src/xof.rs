//! Seeded byte-stream expansion.
//!
//! All key material is derived from a 32-octet seed through SHAKE256 under
//! fixed domain-separation tags, so a key file only ever needs to store the
//! seed and the retry counter.

use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::{Shake256, Shake256Reader};

/// Tag for deriving matrix columns: `TAG_COLUMNS || seed || x_le64`.
pub(crate) const TAG_COLUMNS: &[u8] = b"RSE/A";
/// Tag for the row-function coefficient stream: `TAG_ROWS || seed`.
pub(crate) const TAG_ROWS: &[u8] = b"RSE/R";
/// Tag for re-deriving the working seed after an index collision:
/// `TAG_RETRY || seed || counter_le32`.
pub(crate) const TAG_RETRY: &[u8] = b"RSE/RETRY";
/// Tag prefix for reproducible experiment randomness in the oracle suite.
pub(crate) const TAG_EXPERIMENT: &[u8] = b"RSE/EXP";

/// An unbounded deterministic octet stream.
pub struct XofStream {
    reader: Shake256Reader,
}

impl XofStream {
    /// Absorbs `parts` in order and finalizes into a squeezing state.
    pub fn new(parts: &[&[u8]]) -> XofStream {
        let mut hasher = Shake256::default();
        for part in parts {
            hasher.update(part);
        }
        XofStream {
            reader: hasher.finalize_xof(),
        }
    }

    pub fn fill(&mut self, buf: &mut [u8]) {
        self.reader.read(buf);
    }

    /// Uniform draw from `[0, modulus)` by rejection sampling: reads
    /// `ceil(bits/8)` octets where `bits` is the bit length of `modulus - 1`,
    /// masks down to `bits`, and rejects values >= `modulus`. No modulo bias.
    pub fn next_u64_below(&mut self, modulus: u64) -> u64 {
        debug_assert!(modulus >= 2, "draw needs a modulus of at least 2");
        let bits = 64 - (modulus - 1).leading_zeros();
        let nbytes = bits.div_ceil(8) as usize;
        let mask = if bits == 64 {
            u64::MAX
        } else {
            (1u64 << bits) - 1
        };
        let mut buf = [0u8; 8];
        loop {
            self.fill(&mut buf[..nbytes]);
            let v = u64::from_le_bytes(buf) & mask;
            if v < modulus {
                return v;
            }
        }
    }
}

/// Working seed for attempt `counter` of key instantiation. Attempt 0 is the
/// caller's seed unchanged, so collision-free sampling is a pass-through.
pub(crate) fn attempt_seed(seed: &[u8; 32], counter: u32) -> [u8; 32] {
    if counter == 0 {
        return *seed;
    }
    let mut out = [0u8; 32];
    XofStream::new(&[TAG_RETRY, seed, &counter.to_le_bytes()]).fill(&mut out);
    out
}

/// Key fingerprint: 32 octets of `XOF(param_block || seed || counter_le32)`.
/// Embedded in every key and sketch file so mismatched pairings are detected.
pub(crate) fn fingerprint(param_block: &[u8], seed: &[u8; 32], counter: u32) -> [u8; 32] {
    let mut out = [0u8; 32];
    XofStream::new(&[param_block, seed, &counter.to_le_bytes()]).fill(&mut out);
    out
}
