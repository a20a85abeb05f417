//! The Hamming-threshold hash: bit strings become sets, sets become grid
//! sketches, and the predicate "distance at least t" is computed from two
//! sketches alone.
//!
//! Position i of an ell-bit input contributes element `2i - 1` when the bit
//! is set and `2i` when it is clear, so two strings at Hamming distance d
//! have sets with symmetric difference exactly 2d. Sampling the set encoding
//! at decoding threshold 2t therefore separates d < t from d >= t.

use std::fmt;

use crate::encoding::{decode, DecodeOutcome, EncodingKey, SampleError, Sketch};
use crate::params::{self, Params, Profile};

/// A sketch produced by [`PphKey::hash`].
pub type HashValue = Sketch;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitStringError {
    /// Input is not exactly `ceil(ell/8)` octets.
    LengthMismatch { expected_octets: usize, got: usize },
    /// A pad bit past position ell is set.
    PaddingNotZero,
}

impl fmt::Display for BitStringError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BitStringError::LengthMismatch {
                expected_octets,
                got,
            } => write!(
                f,
                "input must be exactly {expected_octets} octets, got {got}"
            ),
            BitStringError::PaddingNotZero => {
                write!(f, "pad bits past the declared length must be zero")
            }
        }
    }
}

impl std::error::Error for BitStringError {}

/// An ell-bit string. Bit i (1-indexed) is the i-th most significant bit of
/// the octet stream; ell need not be a multiple of 8, and the unused
/// low-order bits of the final octet must be zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitString {
    octets: Vec<u8>,
    ell: u64,
}

impl BitString {
    pub fn from_octets(octets: Vec<u8>, ell: u64) -> Result<BitString, BitStringError> {
        assert!(ell >= 1, "bit length must be at least 1");
        let expected = (ell as usize).div_ceil(8);
        if octets.len() != expected {
            return Err(BitStringError::LengthMismatch {
                expected_octets: expected,
                got: octets.len(),
            });
        }
        let pad_bits = (expected as u64) * 8 - ell;
        if pad_bits > 0 && octets[expected - 1] & ((1u8 << pad_bits) - 1) != 0 {
            return Err(BitStringError::PaddingNotZero);
        }
        Ok(BitString { octets, ell })
    }

    pub fn zeroes(ell: u64) -> BitString {
        assert!(ell >= 1);
        BitString {
            octets: vec![0; (ell as usize).div_ceil(8)],
            ell,
        }
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    pub fn octets(&self) -> &[u8] {
        &self.octets
    }

    /// Bit at position `1 <= i <= ell`.
    pub fn bit(&self, i: u64) -> u8 {
        assert!(i >= 1 && i <= self.ell, "bit index {i} outside [1, {}]", self.ell);
        let idx = (i - 1) as usize;
        (self.octets[idx / 8] >> (7 - idx % 8)) & 1
    }

    /// Copy with the bits at the given 1-indexed positions flipped.
    pub fn with_flipped(&self, positions: &[u64]) -> BitString {
        let mut out = self.clone();
        for &i in positions {
            assert!(i >= 1 && i <= self.ell);
            let idx = (i - 1) as usize;
            out.octets[idx / 8] ^= 1 << (7 - idx % 8);
        }
        out
    }

    pub fn complement(&self) -> BitString {
        self.with_flipped(&(1..=self.ell).collect::<Vec<_>>())
    }
}

/// The position-set of a bit string: `{2i - x_i | i in [ell]}`, ascending.
/// Exactly ell elements of `[2*ell]`, one per position.
pub fn bits_to_set(x: &BitString) -> Vec<u64> {
    (1..=x.ell).map(|i| 2 * i - u64::from(x.bit(i))).collect()
}

/// A sampled Hamming-threshold hash function.
pub struct PphKey {
    inner: EncodingKey,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PphError {
    Sample(SampleError),
    Derive(params::DeriveError),
    /// The key's parameters do not describe a Hamming-threshold instance
    /// (the decoding threshold must be exactly twice the bit threshold).
    NotAHammingKey,
}

impl fmt::Display for PphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PphError::Sample(e) => write!(f, "{e}"),
            PphError::Derive(e) => write!(f, "{e}"),
            PphError::NotAHammingKey => write!(
                f,
                "key parameters lack the Hamming interpretation: t_enc != 2t"
            ),
        }
    }
}

impl std::error::Error for PphError {}

impl PphKey {
    /// Samples a key for the predicate "Hamming distance at least t" on
    /// ell-bit inputs: the underlying set encoding runs over universe
    /// `m = 2*ell` at decoding threshold `2t`, giving a grid of width `4t`.
    pub fn sample(
        lambda: u64,
        ell: u64,
        t: u64,
        profile: Profile,
        seed: [u8; 32],
    ) -> Result<PphKey, PphError> {
        let p = params::derive(lambda, ell, t, profile).map_err(PphError::Derive)?;
        let inner = EncodingKey::sample(p, seed).map_err(PphError::Sample)?;
        Ok(PphKey { inner })
    }

    /// Wraps an existing set-encoding key, e.g. one read back from a file.
    pub fn from_encoding_key(inner: EncodingKey) -> Result<PphKey, PphError> {
        let p = inner.params();
        if p.t_enc != 2 * p.t || p.m != 2 * p.ell {
            return Err(PphError::NotAHammingKey);
        }
        Ok(PphKey { inner })
    }

    pub fn params(&self) -> &Params {
        self.inner.params()
    }

    pub fn inner(&self) -> &EncodingKey {
        &self.inner
    }

    pub fn into_inner(self) -> EncodingKey {
        self.inner
    }

    pub fn ell(&self) -> u64 {
        self.inner.params().ell
    }

    pub fn t(&self) -> u64 {
        self.inner.params().t
    }

    /// Hash an ell-bit input to its grid sketch.
    pub fn hash(&self, x: &BitString) -> HashValue {
        assert_eq!(x.ell(), self.ell(), "input length differs from key length");
        self.inner.encode(&bits_to_set(x))
    }

    /// The predicate from hashes alone: true iff the decoded set difference
    /// is Bottom or has at least 2t elements, i.e. iff the inputs are at
    /// Hamming distance at least t (up to the tested failure probability).
    pub fn eval(&self, y0: &HashValue, y1: &HashValue) -> bool {
        let threshold = 2 * self.t();
        match decode(&self.inner, y0, y1) {
            DecodeOutcome::Bottom => true,
            DecodeOutcome::Decoded(diff) => diff.len() as u64 >= threshold,
        }
    }
}
