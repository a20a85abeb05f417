//! Robust property-preserving hashing for exact Hamming thresholds.
//!
//! The core object is an invertible set encoding: a `k x W` grid of
//! dimension-`n` vectors mod a prime `q`, where each element of a universe
//! `[1, m]` contributes one seed-derived column per row at a position chosen
//! by a bounded-independence row function. Subtracting two encodings and
//! peeling cells that match a known `+column(x)` or `-column(x)` recovers
//! the symmetric difference of the encoded sets, or reports bottom when no
//! consistent answer emerges. Because recognizable cell values are tied to
//! short vectors in a random lattice, fooling the decoder into a wrong
//! non-bottom answer stays hard even for inputs chosen after seeing the key.
//!
//! On top of that sits the Hamming hash: a bit string of length `ell` maps
//! to the set `{2i - bit_i}`, so two strings at distance `d` map to sets
//! whose symmetric difference has exactly `2d` elements, and comparing two
//! hashes reduces to decoding one subtraction.
//!
//! ```
//! use rpph::{BitString, PphKey, Profile};
//!
//! let profile = Profile::Toy { n: 8, k_floor: 32 };
//! let key = PphKey::sample(32, 16, 2, profile, [7u8; 32]).unwrap();
//! let x0 = BitString::from_octets(vec![0b1100_0000, 0x00], 16).unwrap();
//! let x1 = BitString::zeroes(16);
//! let far = key.eval(&key.hash(&x0), &key.hash(&x1));
//! let near = key.eval(&key.hash(&x0), &key.hash(&x0));
//! assert!(far && !near);
//! ```

pub mod codec;
pub mod encoding;
pub mod lattice;
pub mod oracles;
pub mod params;
pub mod pph;
pub mod twise;
pub mod xof;

pub use codec::{decode_key, decode_sketch, encode_key, encode_sketch, CodecError};
pub use encoding::{
    decode, decode_traced, diff, find_peelable, peel, sample_encoding, signed_diff,
    signed_diff_sketches, DecodeOutcome, EncodingKey, PeelSet, SampleError, SignedOutcome, Sketch,
};
pub use lattice::{CollisionReport, ColumnIndex, ColumnOracle, ModQVector, Sign};
pub use oracles::{
    adversarial_probe_suite, exhaustive_decode_check, naive_hamming, naive_symdiff,
    peelability_experiment, TrialReport,
};
pub use params::{derive, derive_for_encoding, validate, DeriveError, Params, Profile, Violation};
pub use pph::{bits_to_set, BitString, BitStringError, HashValue, PphError, PphKey};
pub use twise::TwiseHashFunc;
pub use xof::XofStream;
