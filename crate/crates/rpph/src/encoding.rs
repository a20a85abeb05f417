//! The robust set encoding: a k x W grid of mod-q vectors with a peeling
//! decoder.
//!
//! Encoding a set X adds `column(x)` into cell `(i, r_i(x))` for every
//! element x and row i. Subtracting two encodings leaves the signed columns
//! of the symmetric difference, which the decoder recovers by repeatedly
//! looking cell values up in the signed column index and peeling the hits.
//! A non-Bottom decode is the exact symmetric difference unless someone has
//! produced a short vector in the kernel of the seed-derived matrix; Bottom
//! is always a safe answer.

use std::borrow::Cow;
use std::collections::BTreeSet;
use std::fmt;

use crate::lattice::{
    add_mod, entry_width, sub_mod, CollisionReport, ColumnIndex, ColumnOracle, ModQVector, Sign,
};
use crate::params::{self, Params, Violation};
use crate::twise::TwiseHashFunc;
use crate::xof::{attempt_seed, fingerprint, XofStream, TAG_ROWS};

/// Upper bound on collision-resample attempts. At any parameter scale where
/// the index can be built at all, the per-attempt failure probability makes
/// a thousand straight failures a practical impossibility; the cap exists so
/// degenerate hand-built parameter sets terminate instead of spinning.
pub const RETRY_CAP: u32 = 1000;

/// Byte budget for the optional encode acceleration tables.
const CACHE_BUDGET: usize = 128 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SampleError {
    Derive(params::DeriveError),
    Params(Violation),
    RetriesExhausted { attempts: u32 },
    /// Rebuilding at a stored retry counter hit a collision, so the header
    /// does not name a valid instantiation.
    CollisionAtCounter { counter: u32, report: CollisionReport },
}

impl fmt::Display for SampleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleError::Derive(e) => write!(f, "parameter derivation failed: {e}"),
            SampleError::Params(v) => write!(f, "parameter constraint violated: {v}"),
            SampleError::RetriesExhausted { attempts } => {
                write!(f, "no collision-free column index within {attempts} attempts")
            }
            SampleError::CollisionAtCounter { counter, report } => {
                write!(f, "index collision at stored retry counter {counter}: {report}")
            }
        }
    }
}

impl std::error::Error for SampleError {}

struct EncodeCache {
    /// Flat column table: entries of `column(x)` at `(x-1)*n ..`.
    columns: Vec<u64>,
    /// Row targets, 0-based: `targets[i*m + (x-1)] = r_i(x) - 1`.
    targets: Vec<u32>,
    /// Whether a whole-universe sum fits u64, allowing one deferred
    /// reduction per cell entry instead of a reduction per addition.
    lazy_sums: bool,
}

/// The sampled key: parameters, row functions, column oracle, and the
/// signed column index, all derived from one 32-octet seed.
pub struct EncodingKey {
    params: Params,
    seed: [u8; 32],
    retry_counter: u32,
    fingerprint: [u8; 32],
    rows: Vec<TwiseHashFunc>,
    oracle: ColumnOracle,
    index: ColumnIndex,
    cache: Option<EncodeCache>,
}

impl fmt::Debug for EncodingKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EncodingKey")
            .field("params", &self.params)
            .field("retry_counter", &self.retry_counter)
            .field("fingerprint", &self.fingerprint)
            .finish_non_exhaustive()
    }
}

impl PartialEq for EncodingKey {
    fn eq(&self, other: &Self) -> bool {
        // Everything else is a pure function of these four fields.
        self.params == other.params
            && self.seed == other.seed
            && self.retry_counter == other.retry_counter
            && self.fingerprint == other.fingerprint
    }
}

impl Eq for EncodingKey {}

impl EncodingKey {
    /// Samples a key from validated parameters and a seed, resampling
    /// deterministically past index collisions.
    pub fn sample(params: Params, seed: [u8; 32]) -> Result<EncodingKey, SampleError> {
        params::validate(&params).map_err(SampleError::Params)?;
        for counter in 0..RETRY_CAP {
            match Self::instantiate(params, seed, counter) {
                Ok(key) => return Ok(key),
                Err(_report) => continue,
            }
        }
        Err(SampleError::RetriesExhausted {
            attempts: RETRY_CAP,
        })
    }

    /// Rebuilds the key a file header describes: same seed, same retry
    /// counter, no search.
    pub fn rebuild(params: Params, seed: [u8; 32], counter: u32) -> Result<EncodingKey, SampleError> {
        params::validate(&params).map_err(SampleError::Params)?;
        Self::instantiate(params, seed, counter)
            .map_err(|report| SampleError::CollisionAtCounter { counter, report })
    }

    fn instantiate(
        params: Params,
        seed: [u8; 32],
        counter: u32,
    ) -> Result<EncodingKey, CollisionReport> {
        let working = attempt_seed(&seed, counter);
        let mut row_stream = XofStream::new(&[TAG_ROWS, &working]);
        let rows: Vec<TwiseHashFunc> = (0..params.k)
            .map(|_| {
                TwiseHashFunc::sample_with_prime(
                    &mut row_stream,
                    params.t_enc,
                    params.p_r,
                    params.m,
                    params.w,
                )
            })
            .collect();
        let oracle = ColumnOracle::new(working, params.n, params.m, params.q);
        let index = ColumnIndex::build(&oracle)?;
        let fingerprint = fingerprint(&params.to_block(), &seed, counter);
        let mut key = EncodingKey {
            params,
            seed,
            retry_counter: counter,
            fingerprint,
            rows,
            oracle,
            index,
            cache: None,
        };
        key.cache = key.build_cache();
        Ok(key)
    }

    fn build_cache(&self) -> Option<EncodeCache> {
        let (m, n, k) = (
            self.params.m as usize,
            self.params.n as usize,
            self.params.k as usize,
        );
        let footprint = k
            .checked_mul(m)?
            .checked_mul(4)?
            .checked_add(m.checked_mul(n)?.checked_mul(8)?)?;
        if footprint > CACHE_BUDGET || self.params.w > u64::from(u32::MAX) {
            return None;
        }
        let mut columns = Vec::with_capacity(m * n);
        for x in 1..=self.params.m {
            columns.extend_from_slice(self.oracle.column(x).entries());
        }
        let mut targets = Vec::with_capacity(k * m);
        for row in &self.rows {
            for x in 1..=self.params.m {
                targets.push((row.eval(x) - 1) as u32);
            }
        }
        let lazy_sums = (self.params.m as u128) * ((self.params.q - 1) as u128) < (1u128 << 64);
        Some(EncodeCache {
            columns,
            targets,
            lazy_sums,
        })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn seed(&self) -> &[u8; 32] {
        &self.seed
    }

    pub fn retry_counter(&self) -> u32 {
        self.retry_counter
    }

    pub fn fingerprint(&self) -> &[u8; 32] {
        &self.fingerprint
    }

    pub fn rows(&self) -> &[TwiseHashFunc] {
        &self.rows
    }

    pub fn oracle(&self) -> &ColumnOracle {
        &self.oracle
    }

    pub fn index(&self) -> &ColumnIndex {
        &self.index
    }

    /// 0-based grid column of element x in row i.
    fn target(&self, i: usize, x: u64) -> usize {
        match &self.cache {
            Some(c) => c.targets[i * self.params.m as usize + (x - 1) as usize] as usize,
            None => (self.rows[i].eval(x) - 1) as usize,
        }
    }

    fn column_entries(&self, x: u64) -> Cow<'_, [u64]> {
        match &self.cache {
            Some(c) => {
                let n = self.params.n as usize;
                let off = (x - 1) as usize * n;
                Cow::Borrowed(&c.columns[off..off + n])
            }
            None => Cow::Owned(self.oracle.column(x).entries().to_vec()),
        }
    }

    /// Encodes a set, given as a slice of distinct elements of `[1, m]` in
    /// any order. Order cannot affect the result; duplicates and
    /// out-of-universe elements are contract violations.
    pub fn encode(&self, elements: &[u64]) -> Sketch {
        let m = self.params.m;
        let mut seen = vec![0u64; (m as usize).div_ceil(64)];
        for &x in elements {
            assert!(x >= 1 && x <= m, "element {x} outside universe [1, {m}]");
            let (word, bit) = (((x - 1) / 64) as usize, (x - 1) % 64);
            assert!(
                seen[word] >> bit & 1 == 0,
                "duplicate element {x}: encode takes a set"
            );
            seen[word] |= 1 << bit;
        }

        let (k, w, n) = self.grid_dims();
        let q = self.params.q;
        let mut cells = vec![0u64; k * w * n];
        match &self.cache {
            Some(cache) => {
                let m = m as usize;
                if cache.lazy_sums {
                    for i in 0..k {
                        let trow = &cache.targets[i * m..(i + 1) * m];
                        let row_cells = &mut cells[i * w * n..(i + 1) * w * n];
                        for &x in elements {
                            let xi = (x - 1) as usize;
                            let j = trow[xi] as usize;
                            let src = &cache.columns[xi * n..(xi + 1) * n];
                            let dst = &mut row_cells[j * n..(j + 1) * n];
                            for (d, s) in dst.iter_mut().zip(src) {
                                // Bounded by m * (q - 1) < 2^64; reduced below.
                                *d = d.wrapping_add(*s);
                            }
                        }
                    }
                    for v in cells.iter_mut() {
                        *v %= q;
                    }
                } else {
                    for i in 0..k {
                        let trow = &cache.targets[i * m..(i + 1) * m];
                        let row_cells = &mut cells[i * w * n..(i + 1) * w * n];
                        for &x in elements {
                            let xi = (x - 1) as usize;
                            let j = trow[xi] as usize;
                            let src = &cache.columns[xi * n..(xi + 1) * n];
                            let dst = &mut row_cells[j * n..(j + 1) * n];
                            for (d, s) in dst.iter_mut().zip(src) {
                                *d = add_mod(*d, *s, q);
                            }
                        }
                    }
                }
            }
            None => {
                for &x in elements {
                    let col = self.oracle.column(x);
                    for i in 0..k {
                        let j = self.target(i, x);
                        let dst = &mut cells[(i * w + j) * n..(i * w + j + 1) * n];
                        for (d, s) in dst.iter_mut().zip(col.entries()) {
                            *d = add_mod(*d, *s, q);
                        }
                    }
                }
            }
        }
        Sketch {
            cells,
            k,
            w,
            n,
            q,
            fingerprint: self.fingerprint,
        }
    }

    fn grid_dims(&self) -> (usize, usize, usize) {
        (
            self.params.k as usize,
            self.params.w as usize,
            self.params.n as usize,
        )
    }
}

/// Convenience sampler for the bare set encoding over universe `m` at
/// decoding threshold `t_enc`.
pub fn sample_encoding(
    lambda: u64,
    t_enc: u64,
    m: u64,
    profile: params::Profile,
    seed: [u8; 32],
) -> Result<EncodingKey, SampleError> {
    let p = params::derive_for_encoding(lambda, m, t_enc, profile).map_err(SampleError::Derive)?;
    EncodingKey::sample(p, seed)
}

/// The k x W grid. Cells are stored flat in (row, column, coordinate)
/// order, each entry reduced mod q.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sketch {
    cells: Vec<u64>,
    k: usize,
    w: usize,
    n: usize,
    q: u64,
    fingerprint: [u8; 32],
}

impl Sketch {
    pub(crate) fn from_parts(
        cells: Vec<u64>,
        k: usize,
        w: usize,
        n: usize,
        q: u64,
        fingerprint: [u8; 32],
    ) -> Sketch {
        assert_eq!(cells.len(), k * w * n);
        assert!(cells.iter().all(|&v| v < q));
        Sketch {
            cells,
            k,
            w,
            n,
            q,
            fingerprint,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.k, self.w, self.n)
    }

    pub fn modulus(&self) -> u64 {
        self.q
    }

    pub fn fingerprint(&self) -> &[u8; 32] {
        &self.fingerprint
    }

    pub(crate) fn cells(&self) -> &[u64] {
        &self.cells
    }

    #[inline]
    fn cell(&self, i: usize, j: usize) -> &[u64] {
        let off = (i * self.w + j) * self.n;
        &self.cells[off..off + self.n]
    }

    pub fn cell_vector(&self, i: usize, j: usize) -> ModQVector {
        ModQVector::from_entries(self.cell(i, j).to_vec(), self.q)
    }

    fn check_compatible(&self, other: &Sketch) {
        assert_eq!(
            self.fingerprint, other.fingerprint,
            "sketch fingerprint mismatch: different keys"
        );
        debug_assert_eq!((self.k, self.w, self.n, self.q), (other.k, other.w, other.n, other.q));
    }

    /// Entrywise difference; both sketches must come from the same key.
    pub fn subtract(&self, other: &Sketch) -> Sketch {
        self.check_compatible(other);
        let cells = self
            .cells
            .iter()
            .zip(&other.cells)
            .map(|(&a, &b)| sub_mod(a, b, self.q))
            .collect();
        Sketch {
            cells,
            k: self.k,
            w: self.w,
            n: self.n,
            q: self.q,
            fingerprint: self.fingerprint,
        }
    }

    pub fn negate(&self) -> Sketch {
        let cells = self
            .cells
            .iter()
            .map(|&a| if a == 0 { 0 } else { self.q - a })
            .collect();
        Sketch {
            cells,
            k: self.k,
            w: self.w,
            n: self.n,
            q: self.q,
            fingerprint: self.fingerprint,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.cells.iter().all(|&v| v == 0)
    }
}

/// One round of decoder discoveries: `(element, sign)` pairs with set
/// semantics.
pub type PeelSet = BTreeSet<(u64, Sign)>;

/// Scans every cell and collects `(x, sign)` for each cell value that is
/// exactly a signed column.
pub fn find_peelable(key: &EncodingKey, h: &Sketch) -> PeelSet {
    assert_eq!(h.fingerprint, key.fingerprint, "sketch from a different key");
    let width = entry_width(h.q);
    let mut keybuf = vec![0u8; h.n * width];
    let mut out = PeelSet::new();
    for i in 0..h.k {
        for j in 0..h.w {
            let cell = h.cell(i, j);
            if cell.iter().all(|&v| v == 0) {
                continue;
            }
            let mut off = 0;
            for &v in cell {
                keybuf[off..off + width].copy_from_slice(&v.to_le_bytes()[..width]);
                off += width;
            }
            if let Some(hit) = key.index().lookup_octets(&keybuf) {
                out.insert(hit);
            }
        }
    }
    out
}

/// Subtracts `sign * column(x)` from all k cells of every `(x, sign)` in Z.
pub fn peel(key: &EncodingKey, h: &Sketch, z: &PeelSet) -> Sketch {
    let mut out = h.clone();
    peel_in_place(key, &mut out, z);
    out
}

fn peel_in_place(key: &EncodingKey, h: &mut Sketch, z: &PeelSet) {
    assert_eq!(h.fingerprint, key.fingerprint, "sketch from a different key");
    let q = h.q;
    let (w, n) = (h.w, h.n);
    for &(x, sign) in z {
        let col = key.column_entries(x);
        for i in 0..h.k {
            let j = key.target(i, x);
            let dst = &mut h.cells[(i * w + j) * n..(i * w + j + 1) * n];
            match sign {
                Sign::Plus => {
                    for (d, s) in dst.iter_mut().zip(col.iter()) {
                        *d = sub_mod(*d, *s, q);
                    }
                }
                Sign::Minus => {
                    for (d, s) in dst.iter_mut().zip(col.iter()) {
                        *d = add_mod(*d, *s, q);
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeOutcome {
    /// The recovered symmetric difference.
    Decoded(BTreeSet<u64>),
    /// Explicit failure; always a safe answer.
    Bottom,
}

impl DecodeOutcome {
    pub fn is_bottom(&self) -> bool {
        matches!(self, DecodeOutcome::Bottom)
    }
}

/// Peeling decoder. Runs at most `t_enc + 1` rounds: an honest difference
/// below the decoding threshold peels in at most `t_enc`, and anything
/// still looping past the cap can only have been crafted, for which Bottom
/// is the safe answer.
pub fn decode(key: &EncodingKey, h0: &Sketch, h1: &Sketch) -> DecodeOutcome {
    decode_traced(key, h0, h1).0
}

/// As [`decode`], also returning the per-round peel sets for callers that
/// need the signs or the round structure.
pub fn decode_traced(key: &EncodingKey, h0: &Sketch, h1: &Sketch) -> (DecodeOutcome, Vec<PeelSet>) {
    let mut h = h0.subtract(h1);
    let cap = key.params.t_enc as usize + 1;
    let mut rounds: Vec<PeelSet> = Vec::new();
    let mut recovered = BTreeSet::new();
    while rounds.len() < cap {
        let z = find_peelable(key, &h);
        if z.is_empty() {
            break;
        }
        for &(x, _) in &z {
            recovered.insert(x);
        }
        peel_in_place(key, &mut h, &z);
        rounds.push(z);
    }
    if h.is_zero() {
        (DecodeOutcome::Decoded(recovered), rounds)
    } else {
        (DecodeOutcome::Bottom, rounds)
    }
}

/// Shorthand: decode the difference of two freshly encoded sets.
pub fn diff(key: &EncodingKey, x0: &[u64], x1: &[u64]) -> DecodeOutcome {
    decode(key, &key.encode(x0), &key.encode(x1))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SignedOutcome {
    /// Elements only in the left set, elements only in the right set.
    Split {
        only_left: BTreeSet<u64>,
        only_right: BTreeSet<u64>,
    },
    Bottom,
}

/// Decode with the witness signs kept: `+` hits were only in the sketch on
/// the left, `-` hits only in the one on the right. An element peeled with
/// both signs across rounds is ambiguous and yields Bottom.
pub fn signed_diff_sketches(key: &EncodingKey, h0: &Sketch, h1: &Sketch) -> SignedOutcome {
    let (outcome, rounds) = decode_traced(key, h0, h1);
    if outcome.is_bottom() {
        return SignedOutcome::Bottom;
    }
    let mut only_left = BTreeSet::new();
    let mut only_right = BTreeSet::new();
    for z in &rounds {
        for &(x, sign) in z {
            let (mine, theirs) = match sign {
                Sign::Plus => (&mut only_left, &mut only_right),
                Sign::Minus => (&mut only_right, &mut only_left),
            };
            if theirs.contains(&x) {
                return SignedOutcome::Bottom;
            }
            mine.insert(x);
        }
    }
    SignedOutcome::Split {
        only_left,
        only_right,
    }
}

/// [`signed_diff_sketches`] over freshly encoded sets.
pub fn signed_diff(key: &EncodingKey, x0: &[u64], x1: &[u64]) -> SignedOutcome {
    signed_diff_sketches(key, &key.encode(x0), &key.encode(x1))
}
