//! Parameter derivation and validation.
//!
//! Every knob of the construction is a pure function of the caller's
//! security parameter `lambda`, the input length `ell` (or the universe size
//! `m` for the bare set encoding), and the threshold `t`. Derivation always
//! picks the smallest modulus and field prime satisfying the constraints, so
//! equal inputs produce identical parameter sets on every platform.

use std::fmt;

/// ln(3/e). The row-count bound divides by this.
const LN_3_OVER_E: f64 = 0.098_612_288_668_109_69;
/// 2^-40, added before the ceiling in `row_count_floor` so that platform
/// differences in the last ulp of `ln` cannot flip the rounded result.
const CEIL_MARGIN: f64 = 9.094_947_017_729_282e-13;

/// Seeds are always 32 octets.
pub const SEED_LEN: usize = 32;
/// Grid entries are stored in at most 8 octets and must stay strictly below
/// 2^63 so that a mod-q sum of two reduced entries cannot overflow u64.
pub const MAX_Q_BITS: u32 = 63;
/// Minimum grid height accepted for the toy profile.
pub const MIN_TOY_N: u64 = 8;

/// How the grid height `n` and the row-count floor are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// `n` and the row floor both equal `lambda`.
    Production,
    /// Caller-supplied overrides for desk-scale testing. The peelability
    /// floor on `k` still applies; only the extra `lambda`-row floor and the
    /// grid height are relaxed.
    Toy { n: u64, k_floor: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Params {
    pub lambda: u64,
    /// Input bit length for the Hamming predicate; the set universe is 2*ell.
    pub ell: u64,
    /// Hamming threshold.
    pub t: u64,
    /// Decoding threshold of the set encoding (2*t on the Hamming path).
    pub t_enc: u64,
    /// Universe size, always 2*ell.
    pub m: u64,
    /// Grid cell dimension (length of each mod-q vector).
    pub n: u64,
    /// Number of grid rows.
    pub k: u64,
    /// Cell modulus, prime.
    pub q: u64,
    /// Grid width, always 2*t_enc.
    pub w: u64,
    /// Field prime for the row functions.
    pub p_r: u64,
    /// Exponent in the modulus bound `q > ceil(sqrt(m+3) * n^delta)`, as a
    /// (numerator, denominator) pair. Fixed at (1, 1).
    pub delta: (u64, u64),
}

/// Rejected derivation input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeriveError {
    LambdaZero,
    EllTooSmall { ell: u64 },
    TOutOfRange { t: u64, ell: u64 },
    UniverseTooSmall { m: u64 },
    UniverseOdd { m: u64 },
    TEncZero,
    TEncExceedsUniverse { t_enc: u64, m: u64 },
    NTooSmall { n: u64 },
    KFloorZero,
    QTooWide { q_bits: u32 },
}

impl fmt::Display for DeriveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DeriveError::LambdaZero => write!(f, "lambda must be at least 1"),
            DeriveError::EllTooSmall { ell } => {
                write!(f, "ell must be at least 2, got {ell}")
            }
            DeriveError::TOutOfRange { t, ell } => {
                write!(f, "t must satisfy 1 <= t <= ell, got t={t} with ell={ell}")
            }
            DeriveError::UniverseTooSmall { m } => {
                write!(f, "universe size must be at least 4, got {m}")
            }
            DeriveError::UniverseOdd { m } => {
                write!(f, "universe size must be even, got {m}")
            }
            DeriveError::TEncZero => write!(f, "decoding threshold must be at least 1"),
            DeriveError::TEncExceedsUniverse { t_enc, m } => {
                write!(f, "decoding threshold {t_enc} exceeds universe size {m}")
            }
            DeriveError::NTooSmall { n } => {
                write!(f, "toy profile requires n >= {MIN_TOY_N}, got {n}")
            }
            DeriveError::KFloorZero => write!(f, "row-count floor must be at least 1"),
            DeriveError::QTooWide { q_bits } => {
                write!(
                    f,
                    "derived modulus needs {q_bits} bits, above the serializer limit of {MAX_Q_BITS}"
                )
            }
        }
    }
}

impl std::error::Error for DeriveError {}

/// First violated parameter constraint, by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    TExceedsEll,
    MNotTwiceEll,
    WNotTwiceTEnc,
    KBelowFloor,
    QNotPrime,
    QBelowBound,
    QTooWide,
    PrNotPrime,
    PrBelowBiasFloor,
    UnsupportedDelta,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Violation::TExceedsEll => "t exceeds ell",
            Violation::MNotTwiceEll => "m not twice ell",
            Violation::WNotTwiceTEnc => "W not twice t_enc",
            Violation::KBelowFloor => "k below peelability floor",
            Violation::QNotPrime => "q not prime",
            Violation::QBelowBound => "q below modulus bound",
            Violation::QTooWide => "q exceeds serializer width",
            Violation::PrNotPrime => "p_r not prime",
            Violation::PrBelowBiasFloor => "p_r below bias floor",
            Violation::UnsupportedDelta => "unsupported delta exponent",
        };
        f.write_str(name)
    }
}

impl std::error::Error for Violation {}

/// Derives parameters for the Hamming-threshold hash: universe `m = 2*ell`,
/// decoding threshold `t_enc = 2*t`, grid width `w = 4*t`.
pub fn derive(lambda: u64, ell: u64, t: u64, profile: Profile) -> Result<Params, DeriveError> {
    if lambda == 0 {
        return Err(DeriveError::LambdaZero);
    }
    if ell < 2 {
        return Err(DeriveError::EllTooSmall { ell });
    }
    if t == 0 || t > ell {
        return Err(DeriveError::TOutOfRange { t, ell });
    }
    finish(lambda, ell, t, 2 * t, 2 * ell, profile)
}

/// Derives parameters for the bare set encoding over universe `m` with
/// decoding threshold `t_enc`. The grid width is `2*t_enc`; `ell` and `t`
/// are back-filled as `m/2` and `ceil(t_enc/2)` so the same header layout
/// serves both paths. Keys derived here carry the Hamming interpretation
/// only when `t_enc` is even.
pub fn derive_for_encoding(
    lambda: u64,
    m: u64,
    t_enc: u64,
    profile: Profile,
) -> Result<Params, DeriveError> {
    if lambda == 0 {
        return Err(DeriveError::LambdaZero);
    }
    if m < 4 {
        return Err(DeriveError::UniverseTooSmall { m });
    }
    if !m.is_multiple_of(2) {
        return Err(DeriveError::UniverseOdd { m });
    }
    if t_enc == 0 {
        return Err(DeriveError::TEncZero);
    }
    if t_enc > m {
        return Err(DeriveError::TEncExceedsUniverse { t_enc, m });
    }
    finish(lambda, m / 2, t_enc.div_ceil(2), t_enc, m, profile)
}

fn finish(
    lambda: u64,
    ell: u64,
    t: u64,
    t_enc: u64,
    m: u64,
    profile: Profile,
) -> Result<Params, DeriveError> {
    let (n, k_floor) = match profile {
        Profile::Production => (lambda, lambda),
        Profile::Toy { n, k_floor } => {
            if n < MIN_TOY_N {
                return Err(DeriveError::NTooSmall { n });
            }
            if k_floor == 0 {
                return Err(DeriveError::KFloorZero);
            }
            (n, k_floor)
        }
    };
    let k = k_floor.max(row_count_floor(m));
    let q = next_prime_above(modulus_bound(m, n));
    let q_bits = 64 - (q - 1).leading_zeros();
    if q_bits > MAX_Q_BITS {
        return Err(DeriveError::QTooWide { q_bits });
    }
    let w = 2 * t_enc;
    Ok(Params {
        lambda,
        ell,
        t,
        t_enc,
        m,
        n,
        k,
        q,
        w,
        p_r: field_prime(m, w),
        delta: (1, 1),
    })
}

/// Re-checks every `Params` invariant, returning the first violation.
pub fn validate(p: &Params) -> Result<(), Violation> {
    if p.t > p.ell {
        return Err(Violation::TExceedsEll);
    }
    if p.m != 2 * p.ell {
        return Err(Violation::MNotTwiceEll);
    }
    if p.w != 2 * p.t_enc {
        return Err(Violation::WNotTwiceTEnc);
    }
    if p.k < row_count_floor(p.m) {
        return Err(Violation::KBelowFloor);
    }
    if !is_prime_u64(p.q) {
        return Err(Violation::QNotPrime);
    }
    if p.delta != (1, 1) {
        return Err(Violation::UnsupportedDelta);
    }
    if p.q <= modulus_bound(p.m, p.n) {
        return Err(Violation::QBelowBound);
    }
    if 64 - (p.q - 1).leading_zeros() > MAX_Q_BITS {
        return Err(Violation::QTooWide);
    }
    if !is_prime_u64(p.p_r) {
        return Err(Violation::PrNotPrime);
    }
    if p.p_r < p.m || p.p_r < bias_floor(p.w) {
        return Err(Violation::PrBelowBiasFloor);
    }
    Ok(())
}

impl Params {
    /// The 80-octet header block: ten u64 fields, little-endian, in the
    /// order lambda, ell, t, t_enc, m, n, k, q, W, p_r.
    pub fn to_block(&self) -> [u8; 80] {
        let fields = [
            self.lambda,
            self.ell,
            self.t,
            self.t_enc,
            self.m,
            self.n,
            self.k,
            self.q,
            self.w,
            self.p_r,
        ];
        let mut out = [0u8; 80];
        for (chunk, v) in out.chunks_exact_mut(8).zip(fields) {
            chunk.copy_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Inverse of [`Params::to_block`]. Performs no validation beyond the
    /// fixed layout; callers run [`validate`] on the result.
    pub fn from_block(block: &[u8; 80]) -> Params {
        let mut fields = [0u64; 10];
        for (chunk, v) in block.chunks_exact(8).zip(fields.iter_mut()) {
            *v = u64::from_le_bytes(chunk.try_into().expect("8-octet chunk"));
        }
        let [lambda, ell, t, t_enc, m, n, k, q, w, p_r] = fields;
        Params {
            lambda,
            ell,
            t,
            t_enc,
            m,
            n,
            k,
            q,
            w,
            p_r,
            delta: (1, 1),
        }
    }

    /// Bits needed to address one cell entry: `ceil(log2 q)`.
    pub fn q_bits(&self) -> u32 {
        64 - (self.q - 1).leading_zeros()
    }

    /// Octets per serialized cell entry: `ceil(ceil(log2 q) / 8)`.
    pub fn entry_width(&self) -> usize {
        self.q_bits().div_ceil(8) as usize
    }

    /// Serialized sketch payload size in bits by the compression formula:
    /// `W * k * n * ceil(log2 q)`.
    pub fn sketch_bits(&self) -> u64 {
        self.w * self.k * self.n * u64::from(self.q_bits())
    }
}

/// Peelability floor on the row count: `ceil(2 * log_{3/e}(m))`, computed as
/// `2 ln(m) / ln(3/e)` with a 2^-40 margin folded in before the ceiling.
pub fn row_count_floor(m: u64) -> u64 {
    debug_assert!(m >= 2);
    (2.0 * (m as f64).ln() / LN_3_OVER_E + CEIL_MARGIN).ceil() as u64
}

/// `ceil(sqrt(m+3) * n)`; the modulus must exceed this.
pub fn modulus_bound(m: u64, n: u64) -> u64 {
    let v = (m as u128 + 3) * (n as u128) * (n as u128);
    let s = isqrt_u128(v);
    let ceil = if s * s == v { s } else { s + 1 };
    u64::try_from(ceil).expect("modulus bound exceeds u64")
}

/// Smallest field prime admissible for row functions over `[m] -> [w]`:
/// at least `m` (so domain points are distinct field points) and at least
/// `w * 2^40` (so the mod-w range reduction bias is below 2^-40 per point).
pub fn field_prime(m: u64, w: u64) -> u64 {
    next_prime_at_least(m.max(bias_floor(w)))
}

fn bias_floor(w: u64) -> u64 {
    (w << 40).max(1 << 41)
}

pub fn next_prime_above(x: u64) -> u64 {
    next_prime_at_least(x + 1)
}

pub fn next_prime_at_least(x: u64) -> u64 {
    let mut candidate = x.max(2);
    loop {
        if is_prime_u64(candidate) {
            return candidate;
        }
        candidate += 1;
    }
}

/// Deterministic Miller-Rabin for u64. The witness set 2..=37 is known to be
/// exact for all 64-bit integers.
pub fn is_prime_u64(x: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if x < 2 {
        return false;
    }
    for p in WITNESSES {
        if x.is_multiple_of(p) {
            return x == p;
        }
    }
    let mut d = x - 1;
    let s = d.trailing_zeros();
    d >>= s;
    'witness: for a in WITNESSES {
        let mut v = pow_mod(a, d, x);
        if v == 1 || v == x - 1 {
            continue;
        }
        for _ in 1..s {
            v = mul_mod(v, v, x);
            if v == x - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn mul_mod(a: u64, b: u64, modulus: u64) -> u64 {
    ((a as u128 * b as u128) % modulus as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, modulus: u64) -> u64 {
    let mut acc = 1u64;
    base %= modulus;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, modulus);
        }
        base = mul_mod(base, base, modulus);
        exp >>= 1;
    }
    acc
}

fn isqrt_u128(v: u128) -> u128 {
    if v < 2 {
        return v;
    }
    // f64 seed, then Newton steps; exact floor for all u128 inputs.
    let mut x = (v as f64).sqrt() as u128 + 1;
    loop {
        let y = (x + v / x) / 2;
        if y >= x {
            break;
        }
        x = y;
    }
    while x * x > v {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= v {
        x += 1;
    }
    x
}
