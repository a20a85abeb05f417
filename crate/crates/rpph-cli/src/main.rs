//! Command-line front end: key generation, hashing, sketch algebra, and a
//! built-in selftest.
//!
//! Exit codes: 0 success (including a "bottom" answer), 1 selftest failure,
//! 2 usage error, 3 malformed data (files, hex, parameters, inputs),
//! 4 key fingerprint mismatch between a sketch and the supplied key.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::exit;

use clap::{Args, Parser, Subcommand};

use rpph::{
    adversarial_probe_suite, decode, decode_key, decode_sketch, derive, derive_for_encoding,
    encode_key, encode_sketch, exhaustive_decode_check, naive_hamming, peelability_experiment,
    signed_diff_sketches, BitString, CodecError, DecodeOutcome, EncodingKey, Params, PphKey,
    Profile, SignedOutcome, Sketch,
};

const EXIT_SELFTEST: i32 = 1;
const EXIT_USAGE: i32 = 2;
const EXIT_DATA: i32 = 3;
const EXIT_KEY_MISMATCH: i32 = 4;

#[derive(Parser)]
#[command(
    name = "rpph",
    version,
    about = "Hamming-threshold hashing over a robust invertible set encoding"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a key and write it to a file.
    Keygen {
        #[command(flatten)]
        shape: ShapeArgs,
        /// 32-octet seed as 64 hex digits; drawn from the OS and echoed to
        /// stderr when absent.
        #[arg(long)]
        seed: Option<String>,
        /// Output key file.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Hash one input string under a Hamming key.
    Hash {
        /// Key file from keygen.
        #[arg(short, long)]
        key: PathBuf,
        /// Input as hex, exactly ceil(ell/8) octets with zero pad bits.
        /// Exactly one of this and --input-file.
        input: Option<String>,
        /// Read the input octets from a file instead.
        #[arg(long, conflicts_with = "input")]
        input_file: Option<PathBuf>,
        /// Output sketch file.
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Decide the threshold predicate from two hash files: prints 1 when
    /// the inputs are at Hamming distance at least t, else 0.
    Eval {
        #[arg(short, long)]
        key: PathBuf,
        hash0: PathBuf,
        hash1: PathBuf,
    },
    /// Encode an explicit set of universe elements.
    SetEncode {
        #[arg(short, long)]
        key: PathBuf,
        /// Comma-separated elements, each in [1, m], no repeats.
        #[arg(long)]
        elements: String,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Decode the symmetric difference of two sketches. Prints one element
    /// per line in ascending order, or the single line "bottom".
    SetDiff {
        #[arg(short, long)]
        key: PathBuf,
        sketch0: PathBuf,
        sketch1: PathBuf,
        /// Prefix each element with its side: +x only in the first sketch,
        /// -x only in the second.
        #[arg(long)]
        signed: bool,
    },
    /// Derive and print parameters without sampling a key.
    Params {
        #[command(flatten)]
        shape: ShapeArgs,
    },
    /// Run the built-in verification battery.
    Selftest {
        /// Smaller trial counts.
        #[arg(long)]
        quick: bool,
    },
}

/// Problem shape: either a Hamming instance (--ell with --t) or a bare set
/// universe (--universe with --threshold), plus optional desk-scale
/// overrides. Without overrides both the cell dimension and the row floor
/// default to lambda.
#[derive(Args)]
struct ShapeArgs {
    /// Security parameter.
    #[arg(long)]
    lambda: u64,
    /// Input length in bits (Hamming instance).
    #[arg(long, requires = "t", conflicts_with_all = ["universe", "threshold"])]
    ell: Option<u64>,
    /// Hamming threshold (Hamming instance).
    #[arg(long, requires = "ell")]
    t: Option<u64>,
    /// Universe size m (set instance).
    #[arg(long, requires = "threshold", conflicts_with_all = ["ell", "t"])]
    universe: Option<u64>,
    /// Decoding threshold t_enc (set instance).
    #[arg(long, requires = "universe")]
    threshold: Option<u64>,
    /// Override the cell dimension n (default: lambda).
    #[arg(long)]
    n: Option<u64>,
    /// Override the row-count floor (default: lambda).
    #[arg(long)]
    k_floor: Option<u64>,
}

impl ShapeArgs {
    fn derive(&self) -> Params {
        let profile = match (self.n, self.k_floor) {
            (None, None) => Profile::Production,
            (n, k_floor) => Profile::Toy {
                n: n.unwrap_or(self.lambda),
                k_floor: k_floor.unwrap_or(self.lambda),
            },
        };
        let derived = match (self.ell, self.t, self.universe, self.threshold) {
            (Some(ell), Some(t), None, None) => derive(self.lambda, ell, t, profile),
            (None, None, Some(m), Some(t_enc)) => {
                derive_for_encoding(self.lambda, m, t_enc, profile)
            }
            _ => {
                eprintln!("rpph: give either --ell with --t, or --universe with --threshold");
                exit(EXIT_USAGE);
            }
        };
        derived.unwrap_or_else(|e| fail_data(&format!("parameter derivation failed: {e}")))
    }
}

fn fail_data(msg: &str) -> ! {
    eprintln!("rpph: {msg}");
    exit(EXIT_DATA);
}

fn read_file(path: &PathBuf) -> Vec<u8> {
    std::fs::read(path)
        .unwrap_or_else(|e| fail_data(&format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &PathBuf, bytes: &[u8]) {
    std::fs::write(path, bytes)
        .unwrap_or_else(|e| fail_data(&format!("cannot write {}: {e}", path.display())))
}

fn read_key(path: &PathBuf) -> EncodingKey {
    match decode_key(&read_file(path)) {
        Ok(key) => key,
        Err(CodecError::FingerprintMismatch) => {
            eprintln!("rpph: key file {} fails its fingerprint", path.display());
            exit(EXIT_KEY_MISMATCH);
        }
        Err(e) => fail_data(&format!("bad key file {}: {e}", path.display())),
    }
}

fn read_sketch(path: &PathBuf, key: &EncodingKey) -> Sketch {
    match decode_sketch(&read_file(path), key) {
        Ok(s) => s,
        Err(CodecError::FingerprintMismatch) => {
            eprintln!(
                "rpph: sketch {} was made under a different key",
                path.display()
            );
            exit(EXIT_KEY_MISMATCH);
        }
        Err(e) => fail_data(&format!("bad sketch file {}: {e}", path.display())),
    }
}

fn parse_seed(arg: Option<String>) -> [u8; 32] {
    match arg {
        Some(s) => {
            let bytes = hex::decode(&s)
                .unwrap_or_else(|e| fail_data(&format!("seed is not hex: {e}")));
            bytes
                .try_into()
                .unwrap_or_else(|v: Vec<u8>| {
                    fail_data(&format!("seed must be 32 octets, got {}", v.len()))
                })
        }
        None => {
            let mut seed = [0u8; 32];
            getrandom::getrandom(&mut seed)
                .unwrap_or_else(|e| fail_data(&format!("no OS entropy: {e}")));
            eprintln!("seed: {}", hex::encode(seed));
            seed
        }
    }
}

fn hamming_key(path: &PathBuf) -> PphKey {
    PphKey::from_encoding_key(read_key(path))
        .unwrap_or_else(|e| fail_data(&format!("not a Hamming key: {e}")))
}

fn read_input_bits(input: Option<String>, input_file: Option<PathBuf>, ell: u64) -> BitString {
    let octets = match (input, input_file) {
        (Some(s), None) => {
            hex::decode(&s).unwrap_or_else(|e| fail_data(&format!("input is not hex: {e}")))
        }
        (None, Some(path)) => read_file(&path),
        _ => {
            eprintln!("rpph: give the input as hex or via --input-file");
            exit(EXIT_USAGE);
        }
    };
    BitString::from_octets(octets, ell)
        .unwrap_or_else(|e| fail_data(&format!("bad input for ell = {ell}: {e}")))
}

fn parse_elements(arg: &str, m: u64) -> Vec<u64> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for piece in arg.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        let x: u64 = piece
            .parse()
            .unwrap_or_else(|e| fail_data(&format!("element {piece:?}: {e}")));
        if x < 1 || x > m {
            fail_data(&format!("element {x} outside the universe [1, {m}]"));
        }
        if !seen.insert(x) {
            fail_data(&format!("element {x} repeats"));
        }
        out.push(x);
    }
    out
}

fn print_params(p: &Params) {
    println!("lambda = {}", p.lambda);
    println!("ell = {}", p.ell);
    println!("t = {}", p.t);
    println!("t_enc = {}", p.t_enc);
    println!("m = {}", p.m);
    println!("n = {}", p.n);
    println!("k = {}", p.k);
    println!("q = {}", p.q);
    println!("W = {}", p.w);
    println!("p_r = {}", p.p_r);
    println!("q_bits = {}", p.q_bits());
    println!("entry_octets = {}", p.entry_width());
    println!("sketch_bits = {}", p.sketch_bits());
    println!(
        "sketch_payload_octets = {}",
        p.k * p.w * p.n * p.entry_width() as u64
    );
    let reference = p.t as f64 * (p.lambda as f64).powi(2) * ((2 * p.ell + 3) as f64).log2();
    println!("reference_bits (t*lambda^2*log2(2*ell+3)) = {reference:.0}");
    println!(
        "size_ratio = {:.3}",
        p.sketch_bits() as f64 / reference
    );
    println!("note: W = 2*t_enc, so the grid is twice as wide as the largest decodable difference");
}

fn run_selftest(quick: bool) -> ! {
    let scale = if quick { 1 } else { 10 };
    let mut all_ok = true;
    let mut check = |name: &str, ok: bool, detail: String| {
        println!("{}: {} ({detail})", name, if ok { "ok" } else { "FAILED" });
        all_ok &= ok;
    };

    let exh_key = {
        let p = derive_for_encoding(32, 16, 3, Profile::Toy { n: 8, k_floor: 32 })
            .expect("fixed parameters");
        EncodingKey::sample(p, [41u8; 32]).expect("fixed seed")
    };
    let report = exhaustive_decode_check(&exh_key, if quick { 1 } else { 2 });
    check("exhaustive decode", report.passed(0), report.line());

    let report = peelability_experiment(256, 8, 113, 200 * scale, [42u8; 32]);
    check("peelability", report.passed(0), report.line());

    let probe_key = {
        let p = derive_for_encoding(32, 64, 8, Profile::Toy { n: 8, k_floor: 32 })
            .expect("fixed parameters");
        EncodingKey::sample(p, [43u8; 32]).expect("fixed seed")
    };
    let report = adversarial_probe_suite(&probe_key, 25 * scale, [44u8; 32]);
    check("adversarial probes", report.passed(0), report.line());

    let pph_key = PphKey::sample(32, 64, 4, Profile::Toy { n: 8, k_floor: 32 }, [45u8; 32])
        .expect("fixed parameters");
    let t = pph_key.t();
    let mut stream = rpph::XofStream::new(&[b"selftest", &[46u8; 32]]);
    let trials = 25 * scale;
    let mut wrong = 0u64;
    for _ in 0..trials {
        let mut octets = vec![0u8; 8];
        stream.fill(&mut octets);
        let x0 = BitString::from_octets(octets, 64).expect("full octets");
        let mut near_flips = BTreeSet::new();
        while near_flips.len() < (t - 1) as usize {
            near_flips.insert(1 + stream.next_u64_below(64));
        }
        let mut far_flips = BTreeSet::new();
        while far_flips.len() < t as usize {
            far_flips.insert(1 + stream.next_u64_below(64));
        }
        let near = x0.with_flipped(&near_flips.iter().copied().collect::<Vec<_>>());
        let far = x0.with_flipped(&far_flips.iter().copied().collect::<Vec<_>>());
        let h0 = pph_key.hash(&x0);
        if pph_key.eval(&h0, &pph_key.hash(&near)) {
            wrong += 1;
        }
        if !pph_key.eval(&h0, &pph_key.hash(&far)) {
            wrong += 1;
        }
        if naive_hamming(&x0, &near) != t - 1 || naive_hamming(&x0, &far) != t {
            wrong += 1;
        }
    }
    check(
        "hamming thresholds",
        wrong == 0,
        format!("trials={trials} wrong={wrong}"),
    );

    if all_ok {
        println!("selftest: all checks passed");
        exit(0);
    }
    println!("selftest: FAILED");
    exit(EXIT_SELFTEST);
}

fn main() {
    match Cli::parse().cmd {
        Cmd::Keygen { shape, seed, out } => {
            let p = shape.derive();
            let seed = parse_seed(seed);
            let key = EncodingKey::sample(p, seed)
                .unwrap_or_else(|e| fail_data(&format!("key sampling failed: {e}")));
            write_file(&out, &encode_key(&key));
        }
        Cmd::Hash {
            key,
            input,
            input_file,
            out,
        } => {
            let key = hamming_key(&key);
            let x = read_input_bits(input, input_file, key.ell());
            write_file(&out, &encode_sketch(&key.hash(&x)));
        }
        Cmd::Eval { key, hash0, hash1 } => {
            let key = hamming_key(&key);
            let h0 = read_sketch(&hash0, key.inner());
            let h1 = read_sketch(&hash1, key.inner());
            println!("{}", u8::from(key.eval(&h0, &h1)));
        }
        Cmd::SetEncode { key, elements, out } => {
            let key = read_key(&key);
            let elements = parse_elements(&elements, key.params().m);
            write_file(&out, &encode_sketch(&key.encode(&elements)));
        }
        Cmd::SetDiff {
            key,
            sketch0,
            sketch1,
            signed,
        } => {
            let key = read_key(&key);
            let h0 = read_sketch(&sketch0, &key);
            let h1 = read_sketch(&sketch1, &key);
            if signed {
                match signed_diff_sketches(&key, &h0, &h1) {
                    SignedOutcome::Bottom => println!("bottom"),
                    SignedOutcome::Split {
                        only_left,
                        only_right,
                    } => {
                        let mut lines: Vec<(u64, char)> = only_left
                            .into_iter()
                            .map(|x| (x, '+'))
                            .chain(only_right.into_iter().map(|x| (x, '-')))
                            .collect();
                        lines.sort_unstable();
                        for (x, sign) in lines {
                            println!("{sign}{x}");
                        }
                    }
                }
            } else {
                match decode(&key, &h0, &h1) {
                    DecodeOutcome::Bottom => println!("bottom"),
                    DecodeOutcome::Decoded(set) => {
                        for x in set {
                            println!("{x}");
                        }
                    }
                }
            }
        }
        Cmd::Params { shape } => print_params(&shape.derive()),
        Cmd::Selftest { quick } => run_selftest(quick),
    }
}
