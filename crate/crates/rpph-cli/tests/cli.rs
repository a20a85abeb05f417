//! End-to-end tests against the built binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_rpph");
const GOLDEN_SEED: &str = "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f";

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn rpph")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "rpph {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn path(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn small_key(dir: &tempfile::TempDir, seed: &str) -> PathBuf {
    let key = path(dir, &format!("{seed}.key"));
    run_ok(&[
        "keygen", "--lambda", "32", "--ell", "64", "--t", "4", "--n", "8", "--k-floor", "32",
        "--seed", seed, "-o", key.to_str().unwrap(),
    ]);
    key
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn keygen_is_deterministic_and_echoes_generated_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let k1 = small_key(&dir, GOLDEN_SEED);
    let bytes1 = std::fs::read(&k1).unwrap();
    std::fs::remove_file(&k1).unwrap();
    let k2 = small_key(&dir, GOLDEN_SEED);
    assert_eq!(bytes1, std::fs::read(&k2).unwrap());

    let fresh = path(&dir, "fresh.key");
    let out = run_ok(&[
        "keygen", "--lambda", "32", "--ell", "64", "--t", "4", "--n", "8", "--k-floor", "32",
        "-o", s(&fresh),
    ]);
    let stderr = String::from_utf8(out.stderr).unwrap();
    let echoed = stderr
        .lines()
        .find_map(|l| l.strip_prefix("seed: "))
        .expect("generated seed is echoed");
    assert_eq!(echoed.len(), 64);

    // The echoed seed regenerates the same key.
    let again = small_key(&dir, echoed);
    assert_eq!(
        std::fs::read(&fresh).unwrap(),
        std::fs::read(&again).unwrap()
    );
}

#[test]
fn cli_reproduces_the_committed_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let key = small_key(&dir, GOLDEN_SEED);
    let golden_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../rpph/tests/golden");
    assert_eq!(
        std::fs::read(&key).unwrap(),
        std::fs::read(golden_dir.join("golden.key")).unwrap()
    );

    let hash = path(&dir, "golden.hash");
    run_ok(&["hash", "-k", s(&key), "0123456789abcdef", "-o", s(&hash)]);
    assert_eq!(
        std::fs::read(&hash).unwrap(),
        std::fs::read(golden_dir.join("golden.hash")).unwrap()
    );
}

#[test]
fn hash_eval_pipeline_decides_the_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let key = small_key(&dir, GOLDEN_SEED);
    let (h0, h1, h2) = (path(&dir, "0"), path(&dir, "1"), path(&dir, "2"));
    run_ok(&["hash", "-k", s(&key), "0123456789abcdef", "-o", s(&h0)]);
    // One flipped bit: below the threshold t = 4.
    run_ok(&["hash", "-k", s(&key), "0123456789abcdee", "-o", s(&h1)]);
    // Complement: distance 64.
    run_ok(&["hash", "-k", s(&key), "fedcba9876543210", "-o", s(&h2)]);

    let near = run_ok(&["eval", "-k", s(&key), s(&h0), s(&h1)]);
    assert_eq!(String::from_utf8(near.stdout).unwrap(), "0\n");
    let far = run_ok(&["eval", "-k", s(&key), s(&h0), s(&h2)]);
    assert_eq!(String::from_utf8(far.stdout).unwrap(), "1\n");
    // Symmetry through the CLI as well.
    let far_rev = run_ok(&["eval", "-k", s(&key), s(&h2), s(&h0)]);
    assert_eq!(String::from_utf8(far_rev.stdout).unwrap(), "1\n");
}

#[test]
fn set_diff_prints_sorted_elements_and_signs() {
    let dir = tempfile::tempdir().unwrap();
    let key = small_key(&dir, GOLDEN_SEED);
    let (a, b) = (path(&dir, "a"), path(&dir, "b"));
    run_ok(&["set-encode", "-k", s(&key), "--elements", "1,2", "-o", s(&a)]);
    run_ok(&["set-encode", "-k", s(&key), "--elements", "2,3", "-o", s(&b)]);

    let plain = run_ok(&["set-diff", "-k", s(&key), s(&a), s(&b)]);
    assert_eq!(String::from_utf8(plain.stdout).unwrap(), "1\n3\n");

    let signed = run_ok(&["set-diff", "-k", s(&key), s(&a), s(&b), "--signed"]);
    assert_eq!(String::from_utf8(signed.stdout).unwrap(), "+1\n-3\n");

    let swapped = run_ok(&["set-diff", "-k", s(&key), s(&b), s(&a), "--signed"]);
    assert_eq!(String::from_utf8(swapped.stdout).unwrap(), "-1\n+3\n");

    // Equal sketches: an empty difference, not bottom.
    let same = run_ok(&["set-diff", "-k", s(&key), s(&a), s(&a)]);
    assert_eq!(String::from_utf8(same.stdout).unwrap(), "");
}

#[test]
fn bottom_is_an_answer_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let key = path(&dir, "big.key");
    run_ok(&[
        "keygen", "--lambda", "32", "--ell", "1024", "--t", "8", "--n", "32", "--k-floor", "32",
        "--seed", &"aa".repeat(32), "-o", s(&key),
    ]);
    let zeros = "00".repeat(128);
    let ones = "ff".repeat(128);
    let (h0, h1) = (path(&dir, "z"), path(&dir, "f"));
    run_ok(&["hash", "-k", s(&key), &zeros, "-o", s(&h0)]);
    run_ok(&["hash", "-k", s(&key), &ones, "-o", s(&h1)]);

    // Every universe element differs, far past the decoding threshold.
    let diff = run_ok(&["set-diff", "-k", s(&key), s(&h0), s(&h1)]);
    assert_eq!(String::from_utf8(diff.stdout).unwrap(), "bottom\n");

    // The predicate still answers: bottom means "at least t apart" here.
    let eval = run_ok(&["eval", "-k", s(&key), s(&h0), s(&h1)]);
    assert_eq!(String::from_utf8(eval.stdout).unwrap(), "1\n");
}

#[test]
fn exit_codes_separate_usage_data_and_key_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let key = small_key(&dir, GOLDEN_SEED);

    // Usage: missing half of a parameter pair.
    let out = run(&["keygen", "--lambda", "32", "--ell", "64", "-o", "x.key"]);
    assert_eq!(out.status.code(), Some(2));

    // Data: input that is not hex.
    let out = run(&["hash", "-k", s(&key), "zz23456789abcdef", "-o", "x"]);
    assert_eq!(out.status.code(), Some(3));

    // Data: wrong input length.
    let out = run(&["hash", "-k", s(&key), "0123", "-o", "x"]);
    assert_eq!(out.status.code(), Some(3));

    // Data: truncated key file.
    let trunc = path(&dir, "trunc.key");
    std::fs::write(&trunc, &std::fs::read(&key).unwrap()[..100]).unwrap();
    let out = run(&["set-encode", "-k", s(&trunc), "--elements", "1", "-o", "x"]);
    assert_eq!(out.status.code(), Some(3));

    // Data: element outside the universe, and a repeated element.
    let out = run(&["set-encode", "-k", s(&key), "--elements", "500", "-o", "x"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["set-encode", "-k", s(&key), "--elements", "3,3", "-o", "x"]);
    assert_eq!(out.status.code(), Some(3));

    // Key mismatch: a sketch from one key handed to another.
    let other = small_key(&dir, &"bb".repeat(32));
    let (a, b) = (path(&dir, "a"), path(&dir, "b"));
    run_ok(&["set-encode", "-k", s(&key), "--elements", "1", "-o", s(&a)]);
    run_ok(&["set-encode", "-k", s(&other), "--elements", "2", "-o", s(&b)]);
    let out = run(&["set-diff", "-k", s(&key), s(&a), s(&b)]);
    assert_eq!(out.status.code(), Some(4));
    let out = run(&["eval", "-k", s(&other), s(&a), s(&a)]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn params_reports_the_derived_shape() {
    let out = run_ok(&[
        "params", "--lambda", "32", "--ell", "64", "--t", "4", "--n", "8", "--k-floor", "32",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    for line in [
        "m = 128",
        "k = 99",
        "q = 97",
        "W = 16",
        "p_r = 17592186044423",
        "sketch_bits = 88704",
        "sketch_payload_octets = 12672",
    ] {
        assert!(text.contains(line), "missing {line:?} in:\n{text}");
    }
    assert!(text.contains("note: W = 2*t_enc"));
}

#[test]
fn selftest_quick_passes() {
    let out = run_ok(&["selftest", "--quick"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("selftest: all checks passed"), "{text}");
}
