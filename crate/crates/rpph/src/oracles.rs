//! Independent reference implementations and randomized experiments.
//!
//! Everything here recomputes answers by the most direct method available
//! (popcounts, set algebra, brute-force enumeration) and checks the fast
//! paths against them. Experiments draw their randomness from the
//! "RSE/EXP" domain so a report is replayable from its seed.

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use crate::encoding::{decode, DecodeOutcome, EncodingKey};
use crate::params;
use crate::pph::BitString;
use crate::twise::TwiseHashFunc;
use crate::xof::{XofStream, TAG_EXPERIMENT};

/// Outcome of one experiment, sized for a one-line summary.
#[derive(Debug, Clone)]
pub struct TrialReport {
    pub experiment: String,
    pub trials: u64,
    pub failures: u64,
    pub notes: String,
    pub wall: Duration,
}

impl TrialReport {
    pub fn passed(&self, tolerance: u64) -> bool {
        self.failures <= tolerance
    }

    /// Machine-parsable summary line.
    pub fn line(&self) -> String {
        let mut s = format!(
            "{}: trials={} failures={} wall_ms={}",
            self.experiment,
            self.trials,
            self.failures,
            self.wall.as_millis()
        );
        if !self.notes.is_empty() {
            s.push_str(" (");
            s.push_str(&self.notes);
            s.push(')');
        }
        s
    }
}

/// Hamming distance by xor and popcount. Both strings must have the same
/// length; pad bits are zero on both sides, so whole-octet xor is exact.
pub fn naive_hamming(x0: &BitString, x1: &BitString) -> u64 {
    assert_eq!(x0.ell(), x1.ell(), "length mismatch");
    x0.octets()
        .iter()
        .zip(x1.octets())
        .map(|(&a, &b)| (a ^ b).count_ones() as u64)
        .sum()
}

pub fn naive_symdiff(a: &BTreeSet<u64>, b: &BTreeSet<u64>) -> BTreeSet<u64> {
    a.symmetric_difference(b).copied().collect()
}

/// Decodes every ordered pair of subsets of the universe with at most
/// `max_size` elements each and checks the outcome against set algebra:
/// a difference smaller than the decoding threshold must decode exactly,
/// and any non-bottom answer must equal the true difference.
pub fn exhaustive_decode_check(key: &EncodingKey, max_size: u32) -> TrialReport {
    let start = Instant::now();
    let p = key.params();
    let m = p.m;
    assert!(m <= 20, "exhaustive enumeration is sized for tiny universes");
    let m = m as u32;

    let masks: Vec<u32> = (0u32..1 << m)
        .filter(|mask| mask.count_ones() <= max_size)
        .collect();
    let sets: Vec<Vec<u64>> = masks.iter().map(|&mask| mask_to_set(mask)).collect();
    let sketches: Vec<_> = sets.iter().map(|s| key.encode(s)).collect();

    let mut trials = 0u64;
    let mut failures = 0u64;
    for (i, h0) in sketches.iter().enumerate() {
        for (j, h1) in sketches.iter().enumerate() {
            trials += 1;
            let delta_mask = masks[i] ^ masks[j];
            let expected: BTreeSet<u64> = mask_to_set(delta_mask).into_iter().collect();
            let must_decode = (delta_mask.count_ones() as u64) < p.t_enc;
            match decode(key, h0, h1) {
                DecodeOutcome::Decoded(got) if got == expected => {}
                DecodeOutcome::Decoded(_) => failures += 1,
                DecodeOutcome::Bottom if must_decode => failures += 1,
                DecodeOutcome::Bottom => {}
            }
        }
    }

    TrialReport {
        experiment: "exhaustive_decode".into(),
        trials,
        failures,
        notes: format!("universe {m}, set sizes <= {max_size}"),
        wall: start.elapsed(),
    }
}

fn mask_to_set(mask: u32) -> Vec<u64> {
    (0..32)
        .filter(|i| mask >> i & 1 == 1)
        .map(|i| i as u64 + 1)
        .collect()
}

/// Samples `trials` fresh row families of `k` functions each and, per trial,
/// one random nonempty set of at most `t_enc` elements; counts the trials
/// where no row isolates any element of the set. That first isolated cell is
/// what every peeling round consumes, so a failure here is a row family the
/// decoder cannot even start on. `k` is taken as given, below the derived
/// floor included, so the same harness doubles as a negative control.
pub fn peelability_experiment(
    m: u64,
    t_enc: u64,
    k: u64,
    trials: u64,
    seed: [u8; 32],
) -> TrialReport {
    assert!(m >= 2 && t_enc >= 1 && k >= 1);
    assert!(t_enc <= m);
    let start = Instant::now();
    let w = 2 * t_enc;
    let field_prime = params::field_prime(m, w);

    let mut failures = 0u64;
    for trial in 0..trials {
        let mut stream = XofStream::new(&[
            TAG_EXPERIMENT,
            b"peelability",
            &seed,
            &trial.to_le_bytes(),
        ]);
        let rows: Vec<TwiseHashFunc> = (0..k)
            .map(|_| TwiseHashFunc::sample_with_prime(&mut stream, t_enc, field_prime, m, w))
            .collect();

        let size = 1 + stream.next_u64_below(t_enc) as usize;
        let subset = sample_distinct(&mut stream, m, size, &BTreeSet::new());

        let mut isolated = false;
        'rows: for row in &rows {
            let mut counts: HashMap<u64, u32> = HashMap::new();
            for &x in &subset {
                *counts.entry(row.eval(x)).or_insert(0) += 1;
            }
            if counts.values().any(|&c| c == 1) {
                isolated = true;
                break 'rows;
            }
        }
        if !isolated {
            failures += 1;
        }
    }

    TrialReport {
        experiment: "peelability".into(),
        trials,
        failures,
        notes: format!("m {m}, t_enc {t_enc}, k {k}"),
        wall: start.elapsed(),
    }
}

fn sample_distinct(
    stream: &mut XofStream,
    m: u64,
    count: usize,
    exclude: &BTreeSet<u64>,
) -> BTreeSet<u64> {
    assert!(count + exclude.len() <= m as usize);
    let mut out = BTreeSet::new();
    while out.len() < count {
        let x = 1 + stream.next_u64_below(m);
        if !exclude.contains(&x) {
            out.insert(x);
        }
    }
    out
}

/// Runs four probe families against one key, `per_family` instances each,
/// and checks every decode against direct set algebra. A wrong non-bottom
/// answer is always a failure; bottom is a failure only when the true
/// difference is below the decoding threshold and an exact answer was owed.
///
/// Families: cell stuffing (elements chosen from one row's largest target
/// buckets, so a single cell absorbs many columns), oversize random
/// differences, differences of exactly the threshold size, and large shared
/// cores differing in two elements.
pub fn adversarial_probe_suite(key: &EncodingKey, per_family: u64, seed: [u8; 32]) -> TrialReport {
    let start = Instant::now();
    let p = key.params();
    let (m, t_enc, k) = (p.m, p.t_enc, p.k);
    assert!(m >= 2 * t_enc + 4, "probe construction needs slack in the universe");

    let mut trials = 0u64;
    let mut failures = 0u64;
    let mut bottoms = [0u64; 4];

    for family in 0..4u64 {
        for instance in 0..per_family {
            let mut stream = XofStream::new(&[
                TAG_EXPERIMENT,
                b"probes",
                &seed,
                &family.to_le_bytes(),
                &instance.to_le_bytes(),
            ]);

            let (s0, s1) = match family {
                0 => {
                    // Stuff one row's cells: walk that row's target buckets
                    // from the fullest down and take elements until the
                    // difference exceeds the decoding threshold.
                    let row = &key.rows()[(instance % k) as usize];
                    let mut buckets: HashMap<u64, Vec<u64>> = HashMap::new();
                    for x in 1..=m {
                        buckets.entry(row.eval(x)).or_default().push(x);
                    }
                    let mut order: Vec<Vec<u64>> = buckets.into_values().collect();
                    order.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
                    let skip = ((instance / k) % order.len() as u64) as usize;
                    let want = (t_enc + 2).min(m) as usize;
                    let mut s0 = BTreeSet::new();
                    for bucket in order.iter().cycle().skip(skip) {
                        for &x in bucket {
                            if s0.len() < want {
                                s0.insert(x);
                            }
                        }
                        if s0.len() >= want {
                            break;
                        }
                    }
                    (s0, BTreeSet::new())
                }
                1 => {
                    // Oversize random difference: disjoint halves, each a bit
                    // past half the threshold.
                    let half = (t_enc / 2 + 1) as usize;
                    let s0 = sample_distinct(&mut stream, m, half + 1, &BTreeSet::new());
                    let s1 = sample_distinct(&mut stream, m, half + 1, &s0);
                    (s0, s1)
                }
                2 => {
                    // Difference of exactly t_enc elements, random split.
                    let delta = sample_distinct(&mut stream, m, t_enc as usize, &BTreeSet::new());
                    let picks: Vec<u64> = delta.iter().copied().collect();
                    let cut = stream.next_u64_below(t_enc + 1) as usize;
                    let s0: BTreeSet<u64> = picks[..cut].iter().copied().collect();
                    let s1: BTreeSet<u64> = picks[cut..].iter().copied().collect();
                    (s0, s1)
                }
                _ => {
                    // Shared core: both sets carry the same half-universe
                    // core and differ in exactly two elements.
                    let core = sample_distinct(&mut stream, m, (m / 2) as usize, &BTreeSet::new());
                    let extra = sample_distinct(&mut stream, m, 2, &core);
                    let picks: Vec<u64> = extra.iter().copied().collect();
                    let mut s0 = core.clone();
                    s0.insert(picks[0]);
                    let mut s1 = core;
                    s1.insert(picks[1]);
                    (s0, s1)
                }
            };

            let expected = naive_symdiff(&s0, &s1);
            let v0: Vec<u64> = s0.iter().copied().collect();
            let v1: Vec<u64> = s1.iter().copied().collect();
            let h0 = key.encode(&v0);
            let h1 = key.encode(&v1);
            let must_decode = (expected.len() as u64) < t_enc;
            trials += 1;
            match decode(key, &h0, &h1) {
                DecodeOutcome::Decoded(got) if got == expected => {}
                DecodeOutcome::Decoded(_) => failures += 1,
                DecodeOutcome::Bottom => {
                    bottoms[family as usize] += 1;
                    if must_decode {
                        failures += 1;
                    }
                }
            }
        }
    }

    TrialReport {
        experiment: "adversarial_probes".into(),
        trials,
        failures,
        notes: format!(
            "families stuffing/oversize/boundary/shared-core, bottoms {}/{}/{}/{}",
            bottoms[0], bottoms[1], bottoms[2], bottoms[3]
        ),
        wall: start.elapsed(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::sample_encoding;
    use crate::params::Profile;

    #[test]
    fn hamming_oracle_matches_hand_counts() {
        let a = BitString::from_octets(vec![0b1010_0000], 4).unwrap();
        let b = BitString::from_octets(vec![0b0110_0000], 4).unwrap();
        assert_eq!(naive_hamming(&a, &b), 2);
        assert_eq!(naive_hamming(&a, &a), 0);
        let z = BitString::zeroes(8);
        let o = BitString::from_octets(vec![0xff], 8).unwrap();
        assert_eq!(naive_hamming(&z, &o), 8);
    }

    #[test]
    #[should_panic(expected = "length mismatch")]
    fn hamming_oracle_rejects_unequal_lengths() {
        let a = BitString::zeroes(4);
        let b = BitString::zeroes(8);
        naive_hamming(&a, &b);
    }

    #[test]
    fn symdiff_oracle_matches_hand_counts() {
        let a: BTreeSet<u64> = [1, 2, 3].into_iter().collect();
        let b: BTreeSet<u64> = [3, 4].into_iter().collect();
        let d: BTreeSet<u64> = [1, 2, 4].into_iter().collect();
        assert_eq!(naive_symdiff(&a, &b), d);
    }

    #[test]
    fn exhaustive_check_covers_every_pair_of_singletons() {
        let key = sample_encoding(32, 2, 8, Profile::Toy { n: 8, k_floor: 8 }, [5u8; 32]).unwrap();
        let report = exhaustive_decode_check(&key, 1);
        assert_eq!(report.trials, 81);
        assert_eq!(report.failures, 0);
        assert!(report.line().contains("trials=81"));
        assert!(report.passed(0));
    }

    #[test]
    fn peelability_holds_at_the_derived_row_count() {
        let report = peelability_experiment(16, 2, 57, 200, [9u8; 32]);
        assert_eq!(report.trials, 200);
        assert_eq!(report.failures, 0);
    }

    #[test]
    fn peelability_fails_with_too_few_rows() {
        let report = peelability_experiment(8, 4, 2, 2000, [10u8; 32]);
        assert!(report.failures >= 1, "negative control never failed");
    }

    #[test]
    fn experiments_replay_from_their_seed() {
        let a = peelability_experiment(8, 4, 2, 500, [11u8; 32]);
        let b = peelability_experiment(8, 4, 2, 500, [11u8; 32]);
        assert_eq!(a.failures, b.failures);
    }

    #[test]
    fn probe_suite_runs_clean_on_a_small_key() {
        let key =
            sample_encoding(32, 4, 32, Profile::Toy { n: 8, k_floor: 32 }, [12u8; 32]).unwrap();
        let report = adversarial_probe_suite(&key, 25, [13u8; 32]);
        assert_eq!(report.trials, 100);
        assert_eq!(report.failures, 0);
    }
}
