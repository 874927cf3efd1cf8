//! Rate-transition operator chains on task-graph edges.
//!
//! A reduced task-graph edge `src -> dst` carries the list of rate operators
//! the data traverses between the two tasks, in application order: the head
//! of the list acts closest to the producer. The chain determines
//!
//! - which consumer instance first uses the value of producer instance `n`
//!   (the instance mapping [`g_ops`]),
//! - how the instance-release gap between the two tasks evolves (the
//!   periodic difference word [`diffops_word`]),
//! - the deadline constraint the consumer word imposes on the producer
//!   ([`constraint_word`]),
//! - which producer instance a given consumer instance reads
//!   ([`consumed_instance`]), which drives buffer planning.
//!
//! All functions take instance indices, not times; periods and releases are
//! in integer ticks.

use std::fmt;

use num_integer::Integer;
use num_rational::Rational64;

use crate::dword::DWord;

/// One rate operator on an edge, in data-path order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecOp {
    /// Keep one value in `k`: consumer is `k` times slower.
    Under(i64),
    /// Repeat each value `k` times: consumer is `k` times faster.
    Over(i64),
    /// Shift the consumer's tags by `q` periods; instances align unchanged.
    Offset(Rational64),
    /// A unit delay: consumer instances read the previous producer instance.
    Delay,
}

impl fmt::Display for PrecOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrecOp::Under(k) => write!(f, "/^{k}"),
            PrecOp::Over(k) => write!(f, "*^{k}"),
            PrecOp::Offset(q) => {
                if q.is_integer() {
                    write!(f, "~>{}", q.numer())
                } else {
                    write!(f, "~>{}/{}", q.numer(), q.denom())
                }
            }
            PrecOp::Delay => write!(f, "fby"),
        }
    }
}

/// Renders an operator chain the way edge labels are printed: empty chains
/// as an empty string, otherwise the operators separated by spaces.
pub fn ops_to_string(ops: &[PrecOp]) -> String {
    ops.iter()
        .map(|op| op.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// The instance mapping of an operator chain: `g_ops(n)` is the first
/// consumer instance that uses the value produced by producer instance `n`.
///
/// Each operator transforms the index before the rest of the chain applies:
/// undersampling by `k` maps `n` to `ceil(n/k)`, oversampling to `k*n`,
/// a phase offset leaves it unchanged, and a delay maps `n` to `n+1`.
pub fn g_ops(ops: &[PrecOp], n: i64) -> i64 {
    debug_assert!(n >= 0);
    let mut n = n;
    for op in ops {
        n = match *op {
            PrecOp::Under(k) => div_ceil(n, k),
            PrecOp::Over(k) => k * n,
            PrecOp::Offset(_) => n,
            PrecOp::Delay => n + 1,
        };
    }
    n
}

fn div_ceil(n: i64, k: i64) -> i64 {
    debug_assert!(k > 0);
    // n is an instance count and never negative here.
    (n + k - 1) / k
}

/// True iff the chain contains a delay.
pub fn has_delay(ops: &[PrecOp]) -> bool {
    ops.iter().any(|op| matches!(op, PrecOp::Delay))
}

/// True iff the chain contains a phase offset.
pub fn has_offset(ops: &[PrecOp]) -> bool {
    ops.iter().any(|op| matches!(op, PrecOp::Offset(_)))
}

/// True iff an oversampling appears strictly before the first delay.
///
/// Such a chain makes the instance-to-instance precedence pattern aperiodic
/// relative to the word calculus, so programs containing one are rejected
/// at task-graph reduction.
pub fn over_before_delay(ops: &[PrecOp]) -> bool {
    let mut seen_over = false;
    for op in ops {
        match op {
            PrecOp::Over(_) => seen_over = true,
            PrecOp::Delay if seen_over => return true,
            _ => {}
        }
    }
    false
}

/// Removes delays from a chain, keeping the rate-changing structure. The
/// result is what the write-pattern periodicity and the difference word are
/// computed on.
pub fn strip_delays(ops: &[PrecOp]) -> Vec<PrecOp> {
    ops.iter()
        .copied()
        .filter(|op| !matches!(op, PrecOp::Delay))
        .collect()
}

/// Period of the instance-mapping pattern of a delay-free chain: the
/// smallest `P` with `g_ops(n + P) = g_ops(n) + qshift` for all `n`.
///
/// Computed back to front: an undersampling by `k` multiplies the pattern
/// length by `k`, an oversampling by `k` divides it by `gcd(P, k)`, and a
/// phase offset leaves it unchanged.
pub fn pword(ops: &[PrecOp]) -> i64 {
    debug_assert!(!has_delay(ops), "pword is defined on delay-free chains");
    let mut p: i64 = 1;
    for op in ops.iter().rev() {
        p = match *op {
            PrecOp::Under(k) => k * p,
            PrecOp::Over(k) => p / p.gcd(&k),
            PrecOp::Offset(_) => p,
            PrecOp::Delay => p,
        };
    }
    p
}

/// The per-pattern instance shift of a chain: `g_ops(n + pword) - g_ops(n)`,
/// which is independent of `n`. Delays do not change it, so it is valid for
/// chains with delays as well (using the delay-free pattern length).
pub fn qshift(ops: &[PrecOp]) -> i64 {
    let p = pword(&strip_delays(ops));
    g_ops(ops, p) - g_ops(ops, 0)
}

/// The difference word of a delay-free edge: entry `n` is
/// `g_ops(n) * t_dst - n * t_src`, the gap between the consumer release that
/// first uses producer instance `n` and the producer release itself
/// (releases at phase zero). The sequence repeats with period [`pword`].
pub fn diffops_word(ops: &[PrecOp], t_src: i64, t_dst: i64) -> DWord {
    debug_assert!(!has_delay(ops));
    let p = pword(ops);
    let pat = (0..p).map(|n| g_ops(ops, n) * t_dst - n * t_src).collect();
    DWord::new(pat)
}

/// The deadline constraint a consumer word `w_dst` imposes along a
/// delay-free edge:
///
/// `cstr[n] = w_dst[g_ops(n)] + g_ops(n)*t_dst - n*t_src - c_dst + r_dst - r_src`
///
/// Any producer word satisfying `w_src <= cstr` pointwise guarantees that
/// producer instance `n` reaches its deadline at least `c_dst` before the
/// deadline of the consumer instance that uses its value.
///
/// The result repeats with period `pword * |w_dst| / gcd(qshift, |w_dst|)`;
/// a debug assertion validates that length against a longer unfolding.
#[allow(clippy::too_many_arguments)]
pub fn constraint_word(
    ops: &[PrecOp],
    w_dst: &DWord,
    t_src: i64,
    t_dst: i64,
    c_dst: i64,
    r_src: i64,
    r_dst: i64,
) -> DWord {
    debug_assert!(!has_delay(ops));
    let p = pword(ops);
    let q = qshift(ops);
    debug_assert!(q > 0, "instance shift of a rate chain is positive");
    let wlen = w_dst.len() as i64;
    let len = p * wlen / q.gcd(&wlen);
    let entry = |n: i64| {
        let g = g_ops(ops, n);
        w_dst.index(g) + g * t_dst - n * t_src - c_dst + r_dst - r_src
    };
    let word = DWord::new((0..len).map(entry).collect());
    // The canonical word must reproduce the raw sequence well past one
    // candidate period; three periods catch any mistaken length formula.
    debug_assert!(
        (0..len * 3).all(|n| word.index(n) == entry(n)),
        "constraint word period {len} does not generate the sequence for ops {:?}",
        ops
    );
    word
}

/// The producer instance whose value consumer instance `m` reads:
/// the largest `n` with `g_ops(n) <= m`, or `-1` when even instance 0 is
/// first used later than `m` (then the consumer reads the delay
/// initialization value).
pub fn consumed_instance(ops: &[PrecOp], m: i64) -> i64 {
    debug_assert!(m >= 0);
    if g_ops(ops, 0) > m {
        return -1;
    }
    // g_ops is non-decreasing and unbounded, so the predicate g(n) <= m is a
    // prefix; binary search its end. g grows by qshift >= 1 every pattern
    // period, which bounds the prefix length.
    let p = pword(&strip_delays(ops)).max(1);
    let mut lo = 0i64; // g(lo) <= m
    let mut hi = (m + 2) * p + 1;
    debug_assert!(g_ops(ops, hi) > m, "upper bound for consumed instance");
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if g_ops(ops, mid) <= m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// The producer-side write pattern of an edge: producer instance `n` must
/// publish its value iff some consumer instance actually uses it, which is
/// the case exactly when `g_ops(n) != g_ops(n+1)`. The pattern repeats with
/// the delay-free pattern length.
pub fn write_mask(ops: &[PrecOp]) -> Vec<bool> {
    let p = pword(&strip_delays(ops)).max(1);
    let mask: Vec<bool> = (0..p).map(|n| g_ops(ops, n) != g_ops(ops, n + 1)).collect();
    debug_assert!(
        (0..p * 3).all(|n| mask[(n % p) as usize] == (g_ops(ops, n) != g_ops(ops, n + 1))),
        "write mask must repeat with the delay-free pattern length"
    );
    mask
}

#[cfg(test)]
mod tests {
    use super::*;

    fn under(k: i64) -> PrecOp {
        PrecOp::Under(k)
    }
    fn over(k: i64) -> PrecOp {
        PrecOp::Over(k)
    }

    #[test]
    fn instance_mapping_matches_hand_unfoldings() {
        // Undersampling: value n is first used by consumer ceil(n/2).
        assert_eq!(g_ops(&[under(2)], 0), 0);
        assert_eq!(g_ops(&[under(2)], 1), 1);
        assert_eq!(g_ops(&[under(2)], 2), 1);
        // Delay then oversampling by 3: value n first used by 3(n+1).
        let dov3 = [PrecOp::Delay, over(3)];
        assert_eq!(g_ops(&dov3, 0), 3);
        assert_eq!(g_ops(&dov3, 1), 6);
        // Pure oversampling and pure offset.
        assert_eq!(g_ops(&[over(4)], 2), 8);
        assert_eq!(g_ops(&[PrecOp::Offset(Rational64::new(1, 2))], 5), 5);
    }

    #[test]
    fn pattern_period_and_shift() {
        assert_eq!(pword(&[under(12)]), 12);
        assert_eq!(pword(&[over(3)]), 1);
        assert_eq!(qshift(&[over(3)]), 3);
        assert_eq!(qshift(&[under(2)]), 1);
        assert_eq!(pword(&[]), 1);
        // Mixed chains compose back to front.
        assert_eq!(pword(&[under(2), over(3)]), 2);
        assert_eq!(pword(&[over(3), under(2)]), 2);
        assert_eq!(pword(&[under(2), under(3)]), 6);
    }

    #[test]
    fn difference_words() {
        assert_eq!(
            diffops_word(&[under(2)], 4, 8),
            DWord::new(vec![0, 4]),
            "slow consumer at twice the period"
        );
        assert_eq!(
            diffops_word(&[under(4)], 10, 40),
            DWord::new(vec![0, 30, 20, 10])
        );
        // Oversampling by 3 between matched periods leaves no gap.
        assert_eq!(diffops_word(&[over(3)], 120, 40), DWord::constant(0));
        // An empty chain between equal periods has a single zero entry.
        assert_eq!(diffops_word(&[], 10, 10), DWord::constant(0));
    }

    #[test]
    fn difference_word_is_periodic_on_longer_unfoldings() {
        let cases: Vec<(Vec<PrecOp>, i64, i64)> = vec![
            (vec![under(2)], 4, 8),
            (vec![under(4)], 10, 40),
            (vec![over(3)], 30, 10),
            (vec![under(2), over(3)], 3, 2),
            (vec![over(3), under(2)], 3, 2),
            (vec![under(2), under(2)], 5, 20),
        ];
        for (ops, ti, tj) in cases {
            let w = diffops_word(&ops, ti, tj);
            for n in 0..200 {
                assert_eq!(
                    w.index(n),
                    g_ops(&ops, n) * tj - n * ti,
                    "ops {ops:?} diverges at {n}"
                );
            }
        }
    }

    #[test]
    fn constraint_word_examples() {
        // Producer at period 4 feeding a half-rate consumer with word (6)
        // and cost 4 gets the alternating constraint (2,6).
        assert_eq!(
            constraint_word(&[under(2)], &DWord::constant(6), 4, 8, 4, 0, 0),
            DWord::new(vec![2, 6])
        );
        // Quarter-rate consumer, word (9), cost 4.
        assert_eq!(
            constraint_word(&[under(4)], &DWord::constant(9), 10, 40, 4, 0, 0),
            DWord::new(vec![5, 35, 25, 15])
        );
        // Same-rate edge: the constraint is the consumer word minus cost.
        assert_eq!(
            constraint_word(&[], &DWord::constant(15), 40, 40, 6, 0, 0),
            DWord::constant(9)
        );
    }

    #[test]
    fn constraint_word_length_covers_slow_consumer_words() {
        // Undersampling by 4 against a length-2 consumer word needs 8
        // producer instances before the pattern repeats.
        let w = constraint_word(&[under(4)], &DWord::new(vec![10, 20]), 10, 40, 1, 0, 0);
        assert_eq!(w.len(), 8);
    }

    #[test]
    fn consumed_instance_walks_the_mapping_backwards() {
        assert_eq!(consumed_instance(&[under(2)], 0), 0);
        assert_eq!(consumed_instance(&[under(2)], 1), 2);
        assert_eq!(consumed_instance(&[], 7), 7);
        let dov3 = [PrecOp::Delay, over(3)];
        assert_eq!(consumed_instance(&dov3, 2), -1);
        assert_eq!(consumed_instance(&dov3, 3), 0);
        assert_eq!(consumed_instance(&dov3, 5), 0);
        assert_eq!(consumed_instance(&dov3, 6), 1);
        // Oversampling: several consumer instances share one producer value.
        assert_eq!(consumed_instance(&[over(4)], 3), 0);
        assert_eq!(consumed_instance(&[over(4)], 4), 1);
    }

    #[test]
    fn write_masks() {
        assert_eq!(write_mask(&[under(4)]), vec![true, false, false, false]);
        assert_eq!(write_mask(&[]), vec![true]);
        assert_eq!(write_mask(&[PrecOp::Delay, over(3)]), vec![true]);
        assert_eq!(write_mask(&[under(2), PrecOp::Delay]), vec![true, false]);
    }

    #[test]
    fn over_before_delay_detection() {
        assert!(over_before_delay(&[over(2), PrecOp::Delay]));
        assert!(!over_before_delay(&[PrecOp::Delay, over(3)]));
        assert!(!over_before_delay(&[under(2), PrecOp::Delay]));
        assert!(!over_before_delay(&[over(2)]));
    }

    #[test]
    fn display_forms() {
        assert_eq!(under(12).to_string(), "/^12");
        assert_eq!(over(3).to_string(), "*^3");
        assert_eq!(PrecOp::Offset(Rational64::new(1, 2)).to_string(), "~>1/2");
        assert_eq!(PrecOp::Offset(Rational64::new(2, 1)).to_string(), "~>2");
        assert_eq!(PrecOp::Delay.to_string(), "fby");
        assert_eq!(
            ops_to_string(&[PrecOp::Delay, over(3)]),
            "fby *^3".to_string()
        );
    }
}
