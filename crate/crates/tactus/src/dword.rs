//! Periodic deadline words.
//!
//! A deadline word assigns every instance `n` of a periodic task a relative
//! deadline `w[n]`, where the assignment repeats with a finite period: the
//! word `(2,4)` means instance 0 gets 2, instance 1 gets 4, instance 2 gets
//! 2 again, and so on. Words are kept in canonical form: the stored pattern
//! is the shortest prefix whose repetition generates the word, so two words
//! are semantically equal iff their patterns are equal.
//!
//! All arithmetic here is exact integer arithmetic in scheduler ticks.
//! Entries may be negative while constraint words are being combined; the
//! deadline calculus checks the final per-task words for feasibility.

use std::fmt;

use num_integer::Integer;

/// An infinite periodic word of integers, stored as its shortest generating
/// pattern. The pattern is never empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DWord {
    pat: Vec<i64>,
}

impl DWord {
    /// Builds a word from one period of values and canonicalizes it.
    ///
    /// Panics if `pat` is empty: a word must constrain every instance.
    pub fn new(pat: Vec<i64>) -> Self {
        assert!(!pat.is_empty(), "deadline word pattern must be non-empty");
        let mut w = DWord { pat };
        w.canonicalize();
        w
    }

    /// The constant word `(v)`.
    pub fn constant(v: i64) -> Self {
        DWord { pat: vec![v] }
    }

    /// Length of the canonical repeating pattern.
    pub fn len(&self) -> usize {
        self.pat.len()
    }

    /// Always false: a word carries at least one entry.
    pub fn is_empty(&self) -> bool {
        self.pat.is_empty()
    }

    /// The canonical pattern, one period of the word.
    pub fn pattern(&self) -> &[i64] {
        &self.pat
    }

    /// `w[n]`: the value at instance `n`.
    pub fn index(&self, n: i64) -> i64 {
        debug_assert!(n >= 0, "instance index must be non-negative");
        self.pat[(n as usize).rem_euclid(self.pat.len())]
    }

    /// Pointwise minimum of two words. The result repeats with the lcm of
    /// the operand lengths and is re-canonicalized.
    pub fn min(&self, other: &DWord) -> DWord {
        let n = self.pat.len().lcm(&other.pat.len());
        let pat = (0..n)
            .map(|i| self.pat[i % self.pat.len()].min(other.pat[i % other.pat.len()]))
            .collect();
        DWord::new(pat)
    }

    /// Adds a scalar to every entry.
    pub fn add(&self, v: i64) -> DWord {
        DWord {
            pat: self.pat.iter().map(|d| d + v).collect(),
        }
    }

    /// Smallest entry of the word; this is what collapsing a word to a
    /// single uniform deadline keeps.
    pub fn min_entry(&self) -> i64 {
        *self.pat.iter().min().expect("pattern is non-empty")
    }

    /// Largest entry of the word.
    pub fn max_entry(&self) -> i64 {
        *self.pat.iter().max().expect("pattern is non-empty")
    }

    /// Shrinks the pattern to the shortest prefix that generates it.
    fn canonicalize(&mut self) {
        let n = self.pat.len();
        for p in 1..n {
            if !n.is_multiple_of(p) {
                continue;
            }
            if (p..n).all(|i| self.pat[i] == self.pat[i % p]) {
                self.pat.truncate(p);
                return;
            }
        }
    }
}

impl fmt::Display for DWord {
    /// Renders as `(d1.d2.….dk)^w`, the entries of one period separated by
    /// dots with an omega marker for infinite repetition.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, d) in self.pat.iter().enumerate() {
            if i > 0 {
                write!(f, ".")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, ")^w")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_wraps_around_the_pattern() {
        // Alternating word: even instances 2, odd instances 4.
        let w = DWord::new(vec![2, 4]);
        assert_eq!(w.index(0), 2);
        assert_eq!(w.index(1), 4);
        assert_eq!(w.index(3), 4);
        let w = DWord::new(vec![5, 10, 10, 10]);
        assert_eq!(w.index(4), 5);
    }

    #[test]
    fn min_expands_to_lcm_and_recanonicalizes() {
        let a = DWord::constant(4);
        let b = DWord::new(vec![2, 6]);
        assert_eq!(a.min(&b), DWord::new(vec![2, 4]));
        // min is commutative and idempotent
        assert_eq!(b.min(&a), DWord::new(vec![2, 4]));
        assert_eq!(a.min(&a), a);
    }

    #[test]
    fn add_shifts_every_entry() {
        let w = DWord::new(vec![0, 4]);
        assert_eq!(w.add(6), DWord::new(vec![6, 10]));
        assert_eq!(w.add(-1), DWord::new(vec![-1, 3]));
    }

    #[test]
    fn canonical_form_is_shortest_generator() {
        assert_eq!(DWord::new(vec![3, 3, 3]).pattern(), &[3]);
        assert_eq!(DWord::new(vec![1, 2, 1, 2]).pattern(), &[1, 2]);
        assert_eq!(DWord::new(vec![1, 2, 1]).pattern(), &[1, 2, 1]);
    }

    #[test]
    fn min_of_equal_length_words_is_pointwise() {
        let a = DWord::new(vec![9, 39, 29, 19]);
        let b = DWord::constant(10);
        assert_eq!(a.min(&b), DWord::new(vec![9, 10, 10, 10]));
    }

    #[test]
    fn display_uses_dot_separated_period() {
        assert_eq!(DWord::new(vec![5, 10, 10, 10]).to_string(), "(5.10.10.10)^w");
        assert_eq!(DWord::constant(120).to_string(), "(120)^w");
    }
}
