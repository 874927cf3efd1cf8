//! Checked rational arithmetic on top of [`Rational64`].
//!
//! Clock periods and phases stay exact rationals until tick normalization.
//! All combining operations go through i128 intermediates and report
//! overflow as a diagnostic instead of panicking, so hostile inputs
//! (gigantic periods, deep `*^`/`/^` chains) fail cleanly.

use num_integer::Integer;
use num_rational::Rational64;

use crate::diag::{Error, ErrorKind, Result};

fn make(numer: i128, denom: i128) -> Result<Rational64> {
    debug_assert!(denom != 0);
    let (numer, denom) = if denom < 0 { (-numer, -denom) } else { (numer, denom) };
    let g = numer.gcd(&denom);
    let (n, d) = if g == 0 { (0, 1) } else { (numer / g, denom / g) };
    if n < i64::MIN as i128 || n > i64::MAX as i128 || d > i64::MAX as i128 {
        return Err(Error::spanless(
            ErrorKind::Overflow,
            "rational arithmetic overflows 64 bits",
        ));
    }
    Ok(Rational64::new_raw(n as i64, d as i64))
}

pub fn rmul(a: Rational64, b: Rational64) -> Result<Rational64> {
    make(
        *a.numer() as i128 * *b.numer() as i128,
        *a.denom() as i128 * *b.denom() as i128,
    )
}

pub fn rdiv(a: Rational64, b: Rational64) -> Result<Rational64> {
    debug_assert!(*b.numer() != 0);
    make(
        *a.numer() as i128 * *b.denom() as i128,
        *a.denom() as i128 * *b.numer() as i128,
    )
}

pub fn radd(a: Rational64, b: Rational64) -> Result<Rational64> {
    make(
        *a.numer() as i128 * *b.denom() as i128 + *b.numer() as i128 * *a.denom() as i128,
        *a.denom() as i128 * *b.denom() as i128,
    )
}

pub fn rsub(a: Rational64, b: Rational64) -> Result<Rational64> {
    radd(a, -b)
}

/// Greatest rational `g` such that both arguments are integer multiples
/// of `g`. Zero operands are absorbed: rgcd(0, x) = x.
pub fn rgcd(a: Rational64, b: Rational64) -> Result<Rational64> {
    // gcd(a1/a2, b1/b2) = gcd(a1*b2, b1*a2) / (a2*b2)
    let n = (*a.numer() as i128 * *b.denom() as i128)
        .gcd(&(*b.numer() as i128 * *a.denom() as i128));
    let d = *a.denom() as i128 * *b.denom() as i128;
    if n == 0 {
        return Ok(Rational64::new_raw(0, 1));
    }
    make(n.abs(), d)
}

/// Exact integer quotient a / b, or an error if the ratio is not integral
/// or does not fit in i64.
pub fn exact_div(a: Rational64, b: Rational64) -> Result<i64> {
    let q = rdiv(a, b)?;
    if !q.is_integer() {
        return Err(Error::spanless(
            ErrorKind::Internal,
            format!("expected integral ratio, got {q}"),
        ));
    }
    Ok(q.to_integer())
}

/// Renders a rational as `n` or `n/d`.
pub fn show(q: Rational64) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn lcm_i64(a: i64, b: i64) -> Result<i64> {
    debug_assert!(a > 0 && b > 0);
    let l = (a as i128 / a.gcd(&b) as i128) * b as i128;
    if l > i64::MAX as i128 {
        return Err(Error::spanless(
            ErrorKind::Overflow,
            "hyperperiod overflows 64 bits",
        ));
    }
    Ok(l as i64)
}
