//! Exact integer arithmetic behind the factoring pipelines: Euclid's
//! algorithm with a step trace, modular exponentiation, brute-force order
//! finding (the oracle every period test leans on), continued fractions,
//! coprime enumeration and factor extraction from an even period.
//!
//! All operations are pure functions of their inputs. Values are `u64` with
//! `u128` intermediates; the pipelines cap moduli below 2^31 so squares fit
//! comfortably.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Moduli are capped below 2^31 so that squares stay inside 64 bits.
pub const MAX_MODULUS: u64 = 1 << 31;

/// One row of a [`GcdTrace`]: the arguments of one invocation of the
/// recursive Euclid scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GcdStep {
    pub step: usize,
    pub a: u64,
    pub b: u64,
}

/// Full record of a gcd computation. The first row holds the inputs, each
/// following row is `(b, a mod b)` of the previous one, and the final row
/// has `b = 0` with the gcd in `a`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GcdTrace {
    pub rows: Vec<GcdStep>,
}

impl GcdTrace {
    /// Number of recursion steps taken, i.e. rows minus the input row.
    pub fn steps(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }
}

/// Euclid's algorithm, recording every recursion step.
///
/// `gcd(110, 129)` produces the eight-row trace ending in `(1, 0)`.
pub fn gcd(a: u64, b: u64) -> Result<(u64, GcdTrace)> {
    if a == 0 && b == 0 {
        return Err(Error::GcdUndefined);
    }
    let mut rows = vec![GcdStep { step: 1, a, b }];
    let (mut x, mut y) = (a, b);
    while y != 0 {
        let r = x % y;
        x = y;
        y = r;
        rows.push(GcdStep {
            step: rows.len() + 1,
            a: x,
            b: y,
        });
    }
    Ok((x, GcdTrace { rows }))
}

/// Plain gcd without the trace. `gcd_value(0, 0)` returns 0.
pub fn gcd_value(a: u64, b: u64) -> u64 {
    let (mut x, mut y) = (a, b);
    while y != 0 {
        let r = x % y;
        x = y;
        y = r;
    }
    x
}

/// Number of recursion steps `gcd(a, b)` would record, without allocating.
pub fn gcd_steps(a: u64, b: u64) -> usize {
    let (mut x, mut y) = (a, b);
    let mut steps = 0;
    while y != 0 {
        let r = x % y;
        x = y;
        y = r;
        steps += 1;
    }
    steps
}

/// `a^x mod n` by square and multiply. Products run in `u128`, so no
/// intermediate can overflow for any `u64` modulus.
pub fn mod_pow(a: u64, x: u64, n: u64) -> Result<u64> {
    if n < 2 {
        return Err(Error::BadModulus(n));
    }
    let n = n as u128;
    let mut base = (a as u128) % n;
    let mut exp = x;
    let mut acc: u128 = 1;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % n;
        }
        base = base * base % n;
        exp >>= 1;
    }
    Ok(acc as u64)
}

/// How a period candidate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodSource {
    ContinuedFraction,
    BruteForce,
    OracleSelection,
}

/// A candidate period `r >= 1` together with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodCandidate {
    pub r: u64,
    pub source: PeriodSource,
}

/// Least `r >= 1` with `a^r = 1 (mod n)`, found by direct iteration.
///
/// This is the independent oracle the simulated period finders are checked
/// against; it never consults them.
pub fn multiplicative_order(a: u64, n: u64) -> Result<PeriodCandidate> {
    if n < 2 {
        return Err(Error::BadModulus(n));
    }
    if n >= MAX_MODULUS {
        return Err(Error::InputTooLarge(n));
    }
    if a == 0 || a >= n {
        return Err(Error::BaseOutOfRange { a, n });
    }
    if gcd_value(a, n) != 1 {
        return Err(Error::NotCoprime { a, n });
    }
    let n128 = n as u128;
    let mut acc = a as u128;
    let mut r = 1u64;
    while acc != 1 {
        acc = acc * a as u128 % n128;
        r += 1;
    }
    Ok(PeriodCandidate {
        r,
        source: PeriodSource::BruteForce,
    })
}

/// Ascending list of `a` with `2 <= a < n` and `gcd(a, n) = 1`, truncated to
/// at most `cap` entries. 1 is excluded: its order is 1, which never splits
/// anything.
pub fn coprime_list(n: u64, cap: usize) -> Result<Vec<u64>> {
    if n < 2 {
        return Err(Error::BadModulus(n));
    }
    Ok((2..n).filter(|&a| gcd_value(a, n) == 1).take(cap).collect())
}

/// Factor extraction from an even period: `gcd(a^{r/2} +- 1, n)`.
///
/// Returns the nontrivial divisor pair in ascending order, or `None` when
/// `r` is odd, `a^{r/2} = -1 (mod n)`, or both gcds are trivial. When only
/// one side is nontrivial the pair is completed with the cofactor. Assumes
/// `gcd(a, n) = 1` and odd `n >= 3`.
pub fn factors_from_period(a: u64, r: u64, n: u64) -> Option<(u64, u64)> {
    if n < 3 || r == 0 || r % 2 == 1 {
        return None;
    }
    let m = mod_pow(a, r / 2, n).ok()?;
    let plus = gcd_value(m + 1, n);
    let minus = gcd_value(m.saturating_sub(1), n);
    let mut found: Vec<u64> = [plus, minus]
        .into_iter()
        .filter(|&g| g > 1 && g < n)
        .collect();
    found.sort_unstable();
    match found.as_slice() {
        [] => None,
        [g] => Some(order_pair(*g, n / *g)),
        [g1, g2] => Some((*g1, *g2)),
        _ => unreachable!(),
    }
}

fn order_pair(p: u64, q: u64) -> (u64, u64) {
    if p <= q {
        (p, q)
    } else {
        (q, p)
    }
}

/// Recover a period candidate from a measured value `t` of a `q`-point
/// transform: the largest continued-fraction convergent denominator of
/// `t/q` that stays within `n`. `t = 0` carries no information.
pub fn continued_fraction_period(t: u64, q: u64, n: u64) -> Result<Option<PeriodCandidate>> {
    if n < 2 {
        return Err(Error::BadModulus(n));
    }
    if !q.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(q));
    }
    if t >= q {
        return Err(Error::MeasurementOutOfRange { t, q });
    }
    if t == 0 {
        return Ok(None);
    }
    // The convergent denominators of t/q end at the reduced denominator;
    // when that already fits the bound it is the answer.
    let reduced = Fraction::new(t, q)?;
    if reduced.denominator() <= n {
        return Ok(Some(PeriodCandidate {
            r: reduced.denominator(),
            source: PeriodSource::ContinuedFraction,
        }));
    }
    // Otherwise walk the convergents: k_i = a_i * k_{i-1} + k_{i-2} grows
    // monotonically; keep the last one within the bound.
    let (mut num, mut den) = (t, q);
    let (mut k_prev2, mut k_prev1): (u64, u64) = (1, 0);
    let mut best = 0u64;
    while den != 0 {
        let a = num / den;
        let k = match a.checked_mul(k_prev1).and_then(|v| v.checked_add(k_prev2)) {
            Some(v) => v,
            None => break,
        };
        if k > n {
            break;
        }
        if k > best {
            best = k;
        }
        let r = num % den;
        num = den;
        den = r;
        k_prev2 = k_prev1;
        k_prev1 = k;
    }
    debug_assert!(best >= 1);
    Ok(Some(PeriodCandidate {
        r: best,
        source: PeriodSource::ContinuedFraction,
    }))
}

/// A fraction kept in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fraction {
    numerator: u64,
    denominator: u64,
}

impl Fraction {
    /// Build and reduce. The denominator must be positive.
    pub fn new(numerator: u64, denominator: u64) -> Result<Self> {
        if denominator == 0 {
            return Err(Error::BadModulus(0));
        }
        let g = gcd_value(numerator, denominator).max(1);
        Ok(Fraction {
            numerator: numerator / g,
            denominator: denominator / g,
        })
    }

    pub fn numerator(&self) -> u64 {
        self.numerator
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }
}

/// Deterministic primality by trial division; fine for the supported range.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 {
        return false;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// If `n = b^k` with `k >= 2`, returns `(b, k)` with the smallest base.
pub fn perfect_power(n: u64) -> Option<(u64, u32)> {
    if n < 4 {
        return None;
    }
    for k in (2..=63u32).rev() {
        let mut b = (n as f64).powf(1.0 / f64::from(k)).round() as u64;
        if b < 2 {
            continue;
        }
        // fp rounding can be off by one either way
        for cand in b.saturating_sub(1)..=b + 1 {
            if cand >= 2 && pow_checked(cand, k) == Some(n) {
                b = cand;
                return Some((b, k));
            }
        }
    }
    None
}

fn pow_checked(b: u64, k: u32) -> Option<u64> {
    let mut acc = 1u64;
    for _ in 0..k {
        acc = acc.checked_mul(b)?;
    }
    Some(acc)
}

/// Minimal register width holding every value in `0..n`, i.e. the least `w`
/// with `2^w >= n`.
pub fn qubits_to_hold(n: u64) -> usize {
    if n <= 1 {
        0
    } else {
        (64 - (n - 1).leading_zeros()) as usize
    }
}
