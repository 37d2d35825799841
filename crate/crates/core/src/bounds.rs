//! Closed-form quantities of the multi-user scheme: source count, capacity,
//! per-source query cardinality, block length and rate.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// `S = N + U - 1`: every database plus every helper user is a source.
pub fn source_count(databases: usize, users: usize) -> Result<usize> {
    if databases == 0 {
        return Err(Error::Config("N must be at least 1".into()));
    }
    if users == 0 {
        return Err(Error::Config("U must be at least 1".into()));
    }
    databases
        .checked_add(users - 1)
        .ok_or_else(|| Error::Config("N + U - 1 overflows".into()))
}

fn check_sizes(sources: usize, messages: usize) {
    assert!(sources >= 1, "S must be at least 1");
    assert!(messages >= 1, "K must be at least 1");
}

/// `(1 + 1/S + ... + 1/S^(K-1))^-1`, evaluated as an exact partial sum.
///
/// Panics if `sources` or `messages` is zero.
pub fn capacity(sources: usize, messages: usize) -> Rational {
    check_sizes(sources, messages);
    let s = Rational::from_integer(sources);
    let mut term = Rational::one();
    let mut sum = Rational::zero();
    for _ in 0..messages {
        sum = &sum + &term;
        term = &term / &s;
    }
    sum.recip()
}

/// Number of query elements sent to each source:
/// `sum_{k=1..K} C(K, k) (S-1)^(k-1)`, with `0^0 = 1`.
///
/// Panics if `sources` or `messages` is zero.
pub fn query_cardinality(sources: usize, messages: usize) -> BigUint {
    check_sizes(sources, messages);
    let others = BigUint::from(sources - 1);
    let mut binom = BigUint::one();
    let mut power = BigUint::one();
    let mut total = BigUint::zero();
    for k in 1..=messages {
        binom = binom * BigUint::from(messages - k + 1) / BigUint::from(k);
        total += &binom * &power;
        power *= &others;
    }
    total
}

/// Per-message block length `L = S^K`, with overflow reported.
pub fn block_length(sources: usize, messages: usize) -> Result<usize> {
    check_sizes(sources, messages);
    let exp = u32::try_from(messages).map_err(|_| Error::Overflow { sources, messages })?;
    sources.checked_pow(exp).ok_or(Error::Overflow { sources, messages })
}

/// Arbitrary-precision `S^K`, for tables that outgrow `usize`.
pub fn block_length_big(sources: usize, messages: usize) -> BigUint {
    check_sizes(sources, messages);
    num_traits::pow(BigUint::from(sources), messages)
}

/// Rate `L / D` in lowest terms.
pub fn rate_of(block_length: u64, downloaded: u64) -> Result<Rational> {
    if downloaded == 0 {
        return Err(Error::ZeroDownload);
    }
    Ok(Rational::new(BigInt::from(block_length), BigInt::from(downloaded)))
}
