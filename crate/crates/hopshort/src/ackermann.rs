//! Ackermann families `A`, `B` and the inverse `alpha_k`, with saturating arithmetic.

use serde::Serialize;
use std::fmt;

/// Default saturation cap: values above `2^64` are reported as [`AckValue::Saturated`].
pub const DEFAULT_CAP: u128 = 1u128 << 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AckValue {
    Exact(u128),
    /// The value exceeds the cap.
    Saturated,
}

impl AckValue {
    /// `true` when the value is at least `n`.
    pub fn at_least(self, n: u128) -> bool {
        match self {
            AckValue::Exact(v) => v >= n,
            AckValue::Saturated => true,
        }
    }
    pub fn exact(self) -> Option<u128> {
        match self {
            AckValue::Exact(v) => Some(v),
            AckValue::Saturated => None,
        }
    }
}

impl fmt::Display for AckValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AckValue::Exact(v) => write!(f, "{v}"),
            AckValue::Saturated => write!(f, "saturated"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    A,
    B,
}

fn clamp(v: Option<u128>, cap: u128) -> AckValue {
    match v {
        Some(x) if x <= cap => AckValue::Exact(x),
        _ => AckValue::Saturated,
    }
}

fn eval(f: Family, k: u32, s: u128, cap: u128) -> AckValue {
    if k == 0 {
        return match f {
            Family::A => clamp(s.checked_mul(2), cap),
            Family::B => clamp(s.checked_mul(s), cap),
        };
    }
    if s == 0 {
        return AckValue::Exact(match f {
            Family::A => 1,
            Family::B => 2,
        });
    }
    // Level k >= 1 dominates 2^s, so a long inner loop always saturates.
    if s >= 130 {
        return AckValue::Saturated;
    }
    let mut val = eval(f, k, 0, cap);
    for _ in 0..s {
        val = match val {
            AckValue::Exact(x) => eval(f, k - 1, x, cap),
            AckValue::Saturated => return AckValue::Saturated,
        };
    }
    val
}

/// `A(0,n) = 2n`, `A(k,0) = 1`, `A(k,n) = A(k-1, A(k,n-1))`.
pub fn ackermann_a(k: u32, s: u128) -> AckValue {
    ackermann_a_capped(k, s, DEFAULT_CAP)
}

pub fn ackermann_a_capped(k: u32, s: u128, cap: u128) -> AckValue {
    eval(Family::A, k, s, cap)
}

/// `B(0,n) = n^2`, `B(k,0) = 2`, `B(k,n) = B(k-1, B(k,n-1))`.
pub fn ackermann_b(k: u32, s: u128) -> AckValue {
    ackermann_b_capped(k, s, DEFAULT_CAP)
}

pub fn ackermann_b_capped(k: u32, s: u128, cap: u128) -> AckValue {
    eval(Family::B, k, s, cap)
}

/// `alpha_k(n)`: the least `s` with `A(k/2, s) >= n` for even `k`, or `B(k/2, s) >= n` for odd `k`.
pub fn inv_ackermann(k: u32, n: u64) -> u64 {
    let fam = if k.is_multiple_of(2) {
        Family::A
    } else {
        Family::B
    };
    let level = k / 2;
    let n = n as u128;
    let ok = |s: u128| eval(fam, level, s, DEFAULT_CAP).at_least(n);
    if ok(0) {
        return 0;
    }
    let mut hi: u128 = 1;
    while !ok(hi) {
        hi *= 2;
    }
    let mut lo = hi / 2; // ok(lo) is false
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi as u64
}

/// Shorthand for [`inv_ackermann`] on `usize` sizes.
pub fn alpha(k: u32, n: usize) -> usize {
    inv_ackermann(k, n as u64) as usize
}
