//! Primality: deterministic Miller–Rabin, an odd-only sieve for bulk lookups,
//! and a segmented prime-counting function.

use crate::error::{Error, Result};

/// Bases for which strong-probable-prime testing is exact below 2^64.
const MR_BASES: [u64; 7] = [2, 325, 9375, 28178, 450775, 9780504, 1795265022];

#[inline]
fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Exact primality for every `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    if n < 41 * 41 {
        return true;
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'bases: for &a in &MR_BASES {
        let a = a % n;
        if a == 0 {
            continue;
        }
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'bases;
            }
        }
        return false;
    }
    true
}

/// Stateless primality tester.
#[derive(Clone, Copy, Debug, Default)]
pub struct PrimalityTester;

impl PrimalityTester {
    pub fn is_prime(&self, n: i64) -> bool {
        n >= 0 && is_prime(n as u64)
    }
}

/// True iff `n` is an odd prime (so `n > 2`). Non-positive curvatures are never prime.
pub fn is_odd_prime_curvature(n: i64) -> bool {
    n > 2 && n & 1 == 1 && is_prime(n as u64)
}

/// Bit set of odd primes up to a limit, with Miller–Rabin above it.
pub struct PrimeTable {
    limit: u64,
    /// Bit `i` describes the odd number `2i + 1`.
    bits: Vec<u64>,
}

impl PrimeTable {
    /// Sieves all odd numbers `≤ limit` using a segmented sieve.
    pub fn new(limit: u64) -> Self {
        let n_odd = limit / 2 + 1;
        let mut bits = vec![0u64; (n_odd as usize).div_ceil(64)];
        for_each_prime_segment(limit, |lo, seg| {
            // seg[j] covers the odd number lo + 2j
            for (j, &is_p) in seg.iter().enumerate() {
                if is_p {
                    let i = ((lo + 2 * j as u64) / 2) as usize;
                    bits[i >> 6] |= 1 << (i & 63);
                }
            }
        });
        PrimeTable { limit, bits }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Bytes used by the table.
    pub fn bytes_for(limit: u64) -> u64 {
        (limit / 2 / 64 + 1) * 8
    }

    #[inline]
    pub fn is_prime(&self, n: i64) -> bool {
        if n < 2 {
            return false;
        }
        let n = n as u64;
        if n & 1 == 0 {
            return n == 2;
        }
        if n <= self.limit {
            let i = (n / 2) as usize;
            self.bits[i >> 6] >> (i & 63) & 1 == 1
        } else {
            is_prime(n)
        }
    }

    #[inline]
    pub fn is_odd_prime(&self, n: i64) -> bool {
        n > 2 && n & 1 == 1 && self.is_prime(n)
    }
}

/// Odd primes up to `sqrt(limit)`, by a plain sieve.
fn small_odd_primes(limit: u64) -> Vec<u64> {
    let r = (limit as f64).sqrt() as u64 + 2;
    let mut comp = vec![false; r as usize + 1];
    let mut out = Vec::new();
    let mut i = 3u64;
    while i <= r {
        if !comp[i as usize] {
            out.push(i);
            let mut j = i * i;
            while j <= r {
                comp[j as usize] = true;
                j += 2 * i;
            }
        }
        i += 2;
    }
    out
}

const SEGMENT_ODDS: u64 = 1 << 18;

/// Calls `f(lo, flags)` for consecutive segments of odd numbers `lo, lo+2, …`
/// up to `limit`, where `flags[j]` says whether `lo + 2j` is prime.
fn for_each_prime_segment(limit: u64, mut f: impl FnMut(u64, &[bool])) {
    if limit < 3 {
        return;
    }
    let primes = small_odd_primes(limit);
    let mut seg = vec![true; SEGMENT_ODDS as usize];
    let mut lo = 1u64;
    while lo <= limit {
        let count = (((limit - lo) / 2) + 1).min(SEGMENT_ODDS);
        let hi = lo + 2 * (count - 1);
        let seg = &mut seg[..count as usize];
        seg.fill(true);
        if lo == 1 {
            seg[0] = false;
        }
        for &p in &primes {
            if p * p > hi {
                break;
            }
            // first odd multiple of p that is ≥ max(p², lo)
            let mut start = (p * p).max(lo.div_ceil(p) * p);
            if start & 1 == 0 {
                start += p;
            }
            let mut j = ((start - lo) / 2) as usize;
            while j < seg.len() {
                seg[j] = false;
                j += p as usize;
            }
        }
        f(lo, seg);
        lo = hi + 2;
    }
}

/// Largest argument accepted by [`prime_pi`].
pub const PRIME_PI_LIMIT: u64 = 1 << 40;

/// Exact count of primes `≤ x` by a segmented sieve.
pub fn prime_pi(x: u64) -> Result<u64> {
    if x >= PRIME_PI_LIMIT {
        return Err(Error::MemoryBudgetExceeded {
            needed: (x as f64).sqrt() as u64 * 8,
            budget: ((PRIME_PI_LIMIT as f64).sqrt() as u64) * 8,
        });
    }
    if x < 2 {
        return Ok(0);
    }
    let mut count = 1u64; // the prime 2
    for_each_prime_segment(x, |_, seg| count += seg.iter().filter(|&&b| b).count() as u64);
    Ok(count)
}
