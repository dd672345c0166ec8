//! Small modular-arithmetic toolkit: inverses, CRT, factoring, squares.

use crate::error::{Error, Result};

pub fn gcd(a: i64, b: i64) -> i64 {
    crate::quadruple::gcd_u64(a.unsigned_abs(), b.unsigned_abs()) as i64
}

/// Least non-negative residue of `x` mod `m`.
#[inline]
pub fn rem(x: i128, m: u64) -> u64 {
    x.rem_euclid(m as i128) as u64
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: i128, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, a.rem_euclid(m as i128));
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    (r0 == 1).then(|| rem(t0, m))
}

/// Combines `x ≡ r_i (mod m_i)` for pairwise coprime moduli.
pub fn crt(pairs: &[(u64, u64)]) -> Result<(u64, u64)> {
    let mut r: u128 = 0;
    let mut m: u128 = 1;
    for &(ri, mi) in pairs {
        let inv = inv_mod(m as i128, mi).ok_or(Error::BadModulus {
            modulus: mi,
            reason: "moduli are not pairwise coprime",
        })? as u128;
        // r + m·t ≡ ri (mod mi)
        let diff = (ri as i128 - r as i128).rem_euclid(mi as i128) as u128;
        let t = diff * inv % mi as u128;
        r += m * t;
        m *= mi as u128;
        if m > u64::MAX as u128 {
            return Err(Error::Overflow("crt modulus"));
        }
    }
    Ok((r as u64, m as u64))
}

/// Prime factorisation by trial division, as `(p, e)` pairs in increasing `p`.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Set of squares modulo `m` (including 0), as a membership table.
pub fn squares_mod(m: u64) -> Vec<bool> {
    let mut t = vec![false; m as usize];
    for x in 0..m {
        t[(x * x % m) as usize] = true;
    }
    t
}

/// Whether −1 is a square modulo the odd prime `p`.
pub fn minus_one_is_square(p: u64) -> bool {
    p % 4 == 1
}

/// Returns `Some(p)` if `m` is a power of the odd prime `p`.
pub fn odd_prime_power_base(m: u64) -> Option<u64> {
    let f = factorize(m);
    (f.len() == 1 && f[0].0 != 2).then(|| f[0].0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverses() {
        assert_eq!(inv_mod(5, 7), Some(3));
        assert_eq!(inv_mod(-2, 7), Some(3));
        assert_eq!(inv_mod(14, 49), None);
        for m in 2..60u64 {
            for a in 0..m {
                match inv_mod(a as i128, m) {
                    Some(i) => assert_eq!(a * i % m, 1),
                    None => assert_ne!(gcd(a as i64, m as i64), 1),
                }
            }
        }
    }

    #[test]
    fn chinese_remainders() {
        assert_eq!(crt(&[(2, 3), (3, 5), (2, 7)]).unwrap(), (23, 105));
        assert_eq!(crt(&[]).unwrap(), (0, 1));
        assert!(crt(&[(1, 4), (1, 6)]).is_err());
    }

    #[test]
    fn factoring() {
        assert_eq!(factorize(1), vec![]);
        assert_eq!(factorize(360), vec![(2, 3), (3, 2), (5, 1)]);
        assert_eq!(factorize(1_000_000_007), vec![(1_000_000_007, 1)]);
        assert_eq!(odd_prime_power_base(81), Some(3));
        assert_eq!(odd_prime_power_base(16), None);
        assert_eq!(odd_prime_power_base(15), None);
    }

    #[test]
    fn square_tables() {
        let q7 = squares_mod(7);
        let members: Vec<u64> = (0..7).filter(|&x| q7[x as usize]).collect();
        assert_eq!(members, vec![0, 1, 2, 4]);
        assert!(minus_one_is_square(13));
        assert!(!minus_one_is_square(7));
    }
}
