//! Descartes quadruples and the swap action of the Apollonian group.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Four signed curvatures of mutually tangent circles.
///
/// The constructor does not validate; use [`Quadruple::validated`] for
/// untrusted input.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Quadruple(pub [i64; 4]);

/// One of the four generators S1..S4, stored zero-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SwapIndex(u8);

impl SwapIndex {
    pub const ALL: [SwapIndex; 4] = [SwapIndex(0), SwapIndex(1), SwapIndex(2), SwapIndex(3)];

    /// Builds a generator from its one-based label.
    pub fn new(i: usize) -> Result<Self> {
        if (1..=4).contains(&i) {
            Ok(SwapIndex(i as u8 - 1))
        } else {
            Err(Error::BadQuadruple(format!("swap index {i} outside 1..=4")))
        }
    }

    pub fn from_zero_based(i: usize) -> Self {
        assert!(i < 4, "swap index {i} outside 0..4");
        SwapIndex(i as u8)
    }

    /// One-based label (1..=4).
    pub fn label(self) -> usize {
        self.0 as usize + 1
    }

    pub fn slot(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for SwapIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl fmt::Display for Quadruple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "{a},{b},{c},{d}")
    }
}

impl FromStr for Quadruple {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::BadQuadruple(format!("expected four integers, got {s:?}")));
        }
        let mut v = [0i64; 4];
        for (slot, p) in v.iter_mut().zip(parts) {
            *slot = p
                .parse()
                .map_err(|_| Error::BadQuadruple(format!("not an integer: {p:?}")))?;
        }
        Ok(Quadruple(v))
    }
}

/// Exact value of `2(a²+b²+c²+d²) − (a+b+c+d)²`, with every step checked.
pub fn descartes_form(q: &Quadruple) -> Result<i128> {
    let of = || Error::Overflow("descartes form");
    let mut squares: i128 = 0;
    let mut sum: i128 = 0;
    for &x in &q.0 {
        let x = x as i128;
        squares = squares.checked_add(x.checked_mul(x).ok_or_else(of)?).ok_or_else(of)?;
        sum += x;
    }
    let lhs = squares.checked_mul(2).ok_or_else(of)?;
    let rhs = sum.checked_mul(sum).ok_or_else(of)?;
    lhs.checked_sub(rhs).ok_or_else(of)
}

/// Replaces entry `i` by `2·(sum of the other three) − entry`.
pub fn apply_swap(q: &Quadruple, i: SwapIndex) -> Result<Quadruple> {
    let k = i.slot();
    let others: i128 = (0..4).filter(|&j| j != k).map(|j| q.0[j] as i128).sum();
    let new = 2 * others - q.0[k] as i128;
    let new = i64::try_from(new).map_err(|_| Error::Overflow("swap"))?;
    let mut out = *q;
    out.0[k] = new;
    Ok(out)
}

pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// True iff the four curvatures have no common factor.
pub fn is_primitive(q: &Quadruple) -> bool {
    q.0.iter().fold(0u64, |g, &x| gcd_u64(g, x.unsigned_abs())) == 1
}

/// Upper bound on swaps performed by [`reduce_to_root`].
pub const REDUCTION_CAP: usize = 50_000_000;

impl Quadruple {
    pub const fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        Quadruple([a, b, c, d])
    }

    /// Checks the Descartes relation and that at most one entry is negative.
    pub fn validated(self) -> Result<Self> {
        let q = descartes_form(&self)?;
        if q != 0 {
            return Err(Error::NotDescartes(self.to_string(), q));
        }
        if self.0.iter().filter(|&&x| x < 0).count() > 1 {
            return Err(Error::BadQuadruple(format!("({self}) has two negative curvatures")));
        }
        Ok(self)
    }

    pub fn sorted(mut self) -> Self {
        self.0.sort_unstable();
        self
    }

    pub fn max(&self) -> i64 {
        *self.0.iter().max().unwrap()
    }

    /// Slot holding the largest entry (first one on ties).
    pub fn argmax(&self) -> usize {
        let m = self.max();
        self.0.iter().position(|&x| x == m).unwrap()
    }

    pub fn swap(&self, i: SwapIndex) -> Result<Self> {
        apply_swap(self, i)
    }

    /// Swap without overflow checks. Callers guarantee all entries are at most
    /// 10^18 in absolute value.
    #[inline]
    pub fn swap_fast(&self, k: usize) -> Self {
        let s = self.0[0] + self.0[1] + self.0[2] + self.0[3];
        let mut out = *self;
        out.0[k] = 2 * (s - self.0[k]) - self.0[k];
        out
    }

    /// Root normal form: sorted, first entry non-positive, `a+b+c ≥ d`.
    pub fn is_root(&self) -> bool {
        let [a, b, c, d] = self.0;
        a <= b && b <= c && c <= d && a <= 0 && a as i128 + b as i128 + c as i128 >= d as i128
    }
}

/// Reduces `q` to its root quadruple.
///
/// Returns the sorted root and the swaps applied, as one-based labels of the
/// positions in `q`. Applying the reversed word to the unsorted reduced vector
/// reproduces `q`; the root is that vector sorted.
pub fn reduce_to_root(q: &Quadruple) -> Result<(Quadruple, Vec<SwapIndex>)> {
    let q = q.validated()?;
    if !is_primitive(&q) {
        return Err(Error::NotPrimitive(q.to_string()));
    }
    let (v, word) = reduce_unsorted(&q)?;
    let root = v.sorted();
    if !root.is_root() {
        return Err(Error::InvalidRoot(root.to_string(), "reduction stopped off the root locus"));
    }
    Ok((root, word))
}

/// Swaps the largest entry while that strictly lowers the sum.
pub fn reduce_unsorted(q: &Quadruple) -> Result<(Quadruple, Vec<SwapIndex>)> {
    let mut v = *q;
    let mut word = Vec::new();
    loop {
        let k = v.argmax();
        let others: i128 = (0..4).filter(|&j| j != k).map(|j| v.0[j] as i128).sum();
        if others >= v.0[k] as i128 {
            return Ok((v, word));
        }
        if word.len() >= REDUCTION_CAP {
            return Err(Error::NonTerminating(REDUCTION_CAP));
        }
        let s = SwapIndex::from_zero_based(k);
        v = apply_swap(&v, s)?;
        word.push(s);
    }
}

/// Applies a word left to right.
pub fn apply_word(q: &Quadruple, word: &[SwapIndex]) -> Result<Quadruple> {
    word.iter().try_fold(*q, |v, &s| apply_swap(&v, s))
}

/// Validates a claimed root: Descartes, primitive, and fixed by reduction.
pub fn check_root(root: &Quadruple) -> Result<Quadruple> {
    let (r, word) = reduce_to_root(root)?;
    if !word.is_empty() || r != *root {
        return Err(Error::InvalidRoot(root.to_string(), "not in root normal form"));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64, c: i64, d: i64) -> Quadruple {
        Quadruple::new(a, b, c, d)
    }

    #[test]
    fn descartes_examples() {
        assert_eq!(descartes_form(&q(-1, 2, 2, 3)).unwrap(), 0);
        assert_eq!(descartes_form(&q(0, 0, 0, 0)).unwrap(), 0);
        assert_eq!(descartes_form(&q(-47, 97, 100, 108)).unwrap(), 0);
        assert_eq!(descartes_form(&q(1, 1, 1, 1)).unwrap(), 8 - 16);
    }

    #[test]
    fn descartes_overflow_is_reported() {
        let big = q(i64::MAX, i64::MAX, i64::MAX, i64::MAX);
        assert_eq!(descartes_form(&big), Err(Error::Overflow("descartes form")));
    }

    #[test]
    fn swap_examples() {
        let s1 = SwapIndex::new(1).unwrap();
        assert_eq!(apply_swap(&q(-1, 2, 2, 3), s1).unwrap(), q(15, 2, 2, 3));
        assert_eq!(apply_swap(&q(-6, 11, 14, 15), s1).unwrap(), q(86, 11, 14, 15));
        assert_eq!(descartes_form(&q(86, 11, 14, 15)).unwrap(), 0);
        assert!(apply_swap(&q(i64::MAX, 1, 1, 1), SwapIndex::new(2).unwrap()).is_err());
        assert!(SwapIndex::new(5).is_err());
    }

    #[test]
    fn primitivity() {
        assert!(is_primitive(&q(-1, 2, 2, 3)));
        assert!(!is_primitive(&q(-2, 4, 4, 6)));
        assert!(is_primitive(&q(0, 0, 1, 1)));
    }

    #[test]
    fn reduction_examples() {
        let (r, w) = reduce_to_root(&q(15, 2, 2, 3)).unwrap();
        assert_eq!(r, q(-1, 2, 2, 3));
        assert_eq!(w.iter().map(|s| s.label()).collect::<Vec<_>>(), vec![1]);
        assert_eq!(reduce_to_root(&q(-1, 2, 2, 3)).unwrap(), (q(-1, 2, 2, 3), vec![]));
        assert_eq!(
            reduce_to_root(&q(-47, 97, 100, 108)).unwrap(),
            (q(-47, 97, 100, 108), vec![])
        );
        assert!(matches!(reduce_to_root(&q(1, 1, 1, 1)), Err(Error::NotDescartes(..))));
        assert!(matches!(reduce_to_root(&q(-2, 4, 4, 6)), Err(Error::NotPrimitive(_))));
    }

    #[test]
    fn reduction_word_replays() {
        let start = q(-6, 11, 14, 15);
        let mut v = start;
        for &k in &[0usize, 2, 1, 3, 0, 2] {
            v = v.swap(SwapIndex::from_zero_based(k)).unwrap();
        }
        let (root, word) = reduce_to_root(&v).unwrap();
        assert_eq!(root, start);
        let (unsorted, _) = reduce_unsorted(&v).unwrap();
        let rev: Vec<SwapIndex> = word.iter().rev().copied().collect();
        assert_eq!(apply_word(&unsorted, &rev).unwrap(), v);
    }

    #[test]
    fn parse_and_display() {
        let p: Quadruple = " -1, 2,2 ,3".parse().unwrap();
        assert_eq!(p, q(-1, 2, 2, 3));
        assert_eq!(p.to_string(), "-1,2,2,3");
        assert!("1,2,3".parse::<Quadruple>().is_err());
        assert!("1,2,x,3".parse::<Quadruple>().is_err());
    }

    #[test]
    fn swap_fast_matches_checked() {
        let v = q(-6, 11, 14, 15);
        for k in 0..4 {
            assert_eq!(v.swap_fast(k), v.swap(SwapIndex::from_zero_based(k)).unwrap());
        }
    }
}
