//! Shifted binary quadratic forms attached to circles.
//!
//! For a circle of curvature `a` in a configuration `(a, b, c, d)`, the
//! curvatures of all circles tangent to it are the values
//! `f(x, y) − a` of
//!
//! ```text
//! f(x, y) = (b + a)x² + (a + b + d − c)xy + (d + a)y²
//! ```
//!
//! over coprime pairs `(x, y)` taken up to sign. The pair `(1, 0)` gives `b`,
//! `(0, 1)` gives `d` and `(1, −1)` gives `c`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modular::{crt, factorize, gcd, inv_mod, rem};
use crate::primes::is_prime;
use crate::quadruple::{descartes_form, Quadruple, SwapIndex};
use crate::residues::ResidueClassSet;

/// `A x² + B xy + C y²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

/// Unimodular change of variables `(x, y)ᵀ = M (u, v)ᵀ`.
type Basis = [[i128; 2]; 2];

impl BinaryForm {
    pub const fn new(a: i64, b: i64, c: i64) -> Self {
        BinaryForm { a, b, c }
    }

    pub fn disc(&self) -> i128 {
        let (a, b, c) = (self.a as i128, self.b as i128, self.c as i128);
        b * b - 4 * a * c
    }

    #[inline]
    pub fn eval(&self, x: i64, y: i64) -> i128 {
        let (x, y) = (x as i128, y as i128);
        self.a as i128 * x * x + self.b as i128 * x * y + self.c as i128 * y * y
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a > 0 && self.disc() < 0
    }

    /// Gauss reduction: an equivalent form with `|B| ≤ A ≤ C` and the basis
    /// taking the reduced variables to the original ones.
    fn reduce(&self) -> (i128, i128, i128, Basis) {
        let (mut a, mut b, mut c) = (self.a as i128, self.b as i128, self.c as i128);
        let mut m: Basis = [[1, 0], [0, 1]];
        loop {
            // translate: u → u + k v brings B into (−A, A]
            let k = (a - b).div_euclid(2 * a);
            if k != 0 {
                c += a * k * k + b * k;
                b += 2 * a * k;
                m = [[m[0][0], m[0][0] * k + m[0][1]], [m[1][0], m[1][0] * k + m[1][1]]];
            }
            if a > c {
                // (u, v) → (−v, u)
                (a, b, c) = (c, -b, a);
                m = [[m[0][1], -m[0][0]], [m[1][1], -m[1][0]]];
                continue;
            }
            return (a, b, c, m);
        }
    }
}

/// A form together with the shift subtracted from its values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShiftedForm {
    pub form: BinaryForm,
    pub shift: i64,
}

impl fmt::Display for ShiftedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{};{}", self.form.a, self.form.b, self.form.c, self.shift)
    }
}

impl FromStr for ShiftedForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadQuadruple(format!("expected \"A,B,C;shift\", got {s:?}"));
        let (coef, shift) = s.split_once(';').ok_or_else(bad)?;
        let v: Vec<i64> = coef
            .split(',')
            .map(|p| p.trim().parse::<i64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        if v.len() != 3 {
            return Err(bad());
        }
        let shift = shift.trim().parse().map_err(|_| bad())?;
        Ok(ShiftedForm { form: BinaryForm::new(v[0], v[1], v[2]), shift })
    }
}

/// A value of a shifted form with one witness pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Represented {
    pub value: i64,
    pub x: i64,
    pub y: i64,
}

/// Picks the representative of `±(x, y)` with `y > 0`, or `y = 0` and `x > 0`.
fn normalize(x: i128, y: i128) -> (i128, i128) {
    if y < 0 || (y == 0 && x < 0) {
        (-x, -y)
    } else {
        (x, y)
    }
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a.signum() * a, a.signum(), 0)
    } else {
        let (g, s, t) = ext_gcd(b, a.rem_euclid(b));
        (g, t, s - a.div_euclid(b) * t)
    }
}

impl ShiftedForm {
    /// `f(x, y) − shift`.
    pub fn value(&self, x: i64, y: i64) -> i128 {
        self.form.eval(x, y) - self.shift as i128
    }

    /// The configuration `(ω, f(v₁)−ω, f(v₁−v₂)−ω, f(v₂)−ω)` where `v₁ = (x, y)`
    /// and `v₂` completes it to a basis of determinant 1. The second entry is
    /// the circle represented by `(x, y)`.
    pub fn configuration(&self, x: i64, y: i64) -> Result<Quadruple> {
        let (g, s, t) = ext_gcd(x as i128, y as i128);
        if g != 1 {
            return Err(Error::BadQuadruple(format!("({x}, {y}) is not a primitive pair")));
        }
        // x·t' − y·s' = 1 with v₂ = (s', t') = (−t, s)
        let (x2, y2) = (-t, s);
        let conv = |v: i128| i64::try_from(v).map_err(|_| Error::Overflow("configuration"));
        let (x2, y2) = (conv(x2)?, conv(y2)?);
        let q = Quadruple([
            self.shift,
            conv(self.value(x, y))?,
            conv(self.value(x - x2, y - y2))?,
            conv(self.value(x2, y2))?,
        ]);
        let d = descartes_form(&q)?;
        if d != 0 {
            return Err(Error::NotDescartes(q.to_string(), d));
        }
        Ok(q)
    }
}

/// The shifted form whose values are the curvatures tangent to `q[slot]`.
/// The other entries play `b, c, d` in quadruple order.
pub fn curvature_form(q: &Quadruple, slot: SwapIndex) -> Result<ShiftedForm> {
    let k = slot.slot();
    let rest: Vec<i64> = (0..4).filter(|&j| j != k).map(|j| q.0[j]).collect();
    let (a, b, c, d) = (q.0[k], rest[0], rest[1], rest[2]);
    let coef = |v: i128| i64::try_from(v).map_err(|_| Error::Overflow("curvature form"));
    let (a1, b1, c1, d1) = (a as i128, b as i128, c as i128, d as i128);
    let form = BinaryForm::new(coef(b1 + a1)?, coef(a1 + b1 + d1 - c1)?, coef(d1 + a1)?);
    let expected = -4 * a1 * a1;
    if form.disc() != expected {
        return Err(Error::DiscriminantMismatch { expected, found: form.disc() });
    }
    Ok(ShiftedForm { form, shift: a })
}

/// Calls `f(value, x, y)` for every pair up to sign with `f(x, y) − shift ≤ bound`,
/// restricted to coprime pairs when `primitive_only` is set. Order is
/// unspecified. The form must be positive definite.
pub fn for_each_represented(sf: &ShiftedForm, bound: i64, primitive_only: bool, mut f: impl FnMut(i64, i64, i64)) {
    assert!(sf.form.is_positive_definite(), "form {sf} is not positive definite");
    let (a, b, c, m) = sf.form.reduce();
    let n = bound as i128 + sf.shift as i128;
    if n < a {
        return;
    }
    let delta = 4 * a * c - b * b;
    let mut emit = |u: i128, v: i128| {
        let value = a * u * u + b * u * v + c * v * v - sf.shift as i128;
        let (x, y) = normalize(m[0][0] * u + m[0][1] * v, m[1][0] * u + m[1][1] * v);
        f(value as i64, x as i64, y as i64);
    };
    // v = 0: multiples of (1, 0)
    let u_max = if primitive_only { 1 } else { (n / a).isqrt() };
    for u in 1..=u_max {
        emit(u, 0);
    }
    let v_max = (4 * a * n / delta).isqrt();
    for v in 1..=v_max {
        let disc = 4 * a * n - delta * v * v;
        if disc < 0 {
            continue;
        }
        let s = disc.isqrt();
        let lo = (-b * v - s).div_euclid(2 * a) + i128::from((-b * v - s).rem_euclid(2 * a) != 0);
        let hi = (-b * v + s).div_euclid(2 * a);
        for u in lo..=hi {
            if primitive_only && gcd(u as i64, v as i64) != 1 {
                continue;
            }
            emit(u, v);
        }
    }
}

/// Every value `f(x, y) − shift ≤ bound` over pairs up to sign, one entry per
/// pair, sorted by `(value, x, y)`.
pub fn represented_values(sf: &ShiftedForm, bound: i64, primitive_only: bool) -> Vec<Represented> {
    let mut out = Vec::new();
    for_each_represented(sf, bound, primitive_only, |value, x, y| out.push(Represented { value, x, y }));
    out.sort_unstable();
    out
}

/// Residues mod `m` of curvatures tangent to a circle of curvature `a`.
///
/// Computed prime by prime: for `p ≡ 1 (mod 4)` every class occurs, for
/// `p ≡ 3 (mod 4)` exactly the classes with `a + b ≢ 0 (mod p)`.
pub fn residue_set_sm(a: i64, m: u64) -> Result<ResidueClassSet> {
    if m < 2 || m % 2 == 0 || gcd(a, m as i64) != 1 {
        return Err(Error::BadModulus { modulus: m, reason: "modulus must be odd and coprime to 2a" });
    }
    let split: Vec<u64> = factorize(m).into_iter().filter(|&(p, _)| p % 4 == 3).map(|(p, _)| p).collect();
    Ok(ResidueClassSet::from_iter(
        m,
        (0..m as i128).filter(|&b| split.iter().all(|&p| rem(a as i128 + b, p) != 0)),
    ))
}

/// Primes found in a family, with the density ratio against `X/(log X)^{3/2}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilyPrimes {
    /// One entry per tangent circle, sorted by `(value, x, y)`.
    pub primes: Vec<Represented>,
    pub distinct: usize,
    pub ratio: f64,
}

impl FamilyPrimes {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("p,x,y\n");
        for r in &self.primes {
            s.push_str(&format!("{},{},{}\n", r.value, r.x, r.y));
        }
        s
    }
}

/// Odd primes `≤ bound` primitively represented by `sf`, optionally restricted
/// to `p ≡ ℓ (mod m)`.
pub fn primes_in_family(sf: &ShiftedForm, bound: i64, constraint: Option<(i64, u64)>) -> Result<FamilyPrimes> {
    if let Some((l, m)) = constraint {
        let w = sf.shift as i128;
        if m < 2 || gcd(2 * sf.shift, m as i64) != 1 {
            return Err(Error::ConstraintViolation(format!("modulus {m} must be coprime to 2·{}", sf.shift)));
        }
        if inv_mod(l as i128 + w, m).is_none() {
            return Err(Error::ConstraintViolation(format!("{l} + {} is not invertible mod {m}", sf.shift)));
        }
    }
    let mut primes = Vec::new();
    for_each_represented(sf, bound, true, |value, x, y| {
        let ok = value > 2 && value & 1 == 1 && constraint.is_none_or(|(l, m)| rem(value as i128 - l as i128, m) == 0);
        if ok && is_prime(value as u64) {
            primes.push(Represented { value, x, y });
        }
    });
    primes.sort_unstable();
    let mut distinct = primes.iter().map(|r| r.value).collect::<Vec<_>>();
    distinct.dedup();
    let x = bound as f64;
    let ratio = if bound > 2 { distinct.len() as f64 / (x / x.ln().powf(1.5)) } else { 0.0 };
    Ok(FamilyPrimes { primes, distinct: distinct.len(), ratio })
}

/// One circle of a tangency path, with a configuration that contains it in
/// slot 0 and, from the second step on, its predecessor in slot 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    pub curvature: i64,
    pub quadruple: Quadruple,
}

/// Rotates `q` so that slot 1 (the new circle) comes first and the old base
/// circle second.
fn recentre(q: Quadruple) -> Quadruple {
    Quadruple([q.0[1], q.0[0], q.0[2], q.0[3]])
}

/// Smallest `k` per prime of `m` avoiding `0`, `−a` and `−ℓ`, joined by CRT.
fn intermediate_class(a: i64, l: i64, m: u64) -> Result<u64> {
    let mut parts = Vec::new();
    for (p, e) in factorize(m) {
        let pe = p.pow(e);
        let k = (1..p)
            .find(|&k| rem(k as i128 + a as i128, p) != 0 && rem(k as i128 + l as i128, p) != 0)
            .ok_or(Error::BadModulus { modulus: m, reason: "needs every prime factor ≥ 5" })?;
        parts.push((k, pe));
    }
    Ok(crt(&parts)?.0)
}

/// A prime `≡ ℓ (mod m)` within two tangencies of circle `q[slot]`.
///
/// If `ℓ + a` is a unit mod `m` the prime is sought among the circles tangent
/// to the base; otherwise an intermediate prime `p₁ ≡ k` is found first, with
/// `k`, `k + a` and `k + ℓ` all units. Searches stop at curvature `cap`.
pub fn two_step_prime(q: &Quadruple, slot: SwapIndex, l: i64, m: u64, cap: i64) -> Result<Vec<PathStep>> {
    let a = q.0[slot.slot()];
    if gcd(m as i64, 6) != 1 || m < 5 {
        return Err(Error::BadModulus { modulus: m, reason: "modulus must be coprime to 6" });
    }
    if inv_mod(l as i128, m).is_none() {
        return Err(Error::ConstraintViolation(format!("{l} is not a unit mod {m}")));
    }
    if !(a > 2 && is_prime(a as u64)) {
        return Err(Error::HypothesisViolation(format!("base curvature {a} is not an odd prime")));
    }
    let base = {
        let mut v = q.0;
        v.swap(0, slot.slot());
        Quadruple(v)
    };
    let first = |sf: &ShiftedForm, target: i64| -> Result<Option<Quadruple>> {
        let found = primes_in_family(sf, cap, Some((target, m)))?;
        match found.primes.first() {
            Some(r) => Ok(Some(recentre(sf.configuration(r.x, r.y)?))),
            None => Ok(None),
        }
    };
    let sf = curvature_form(&base, SwapIndex::from_zero_based(0))?;
    let mut path = vec![PathStep { curvature: a, quadruple: base }];
    if inv_mod(l as i128 + a as i128, m).is_some() {
        let q1 = first(&sf, l)?.ok_or_else(|| Error::SearchExhausted(format!("no prime ≡ {l} mod {m} tangent to {a} below {cap}")))?;
        path.push(PathStep { curvature: q1.0[0], quadruple: q1 });
        return Ok(path);
    }
    let k = intermediate_class(a, l, m)? as i64;
    let q1 = first(&sf, k)?.ok_or_else(|| Error::SearchExhausted(format!("no prime ≡ {k} mod {m} tangent to {a} below {cap}")))?;
    let sf1 = curvature_form(&q1, SwapIndex::from_zero_based(0))?;
    let q2 = first(&sf1, l)?
        .ok_or_else(|| Error::SearchExhausted(format!("no prime ≡ {l} mod {m} tangent to {} below {cap}", q1.0[0])))?;
    path.push(PathStep { curvature: q1.0[0], quadruple: q1 });
    path.push(PathStep { curvature: q2.0[0], quadruple: q2 });
    Ok(path)
}
