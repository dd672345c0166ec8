//! Pinch families: the circles tangent to two fixed tangent circles.
//!
//! For a configuration `(a, b, c, d)` the circles tangent to both `C_a` and
//! `C_b` have curvatures `f(x) = (a+b)x² − (a+b+c−d)x + c`, `x ∈ ℤ`, with
//! `f(0) = c`, `f(1) = d`, and `(a, b, f(x), f(x+1))` a configuration for
//! every `x`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modular::{factorize, inv_mod, rem, squares_mod};
use crate::primes::is_prime;
use crate::quadruple::{descartes_form, Quadruple, SwapIndex};
use crate::residues::ResidueClassSet;

/// The quadratic of the pinch family governed by `a` and `b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PinchPoly {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl PinchPoly {
    /// Leading, linear and constant coefficients.
    pub fn coefficients(&self) -> (i128, i128, i128) {
        let (a, b, c, d) = (self.a as i128, self.b as i128, self.c as i128, self.d as i128);
        (a + b, -(a + b + c - d), c)
    }

    pub fn disc(&self) -> i128 {
        let (p, q, r) = self.coefficients();
        q * q - 4 * p * r
    }

    #[inline]
    pub fn eval(&self, x: i64) -> i128 {
        let (p, q, r) = self.coefficients();
        let x = x as i128;
        (p * x + q) * x + r
    }

    /// The configuration `(a, b, f(x), f(x+1))`.
    pub fn consecutive(&self, x: i64) -> Result<Quadruple> {
        let conv = |v: i128| i64::try_from(v).map_err(|_| Error::Overflow("pinch value"));
        let q = Quadruple([self.a, self.b, conv(self.eval(x))?, conv(self.eval(x + 1))?]);
        match descartes_form(&q)? {
            0 => Ok(q),
            v => Err(Error::NotDescartes(q.to_string(), v)),
        }
    }

    /// `(a, b, f(4s), f(4s+1))`, the image of the governing configuration
    /// under `(S₄S₃)^{2s}`.
    pub fn quadruple_at(&self, s: i64) -> Result<Quadruple> {
        let x = s.checked_mul(4).ok_or(Error::Overflow("pinch parameter"))?;
        self.consecutive(x)
    }

    /// Whether `a + b > 0`, `ab` is not a square and `c` is odd.
    pub fn bunyakovsky_hypotheses(&self) -> bool {
        let ab = self.a as i128 * self.b as i128;
        let square = ab >= 0 && (ab as u128).isqrt().pow(2) == ab as u128;
        self.a + self.b > 0 && !square && self.c & 1 == 1
    }
}

/// The pinch polynomial governed by slots `ga` and `gb` of `q`; the other two
/// entries become `c` and `d` in quadruple order.
pub fn pinch_poly(q: &Quadruple, ga: SwapIndex, gb: SwapIndex) -> Result<PinchPoly> {
    if ga == gb {
        return Err(Error::BadQuadruple("governing slots must differ".into()));
    }
    let rest: Vec<i64> = (0..4).filter(|&j| j != ga.slot() && j != gb.slot()).map(|j| q.0[j]).collect();
    let pp = PinchPoly { a: q.0[ga.slot()], b: q.0[gb.slot()], c: rest[0], d: rest[1] };
    let expected = 4 * pp.a as i128 * pp.b as i128;
    if pp.disc() != expected {
        return Err(Error::DiscriminantMismatch { expected, found: pp.disc() });
    }
    Ok(pp)
}

/// Residues mod an odd prime power attained by a pinch family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PinchValues {
    /// Both governors vanish mod `p`. The only residue mod `p` is `c`; mod
    /// higher powers of `p` the set also depends on `c` and `d`.
    GovernorsVanish,
    Set(ResidueClassSet),
}

impl PinchValues {
    /// The concrete set for the family `pp`.
    pub fn resolve(&self, pp: &PinchPoly, m: u64) -> ResidueClassSet {
        match self {
            PinchValues::GovernorsVanish => {
                let (p, e) = factorize(m)[0];
                let (u, v, w) = pp.coefficients();
                quadratic_values(u, v, w, p, e)
            }
            PinchValues::Set(s) => s.clone(),
        }
    }
}

/// Values of `u·x² + v·x + w` modulo `p^e` over all `x`, for odd `p`.
fn quadratic_values(u: i128, v: i128, w: i128, p: u64, e: u32) -> ResidueClassSet {
    if e == 0 {
        return ResidueClassSet::full(1);
    }
    let m = p.pow(e);
    if rem(u, p) != 0 {
        // u·(x + v/2u)² + w − v²/4u
        let shift = w - rem(v * v, m) as i128 * inv_mod(4 * u, m).unwrap() as i128;
        let squares = squares_mod(m);
        ResidueClassSet::from_iter(m, (0..m).filter(|&z| squares[z as usize]).map(|z| u * z as i128 + shift))
    } else if rem(v, p) != 0 {
        // a bijection mod p that lifts to every power
        ResidueClassSet::full(m)
    } else {
        let inner = quadratic_values(u / p as i128, v / p as i128, 0, p, e - 1);
        ResidueClassSet::from_iter(m, inner.members().into_iter().map(|r| w + p as i128 * r as i128))
    }
}

/// Values `{f(x) mod m}` of a pinch family with governors `a, b`, for an odd
/// prime power `m`.
pub fn value_set_fm(a: i64, b: i64, m: u64) -> Result<PinchValues> {
    let f = factorize(m);
    if f.len() != 1 || f[0].0 == 2 {
        return Err(Error::BadModulus { modulus: m, reason: "expected an odd prime power" });
    }
    let p = f[0].0;
    let (a, b) = (a as i128, b as i128);
    if rem(a, p) == 0 && rem(b, p) == 0 {
        return Ok(PinchValues::GovernorsVanish);
    }
    if rem(a + b, p) == 0 {
        return Ok(PinchValues::Set(ResidueClassSet::full(m)));
    }
    // (a+b)·Q_m − ab/(a+b)
    let s = a + b;
    let shift = (rem(a * b, m) as u128 * inv_mod(s, m).unwrap() as u128 % m as u128) as i128;
    let squares = squares_mod(m);
    Ok(PinchValues::Set(ResidueClassSet::from_iter(
        m,
        (0..m).filter(|&z| squares[z as usize]).map(|z| s * z as i128 - shift),
    )))
}

/// Residues of the family mod any odd `m`, combining prime powers.
fn represents(pp: &PinchPoly, l: i64, m: u64) -> Result<bool> {
    for (p, e) in factorize(m) {
        let pe = p.pow(e);
        if !value_set_fm(pp.a, pp.b, pe)?.resolve(pp, pe).contains(l as i128) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Outcome of a bounded search: a witness or an honest miss.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PinchSearch {
    Found { x: i64, value: i64 },
    NotFound { reason: String, evaluated: u64 },
}

/// Default number of evaluations in bounded pinch searches.
pub const DEFAULT_PINCH_CAP: u64 = 1_000_000;

fn odd_prime_value(v: i128) -> bool {
    v > 2 && v & 1 == 1 && v <= u64::MAX as i128 && is_prime(v as u64)
}

/// Smallest `x ≥ 0` with `f(x)` an odd prime, `≡ ℓ (mod m)` when constrained.
///
/// Constrained scans walk only the progressions `x₀ + mk` with `f(x₀) ≡ ℓ`.
/// The existence of a witness is conditional on Bunyakovsky's conjecture, so
/// exhausting `cap` evaluations is a normal outcome. With `strict`, a family
/// violating the conjecture's hypotheses is an error.
pub fn find_prime_in_pinch(pp: &PinchPoly, constraint: Option<(i64, u64)>, cap: u64, strict: bool) -> Result<PinchSearch> {
    if strict && !pp.bunyakovsky_hypotheses() {
        return Err(Error::HypothesisViolation(format!(
            "family {pp:?} needs a+b > 0, ab not a square and c odd"
        )));
    }
    let (starts, step) = match constraint {
        None => (vec![0i64], 1i64),
        Some((l, m)) => {
            if m < 3 || m % 2 == 0 {
                return Err(Error::BadModulus { modulus: m, reason: "expected an odd modulus" });
            }
            if !represents(pp, l, m)? {
                return Ok(PinchSearch::NotFound { reason: "residue not represented".into(), evaluated: 0 });
            }
            let xs: Vec<i64> = (0..m as i64).filter(|&x| rem(pp.eval(x) - l as i128, m) == 0).collect();
            if xs.is_empty() {
                return Ok(PinchSearch::NotFound { reason: "residue not represented".into(), evaluated: 0 });
            }
            (xs, m as i64)
        }
    };
    let mut evaluated = 0u64;
    for k in 0.. {
        for &x0 in &starts {
            if evaluated >= cap {
                return Ok(PinchSearch::NotFound { reason: "cap reached".into(), evaluated });
            }
            let x = x0 + step * k;
            evaluated += 1;
            let v = pp.eval(x);
            if odd_prime_value(v) {
                return Ok(PinchSearch::Found { x, value: v as i64 });
            }
        }
    }
    unreachable!()
}

/// CSV table `x,f(x),is_prime,residue` for `x` in `xs`.
pub fn scan_csv(pp: &PinchPoly, xs: impl IntoIterator<Item = i64>, m: u64) -> String {
    let mut s = String::from("x,f(x),is_prime,residue\n");
    for x in xs {
        let v = pp.eval(x);
        let prime = v > 1 && v <= u64::MAX as i128 && is_prime(v as u64);
        s.push_str(&format!("{x},{v},{prime},{}\n", rem(v, m)));
    }
    s
}

/// A circle of odd prime curvature located inside a triangular interstice.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriangleWitness {
    pub curvature: i64,
    /// A configuration containing the circle in slot 2.
    pub quadruple: Quadruple,
    /// Pinch parameter of the witness, or `None` if it is the inner circle.
    pub x: Option<i64>,
    /// Whether the two non-governing bounding circles differ in parity.
    pub parity_hypothesis: bool,
}

/// Finds an odd prime circle inside the interstice bounded by the three
/// circles of `q` other than `inner`.
///
/// The inner circle itself is returned when its curvature is an odd prime.
/// Otherwise the pinch family governed by the inner circle and
/// `q[tangent_to]` is scanned outward from the bounding pair
/// (`x = 2, −1, 3, −2, …`); all those circles lie in the interstice and touch
/// `q[tangent_to]`. At most `cap` circles are examined.
pub fn find_prime_in_triangle(q: &Quadruple, inner: SwapIndex, tangent_to: SwapIndex, cap: u64) -> Result<TriangleWitness> {
    let q = q.validated()?;
    let pp = pinch_poly(&q, inner, tangent_to)?;
    let parity_hypothesis = (pp.c - pp.d) & 1 == 1;
    if cap == 0 {
        return Err(Error::SearchExhausted("cap is zero".into()));
    }
    if odd_prime_value(pp.a as i128) {
        let v = [pp.c, pp.d, pp.a, pp.b];
        return Ok(TriangleWitness { curvature: pp.a, quadruple: Quadruple(v), x: None, parity_hypothesis });
    }
    for i in 0..cap.saturating_sub(1) as i64 {
        let x = if i % 2 == 0 { 2 + i / 2 } else { -1 - i / 2 };
        let v = pp.eval(x);
        if odd_prime_value(v) {
            let quad = pp.consecutive(x)?;
            return Ok(TriangleWitness { curvature: v as i64, quadruple: quad, x: Some(x), parity_hypothesis });
        }
    }
    Err(Error::SearchExhausted(format!("no odd prime among {cap} circles of the interstice")))
}
