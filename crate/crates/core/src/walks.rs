//! Words in the Apollonian group that steer a curvature into a chosen residue
//! class, and short prime paths ("core geodesics") built from them.
//!
//! Matrices act on column quadruples; a word is stored in application order,
//! so `[S₁, S₂]` means `S₂·S₁·q`. The alternating product `W_ji(s)` is
//! `⋯S_j S_i` with `s` letters, `S_i` acting first.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{curvature_form, primes_in_family, represented_values};
use crate::modular::{crt, factorize, gcd, inv_mod, rem, squares_mod};
use crate::pinch::{pinch_poly, DEFAULT_PINCH_CAP};
use crate::primes::is_prime;
use crate::quadruple::{apply_swap, descartes_form, Quadruple, SwapIndex};

pub type Mat4 = [[i128; 4]; 4];

pub const IDENTITY: Mat4 = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]];

/// The generator `S_i` as a matrix.
pub fn generator(i: SwapIndex) -> Mat4 {
    let mut m = IDENTITY;
    let k = i.slot();
    m[k] = [2; 4];
    m[k][k] = -1;
    m
}

pub fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0i128; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// `M·q`, failing if an entry leaves `i64`.
pub fn mat_apply(m: &Mat4, q: &Quadruple) -> Result<Quadruple> {
    let mut out = [0i64; 4];
    for (i, v) in out.iter_mut().enumerate() {
        let x: i128 = (0..4).map(|k| m[i][k] * q.0[k] as i128).sum();
        *v = i64::try_from(x).map_err(|_| Error::Overflow("matrix word"))?;
    }
    Ok(Quadruple(out))
}

/// The matrix of a word given in application order.
pub fn literal_product(letters: &[SwapIndex]) -> Mat4 {
    letters.iter().fold(IDENTITY, |acc, &g| mat_mul(&generator(g), &acc))
}

/// The letters of `W_ji(s)` in application order: `i, j, i, …`.
pub fn alternating_letters(j: SwapIndex, i: SwapIndex, s: u64) -> Vec<SwapIndex> {
    (0..s).map(|n| if n % 2 == 0 { i } else { j }).collect()
}

/// `W_ji(s)` with its closed-form matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapProduct {
    /// One-based generator labels.
    pub j: usize,
    pub i: usize,
    pub s: u64,
    pub matrix: Mat4,
}

impl SwapProduct {
    pub fn letters(&self) -> Vec<SwapIndex> {
        let (j, i) = (SwapIndex::from_zero_based(self.j - 1), SwapIndex::from_zero_based(self.i - 1));
        alternating_letters(j, i, self.s)
    }
}

/// Closed form of `W_ji(s)`: the identity outside rows `i` and `j`.
pub fn swap_product(j: SwapIndex, i: SwapIndex, s: u64) -> Result<SwapProduct> {
    if i == j {
        return Err(Error::BadQuadruple(format!("swap product needs distinct indices, got {j}{i}")));
    }
    let t = s as i128;
    let (ri, rj) = (i.slot(), j.slot());
    let mut m = IDENTITY;
    // The row holding −s, s+1 and s(s+1) sits at i for odd s and at j for even s.
    let (big, small) = if s % 2 == 1 { (ri, rj) } else { (rj, ri) };
    m[big] = [t * (t + 1); 4];
    m[big][ri] = -t;
    m[big][rj] = t + 1;
    m[small] = [t * (t - 1); 4];
    m[small][ri] = -(t - 1);
    m[small][rj] = t;
    Ok(SwapProduct { j: j.label(), i: i.label(), s, matrix: m })
}

fn s(label: usize) -> SwapIndex {
    SwapIndex::from_zero_based(label - 1)
}

/// Lengths of `W₄₃(s0)·W₃₂(r0)` and the third row of that product mod `m`,
/// which reads `(A, −A, C, D)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialRowParams {
    pub m: u64,
    pub s0: u64,
    pub r0: u64,
    pub a: u64,
    pub c: u64,
    pub d: u64,
}

impl SpecialRowParams {
    /// The row residues `(A, −A, C, D)` mod `m`.
    pub fn row(&self) -> [u64; 4] {
        [self.a, (self.m - self.a) % self.m, self.c, self.d]
    }

    /// `W₄₃(s0)·W₃₂(r0)`.
    pub fn matrix(&self) -> Mat4 {
        let w43 = swap_product(s(4), s(3), self.s0).expect("distinct indices").matrix;
        let w32 = swap_product(s(3), s(2), self.r0).expect("distinct indices").matrix;
        mat_mul(&w43, &w32)
    }

    pub fn letters(&self) -> Vec<SwapIndex> {
        let mut w = alternating_letters(s(3), s(2), self.r0);
        w.extend(alternating_letters(s(4), s(3), self.s0));
        w
    }
}

/// Reads the third row of `W₄₃(s0)·W₃₂(r0)` mod `m` and checks its shape.
pub fn special_row_from(m: u64, s0: u64, r0: u64) -> Result<SpecialRowParams> {
    let w43 = swap_product(s(4), s(3), s0)?.matrix;
    let w32 = swap_product(s(3), s(2), r0)?.matrix;
    let row = mat_mul(&w43, &w32)[2];
    let r: Vec<u64> = row.iter().map(|&v| rem(v, m)).collect();
    if rem(row[0] + row[1], m) != 0 || inv_mod(row[0], m).is_none() {
        return Err(Error::CaseFailure(format!("row {row:?} mod {m} is not of the form (A, -A, C, D) with A a unit")));
    }
    Ok(SpecialRowParams { m, s0, r0, a: r[0], c: r[2], d: r[3] })
}

fn odd_lift(x: u64, m: u64) -> u64 {
    if x % 2 == 0 {
        x + m
    } else {
        x
    }
}

/// Lengths `s0 ≡ 4·5⁻¹` and `r0 ≡ −2·4⁻¹` mod `m`, as the smallest odd
/// positive lifts, which make the row `(A, −A, C, D)` with `A` a unit.
pub fn construct_special_row(m: u64) -> Result<SpecialRowParams> {
    if m < 2 || gcd(m as i64, 30) != 1 {
        return Err(Error::BadModulus { modulus: m, reason: "modulus must be coprime to 30" });
    }
    let inv = |x: i128| inv_mod(x, m).expect("coprime to 30");
    let sv = rem(4 * inv(5) as i128, m);
    let rv = rem(-2 * inv(4) as i128, m);
    let (s0, r0) = (odd_lift(sv, m), odd_lift(rv, m));
    let params = special_row_from(m, s0, r0)?;
    // A ≡ S·U with U = RS + 1.
    let (sv, rv) = (sv as i128, rv as i128);
    let expected = rem(sv * (rv * sv + 1), m);
    if params.a != expected {
        return Err(Error::CaseFailure(format!("A = {} mod {m}, expected {expected}", params.a)));
    }
    Ok(params)
}

/// `slope·t + intercept` mod `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearPoly {
    pub m: u64,
    pub slope: u64,
    pub intercept: u64,
}

impl LinearPoly {
    pub fn eval(&self, t: i64) -> u64 {
        rem(self.slope as i128 * t as i128 + self.intercept as i128, self.m)
    }
}

/// Symmetric representative of `x` mod `m`.
fn symmetric(x: u64, m: u64) -> i64 {
    if x > m / 2 {
        x as i64 - m as i64
    } else {
        x as i64
    }
}

impl fmt::Display for LinearPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = (symmetric(self.slope, self.m), symmetric(self.intercept, self.m));
        let lead = match a {
            0 => String::new(),
            1 => "t".into(),
            -1 => "-t".into(),
            _ => format!("{a}t"),
        };
        match (lead.is_empty(), b) {
            (true, _) => write!(f, "{b}"),
            (false, 0) => write!(f, "{lead}"),
            (false, b) if b < 0 => write!(f, "{lead}{b}"),
            (false, b) => write!(f, "{lead}+{b}"),
        }
    }
}

/// Residue of the third coordinate of `W₄₃(s0)W₃₂(r0)W₂₁(t)·q` for even `t`,
/// as a polynomial in `t`: `−2A(c+d)t + A(a−b) + Cc + Dd`.
pub fn family_residue_poly(params: &SpecialRowParams, q: &Quadruple) -> Result<LinearPoly> {
    let m = params.m;
    let [a, b, c, d] = q.0.map(|v| v as i128);
    if inv_mod(c + d, m).is_none() {
        return Err(Error::BadQuadruple(format!("c + d = {} is not a unit mod {m}", c + d)));
    }
    let (pa, pc, pd) = (params.a as i128, params.c as i128, params.d as i128);
    Ok(LinearPoly { m, slope: rem(-2 * pa * (c + d), m), intercept: rem(pa * (a - b) + pc * c + pd * d, m) })
}

/// The letters of the pair stage: `W₂₁(t)` for `t ≥ 0`, `W₁₂(|t|)` otherwise.
pub fn pair_letters(t: i64) -> Vec<SwapIndex> {
    if t >= 0 {
        alternating_letters(s(2), s(1), t as u64)
    } else {
        alternating_letters(s(1), s(2), t.unsigned_abs())
    }
}

/// A full steering word `W₄₃(s0)W₃₂(r0)W₂₁(t)` in application order.
pub fn steering_letters(params: &SpecialRowParams, t: i64) -> Vec<SwapIndex> {
    let mut w = pair_letters(t);
    w.extend(params.letters());
    w
}

/// Matrix of the pair stage; `W₁₂(n) = W₂₁(−n)` for even `n`.
pub fn pair_matrix(t: i64) -> Mat4 {
    if t >= 0 {
        swap_product(s(2), s(1), t as u64).expect("distinct").matrix
    } else {
        swap_product(s(1), s(2), t.unsigned_abs()).expect("distinct").matrix
    }
}

/// An even pair-stage length hitting a target class, with the word length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSolution {
    pub t0: i64,
    pub length: u64,
    pub poly: LinearPoly,
}

/// The even `t0` of least absolute value (ties towards positive) with
/// `poly(t0) ≡ ℓ`. Negative values stand for the word `W₁₂(|t0|)`, which keeps
/// the total length below `5m`.
pub fn solve_target(params: &SpecialRowParams, q: &Quadruple, l: i64) -> Result<TargetSolution> {
    let poly = family_residue_poly(params, q)?;
    let m = params.m;
    let inv = inv_mod(poly.slope as i128, m).ok_or(Error::BadModulus { modulus: m, reason: "slope is not a unit" })?;
    let tau = rem((l as i128 - poly.intercept as i128) * inv as i128, m) as i64;
    let even = if tau % 2 == 0 { tau } else { tau + m as i64 };
    let other = even - 2 * m as i64;
    let t0 = if even <= other.abs() { even } else { other };
    let length = params.s0 + params.r0 + t0.unsigned_abs();
    debug_assert_eq!(poly.eval(t0), rem(l as i128, m));
    Ok(TargetSolution { t0, length, poly })
}

/// Starting quadruple for the steering words: `q` with `d = p0` prime and
/// `a` odd is moved by `W₃₂(k)`, even `k`, until the third entry `c′ > 0`
/// has `gcd(c′ + p0, m·p0) = 1`. Slots `a` and `d` are unchanged.
pub fn good_quadruple(q: &Quadruple, m: u64, cap: u64) -> Result<(Quadruple, u64)> {
    let [a, _, _, p0] = q.0;
    if m % 2 == 0 {
        return Err(Error::BadModulus { modulus: m, reason: "modulus must be odd" });
    }
    if !(p0 > 1 && is_prime(p0 as u64)) || a % 2 == 0 {
        return Err(Error::HypothesisViolation(format!("need d prime and a odd, got {q}")));
    }
    let modulus = m as i128 * p0 as i128;
    for k in (0..=cap).step_by(2) {
        let w = mat_apply(&swap_product(s(3), s(2), k)?.matrix, q)?;
        let c = w.0[2] as i128;
        if c > 0 && gcd_i128(c + p0 as i128, modulus) == 1 {
            return Ok((w, k));
        }
    }
    Err(Error::SearchExhausted(format!("no good W32 image of {q} for m = {m} within k <= {cap}")))
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `g(z) = z² + (2d − k)z − kd`.
pub fn g_poly(z: i128, d: i128, k: i128) -> i128 {
    z * z + (2 * d - k) * z - k * d
}

/// Whether `(a, b)` meets the residue conditions for `(d, k)` mod `m`:
/// `a`, `a + d` units, `a − b ≡ k`, and `b(a+d) + ad` a square.
pub fn special_conditions(a: u64, b: u64, d: i64, k: i64, m: u64) -> bool {
    let (a, b, d, k) = (a as i128, b as i128, d as i128, k as i128);
    let squares = squares_mod(m);
    inv_mod(a, m).is_some()
        && inv_mod(a + d, m).is_some()
        && rem(a - b - k, m) == 0
        && squares[rem(b * (a + d) + a * d, m) as usize]
}

/// `ā` for one odd prime power `pe = p^e`, following the case split on
/// whether −1 is a square mod `p`.
fn special_a_local(d: i128, k: i128, p: u64, pe: u64) -> Option<u64> {
    let inv = |x: i128| inv_mod(x, pe);
    let half_k = k * inv(2)? as i128;
    let ok = |a: i128| {
        let (a, b) = (rem(a, pe), rem(a - k, pe));
        special_conditions(a, b, d as i64, k as i64, pe).then_some(a)
    };
    let squares = squares_mod(pe);
    let candidates: Vec<i128> = if p % 4 == 1 {
        vec![-d, k - d, half_k, half_k - 2 * d, d, -3 * d]
    } else {
        // g(−2d) = g(k) = dk and g(0) = g(k − 2d) = −dk; one of ±dk is a square.
        let mut v = Vec::new();
        if squares[rem(d * k, pe) as usize] {
            v.push(-2 * d);
            v.push(k);
        }
        if squares[rem(-d * k, pe) as usize] {
            v.push(k - 2 * d);
            v.push(0);
        }
        // k ≡ 2d leaves only ā = 0 on the second branch; g(3d/2) = d²/4.
        v.push(3 * d * inv(2)? as i128);
        v
    };
    candidates.into_iter().find_map(ok).or_else(|| (0..pe as i128).find_map(ok))
}

/// Residues `(ā, b̄)` mod `m` with `ā`, `ā + d` units, `ā − b̄ ≡ k`, `ā` a
/// class tangent to `d` and `b̄` in the pinch family of `ā` and `d`.
pub fn special_residues(d: i64, k: i64, m: u64) -> Result<(u64, u64)> {
    if m < 2 || gcd(m as i64, 30) != 1 {
        return Err(Error::BadModulus { modulus: m, reason: "modulus must be coprime to 30" });
    }
    if gcd(d, m as i64) != 1 {
        return Err(Error::BadModulus { modulus: m, reason: "d must be a unit" });
    }
    let mut parts = Vec::new();
    for (p, e) in factorize(m) {
        let pe = p.pow(e);
        let a = special_a_local(d as i128, k as i128, p, pe)
            .ok_or_else(|| Error::CaseFailure(format!("no residue for d = {d}, k = {k} mod {pe}")))?;
        parts.push((a, pe));
    }
    let a = crt(&parts)?.0;
    Ok((a, rem(a as i128 - k as i128, m)))
}

/// A quadruple `(a, b, c, d)` containing the circle `C_d` with `a` an odd
/// prime tangent to `C_d`, `a ≡ ā` and `b ≡ b̄` mod `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecialQuadruple {
    pub a_bar: u64,
    pub b_bar: u64,
    pub quadruple: Quadruple,
}

/// Lifts [`special_residues`] for `d = q[slot]`: the prime `a` is the
/// smallest prime `≡ ā` tangent to `C_d` below `cap`, and `b, c` come from
/// the pinch family governed by `d` and `a`.
pub fn special_quadruple(q: &Quadruple, slot: SwapIndex, k: i64, m: u64, cap: i64) -> Result<SpecialQuadruple> {
    let d = q.0[slot.slot()];
    let (a_bar, b_bar) = special_residues(d, k, m)?;
    let sf = curvature_form(q, slot)?;
    let mut bound = cap.min(4096);
    let witness = loop {
        let found = primes_in_family(&sf, bound, Some((a_bar as i64, m)))?;
        if let Some(r) = found.primes.first() {
            break *r;
        }
        if bound >= cap {
            return Err(Error::SearchExhausted(format!("no prime = {a_bar} mod {m} tangent to {d} below {cap}")));
        }
        bound = bound.saturating_mul(4).min(cap);
    };
    let config = sf.configuration(witness.x, witness.y)?;
    let pp = pinch_poly(&config, SwapIndex::from_zero_based(0), SwapIndex::from_zero_based(1))?;
    let x = (0..m as i64)
        .find(|&x| rem(pp.eval(x) - b_bar as i128, m) == 0)
        .ok_or_else(|| Error::CaseFailure(format!("pinch family of ({d}, {}) misses {b_bar} mod {m}", witness.value)))?;
    let [_, a, b, c] = pp.consecutive(x)?.0;
    Ok(SpecialQuadruple { a_bar, b_bar, quadruple: Quadruple([a, b, c, d]) })
}

/// Search limits for [`core_geodesic`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeodesicCaps {
    /// Largest even `k` tried when preparing the starting quadruple.
    pub good_k: u64,
    /// Curvature bound for the prime tangent to the seed.
    pub lift_bound: i64,
    /// Pair-stage lengths tried in the conditional search.
    pub pinch_evaluations: u64,
    /// Curvature bound for a direct neighbour in the target class.
    pub shortcut_bound: i64,
}

impl Default for GeodesicCaps {
    fn default() -> Self {
        GeodesicCaps { good_k: 1000, lift_bound: 10_000_000, pinch_evaluations: DEFAULT_PINCH_CAP, shortcut_bound: 100_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeodesicStep {
    pub curvature: i64,
    /// A configuration containing this circle and, after the first step, the
    /// previous one.
    pub quadruple: Quadruple,
}

/// A tangency path from a seed circle. Replaying `word` (one-based labels,
/// application order) from the first step's quadruple passes through every
/// step's quadruple in order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Geodesic {
    pub word: Vec<usize>,
    pub steps: Vec<GeodesicStep>,
    pub core: bool,
    pub conditional_on: Option<String>,
}

fn odd_prime(v: i64) -> bool {
    v > 2 && is_prime(v as u64)
}

impl Geodesic {
    pub fn terminal(&self) -> i64 {
        self.steps.last().map_or(0, |s| s.curvature)
    }

    /// Number of tangencies.
    pub fn len(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rechecks the path by replaying the word one swap at a time.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::ConstraintViolation(msg));
        let Some(first) = self.steps.first() else { return bad("empty geodesic".into()) };
        for (n, step) in self.steps.iter().enumerate() {
            if descartes_form(&step.quadruple)? != 0 {
                return bad(format!("step {n}: {} is not a configuration", step.quadruple));
            }
            let here: Vec<usize> = (0..4).filter(|&j| step.quadruple.0[j] == step.curvature).collect();
            if here.is_empty() {
                return bad(format!("step {n}: {} does not contain {}", step.quadruple, step.curvature));
            }
            if n > 0 {
                let prev = self.steps[n - 1].curvature;
                let tangent = here.iter().any(|&j| (0..4).any(|i| i != j && step.quadruple.0[i] == prev));
                if !tangent {
                    return bad(format!("step {n}: {prev} and {} share no configuration", step.curvature));
                }
            }
        }
        let mut q = first.quadruple;
        let mut next = 1;
        while next < self.steps.len() && self.steps[next].quadruple == q {
            next += 1;
        }
        for &label in &self.word {
            q = apply_swap(&q, SwapIndex::new(label)?)?;
            while next < self.steps.len() && self.steps[next].quadruple == q {
                next += 1;
            }
        }
        if next != self.steps.len() || self.steps.last().unwrap().quadruple != q {
            return bad("word does not pass through the recorded quadruples".into());
        }
        let core = self.steps[..self.steps.len() - 1].iter().all(|s| odd_prime(s.curvature));
        if core != self.core {
            return bad(format!("core flag {} disagrees with the path", self.core));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("geodesic serializes")
    }
}

/// Moves the seed to slot 4 and another odd entry to slot 1.
fn arrange(q: &Quadruple, slot: SwapIndex) -> Result<Quadruple> {
    let k = slot.slot();
    let rest: Vec<i64> = (0..4).filter(|&j| j != k).map(|j| q.0[j]).collect();
    let odd = rest
        .iter()
        .position(|v| v % 2 != 0)
        .ok_or_else(|| Error::HypothesisViolation(format!("{q} has no second odd entry")))?;
    let mut evens = rest.clone();
    let a = evens.remove(odd);
    Ok(Quadruple([a, evens[0], evens[1], q.0[k]]))
}

/// A shortest-found path of prime circles from `q[slot]` to a circle with
/// curvature `≡ ℓ (mod m)`: a direct neighbour when one exists below the
/// shortcut bound, else two tangencies through a prime `C_a`.
///
/// When the special row has `C ≡ 0` the prime `C_a` comes from
/// [`special_quadruple`] and the result is unconditional. Otherwise the pair
/// stage length is searched along `t ≡ t0 (mod 2m)` for a prime first entry;
/// that search can only be guaranteed under Bunyakovsky's conjecture, and
/// the output records the dependency.
pub fn core_geodesic(q: &Quadruple, slot: SwapIndex, l: i64, m: u64, caps: &GeodesicCaps) -> Result<Geodesic> {
    if m < 2 || gcd(m as i64, 30) != 1 {
        return Err(Error::BadModulus { modulus: m, reason: "modulus must be coprime to 30" });
    }
    let p0 = q.0[slot.slot()];
    if !odd_prime(p0) {
        return Err(Error::SeedNotPrime(p0));
    }
    let target = rem(l as i128, m);
    let geodesic = match shortcut(q, slot, target, m, caps.shortcut_bound)? {
        Some(g) => g,
        None => two_step(q, slot, target, m, caps)?,
    };
    geodesic.validate()?;
    Ok(geodesic)
}

fn shortcut(q: &Quadruple, slot: SwapIndex, target: u64, m: u64, bound: i64) -> Result<Option<Geodesic>> {
    let sf = curvature_form(q, slot)?;
    let Some(r) = represented_values(&sf, bound, true).into_iter().find(|r| rem(r.value as i128, m) == target) else {
        return Ok(None);
    };
    let config = sf.configuration(r.x, r.y)?;
    Ok(Some(Geodesic {
        word: Vec::new(),
        steps: vec![
            GeodesicStep { curvature: config.0[0], quadruple: config },
            GeodesicStep { curvature: r.value, quadruple: config },
        ],
        core: true,
        conditional_on: None,
    }))
}

fn two_step(q: &Quadruple, slot: SwapIndex, target: u64, m: u64, caps: &GeodesicCaps) -> Result<Geodesic> {
    let params = construct_special_row(m)?;
    let (v, _) = good_quadruple(&arrange(q, slot)?, m, caps.good_k)?;
    let p0 = v.0[3];
    let (start, middle, t, conditional_on) = if params.c == 0 {
        if gcd(p0, m as i64) != 1 {
            return Err(Error::HypothesisViolation(format!("seed {p0} is not a unit mod {m}")));
        }
        let inv_a = inv_mod(params.a as i128, m).expect("A is a unit");
        let k = rem((target as i128 - params.d as i128 * p0 as i128) * inv_a as i128, m);
        let w = special_quadruple(&v, s(4), k as i64, m, caps.lift_bound)?.quadruple;
        (w, w, 0, None)
    } else {
        let sol = solve_target(&params, &v, target as i64)?;
        let step = 2 * m as i64;
        let found = (0..caps.pinch_evaluations).find_map(|n| {
            // 0, +1, −1, +2, … periods from t0
            let j = if n % 2 == 1 { n.div_ceil(2) as i64 } else { -((n / 2) as i64) };
            let t = sol.t0 + j * step;
            let u = mat_apply(&pair_matrix(t), &v).ok()?;
            odd_prime(u.0[0]).then_some((u, t))
        });
        let (u, t) = found.ok_or_else(|| {
            Error::SearchExhausted(format!(
                "no prime first entry along t = {} mod {step} after {} tries",
                sol.t0, caps.pinch_evaluations
            ))
        })?;
        (v, u, t, Some("Bunyakovsky".to_string()))
    };
    let end = mat_apply(&params.matrix(), &middle)?;
    if rem(end.0[2] as i128, m) != target {
        return Err(Error::CaseFailure(format!("word lands on {} which is not {target} mod {m}", end.0[2])));
    }
    let word = steering_letters(&params, t).iter().map(|g| g.label()).collect();
    Ok(Geodesic {
        word,
        steps: vec![
            GeodesicStep { curvature: p0, quadruple: start },
            GeodesicStep { curvature: middle.0[0], quadruple: middle },
            GeodesicStep { curvature: end.0[2], quadruple: end },
        ],
        core: odd_prime(p0) && odd_prime(middle.0[0]),
        conditional_on,
    })
}
