//! Prime sums over a packing, root-count ratios and component growth tables.
//!
//! Floating sums are accumulated in 2⁻³² fixed point so that any split of
//! the traversal gives bit-identical totals.

use serde::{Deserialize, Serialize};

use crate::components::{scan_components, GridRow, RootCounts, ScanConfig, Target};
use crate::enumerate::{degenerate_slots, least_squares, walk_parallel, Splittable, Traversal, Visitor};
use crate::error::{Error, Result};
use crate::primes::PrimeTable;
use crate::quadruple::Quadruple;

pub use crate::primes::prime_pi;

/// `L(2, χ₄)`, Catalan's constant; also the constant in the root-count ratio.
pub const L2_CHI4: f64 = 0.915_965_594_177_219;

/// Heuristic limit of the tangent prime pair sum over the circle count.
pub const PAIR_CONSTANT: f64 = 1.3808;

const SCALE: f64 = (1u64 << 32) as f64;

fn fixed(x: f64) -> u128 {
    (x * SCALE).round() as u128
}

fn unfixed(x: u128) -> f64 {
    x as f64 / SCALE
}

/// `Σ log a(C)` over prime curvatures and `Σ log a(C)·log a(C′)` over
/// tangent pairs of prime circles, both with multiplicity and counting 2 as
/// prime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogSums {
    pub bound: i64,
    /// Circles of curvature at most `bound`, with multiplicity.
    pub circles: u64,
    pub prime_circles: u64,
    pub psi: f64,
    /// Tangency edges with both ends prime.
    pub prime_pairs: u64,
    pub pairs: f64,
}

impl LogSums {
    pub fn psi_ratio(&self) -> f64 {
        self.psi / self.circles as f64
    }

    pub fn pair_ratio(&self) -> f64 {
        self.pairs / self.circles as f64
    }
}

#[derive(Clone, Copy, Default)]
struct Acc {
    circles: u64,
    prime_circles: u64,
    psi: u128,
    prime_pairs: u64,
    pairs: u128,
}

impl Acc {
    fn add(&mut self, o: &Acc) {
        self.circles += o.circles;
        self.prime_circles += o.prime_circles;
        self.psi += o.psi;
        self.prime_pairs += o.prime_pairs;
        self.pairs += o.pairs;
    }

    fn doubled(&self) -> Acc {
        Acc {
            circles: 2 * self.circles,
            prime_circles: 2 * self.prime_circles,
            psi: 2 * self.psi,
            prime_pairs: 2 * self.prime_pairs,
            pairs: 2 * self.pairs,
        }
    }

    /// Adds circle `q[k]` and its tangencies to the other three entries.
    fn circle(&mut self, q: &Quadruple, k: usize, primes: &PrimeTable) {
        self.circles += 1;
        let a = q.0[k];
        if !primes.is_prime(a) {
            return;
        }
        let la = (a as f64).ln();
        self.prime_circles += 1;
        self.psi += fixed(la);
        for j in (0..4).filter(|&j| j != k) {
            if primes.is_prime(q.0[j]) {
                self.prime_pairs += 1;
                self.pairs += fixed(la * (q.0[j] as f64).ln());
            }
        }
    }
}

struct LogVisitor<'a> {
    primes: &'a PrimeTable,
    root: Acc,
    tree: Acc,
}

impl Visitor for LogVisitor<'_> {
    type Tag = ();

    fn root(&mut self, root: &Quadruple) -> [(); 4] {
        let p = self.primes;
        for k in 0..4 {
            self.root.circles += 1;
            let a = root.0[k];
            if p.is_prime(a) {
                self.root.prime_circles += 1;
                self.root.psi += fixed((a as f64).ln());
                for j in k + 1..4 {
                    if p.is_prime(root.0[j]) {
                        self.root.prime_pairs += 1;
                        self.root.pairs += fixed((a as f64).ln() * (root.0[j] as f64).ln());
                    }
                }
            }
        }
        [(); 4]
    }

    #[inline]
    fn enter(&mut self, q: &Quadruple, slot: usize, _: u32, _: &[(); 4]) {
        self.tree.circle(q, slot, self.primes);
    }
}

impl Splittable for LogVisitor<'_> {
    fn fork(&self) -> Self {
        LogVisitor { primes: self.primes, root: Acc::default(), tree: Acc::default() }
    }

    fn merge(&mut self, o: Self) {
        self.root.add(&o.root);
        self.tree.add(&o.tree);
    }
}

/// Both prime log sums in one traversal. A half traversal of a mirror
/// symmetric root is rescaled: its tree part doubles and the mirror circle
/// is added back with the root's tangencies.
pub fn log_sums(root: &Quadruple, bound: i64, primes: &PrimeTable, opts: Traversal) -> Result<LogSums> {
    let mut v = LogVisitor { primes, root: Acc::default(), tree: Acc::default() };
    walk_parallel(root, bound, opts, &mut v)?;
    let mut total = v.root;
    if opts.half {
        total.add(&v.tree.doubled());
        let k = degenerate_slots(root)[0];
        let mut mirror = Acc::default();
        mirror.circle(root, k, primes);
        total.add(&mirror);
    } else {
        total.add(&v.tree);
    }
    Ok(LogSums {
        bound,
        circles: total.circles,
        prime_circles: total.prime_circles,
        psi: unfixed(total.psi),
        prime_pairs: total.prime_pairs,
        pairs: unfixed(total.pairs),
    })
}

/// `ψ(X) = Σ log a(C)` over circles of prime curvature `≤ X`.
pub fn psi_sum(root: &Quadruple, bound: i64, primes: &PrimeTable, opts: Traversal) -> Result<f64> {
    Ok(log_sums(root, bound, primes, opts)?.psi)
}

/// `Σ log a(C)·log a(C′)` over unordered tangent pairs of prime circles.
pub fn pair_log_sum(root: &Quadruple, bound: i64, primes: &PrimeTable, opts: Traversal) -> Result<f64> {
    Ok(log_sums(root, bound, primes, opts)?.pairs)
}

/// `N / (c·C/log X − c″·C/(log X)²)` with `c = L(2, χ₄)`, where `N` counts
/// prime component roots and `C` circles up to `X`.
pub fn f_double_prime(n_root: u64, c_full: u64, x: f64, c2: f64) -> Result<f64> {
    if x < 10.0 {
        return Err(Error::DegenerateFit("bound must be at least 10"));
    }
    let l = x.ln();
    let c = c_full as f64;
    // (C/log X)·(c − c″/log X), treated as zero within rounding
    let factor = L2_CHI4 - c2 / l;
    let denom = c / l * factor;
    if factor.abs() <= 1e-12 * L2_CHI4 || denom == 0.0 || !denom.is_finite() {
        return Err(Error::DivisionByZero("root-count ratio denominator"));
    }
    Ok(n_root as f64 / denom)
}

/// One root-count sample with its `c″ = 0` ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootSample {
    pub x: i64,
    pub n_root: u64,
    pub c_full: u64,
    pub f0: f64,
}

impl RootSample {
    pub fn from_counts(c: &RootCounts) -> Result<Self> {
        Ok(RootSample { x: c.bound, n_root: c.roots, c_full: c.circles, f0: f_double_prime(c.roots, c.circles, c.bound as f64, 0.0)? })
    }
}

pub fn root_samples_csv(samples: &[RootSample]) -> String {
    let mut s = String::from("X,N_root,C_full,f0\n");
    for r in samples {
        s.push_str(&format!("{},{},{},{:.6}\n", r.x, r.n_root, r.c_full, r.f0));
    }
    s
}

/// Component counts at one bound with the two growth ratios.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthSample {
    pub x: i64,
    pub c_pr: u64,
    pub c_th: u64,
    pub pi_x: u64,
    pub cpr_over_pi: f64,
    pub cth_over_x: f64,
}

/// Fit of `C_pr(X) ≈ α·π(X)·(log π(X))^c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub c: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthTable {
    pub samples: Vec<GrowthSample>,
    /// Absent with fewer than two usable samples.
    pub fit: Option<GrowthFit>,
}

impl GrowthTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("X,Cpr,Cth,pi_X,Cpr_over_pi,Cth_over_X\n");
        for r in &self.samples {
            s.push_str(&format!("{},{},{},{},{:.6},{:.6}\n", r.x, r.c_pr, r.c_th, r.pi_x, r.cpr_over_pi, r.cth_over_x));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }

    pub fn cpr_ratios(&self) -> Vec<f64> {
        self.samples.iter().map(|r| r.cpr_over_pi).collect()
    }

    pub fn cth_ratios(&self) -> Vec<f64> {
        self.samples.iter().map(|r| r.cth_over_x).collect()
    }
}

pub fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// Ratios `C_pr/π(X)` and `C_th/X` for each row, and the log-space least
/// squares fit of `(c, α)` over rows with `π(X) ≥ 3` and `C_pr > 0`.
pub fn growth_table(rows: &[GridRow]) -> Result<GrowthTable> {
    let mut samples = Vec::with_capacity(rows.len());
    for r in rows {
        let pi_x = prime_pi(r.x.max(0) as u64)?;
        samples.push(GrowthSample {
            x: r.x,
            c_pr: r.c_pr,
            c_th: r.c_th,
            pi_x,
            cpr_over_pi: if pi_x > 0 { r.c_pr as f64 / pi_x as f64 } else { 0.0 },
            cth_over_x: if r.x > 0 { r.c_th as f64 / r.x as f64 } else { 0.0 },
        });
    }
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.pi_x >= 3 && s.c_pr > 0)
        .map(|s| {
            let lp = (s.pi_x as f64).ln();
            (lp.ln(), (s.c_pr as f64).ln() - lp)
        })
        .collect();
    let fit = if pts.len() >= 2 {
        least_squares(&pts).ok().map(|(c, b)| GrowthFit { c, alpha: b.exp() })
    } else {
        None
    };
    Ok(GrowthTable { samples, fit })
}

/// Growth table of one component over a grid, from a single streamed scan.
/// The component through the root's odd primes is scanned with pruning.
pub fn component_growth(root: &Quadruple, target: Target, grid: &[i64], primes: &PrimeTable, opts: Traversal) -> Result<GrowthTable> {
    let bound = *grid.last().ok_or(Error::DegenerateFit("empty grid"))?;
    let prune = matches!(target, Target::Exceptional);
    let cfg = ScanConfig { target: Some(target), grid: grid.to_vec(), prune, ..ScanConfig::default() };
    let report = scan_components(root, bound, &cfg, primes, opts)?;
    growth_table(&report.grid)
}
