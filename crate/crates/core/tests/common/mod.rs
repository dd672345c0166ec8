//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct C(pub f64, pub f64);

impl C {
    fn add(self, o: C) -> C {
        C(self.0 + o.0, self.1 + o.1)
    }
    fn sub(self, o: C) -> C {
        C(self.0 - o.0, self.1 - o.1)
    }
    fn mul(self, o: C) -> C {
        C(self.0 * o.0 - self.1 * o.1, self.0 * o.1 + self.1 * o.0)
    }
    fn scale(self, s: f64) -> C {
        C(self.0 * s, self.1 * s)
    }
    fn abs(self) -> f64 {
        self.0.hypot(self.1)
    }
    fn sqrt(self) -> C {
        let r = self.abs();
        let re = ((r + self.0) / 2.0).max(0.0).sqrt();
        let im = ((r - self.0) / 2.0).max(0.0).sqrt();
        C(re, if self.1 < 0.0 { -im } else { im })
    }
}

/// A configuration: curvatures and curvature-weighted centres.
#[derive(Clone, Copy, Debug)]
pub struct Config {
    pub k: [i64; 4],
    pub w: [C; 4],
}

fn center(k: i64, w: C) -> C {
    w.scale(1.0 / k as f64)
}

fn tangent(k1: i64, z1: C, k2: i64, z2: C) -> bool {
    let (r1, r2) = (1.0 / k1 as f64, 1.0 / k2 as f64);
    // signed radii: internal tangency when one curvature is negative
    let want = (r1 + r2).abs();
    let d = z1.sub(z2).abs();
    (d - want).abs() < 1e-7 * want.max(1e-3)
}

/// Places a root with one negative curvature: bounding circle at the origin.
pub fn place_root(k: [i64; 4]) -> Config {
    assert!(k[0] < 0);
    let r = k.map(|x| 1.0 / (x as f64).abs());
    let za = C(0.0, 0.0);
    let zb = C(r[0] - r[1], 0.0);
    // circle c: |z| = ra - rc, |z - zb| = rb + rc
    let (d1, d2, e) = (r[0] - r[2], r[1] + r[2], zb.0);
    let x = (d1 * d1 - d2 * d2 + e * e) / (2.0 * e);
    let zc = C(x, (d1 * d1 - x * x).max(0.0).sqrt());
    let w = [za.scale(k[0] as f64), zb.scale(k[1] as f64), zc.scale(k[2] as f64)];
    let s = w[0].add(w[1]).add(w[2]);
    let root = w[0].mul(w[1]).add(w[1].mul(w[2])).add(w[0].mul(w[2])).sqrt().scale(2.0);
    for cand in [s.add(root), s.sub(root)] {
        let zd = center(k[3], cand);
        if tangent(k[0], za, k[3], zd) && tangent(k[1], zb, k[3], zd) && tangent(k[2], zc, k[3], zd) {
            return Config { k, w: [w[0], w[1], w[2], cand] };
        }
    }
    panic!("no placement for {k:?}");
}

pub fn swap(c: &Config, i: usize) -> Config {
    let mut out = *c;
    let ks: i64 = (0..4).filter(|&j| j != i).map(|j| c.k[j]).sum();
    out.k[i] = 2 * ks - c.k[i];
    let mut ws = C(0.0, 0.0);
    for j in (0..4).filter(|&j| j != i) {
        ws = ws.add(c.w[j]);
    }
    out.w[i] = ws.scale(2.0).sub(c.w[i]);
    out
}

pub fn pairwise_tangent(c: &Config) -> bool {
    (0..4).all(|i| {
        (0..4).all(|j| i == j || tangent(c.k[i], center(c.k[i], c.w[i]), c.k[j], center(c.k[j], c.w[j])))
    })
}

fn same(a: &Config, b: &Config) -> bool {
    (0..4).all(|i| center(a.k[i], a.w[i]).sub(center(b.k[i], b.w[i])).abs() < 1e-9)
}

/// Every ordered configuration with all curvatures at most `bound`, found by
/// breadth-first closure under all four swaps with geometric deduplication.
pub fn geometric_closure(root: [i64; 4], bound: i64) -> Vec<[i64; 4]> {
    let start = place_root(root);
    let mut seen: HashMap<[i64; 4], Vec<Config>> = HashMap::new();
    seen.entry(start.k).or_default().push(start);
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        for i in 0..4 {
            let n = swap(&c, i);
            if *n.k.iter().max().unwrap() > bound {
                continue;
            }
            let bucket = seen.entry(n.k).or_default();
            if bucket.iter().any(|b| same(b, &n)) {
                continue;
            }
            assert!(pairwise_tangent(&n), "lost tangency at {:?}", n.k);
            bucket.push(n);
            queue.push_back(n);
        }
    }
    let mut out: Vec<[i64; 4]> = Vec::new();
    for (k, v) in seen {
        out.extend(std::iter::repeat_n(k, v.len()));
    }
    out.sort_unstable();
    out
}

/// Distinct geometric circles with curvature at most `bound`, as sorted curvatures.
pub fn geometric_circles(root: [i64; 4], bound: i64) -> Vec<i64> {
    let mut ks: Vec<i64> = geometric_circle_list(root, bound).into_iter().map(|c| c.0).collect();
    ks.sort_unstable();
    ks
}

/// Distinct geometric circles with curvature at most `bound` and their centres.
pub fn geometric_circle_list(root: [i64; 4], bound: i64) -> Vec<(i64, C)> {
    let start = place_root(root);
    let mut circles: Vec<(i64, C)> = Vec::new();
    let mut seen: HashMap<[i64; 4], Vec<Config>> = HashMap::new();
    seen.entry(start.k).or_default().push(start);
    let mut queue = VecDeque::from([start]);
    let add = |k: i64, z: C, circles: &mut Vec<(i64, C)>| {
        if !circles.iter().any(|&(k2, z2)| k2 == k && z2.sub(z).abs() < 1e-9) {
            circles.push((k, z));
        }
    };
    for i in 0..4 {
        add(start.k[i], center(start.k[i], start.w[i]), &mut circles);
    }
    while let Some(c) = queue.pop_front() {
        for i in 0..4 {
            let n = swap(&c, i);
            if *n.k.iter().max().unwrap() > bound {
                continue;
            }
            let bucket = seen.entry(n.k).or_default();
            if bucket.iter().any(|b| same(b, &n)) {
                continue;
            }
            bucket.push(n);
            add(n.k[i], center(n.k[i], n.w[i]), &mut circles);
            queue.push_back(n);
        }
    }
    circles
}

/// Prime components by brute force over geometric tangency: each component
/// as its sorted member curvatures together with its sorted thickening.
pub fn geometric_components(root: [i64; 4], bound: i64) -> Vec<(Vec<i64>, Vec<i64>)> {
    let cs = geometric_circle_list(root, bound);
    let n = cs.len();
    let touching = |i: usize, j: usize| tangent(cs[i].0, cs[i].1, cs[j].0, cs[j].1);
    let odd: Vec<bool> = cs.iter().map(|c| c.0 > 2 && c.0 % 2 == 1 && trial_prime(c.0)).collect();
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    for s in 0..n {
        if !odd[s] || comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut stack = vec![s];
        comp[s] = id;
        let mut members = Vec::new();
        while let Some(i) = stack.pop() {
            members.push(i);
            for j in 0..n {
                if j != i && odd[j] && comp[j] == usize::MAX && touching(i, j) {
                    comp[j] = id;
                    stack.push(j);
                }
            }
        }
        let thick: Vec<usize> = (0..n).filter(|&j| comp[j] != id && members.iter().any(|&i| touching(i, j))).collect();
        let mut m: Vec<i64> = members.iter().map(|&i| cs[i].0).collect();
        let mut t: Vec<i64> = thick.iter().map(|&i| cs[i].0).collect();
        m.sort_unstable();
        t.sort_unstable();
        out.push((m, t));
    }
    out.sort();
    out
}

/// Trial-division primality.
pub fn trial_prime(n: i64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// `Σ log k` over prime circles and `Σ log k·log k′` over tangent prime
/// pairs, from geometric tangency, with the number of such pairs.
pub fn geometric_log_sums(root: [i64; 4], bound: i64) -> (f64, f64, u64) {
    let cs = geometric_circle_list(root, bound);
    let prime: Vec<bool> = cs.iter().map(|c| trial_prime(c.0)).collect();
    let mut psi = 0.0;
    let mut pairs = 0.0;
    let mut count = 0;
    for i in 0..cs.len() {
        if !prime[i] {
            continue;
        }
        psi += (cs[i].0 as f64).ln();
        for j in i + 1..cs.len() {
            if prime[j] && tangent(cs[i].0, cs[i].1, cs[j].0, cs[j].1) {
                pairs += (cs[i].0 as f64).ln() * (cs[j].0 as f64).ln();
                count += 1;
            }
        }
    }
    (psi, pairs, count)
}
