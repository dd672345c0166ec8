//! Pruned traversal of the reduced-word tree of a packing.
//!
//! Every node is an ordered Descartes configuration reached from the root by
//! a word that never repeats a generator twice in a row. Off the root, the
//! slot swapped last holds the node's maximum, and every further swap of a
//! different slot produces a strictly larger curvature. Pruning a branch as
//! soon as its new curvature exceeds the bound is therefore exhaustive.
//!
//! When the root satisfies `a + b + c = d`, swapping `d` at the root yields a
//! second circle of the same curvature (the mirror image of `d`). That node is
//! part of the tree, so both mirror halves of the packing are enumerated and
//! each geometric circle appears exactly once. The strip packing `(0,0,1,1)`
//! has two such slots and is infinite in both directions; for it the
//! degenerate swaps are skipped: the traversal covers the root circles and
//! the two interstices they bound.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadruple::{check_root, Quadruple};
use crate::residues::ResidueClassSet;

/// Largest bound accepted by the traversal (keeps every swap inside `i64`).
pub const MAX_BOUND: i64 = 1_000_000_000_000_000_000;

/// Frontier depth used to split the tree into independent subtrees.
pub const DEFAULT_SPLIT_DEPTH: u32 = 7;

/// Callbacks driven by the traversal.
///
/// Each circle receives a tag when it is born; tags of the four circles in the
/// current configuration are handed back to later callbacks so visitors can
/// record tangencies without storing the tree.
pub trait Visitor {
    type Tag: Copy;

    /// Called once with the root quadruple; returns tags for its four circles.
    fn root(&mut self, root: &Quadruple) -> [Self::Tag; 4];

    /// A new circle `q[slot]` is born in configuration `q`. Its three parents
    /// are the circles tagged `tags[j]` for `j != slot`; `tags[slot]` is the
    /// circle it replaced (not tangent to it).
    fn enter(&mut self, q: &Quadruple, slot: usize, depth: u32, tags: &[Self::Tag; 4]) -> Self::Tag;

    /// All descendants of the birth node of `tag` have been visited.
    fn leave(&mut self, _q: &Quadruple, _slot: usize, _tag: Self::Tag) {}

    /// Split traversals call this before walking frontier subtree `index`.
    fn begin_subtree(&mut self, _index: usize) {}

    /// Whether to visit the descendants of the node that produced `tag`.
    /// Returning `false` prunes the subtree; `leave` is still called.
    #[inline(always)]
    fn descend(&self, _tag: &Self::Tag) -> bool {
        true
    }

    /// Called before the traversal starts with the depth of the frontier
    /// (0 for a plain walk). Nodes at depth `≤ cut` are left only after every
    /// frontier subtree has been walked, possibly on other threads; deeper
    /// nodes are entered and left in strict nesting order by one thread.
    fn split_at(&mut self, _cut: u32) {}
}

/// A visitor whose work on disjoint subtrees can run on separate copies.
///
/// `merge` must be commutative and associative so results do not depend on
/// how subtrees were distributed.
pub trait Splittable: Visitor + Send + Sized
where
    Self::Tag: Send + Sync,
{
    fn fork(&self) -> Self;
    fn merge(&mut self, other: Self);
}

#[derive(Clone, Copy)]
struct Frame<T: Copy> {
    q: [i64; 4],
    tags: [T; 4],
    /// Slot of the newest circle.
    last: u8,
    depth: u32,
}

/// Traversal settings. `workers` and `split_depth` never change results.
#[derive(Clone, Copy, Debug)]
pub struct Traversal {
    pub workers: usize,
    pub split_depth: u32,
    /// For a root with exactly one slot satisfying `a + b + c = d`, skip the
    /// mirror child. Circles outside the root quadruple and its mirror circle
    /// are then seen exactly half as often; callers are responsible for
    /// rescaling.
    pub half: bool,
}

impl Default for Traversal {
    fn default() -> Self {
        Traversal { workers: 1, split_depth: DEFAULT_SPLIT_DEPTH, half: false }
    }
}

impl Traversal {
    pub fn with_workers(workers: usize) -> Self {
        Traversal { workers: workers.max(1), ..Self::default() }
    }
}

/// Slots whose swap at the root leaves the curvature unchanged.
pub fn degenerate_slots(root: &Quadruple) -> Vec<usize> {
    let q = root.0;
    let s2 = 2 * (q[0] + q[1] + q[2] + q[3]);
    (0..4).filter(|&j| s2 - 3 * q[j] == q[j]).collect()
}

/// Whether the packing has a single mirror symmetry visible at the root.
pub fn is_mirror_symmetric(root: &Quadruple) -> bool {
    degenerate_slots(root).len() == 1
}

/// Bytes of thread stack reserved per tree level.
const STACK_PER_LEVEL: u64 = 512;
/// Largest thread stack the traversal will ask for.
const MAX_STACK: u64 = 4 << 30;

/// Upper bound on the depth of the tree below `bound`: along any reduced
/// word the curvature grows at least quadratically in the word length.
fn depth_limit(bound: i64) -> u64 {
    2 * (bound.max(1) as f64).sqrt() as u64 + 256
}

fn check_inputs(root: &Quadruple, bound: i64) -> Result<()> {
    check_root(root)?;
    if bound > MAX_BOUND || depth_limit(bound) * STACK_PER_LEVEL > MAX_STACK {
        return Err(Error::BoundTooLarge(format!("{bound} is beyond the traversal's depth budget")));
    }
    if bound < root.max() {
        return Err(Error::BadQuadruple(format!(
            "bound {bound} is below the largest root curvature of ({root})"
        )));
    }
    Ok(())
}

/// Children of the root: every swap within the bound, except degenerate
/// (curvature-preserving) swaps when there is more than one of them, or when
/// a half walk was requested.
fn root_mask(root: &Quadruple, bound: i64, half: bool) -> u8 {
    let q = root.0;
    let s2 = 2 * (q[0] + q[1] + q[2] + q[3]);
    let degenerate = degenerate_slots(root);
    let skip = degenerate.len() > 1 || half;
    let mut m = 0u8;
    for j in 0..4 {
        if s2 - 3 * q[j] <= bound && !(skip && degenerate.contains(&j)) {
            m |= 1 << j;
        }
    }
    m
}

struct Ctx<'a, V: Visitor> {
    v: &'a mut V,
    bound: i64,
    /// Nodes at this depth are queued in `frontier` instead of expanded.
    cut: u32,
    frontier: Vec<Frame<V::Tag>>,
    limit: u32,
    too_deep: bool,
    half: bool,
}

impl<V: Visitor> Ctx<'_, V> {
    #[inline(always)]
    fn child(&mut self, q: [i64; 4], tags: [V::Tag; 4], k: usize, depth: u32) {
        let tag = self.v.enter(&Quadruple(q), k, depth, &tags);
        let mut tags = tags;
        tags[k] = tag;
        if !self.v.descend(&tag) {
            self.v.leave(&Quadruple(q), k, tag);
            return;
        }
        if depth == self.cut {
            self.frontier.push(Frame { q, tags, last: k as u8, depth });
            return;
        }
        self.below(q, tags, k, depth);
        self.v.leave(&Quadruple(q), k, tag);
    }

    /// Visits the children of a non-root node whose newest slot is `last`.
    fn below(&mut self, q: [i64; 4], tags: [V::Tag; 4], last: usize, depth: u32) {
        if depth >= self.limit {
            self.too_deep = true;
            return;
        }
        let s2 = 2 * (q[0] + q[1] + q[2] + q[3]);
        for k in 0..4 {
            if k == last {
                continue;
            }
            let new = s2 - 3 * q[k];
            if new > self.bound {
                continue;
            }
            debug_assert!(new > q[last], "max must increase");
            let mut q2 = q;
            q2[k] = new;
            self.child(q2, tags, k, depth + 1);
        }
    }

    fn from_root(&mut self, root: &Quadruple) {
        let tags = self.v.root(root);
        let mask = root_mask(root, self.bound, self.half);
        for k in 0..4 {
            if mask >> k & 1 == 1 {
                let mut q = root.0;
                q[k] = 2 * (q[0] + q[1] + q[2] + q[3] - q[k]) - q[k];
                self.child(q, tags, k, 1);
            }
        }
    }
}

/// Runs `f` on a thread whose stack fits the deepest branch below `bound`.
fn with_stack<R: Send>(bound: i64, f: impl FnOnce() -> R + Send) -> R {
    let size = (depth_limit(bound) * STACK_PER_LEVEL).max(8 << 20) as usize;
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(size)
            .spawn_scoped(s, f)
            .expect("spawn traversal thread")
            .join()
            .expect("traversal thread panicked")
    })
}

fn check_half(root: &Quadruple, half: bool) -> Result<()> {
    if half && !is_mirror_symmetric(root) {
        return Err(Error::InvalidRoot(root.to_string(), "half walks need exactly one degenerate slot"));
    }
    Ok(())
}

fn depth_error(bound: i64) -> Error {
    Error::BoundTooLarge(format!("tree below {bound} is deeper than the traversal's depth budget"))
}

/// Plain depth-first traversal, children in swap-index order.
pub fn walk<V: Visitor + Send>(root: &Quadruple, bound: i64, v: &mut V) -> Result<()> {
    check_inputs(root, bound)?;
    let limit = depth_limit(bound) as u32;
    let too_deep = with_stack(bound, || {
        v.split_at(0);
        let mut c = Ctx { v, bound, cut: u32::MAX, frontier: Vec::new(), limit, too_deep: false, half: false };
        c.from_root(root);
        c.too_deep
    });
    if too_deep {
        return Err(depth_error(bound));
    }
    Ok(())
}

type Deferred<T> = Vec<(Quadruple, usize, T)>;

/// Visits nodes down to `depth`, returning the unexpanded frontier and the
/// post-order list of prefix nodes whose `leave` is deferred.
fn prefix<V: Visitor>(root: &Quadruple, bound: i64, depth: u32, half: bool, v: &mut V) -> (Vec<Frame<V::Tag>>, Deferred<V::Tag>) {
    struct Defer<'a, V: Visitor> {
        inner: &'a mut V,
        left: Deferred<V::Tag>,
    }
    impl<V: Visitor> Visitor for Defer<'_, V> {
        type Tag = V::Tag;
        fn root(&mut self, root: &Quadruple) -> [V::Tag; 4] {
            self.inner.root(root)
        }
        fn enter(&mut self, q: &Quadruple, slot: usize, depth: u32, tags: &[V::Tag; 4]) -> V::Tag {
            self.inner.enter(q, slot, depth, tags)
        }
        fn leave(&mut self, q: &Quadruple, slot: usize, tag: V::Tag) {
            self.left.push((*q, slot, tag));
        }
        fn descend(&self, tag: &V::Tag) -> bool {
            self.inner.descend(tag)
        }
    }
    v.split_at(depth);
    let mut d = Defer { inner: v, left: Vec::new() };
    let mut c = Ctx { v: &mut d, bound, cut: depth, frontier: Vec::new(), limit: u32::MAX, too_deep: false, half };
    c.from_root(root);
    let frontier = c.frontier;
    (frontier, d.left)
}

/// Leaves frontier nodes, then the deferred prefix nodes. Frontier nodes have
/// no descendants among the deferred ones, so descendants still come first.
fn finish<V: Visitor>(frontier: &[Frame<V::Tag>], deferred: &Deferred<V::Tag>, v: &mut V) {
    for f in frontier {
        v.leave(&Quadruple(f.q), f.last as usize, f.tags[f.last as usize]);
    }
    for (q, slot, tag) in deferred {
        v.leave(q, *slot, *tag);
    }
}

/// Walks the subtrees below frontier nodes `items` in order; returns whether
/// the depth budget was exceeded.
fn walk_frontier<V: Visitor>(frontier: &[Frame<V::Tag>], items: impl Iterator<Item = usize>, bound: i64, v: &mut V) -> bool {
    let mut c = Ctx { v, bound, cut: u32::MAX, frontier: Vec::new(), limit: depth_limit(bound) as u32, too_deep: false, half: false };
    for i in items {
        c.v.begin_subtree(i);
        let f = frontier[i];
        c.below(f.q, f.tags, f.last as usize, f.depth);
    }
    c.too_deep
}

/// Split traversal on one thread: prefix nodes to `split_depth`, then each
/// frontier subtree in order. Visit order (and hence any visit-order
/// numbering) depends only on the root, bound and split depth.
pub fn walk_split<V: Visitor + Send>(root: &Quadruple, bound: i64, split_depth: u32, half: bool, v: &mut V) -> Result<()>
where
    V::Tag: Send + Sync,
{
    check_inputs(root, bound)?;
    check_half(root, half)?;
    let (frontier, deferred) = prefix(root, bound, split_depth.max(1), half, v);
    let too_deep = with_stack(bound, || walk_frontier(&frontier, 0..frontier.len(), bound, v));
    if too_deep {
        return Err(depth_error(bound));
    }
    finish(&frontier, &deferred, v);
    Ok(())
}

/// Split traversal with frontier subtrees distributed over `workers` threads.
/// Produces the same merged state as [`walk_split`] for any worker count.
pub fn walk_parallel<V>(root: &Quadruple, bound: i64, opts: Traversal, v: &mut V) -> Result<()>
where
    V: Splittable,
    V::Tag: Send + Sync,
{
    if opts.workers <= 1 {
        return walk_split(root, bound, opts.split_depth, opts.half, v);
    }
    check_inputs(root, bound)?;
    check_half(root, opts.half)?;
    let (frontier, deferred) = prefix(root, bound, opts.split_depth.max(1), opts.half, v);
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(V, bool)>> = Mutex::new(Vec::new());
    let forks: Vec<V> = (0..opts.workers).map(|_| v.fork()).collect();
    let size = (depth_limit(bound) * STACK_PER_LEVEL).max(8 << 20) as usize;
    std::thread::scope(|scope| {
        for mut w in forks {
            let (next, results, frontier) = (&next, &results, &frontier);
            std::thread::Builder::new()
                .stack_size(size)
                .spawn_scoped(scope, move || {
                    let items = std::iter::from_fn(|| {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        (i < frontier.len()).then_some(i)
                    });
                    let too_deep = walk_frontier(frontier, items, bound, &mut w);
                    results.lock().unwrap().push((w, too_deep));
                })
                .expect("spawn traversal worker");
        }
    });
    let mut too_deep = false;
    for (w, deep) in results.into_inner().unwrap() {
        too_deep |= deep;
        v.merge(w);
    }
    if too_deep {
        return Err(depth_error(bound));
    }
    finish(&frontier, &deferred, v);
    Ok(())
}

/// Counts of one traversal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationReport {
    pub bound: i64,
    /// Circles with curvature at most the bound, counted with multiplicity.
    pub circles: u64,
    /// Distinct positive curvatures at most the bound.
    pub distinct: u64,
    /// Configurations visited, including the root.
    pub quadruples: u64,
}

/// Bit set over `[1, n]`.
#[derive(Clone, Debug)]
pub struct CurvatureBits {
    words: Vec<u64>,
    n: u64,
}

impl CurvatureBits {
    pub fn new(n: u64, budget: u64) -> Result<Self> {
        let needed = (n / 64 + 1) * 8;
        if needed > budget {
            return Err(Error::MemoryBudgetExceeded { needed, budget });
        }
        Ok(CurvatureBits { words: vec![0; (n / 64 + 1) as usize], n })
    }

    #[inline]
    pub fn insert(&mut self, x: i64) {
        if x >= 1 && x as u64 <= self.n {
            let x = x as u64;
            self.words[(x >> 6) as usize] |= 1 << (x & 63);
        }
    }

    #[inline]
    pub fn contains(&self, x: i64) -> bool {
        x >= 1 && x as u64 <= self.n && self.words[(x as u64 >> 6) as usize] >> (x & 63) & 1 == 1
    }

    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn union_with(&mut self, other: &CurvatureBits) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> + '_ {
        (1..=self.n as i64).filter(move |&x| self.contains(x))
    }
}

/// Default memory budget for bit sets and tables, overridable by callers.
pub const DEFAULT_MEMORY_BUDGET: u64 = 3 << 30;

/// Visitor counting circles, configurations and (optionally) distinct values.
#[derive(Clone, Debug)]
pub struct Counter {
    pub bound: i64,
    pub circles: u64,
    pub quadruples: u64,
    pub bits: Option<CurvatureBits>,
}

impl Counter {
    pub fn new(bound: i64, distinct_budget: Option<u64>) -> Result<Self> {
        let bits = match distinct_budget {
            Some(b) => Some(CurvatureBits::new(bound.max(0) as u64, b)?),
            None => None,
        };
        Ok(Counter { bound, circles: 0, quadruples: 0, bits })
    }

    pub fn report(&self) -> EnumerationReport {
        EnumerationReport {
            bound: self.bound,
            circles: self.circles,
            distinct: self.bits.as_ref().map_or(0, CurvatureBits::count),
            quadruples: self.quadruples,
        }
    }
}

impl Visitor for Counter {
    type Tag = ();
    fn root(&mut self, root: &Quadruple) -> [(); 4] {
        self.quadruples += 1;
        for &x in &root.0 {
            self.circles += 1;
            if let Some(b) = &mut self.bits {
                b.insert(x);
            }
        }
        [(); 4]
    }
    #[inline]
    fn enter(&mut self, q: &Quadruple, slot: usize, _: u32, _: &[(); 4]) {
        self.quadruples += 1;
        self.circles += 1;
        if let Some(b) = &mut self.bits {
            b.insert(q.0[slot]);
        }
    }
}

impl Splittable for Counter {
    fn fork(&self) -> Self {
        Counter {
            bound: self.bound,
            circles: 0,
            quadruples: 0,
            bits: self.bits.as_ref().map(|b| CurvatureBits { words: vec![0; b.words.len()], n: b.n }),
        }
    }
    fn merge(&mut self, other: Self) {
        self.circles += other.circles;
        self.quadruples += other.quadruples;
        if let (Some(a), Some(b)) = (&mut self.bits, &other.bits) {
            a.union_with(b);
        }
    }
}

/// Walks the packing and returns its counts.
pub fn enumerate_orbit<V: Visitor + Send>(root: &Quadruple, bound: i64, sink: &mut V) -> Result<EnumerationReport> {
    struct Both<'a, V> {
        c: Counter,
        s: &'a mut V,
    }
    impl<V: Visitor> Visitor for Both<'_, V> {
        type Tag = V::Tag;
        fn root(&mut self, root: &Quadruple) -> [V::Tag; 4] {
            self.c.root(root);
            self.s.root(root)
        }
        fn enter(&mut self, q: &Quadruple, slot: usize, depth: u32, tags: &[V::Tag; 4]) -> V::Tag {
            self.c.enter(q, slot, depth, &[(); 4]);
            self.s.enter(q, slot, depth, tags)
        }
        fn leave(&mut self, q: &Quadruple, slot: usize, tag: V::Tag) {
            self.s.leave(q, slot, tag)
        }
    }
    let mut both = Both { c: Counter::new(bound, Some(DEFAULT_MEMORY_BUDGET))?, s: sink };
    walk(root, bound, &mut both)?;
    Ok(both.c.report())
}

/// Circles with curvature at most `bound`, with multiplicity.
pub fn count_circles(root: &Quadruple, bound: i64, opts: Traversal) -> Result<EnumerationReport> {
    let mut c = Counter::new(bound, None)?;
    walk_parallel(root, bound, opts, &mut c)?;
    Ok(c.report())
}

/// Same as [`count_circles`] but also counts distinct positive curvatures,
/// using a bit set limited by `budget` bytes.
pub fn count_distinct(root: &Quadruple, bound: i64, budget: u64, opts: Traversal) -> Result<EnumerationReport> {
    let mut c = Counter::new(bound, Some(budget))?;
    walk_parallel(root, bound, opts, &mut c)?;
    Ok(c.report())
}

/// Multiplicities of curvatures in the half-open range `[lo, hi)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiplicityWindow {
    pub lo: i64,
    pub hi: i64,
    pub counts: Vec<u32>,
}

impl MultiplicityWindow {
    pub fn new(lo: i64, hi: i64, budget: u64) -> Result<Self> {
        if lo >= hi {
            return Err(Error::BadQuadruple(format!("empty window [{lo}, {hi})")));
        }
        let needed = (hi - lo) as u64 * 4;
        if needed > budget {
            return Err(Error::MemoryBudgetExceeded { needed, budget });
        }
        Ok(MultiplicityWindow { lo, hi, counts: vec![0; (hi - lo) as usize] })
    }

    #[inline]
    pub fn add(&mut self, x: i64) {
        if x >= self.lo && x < self.hi {
            self.counts[(x - self.lo) as usize] += 1;
        }
    }

    pub fn count(&self, x: i64) -> u32 {
        if x >= self.lo && x < self.hi {
            self.counts[(x - self.lo) as usize]
        } else {
            0
        }
    }

    pub fn merge_from(&mut self, other: &MultiplicityWindow) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    /// `histogram[k]` = number of curvatures in the window seen exactly `k` times.
    pub fn histogram(&self) -> Vec<u64> {
        let max = self.counts.iter().copied().max().unwrap_or(0) as usize;
        let mut h = vec![0u64; max + 1];
        for &c in &self.counts {
            h[c as usize] += 1;
        }
        h
    }

    /// Only residues `r mod m` are kept in the histogram.
    pub fn histogram_filtered(&self, m: i64, r: i64) -> Vec<u64> {
        self.histogram_in(&ResidueClassSet::from_iter(m as u64, [r as i128]))
    }

    /// Only curvatures in one of the given classes are kept in the histogram.
    pub fn histogram_in(&self, classes: &ResidueClassSet) -> Vec<u64> {
        let mut h: Vec<u64> = Vec::new();
        for (i, &c) in self.counts.iter().enumerate() {
            if classes.contains((self.lo + i as i64) as i128) {
                if h.len() <= c as usize {
                    h.resize(c as usize + 1, 0);
                }
                h[c as usize] += 1;
            }
        }
        h
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("curvature,count\n");
        for (i, &c) in self.counts.iter().enumerate() {
            s.push_str(&format!("{},{}\n", self.lo + i as i64, c));
        }
        s
    }
}

struct WindowVisitor {
    w: MultiplicityWindow,
}

impl Visitor for WindowVisitor {
    type Tag = ();
    fn root(&mut self, root: &Quadruple) -> [(); 4] {
        for &x in &root.0 {
            self.w.add(x);
        }
        [(); 4]
    }
    #[inline]
    fn enter(&mut self, q: &Quadruple, slot: usize, _: u32, _: &[(); 4]) {
        self.w.add(q.0[slot]);
    }
}

impl Splittable for WindowVisitor {
    fn fork(&self) -> Self {
        WindowVisitor { w: MultiplicityWindow { lo: self.w.lo, hi: self.w.hi, counts: vec![0; self.w.counts.len()] } }
    }
    fn merge(&mut self, other: Self) {
        self.w.merge_from(&other.w);
    }
}

/// Multiplicity of every curvature in `[lo, hi)` over the whole packing.
pub fn multiplicity_window(root: &Quadruple, lo: i64, hi: i64, budget: u64, opts: Traversal) -> Result<MultiplicityWindow> {
    let mut v = WindowVisitor { w: MultiplicityWindow::new(lo, hi, budget)? };
    walk_parallel(root, (hi - 1).max(root.max()), opts, &mut v)?;
    Ok(v.w)
}

/// Least-squares slope of `log C` against `log X`.
pub fn fit_exponent(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < 3 {
        return Err(Error::DegenerateFit("need at least three samples"));
    }
    if samples.iter().any(|&(x, c)| x <= 0.0 || c <= 0.0) {
        return Err(Error::DegenerateFit("samples must be positive"));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(x, c)| (x.ln(), c.ln())).collect();
    let (slope, _) = least_squares(&pts)?;
    Ok(slope)
}

/// Ordinary least squares line `y = slope·x + intercept`.
pub fn least_squares(pts: &[(f64, f64)]) -> Result<(f64, f64)> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae equal"));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Where a circle came from in the tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    /// One of the four root circles (zero-based slot).
    RootSlot(usize),
    /// Born as entry `slot` of configuration number `quadruple`.
    Birth { quadruple: u64, slot: usize },
}

/// A circle of the packing with its tangencies to earlier circles.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircleRecord {
    pub id: u32,
    pub curvature: i64,
    pub origin: Origin,
    /// Root circles list the other three root circles; others their parents.
    pub parents: [u32; 3],
    pub depth: u32,
    /// The configuration in which the circle was born.
    pub birth: Quadruple,
}

/// All circles up to a bound, in traversal order.
#[derive(Clone, Debug)]
pub struct CircleTable {
    pub root: Quadruple,
    pub bound: i64,
    pub circles: Vec<CircleRecord>,
}

impl CircleTable {
    /// Unordered tangent pairs `(earlier, later)`, each listed once.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut e = Vec::new();
        for c in &self.circles {
            match c.origin {
                Origin::RootSlot(_) => {
                    for &p in &c.parents {
                        if p < c.id {
                            e.push((p, c.id));
                        }
                    }
                }
                Origin::Birth { .. } => e.extend(c.parents.iter().map(|&p| (p, c.id))),
            }
        }
        e
    }

    /// Neighbour lists indexed by id.
    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.circles.len()];
        for (a, b) in self.edges() {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        adj
    }

    /// Curvatures sorted ascending.
    pub fn curvatures(&self) -> Vec<i64> {
        let mut v: Vec<i64> = self.circles.iter().map(|c| c.curvature).collect();
        v.sort_unstable();
        v
    }

    /// Finds a circle by its address: a root slot or a word of one-based swaps.
    pub fn find_root_slot(&self, slot: usize) -> Option<u32> {
        self.circles.iter().find(|c| c.origin == Origin::RootSlot(slot)).map(|c| c.id)
    }

    /// Ids of circles with the given curvature, in id order.
    pub fn with_curvature(&self, k: i64) -> Vec<u32> {
        self.circles.iter().filter(|c| c.curvature == k).map(|c| c.id).collect()
    }
}

struct Recorder {
    circles: Vec<CircleRecord>,
    nodes: u64,
    limit: usize,
    overflow: bool,
}

impl Visitor for Recorder {
    type Tag = u32;
    fn root(&mut self, root: &Quadruple) -> [u32; 4] {
        for k in 0..4 {
            let others: Vec<u32> = (0..4u32).filter(|&j| j != k as u32).collect();
            self.circles.push(CircleRecord {
                id: k as u32,
                curvature: root.0[k],
                origin: Origin::RootSlot(k),
                parents: [others[0], others[1], others[2]],
                depth: 0,
                birth: *root,
            });
        }
        [0, 1, 2, 3]
    }
    fn enter(&mut self, q: &Quadruple, slot: usize, depth: u32, tags: &[u32; 4]) -> u32 {
        self.nodes += 1;
        if self.circles.len() >= self.limit {
            self.overflow = true;
            return u32::MAX;
        }
        let id = self.circles.len() as u32;
        let p: Vec<u32> = (0..4).filter(|&j| j != slot).map(|j| tags[j]).collect();
        self.circles.push(CircleRecord {
            id,
            curvature: q.0[slot],
            origin: Origin::Birth { quadruple: self.nodes, slot },
            parents: [p[0], p[1], p[2]],
            depth,
            birth: *q,
        });
        id
    }
}

/// Collects every circle up to `bound` with its parents. Intended for small
/// bounds; refuses when more than `max_circles` circles would be stored.
pub fn collect_circles(root: &Quadruple, bound: i64, max_circles: usize) -> Result<CircleTable> {
    let mut r = Recorder { circles: Vec::new(), nodes: 0, limit: max_circles, overflow: false };
    walk(root, bound, &mut r)?;
    if r.overflow {
        return Err(Error::MemoryBudgetExceeded {
            needed: r.nodes + 4,
            budget: max_circles as u64,
        });
    }
    Ok(CircleTable { root: *root, bound, circles: r.circles })
}

/// All configurations (ordered quadruples) up to `bound`, sorted.
pub fn collect_quadruples(root: &Quadruple, bound: i64) -> Result<Vec<Quadruple>> {
    struct Q(Vec<Quadruple>);
    impl Visitor for Q {
        type Tag = ();
        fn root(&mut self, root: &Quadruple) -> [(); 4] {
            self.0.push(*root);
            [(); 4]
        }
        fn enter(&mut self, q: &Quadruple, _: usize, _: u32, _: &[(); 4]) {
            self.0.push(*q);
        }
    }
    let mut v = Q(Vec::new());
    walk(root, bound, &mut v)?;
    v.0.sort_unstable();
    Ok(v.0)
}
