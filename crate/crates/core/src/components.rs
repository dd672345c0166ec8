//! Prime components, their thickenings, and prime component roots.
//!
//! Two independent routes are provided.
//!
//! * [`extract_component`] builds an explicit circle table and runs
//!   union-find over tangencies between odd-prime circles. It is exact for
//!   the truncated graph but needs memory for every circle.
//! * [`scan_components`] streams the traversal and labels each odd-prime
//!   circle by the nearest *walled* configuration on its path from the root:
//!   a configuration whose three older circles are all non-odd-prime. Any
//!   tangency path between odd primes that leaves the subtree of a walled
//!   configuration must pass through one of its three walls, so each walled
//!   configuration with a prime newest circle roots exactly one component
//!   and the odd primes with no walled ancestor form the component through
//!   the odd-prime root circles (the *exceptional* component). Labels depend
//!   only on ancestors, so truncated components never merge as the bound
//!   grows.
//!
//! Tests check that both routes give the same partition.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::enumerate::{collect_circles, degenerate_slots, walk, walk_parallel, CircleTable, MultiplicityWindow, Splittable, Traversal, Visitor};
use crate::error::{Error, Result};
use crate::forms::{curvature_form, for_each_represented, ShiftedForm};
use crate::primes::{is_odd_prime_curvature, is_prime, PrimeTable};
use crate::quadruple::{Quadruple, SwapIndex};
use crate::residues::{admissible_residues, ResidueClassSet};

fn prime_entry(x: i64) -> bool {
    x >= 2 && is_prime(x as u64)
}

/// Whether `q` is a prime component root: its maximum is prime and the other
/// three entries are not (1, 0 and negative entries count as non-prime).
pub fn is_prime_root(q: &Quadruple) -> bool {
    let k = q.argmax();
    if !prime_entry(q.0[k]) {
        return false;
    }
    (0..4).filter(|&j| j != k).all(|j| !prime_entry(q.0[j]))
}

/// Prime root counts over all configurations with maximum at most `bound`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootCounts {
    pub bound: i64,
    /// Configurations whose maximum is prime.
    pub sigma1: u64,
    /// Those among `sigma1` with a second prime entry.
    pub sigma2: u64,
    /// Configurations passing [`is_prime_root`], counted directly.
    pub roots: u64,
    /// Circles of curvature at most `bound`, with multiplicity.
    pub circles: u64,
    pub quadruples: u64,
}

struct RootCounter<'a> {
    primes: &'a PrimeTable,
    c: RootCounts,
}

impl RootCounter<'_> {
    #[inline]
    fn node(&mut self, q: &Quadruple, top: usize) {
        self.c.quadruples += 1;
        if !self.primes.is_prime(q.0[top]) {
            return;
        }
        self.c.sigma1 += 1;
        if (0..4).any(|j| j != top && self.primes.is_prime(q.0[j])) {
            self.c.sigma2 += 1;
        } else {
            self.c.roots += 1;
        }
    }
}

impl Visitor for RootCounter<'_> {
    type Tag = ();
    fn root(&mut self, root: &Quadruple) -> [(); 4] {
        self.c.circles += 4;
        self.node(root, root.argmax());
        [(); 4]
    }
    #[inline]
    fn enter(&mut self, q: &Quadruple, slot: usize, _: u32, _: &[(); 4]) {
        self.c.circles += 1;
        self.node(q, slot);
    }
}

impl Splittable for RootCounter<'_> {
    fn fork(&self) -> Self {
        RootCounter { primes: self.primes, c: RootCounts { bound: self.c.bound, sigma1: 0, sigma2: 0, roots: 0, circles: 0, quadruples: 0 } }
    }
    fn merge(&mut self, o: Self) {
        self.c.sigma1 += o.c.sigma1;
        self.c.sigma2 += o.c.sigma2;
        self.c.roots += o.c.roots;
        self.c.circles += o.c.circles;
        self.c.quadruples += o.c.quadruples;
    }
}

/// Counts prime component roots `(a, b, c, p)` with `p ≤ bound` among the
/// configurations of the packing, along with the two sums they split into.
///
/// A half traversal is rescaled: the mirror child's subtree repeats the
/// configurations of the root's other subtrees.
pub fn count_prime_roots(root: &Quadruple, bound: i64, primes: &PrimeTable, opts: Traversal) -> Result<RootCounts> {
    let mut v = RootCounter { primes, c: RootCounts { bound, sigma1: 0, sigma2: 0, roots: 0, circles: 0, quadruples: 0 } };
    walk_parallel(root, bound, opts, &mut v)?;
    let mut c = v.c;
    if opts.half {
        c = RootCounts {
            bound,
            sigma1: 2 * c.sigma1,
            sigma2: 2 * c.sigma2,
            roots: 2 * c.roots,
            circles: 2 * (c.circles - 4) + 5,
            quadruples: 2 * c.quadruples,
        };
    }
    Ok(c)
}

/// Disjoint-set forest with path halving and union by size.
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = self.parent[x as usize];
        }
        x
    }

    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a as usize] < self.size[b as usize] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b as usize] = a;
        self.size[a as usize] += self.size[b as usize];
        true
    }
}

/// Union-find classes of the odd-prime circles in a table: `Some(rep)` for
/// odd-prime circles (the representative is the smallest id of the class),
/// `None` for the rest.
pub fn prime_classes(table: &CircleTable) -> Vec<Option<u32>> {
    let n = table.circles.len();
    let odd: Vec<bool> = table.circles.iter().map(|c| is_odd_prime_curvature(c.curvature)).collect();
    let mut uf = UnionFind::new(n);
    for (a, b) in table.edges() {
        if odd[a as usize] && odd[b as usize] {
            uf.union(a, b);
        }
    }
    let mut smallest: HashMap<u32, u32> = HashMap::new();
    for i in 0..n as u32 {
        if odd[i as usize] {
            let r = uf.find(i);
            smallest.entry(r).or_insert(i);
        }
    }
    (0..n as u32).map(|i| odd[i as usize].then(|| smallest[&uf.find(i)])).collect()
}

/// A truncated prime component with its thickening.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentSnapshot {
    pub bound: i64,
    /// Birth configuration of the smallest member when it is a prime
    /// component root.
    pub root_quadruple: Option<Quadruple>,
    /// Member curvatures, ascending.
    pub members: Vec<i64>,
    /// Curvatures of non-members tangent to a member, ascending.
    pub thickening: Vec<i64>,
    #[serde(skip)]
    pub member_ids: Vec<u32>,
    #[serde(skip)]
    pub thickening_ids: Vec<u32>,
    /// Birth configuration of the smallest member (ties by id).
    #[serde(skip)]
    pub smallest_birth: Option<Quadruple>,
}

impl ComponentSnapshot {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Component of circle `seed` among circles up to `table.bound`.
pub fn component_of(table: &CircleTable, seed: u32) -> Result<ComponentSnapshot> {
    let c = table.circles.get(seed as usize).ok_or_else(|| Error::CircleNotFound(format!("id {seed}")))?;
    if !is_odd_prime_curvature(c.curvature) {
        return Err(Error::SeedNotPrime(c.curvature));
    }
    let classes = prime_classes(table);
    let rep = classes[seed as usize];
    let member_ids: Vec<u32> = (0..classes.len() as u32).filter(|&i| classes[i as usize] == rep).collect();
    let mut is_member = vec![false; classes.len()];
    for &i in &member_ids {
        is_member[i as usize] = true;
    }
    let mut thick = vec![false; classes.len()];
    for (a, b) in table.edges() {
        if is_member[a as usize] && !is_member[b as usize] {
            thick[b as usize] = true;
        }
        if is_member[b as usize] && !is_member[a as usize] {
            thick[a as usize] = true;
        }
    }
    let thickening_ids: Vec<u32> = (0..thick.len() as u32).filter(|&i| thick[i as usize]).collect();
    Ok(snapshot(table, member_ids, thickening_ids))
}

/// Every component of the table, ordered by smallest member id.
pub fn all_components(table: &CircleTable) -> Vec<ComponentSnapshot> {
    let classes = prime_classes(table);
    let mut members: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for (i, c) in classes.iter().enumerate() {
        if let Some(r) = c {
            members.entry(*r).or_default().push(i as u32);
        }
    }
    let mut touch: Vec<(u32, u32)> = Vec::new();
    for (a, b) in table.edges() {
        match (classes[a as usize], classes[b as usize]) {
            (Some(x), Some(y)) if x == y => {}
            (ca, cb) => {
                if let Some(x) = ca {
                    touch.push((x, b));
                }
                if let Some(y) = cb {
                    touch.push((y, a));
                }
            }
        }
    }
    touch.sort_unstable();
    touch.dedup();
    let mut thick: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for (r, i) in touch {
        thick.entry(r).or_default().push(i);
    }
    members.into_iter().map(|(r, m)| snapshot(table, m, thick.remove(&r).unwrap_or_default())).collect()
}

fn snapshot(table: &CircleTable, member_ids: Vec<u32>, thickening_ids: Vec<u32>) -> ComponentSnapshot {
    let smallest = member_ids.iter().copied().min_by_key(|&i| (table.circles[i as usize].curvature, i));
    let smallest_birth = smallest.map(|i| table.circles[i as usize].birth);
    let root_quadruple = smallest.filter(|&i| table.circles[i as usize].depth > 0 && is_prime_root(&table.circles[i as usize].birth)).map(|i| table.circles[i as usize].birth);
    let sorted = |ids: &[u32]| {
        let mut v: Vec<i64> = ids.iter().map(|&i| table.circles[i as usize].curvature).collect();
        v.sort_unstable();
        v
    };
    ComponentSnapshot {
        bound: table.bound,
        root_quadruple,
        members: sorted(&member_ids),
        thickening: sorted(&thickening_ids),
        member_ids,
        thickening_ids,
        smallest_birth,
    }
}

/// How a seed circle is named.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Seed {
    /// Circle id in traversal order.
    Id(u32),
    /// The first circle (lowest id) with this curvature.
    Curvature(i64),
}

/// Enumerates the packing up to `bound` (at most `max_circles` circles) and
/// extracts the truncated component of `seed` with union-find.
pub fn extract_component(root: &Quadruple, seed: Seed, bound: i64, max_circles: usize) -> Result<ComponentSnapshot> {
    if let Seed::Curvature(k) = seed {
        if !is_odd_prime_curvature(k) {
            return Err(Error::SeedNotPrime(k));
        }
        if k > bound {
            return Err(Error::CircleNotFound(format!("curvature {k} exceeds the bound {bound}")));
        }
    }
    let table = collect_circles(root, bound, max_circles)?;
    let id = match seed {
        Seed::Id(i) => i,
        Seed::Curvature(k) => *table.with_curvature(k).first().ok_or_else(|| Error::CircleNotFound(format!("curvature {k}")))?,
    };
    component_of(&table, id)
}

/// Residues mod `m` attained by a snapshot, with the expected set: units for
/// members only, the packing's admissible classes when the thickening is
/// included.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coverage {
    pub attained: ResidueClassSet,
    pub expected: ResidueClassSet,
    pub missing: Vec<u64>,
}

impl Coverage {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("modulus,residue,present\n");
        let m = self.attained.modulus();
        for r in 0..m {
            s.push_str(&format!("{m},{r},{}\n", self.attained.contains(r as i128)));
        }
        s
    }
}

pub fn residue_coverage(snap: &ComponentSnapshot, root: &Quadruple, m: u64, thickened: bool) -> Result<Coverage> {
    if m == 0 {
        return Err(Error::BadModulus { modulus: 0, reason: "modulus must be positive" });
    }
    let mut values: Vec<i64> = snap.members.clone();
    let expected = if thickened {
        values.extend(&snap.thickening);
        admissible_residues(root, m)?
    } else {
        ResidueClassSet::units(m)
    };
    let attained = ResidueClassSet::from_iter(m, values.iter().map(|&v| v as i128));
    let missing = attained.missing_from(&expected);
    Ok(Coverage { attained, expected, missing })
}

// ---------------------------------------------------------------------------
// Streaming labels

/// A configuration of the traversal. Mirror-symmetric packings contain each
/// ordered quadruple twice (once on each side of the mirror), told apart by
/// whether the configuration lies below the root's degenerate child.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeKey {
    pub quadruple: Quadruple,
    pub mirror: bool,
}

/// A component followed by a scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Target {
    /// The component through the odd-prime root circles.
    Exceptional,
    /// The component whose smallest member is born in this configuration.
    Rooted(NodeKey),
}

/// What [`scan_components`] should collect.
#[derive(Clone, Debug, Default)]
pub struct ScanConfig {
    /// Component whose members and thickening are tallied.
    pub target: Option<Target>,
    /// Bounds at which `C_pr` and `C_th` of the target are reported.
    pub grid: Vec<i64>,
    /// Multiplicities of target-thickened curvatures in `[lo, hi)`.
    pub window: Option<(i64, i64)>,
    /// Track the largest rooted component.
    pub sizes: bool,
    /// Residue masks of components whose smallest prime is at most
    /// `root_cap`, for each modulus (all ≤ 64).
    pub coverage: Option<(i64, Vec<u64>)>,
    /// Skip subtrees that cannot meet the exceptional component. Only valid
    /// when the target is exceptional and nothing else is tracked.
    pub prune: bool,
    /// Bytes allowed for the window.
    pub budget: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridRow {
    pub x: i64,
    /// Members with curvature at most `x`.
    pub c_pr: u64,
    /// Members and thickening with curvature at most `x`, thickening taken
    /// within bound `x`.
    pub c_th: u64,
}

/// Residues reached by one component's members.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentCoverage {
    /// `None` for the exceptional component.
    pub key: Option<NodeKey>,
    pub smallest_prime: i64,
    pub members: u64,
    /// One set per requested modulus.
    pub residues: Vec<ResidueClassSet>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub bound: i64,
    /// Members of the exceptional component.
    pub exceptional: u64,
    /// Number of rooted components met (only with `sizes` or `coverage`).
    pub rooted: u64,
    /// Largest rooted component: size and key. Ties go to the smaller key.
    pub largest_rooted: Option<(u64, NodeKey)>,
    pub grid: Vec<GridRow>,
    pub window: Option<MultiplicityWindow>,
    pub coverage: Vec<ComponentCoverage>,
}

impl ScanReport {
    /// The larger of the exceptional and the largest rooted component.
    pub fn largest(&self) -> (Target, u64) {
        match self.largest_rooted {
            Some((n, key)) if n > self.exceptional => (Target::Rooted(key), n),
            _ => (Target::Exceptional, self.exceptional),
        }
    }
}

const ODD_PRIME: u8 = 1;
const MEMBER: u8 = 2;
const MIRROR: u8 = 4;
const LABELLED: u8 = 8;
const IN_TARGET: u8 = 16;
const PARENT_MEMBER: u8 = 32;
const LABEL_NODE: u8 = 64;

const SHARED: u32 = 1 << 31;
const NO_LABEL: u32 = u32::MAX;

#[derive(Clone, Copy)]
pub struct ScanTag {
    flags: u8,
    /// Where the circle's smallest member child is kept.
    store: u32,
    /// Where the label accumulator of the circle's label lives.
    label: u32,
}

#[derive(Clone, Copy)]
struct LabelAcc {
    key: NodeKey,
    members: u64,
    tracked: u32,
}

#[derive(Clone)]
struct Tracked {
    key: Option<NodeKey>,
    prime: i64,
    members: u64,
    masks: Vec<u64>,
}

#[derive(Clone, Default)]
struct Tallies {
    cpr: Vec<u64>,
    cth: Vec<u64>,
    exceptional: u64,
}

impl Tallies {
    fn new(n: usize) -> Self {
        Tallies { cpr: vec![0; n], cth: vec![0; n], exceptional: 0 }
    }
    fn add(&mut self, o: &Tallies) {
        for (a, b) in self.cpr.iter_mut().zip(&o.cpr) {
            *a += b;
        }
        for (a, b) in self.cth.iter_mut().zip(&o.cth) {
            *a += b;
        }
        self.exceptional += o.exceptional;
    }
}

struct Scan<'a> {
    primes: &'a PrimeTable,
    cfg: &'a ScanConfig,
    root: Quadruple,
    thick: bool,
    cut: u32,
    local_min: Vec<i64>,
    shared_min: Vec<i64>,
    local_labels: Vec<LabelAcc>,
    shared_labels: Vec<LabelAcc>,
    tracked: Vec<Tracked>,
    /// Tracked entries created in the prefix (present in every fork).
    shared_tracked: usize,
    /// Tracked entry of the exceptional component.
    e_tracked: u32,
    t: Tallies,
    window: Option<MultiplicityWindow>,
    rooted: u64,
    largest: Option<(u64, NodeKey)>,
}

fn better(a: Option<(u64, NodeKey)>, b: (u64, NodeKey)) -> Option<(u64, NodeKey)> {
    match a {
        Some(x) if x.0 > b.0 || (x.0 == b.0 && x.1 <= b.1) => Some(x),
        _ => Some(b),
    }
}

impl Scan<'_> {
    fn bucket(&self, x: i64) -> Option<usize> {
        let i = self.cfg.grid.partition_point(|&g| g < x);
        (i < self.cfg.grid.len()).then_some(i)
    }

    #[inline]
    fn tally(&mut self, kappa: i64, member: bool, key: Option<i64>) {
        if member {
            if let Some(i) = self.bucket(kappa) {
                self.t.cpr[i] += 1;
            }
        }
        if let Some(k) = key {
            if let Some(i) = self.bucket(k) {
                self.t.cth[i] += 1;
            }
            if let Some(w) = &mut self.window {
                w.add(kappa);
            }
        }
    }

    fn min_slot(&mut self, store: u32) -> &mut i64 {
        if store & SHARED != 0 {
            &mut self.shared_min[(store & !SHARED) as usize]
        } else {
            &mut self.local_min[store as usize]
        }
    }

    fn label_slot(&mut self, loc: u32) -> &mut LabelAcc {
        if loc & SHARED != 0 {
            &mut self.shared_labels[(loc & !SHARED) as usize]
        } else {
            &mut self.local_labels[loc as usize]
        }
    }

    fn track(&mut self, key: Option<NodeKey>, prime: i64) -> u32 {
        match &self.cfg.coverage {
            Some((cap, moduli)) if prime <= *cap => {
                self.tracked.push(Tracked { key, prime, members: 0, masks: vec![0; moduli.len()] });
                self.tracked.len() as u32 - 1
            }
            _ => NO_LABEL,
        }
    }

    #[inline]
    fn count_member(&mut self, loc: u32, kappa: i64) {
        let tracked = if loc == NO_LABEL {
            self.t.exceptional += 1;
            self.e_tracked
        } else {
            let acc = self.label_slot(loc);
            acc.members += 1;
            acc.tracked
        };
        if tracked != NO_LABEL {
            if let Some((_, moduli)) = &self.cfg.coverage {
                let t = &mut self.tracked[tracked as usize];
                t.members += 1;
                for (mask, &m) in t.masks.iter_mut().zip(moduli) {
                    *mask |= 1 << (kappa as u64 % m);
                }
            }
        }
    }

    /// Tallies a circle whose neighbours have all been seen.
    fn settle(&mut self, kappa: i64, tag: ScanTag) {
        if !self.thick {
            return;
        }
        let member = tag.flags & MEMBER != 0;
        let key = if member || tag.flags & PARENT_MEMBER != 0 {
            Some(kappa)
        } else {
            let m = *self.min_slot(tag.store);
            (m != i64::MAX).then_some(m)
        };
        self.tally(kappa, member, key);
    }

    fn is_target(&self, key: &NodeKey) -> bool {
        self.cfg.target == Some(Target::Rooted(*key))
    }
}

impl Visitor for Scan<'_> {
    type Tag = ScanTag;

    fn root(&mut self, root: &Quadruple) -> [ScanTag; 4] {
        let exceptional_target = self.cfg.target == Some(Target::Exceptional);
        let mut tags = [ScanTag { flags: 0, store: 0, label: NO_LABEL }; 4];
        let smallest = root.0.iter().copied().filter(|&k| self.primes.is_odd_prime(k)).min();
        if let Some(p) = smallest {
            self.e_tracked = self.track(None, p);
        }
        for (j, tag) in tags.iter_mut().enumerate() {
            let k = root.0[j];
            let mut f = if exceptional_target { IN_TARGET } else { 0 };
            if self.primes.is_odd_prime(k) {
                f |= ODD_PRIME;
                if exceptional_target {
                    f |= MEMBER;
                }
                self.count_member(NO_LABEL, k);
            }
            tag.flags = f;
            tag.store = SHARED | j as u32;
        }
        for j in 0..4 {
            if (0..4).any(|i| i != j && tags[i].flags & MEMBER != 0) {
                tags[j].flags |= PARENT_MEMBER;
            }
        }
        tags
    }

    #[inline]
    fn enter(&mut self, q: &Quadruple, slot: usize, depth: u32, tags: &[ScanTag; 4]) -> ScanTag {
        let kappa = q.0[slot];
        let odd_prime = self.primes.is_odd_prime(kappa);
        let mut top = usize::MAX;
        let mut top_val = i64::MIN;
        let mut walled = true;
        let mut parent_member = false;
        for j in 0..4 {
            if j == slot {
                continue;
            }
            if q.0[j] > top_val {
                top_val = q.0[j];
                top = j;
            }
            walled &= tags[j].flags & ODD_PRIME == 0;
            parent_member |= tags[j].flags & MEMBER != 0;
        }
        let p = tags[top];
        let mirror = p.flags & MIRROR != 0 || (depth == 1 && kappa == self.root.0[slot]);
        let mut flags = if mirror { MIRROR } else { 0 };
        if odd_prime {
            flags |= ODD_PRIME;
        }
        if parent_member {
            flags |= PARENT_MEMBER;
        }
        let label;
        if walled {
            flags |= LABELLED;
            let key = NodeKey { quadruple: *q, mirror };
            if self.is_target(&key) {
                flags |= IN_TARGET;
            }
            if odd_prime {
                flags |= LABEL_NODE;
                let tracked = self.track(Some(key), kappa);
                let acc = LabelAcc { key, members: 0, tracked };
                label = if depth <= self.cut {
                    self.shared_labels.push(acc);
                    SHARED | (self.shared_labels.len() as u32 - 1)
                } else {
                    self.local_labels[depth as usize] = acc;
                    depth
                };
            } else {
                label = NO_LABEL;
            }
        } else {
            flags |= p.flags & (LABELLED | IN_TARGET);
            label = p.label;
        }
        let member = odd_prime
            && match self.cfg.target {
                Some(Target::Exceptional) => flags & LABELLED == 0,
                Some(Target::Rooted(_)) => flags & IN_TARGET != 0,
                None => false,
            };
        if member {
            flags |= MEMBER;
        }
        // the nearest walled ancestor of an odd prime always has a prime newest circle
        debug_assert!(!odd_prime || flags & LABELLED == 0 || label != NO_LABEL);
        if odd_prime && (flags & LABELLED == 0 || self.cfg.sizes || self.cfg.coverage.is_some()) {
            self.count_member(label, kappa);
        }
        let store = if depth <= self.cut {
            self.shared_min.push(i64::MAX);
            SHARED | (self.shared_min.len() as u32 - 1)
        } else {
            self.local_min[depth as usize] = i64::MAX;
            depth
        };
        if member && self.thick {
            for j in 0..4 {
                if j != slot && tags[j].flags & MEMBER == 0 {
                    let m = self.min_slot(tags[j].store);
                    *m = (*m).min(kappa);
                }
            }
        }
        ScanTag { flags, store, label }
    }

    #[inline(always)]
    fn descend(&self, tag: &ScanTag) -> bool {
        !(self.cfg.prune && tag.flags & LABELLED != 0)
    }

    fn leave(&mut self, q: &Quadruple, slot: usize, tag: ScanTag) {
        self.settle(q.0[slot], tag);
        if tag.flags & LABEL_NODE != 0 {
            let acc = *self.label_slot(tag.label);
            self.rooted += 1;
            self.largest = better(self.largest, (acc.members, acc.key));
        }
    }

    fn split_at(&mut self, cut: u32) {
        self.cut = cut;
    }
}

impl Splittable for Scan<'_> {
    fn fork(&self) -> Self {
        let mut tracked: Vec<Tracked> = self.tracked.clone();
        for t in &mut tracked {
            t.members = 0;
        }
        let mut shared_labels = self.shared_labels.clone();
        for l in &mut shared_labels {
            l.members = 0;
        }
        Scan {
            primes: self.primes,
            cfg: self.cfg,
            root: self.root,
            thick: self.thick,
            cut: self.cut,
            local_min: vec![i64::MAX; self.local_min.len()],
            shared_min: self.shared_min.clone(),
            local_labels: self.local_labels.clone(),
            shared_labels,
            tracked,
            shared_tracked: self.tracked.len(),
            e_tracked: self.e_tracked,
            t: Tallies::new(self.t.cpr.len()),
            window: self.window.as_ref().map(|w| MultiplicityWindow { lo: w.lo, hi: w.hi, counts: vec![0; w.counts.len()] }),
            rooted: 0,
            largest: None,
        }
    }

    fn merge(&mut self, o: Self) {
        for (a, b) in self.shared_min.iter_mut().zip(&o.shared_min) {
            *a = (*a).min(*b);
        }
        for (a, b) in self.shared_labels.iter_mut().zip(&o.shared_labels) {
            a.members += b.members;
        }
        for (i, t) in o.tracked.into_iter().enumerate() {
            if i < o.shared_tracked {
                let mine = &mut self.tracked[i];
                mine.members += t.members;
                for (a, b) in mine.masks.iter_mut().zip(&t.masks) {
                    *a |= b;
                }
            } else {
                self.tracked.push(t);
            }
        }
        self.t.add(&o.t);
        if let (Some(w), Some(ow)) = (&mut self.window, &o.window) {
            w.merge_from(ow);
        }
        self.rooted += o.rooted;
        if let Some(l) = o.largest {
            self.largest = better(self.largest, l);
        }
    }
}

fn check_config(root: &Quadruple, cfg: &ScanConfig, opts: &Traversal) -> Result<()> {
    if cfg.prune && (cfg.target != Some(Target::Exceptional) || cfg.sizes || cfg.coverage.is_some()) {
        return Err(Error::HypothesisViolation("pruning needs the exceptional target and no size or coverage tracking".into()));
    }
    if (!cfg.grid.is_empty() || cfg.window.is_some()) && cfg.target.is_none() {
        return Err(Error::HypothesisViolation("grid and window tallies need a target component".into()));
    }
    if cfg.grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::HypothesisViolation("grid must be strictly increasing".into()));
    }
    if let Some((_, moduli)) = &cfg.coverage {
        if moduli.iter().any(|&m| m == 0 || m > 64) {
            return Err(Error::BadModulus { modulus: moduli.iter().copied().find(|&m| m == 0 || m > 64).unwrap(), reason: "coverage moduli must lie in 1..=64" });
        }
    }
    if opts.half {
        // The mirror configuration must not be walled, so that the two
        // halves carry mirror-image labels and the exceptional component is
        // symmetric.
        let d = degenerate_slots(root);
        if d.len() != 1 {
            return Err(Error::InvalidRoot(root.to_string(), "half walks need exactly one degenerate slot"));
        }
        if (0..4).filter(|&j| j != d[0]).all(|j| !is_odd_prime_curvature(root.0[j])) {
            return Err(Error::InvalidRoot(root.to_string(), "the mirror configuration is walled; use a full walk"));
        }
        if matches!(cfg.target, Some(Target::Rooted(_))) {
            return Err(Error::InvalidRoot(root.to_string(), "half walks only follow the exceptional component"));
        }
    }
    Ok(())
}

/// Streams the packing up to `bound` and reports component statistics.
pub fn scan_components(root: &Quadruple, bound: i64, cfg: &ScanConfig, primes: &PrimeTable, opts: Traversal) -> Result<ScanReport> {
    check_config(root, cfg, &opts)?;
    let window = match cfg.window {
        Some((lo, hi)) => Some(MultiplicityWindow::new(lo, hi, cfg.budget)?),
        None => None,
    };
    // depth is at most about 2·sqrt(bound)
    let depth = 2 * (bound.max(1) as f64).sqrt() as usize + 300;
    let blank = LabelAcc { key: NodeKey { quadruple: *root, mirror: false }, members: 0, tracked: NO_LABEL };
    let mut v = Scan {
        primes,
        cfg,
        root: *root,
        thick: cfg.target.is_some(),
        cut: 0,
        local_min: vec![i64::MAX; depth],
        shared_min: vec![i64::MAX; 4],
        local_labels: vec![blank; depth],
        shared_labels: Vec::new(),
        tracked: Vec::new(),
        shared_tracked: 0,
        e_tracked: NO_LABEL,
        t: Tallies::new(cfg.grid.len()),
        window,
        rooted: 0,
        largest: None,
    };
    walk_parallel(root, bound, opts, &mut v)?;

    // Root circles are settled last: their children are spread over the
    // whole tree.
    let tags = root_tags(&v, root);
    let degenerate = opts.half.then(|| degenerate_slots(root)[0]);
    let before = (v.t.clone(), v.window.clone());
    let mut deg_part = None;
    for j in 0..4 {
        let pre = (v.t.clone(), v.window.clone());
        v.settle(root.0[j], tags[j]);
        if Some(j) == degenerate {
            deg_part = Some(difference(&(v.t.clone(), v.window.clone()), &pre));
        }
    }
    let mut t = v.t.clone();
    let mut window = v.window.take();
    if let Some((deg, deg_window)) = deg_part {
        // A half walk sees every circle outside the root quadruple and the
        // mirror circle twice less often; the mirror circle behaves exactly
        // like the degenerate root circle.
        let (root_part, root_window) = difference(&(t.clone(), window.clone()), &before);
        let rescale = |half: u64, rootp: u64, degp: u64| 2 * (half - rootp) + rootp + degp;
        for i in 0..t.cpr.len() {
            t.cpr[i] = rescale(t.cpr[i], root_part.cpr[i], deg.cpr[i]);
            t.cth[i] = rescale(t.cth[i], root_part.cth[i], deg.cth[i]);
        }
        let root_members = root.0.iter().filter(|&&k| is_odd_prime_curvature(k)).count() as u64;
        let deg_member = u64::from(is_odd_prime_curvature(root.0[degenerate.unwrap()]));
        t.exceptional = rescale(t.exceptional, root_members, deg_member);
        if let (Some(w), Some(rw), Some(dw)) = (&mut window, &root_window, &deg_window) {
            for i in 0..w.counts.len() {
                w.counts[i] = rescale(w.counts[i] as u64, rw.counts[i] as u64, dw.counts[i] as u64) as u32;
            }
        }
    }

    let mut grid = Vec::with_capacity(cfg.grid.len());
    let (mut cpr, mut cth) = (0u64, 0u64);
    for (i, &x) in cfg.grid.iter().enumerate() {
        cpr += t.cpr[i];
        cth += t.cth[i];
        grid.push(GridRow { x, c_pr: cpr, c_th: cth });
    }
    let coverage = match &cfg.coverage {
        Some((_, moduli)) => {
            let mut out: Vec<ComponentCoverage> = v
                .tracked
                .iter()
                .map(|tr| ComponentCoverage {
                    key: tr.key,
                    smallest_prime: tr.prime,
                    members: if tr.key.is_none() { t.exceptional } else { tr.members },
                    residues: moduli
                        .iter()
                        .zip(&tr.masks)
                        .map(|(&m, &mask)| ResidueClassSet::from_iter(m, (0..m).filter(|r| mask >> r & 1 == 1).map(|r| r as i128)))
                        .collect(),
                })
                .collect();
            out.sort_by_key(|c| (c.key.is_some(), c.smallest_prime, c.key));
            out
        }
        None => Vec::new(),
    };
    let scale = if opts.half { 2 } else { 1 };
    let labels = cfg.sizes || cfg.coverage.is_some();
    Ok(ScanReport {
        bound,
        exceptional: t.exceptional,
        rooted: if labels { v.rooted * scale } else { 0 },
        largest_rooted: if labels { v.largest } else { None },
        grid,
        window,
        coverage,
    })
}

type TallyState = (Tallies, Option<MultiplicityWindow>);

fn difference(a: &TallyState, b: &TallyState) -> TallyState {
    let mut t = a.0.clone();
    for (x, y) in t.cpr.iter_mut().zip(&b.0.cpr) {
        *x -= y;
    }
    for (x, y) in t.cth.iter_mut().zip(&b.0.cth) {
        *x -= y;
    }
    t.exceptional -= b.0.exceptional;
    let w = match (&a.1, &b.1) {
        (Some(wa), Some(wb)) => {
            let mut w = wa.clone();
            for (x, y) in w.counts.iter_mut().zip(&wb.counts) {
                *x -= y;
            }
            Some(w)
        }
        _ => None,
    };
    (t, w)
}

/// Tags of the root circles as the scan assigned them.
fn root_tags(v: &Scan<'_>, root: &Quadruple) -> [ScanTag; 4] {
    let exceptional_target = v.cfg.target == Some(Target::Exceptional);
    let mut tags = [ScanTag { flags: 0, store: 0, label: NO_LABEL }; 4];
    for j in 0..4 {
        if exceptional_target && v.primes.is_odd_prime(root.0[j]) {
            tags[j].flags |= MEMBER;
        }
        tags[j].store = SHARED | j as u32;
    }
    for j in 0..4 {
        if (0..4).any(|i| i != j && tags[i].flags & MEMBER != 0) {
            tags[j].flags |= PARENT_MEMBER;
        }
    }
    tags
}

/// Labels every circle of a plain traversal: `None` for circles that are
/// not odd primes, otherwise the component found by the streaming rule.
/// Entries follow the circle order of [`collect_circles`].
pub fn label_circles(root: &Quadruple, bound: i64, primes: &PrimeTable) -> Result<Vec<Option<Target>>> {
    struct L<'a> {
        primes: &'a PrimeTable,
        root: Quadruple,
        out: Vec<Option<Target>>,
    }
    #[derive(Clone, Copy)]
    struct T {
        odd: bool,
        mirror: bool,
        label: Option<NodeKey>,
        walled_below: bool,
    }
    impl Visitor for L<'_> {
        type Tag = T;
        fn root(&mut self, root: &Quadruple) -> [T; 4] {
            let mut t = [T { odd: false, mirror: false, label: None, walled_below: false }; 4];
            for j in 0..4 {
                t[j].odd = self.primes.is_odd_prime(root.0[j]);
                self.out.push(t[j].odd.then_some(Target::Exceptional));
            }
            t
        }
        fn enter(&mut self, q: &Quadruple, slot: usize, depth: u32, tags: &[T; 4]) -> T {
            let kappa = q.0[slot];
            let odd = self.primes.is_odd_prime(kappa);
            // the parent configuration's newest circle is the largest wall
            let top = (0..4).filter(|&j| j != slot).max_by_key(|&j| q.0[j]).unwrap();
            let p = tags[top];
            let mirror = p.mirror || (depth == 1 && kappa == self.root.0[slot]);
            let walled = (0..4).filter(|&j| j != slot).all(|j| !tags[j].odd);
            let (label, walled_below) = if walled { (Some(NodeKey { quadruple: *q, mirror }), true) } else { (p.label, p.walled_below) };
            self.out.push(odd.then(|| match (walled_below, label) {
                (true, Some(k)) => Target::Rooted(k),
                _ => Target::Exceptional,
            }));
            T { odd, mirror, label, walled_below }
        }
    }
    let mut l = L { primes, root: *root, out: Vec::new() };
    walk(root, bound, &mut l)?;
    Ok(l.out)
}

// ---------------------------------------------------------------------------
// Two layers around a circle

/// The translated form chosen for one first-layer prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerForm {
    pub alpha: i64,
    /// Witness `(x, y)` of `alpha` in the central form.
    pub x: i64,
    pub y: i64,
    pub form: ShiftedForm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kappa2 {
    pub bound: i64,
    /// Distinct curvatures `≤ bound` in the union of the second-layer sets.
    pub distinct: u64,
    /// Sum of the second-layer set sizes.
    pub total: u64,
    pub layer: Vec<LayerForm>,
    /// `(α₁, α₂, |S_α₁ ∩ S_α₂|)` for the first few pairs.
    pub pairs: Vec<(i64, i64, u64)>,
}

/// Picks one translated form per odd prime `α ≤ b_max` primitively
/// represented around the circle `q[slot]`: the first witness in
/// `(value, x, y)` order, completed to a configuration around the centre,
/// and the form of the circle `α` in that configuration.
pub fn layer_forms(q: &Quadruple, slot: SwapIndex, b_max: i64) -> Result<Vec<LayerForm>> {
    let centre = curvature_form(q, slot)?;
    let mut first: BTreeMap<i64, (i64, i64)> = BTreeMap::new();
    for_each_represented(&centre, b_max, true, |value, x, y| {
        if is_odd_prime_curvature(value) {
            let e = first.entry(value).or_insert((x, y));
            if (x, y) < *e {
                *e = (x, y);
            }
        }
    });
    let mut out = Vec::with_capacity(first.len());
    for (alpha, (x, y)) in first {
        let config = centre.configuration(x, y)?;
        debug_assert_eq!(config.0[1], alpha);
        out.push(LayerForm { alpha, x, y, form: curvature_form(&config, SwapIndex::from_zero_based(1))? });
    }
    Ok(out)
}

/// Curvatures within two tangencies of the circle `q[slot]` that pass
/// through an odd prime first-layer circle of curvature at most `b_max`.
/// Values are counted over `[−b_max, bound]`; the bit set needs about
/// `(bound + b_max) / 8` bytes.
pub fn two_layer_kappa2(q: &Quadruple, slot: SwapIndex, b_max: i64, bound: i64, pair_samples: usize, budget: u64) -> Result<Kappa2> {
    let layer = layer_forms(q, slot, b_max)?;
    let offset = b_max.max(0);
    let span = (bound + offset + 1).max(1) as u64;
    let needed = span.div_ceil(8);
    if needed > budget {
        return Err(Error::MemoryBudgetExceeded { needed, budget });
    }
    let words = span.div_ceil(64) as usize;
    let mut union = vec![0u64; words];
    let mut total = 0u64;
    let mut kept: Vec<Vec<u64>> = Vec::new();
    // enough sets for `pair_samples` pairs
    let mut keep = 0;
    while keep < layer.len() && keep * keep.saturating_sub(1) / 2 < pair_samples {
        keep += 1;
    }
    for (i, lf) in layer.iter().enumerate() {
        let mut own = vec![0u64; words];
        for_each_represented(&lf.form, bound, true, |value, _, _| {
            let b = (value + offset) as usize;
            own[b >> 6] |= 1 << (b & 63);
        });
        total += own.iter().map(|w| w.count_ones() as u64).sum::<u64>();
        for (u, o) in union.iter_mut().zip(&own) {
            *u |= o;
        }
        if i < keep {
            kept.push(own);
        }
    }
    let mut pairs = Vec::new();
    'outer: for i in 0..kept.len() {
        for j in i + 1..kept.len() {
            if pairs.len() >= pair_samples {
                break 'outer;
            }
            let n = kept[i].iter().zip(&kept[j]).map(|(a, b)| (a & b).count_ones() as u64).sum();
            pairs.push((layer[i].alpha, layer[j].alpha, n));
        }
    }
    let distinct = union.iter().map(|w| w.count_ones() as u64).sum();
    Ok(Kappa2 { bound, distinct, total, layer, pairs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_root_definition() {
        assert!(!is_prime_root(&Quadruple::new(-6, 14, 15, 11)));
        assert!(!is_prime_root(&Quadruple::new(-1, 2, 2, 3)));
        assert!(is_prime_root(&Quadruple::new(-6, 14, 15, 23)));
        assert!(is_prime_root(&Quadruple::new(1, 4, 9, 13)));
        assert!(!is_prime_root(&Quadruple::new(-2, 3, 6, 7)));
    }

    #[test]
    fn union_find_basics() {
        let mut u = UnionFind::new(5);
        assert!(u.union(0, 1));
        assert!(u.union(3, 4));
        assert!(!u.union(1, 0));
        assert_eq!(u.find(0), u.find(1));
        assert_ne!(u.find(0), u.find(3));
    }
}
