mod common;

use std::collections::{BTreeMap, HashMap};

use apollonian::components::*;
use apollonian::enumerate::{collect_circles, Traversal};
use apollonian::primes::PrimeTable;
use apollonian::{Quadruple, SwapIndex};

const ROOTS: [[i64; 4]; 4] = [[-1, 2, 2, 3], [-2, 3, 6, 7], [-6, 11, 14, 15], [-47, 97, 100, 108]];

fn primes() -> PrimeTable {
    PrimeTable::new(2_000_000)
}

/// Sorted (members, thickening) curvature lists of every component in a table.
fn table_components(root: [i64; 4], bound: i64) -> Vec<(Vec<i64>, Vec<i64>)> {
    let t = collect_circles(&Quadruple(root), bound, 1 << 22).unwrap();
    let mut out: Vec<(Vec<i64>, Vec<i64>)> = all_components(&t).into_iter().map(|s| (s.members, s.thickening)).collect();
    out.sort();
    out
}

#[test]
fn union_find_matches_geometric_tangency() {
    for root in ROOTS {
        assert_eq!(table_components(root, 250), common::geometric_components(root, 250), "{root:?}");
    }
}

#[test]
fn labels_match_union_find() {
    let p = primes();
    for root in ROOTS {
        for bound in [3_000, 30_000] {
            let q = Quadruple(root);
            let t = collect_circles(&q, bound, 1 << 22).unwrap();
            let classes = prime_classes(&t);
            let labels = label_circles(&q, bound, &p).unwrap();
            assert_eq!(classes.len(), labels.len());
            let mut fwd: HashMap<u32, Target> = HashMap::new();
            let mut back: HashMap<Target, u32> = HashMap::new();
            for (c, l) in classes.iter().zip(&labels) {
                assert_eq!(c.is_some(), l.is_some());
                if let (Some(c), Some(l)) = (c, l) {
                    assert_eq!(*fwd.entry(*c).or_insert(*l), *l, "{root:?} at {bound}: class split");
                    assert_eq!(*back.entry(*l).or_insert(*c), *c, "{root:?} at {bound}: label split");
                }
            }
            // the label configuration is the birth of the smallest member
            for s in all_components(&t) {
                let label = &fwd[&s.member_ids[0]];
                match label {
                    Target::Exceptional => {
                        let min_root_prime = root.iter().copied().filter(|&k| common::trial_prime(k) && k > 2).min();
                        assert_eq!(s.members.first().copied(), min_root_prime);
                    }
                    Target::Rooted(key) => {
                        assert_eq!(s.smallest_birth, Some(key.quadruple), "{root:?}");
                    }
                }
            }
        }
    }
}

/// Smallest members of rooted components are born in prime component
/// roots, except where a wall has curvature 2.
#[test]
fn smallest_members_are_born_in_prime_roots() {
    for root in ROOTS {
        let q = Quadruple(root);
        let t = collect_circles(&q, 50_000, 1 << 22).unwrap();
        let mut exceptions = 0;
        for s in all_components(&t) {
            let birth = s.smallest_birth.unwrap();
            if birth == q {
                continue;
            }
            if !is_prime_root(&birth) {
                assert!(birth.0.contains(&2), "{root:?}: ({birth}) is not a prime root");
                exceptions += 1;
            } else {
                assert_eq!(s.root_quadruple, Some(birth));
            }
        }
        if !root.contains(&2) {
            assert_eq!(exceptions, 0, "{root:?}");
        }
    }
}

fn exceptional_grid(root: [i64; 4], grid: &[i64], opts: Traversal, prune: bool) -> ScanReport {
    let cfg = ScanConfig { target: Some(Target::Exceptional), grid: grid.to_vec(), prune, ..Default::default() };
    scan_components(&Quadruple(root), *grid.last().unwrap(), &cfg, &primes(), opts).unwrap()
}

#[test]
fn streamed_counts_match_snapshots() {
    let p = primes();
    let grid = [500, 2_000, 9_000, 20_000];
    for root in ROOTS {
        let q = Quadruple(root);
        let sizes = scan_components(&q, 20_000, &ScanConfig { sizes: true, ..Default::default() }, &p, Traversal::default()).unwrap();
        let t = collect_circles(&q, 20_000, 1 << 22).unwrap();
        let classes = prime_classes(&t);
        let mut by_class: BTreeMap<u32, u64> = BTreeMap::new();
        for c in classes.iter().flatten() {
            *by_class.entry(*c).or_default() += 1;
        }
        let labels = label_circles(&q, 20_000, &p).unwrap();
        let e_rep = classes.iter().zip(&labels).find(|(_, l)| **l == Some(Target::Exceptional)).map(|(c, _)| c.unwrap());
        assert_eq!(sizes.exceptional, e_rep.map_or(0, |r| by_class[&r]), "{root:?}");
        assert_eq!(sizes.rooted as usize, by_class.len() - usize::from(e_rep.is_some()));
        let biggest = by_class.iter().filter(|(r, _)| Some(**r) != e_rep).map(|(_, &n)| n).max();
        assert_eq!(sizes.largest_rooted.map(|l| l.0), biggest);

        // thickened counts of the exceptional and the largest rooted component
        let mut targets = vec![Target::Exceptional];
        if let Some((_, key)) = sizes.largest_rooted {
            targets.push(Target::Rooted(key));
        }
        for target in targets {
            let cfg = ScanConfig { target: Some(target), grid: grid.to_vec(), window: Some((9_000, 20_001)), budget: 1 << 20, ..Default::default() };
            let rep = scan_components(&q, 20_000, &cfg, &p, Traversal::default()).unwrap();
            for row in &rep.grid {
                let tx = collect_circles(&q, row.x, 1 << 22).unwrap();
                let lx = label_circles(&q, row.x, &p).unwrap();
                let Some(seed) = lx.iter().position(|l| *l == Some(target)) else {
                    assert_eq!((row.c_pr, row.c_th), (0, 0));
                    continue;
                };
                let s = component_of(&tx, seed as u32).unwrap();
                assert_eq!(row.c_pr, s.members.len() as u64, "{root:?} {target:?} at {}", row.x);
                assert_eq!(row.c_th, (s.members.len() + s.thickening.len()) as u64, "{root:?} {target:?} at {}", row.x);
                if row.x == 20_000 {
                    let w = rep.window.as_ref().unwrap();
                    let mut want = vec![0u32; w.counts.len()];
                    for k in s.members.iter().chain(&s.thickening) {
                        if *k >= 9_000 {
                            want[(*k - 9_000) as usize] += 1;
                        }
                    }
                    assert_eq!(w.counts, want);
                }
            }
        }
    }
}

#[test]
fn splits_workers_pruning_and_halves_agree() {
    let grid = [1_000, 10_000, 100_000, 300_000];
    for root in [[-2, 3, 6, 7], [-6, 11, 14, 15]] {
        let plain = exceptional_grid(root, &grid, Traversal::default(), false);
        let par = exceptional_grid(root, &grid, Traversal { workers: 3, split_depth: 5, half: false }, false);
        let pruned = exceptional_grid(root, &grid, Traversal { workers: 2, ..Traversal::default() }, true);
        assert_eq!(plain, par);
        assert_eq!(plain, pruned);
        if root == [-2, 3, 6, 7] {
            let half = exceptional_grid(root, &grid, Traversal { half: true, ..Traversal::default() }, true);
            assert_eq!(plain, half);
        }
    }
    // windows and coverage under a half walk
    let q = Quadruple([-2, 3, 6, 7]);
    let p = primes();
    let cfg = ScanConfig {
        target: Some(Target::Exceptional),
        window: Some((200_000, 250_000)),
        budget: 1 << 20,
        coverage: Some((40, vec![5, 7, 11, 13])),
        sizes: true,
        ..Default::default()
    };
    let full = scan_components(&q, 249_999, &cfg, &p, Traversal::default()).unwrap();
    let half = scan_components(&q, 249_999, &cfg, &p, Traversal { half: true, workers: 2, ..Traversal::default() }).unwrap();
    assert_eq!(full.window, half.window);
    assert_eq!(full.exceptional, half.exceptional);
    assert_eq!(full.rooted, half.rooted);
    assert_eq!(full.largest_rooted.map(|l| l.0), half.largest_rooted.map(|l| l.0));
    let sets = |r: &ScanReport| {
        let mut v: Vec<(i64, u64, Vec<usize>)> = r.coverage.iter().map(|c| (c.smallest_prime, c.members, c.residues.iter().map(|s| s.len()).collect())).collect();
        v.sort();
        v
    };
    let (fs, hs) = (sets(&full), sets(&half));
    // every component has a mirror twin, which the half walk does not see
    let mut doubled: Vec<_> = hs.iter().filter(|c| c.0 != 3).flat_map(|c| [c.clone(), c.clone()]).collect();
    doubled.extend(hs.iter().filter(|c| c.0 == 3).cloned());
    doubled.sort();
    assert_eq!(fs, doubled);
}

#[test]
fn members_grow_with_the_bound() {
    let p = primes();
    let q = Quadruple([-6, 11, 14, 15]);
    let sizes = scan_components(&q, 1_000, &ScanConfig { sizes: true, ..Default::default() }, &p, Traversal::default()).unwrap();
    let mut seeds = vec![Target::Exceptional];
    let labels = label_circles(&q, 1_000, &p).unwrap();
    let mut rooted: Vec<Target> = labels.iter().flatten().copied().filter(|t| *t != Target::Exceptional).collect();
    rooted.sort();
    rooted.dedup();
    seeds.extend(rooted.into_iter().take(3));
    assert!(sizes.rooted >= 3);
    let grid = [1_000, 10_000, 100_000, 1_000_000];
    for target in seeds {
        let cfg = ScanConfig { target: Some(target), grid: grid.to_vec(), ..Default::default() };
        let rep = scan_components(&q, 1_000_000, &cfg, &p, Traversal::with_workers(2)).unwrap();
        assert!(rep.grid.windows(2).all(|w| w[0].c_pr < w[1].c_pr), "{target:?}: {:?}", rep.grid);
    }
    // members at a smaller bound stay in one component at a larger one
    let small = collect_circles(&q, 2_000, 1 << 20).unwrap();
    let big = collect_circles(&q, 20_000, 1 << 22).unwrap();
    let (cs, cb) = (prime_classes(&small), prime_classes(&big));
    let mut seen: HashMap<u32, u32> = HashMap::new();
    // traversal order is the same, so ids of the smaller table carry over
    for (i, rec) in small.circles.iter().enumerate() {
        let j = big.circles.iter().position(|b| b.birth == rec.birth && b.curvature == rec.curvature && b.depth == rec.depth).unwrap();
        if let (Some(a), Some(b)) = (cs[i], cb[j]) {
            assert_eq!(*seen.entry(a).or_insert(b), b);
        }
    }
}

#[test]
fn peoples_component_golden() {
    let s = extract_component(&Quadruple([-6, 11, 14, 15]), Seed::Curvature(11), 10_000, 1 << 20).unwrap();
    let golden = ComponentSnapshot::from_json(include_str!("golden/peoples_11_bound_10000.json")).unwrap();
    assert_eq!(s.members, golden.members);
    assert_eq!(s.thickening, golden.thickening);
    assert_eq!(s.root_quadruple, golden.root_quadruple);
    assert!(s.members.iter().all(|m| !s.thickening.contains(m) || s.members.iter().filter(|x| *x == m).count() > 0));
    let ids: std::collections::HashSet<u32> = s.member_ids.iter().copied().collect();
    assert!(s.thickening_ids.iter().all(|i| !ids.contains(i)));
}

#[test]
fn extraction_edge_cases() {
    let q = Quadruple([-6, 11, 14, 15]);
    assert!(matches!(extract_component(&q, Seed::Curvature(15), 100, 1 << 16), Err(apollonian::Error::SeedNotPrime(15))));
    // below every prime neighbour of 11 the component is a singleton
    let s = extract_component(&q, Seed::Curvature(11), 15, 1 << 16).unwrap();
    assert_eq!(s.members, vec![11]);
    assert_eq!(s.thickening, vec![-6, 14, 15]);
}

#[test]
fn residue_coverage_examples() {
    let q = Quadruple([-6, 11, 14, 15]);
    let s = extract_component(&q, Seed::Curvature(11), 10_000, 1 << 20).unwrap();
    let c2 = residue_coverage(&s, &q, 2, false).unwrap();
    assert_eq!(c2.attained.members(), vec![1]);
    assert!(c2.missing.is_empty());
    let c24 = residue_coverage(&s, &q, 24, true).unwrap();
    assert!(c24.attained.is_subset(&c24.expected));
    assert!(c24.to_csv().starts_with("modulus,residue,present\n24,0,"));

    let cfg = ScanConfig { coverage: Some((11, vec![7])), ..Default::default() };
    let rep = scan_components(&q, 1_000_000, &cfg, &primes(), Traversal::with_workers(2)).unwrap();
    let e = rep.coverage.iter().find(|c| c.key.is_none()).unwrap();
    assert_eq!(e.smallest_prime, 11);
    assert_eq!(e.residues[0].members(), vec![1, 2, 3, 4, 5, 6]);
}

#[test]
fn root_counts() {
    let p = primes();
    for root in [[-2, 3, 6, 7], [-6, 11, 14, 15]] {
        let q = Quadruple(root);
        let at_root = count_prime_roots(&q, Quadruple::max(&q), &p, Traversal::default()).unwrap();
        assert_eq!(at_root.quadruples, 1 + apollonian::enumerate::degenerate_slots(&q).len() as u64);
        let a = count_prime_roots(&q, 1_000_000, &p, Traversal::default()).unwrap();
        let b = count_prime_roots(&q, 1_000_000, &p, Traversal { workers: 3, split_depth: 4, half: false }).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.roots, a.sigma1 - a.sigma2);
        assert!(a.roots > 0);
        let small = count_prime_roots(&q, 100_000, &p, Traversal::default()).unwrap();
        let direct = collect_quadruples(&q, 100_000);
        assert_eq!(small.quadruples, direct.len() as u64);
        assert_eq!(small.roots, direct.iter().filter(|q| is_prime_root(q)).count() as u64);
    }
    for root in [[-2, 3, 6, 7], [-1, 2, 2, 3]] {
        let q = Quadruple(root);
        let full = count_prime_roots(&q, 300_000, &p, Traversal::default()).unwrap();
        let half = count_prime_roots(&q, 300_000, &p, Traversal { half: true, ..Traversal::default() }).unwrap();
        assert_eq!(full, half);
    }
}

/// Every configuration with maximum at most `bound`, by breadth-first search
/// from the root with the root's own swaps allowed.
fn collect_quadruples(root: &Quadruple, bound: i64) -> Vec<Quadruple> {
    let mut out = vec![*root];
    let mut level = vec![(*root, usize::MAX)];
    for k in apollonian::enumerate::degenerate_slots(root) {
        let mirror = root.swap(SwapIndex::from_zero_based(k)).unwrap();
        out.push(mirror);
        level.push((mirror, k));
    }
    while !level.is_empty() {
        let mut next = Vec::new();
        for (q, last) in level {
            for k in 0..4 {
                if k == last {
                    continue;
                }
                let c = q.swap(SwapIndex::from_zero_based(k)).unwrap();
                if c.0[k] > q.0[k] && c.0[k] <= bound {
                    out.push(c);
                    next.push((c, k));
                }
            }
        }
        level = next;
    }
    out
}

/// Recount of the second layer by scanning the chosen forms over a box.
fn kappa2_recount(k: &Kappa2) -> u64 {
    let mut all: Vec<i64> = Vec::new();
    for lf in &k.layer {
        let f = lf.form.form;
        let (a, b, c) = (f.a as f64, f.b as f64, f.c as f64);
        let lam = (a + c) / 2.0 - (((a - c) / 2.0).powi(2) + (b / 2.0).powi(2)).sqrt();
        let r = (((k.bound + lf.alpha.abs()) as f64) / lam).sqrt().ceil() as i64 + 1;
        let mut vals: Vec<i64> = Vec::new();
        for x in -r..=r {
            for y in -r..=r {
                if num_gcd(x, y) != 1 {
                    continue;
                }
                let v = lf.form.value(x, y);
                if v <= k.bound as i128 {
                    vals.push(v as i64);
                }
            }
        }
        vals.sort_unstable();
        vals.dedup();
        all = merge_sorted(&all, &vals);
    }
    all.len() as u64
}

fn num_gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        num_gcd(b, a % b)
    }
}

fn merge_sorted(a: &[i64], b: &[i64]) -> Vec<i64> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len() + b.len());
    while i < a.len() || j < b.len() {
        let next = if j == b.len() || (i < a.len() && a[i] <= b[j]) {
            i += 1;
            a[i - 1]
        } else {
            j += 1;
            b[j - 1]
        };
        if out.last() != Some(&next) {
            out.push(next);
        }
    }
    out
}

#[test]
fn kappa2_small() {
    let q = Quadruple([-6, 11, 14, 15]);
    let slot = SwapIndex::new(2).unwrap();
    let none = two_layer_kappa2(&q, slot, 13, 10_000, 0, 1 << 20).unwrap();
    assert_eq!(none.distinct, 0);
    let k = two_layer_kappa2(&q, slot, 1_000, 20_000, 5, 1 << 20).unwrap();
    assert!(!k.layer.is_empty());
    assert!(k.layer.iter().all(|l| common::trial_prime(l.alpha)));
    assert!(k.distinct <= k.total);
    assert_eq!(k.distinct, kappa2_recount(&k));
    assert_eq!(k.pairs.len(), 5);
    for lf in &k.layer {
        // the chosen form is centred on a circle of curvature alpha tangent to 11
        assert_eq!(lf.form.shift, lf.alpha);
        assert_eq!(lf.form.form.disc(), -4 * (lf.alpha as i128).pow(2));
    }
}
