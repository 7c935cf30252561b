//! Explicit path enumeration in the skew product graph, built straight from
//! the edge rule, checked against the dynamic-programming counts.

use std::collections::BTreeMap;

use qlens::lensgraph::{
    adjacency_by_enumeration, build_skew, count_admissible, count_kstep, count_via, Vertex,
    WeightSystem,
};
use qlens::numtheory::gcd;
use qlens::sweep;

struct Brute {
    r: u64,
    m: Vec<u64>,
    g: Vec<u64>,
}

impl Brute {
    fn new(r: u64, w: &[u64]) -> Self {
        Brute {
            r,
            m: w.iter().map(|x| x % r).collect(),
            g: w.iter()
                .map(|&x| gcd((x % r) as i128, r as i128) as u64)
                .collect(),
        }
    }

    fn kept(&self, (l, s): (usize, u64)) -> bool {
        s < self.g[l]
    }

    /// For each set of intermediate levels (as a bitmask), the number of paths
    /// from `from` to `to` whose interior avoids kept vertices.
    fn paths(&self, from: (usize, u64), to: (usize, u64)) -> BTreeMap<u32, u64> {
        let mut out = BTreeMap::new();
        self.walk(from, to, from.0, to.0, 0, &mut out);
        out
    }

    fn walk(
        &self,
        at: (usize, u64),
        to: (usize, u64),
        lo: usize,
        hi: usize,
        mask: u32,
        out: &mut BTreeMap<u32, u64>,
    ) {
        let (i, s) = at;
        for j in i..self.m.len() {
            let next = (j, (s + self.m[i]) % self.r);
            if next == to {
                *out.entry(mask).or_default() += 1;
            }
            if !self.kept(next) {
                let bit = if j != lo && j != hi { 1 << j } else { 0 };
                self.walk(next, to, lo, hi, mask | bit, out);
            }
        }
    }
}

fn kept_vertices(b: &Brute) -> Vec<(usize, u64)> {
    (0..b.m.len())
        .flat_map(|l| (0..b.g[l]).map(move |s| (l, s)))
        .collect()
}

#[test]
fn adjacency_matches_explicit_paths() {
    for r in 2..=5 {
        for levels in 2..=4 {
            for w in sweep::all_tuples(r, levels) {
                let brute = Brute::new(r, &w);
                let ws = WeightSystem::new(r, &w).unwrap();
                let a = adjacency_by_enumeration(&ws).a;
                let kept = kept_vertices(&brute);
                for (x, &u) in kept.iter().enumerate() {
                    for (y, &v) in kept.iter().enumerate() {
                        let total: u64 = brute.paths(u, v).values().sum();
                        assert_eq!(a[(x, y)], total as i128, "r={r} {w:?} {u:?}->{v:?}");
                    }
                }
            }
        }
    }
}

#[test]
fn level_restricted_counts_match_explicit_paths() {
    for (r, w) in [
        (4, vec![1, 2, 3, 1]),
        (6, vec![5, 1, 1, 3]),
        (6, vec![2, 1, 5, 1]),
        (5, vec![2, 4, 1, 3]),
        (6, vec![1, 3, 5]),
    ] {
        let brute = Brute::new(r, &w);
        let ws = WeightSystem::new(r, &w).unwrap();
        let g = build_skew(&ws);
        for &u in &kept_vertices(&brute) {
            for &v in kept_vertices(&brute).iter().filter(|v| v.0 > u.0) {
                let by_mask = brute.paths(u, v);
                let (from, to) = (Vertex::new(u.0, u.1), Vertex::new(v.0, v.1));
                let inner: Vec<usize> = (u.0 + 1..v.0).collect();
                for mask in 0u32..(1 << w.len()) {
                    let via: Vec<usize> = inner
                        .iter()
                        .copied()
                        .filter(|l| mask & (1 << l) != 0)
                        .collect();
                    if via.iter().fold(0, |m, l| m | (1 << l)) != mask {
                        continue;
                    }
                    let want = by_mask.get(&mask).copied().unwrap_or(0);
                    assert_eq!(
                        count_via(&g, from, to, &via).unwrap(),
                        want as u128,
                        "{w:?} {u:?}->{v:?} via {via:?}"
                    );
                }
                for k in 1..=v.0 - u.0 {
                    let want: u64 = by_mask
                        .iter()
                        .filter(|(m, _)| m.count_ones() as usize == k - 1)
                        .map(|(_, c)| c)
                        .sum();
                    assert_eq!(
                        count_kstep(&g, from, to, k).unwrap(),
                        want as u128,
                        "{w:?} {u:?}->{v:?} k={k}"
                    );
                }
                let total: u64 = by_mask.values().sum();
                assert_eq!(count_admissible(&g, from, to).unwrap(), total as u128);
            }
        }
    }
}
