//! The poset of a lens graph, the group SL_P(1, Z), and equivalence certificates
//! `U B V = B'`.

use itertools::Itertools;
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{self, ClassifyError};
use crate::intsolve::{self, LinearSystem, SolveError};
use crate::lensgraph::WeightSystem;
use crate::IntMatrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SlpError {
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("position {position} out of range for {levels} levels")]
    BadPosition { position: usize, levels: usize },
    #[error("weight systems are not isomorphic")]
    NotIsomorphic,
    #[error("integer overflow while checking a certificate")]
    Overflow,
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

/// The order on reduced-graph vertices: `u <= v` iff `u = v` or u sits on a lower level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosetP {
    levels: Vec<usize>,
    leq: Vec<Vec<bool>>,
}

/// Builds the poset from its covering relations: a chain below the block of
/// `n` parallel elements at `position`, a chain above it, and every parallel
/// element sitting over the chain below and under the chain above.
#[allow(clippy::needless_range_loop)]
pub fn build_poset(n: usize, dim_index: usize, position: usize) -> Result<PosetP, SlpError> {
    if position > dim_index || n == 0 || !(1..=3).contains(&dim_index) {
        return Err(SlpError::BadPosition {
            position,
            levels: dim_index + 1,
        });
    }
    let size = n + dim_index;
    let (lo, hi) = (position, position + n);
    let level = |e: usize| {
        if e < lo {
            e
        } else if e < hi {
            position
        } else {
            e - n + 1
        }
    };
    let mut leq = vec![vec![false; size]; size];
    for (e, row) in leq.iter_mut().enumerate() {
        row[e] = true;
    }
    for e in 1..lo {
        leq[e - 1][e] = true;
    }
    for p in lo..hi {
        if lo > 0 {
            leq[lo - 1][p] = true;
        }
        if hi < size {
            leq[p][hi] = true;
        }
    }
    for e in hi + 1..size {
        leq[e - 1][e] = true;
    }
    for k in 0..size {
        for i in 0..size {
            if leq[i][k] {
                for j in 0..size {
                    if leq[k][j] {
                        leq[i][j] = true;
                    }
                }
            }
        }
    }
    Ok(PosetP {
        levels: (0..size).map(level).collect(),
        leq,
    })
}

/// The poset matching a weight system's reduced graph.
pub fn poset_for(ws: &WeightSystem) -> PosetP {
    build_poset(ws.n() as usize, ws.dim_index(), ws.position().unwrap_or(0))
        .expect("valid weight system")
}

impl PosetP {
    pub fn size(&self) -> usize {
        self.levels.len()
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.leq[i][j]
    }

    pub fn level(&self, i: usize) -> usize {
        self.levels[i]
    }

    /// Pairs `i < j` with `i <= j` in the order, row-major.
    pub fn strict_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.size())
            .cartesian_product(0..self.size())
            .filter(|&(i, j)| i != j && self.leq[i][j])
            .collect()
    }
}

pub fn is_member(m: &IntMatrix, poset: &PosetP) -> Result<bool, SlpError> {
    let s = poset.size();
    if m.shape() != (s, s) {
        return Err(SlpError::SizeMismatch(format!(
            "{:?} vs poset of {s}",
            m.shape()
        )));
    }
    for i in 0..s {
        for j in 0..s {
            let v = m[(i, j)];
            let ok = if i == j {
                v == 1
            } else {
                v == 0 || (i < j && poset.leq(i, j))
            };
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlpCertificate {
    pub u: IntMatrix,
    pub v: IntMatrix,
}

impl SlpCertificate {
    pub fn identity(size: usize) -> Self {
        SlpCertificate {
            u: IntMatrix::identity(size, size),
            v: IntMatrix::identity(size, size),
        }
    }

    pub fn is_valid(&self, poset: &PosetP) -> Result<bool, SlpError> {
        Ok(is_member(&self.u, poset)? && is_member(&self.v, poset)?)
    }
}

fn checked_product(a: &IntMatrix, b: &IntMatrix) -> Result<IntMatrix, SlpError> {
    let (n, k) = a.shape();
    let m = b.ncols();
    let mut out = IntMatrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            let mut acc: i128 = 0;
            for t in 0..k {
                acc = a[(i, t)]
                    .checked_mul(b[(t, j)])
                    .and_then(|p| acc.checked_add(p))
                    .ok_or(SlpError::Overflow)?;
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

pub fn verify_certificate(
    u: &IntMatrix,
    b: &IntMatrix,
    v: &IntMatrix,
    target: &IntMatrix,
) -> Result<bool, SlpError> {
    let s = b.nrows();
    for (name, m) in [("U", u), ("B", b), ("V", v), ("target", target)] {
        if m.shape() != (s, s) {
            return Err(SlpError::SizeMismatch(format!(
                "{name} is {:?}, expected {s}x{s}",
                m.shape()
            )));
        }
    }
    Ok(checked_product(&checked_product(u, b)?, v)? == *target)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Coord {
    U(usize, usize),
    V(usize, usize),
}

/// Unknown entries of U and V that can change `U B V`, and the ones to fix so
/// that what remains is linear.
struct Unknowns {
    coords: Vec<Coord>,
    coupling: Vec<Coord>,
}

impl Unknowns {
    fn of(b: &IntMatrix, poset: &PosetP) -> Self {
        let s = poset.size();
        let row_live: Vec<bool> = (0..s).map(|a| (0..s).any(|c| b[(a, c)] != 0)).collect();
        let col_live: Vec<bool> = (0..s).map(|c| (0..s).any(|a| b[(a, c)] != 0)).collect();
        let pairs = poset.strict_pairs();
        let us: Vec<Coord> = pairs
            .iter()
            .filter(|p| row_live[p.1])
            .map(|&(i, a)| Coord::U(i, a))
            .collect();
        let vs: Vec<Coord> = pairs
            .iter()
            .filter(|p| col_live[p.0])
            .map(|&(c, j)| Coord::V(c, j))
            .collect();
        let links = |&u: &Coord, &v: &Coord| match (u, v) {
            (Coord::U(_, a), Coord::V(c, _)) => b[(a, c)] != 0,
            _ => false,
        };
        let cu: Vec<Coord> = us
            .iter()
            .filter(|u| vs.iter().any(|v| links(u, v)))
            .copied()
            .collect();
        let cv: Vec<Coord> = vs
            .iter()
            .filter(|v| us.iter().any(|u| links(u, v)))
            .copied()
            .collect();
        let coupling = if cv.len() < cu.len() { cv } else { cu };
        Unknowns {
            coords: us.into_iter().chain(vs).collect(),
            coupling,
        }
    }

    fn free(&self) -> Vec<Coord> {
        self.coords
            .iter()
            .filter(|c| !self.coupling.contains(c))
            .copied()
            .collect()
    }

    /// The linear system in the free unknowns once the coupling values are fixed.
    fn system(&self, b: &IntMatrix, target: &IntMatrix, fixed: &[i128]) -> LinearSystem {
        let s = b.nrows();
        let free = self.free();
        let mut u = IntMatrix::identity(s, s);
        let mut v = IntMatrix::identity(s, s);
        let mut u_var = vec![vec![None; s]; s];
        let mut v_var = vec![vec![None; s]; s];
        for (c, &val) in self.coupling.iter().zip(fixed) {
            match *c {
                Coord::U(i, j) => u[(i, j)] = val,
                Coord::V(i, j) => v[(i, j)] = val,
            }
        }
        for (idx, c) in free.iter().enumerate() {
            match *c {
                Coord::U(i, j) => u_var[i][j] = Some(idx),
                Coord::V(i, j) => v_var[i][j] = Some(idx),
            }
        }
        let mut sys = LinearSystem::new(free.len());
        for i in 0..s {
            for j in 0..s {
                let mut row = vec![0i128; free.len()];
                let mut constant = 0i128;
                for a in 0..s {
                    for c in 0..s {
                        let bac = b[(a, c)];
                        if bac == 0 {
                            continue;
                        }
                        match (u_var[i][a], v_var[c][j]) {
                            (None, None) => constant += u[(i, a)] * bac * v[(c, j)],
                            (Some(x), None) => row[x] += bac * v[(c, j)],
                            (None, Some(y)) => row[y] += u[(i, a)] * bac,
                            (Some(_), Some(_)) => unreachable!("coupling leaves a bilinear term"),
                        }
                    }
                }
                sys.push(row, target[(i, j)] - constant);
            }
        }
        sys
    }

    fn assemble(&self, size: usize, fixed: &[i128], values: &[i128]) -> SlpCertificate {
        let mut cert = SlpCertificate::identity(size);
        let free = self.free();
        for (c, &val) in self
            .coupling
            .iter()
            .zip(fixed)
            .chain(free.iter().zip(values))
        {
            match *c {
                Coord::U(i, j) => cert.u[(i, j)] = val,
                Coord::V(i, j) => cert.v[(i, j)] = val,
            }
        }
        cert
    }
}

fn check_sizes(b: &IntMatrix, target: &IntMatrix, poset: &PosetP) -> Result<(), SlpError> {
    let s = poset.size();
    if b.shape() != (s, s) || target.shape() != (s, s) {
        return Err(SlpError::SizeMismatch(format!(
            "B {:?}, target {:?}, poset of {s}",
            b.shape(),
            target.shape()
        )));
    }
    Ok(())
}

/// `0, 1, -1, 2, -2, ...` up to `bound`.
fn by_magnitude(bound: i128) -> Vec<i128> {
    std::iter::once(0)
        .chain((1..=bound).flat_map(|k| [k, -k]))
        .collect()
}

/// Box-constrained search for one component of the linear system.
struct BoxSearch<'a> {
    sys: &'a LinearSystem,
    bound: i128,
    values: Vec<i128>,
    order: Vec<i128>,
}

impl BoxSearch<'_> {
    fn feasible(&self, assigned: usize) -> Result<bool, SolveError> {
        let mut rest = LinearSystem::new(self.sys.vars - assigned);
        for (row, &rhs) in self.sys.rows.iter().zip(&self.sys.rhs) {
            let mut r = rhs;
            let mut slack: i128 = 0;
            for (j, &a) in row.iter().enumerate() {
                if j < assigned {
                    r -= a * self.values[j];
                } else {
                    slack += a.abs() * self.bound;
                }
            }
            if r.abs() > slack {
                return Ok(false);
            }
            rest.push(row[assigned..].to_vec(), r);
        }
        Ok(intsolve::solve(&rest)?.is_some())
    }

    fn run(&mut self, depth: usize) -> Result<bool, SolveError> {
        if !self.feasible(depth)? {
            return Ok(false);
        }
        if depth == self.sys.vars {
            return Ok(true);
        }
        for idx in 0..self.order.len() {
            self.values[depth] = self.order[idx];
            if self.run(depth + 1)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Solves the linear part inside `[-bound, bound]`, component by component.
fn solve_in_box(sys: &LinearSystem, bound: i128) -> Result<Option<Vec<i128>>, SolveError> {
    let Some(parts) = sys.components() else {
        return Ok(None);
    };
    let mut x = vec![0i128; sys.vars];
    for (vars, part) in parts {
        let mut search = BoxSearch {
            sys: &part,
            bound,
            values: vec![0; part.vars],
            order: by_magnitude(bound),
        };
        if !search.run(0)? {
            return Ok(None);
        }
        for (&v, &val) in vars.iter().zip(&search.values) {
            x[v] = val;
        }
    }
    Ok(Some(x))
}

/// Exhaustive search for a certificate with every entry in `[-bound, bound]`.
///
/// Unknowns that cannot affect `U B V` are left at 0. `None` does not prove
/// that no certificate exists.
pub fn bounded_search(
    b: &IntMatrix,
    target: &IntMatrix,
    poset: &PosetP,
    bound: u32,
) -> Result<Option<SlpCertificate>, SlpError> {
    check_sizes(b, target, poset)?;
    let bound = bound as i128;
    let unknowns = Unknowns::of(b, poset);
    let fixings: Vec<Vec<i128>> = unknowns
        .coupling
        .iter()
        .map(|_| by_magnitude(bound))
        .multi_cartesian_product()
        .collect();
    let fixings = if fixings.is_empty() {
        vec![Vec::new()]
    } else {
        fixings
    };
    let found = fixings
        .par_iter()
        .map(|fixed| -> Result<Option<SlpCertificate>, SlpError> {
            let sys = unknowns.system(b, target, fixed);
            match solve_in_box(&sys, bound) {
                Ok(Some(x)) => Ok(Some(unknowns.assemble(poset.size(), fixed, &x))),
                Ok(None) | Err(SolveError::Overflow) => Ok(None),
                Err(e) => Err(SlpError::SizeMismatch(e.to_string())),
            }
        })
        .find_map_first(|res| match res {
            Ok(None) => None,
            other => Some(other),
        });
    match found {
        None => Ok(None),
        Some(Err(e)) => Err(e),
        Some(Ok(cert)) => {
            let cert = cert.expect("filtered");
            if verify_certificate(&cert.u, b, &cert.v, target)? && cert.is_valid(poset)? {
                Ok(Some(cert))
            } else {
                Err(SlpError::SizeMismatch(
                    "search produced an invalid certificate".into(),
                ))
            }
        }
    }
}

/// How a certificate was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    Constructive,
    BoundedSearch,
}

/// Constructs a certificate for two weight systems the invariants declare isomorphic.
///
/// The unknowns of U and V enter `U B V` linearly except for one coupling
/// entry, which only matters modulo r: the block next to it is r, so a shift by
/// r is absorbed by the neighbouring unknowns. Each value in `[0, r)` leaves an
/// exact integer linear system. If none solves, a bounded search with entries
/// in `[-fallback_bound, fallback_bound]` runs and the fallback is logged.
pub fn find_certificate(
    b: &IntMatrix,
    target: &IntMatrix,
    ws: &WeightSystem,
    ws_target: &WeightSystem,
    fallback_bound: u32,
) -> Result<Option<(SlpCertificate, Route)>, SlpError> {
    if !classify::isomorphic(ws, ws_target)?.isomorphic {
        return Err(SlpError::NotIsomorphic);
    }
    let poset = poset_for(ws);
    check_sizes(b, target, &poset)?;
    let r = ws.order() as i128;
    let unknowns = Unknowns::of(b, &poset);
    let mut fixings = unknowns
        .coupling
        .iter()
        .map(|_| 0..r)
        .multi_cartesian_product()
        .peekable();
    let single = [Vec::new()];
    let candidates: Box<dyn Iterator<Item = Vec<i128>>> = if fixings.peek().is_none() {
        Box::new(single.into_iter())
    } else {
        Box::new(fixings)
    };
    for fixed in candidates {
        let sys = unknowns.system(b, target, &fixed);
        match intsolve::solve(&sys) {
            Ok(Some(x)) => {
                let cert = unknowns.assemble(poset.size(), &fixed, &x);
                match verify_certificate(&cert.u, b, &cert.v, target) {
                    Ok(true) if cert.is_valid(&poset)? => {
                        return Ok(Some((cert, Route::Constructive)))
                    }
                    _ => {
                        warn!("constructed certificate for {ws} -> {ws_target} failed verification")
                    }
                }
            }
            Ok(None) => {}
            Err(e) => warn!("solver gave up on {ws} -> {ws_target}: {e}"),
        }
    }
    warn!("no constructive certificate for {ws} -> {ws_target}; falling back to bounded search");
    let found = bounded_search(b, target, &poset, fallback_bound)?;
    if found.is_some() {
        info!("bounded search found a certificate for {ws} -> {ws_target}");
    }
    Ok(found.map(|c| (c, Route::BoundedSearch)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lensgraph::adjacency_by_enumeration;
    use proptest::prelude::*;

    fn ws(r: u64, w: &[u64]) -> WeightSystem {
        WeightSystem::new(r, w).unwrap()
    }

    fn b_of(r: u64, w: &[u64]) -> IntMatrix {
        adjacency_by_enumeration(&ws(r, w)).b()
    }

    #[test]
    fn poset_examples() {
        let p = build_poset(2, 3, 3).unwrap();
        assert!(p.leq(0, 1) && p.leq(1, 2) && p.leq(2, 3) && p.leq(2, 4));
        assert!(!p.leq(3, 4) && !p.leq(4, 3));
        let p = build_poset(2, 3, 0).unwrap();
        assert!(!p.leq(0, 1) && !p.leq(1, 0));
        assert!(p.leq(0, 2) && p.leq(1, 2) && p.leq(2, 3) && p.leq(3, 4) && p.leq(0, 4));
        let p = build_poset(1, 3, 0).unwrap();
        assert_eq!(p.strict_pairs().len(), 6);
        assert!(build_poset(2, 3, 4).is_err());
    }

    #[test]
    fn poset_is_level_order() {
        for d in 1..=3 {
            for k in 0..=d {
                for n in 1..=6 {
                    let p = build_poset(n, d, k).unwrap();
                    assert_eq!(p.size(), n + d);
                    for i in 0..p.size() {
                        for j in 0..p.size() {
                            let want = i == j || p.level(i) < p.level(j);
                            assert_eq!(p.leq(i, j), want, "n={n} d={d} k={k} ({i},{j})");
                            if p.leq(i, j) {
                                assert!(i <= j);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn membership() {
        let p = build_poset(2, 3, 3).unwrap();
        let id = IntMatrix::identity(5, 5);
        assert!(is_member(&id, &p).unwrap());
        let mut m = id.clone();
        m[(3, 4)] = 1;
        assert!(!is_member(&m, &p).unwrap());
        let mut m = id.clone();
        m[(1, 0)] = 1;
        assert!(!is_member(&m, &p).unwrap());
        assert!(is_member(&IntMatrix::identity(4, 4), &p).is_err());
    }

    fn member_strategy() -> impl Strategy<Value = IntMatrix> {
        proptest::collection::vec(-4i128..=4, 25).prop_map(|vals| {
            let p = build_poset(2, 3, 1).unwrap();
            IntMatrix::from_fn(5, 5, |i, j| {
                if i == j {
                    1
                } else if p.leq(i, j) {
                    vals[5 * i + j]
                } else {
                    0
                }
            })
        })
    }

    proptest! {
        #[test]
        fn group_closure(a in member_strategy(), b in member_strategy()) {
            let p = build_poset(2, 3, 1).unwrap();
            prop_assert!(is_member(&(&a * &b), &p).unwrap());
            let inv = a.map(|x| x as f64).try_inverse().unwrap().map(|x| x.round() as i128);
            prop_assert_eq!(&a * &inv, IntMatrix::identity(5, 5));
            prop_assert!(is_member(&inv, &p).unwrap());
        }

        #[test]
        fn products_verify(u in member_strategy(), v in member_strategy()) {
            let b = b_of(4, &[1, 2, 1, 1]);
            let t = &u * &b * &v;
            prop_assert!(verify_certificate(&u, &b, &v, &t).unwrap());
        }
    }

    #[test]
    fn identity_is_found() {
        let b = b_of(6, &[1, 1, 1, 3]);
        let p = poset_for(&ws(6, &[1, 1, 1, 3]));
        assert_eq!(
            bounded_search(&b, &b, &p, 0).unwrap(),
            Some(SlpCertificate::identity(6))
        );
        let w = ws(6, &[1, 1, 1, 3]);
        let (c, route) = find_certificate(&b, &b, &w, &w, 2).unwrap().unwrap();
        assert_eq!(route, Route::Constructive);
        assert!(verify_certificate(&c.u, &b, &c.v, &b).unwrap());
    }

    #[test]
    fn documented_pairs() {
        let (a, t) = (ws(3, &[1, 1, 1, 1]), ws(3, &[1, 1, 2, 1]));
        let (ba, bt) = (b_of(3, &[1, 1, 1, 1]), b_of(3, &[1, 1, 2, 1]));
        assert_eq!(bounded_search(&ba, &bt, &poset_for(&a), 3).unwrap(), None);
        assert_eq!(
            find_certificate(&ba, &bt, &a, &t, 2),
            Err(SlpError::NotIsomorphic)
        );

        let (a, t) = (ws(4, &[1, 1, 1, 2]), ws(4, &[1, 3, 3, 2]));
        let (ba, bt) = (b_of(4, &[1, 1, 1, 2]), b_of(4, &[1, 3, 3, 2]));
        let c = bounded_search(&ba, &bt, &poset_for(&a), 3)
            .unwrap()
            .expect("certificate");
        assert!(verify_certificate(&c.u, &ba, &c.v, &bt).unwrap());
        assert!(find_certificate(&ba, &bt, &a, &t, 2).unwrap().is_some());

        let (a, t) = (ws(6, &[1, 1, 1, 3]), ws(12, &[1, 7, 7, 3]));
        assert!(matches!(
            find_certificate(&b_of(6, &[1, 1, 1, 3]), &b_of(12, &[1, 7, 7, 3]), &a, &t, 2),
            Err(SlpError::Classify(_))
        ));

        // shifting both middle weights by 6 keeps the matrix, shifting one does not
        assert_eq!(b_of(12, &[1, 1, 1, 3]), b_of(12, &[1, 7, 7, 3]));
        let (a, t) = (ws(12, &[1, 1, 1, 3]), ws(12, &[1, 7, 1, 3]));
        let (ba, bt) = (b_of(12, &[1, 1, 1, 3]), b_of(12, &[1, 7, 1, 3]));
        assert_ne!(ba, bt);
        let (c, _) = find_certificate(&ba, &bt, &a, &t, 2).unwrap().unwrap();
        assert!(verify_certificate(&c.u, &ba, &c.v, &bt).unwrap());

        let (a, t) = (ws(4, &[2, 1, 1, 1]), ws(4, &[2, 3, 3, 1]));
        let (ba, bt) = (b_of(4, &[2, 1, 1, 1]), b_of(4, &[2, 3, 3, 1]));
        let (c, _) = find_certificate(&ba, &bt, &a, &t, 2).unwrap().unwrap();
        assert!(verify_certificate(&c.u, &ba, &c.v, &bt).unwrap());
        assert!(c.is_valid(&poset_for(&a)).unwrap());
    }

    #[test]
    fn size_errors() {
        let b = b_of(4, &[1, 2, 1, 1]);
        let small = IntMatrix::identity(3, 3);
        assert!(verify_certificate(&small, &b, &b, &b).is_err());
        assert!(bounded_search(&b, &small, &poset_for(&ws(4, &[1, 2, 1, 1])), 1).is_err());
    }
}
