//! The skew product graph, admissible path counting, and the enumeration oracle.

use itertools::Itertools;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numtheory::{gcd, mod_inverse};
use crate::IntMatrix;

/// Largest order accepted; keeps every formula numerator well inside i128.
pub const MAX_ORDER: u64 = 65_536;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("order r={0} outside [2, {MAX_ORDER}]")]
    OrderOutOfRange(u64),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("vertex {0} is not kept")]
    NotKept(Vertex),
    #[error("invalid step request: {0}")]
    BadSteps(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Vertex {
    pub level: usize,
    pub residue: u64,
}

impl Vertex {
    pub fn new(level: usize, residue: u64) -> Self {
        Vertex { level, residue }
    }
}

impl std::fmt::Display for Vertex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(v{}, {})", self.level, self.residue)
    }
}

/// Which level (if any) carries a weight that is not a unit mod r, and its gcd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pattern {
    pub dim_index: usize,
    pub position: Option<usize>,
    pub n: u64,
}

impl std::fmt::Display for Pattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.position {
            Some(k) => write!(
                f,
                "dim {} n={} position {}",
                2 * self.dim_index + 1,
                self.n,
                k
            ),
            None => write!(f, "dim {} coprime", 2 * self.dim_index + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeightSystem {
    order: u64,
    weights: Vec<u64>,
    residues: Vec<u64>,
    gcds: Vec<u64>,
}

impl WeightSystem {
    pub fn new(order: u64, weights: &[u64]) -> Result<Self, GraphError> {
        if !(2..=MAX_ORDER).contains(&order) {
            return Err(GraphError::OrderOutOfRange(order));
        }
        if !(2..=4).contains(&weights.len()) {
            return Err(GraphError::InvalidWeights(format!(
                "expected 2, 3 or 4 weights, got {}",
                weights.len()
            )));
        }
        if weights.contains(&0) {
            return Err(GraphError::InvalidWeights(
                "weights must be positive".into(),
            ));
        }
        let residues: Vec<u64> = weights.iter().map(|w| w % order).collect();
        let gcds: Vec<u64> = residues
            .iter()
            .map(|&m| gcd(m as i128, order as i128) as u64)
            .collect();
        if gcds.iter().filter(|&&g| g != 1).count() > 1 {
            return Err(GraphError::InvalidWeights(format!(
                "more than one weight shares a factor with r={order}: {weights:?}"
            )));
        }
        Ok(WeightSystem {
            order,
            weights: weights.to_vec(),
            residues,
            gcds,
        })
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }

    /// Weights reduced into `[0, r)`.
    pub fn residues(&self) -> &[u64] {
        &self.residues
    }

    pub fn gcds(&self) -> &[u64] {
        &self.gcds
    }

    pub fn levels(&self) -> usize {
        self.weights.len()
    }

    pub fn dim_index(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn lens_dimension(&self) -> usize {
        2 * self.dim_index() + 1
    }

    pub fn position(&self) -> Option<usize> {
        self.gcds.iter().position(|&g| g != 1)
    }

    pub fn n(&self) -> u64 {
        self.position().map_or(1, |k| self.gcds[k])
    }

    pub fn pattern(&self) -> Pattern {
        Pattern {
            dim_index: self.dim_index(),
            position: self.position(),
            n: self.n(),
        }
    }

    /// Number of vertices of the reduced graph.
    pub fn size(&self) -> usize {
        self.n() as usize + self.dim_index()
    }

    /// Kept vertices in level-major order.
    pub fn kept_vertices(&self) -> Vec<Vertex> {
        (0..self.levels())
            .flat_map(|i| (0..self.gcds[i]).map(move |b| Vertex::new(i, b)))
            .collect()
    }

    pub fn index_of(&self, v: Vertex) -> Option<usize> {
        if v.level >= self.levels() || v.residue >= self.gcds[v.level] {
            return None;
        }
        let before: u64 = self.gcds[..v.level].iter().sum();
        Some((before + v.residue) as usize)
    }

    pub fn level_of_index(&self, idx: usize) -> usize {
        self.kept_vertices()[idx].level
    }

    /// Inverse of the i-th weight in `[0, r)`.
    pub fn inverse_mod_r(&self, i: usize) -> Option<i128> {
        mod_inverse(self.residues[i] as i128, self.order as i128)
            .ok()
            .map(|x| x.value)
    }

    /// Inverse of the i-th weight modulo n, in `[0, n)`.
    pub fn inverse_mod_n(&self, i: usize) -> Option<i128> {
        mod_inverse(self.residues[i] as i128, self.n() as i128)
            .ok()
            .map(|x| x.value)
    }
}

impl std::fmt::Display for WeightSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "r={} ({})", self.order, self.weights.iter().join(","))
    }
}

/// A set of levels, as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LevelSet(u8);

impl LevelSet {
    pub fn all(levels: usize) -> Self {
        LevelSet(((1u16 << levels) - 1) as u8)
    }

    pub fn of(levels: &[usize]) -> Self {
        LevelSet(levels.iter().fold(0, |acc, &l| acc | (1 << l)))
    }

    pub fn contains(self, level: usize) -> bool {
        self.0 & (1 << level) != 0
    }

    pub fn with(self, level: usize) -> Self {
        LevelSet(self.0 | (1 << level))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub source: Vertex,
    pub range: Vertex,
}

#[derive(Debug, Clone)]
pub struct SkewProductGraph {
    ws: WeightSystem,
}

pub fn build_skew(ws: &WeightSystem) -> SkewProductGraph {
    SkewProductGraph { ws: ws.clone() }
}

impl SkewProductGraph {
    pub fn weights(&self) -> &WeightSystem {
        &self.ws
    }

    pub fn order(&self) -> u64 {
        self.ws.order
    }

    pub fn levels(&self) -> usize {
        self.ws.levels()
    }

    pub fn vertex_count(&self) -> usize {
        self.levels() * self.order() as usize
    }

    pub fn is_kept(&self, v: Vertex) -> bool {
        v.level < self.levels() && v.residue < self.ws.gcds[v.level]
    }

    /// Edge `(e_ij, k)` runs from `(v_i, k - m_i)` to `(v_j, k)`.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        let r = self.order();
        let l = self.levels();
        (0..l).flat_map(move |i| {
            let m = self.ws.residues[i];
            (i..l).flat_map(move |j| {
                (0..r).map(move |k| Edge {
                    source: Vertex::new(i, (k + r - m) % r),
                    range: Vertex::new(j, k),
                })
            })
        })
    }

    pub fn successors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        let next = (v.residue + self.ws.residues[v.level]) % self.order();
        (v.level..self.levels()).map(move |j| Vertex::new(j, next))
    }

    /// The loop orbits of one level, each starting at its kept vertex.
    pub fn loop_cycles(&self, level: usize) -> Vec<Vec<u64>> {
        let r = self.order();
        let m = self.ws.residues[level];
        let g = self.ws.gcds[level];
        (0..g)
            .map(|b| (0..r / g).map(|i| (b + i * m) % r).collect())
            .collect()
    }

    /// Counts of admissible paths into `target` from every vertex, moving only
    /// through levels in `allowed`.
    pub fn paths_to(&self, target: Vertex, allowed: LevelSet) -> PathTable {
        let r = self.order() as usize;
        let top = target.level;
        let mut table = PathTable {
            target,
            from: vec![Vec::new(); self.levels()],
            visits: 0,
        };
        // value seen by a predecessor: indicator at kept vertices, path count otherwise
        let mut through: Vec<Vec<u128>> = vec![Vec::new(); self.levels()];
        for l in (0..=top).rev().filter(|&l| allowed.contains(l)) {
            let m = self.ws.residues[l] as usize;
            let g = self.ws.gcds[l] as usize;
            let cycle_len = r / g;
            let mut out = vec![0u128; r];
            let higher = |s: usize, through: &Vec<Vec<u128>>| -> u128 {
                ((l + 1)..=top)
                    .filter(|&j| allowed.contains(j))
                    .map(|j| through[j][s])
                    .sum()
            };
            for b in 0..g {
                // walk the orbit backwards so the same-level successor is ready
                let mut next_through = u128::from(target == Vertex::new(l, b as u64));
                for i in (0..cycle_len).rev() {
                    let s = (b + i * m) % r;
                    let succ = (s + m) % r;
                    out[s] = next_through + higher(succ, &through);
                    table.visits += 1;
                    next_through = out[s];
                }
            }
            let mut thr = out.clone();
            for (b, x) in thr.iter_mut().take(g).enumerate() {
                *x = u128::from(target == Vertex::new(l, b as u64));
            }
            through[l] = thr;
            table.from[l] = out;
        }
        table
    }

    /// Counts of admissible paths from `source` to every vertex, moving only
    /// through levels in `allowed`. Entries at kept vertices are path counts
    /// ending there; the source's own entry is its loop.
    pub fn paths_from(&self, source: Vertex, allowed: LevelSet) -> PathTable {
        let r = self.order() as usize;
        let low = source.level;
        let mut table = PathTable {
            target: source,
            from: vec![Vec::new(); self.levels()],
            visits: 0,
        };
        // value passed on to successors: indicator at kept vertices, path count otherwise
        let mut through: Vec<Vec<u128>> = vec![Vec::new(); self.levels()];
        for l in (low..self.levels()).filter(|&l| allowed.contains(l)) {
            let m = self.ws.residues[l] as usize;
            let g = self.ws.gcds[l] as usize;
            let cycle_len = r / g;
            let mut into = vec![0u128; r];
            let lower = |s: usize, through: &Vec<Vec<u128>>| -> u128 {
                (low..l)
                    .filter(|&i| allowed.contains(i))
                    .map(|i| {
                        let mi = self.ws.residues[i] as usize;
                        through[i][(s + r - mi) % r]
                    })
                    .sum()
            };
            for b in 0..g {
                let mut prev_through = u128::from(source == Vertex::new(l, b as u64));
                for i in 1..=cycle_len {
                    let s = (b + i * m) % r;
                    into[s] = prev_through + lower(s, &through);
                    table.visits += 1;
                    prev_through = into[s];
                }
            }
            let mut thr = into.clone();
            for (b, x) in thr.iter_mut().take(g).enumerate() {
                *x = u128::from(source == Vertex::new(l, b as u64));
            }
            through[l] = thr;
            table.from[l] = into;
        }
        table
    }

    /// Number of kept vertices on `level`.
    fn check_level(&self, level: usize) -> Result<u64, GraphError> {
        if level >= self.levels() {
            return Err(GraphError::BadSteps(format!("no level {level}")));
        }
        Ok(self.ws.gcds[level])
    }

    fn check_kept(&self, v: Vertex) -> Result<(), GraphError> {
        if self.is_kept(v) {
            Ok(())
        } else {
            Err(GraphError::NotKept(v))
        }
    }
}

#[derive(Debug, Clone)]
pub struct PathTable {
    target: Vertex,
    from: Vec<Vec<u128>>,
    visits: u64,
}

impl PathTable {
    /// For a table from `paths_to`: paths from `v` to the target.
    pub fn count_from(&self, v: Vertex) -> u128 {
        if v.level > self.target.level {
            return 0;
        }
        self.from[v.level]
            .get(v.residue as usize)
            .copied()
            .unwrap_or(0)
    }

    /// For a table from `paths_from`: paths from the source to `v`.
    pub fn count_to(&self, v: Vertex) -> u128 {
        self.from
            .get(v.level)
            .and_then(|row| row.get(v.residue as usize))
            .copied()
            .unwrap_or(0)
    }

    /// Number of states evaluated while filling the table.
    pub fn visits(&self) -> u64 {
        self.visits
    }
}

/// Admissible paths from `from` to `to`: the interior avoids every kept vertex.
pub fn count_admissible(
    g: &SkewProductGraph,
    from: Vertex,
    to: Vertex,
) -> Result<u128, GraphError> {
    count_restricted(g, from, to, LevelSet::all(g.levels()))
}

/// Admissible paths that stay inside the levels of `allowed`.
pub fn count_restricted(
    g: &SkewProductGraph,
    from: Vertex,
    to: Vertex,
    allowed: LevelSet,
) -> Result<u128, GraphError> {
    g.check_kept(from)?;
    g.check_kept(to)?;
    if from.level > to.level || !allowed.contains(from.level) || !allowed.contains(to.level) {
        return Ok(0);
    }
    Ok(g.paths_to(to, allowed).count_from(from))
}

/// Admissible paths whose intermediate levels are exactly `via`.
pub fn count_via(
    g: &SkewProductGraph,
    from: Vertex,
    to: Vertex,
    via: &[usize],
) -> Result<u128, GraphError> {
    g.check_kept(from)?;
    g.check_kept(to)?;
    if via.iter().any(|&l| l <= from.level || l >= to.level) || !via.iter().all_unique() {
        return Ok(0);
    }
    let base = LevelSet::of(&[from.level, to.level]);
    let mut total: i128 = 0;
    for sub in via.iter().copied().powerset() {
        let allowed = sub.iter().fold(base, |s, &l| s.with(l));
        let c = g.paths_to(to, allowed).count_from(from) as i128;
        if (via.len() - sub.len()).is_multiple_of(2) {
            total += c;
        } else {
            total -= c;
        }
    }
    Ok(total as u128)
}

fn signed_sum<F>(
    from_level: usize,
    to_level: usize,
    via: &[usize],
    mut table: F,
) -> Option<Vec<i128>>
where
    F: FnMut(LevelSet) -> Vec<i128>,
{
    if via.iter().any(|&l| l <= from_level || l >= to_level) || !via.iter().all_unique() {
        return None;
    }
    let base = LevelSet::of(&[from_level, to_level]);
    let mut total: Option<Vec<i128>> = None;
    for sub in via.iter().copied().powerset() {
        let allowed = sub.iter().fold(base, |s, &l| s.with(l));
        let sign = if (via.len() - sub.len()).is_multiple_of(2) {
            1
        } else {
            -1
        };
        let part = table(allowed);
        let acc = total.get_or_insert_with(|| vec![0; part.len()]);
        for (a, p) in acc.iter_mut().zip(part) {
            *a += sign * p;
        }
    }
    total
}

/// Like `count_via`, from `from` to every kept vertex of `to_level` at once.
pub fn count_via_from(
    g: &SkewProductGraph,
    from: Vertex,
    via: &[usize],
    to_level: usize,
) -> Result<Vec<u128>, GraphError> {
    g.check_kept(from)?;
    let kept = g.check_level(to_level)?;
    if to_level <= from.level {
        return Err(GraphError::BadSteps(format!(
            "level {to_level} is not above {from}"
        )));
    }
    let counts = signed_sum(from.level, to_level, via, |allowed| {
        let t = g.paths_from(from, allowed);
        (0..kept)
            .map(|b| t.count_to(Vertex::new(to_level, b)) as i128)
            .collect()
    });
    Ok(counts.map_or(vec![0; kept as usize], |c| {
        c.into_iter().map(|x| x as u128).collect()
    }))
}

/// Like `count_via`, from every kept vertex of `from_level` to `to` at once.
pub fn count_via_into(
    g: &SkewProductGraph,
    from_level: usize,
    via: &[usize],
    to: Vertex,
) -> Result<Vec<u128>, GraphError> {
    g.check_kept(to)?;
    let kept = g.check_level(from_level)?;
    if from_level >= to.level {
        return Err(GraphError::BadSteps(format!(
            "level {from_level} is not below {to}"
        )));
    }
    let counts = signed_sum(from_level, to.level, via, |allowed| {
        let t = g.paths_to(to, allowed);
        (0..kept)
            .map(|b| t.count_from(Vertex::new(from_level, b)) as i128)
            .collect()
    });
    Ok(counts.map_or(vec![0; kept as usize], |c| {
        c.into_iter().map(|x| x as u128).collect()
    }))
}

/// Admissible paths touching exactly `k - 1` intermediate levels.
pub fn count_kstep(
    g: &SkewProductGraph,
    from: Vertex,
    to: Vertex,
    k: usize,
) -> Result<u128, GraphError> {
    g.check_kept(from)?;
    g.check_kept(to)?;
    if k == 0 {
        return Err(GraphError::BadSteps("k must be at least 1".into()));
    }
    if from.level > to.level {
        return Ok(0);
    }
    let inner: Vec<usize> = (from.level + 1..to.level).collect();
    let mut total = 0;
    for via in inner.into_iter().combinations(k - 1) {
        total += count_via(g, from, to, &via)?;
    }
    Ok(total)
}

/// The reduced-graph adjacency matrix with vertices in level-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LensMatrix {
    pub ws: WeightSystem,
    pub vertices: Vec<Vertex>,
    pub a: IntMatrix,
}

impl LensMatrix {
    pub fn size(&self) -> usize {
        self.vertices.len()
    }

    /// `A - I`.
    pub fn b(&self) -> IntMatrix {
        &self.a - IntMatrix::identity(self.size(), self.size())
    }
}

pub fn adjacency_by_enumeration(ws: &WeightSystem) -> LensMatrix {
    let g = build_skew(ws);
    let vertices = ws.kept_vertices();
    let size = vertices.len();
    let mut a = DMatrix::<i128>::zeros(size, size);
    let all = LevelSet::all(ws.levels());
    for (col, &v) in vertices.iter().enumerate() {
        let table = g.paths_to(v, all);
        for (row, &u) in vertices.iter().enumerate() {
            a[(row, col)] = table.count_from(u) as i128;
        }
    }
    LensMatrix {
        ws: ws.clone(),
        vertices,
        a,
    }
}

/// `J M^T J`, with J the exchange matrix.
pub fn anti_transpose(m: &IntMatrix) -> IntMatrix {
    let (rows, cols) = m.shape();
    IntMatrix::from_fn(cols, rows, |i, j| m[(rows - 1 - j, cols - 1 - i)])
}

/// Weights with the two middle entries exchanged.
pub fn swap_middle(ws: &WeightSystem) -> Result<WeightSystem, GraphError> {
    if ws.levels() != 4 {
        return Err(GraphError::InvalidWeights("swap needs four weights".into()));
    }
    let w = ws.weights();
    WeightSystem::new(ws.order(), &[w[0], w[2], w[1], w[3]])
}

/// Rebuilds `A(ws)` from the matrix of `swap_middle(ws)` by anti-transposing
/// and then renumbering the kept vertices of the wide level.
///
/// `ws` must be all-coprime or have its non-unit weight at position 1.
pub fn anti_transpose_partner(
    partner: &IntMatrix,
    ws: &WeightSystem,
) -> Result<IntMatrix, GraphError> {
    match ws.position() {
        None | Some(1) if ws.levels() == 4 => {}
        _ => {
            return Err(GraphError::InvalidWeights(format!(
                "{ws} is not all-coprime or non-unit at position 1"
            )))
        }
    }
    let c = anti_transpose(partner);
    let n = ws.n();
    let m2 = ws.residues()[2];
    let size = ws.size();
    let perm: Vec<usize> = (0..size)
        .map(|i| {
            if (1..=n as usize).contains(&i) {
                let b = (i - 1) as u64;
                let rel = (m2 % n + n - b % n) % n;
                1 + (n - 1 - rel) as usize
            } else {
                i
            }
        })
        .collect();
    Ok(IntMatrix::from_fn(size, size, |i, j| c[(perm[i], perm[j])]))
}
