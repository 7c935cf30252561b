//! Closed-form adjacency matrices for dimensions 3, 5 and 7.
//!
//! Entries whose path count has an exact expression are tagged `Exact`; the
//! long-path corner entries are known only modulo r and are tagged `ModR`.
//! Every quotient is evaluated over a common denominator and checked for
//! integrality before anything is reduced.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lensgraph::{self, GraphError, Vertex, WeightSystem};
use crate::numtheory::mod_inverse;
use crate::IntMatrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("n={n} does not divide r={r}")]
    InvalidN { r: u64, n: u64 },
    #[error("weights {ws} do not have the expected pattern: {expected}")]
    PatternMismatch { ws: String, expected: String },
    #[error("non-integral value {num}/{den} in {what}")]
    NonIntegral {
        what: &'static str,
        num: i128,
        den: i128,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    #[serde(rename = "EXACT")]
    Exact,
    #[serde(rename = "MOD_R")]
    ModR,
}

impl std::fmt::Display for Tag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Tag::Exact => "EXACT",
            Tag::ModR => "MOD_R",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaEntry {
    pub value: i128,
    pub tag: Tag,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaMatrix {
    pub r: u64,
    pub n: u64,
    pub position: Option<usize>,
    /// Inverses of the unit weights modulo n (`None` for the non-unit one).
    pub inverses_mod_n: Vec<Option<i128>>,
    pub entries: Vec<Vec<FormulaEntry>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub row: usize,
    pub col: usize,
    pub formula: FormulaEntry,
    pub oracle: i128,
}

impl FormulaMatrix {
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn values(&self) -> IntMatrix {
        let s = self.size();
        IntMatrix::from_fn(s, s, |i, j| self.entries[i][j].value)
    }

    pub fn tags(&self) -> Vec<Vec<Tag>> {
        self.entries
            .iter()
            .map(|row| row.iter().map(|e| e.tag).collect())
            .collect()
    }

    /// Entries that disagree with `oracle` (exactly, or mod r for `ModR`).
    pub fn mismatches(&self, oracle: &IntMatrix) -> Vec<Mismatch> {
        let r = self.r as i128;
        let mut out = Vec::new();
        for (i, row) in self.entries.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                let o = oracle[(i, j)];
                let ok = match e.tag {
                    Tag::Exact => e.value == o,
                    Tag::ModR => (o - e.value).rem_euclid(r) == 0,
                };
                if !ok {
                    out.push(Mismatch {
                        row: i,
                        col: j,
                        formula: *e,
                        oracle: o,
                    });
                }
            }
        }
        out
    }
}

/// Sum of fractions over a fixed common denominator.
struct Scaled {
    den: i128,
    num: i128,
}

impl Scaled {
    fn new(den: i128) -> Self {
        Scaled { den, num: 0 }
    }

    fn add(&mut self, num: i128, den: i128) {
        assert_eq!(
            self.den % den,
            0,
            "denominator {den} does not divide {}",
            self.den
        );
        self.num += num * (self.den / den);
    }

    fn integer(&self, what: &'static str) -> Result<i128, FormulaError> {
        if self.num % self.den != 0 {
            return Err(FormulaError::NonIntegral {
                what,
                num: self.num,
                den: self.den,
            });
        }
        Ok(self.num / self.den)
    }
}

fn inv_or_zero(a: i128, m: i128) -> i128 {
    mod_inverse(a, m).map(|x| x.value).unwrap_or(0)
}

fn floor_div(a: i128, b: i128) -> i128 {
    a.div_euclid(b)
}

/// Entries placed by (level, residue) coordinates.
struct Builder {
    r: u64,
    offsets: Vec<usize>,
    entries: Vec<Vec<FormulaEntry>>,
}

impl Builder {
    fn new(r: u64, widths: &[u64]) -> Self {
        let mut offsets = Vec::with_capacity(widths.len());
        let mut acc = 0;
        for &w in widths {
            offsets.push(acc);
            acc += w as usize;
        }
        let mut entries = vec![
            vec![
                FormulaEntry {
                    value: 0,
                    tag: Tag::Exact
                };
                acc
            ];
            acc
        ];
        for (i, row) in entries.iter_mut().enumerate() {
            row[i].value = 1;
        }
        Builder {
            r,
            offsets,
            entries,
        }
    }

    fn exact(&mut self, from: (usize, u64), to: (usize, u64), value: i128) {
        let (i, j) = (
            self.offsets[from.0] + from.1 as usize,
            self.offsets[to.0] + to.1 as usize,
        );
        self.entries[i][j] = FormulaEntry {
            value,
            tag: Tag::Exact,
        };
    }

    fn modr(&mut self, from: (usize, u64), to: (usize, u64), value: i128) {
        let (i, j) = (
            self.offsets[from.0] + from.1 as usize,
            self.offsets[to.0] + to.1 as usize,
        );
        let value = value.rem_euclid(self.r as i128);
        self.entries[i][j] = FormulaEntry {
            value,
            tag: Tag::ModR,
        };
    }

    fn finish(
        self,
        ws_like: (u64, Option<usize>),
        inverses_mod_n: Vec<Option<i128>>,
    ) -> FormulaMatrix {
        FormulaMatrix {
            r: self.r,
            n: ws_like.0,
            position: ws_like.1,
            inverses_mod_n,
            entries: self.entries,
        }
    }
}

/// Paths from a unit level to the next level up, or from a non-unit level
/// vertex to a unit level above it, with no level in between.
pub fn one_step_count(r: u64, n: u64) -> i128 {
    (r / n) as i128
}

/// Unit level i, unit level k, non-unit level l with i < k < l: paths from
/// `(v_i, 0)` to `(v_l, t)` through level k. `a_k` is the inverse of m_k mod n.
pub fn two_step_rising(r: u64, n: u64, a_k: i128, t: u64) -> i128 {
    let (r, n, t) = (r as i128, n as i128, t as i128);
    if t == 0 {
        r * (r + n - 2) / (2 * n)
    } else {
        let s = (a_k * t - 1).rem_euclid(n);
        r * (r - n) / (2 * n) + r / n * s
    }
}

/// Non-unit level l below unit levels k < i: paths from `(v_l, t)` to `(v_i, 0)`
/// through level k.
pub fn two_step_falling(r: u64, n: u64, a_k: i128, t: u64) -> i128 {
    let (r, n, t) = (r as i128, n as i128, t as i128);
    let base = r * (r - n) / (2 * n);
    if t == 0 {
        base
    } else {
        base + r / n * (n - (a_k * t).rem_euclid(n))
    }
}

/// Unit levels i < j with the non-unit level strictly between them.
pub fn two_step_across(r: u64, n: u64) -> i128 {
    let (r, n) = (r as i128, n as i128);
    r * (r - n) / (2 * n)
}

/// Three unit levels.
pub fn two_step_coprime(r: u64) -> i128 {
    let r = r as i128;
    r * (r - 1) / 2
}

fn expect(ws: &WeightSystem, levels: usize, position: Option<usize>) -> Result<(), FormulaError> {
    if ws.levels() != levels || ws.position() != position {
        let expected = match position {
            Some(k) => format!("{levels} weights, non-unit at position {k}"),
            None => format!("{levels} weights, all units"),
        };
        return Err(FormulaError::PatternMismatch {
            ws: ws.to_string(),
            expected,
        });
    }
    Ok(())
}

fn inverses_mod_n(ws: &WeightSystem) -> Vec<Option<i128>> {
    (0..ws.levels())
        .map(|i| ws.inverse_mod_n(i).filter(|_| Some(i) != ws.position()))
        .collect()
}

pub fn matrix_dim3(r: u64, n: u64, position: usize) -> Result<FormulaMatrix, FormulaError> {
    if n == 0 || !r.is_multiple_of(n) || position > 1 {
        return Err(FormulaError::InvalidN { r, n });
    }
    let widths: Vec<u64> = (0..2).map(|i| if i == position { n } else { 1 }).collect();
    let mut b = Builder::new(r, &widths);
    let step = if n == 1 {
        r as i128
    } else {
        one_step_count(r, n)
    };
    for t in 0..n {
        if position == 0 {
            b.exact((0, t), (1, 0), step);
        } else {
            b.exact((0, 0), (1, t), step);
        }
    }
    let pos = (n > 1).then_some(position);
    Ok(b.finish((n, pos), vec![None; 2]))
}

pub fn matrix_dim5(ws: &WeightSystem) -> Result<FormulaMatrix, FormulaError> {
    if ws.levels() != 3 {
        return Err(FormulaError::PatternMismatch {
            ws: ws.to_string(),
            expected: "3 weights".into(),
        });
    }
    let r = ws.order();
    let n = ws.n();
    let (ri, ni) = (r as i128, n as i128);
    let big_r = ri / ni;
    let ex2 = ri * (ri - ni) / (2 * ni);
    let inv = inverses_mod_n(ws);
    let Some(k) = ws.position() else {
        let mut b = Builder::new(r, &[1, 1, 1]);
        b.exact((0, 0), (1, 0), ri);
        b.exact((1, 0), (2, 0), ri);
        b.exact((0, 0), (2, 0), ri * (ri + 1) / 2);
        return Ok(b.finish((1, None), inv));
    };
    let widths: Vec<u64> = (0..3).map(|i| if i == k { n } else { 1 }).collect();
    let mut b = Builder::new(r, &widths);
    match k {
        0 => {
            let a1 = ws.inverse_mod_n(1).unwrap();
            for t in 0..n {
                b.exact((0, t), (1, 0), big_r);
                let ti = t as i128;
                let y = if t == 0 {
                    big_r + ex2
                } else {
                    ex2 + big_r * (ni + 1 - (a1 * ti).rem_euclid(ni))
                };
                b.exact((0, t), (2, 0), y);
            }
            b.exact((1, 0), (2, 0), ri);
        }
        1 => {
            for t in 0..n {
                b.exact((0, 0), (1, t), big_r);
                b.exact((1, t), (2, 0), big_r);
            }
            b.exact((0, 0), (2, 0), ri * (ri + ni) / (2 * ni));
        }
        _ => {
            let a1 = ws.inverse_mod_n(1).unwrap();
            b.exact((0, 0), (1, 0), ri);
            for t in 0..n {
                b.exact((1, 0), (2, t), big_r);
                let z = if t == 0 {
                    ri * (ri + ni) / (2 * ni)
                } else {
                    ex2 + big_r * (a1 * t as i128).rem_euclid(ni)
                };
                b.exact((0, 0), (2, t), z);
            }
        }
    }
    Ok(b.finish((n, Some(k)), inv))
}

struct Dim7Params {
    r: i128,
    n: i128,
    big_r: i128,
    ex2: i128,
    m1: i128,
    m2: i128,
}

impl Dim7Params {
    fn of(ws: &WeightSystem) -> Self {
        let r = ws.order() as i128;
        let n = ws.n() as i128;
        Dim7Params {
            r,
            n,
            big_r: r / n,
            ex2: r * (r - n) / (2 * n),
            m1: ws.residues()[1] as i128,
            m2: ws.residues()[2] as i128,
        }
    }
}

/// Corner entries `x_t` (mod r) when the last weight is the non-unit one.
pub fn corner_last(ws: &WeightSystem) -> Result<Vec<i128>, FormulaError> {
    expect(ws, 4, Some(3))?;
    let p = Dim7Params::of(ws);
    let (r, n) = (p.r, p.n);
    let a1 = inv_or_zero(p.m1, n);
    let a2 = inv_or_zero(p.m2, n);
    let c = inv_or_zero(p.m2, r) * p.m1;
    let k = |l: i128| -floor_div(c * (l + 1), r);
    let den = 12 * n * n;

    // sum of l in [1, r-2] over each residue class mod n
    let mut class_sum = vec![0i128; n as usize];
    for l in 1..=r - 2 {
        class_sum[l.rem_euclid(n) as usize] += l;
    }
    let target = |h: i128| (p.m2 * a1 * h - 1).rem_euclid(n) as usize;

    let mut base = Scaled::new(den);
    base.add(-c * r * (r - 2) * (r - 1), 3 * n);
    for l in 1..=r - 2 {
        base.add(l * r * (1 - k(l)), n);
    }
    for h in 0..n {
        base.add(class_sum[target(h)] * h, n);
    }

    let mut xs = Vec::with_capacity(n as usize);
    for t in 0..n {
        let mut x = Scaled { den, num: base.num };
        if t == 0 {
            x.add(-p.big_r, 1);
        } else {
            let s = (a2 * t - 1).rem_euclid(n);
            for h in s + 1..n {
                x.add(-class_sum[target(h)], 1);
            }
            x.add(p.big_r * (a2 * t + a1 * t - 1), 1);
        }
        xs.push(x.integer("corner entry, last position")?.rem_euclid(r));
    }
    Ok(xs)
}

/// Corner entries `x_t` (mod r) when the first weight is the non-unit one.
pub fn corner_first(ws: &WeightSystem) -> Result<Vec<i128>, FormulaError> {
    expect(ws, 4, Some(0))?;
    let p = Dim7Params::of(ws);
    let (r, n) = (p.r, p.n);
    let a1 = inv_or_zero(p.m1, n);
    let a2 = inv_or_zero(p.m2, n);
    let c = inv_or_zero(p.m2, r) * p.m1;
    let k = |l: i128| -floor_div(c * (l + 1), r);
    let w = |l: i128| r - c * (l + 1) - r * k(l);
    let rho = |h: i128| {
        let v = (a1 * h).rem_euclid(n);
        if v == 0 {
            n
        } else {
            v
        }
    };
    let den = 12 * n * n;

    let mut class_w = vec![0i128; n as usize];
    for l in 1..=r - 2 {
        class_w[l.rem_euclid(n) as usize] += w(l);
    }
    let class_of = |h: i128| (a1 * h).rem_euclid(n) as usize;

    let mut base = Scaled::new(den);
    base.add(-c * r * (r - 2) * (r - 1), 3 * n);
    for l in 0..=r - 2 {
        base.add(l * r * (1 - k(l)), n);
    }
    for h in 0..n {
        base.add(-rho(h) * class_w[class_of(h)], n);
    }

    let mut xs = Vec::with_capacity(n as usize);
    for t in 0..n {
        let mut x = Scaled { den, num: base.num };
        for h in (0..n).filter(|&h| rho(h) >= rho(t)) {
            x.add(class_w[class_of(h)], 1);
        }
        x.add(-p.big_r * (a2 * t + a1 * t - 1), 1);
        xs.push(x.integer("corner entry, first position")?.rem_euclid(r));
    }
    Ok(xs)
}

/// Corner entry `x` (mod r) for the non-unit weight at position `k` in {1, 2}.
pub fn corner_middle(ws: &WeightSystem) -> Result<i128, FormulaError> {
    let k = match ws.position() {
        Some(k @ (1 | 2)) if ws.levels() == 4 => k,
        _ => {
            return Err(FormulaError::PatternMismatch {
                ws: ws.to_string(),
                expected: "4 weights, non-unit at position 1 or 2".into(),
            })
        }
    };
    let p = Dim7Params::of(ws);
    let (r, n) = (p.r, p.n);
    // the unit middle weight is inverted, the other one multiplies
    let (unit, other) = if k == 2 { (p.m1, p.m2) } else { (p.m2, p.m1) };
    let ui = inv_or_zero(unit, r);
    let mut x = Scaled::new(12 * n * n);
    x.add(-ui * other * r * (2 * r - n) * (r - n), 6 * n * n);
    x.add(ui * r * (r - n) * (n - 1), 4 * n);
    x.add(r * (r - 1), 2);
    Ok(x.integer("corner entry, middle position")?.rem_euclid(r))
}

pub fn matrix_dim7_k3(ws: &WeightSystem) -> Result<FormulaMatrix, FormulaError> {
    expect(ws, 4, Some(3))?;
    let p = Dim7Params::of(ws);
    let n = ws.n();
    let a2 = inv_or_zero(p.m2, p.n);
    let xs = corner_last(ws)?;
    let mut b = Builder::new(ws.order(), &[1, 1, 1, n]);
    b.exact((0, 0), (1, 0), p.r);
    b.exact((0, 0), (2, 0), p.r * (p.r + 1) / 2);
    b.exact((1, 0), (2, 0), p.r);
    for t in 0..n {
        let ti = t as i128;
        b.exact((2, 0), (3, t), p.big_r);
        let y = if t == 0 {
            p.r * (p.r + p.n) / (2 * p.n)
        } else {
            p.ex2 + p.big_r * (a2 * ti).rem_euclid(p.n)
        };
        b.exact((1, 0), (3, t), y);
        b.modr((0, 0), (3, t), xs[t as usize]);
    }
    Ok(b.finish((n, Some(3)), inverses_mod_n(ws)))
}

pub fn matrix_dim7_k0(ws: &WeightSystem) -> Result<FormulaMatrix, FormulaError> {
    expect(ws, 4, Some(0))?;
    let p = Dim7Params::of(ws);
    let n = ws.n();
    let a1 = inv_or_zero(p.m1, p.n);
    let xs = corner_first(ws)?;
    let mut b = Builder::new(ws.order(), &[n, 1, 1, 1]);
    b.exact((1, 0), (2, 0), p.r);
    b.exact((1, 0), (3, 0), p.r * (p.r + 1) / 2);
    b.exact((2, 0), (3, 0), p.r);
    for t in 0..n {
        let ti = t as i128;
        b.exact((0, t), (1, 0), p.big_r);
        let y = if t == 0 {
            p.ex2 + p.big_r
        } else {
            p.ex2 + p.big_r * (p.n + 1 - (a1 * ti).rem_euclid(p.n))
        };
        b.exact((0, t), (2, 0), y);
        b.modr((0, t), (3, 0), xs[t as usize]);
    }
    Ok(b.finish((n, Some(0)), inverses_mod_n(ws)))
}

pub fn matrix_dim7_k2(ws: &WeightSystem) -> Result<FormulaMatrix, FormulaError> {
    expect(ws, 4, Some(2))?;
    let p = Dim7Params::of(ws);
    let n = ws.n();
    let a1 = inv_or_zero(p.m1, p.n);
    let x = corner_middle(ws)?;
    let mut b = Builder::new(ws.order(), &[1, 1, n, 1]);
    b.exact((0, 0), (1, 0), p.r);
    b.exact((1, 0), (3, 0), p.r * (p.r + p.n) / (2 * p.n));
    b.modr((0, 0), (3, 0), x);
    for t in 0..n {
        let ti = t as i128;
        b.exact((1, 0), (2, t), p.big_r);
        b.exact((2, t), (3, 0), p.big_r);
        let z = if t == 0 {
            p.r * (p.r + p.n) / (2 * p.n)
        } else {
            p.ex2 + p.big_r * (a1 * ti).rem_euclid(p.n)
        };
        b.exact((0, 0), (2, t), z);
    }
    Ok(b.finish((n, Some(2)), inverses_mod_n(ws)))
}

pub fn matrix_dim7_k1(ws: &WeightSystem) -> Result<FormulaMatrix, FormulaError> {
    expect(ws, 4, Some(1))?;
    let p = Dim7Params::of(ws);
    let n = ws.n();
    let a2 = inv_or_zero(p.m2, p.n);
    let x = corner_middle(ws)?;
    let mut b = Builder::new(ws.order(), &[1, n, 1, 1]);
    b.exact((2, 0), (3, 0), p.r);
    b.exact((0, 0), (2, 0), p.r * (p.r + p.n) / (2 * p.n));
    b.modr((0, 0), (3, 0), x);
    for t in 0..n {
        let ti = t as i128;
        b.exact((0, 0), (1, t), p.big_r);
        b.exact((1, t), (2, 0), p.big_r);
        let y = if t == 0 {
            p.ex2 + p.big_r
        } else {
            p.ex2 + p.big_r * (p.n + 1 - (a2 * ti).rem_euclid(p.n))
        };
        b.exact((1, t), (3, 0), y);
    }
    Ok(b.finish((n, Some(1)), inverses_mod_n(ws)))
}

/// All-unit weights; the three-level corner comes from the enumeration oracle.
pub fn matrix_dim7_coprime(ws: &WeightSystem) -> Result<FormulaMatrix, FormulaError> {
    expect(ws, 4, None)?;
    let r = ws.order() as i128;
    let g = lensgraph::build_skew(ws);
    let corner = lensgraph::count_admissible(&g, Vertex::new(0, 0), Vertex::new(3, 0))? as i128;
    let mut b = Builder::new(ws.order(), &[1, 1, 1, 1]);
    for i in 0..3 {
        b.exact((i, 0), (i + 1, 0), r);
    }
    b.exact((0, 0), (2, 0), r * (r + 1) / 2);
    b.exact((1, 0), (3, 0), r * (r + 1) / 2);
    b.exact((0, 0), (3, 0), corner);
    Ok(b.finish((1, None), vec![Some(0); 4]))
}

/// The closed-form matrix for any in-scope weight system.
pub fn closed_form(ws: &WeightSystem) -> Result<FormulaMatrix, FormulaError> {
    match (ws.levels(), ws.position()) {
        (2, k) => {
            let mut m = matrix_dim3(ws.order(), ws.n(), k.unwrap_or(0))?;
            m.inverses_mod_n = inverses_mod_n(ws);
            Ok(m)
        }
        (3, _) => matrix_dim5(ws),
        (4, None) => matrix_dim7_coprime(ws),
        (4, Some(0)) => matrix_dim7_k0(ws),
        (4, Some(1)) => matrix_dim7_k1(ws),
        (4, Some(2)) => matrix_dim7_k2(ws),
        (4, Some(3)) => matrix_dim7_k3(ws),
        _ => unreachable!("WeightSystem has 2 to 4 levels"),
    }
}

/// `-m_2^{-1} m_1 r(r-1)(r-2)/3` reduced mod r; the value the corner column of
/// the last-position family sums to.
pub fn corner_sum_target(ws: &WeightSystem) -> i128 {
    let r = ws.order() as i128;
    let m1 = ws.residues()[1] as i128;
    let m2 = ws.residues()[2] as i128;
    (-inv_or_zero(m2, r) * m1 * (r * (r - 1) * (r - 2) / 3)).rem_euclid(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lensgraph::adjacency_by_enumeration;

    fn ws(r: u64, w: &[u64]) -> WeightSystem {
        WeightSystem::new(r, w).unwrap()
    }

    fn entry(m: &FormulaMatrix, i: usize, j: usize) -> (i128, Tag) {
        (m.entries[i][j].value, m.entries[i][j].tag)
    }

    #[test]
    fn dim3_examples() {
        let m = matrix_dim3(4, 2, 0).unwrap();
        assert_eq!(
            m.values(),
            IntMatrix::from_row_slice(3, 3, &[1, 0, 2, 0, 1, 2, 0, 0, 1])
        );
        let m = matrix_dim3(6, 6, 1).unwrap();
        assert!((1..7).all(|j| m.entries[0][j].value == 1));
        assert!(matrix_dim3(6, 4, 0).is_err());
    }

    #[test]
    fn dim5_examples() {
        let m = matrix_dim5(&ws(4, &[1, 2, 1])).unwrap();
        assert_eq!(
            m.entries[0].iter().map(|e| e.value).collect::<Vec<_>>(),
            vec![1, 2, 2, 6]
        );
        let m = matrix_dim5(&ws(6, &[2, 1, 1])).unwrap();
        assert_eq!(entry(&m, 0, 3), (9, Tag::Exact));
        let m = matrix_dim5(&ws(6, &[1, 1, 3])).unwrap();
        assert_eq!(entry(&m, 0, 2), (9, Tag::Exact));
        assert_eq!(entry(&m, 1, 2), (2, Tag::Exact));
    }

    #[test]
    fn dim7_last_position_examples() {
        let m = matrix_dim7_k3(&ws(6, &[1, 1, 1, 3])).unwrap();
        assert_eq!(
            (entry(&m, 1, 3).0, entry(&m, 1, 4).0, entry(&m, 1, 5).0),
            (9, 5, 7)
        );
        assert_eq!((entry(&m, 0, 1).0, entry(&m, 0, 2).0), (6, 21));
        let xs: i128 = (3..6).map(|j| m.entries[0][j].value).sum();
        assert_eq!(xs.rem_euclid(6), corner_sum_target(&ws(6, &[1, 1, 1, 3])));
        assert_eq!(m.entries[0][3].tag, Tag::ModR);
    }

    #[test]
    fn dim7_first_position_examples() {
        let m = matrix_dim7_k0(&ws(6, &[2, 1, 1, 1])).unwrap();
        assert_eq!(entry(&m, 0, 3), (9, Tag::Exact));
        // oracle value; the printed y_t expression gives 9 here
        assert_eq!(entry(&m, 1, 3), (12, Tag::Exact));
        assert_eq!(m.entries[2][0].value, 0);
    }

    #[test]
    fn dim7_middle_examples() {
        let m = matrix_dim7_k2(&ws(6, &[1, 1, 3, 1])).unwrap();
        let top: Vec<i128> = (2..5).map(|j| m.entries[0][j].value).collect();
        assert_eq!(top, vec![9, 5, 7]);
        assert_eq!(entry(&m, 1, 5), (9, Tag::Exact));
        assert_eq!(entry(&m, 1, 2), (2, Tag::Exact));
        let m = matrix_dim7_k1(&ws(4, &[1, 2, 1, 1])).unwrap();
        assert_eq!((entry(&m, 0, 1).0, entry(&m, 0, 2).0), (2, 2));
    }

    #[test]
    fn wrong_pattern_is_rejected() {
        assert!(matches!(
            matrix_dim7_k3(&ws(6, &[3, 1, 1, 1])),
            Err(FormulaError::PatternMismatch { .. })
        ));
        assert!(matrix_dim7_coprime(&ws(6, &[3, 1, 1, 1])).is_err());
        assert!(corner_middle(&ws(6, &[3, 1, 1, 1])).is_err());
    }

    #[test]
    fn coprime_corner_examples() {
        let a = matrix_dim7_coprime(&ws(3, &[1, 1, 1, 1])).unwrap();
        let b = matrix_dim7_coprime(&ws(3, &[1, 1, 2, 1])).unwrap();
        assert_eq!(
            (a.entries[0][3].value - b.entries[0][3].value).rem_euclid(3),
            2
        );
        let m = matrix_dim7_coprime(&ws(2, &[1, 1, 1, 1])).unwrap();
        assert_eq!(
            (
                m.entries[0][1].value,
                m.entries[1][2].value,
                m.entries[0][2].value
            ),
            (2, 2, 3)
        );
    }

    #[test]
    fn agrees_with_oracle_small_sweep() {
        for r in 2..=8u64 {
            for w in crate::sweep::all_tuples(r, 4) {
                let w = ws(r, &w);
                let f = closed_form(&w).unwrap();
                let o = adjacency_by_enumeration(&w);
                assert!(
                    f.mismatches(&o.a).is_empty(),
                    "{w}: {:?}",
                    f.mismatches(&o.a)
                );
            }
        }
    }

    #[test]
    fn structure_matches_oracle_invariants() {
        for w in crate::sweep::all_tuples(6, 3) {
            let f = closed_form(&ws(6, &w)).unwrap();
            for i in 0..f.size() {
                assert_eq!(f.entries[i][i].value, 1);
                for j in 0..i {
                    assert_eq!(f.entries[i][j].value, 0);
                }
                for e in &f.entries[i] {
                    match e.tag {
                        Tag::Exact => assert!(e.value >= 0),
                        Tag::ModR => assert!((0..6).contains(&e.value)),
                    }
                }
            }
        }
    }
}
