//! Exact solutions of integer linear systems `A x = b` by column Hermite reduction.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("integer overflow during elimination")]
    Overflow,
    #[error("system shape mismatch: {0}")]
    Shape(String),
}

/// A linear system over Z with dense rows.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinearSystem {
    pub vars: usize,
    pub rows: Vec<Vec<i128>>,
    pub rhs: Vec<i128>,
}

impl LinearSystem {
    pub fn new(vars: usize) -> Self {
        LinearSystem {
            vars,
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<i128>, rhs: i128) {
        assert_eq!(row.len(), self.vars);
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    /// Splits into independent subsystems. Each part lists the original variable
    /// indices it uses; all-zero equations are dropped (false if one is inconsistent).
    pub fn components(&self) -> Option<Vec<(Vec<usize>, LinearSystem)>> {
        let mut parent: Vec<usize> = (0..self.vars).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut x = x;
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for row in &self.rows {
            let mut first = None;
            for (j, &c) in row.iter().enumerate() {
                if c != 0 {
                    match first {
                        None => first = Some(j),
                        Some(f) => {
                            let (a, b) = (find(&mut parent, f), find(&mut parent, j));
                            parent[a] = b;
                        }
                    }
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut group_of = vec![usize::MAX; self.vars];
        for v in 0..self.vars {
            let root = find(&mut parent, v);
            if group_of[root] == usize::MAX {
                group_of[root] = groups.len();
                groups.push(Vec::new());
            }
            group_of[v] = group_of[root];
            groups[group_of[v]].push(v);
        }
        let mut parts: Vec<LinearSystem> =
            groups.iter().map(|g| LinearSystem::new(g.len())).collect();
        for (row, &rhs) in self.rows.iter().zip(&self.rhs) {
            match row.iter().position(|&c| c != 0) {
                None if rhs != 0 => return None,
                None => {}
                Some(j) => {
                    let gi = group_of[j];
                    let sub = groups[gi].iter().map(|&v| row[v]).collect();
                    parts[gi].push(sub, rhs);
                }
            }
        }
        Some(groups.into_iter().zip(parts).collect())
    }
}

fn checked_axpy(dst: &mut [i128], src: &[i128], q: i128) -> Result<(), SolveError> {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d = q
            .checked_mul(s)
            .and_then(|p| d.checked_sub(p))
            .ok_or(SolveError::Overflow)?;
    }
    Ok(())
}

/// Some integer solution of the system, or `None` if it has none.
#[allow(clippy::needless_range_loop)]
pub fn solve(sys: &LinearSystem) -> Result<Option<Vec<i128>>, SolveError> {
    let m = sys.rows.len();
    let k = sys.vars;
    if sys.rhs.len() != m {
        return Err(SolveError::Shape(format!(
            "{} rows, {} right-hand sides",
            m,
            sys.rhs.len()
        )));
    }
    // column-major copies so column operations are contiguous
    let mut cols: Vec<Vec<i128>> = (0..k)
        .map(|j| sys.rows.iter().map(|r| r[j]).collect())
        .collect();
    let mut q: Vec<Vec<i128>> = (0..k)
        .map(|j| (0..k).map(|i| i128::from(i == j)).collect())
        .collect();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut next = 0;
    for i in 0..m {
        if next >= k {
            break;
        }
        loop {
            let best = (next..k)
                .filter(|&j| cols[j][i] != 0)
                .min_by_key(|&j| cols[j][i].unsigned_abs());
            let Some(best) = best else { break };
            cols.swap(next, best);
            q.swap(next, best);
            let p = cols[next][i];
            let mut done = true;
            for j in next + 1..k {
                let v = cols[j][i];
                if v != 0 {
                    let f = v.div_euclid(p);
                    let (pc, pq) = (cols[next].clone(), q[next].clone());
                    checked_axpy(&mut cols[j], &pc, f)?;
                    checked_axpy(&mut q[j], &pq, f)?;
                    done &= cols[j][i] == 0;
                }
            }
            if done {
                break;
            }
        }
        if cols.get(next).is_some_and(|c| c[i] != 0) {
            pivots.push((i, next));
            next += 1;
        }
    }

    let mut y = vec![0i128; k];
    let mut piv_iter = pivots.iter().peekable();
    for i in 0..m {
        let mut acc: i128 = 0;
        let pivot_col = match piv_iter.peek() {
            Some(&&(row, col)) if row == i => {
                piv_iter.next();
                Some(col)
            }
            _ => None,
        };
        let limit = pivot_col.unwrap_or(next);
        for (j, yj) in y.iter().enumerate().take(limit) {
            acc = cols[j][i]
                .checked_mul(*yj)
                .and_then(|p| acc.checked_add(p))
                .ok_or(SolveError::Overflow)?;
        }
        let rest = sys.rhs[i].checked_sub(acc).ok_or(SolveError::Overflow)?;
        match pivot_col {
            Some(c) => {
                if rest % cols[c][i] != 0 {
                    return Ok(None);
                }
                y[c] = rest / cols[c][i];
            }
            None if rest != 0 => return Ok(None),
            None => {}
        }
    }

    let mut x = vec![0i128; k];
    for (j, &yj) in y.iter().enumerate() {
        if yj == 0 {
            continue;
        }
        for (xi, &qij) in x.iter_mut().zip(&q[j]) {
            *xi = qij
                .checked_mul(yj)
                .and_then(|p| xi.checked_add(p))
                .ok_or(SolveError::Overflow)?;
        }
    }
    Ok(Some(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sys(rows: &[&[i128]], rhs: &[i128]) -> LinearSystem {
        let mut s = LinearSystem::new(rows[0].len());
        for (r, &b) in rows.iter().zip(rhs) {
            s.push(r.to_vec(), b);
        }
        s
    }

    fn check(s: &LinearSystem, x: &[i128]) -> bool {
        s.rows
            .iter()
            .zip(&s.rhs)
            .all(|(r, &b)| r.iter().zip(x).map(|(a, v)| a * v).sum::<i128>() == b)
    }

    #[test]
    fn small_cases() {
        let s = sys(&[&[6, 4]], &[2]);
        let x = solve(&s).unwrap().unwrap();
        assert!(check(&s, &x));
        assert_eq!(solve(&sys(&[&[6, 4]], &[1])).unwrap(), None);
        assert_eq!(solve(&sys(&[&[2, 0], &[0, 0]], &[2, 1])).unwrap(), None);
        let s = sys(&[&[1, 1, 0], &[0, 1, 1], &[1, 0, 1]], &[2, 2, 2]);
        assert_eq!(solve(&s).unwrap(), Some(vec![1, 1, 1]));
        assert_eq!(solve(&sys(&[&[1, 1], &[1, 1]], &[1, 2])).unwrap(), None);
    }

    #[test]
    fn components_split() {
        let s = sys(&[&[1, 0, 0], &[0, 2, 3], &[0, 0, 0]], &[1, 5, 0]);
        let parts = s.components().unwrap();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].0, vec![0]);
        assert_eq!(parts[1].0, vec![1, 2]);
        assert!(sys(&[&[0, 0]], &[1]).components().is_none());
    }

    proptest! {
        #[test]
        fn solvable_systems_are_solved(
            a in proptest::collection::vec(proptest::collection::vec(-6i128..6, 4), 1..5),
            x in proptest::collection::vec(-5i128..5, 4),
        ) {
            let b: Vec<i128> = a.iter().map(|r| r.iter().zip(&x).map(|(p, q)| p * q).sum()).collect();
            let mut s = LinearSystem::new(4);
            for (r, &v) in a.iter().zip(&b) {
                s.push(r.clone(), v);
            }
            let got = solve(&s).unwrap();
            prop_assert!(got.is_some());
            prop_assert!(check(&s, &got.unwrap()));
        }

        #[test]
        fn answers_are_correct(
            a in proptest::collection::vec(proptest::collection::vec(-4i128..4, 3), 1..4),
            b in proptest::collection::vec(-6i128..6, 4),
        ) {
            let mut s = LinearSystem::new(3);
            for (r, &v) in a.iter().zip(&b) {
                s.push(r.clone(), v);
            }
            match solve(&s).unwrap() {
                Some(x) => prop_assert!(check(&s, &x)),
                None => {
                    // no solution in a generous box either
                    let found = itertools::iproduct!(-12i128..=12, -12i128..=12, -12i128..=12)
                        .any(|(p, q, t)| check(&s, &[p, q, t]));
                    prop_assert!(!found);
                }
            }
        }
    }
}
