//! Exhaustive enumeration of in-scope weight tuples.

use itertools::Itertools;

use crate::lensgraph::Pattern;
use crate::numtheory::gcd;

fn gcd_r(w: u64, r: u64) -> u64 {
    gcd(w as i128, r as i128) as u64
}

/// Every tuple in `[1, r]^levels` with at most one weight sharing a factor with r.
pub fn all_tuples(r: u64, levels: usize) -> Vec<Vec<u64>> {
    (0..levels)
        .map(|_| 1..=r)
        .multi_cartesian_product()
        .filter(|w| w.iter().filter(|&&x| gcd_r(x, r) != 1).count() <= 1)
        .collect()
}

/// Tuples in `[1, r]^levels` matching a pattern, in lexicographic order.
pub fn pattern_tuples(r: u64, pattern: Pattern) -> Vec<Vec<u64>> {
    let levels = pattern.dim_index + 1;
    let units: Vec<u64> = (1..=r).filter(|&x| gcd_r(x, r) == 1).collect();
    let wide: Vec<u64> = (1..=r).filter(|&x| gcd_r(x, r) == pattern.n).collect();
    (0..levels)
        .map(|i| {
            if Some(i) == pattern.position {
                wide.clone()
            } else {
                units.clone()
            }
        })
        .multi_cartesian_product()
        .collect()
}

/// The all-unit pattern followed by every (n, position) with n > 1 dividing r.
pub fn patterns(r: u64, dim_index: usize) -> Vec<Pattern> {
    let mut out = vec![Pattern {
        dim_index,
        position: None,
        n: 1,
    }];
    for n in (2..=r).filter(|n| r.is_multiple_of(*n)) {
        for k in 0..=dim_index {
            out.push(Pattern {
                dim_index,
                position: Some(k),
                n,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        // r=4: units {1,3}, n=2 {2}, n=4 {4}
        assert_eq!(all_tuples(4, 2).len(), 4 + 2 * 2 * 2);
        let p = Pattern {
            dim_index: 3,
            position: Some(1),
            n: 2,
        };
        assert_eq!(
            pattern_tuples(4, p),
            vec![
                vec![1, 2, 1, 1],
                vec![1, 2, 1, 3],
                vec![1, 2, 3, 1],
                vec![1, 2, 3, 3],
                vec![3, 2, 1, 1],
                vec![3, 2, 1, 3],
                vec![3, 2, 3, 1],
                vec![3, 2, 3, 3],
            ]
        );
        assert_eq!(patterns(6, 1).len(), 1 + 3 * 2);
    }

    #[test]
    fn patterns_cover_all_tuples() {
        for r in 2..=10 {
            for d in 1..=3 {
                let total: usize = patterns(r, d)
                    .into_iter()
                    .map(|p| pattern_tuples(r, p).len())
                    .sum();
                assert_eq!(total, all_tuples(r, d + 1).len());
            }
        }
    }
}
