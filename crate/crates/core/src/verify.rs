//! Oracle-versus-formula sweeps, one named suite per family of checks.
//!
//! Every suite walks all in-scope weight tuples for each order `2..=r_max`,
//! compares a prediction against the enumeration oracle (or against the
//! predicted class count), and tallies cases and failures per order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{self, ClassifyError};
use crate::closedform::{self, FormulaError};
use crate::lensgraph::{
    self, adjacency_by_enumeration, anti_transpose_partner, build_skew, swap_middle, GraphError,
    Pattern, Vertex, WeightSystem,
};
use crate::sweep;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("unknown suite {0:?}; expected one of {list}", list = SUITES.join(", "))]
    UnknownSuite(String),
    #[error("r_max must be at least 2, got {0}")]
    EmptySweep(u64),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

pub const SUITES: [&str; 13] = [
    "one-step",
    "two-step",
    "dim3",
    "dim5",
    "dim7-pos0",
    "dim7-pos1",
    "dim7-pos2",
    "dim7-pos3",
    "dim7-coprime",
    "sum-identity",
    "anti-transpose",
    "class-counts",
    "coprime-classes",
];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderTally {
    pub r: u64,
    pub cases: u64,
    pub failures: u64,
    pub first_failure: Option<String>,
}

impl OrderTally {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(what());
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub r_max: u64,
    pub cases: u64,
    pub failures: u64,
    pub first_failure: Option<String>,
    pub by_order: Vec<OrderTally>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Runs one suite over every order in `2..=r_max`, orders in parallel.
pub fn run_suite(suite: &str, r_max: u64) -> Result<SuiteReport, VerifyError> {
    if !SUITES.contains(&suite) {
        return Err(VerifyError::UnknownSuite(suite.to_string()));
    }
    if r_max < 2 {
        return Err(VerifyError::EmptySweep(r_max));
    }
    let by_order: Vec<OrderTally> = (2..=r_max)
        .into_par_iter()
        .map(|r| tally(suite, r))
        .collect::<Result<_, _>>()?;
    Ok(SuiteReport {
        suite: suite.to_string(),
        r_max,
        cases: by_order.iter().map(|t| t.cases).sum(),
        failures: by_order.iter().map(|t| t.failures).sum(),
        first_failure: by_order.iter().find_map(|t| t.first_failure.clone()),
        by_order,
    })
}

fn tally(suite: &str, r: u64) -> Result<OrderTally, VerifyError> {
    let mut t = OrderTally {
        r,
        ..OrderTally::default()
    };
    match suite {
        "one-step" => steps(r, &mut t, false)?,
        "two-step" => steps(r, &mut t, true)?,
        "dim3" => formulas(r, 1, None, &mut t)?,
        "dim5" => formulas(r, 2, None, &mut t)?,
        "dim7-pos0" => formulas(r, 3, Some(Some(0)), &mut t)?,
        "dim7-pos1" => formulas(r, 3, Some(Some(1)), &mut t)?,
        "dim7-pos2" => formulas(r, 3, Some(Some(2)), &mut t)?,
        "dim7-pos3" => formulas(r, 3, Some(Some(3)), &mut t)?,
        "dim7-coprime" => formulas(r, 3, Some(None), &mut t)?,
        "sum-identity" => sum_identity(r, &mut t)?,
        "anti-transpose" => anti_transpose(r, &mut t)?,
        "class-counts" => class_counts(r, &mut t)?,
        "coprime-classes" => coprime_classes(r, &mut t)?,
        _ => unreachable!("checked by run_suite"),
    }
    Ok(t)
}

/// Patterns of a dimension with a non-unit weight, optionally at one position.
fn wide_patterns(r: u64, dim_index: usize) -> impl Iterator<Item = Pattern> {
    sweep::patterns(r, dim_index)
        .into_iter()
        .filter(|p| p.n > 1)
}

fn systems(r: u64, pattern: Pattern) -> impl Iterator<Item = WeightSystem> {
    sweep::pattern_tuples(r, pattern)
        .into_iter()
        .map(move |w| WeightSystem::new(r, &w).expect("sweep tuples are valid"))
}

/// One-step and two-step counts for every level pair or triple.
fn steps(r: u64, t: &mut OrderTally, two: bool) -> Result<(), VerifyError> {
    for dim_index in 1..=3 {
        for p in wide_patterns(r, dim_index) {
            for ws in systems(r, p) {
                if two {
                    two_step_cases(&ws, t)?;
                } else {
                    one_step_cases(&ws, t)?;
                }
            }
        }
    }
    Ok(())
}

fn one_step_cases(ws: &WeightSystem, t: &mut OrderTally) -> Result<(), VerifyError> {
    let g = build_skew(ws);
    let (r, n) = (ws.order(), ws.n());
    let wide = ws.position().expect("non-unit pattern");
    for i in 0..ws.levels() {
        for j in i + 1..ws.levels() {
            let (got, expected) = if j == wide {
                (
                    lensgraph::count_via_from(&g, Vertex::new(i, 0), &[], j)?,
                    closedform::one_step_count(r, n),
                )
            } else if i == wide {
                (
                    lensgraph::count_via_into(&g, i, &[], Vertex::new(j, 0))?,
                    closedform::one_step_count(r, n),
                )
            } else {
                (
                    lensgraph::count_via_from(&g, Vertex::new(i, 0), &[], j)?,
                    closedform::one_step_count(r, 1),
                )
            };
            for (s, &c) in got.iter().enumerate() {
                t.check(c as i128 == expected, || {
                    format!("{ws}: levels {i}->{j} residue {s}: oracle {c}, expected {expected}")
                });
            }
        }
    }
    Ok(())
}

fn two_step_cases(ws: &WeightSystem, t: &mut OrderTally) -> Result<(), VerifyError> {
    let g = build_skew(ws);
    let (r, n) = (ws.order(), ws.n());
    let wide = ws.position().expect("non-unit pattern");
    let levels = ws.levels();
    for a in 0..levels {
        for k in a + 1..levels {
            for b in k + 1..levels {
                let a_k = ws.inverse_mod_n(k).unwrap_or(0);
                let (got, expected): (Vec<u128>, Box<dyn Fn(u64) -> i128>) = if b == wide {
                    (
                        lensgraph::count_via_from(&g, Vertex::new(a, 0), &[k], b)?,
                        Box::new(move |s| closedform::two_step_rising(r, n, a_k, s)),
                    )
                } else if a == wide {
                    (
                        lensgraph::count_via_into(&g, a, &[k], Vertex::new(b, 0))?,
                        Box::new(move |s| closedform::two_step_falling(r, n, a_k, s)),
                    )
                } else if k == wide {
                    (
                        lensgraph::count_via_from(&g, Vertex::new(a, 0), &[k], b)?,
                        Box::new(move |_| closedform::two_step_across(r, n)),
                    )
                } else {
                    (
                        lensgraph::count_via_from(&g, Vertex::new(a, 0), &[k], b)?,
                        Box::new(move |_| closedform::two_step_coprime(r)),
                    )
                };
                for (s, &c) in got.iter().enumerate() {
                    let e = expected(s as u64);
                    t.check(c as i128 == e, || {
                        format!("{ws}: levels {a}->{k}->{b} residue {s}: oracle {c}, expected {e}")
                    });
                }
            }
        }
    }
    Ok(())
}

/// Closed-form matrices against the oracle. `position` of `None` takes every
/// non-unit pattern of the dimension; `Some(p)` restricts to one position
/// (`Some(None)` is the all-unit pattern).
fn formulas(
    r: u64,
    dim_index: usize,
    position: Option<Option<usize>>,
    t: &mut OrderTally,
) -> Result<(), VerifyError> {
    let patterns = sweep::patterns(r, dim_index)
        .into_iter()
        .filter(|p| match position {
            None => p.n > 1,
            Some(pos) => p.position == pos,
        });
    for p in patterns {
        for ws in systems(r, p) {
            let oracle = adjacency_by_enumeration(&ws).a;
            let bad = closedform::closed_form(&ws)?.mismatches(&oracle);
            t.check(bad.is_empty(), || {
                let m = &bad[0];
                format!(
                    "{ws}: entry ({}, {}) formula {} [{}] vs oracle {}",
                    m.row, m.col, m.formula.value, m.formula.tag, m.oracle
                )
            });
        }
    }
    Ok(())
}

/// The corner entries of the last-position family sum to a fixed residue.
fn sum_identity(r: u64, t: &mut OrderTally) -> Result<(), VerifyError> {
    for p in wide_patterns(r, 3).filter(|p| p.position == Some(3)) {
        for ws in systems(r, p) {
            let a = adjacency_by_enumeration(&ws).a;
            let total: i128 = (3..3 + ws.n() as usize).map(|j| a[(0, j)]).sum();
            let got = total.rem_euclid(r as i128);
            let want = closedform::corner_sum_target(&ws);
            t.check(got == want, || {
                format!("{ws}: corner sum {got} mod r, expected {want}")
            });
        }
    }
    Ok(())
}

/// Swapping the middle weights anti-transposes the matrix up to relabelling
/// the wide level.
fn anti_transpose(r: u64, t: &mut OrderTally) -> Result<(), VerifyError> {
    let patterns = sweep::patterns(r, 3)
        .into_iter()
        .filter(|p| matches!(p.position, None | Some(1)));
    for p in patterns {
        for ws in systems(r, p) {
            let partner = adjacency_by_enumeration(&swap_middle(&ws)?).a;
            let rebuilt = anti_transpose_partner(&partner, &ws)?;
            let a = adjacency_by_enumeration(&ws).a;
            t.check(rebuilt == a, || {
                format!("{ws}: relabelled anti-transpose differs")
            });
        }
    }
    Ok(())
}

fn class_counts(r: u64, t: &mut OrderTally) -> Result<(), VerifyError> {
    for dim_index in 1..=3 {
        for p in sweep::patterns(r, dim_index) {
            let dim = 2 * dim_index + 1;
            match classify::enumerate_classes(r, p.n, dim, p.position) {
                Ok(_) => t.check(true, String::new),
                Err(
                    e @ (ClassifyError::CountMismatch { .. }
                    | ClassifyError::InconsistentCanonical(..)),
                ) => t.check(false, || format!("r={r} {p}: {e}")),
                Err(e) => return Err(e.into()),
            }
        }
    }
    Ok(())
}

fn coprime_classes(r: u64, t: &mut OrderTally) -> Result<(), VerifyError> {
    let expected: Vec<Vec<u64>> = if r.is_multiple_of(3) {
        vec![vec![1, 1, 1, 1], vec![1, 1, r - 1, 1]]
    } else {
        vec![vec![1, 1, 1, 1]]
    };
    let got: Vec<Vec<u64>> = match classify::enumerate_classes(r, 1, 7, None) {
        Ok(report) => report
            .classes
            .into_iter()
            .map(|c| c.representative)
            .collect(),
        Err(ClassifyError::CountMismatch { observed, .. }) => {
            t.check(false, || {
                format!("r={r}: observed {observed} coprime classes")
            });
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    t.check(got == expected, || {
        format!("r={r}: representatives {got:?}, expected {expected:?}")
    });
    Ok(())
}
