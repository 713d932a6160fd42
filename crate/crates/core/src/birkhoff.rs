//! Doubly stochastic matrices: Birkhoff decomposition, positive diagonals
//! through a prescribed cell, and extension of positive partial diagonals.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::diagonals::{check_partial_diagonal, Diagonal, DiagonalCheck, PartialDiagonal};
use crate::error::{Error, Result};
use crate::matching::{lex_least_perfect_matching, perfect_matchings};
use crate::perm::{all_permutations, Permutation};
use crate::scalar::{format_float, format_rational, Scalar, DEFAULT_EPS};
use crate::tensor::{Entries, MultiDimMatrix};

/// Float residuals at or below this are treated as rounding noise.
const FLOAT_NOISE: f64 = 1e-15;
/// Float decomposition stops once every residual entry is at or below this.
const FLOAT_DONE: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub struct BvnTerm {
    pub weight: Scalar,
    pub perm: Permutation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BvnDecomposition {
    pub order: usize,
    pub terms: Vec<BvnTerm>,
}

impl BvnDecomposition {
    /// `sum_i weight_i * P_i` as a 2-dimensional matrix in the weights' mode.
    pub fn reconstruct(&self) -> MultiDimMatrix {
        let n = self.order;
        let exact = self
            .terms
            .iter()
            .all(|t| matches!(t.weight, Scalar::Exact(_)));
        if exact {
            let mut v = vec![BigRational::zero(); n * n];
            for t in &self.terms {
                let w = t.weight.as_exact().expect("exact weights");
                for r in 0..n {
                    v[r * n + t.perm.apply(r)] += w;
                }
            }
            MultiDimMatrix::from_exact(2, n, v).expect("order is positive")
        } else {
            let mut v = vec![0.0; n * n];
            for t in &self.terms {
                let w = t.weight.to_f64();
                for r in 0..n {
                    v[r * n + t.perm.apply(r)] += w;
                }
            }
            MultiDimMatrix::from_float(2, n, v).expect("order is positive")
        }
    }

    pub fn weight_sum(&self) -> Scalar {
        if let Some(Scalar::Float(_)) = self.terms.first().map(|t| &t.weight) {
            Scalar::Float(self.terms.iter().map(|t| t.weight.to_f64()).sum())
        } else {
            Scalar::Exact(
                self.terms
                    .iter()
                    .filter_map(|t| t.weight.as_exact())
                    .fold(BigRational::zero(), |a, w| a + w),
            )
        }
    }
}

impl fmt::Display for BvnDecomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let w = match &t.weight {
                Scalar::Exact(r) => format_rational(r),
                Scalar::Float(x) => format_float(*x),
            };
            write!(f, "theta {w} : perm {}", t.perm)?;
        }
        Ok(())
    }
}

fn require_doubly_stochastic(a: &MultiDimMatrix) -> Result<()> {
    if a.dim() != 2 {
        return Err(Error::Validation(format!(
            "expected a 2-dimensional matrix, got dimension {}",
            a.dim()
        )));
    }
    if !a.is_polystochastic(DEFAULT_EPS) {
        return Err(Error::Validation("matrix is not doubly stochastic".into()));
    }
    Ok(())
}

/// Greedy decomposition: take the lexicographically least positive diagonal of
/// the residual, subtract its minimum entry times the permutation, repeat.
pub fn birkhoff_decompose(a: &MultiDimMatrix) -> Result<BvnDecomposition> {
    require_doubly_stochastic(a)?;
    let n = a.order();
    let mut terms = Vec::new();
    match a.entries() {
        Entries::Exact(v) => {
            let mut res = v.clone();
            while res.iter().any(|x| x.is_positive()) {
                let support: Vec<bool> = res.iter().map(|x| x.is_positive()).collect();
                let perm = lex_least_perfect_matching(n, &support, &[])
                    .ok_or_else(|| Error::Validation("residual lost its perfect matching".into()))?;
                let theta = (0..n)
                    .map(|r| &res[r * n + perm.apply(r)])
                    .min()
                    .expect("positive order")
                    .clone();
                for r in 0..n {
                    res[r * n + perm.apply(r)] -= &theta;
                }
                terms.push(BvnTerm {
                    weight: Scalar::Exact(theta),
                    perm,
                });
            }
        }
        Entries::Float(v) => {
            let mut res: Vec<f64> = v.iter().map(|&x| if x > FLOAT_NOISE { x } else { 0.0 }).collect();
            while res.iter().any(|&x| x > FLOAT_DONE) {
                let support: Vec<bool> = res.iter().map(|&x| x > FLOAT_NOISE).collect();
                let perm = lex_least_perfect_matching(n, &support, &[])
                    .ok_or_else(|| Error::Validation("residual lost its perfect matching".into()))?;
                let (argmin, theta) = (0..n)
                    .map(|r| (r * n + perm.apply(r), res[r * n + perm.apply(r)]))
                    .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
                for r in 0..n {
                    let o = r * n + perm.apply(r);
                    res[o] -= theta;
                    if res[o] <= FLOAT_NOISE {
                        res[o] = 0.0;
                    }
                }
                res[argmin] = 0.0;
                terms.push(BvnTerm {
                    weight: Scalar::Float(theta),
                    perm,
                });
            }
        }
    }
    Ok(BvnDecomposition { order: n, terms })
}

/// Lexicographically least positive diagonal containing `cell`.
pub fn positive_diagonal_through(a: &MultiDimMatrix, cell: &[usize]) -> Result<Diagonal> {
    require_doubly_stochastic(a)?;
    let off = a.offset(cell)?;
    if !a.is_positive_at(off, DEFAULT_EPS) {
        return Err(Error::Precondition(format!("entry at {cell:?} is not positive")));
    }
    let support = a.support(DEFAULT_EPS)?;
    let perm = lex_least_perfect_matching(a.order(), &support, &[(cell[0], cell[1])])
        .ok_or_else(|| {
            Error::TheoremViolation(format!("no positive diagonal through {cell:?}"))
        })?;
    Diagonal::new(a.order(), vec![perm])
}

/// Every positive diagonal through `cell`, lexicographic.
pub fn positive_diagonals_through(support: &[bool], n: usize, cell: (usize, usize)) -> Vec<Permutation> {
    perfect_matchings(n, support)
        .into_iter()
        .filter(|p| p.apply(cell.0) == cell.1)
        .collect()
}

/// Adds the lexicographically least positive cell avoiding the rows and
/// columns of `p`, a positive partial diagonal of length 2 in a doubly
/// stochastic matrix of order 4.
pub fn extend_partial_diagonal(a: &MultiDimMatrix, p: &PartialDiagonal) -> Result<PartialDiagonal> {
    require_doubly_stochastic(a)?;
    if a.order() != 4 || p.len() != 2 {
        return Err(Error::Precondition(format!(
            "need order 4 and a partial diagonal of length 2 (got order {}, length {})",
            a.order(),
            p.len()
        )));
    }
    match check_partial_diagonal(a, p) {
        DiagonalCheck::Positive => {}
        other => {
            return Err(Error::Precondition(format!(
                "partial diagonal is not positive: {other:?}"
            )))
        }
    }
    let support = a.support(DEFAULT_EPS)?;
    let cell = extension_cell(4, &support, p.members()).ok_or_else(|| {
        Error::LemmaViolation(format!("no positive extension of {:?}", p.members()))
    })?;
    let mut members = p.members().to_vec();
    members.push(vec![cell.0, cell.1]);
    Ok(PartialDiagonal::new(members))
}

/// Least `(row, col)` in the support avoiding every row and column of `members`.
pub fn extension_cell(n: usize, support: &[bool], members: &[Vec<usize>]) -> Option<(usize, usize)> {
    let rows: u64 = members.iter().fold(0, |m, x| m | 1 << x[0]);
    let cols: u64 = members.iter().fold(0, |m, x| m | 1 << x[1]);
    (0..n * n)
        .map(|o| (o / n, o % n))
        .find(|&(r, c)| rows & (1 << r) == 0 && cols & (1 << c) == 0 && support[r * n + c])
}

/// A pattern is the support of some doubly stochastic matrix iff it is a
/// nonempty union of permutation supports.
pub fn is_realizable_support(pattern: u64, perm_masks: &[u64]) -> bool {
    let union = perm_masks
        .iter()
        .filter(|&&m| m & pattern == m)
        .fold(0u64, |acc, &m| acc | m);
    union != 0 && union == pattern
}

pub fn permutation_masks(n: usize) -> Vec<u64> {
    all_permutations(n)
        .iter()
        .map(|p| (0..n).fold(0u64, |m, r| m | 1 << (r * n + p.apply(r))))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lemma2Violation {
    pub pattern: u64,
    pub partial: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lemma2Report {
    pub order: usize,
    pub patterns_scanned: u64,
    pub realizable: u64,
    pub partial_diagonals_checked: u64,
    pub violations: Vec<Lemma2Violation>,
}

impl Lemma2Report {
    pub fn passed(&self) -> bool {
        self.realizable > 0 && self.violations.is_empty()
    }
}

impl fmt::Display for Lemma2Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "reduction: doubly stochastic supports are unions of permutation supports; \
             extension depends only on the support"
        )?;
        writeln!(f, "order: {}", self.order)?;
        writeln!(f, "extend_length: {} -> {}", self.order - 2, self.order - 1)?;
        writeln!(f, "patterns_scanned: {}", self.patterns_scanned)?;
        writeln!(f, "patterns_checked: {}", self.realizable)?;
        writeln!(f, "partial_diagonals_checked: {}", self.partial_diagonals_checked)?;
        writeln!(f, "violations: {}", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "violation: pattern {:#x} partial {:?}", v.pattern, v.partial)?;
        }
        write!(f, "verdict: {}", if self.passed() { "pass" } else { "fail" })
    }
}

pub fn verify_lemma2() -> Lemma2Report {
    verify_lemma2_order(4).expect("order 4 is supported")
}

/// Scans every (0,1) pattern of order `n`, keeps the realizable supports, and
/// checks that each positive partial diagonal of length `n - 2` extends by one
/// cell. Order 4 is the tested case; 3 and 5 run but carry no contract.
pub fn verify_lemma2_order(n: usize) -> Result<Lemma2Report> {
    if !(3..=5).contains(&n) {
        return Err(Error::Capacity {
            what: "support-pattern order",
            requested: n as u128,
            limit: 5,
        });
    }
    let masks = permutation_masks(n);
    let cells = n * n;
    let total: u64 = 1 << cells;
    let (realizable, checked, mut violations) = (0..total)
        .into_par_iter()
        .filter(|&s| is_realizable_support(s, &masks))
        .map(|s| {
            let support: Vec<bool> = (0..cells).map(|i| s & (1 << i) != 0).collect();
            let mut checked = 0u64;
            let mut bad = Vec::new();
            for_each_partial(n, &support, n - 2, &mut |members| {
                checked += 1;
                if extension_cell(n, &support, members).is_none() {
                    bad.push(Lemma2Violation {
                        pattern: s,
                        partial: members.iter().map(|m| (m[0], m[1])).collect(),
                    });
                }
            });
            (1u64, checked, bad)
        })
        .reduce(
            || (0, 0, Vec::new()),
            |mut a, b| {
                a.0 += b.0;
                a.1 += b.1;
                a.2.extend(b.2);
                a
            },
        );
    violations.sort_by(|a, b| (a.pattern, &a.partial).cmp(&(b.pattern, &b.partial)));
    Ok(Lemma2Report {
        order: n,
        patterns_scanned: total,
        realizable,
        partial_diagonals_checked: checked,
        violations,
    })
}

/// Positive partial diagonals of length `len` in `support`, rows increasing.
fn for_each_partial(n: usize, support: &[bool], len: usize, f: &mut dyn FnMut(&[Vec<usize>])) {
    fn rec(
        n: usize,
        support: &[bool],
        len: usize,
        row: usize,
        used_cols: u64,
        cur: &mut Vec<Vec<usize>>,
        f: &mut dyn FnMut(&[Vec<usize>]),
    ) {
        if cur.len() == len {
            f(cur);
            return;
        }
        if n - row < len - cur.len() {
            return;
        }
        for c in 0..n {
            if used_cols & (1 << c) == 0 && support[row * n + c] {
                cur.push(vec![row, c]);
                rec(n, support, len, row + 1, used_cols | 1 << c, cur, f);
                cur.pop();
            }
        }
        rec(n, support, len, row + 1, used_cols, cur, f);
    }
    rec(n, support, len, 0, 0, &mut Vec::new(), f);
}

/// Max-abs entrywise difference between two 2-dimensional matrices of equal shape.
pub fn max_abs_diff(a: &MultiDimMatrix, b: &MultiDimMatrix) -> Scalar {
    match (a.entries(), b.entries()) {
        (Entries::Exact(x), Entries::Exact(y)) => Scalar::Exact(
            x.iter()
                .zip(y)
                .map(|(p, q)| (p - q).abs())
                .max()
                .unwrap_or_else(BigRational::zero),
        ),
        _ => {
            let (fa, fb) = (a.to_float(), b.to_float());
            let (Entries::Float(x), Entries::Float(y)) = (fa.entries(), fb.entries()) else {
                unreachable!("to_float yields float entries")
            };
            Scalar::Float(
                x.iter()
                    .zip(y)
                    .map(|(p, q)| (p - q).abs())
                    .fold(0.0, f64::max),
            )
        }
    }
}

/// Whether all decomposition weights are positive and sum to one (exactly, or
/// within `tol` for floats).
pub fn weights_valid(d: &BvnDecomposition, tol: f64) -> bool {
    let positive = d.terms.iter().all(|t| t.weight.is_positive(0.0));
    positive
        && match d.weight_sum() {
            Scalar::Exact(s) => s.is_one(),
            Scalar::Float(s) => (s - 1.0).abs() <= tol,
        }
}
