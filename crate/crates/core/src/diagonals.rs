//! Diagonals, permanents, and positive-diagonal search.
//!
//! A diagonal of a d-dimensional matrix of order n is stored as the tuple of
//! permutations `(s_2, ..., s_d)` whose member `i` is `(i, s_2(i), ..., s_d(i))`.

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{input_err, Error, Result};
use crate::perm::{all_permutations, factorial, is_bijection, Permutation};
use crate::scalar::{Scalar, DEFAULT_EPS};
use crate::tensor::{strides, Entries, MultiDimMatrix};

/// Default ceiling on the number of diagonals an enumeration may visit.
pub const DEFAULT_DIAGONAL_CAP: u128 = 1_000_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Diagonal {
    order: usize,
    perms: Vec<Permutation>,
}

impl Diagonal {
    pub fn new(order: usize, perms: Vec<Permutation>) -> Result<Self> {
        if let Some(p) = perms.iter().find(|p| p.len() != order) {
            return input_err(format!("permutation {p} does not have length {order}"));
        }
        Ok(Diagonal { order, perms })
    }

    /// Builds the diagonal from its member indices in any order.
    pub fn from_members(members: &[Vec<usize>]) -> Result<Self> {
        let n = members.len();
        if n == 0 {
            return input_err("a diagonal needs at least one member");
        }
        let dim = members[0].len();
        if dim == 0 || members.iter().any(|m| m.len() != dim) {
            return input_err("diagonal members must share a positive dimension");
        }
        for axis in 0..dim {
            let col: Vec<usize> = members.iter().map(|m| m[axis]).collect();
            if !is_bijection(&col) {
                return input_err(format!(
                    "members do not cover each coordinate 0..{n} exactly once on axis {axis}"
                ));
            }
        }
        let mut sorted: Vec<&Vec<usize>> = members.iter().collect();
        sorted.sort_by_key(|m| m[0]);
        let perms = (1..dim)
            .map(|axis| Permutation::new(sorted.iter().map(|m| m[axis]).collect()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Diagonal { order: n, perms })
    }

    pub fn dim(&self) -> usize {
        self.perms.len() + 1
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn perms(&self) -> &[Permutation] {
        &self.perms
    }

    pub fn member(&self, i: usize) -> Vec<usize> {
        std::iter::once(i)
            .chain(self.perms.iter().map(|p| p.apply(i)))
            .collect()
    }

    /// Members in first-coordinate order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        (0..self.order).map(|i| self.member(i)).collect()
    }

    pub fn to_partial(&self) -> PartialDiagonal {
        PartialDiagonal::new(self.members())
    }
}

pub(crate) fn format_index(idx: &[usize]) -> String {
    let parts: Vec<String> = idx.iter().map(|c| c.to_string()).collect();
    format!("({})", parts.join(","))
}

impl fmt::Display for Diagonal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("diag")?;
        for m in self.members() {
            write!(f, " {}", format_index(&m))?;
        }
        Ok(())
    }
}

pub(crate) fn parse_index(s: &str) -> Result<Vec<usize>> {
    let inner = s
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| Error::Input(format!("`{s}` is not a parenthesized index")))?;
    inner
        .split(',')
        .map(|c| {
            c.trim()
                .parse::<usize>()
                .map_err(|_| Error::Input(format!("bad coordinate in `{s}`")))
        })
        .collect()
}

impl FromStr for Diagonal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut toks = s.split_whitespace();
        if toks.next() != Some("diag") {
            return input_err("diagonal text must start with `diag`");
        }
        let members = toks.map(parse_index).collect::<Result<Vec<_>>>()?;
        Diagonal::from_members(&members)
    }
}

/// A set of indices that should be pairwise distinct in every component.
/// Construction does not validate; see [`check_partial_diagonal`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartialDiagonal {
    members: Vec<Vec<usize>>,
}

impl PartialDiagonal {
    pub fn new(members: Vec<Vec<usize>>) -> Self {
        PartialDiagonal { members }
    }

    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, idx: &[usize]) -> bool {
        self.members.iter().any(|m| m == idx)
    }

    /// Members pairwise distinct in every component.
    pub fn is_well_formed(&self) -> bool {
        self.members.iter().enumerate().all(|(i, a)| {
            self.members[i + 1..]
                .iter()
                .all(|b| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x != y))
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DiagonalCheck {
    Positive,
    /// A member whose entry is zero.
    NonPositive { index: Vec<usize> },
    /// Two members agree on `axis`.
    SharedComponent {
        first: Vec<usize>,
        second: Vec<usize>,
        axis: usize,
    },
    /// A member is not a valid index of the matrix.
    OutOfRange { index: Vec<usize> },
    /// More members than the order allows.
    TooLong,
}

pub fn check_partial_diagonal(a: &MultiDimMatrix, p: &PartialDiagonal) -> DiagonalCheck {
    if p.len() > a.order() {
        return DiagonalCheck::TooLong;
    }
    for m in p.members() {
        if a.offset(m).is_err() {
            return DiagonalCheck::OutOfRange { index: m.clone() };
        }
    }
    for (i, x) in p.members().iter().enumerate() {
        for y in &p.members()[i + 1..] {
            if let Some(axis) = (0..x.len()).find(|&k| x[k] == y[k]) {
                return DiagonalCheck::SharedComponent {
                    first: x.clone(),
                    second: y.clone(),
                    axis,
                };
            }
        }
    }
    for m in p.members() {
        let off = a.offset(m).expect("checked above");
        if !a.is_positive_at(off, DEFAULT_EPS) {
            return DiagonalCheck::NonPositive { index: m.clone() };
        }
    }
    DiagonalCheck::Positive
}

pub fn is_positive_partial_diagonal(a: &MultiDimMatrix, p: &PartialDiagonal) -> bool {
    check_partial_diagonal(a, p) == DiagonalCheck::Positive
}

pub fn is_positive_diagonal(a: &MultiDimMatrix, diag: &Diagonal) -> bool {
    diag.dim() == a.dim()
        && diag.order() == a.order()
        && is_positive_partial_diagonal(a, &diag.to_partial())
}

/// `(n!)^(d-1)`, saturating.
pub fn diagonal_count(dim: usize, order: usize) -> u128 {
    let f = factorial(order);
    (1..dim).fold(1u128, |acc, _| acc.saturating_mul(f))
}

fn check_cap(dim: usize, order: usize, cap: u128) -> Result<()> {
    if dim == 0 || order == 0 {
        return input_err("dimension and order must be positive");
    }
    // n! itself must fit in memory as a permutation table
    if dim > 1 && order > 10 {
        return Err(Error::Capacity {
            what: "diagonals",
            requested: diagonal_count(dim, order),
            limit: cap,
        });
    }
    let count = diagonal_count(dim, order);
    if count > cap {
        return Err(Error::Capacity {
            what: "diagonals",
            requested: count,
            limit: cap,
        });
    }
    Ok(())
}

/// Lexicographic stream over permutation tuples.
pub struct DiagonalIter {
    order: usize,
    table: Vec<Permutation>,
    counters: Vec<usize>,
    done: bool,
}

impl Iterator for DiagonalIter {
    type Item = Diagonal;

    fn next(&mut self) -> Option<Diagonal> {
        if self.done {
            return None;
        }
        let diag = Diagonal {
            order: self.order,
            perms: self.counters.iter().map(|&c| self.table[c].clone()).collect(),
        };
        self.done = true;
        for c in self.counters.iter_mut().rev() {
            *c += 1;
            if *c < self.table.len() {
                self.done = false;
                break;
            }
            *c = 0;
        }
        Some(diag)
    }
}

pub fn enumerate_diagonals(dim: usize, order: usize) -> Result<DiagonalIter> {
    enumerate_diagonals_with_cap(dim, order, DEFAULT_DIAGONAL_CAP)
}

pub fn enumerate_diagonals_with_cap(dim: usize, order: usize, cap: u128) -> Result<DiagonalIter> {
    check_cap(dim, order, cap)?;
    Ok(DiagonalIter {
        order,
        table: if dim > 1 { all_permutations(order) } else { Vec::new() },
        counters: vec![0; dim - 1],
        done: false,
    })
}

trait Weight: Clone + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn mul_ref(&self, other: &Self) -> Self;
    fn add_ref(&mut self, other: &Self);
}

impl Weight for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn add_ref(&mut self, other: &Self) {
        *self += other;
    }
}

impl Weight for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn add_ref(&mut self, other: &Self) {
        *self += other;
    }
}

impl Weight for u64 {
    fn zero() -> Self {
        0
    }
    fn one() -> Self {
        1
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn add_ref(&mut self, other: &Self) {
        *self += other;
    }
}

/// Offset tables: `base[i] = i * stride_0`, `contrib[a][p][i] = table[p](i) * stride_{a+1}`.
struct OffsetTables {
    n: usize,
    base: Vec<usize>,
    contrib: Vec<Vec<Vec<usize>>>,
    perm_count: usize,
}

impl OffsetTables {
    fn new(dim: usize, order: usize) -> Self {
        let st = strides(dim, order);
        let table = if dim > 1 { all_permutations(order) } else { Vec::new() };
        let contrib = (1..dim)
            .map(|axis| {
                table
                    .iter()
                    .map(|p| p.as_slice().iter().map(|&c| c * st[axis]).collect())
                    .collect()
            })
            .collect();
        OffsetTables {
            n: order,
            base: (0..order).map(|i| i * st[0]).collect(),
            contrib,
            perm_count: table.len(),
        }
    }

    /// Sum over all tuples whose first permutation is `first` (or the single
    /// empty tuple in dimension 1), of the product of `values` along the diagonal.
    fn partial_sum<T: Weight>(&self, values: &[T], first: Option<usize>) -> T {
        let rest = self.contrib.len().saturating_sub(1);
        let mut counters = vec![0usize; rest];
        let mut total = T::zero();
        let mut offs = vec![0usize; self.n];
        loop {
            for (i, o) in offs.iter_mut().enumerate() {
                *o = self.base[i];
                if let Some(f) = first {
                    *o += self.contrib[0][f][i];
                    for (a, &c) in counters.iter().enumerate() {
                        *o += self.contrib[a + 1][c][i];
                    }
                }
            }
            let mut prod = T::one();
            for &o in &offs {
                if values[o].is_zero() {
                    prod = T::zero();
                    break;
                }
                prod = prod.mul_ref(&values[o]);
            }
            if !prod.is_zero() {
                total.add_ref(&prod);
            }
            let mut advanced = false;
            for c in counters.iter_mut().rev() {
                *c += 1;
                if *c < self.perm_count {
                    advanced = true;
                    break;
                }
                *c = 0;
            }
            if !advanced {
                return total;
            }
        }
    }

    fn total<T: Weight>(&self, values: &[T]) -> T {
        if self.contrib.is_empty() {
            return self.partial_sum(values, None);
        }
        let parts: Vec<T> = (0..self.perm_count)
            .into_par_iter()
            .map(|f| self.partial_sum(values, Some(f)))
            .collect();
        parts.iter().fold(T::zero(), |mut acc, p| {
            acc.add_ref(p);
            acc
        })
    }
}

pub fn permanent(a: &MultiDimMatrix) -> Result<Scalar> {
    permanent_with_cap(a, DEFAULT_DIAGONAL_CAP)
}

/// Sum over all diagonals of the product of their entries. Exact in exact mode;
/// float partial sums are combined in a fixed order.
pub fn permanent_with_cap(a: &MultiDimMatrix, cap: u128) -> Result<Scalar> {
    check_cap(a.dim(), a.order(), cap)?;
    let tables = OffsetTables::new(a.dim(), a.order());
    Ok(match a.entries() {
        Entries::Exact(v) => Scalar::Exact(tables.total(v)),
        Entries::Float(v) => Scalar::Float(tables.total(v)),
    })
}

pub fn count_positive_diagonals(a: &MultiDimMatrix) -> Result<u64> {
    let support: Vec<u64> = (0..a.len())
        .map(|o| a.is_positive_at(o, DEFAULT_EPS) as u64)
        .collect();
    count_in_support(a.dim(), a.order(), &support, DEFAULT_DIAGONAL_CAP)
}

fn count_in_support(dim: usize, order: usize, support: &[u64], cap: u128) -> Result<u64> {
    check_cap(dim, order, cap)?;
    Ok(OffsetTables::new(dim, order).total(support))
}

pub fn find_positive_diagonal(a: &MultiDimMatrix) -> Option<Diagonal> {
    let support: Vec<bool> = (0..a.len()).map(|o| a.is_positive_at(o, DEFAULT_EPS)).collect();
    find_positive_diagonal_in_support(a.dim(), a.order(), &support)
}

/// Lexicographically least positive diagonal (in permutation-tuple order) of
/// the pattern `support`, found by axis-major backtracking.
pub fn find_positive_diagonal_in_support(
    dim: usize,
    order: usize,
    support: &[bool],
) -> Option<Diagonal> {
    assert!(order <= 64, "column masks hold at most 64 coordinates");
    let n = order;
    if dim == 1 {
        return if support.iter().all(|&s| s) {
            Some(Diagonal {
                order: n,
                perms: Vec::new(),
            })
        } else {
            None
        };
    }
    // reach[a][prefix]: some completion of coordinates 0..=a is in the support
    let mut reach: Vec<Vec<bool>> = vec![Vec::new(); dim];
    reach[dim - 1] = support.to_vec();
    for a in (0..dim - 1).rev() {
        reach[a] = reach[a + 1]
            .chunks(n)
            .map(|c| c.iter().any(|&x| x))
            .collect();
    }
    let mut search = PositiveSearch {
        dim,
        n,
        reach,
        coords: vec![vec![0; n]; dim],
        used: vec![0u64; dim],
    };
    for i in 0..n {
        search.coords[0][i] = i;
    }
    if !search.descend(0) {
        return None;
    }
    let perms = search.coords[1..]
        .iter()
        .map(|c| Permutation::new(c.clone()).expect("search assigns bijections"))
        .collect();
    Some(Diagonal { order: n, perms })
}

struct PositiveSearch {
    dim: usize,
    n: usize,
    reach: Vec<Vec<bool>>,
    coords: Vec<Vec<usize>>,
    used: Vec<u64>,
}

impl PositiveSearch {
    fn prefix_offset(&self, member: usize, axis: usize) -> usize {
        (0..=axis).fold(0, |acc, a| acc * self.n + self.coords[a][member])
    }

    /// `slot` runs over (axis 1.., member 0..n) with the axis most significant.
    fn descend(&mut self, slot: usize) -> bool {
        let total = (self.dim - 1) * self.n;
        if slot == total {
            return true;
        }
        let axis = 1 + slot / self.n;
        let member = slot % self.n;
        for c in 0..self.n {
            if self.used[axis] & (1 << c) != 0 {
                continue;
            }
            self.coords[axis][member] = c;
            if !self.reach[axis][self.prefix_offset(member, axis)] {
                continue;
            }
            self.used[axis] |= 1 << c;
            if self.descend(slot + 1) {
                return true;
            }
            self.used[axis] &= !(1 << c);
        }
        false
    }
}
