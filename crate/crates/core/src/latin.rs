//! Latin hypercubes and their polystochastic (0,1)-matrix counterparts.
//!
//! A d-dimensional hypercube `Q` of order n corresponds to the (d+1)-dimensional
//! matrix with `a[x, s] = 1` iff `Q[x] = s`. Symbols are `0..n-1`.

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::diagonals::{diagonal_count, Diagonal, DEFAULT_DIAGONAL_CAP};
use crate::error::{input_err, Error, Result};
use crate::perm::{is_bijection, Permutation};
use crate::scalar::DEFAULT_EPS;
use crate::tensor::{advance_index, checked_len, strides, Entries, MultiDimMatrix};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatinHypercube {
    dim: usize,
    order: usize,
    cells: Vec<usize>,
}

/// Every line of the `dim`-dimensional array `cells` holds each symbol once.
pub fn is_latin(dim: usize, order: usize, cells: &[usize]) -> bool {
    if order > 64 || cells.len() != order.pow(dim as u32) {
        return false;
    }
    if cells.iter().any(|&s| s >= order) {
        return false;
    }
    let st = strides(dim, order);
    let full = full_mask(order);
    (0..dim).all(|axis| {
        let s = st[axis];
        (0..cells.len())
            .filter(|o| (o / s) % order == 0)
            .all(|start| (0..order).fold(0u64, |m, t| m | 1 << cells[start + t * s]) == full)
    })
}

fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl LatinHypercube {
    pub fn new(dim: usize, order: usize, cells: Vec<usize>) -> Result<Self> {
        checked_len(dim, order)?;
        if !is_latin(dim, order, &cells) {
            return Err(Error::Validation(format!(
                "cells do not form a latin hypercube of dimension {dim} and order {order}"
            )));
        }
        Ok(LatinHypercube { dim, order, cells })
    }

    /// Cayley table of the cyclic group: `Q[i][j] = i + j mod n`.
    pub fn cayley_cyclic(n: usize) -> Self {
        let cells = (0..n * n).map(|o| (o / n + o % n) % n).collect();
        LatinHypercube {
            dim: 2,
            order: n,
            cells,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn get(&self, idx: &[usize]) -> usize {
        let off = idx.iter().fold(0, |acc, &c| acc * self.order + c);
        self.cells[off]
    }
}

/// Latin counterpart of `z_matrix(d + 1, n)`: `Q[x] = -(x_1 + ... + x_d) mod n`.
pub fn q_hypercube(d: usize, n: usize) -> Result<LatinHypercube> {
    let len = checked_len(d, n)?;
    let mut idx = vec![0usize; d];
    let mut cells = Vec::with_capacity(len);
    for _ in 0..len {
        let s: usize = idx.iter().sum();
        cells.push((n - s % n) % n);
        advance_index(&mut idx, n);
    }
    Ok(LatinHypercube {
        dim: d,
        order: n,
        cells,
    })
}

/// The (0,1)-matrix with ones exactly where the coordinate sum is divisible by `n`.
pub fn z_matrix(dim: usize, n: usize) -> Result<MultiDimMatrix> {
    if dim < 2 {
        return input_err(format!("z_matrix needs dimension at least 2, got {dim}"));
    }
    MultiDimMatrix::indicator(dim, n, |idx| idx.iter().sum::<usize>() % n == 0)
}

pub fn to_matrix(q: &LatinHypercube) -> Result<MultiDimMatrix> {
    let n = q.order;
    checked_len(q.dim + 1, n)?;
    let mut v = vec![BigRational::zero(); q.cells.len() * n];
    for (o, &s) in q.cells.iter().enumerate() {
        v[o * n + s] = BigRational::one();
    }
    MultiDimMatrix::from_exact(q.dim + 1, n, v)
}

pub fn from_matrix(a: &MultiDimMatrix) -> Result<LatinHypercube> {
    if a.dim() < 2 {
        return Err(Error::Validation("a hypercube needs a matrix of dimension at least 2".into()));
    }
    if !a.is_zero_one() {
        return Err(Error::Validation("matrix is not a (0,1)-matrix".into()));
    }
    if !a.is_polystochastic(DEFAULT_EPS) {
        return Err(Error::Validation("matrix is not polystochastic".into()));
    }
    let n = a.order();
    let is_one = |o: usize| match a.entries() {
        Entries::Exact(v) => v[o].is_one(),
        Entries::Float(v) => v[o] == 1.0,
    };
    let cells = (0..a.len() / n)
        .map(|base| {
            (0..n)
                .find(|&s| is_one(base * n + s))
                .expect("polystochastic (0,1) lines hold exactly one 1")
        })
        .collect();
    LatinHypercube::new(a.dim() - 1, n, cells)
}

/// A diagonal of the hypercube together with the symbols it hits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transversal {
    pub diagonal: Diagonal,
    pub symbols: Vec<usize>,
}

struct TransversalSearch<'a> {
    q: &'a LatinHypercube,
    strides: Vec<usize>,
    coords: Vec<Vec<usize>>,
    used: Vec<u64>,
    symbols: Vec<usize>,
    used_symbols: u64,
}

impl<'a> TransversalSearch<'a> {
    fn new(q: &'a LatinHypercube) -> Self {
        let n = q.order;
        let mut coords = vec![vec![0; n]; q.dim];
        coords[0] = (0..n).collect();
        TransversalSearch {
            q,
            strides: strides(q.dim, n),
            coords,
            used: vec![0; q.dim],
            symbols: vec![0; n],
            used_symbols: 0,
        }
    }

    /// Walks members in first-coordinate order, choosing their remaining
    /// coordinates axis by axis. `visit` returns true to stop the walk.
    fn walk(&mut self, member: usize, axis: usize, visit: &mut dyn FnMut(&Self) -> bool) -> bool {
        let n = self.q.order;
        if member == n {
            return visit(self);
        }
        if axis == self.q.dim {
            let off: usize = (0..self.q.dim)
                .map(|a| self.coords[a][member] * self.strides[a])
                .sum();
            let s = self.q.cells[off];
            if self.used_symbols & (1 << s) != 0 {
                return false;
            }
            self.used_symbols |= 1 << s;
            self.symbols[member] = s;
            let stop = self.walk(member + 1, 1, visit);
            self.used_symbols &= !(1 << s);
            return stop;
        }
        for c in 0..n {
            if self.used[axis] & (1 << c) != 0 {
                continue;
            }
            self.used[axis] |= 1 << c;
            self.coords[axis][member] = c;
            let stop = self.walk(member, axis + 1, visit);
            self.used[axis] &= !(1 << c);
            if stop {
                return true;
            }
        }
        false
    }

    fn run(&mut self, visit: &mut dyn FnMut(&Self) -> bool) {
        let n = self.q.order;
        if self.q.dim == 1 {
            // the only diagonal is the whole line
            self.coords[0] = (0..n).collect();
            let symbols: Vec<usize> = self.q.cells.clone();
            self.symbols = symbols;
            visit(self);
            return;
        }
        self.walk(0, 1, visit);
    }

    fn current(&self) -> Transversal {
        let members: Vec<Vec<usize>> = (0..self.q.order)
            .map(|i| (0..self.q.dim).map(|a| self.coords[a][i]).collect())
            .collect();
        Transversal {
            diagonal: Diagonal::from_members(&members).expect("search builds diagonals"),
            symbols: self.symbols.clone(),
        }
    }
}

/// First transversal in the member-by-member search order, if any.
pub fn find_transversal(q: &LatinHypercube) -> Option<Transversal> {
    let mut found = None;
    TransversalSearch::new(q).run(&mut |s| {
        found = Some(s.current());
        true
    });
    found
}

pub fn has_transversal(q: &LatinHypercube) -> bool {
    find_transversal(q).is_some()
}

/// Number of transversals; equals the permanent of `to_matrix(q)`.
pub fn count_transversals(q: &LatinHypercube) -> Result<u64> {
    let requested = diagonal_count(q.dim + 1, q.order);
    if requested > DEFAULT_DIAGONAL_CAP || q.order > 10 {
        return Err(Error::Capacity {
            what: "diagonals",
            requested,
            limit: DEFAULT_DIAGONAL_CAP,
        });
    }
    let mut count = 0u64;
    let mut search = TransversalSearch::new(q);
    if q.dim == 1 {
        search.run(&mut |s| {
            if is_bijection(&s.symbols) {
                count += 1;
            }
            false
        });
    } else {
        search.run(&mut |_| {
            count += 1;
            false
        });
    }
    Ok(count)
}

/// `Q'[x] = symbol_perm(Q[axis_perms[0](x_0), ..., axis_perms[d-1](x_{d-1})])`.
pub fn apply_equivalence(
    q: &LatinHypercube,
    axis_perms: &[Vec<usize>],
    symbol_perm: &[usize],
) -> Result<LatinHypercube> {
    let n = q.order;
    if axis_perms.len() != q.dim {
        return input_err(format!("need {} axis permutations, got {}", q.dim, axis_perms.len()));
    }
    for p in axis_perms.iter().chain(std::iter::once(&symbol_perm.to_vec())) {
        if p.len() != n || !is_bijection(p) {
            return input_err(format!("{p:?} is not a permutation of order {n}"));
        }
    }
    let st = strides(q.dim, n);
    let mut idx = vec![0usize; q.dim];
    let mut cells = Vec::with_capacity(q.cells.len());
    for _ in 0..q.cells.len() {
        let src: usize = idx
            .iter()
            .enumerate()
            .map(|(a, &c)| axis_perms[a][c] * st[a])
            .sum();
        cells.push(symbol_perm[q.cells[src]]);
        advance_index(&mut idx, n);
    }
    Ok(LatinHypercube {
        dim: q.dim,
        order: n,
        cells,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EnumOptions {
    /// Skip the reduced-form normalization and list every hypercube.
    pub unrestricted: bool,
    /// Lift the default capacity limits.
    pub unsafe_scope: bool,
}

/// Largest order enumerated by default, per dimension.
pub fn enumeration_limit(dim: usize, unrestricted: bool) -> usize {
    match (dim, unrestricted) {
        (1, _) => 8,
        (2, false) => 6,
        (2, true) => 5,
        (3, _) => 4,
        (4, _) => 3,
        _ => 2,
    }
}

/// Every latin hypercube of the given shape, in reduced form unless
/// `opts.unrestricted`. Reduced means each line through the origin reads
/// `0, 1, ..., n-1`; every hypercube is equivalent to exactly one reduced form
/// under a free action of `n! * ((n-1)!)^(d-1)` symbol and hyperplane relabelings.
pub fn enumerate_latin(dim: usize, order: usize, opts: EnumOptions) -> Result<LatinIter> {
    let limit = enumeration_limit(dim, opts.unrestricted);
    if !opts.unsafe_scope && order > limit {
        return Err(Error::Capacity {
            what: "latin hypercube order",
            requested: order as u128,
            limit: limit as u128,
        });
    }
    let mut search = LatinSearch::new(dim, order)?;
    if !opts.unrestricted {
        search = search.reduced();
    }
    Ok(search.into_iter())
}

/// Cell-by-cell backtracking over latin hypercubes with optional pinned
/// cells, forbidden symbols, and randomized value order.
#[derive(Clone, Debug)]
pub struct LatinSearch {
    dim: usize,
    order: usize,
    pinned: Vec<Option<usize>>,
    forbidden: Vec<u64>,
}

impl LatinSearch {
    pub fn new(dim: usize, order: usize) -> Result<Self> {
        let len = checked_len(dim, order)?;
        if order > 64 {
            return input_err("latin search supports order at most 64");
        }
        Ok(LatinSearch {
            dim,
            order,
            pinned: vec![None; len],
            forbidden: vec![0; len],
        })
    }

    /// Pins every line through the origin to `0, 1, ..., n-1`.
    pub fn reduced(mut self) -> Self {
        let st = strides(self.dim, self.order);
        for s in &st {
            for x in 0..self.order {
                self.pinned[x * s] = Some(x);
            }
        }
        self
    }

    pub fn pin(mut self, cell: &[usize], symbol: usize) -> Self {
        let off = cell.iter().fold(0, |acc, &c| acc * self.order + c);
        self.pinned[off] = Some(symbol);
        self
    }

    pub fn forbid(mut self, cell: &[usize], symbol: usize) -> Self {
        let off = cell.iter().fold(0, |acc, &c| acc * self.order + c);
        self.forbidden[off] |= 1 << symbol;
        self
    }

    /// First solution found with value order shuffled by `rng` at every cell.
    pub fn random<R: Rng>(self, rng: &mut R) -> Option<LatinHypercube> {
        let mut it = self.into_iter();
        it.shuffle_with(rng)
    }
}

impl IntoIterator for LatinSearch {
    type Item = LatinHypercube;
    type IntoIter = LatinIter;

    fn into_iter(self) -> LatinIter {
        LatinIter::new(self)
    }
}

pub struct LatinIter {
    dim: usize,
    n: usize,
    strides: Vec<usize>,
    cells: Vec<usize>,
    free: Vec<usize>,
    masks: Vec<Vec<u64>>,
    forbidden: Vec<u64>,
    cand: Vec<usize>,
    values: Vec<Vec<usize>>,
    depth: usize,
    fresh: bool,
    finished: bool,
}

const UNSET: usize = usize::MAX;

impl LatinIter {
    fn new(search: LatinSearch) -> Self {
        let LatinSearch {
            dim,
            order: n,
            pinned,
            forbidden,
        } = search;
        let st = strides(dim, n);
        let lines = pinned.len() / n;
        let mut it = LatinIter {
            dim,
            n,
            strides: st,
            cells: vec![UNSET; pinned.len()],
            free: Vec::new(),
            masks: vec![vec![0; lines]; dim],
            forbidden,
            cand: Vec::new(),
            values: Vec::new(),
            depth: 0,
            fresh: true,
            finished: false,
        };
        for (o, p) in pinned.iter().enumerate() {
            match *p {
                Some(s) => {
                    if s >= n || it.allowed(o) & (1 << s) == 0 {
                        it.finished = true;
                    } else {
                        it.assign(o, s);
                    }
                }
                None => it.free.push(o),
            }
        }
        it.cand = vec![0; it.free.len()];
        it.values = vec![(0..n).collect(); it.free.len()];
        it
    }

    fn line_id(&self, axis: usize, o: usize) -> usize {
        let s = self.strides[axis];
        (o / (s * self.n)) * s + o % s
    }

    fn allowed(&self, o: usize) -> u64 {
        let used = (0..self.dim).fold(self.forbidden[o], |m, a| m | self.masks[a][self.line_id(a, o)]);
        !used & full_mask(self.n)
    }

    fn assign(&mut self, o: usize, s: usize) {
        self.cells[o] = s;
        for a in 0..self.dim {
            let l = self.line_id(a, o);
            self.masks[a][l] |= 1 << s;
        }
    }

    fn unassign(&mut self, o: usize) {
        let s = self.cells[o];
        for a in 0..self.dim {
            let l = self.line_id(a, o);
            self.masks[a][l] &= !(1 << s);
        }
        self.cells[o] = UNSET;
    }

    fn advance<R: Rng>(&mut self, mut rng: Option<&mut R>) -> Option<LatinHypercube> {
        if self.finished {
            return None;
        }
        if !self.fresh {
            if self.free.is_empty() {
                self.finished = true;
                return None;
            }
            self.depth = self.free.len() - 1;
            let o = self.free[self.depth];
            self.unassign(o);
        }
        self.fresh = false;
        loop {
            if self.depth == self.free.len() {
                return Some(LatinHypercube {
                    dim: self.dim,
                    order: self.n,
                    cells: self.cells.clone(),
                });
            }
            let d = self.depth;
            let o = self.free[d];
            if self.cand[d] == 0 {
                if let Some(r) = rng.as_deref_mut() {
                    self.values[d].shuffle(r);
                }
            }
            let avail = self.allowed(o);
            let mut next = None;
            while self.cand[d] < self.n {
                let s = self.values[d][self.cand[d]];
                self.cand[d] += 1;
                if avail & (1 << s) != 0 {
                    next = Some(s);
                    break;
                }
            }
            match next {
                Some(s) => {
                    self.assign(o, s);
                    self.depth += 1;
                    if self.depth < self.free.len() {
                        self.cand[self.depth] = 0;
                    }
                }
                None => {
                    self.cand[d] = 0;
                    if d == 0 {
                        self.finished = true;
                        return None;
                    }
                    self.depth -= 1;
                    let prev = self.free[self.depth];
                    self.unassign(prev);
                }
            }
        }
    }

    fn shuffle_with<R: Rng>(&mut self, rng: &mut R) -> Option<LatinHypercube> {
        self.advance(Some(rng))
    }
}

impl Iterator for LatinIter {
    type Item = LatinHypercube;

    fn next(&mut self) -> Option<LatinHypercube> {
        self.advance::<rand_chacha::ChaCha8Rng>(None)
    }
}

/// Convenience for building a hypercube from its permutation rows (d = 2).
pub fn square_from_rows(rows: &[Vec<usize>]) -> Result<LatinHypercube> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return input_err("square rows must all have length equal to the row count");
    }
    LatinHypercube::new(2, n, rows.concat())
}

/// The 1-dimensional hypercube whose matrix is the permutation matrix of `p`.
pub fn permutation_hypercube(p: &Permutation) -> LatinHypercube {
    LatinHypercube {
        dim: 1,
        order: p.len(),
        cells: p.as_slice().to_vec(),
    }
}
