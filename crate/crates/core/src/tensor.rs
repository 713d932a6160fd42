//! Dense d-dimensional matrices of order n.
//!
//! Entries are stored row-major with the last coordinate fastest, so the
//! offset of `(a_1, ..., a_d)` is `sum_i a_i * n^(d-i)`.


use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{input_err, Error, Result};
use crate::perm::is_bijection;
use crate::scalar::{rational_to_f64, NumericMode, Scalar};

/// Largest number of entries a dense matrix may hold.
pub const MAX_ENTRIES: u128 = 1 << 28;

#[derive(Clone, Debug, PartialEq)]
pub enum Entries {
    Exact(Vec<BigRational>),
    Float(Vec<f64>),
}

impl Entries {
    pub fn len(&self) -> usize {
        match self {
            Entries::Exact(v) => v.len(),
            Entries::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mode(&self) -> NumericMode {
        match self {
            Entries::Exact(_) => NumericMode::Exact,
            Entries::Float(_) => NumericMode::Float,
        }
    }

    fn gather(&self, offsets: impl Iterator<Item = usize>) -> Entries {
        match self {
            Entries::Exact(v) => Entries::Exact(offsets.map(|o| v[o].clone()).collect()),
            Entries::Float(v) => Entries::Float(offsets.map(|o| v[o]).collect()),
        }
    }
}

/// A plane of a matrix: some positions fixed to a coordinate, the rest free.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PlaneRef {
    fixed: Vec<Option<usize>>,
}

impl PlaneRef {
    /// `fixed[i] = Some(c)` pins position `i` to coordinate `c`; `None` leaves it free.
    pub fn new(fixed: Vec<Option<usize>>) -> Self {
        PlaneRef { fixed }
    }

    /// The line along `axis` through `point` (the coordinate of `point` on `axis` is ignored).
    pub fn line(axis: usize, point: &[usize]) -> Self {
        let fixed = point
            .iter()
            .enumerate()
            .map(|(i, &c)| if i == axis { None } else { Some(c) })
            .collect();
        PlaneRef { fixed }
    }

    pub fn all_free(dim: usize) -> Self {
        PlaneRef { fixed: vec![None; dim] }
    }

    pub fn positions(&self) -> &[Option<usize>] {
        &self.fixed
    }

    pub fn free_positions(&self) -> Vec<usize> {
        (0..self.fixed.len())
            .filter(|&i| self.fixed[i].is_none())
            .collect()
    }

    /// Number of free positions.
    pub fn plane_dim(&self) -> usize {
        self.fixed.iter().filter(|f| f.is_none()).count()
    }

    pub fn is_line(&self) -> bool {
        self.plane_dim() == 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiDimMatrix {
    dim: usize,
    order: usize,
    entries: Entries,
}

pub(crate) fn checked_len(dim: usize, order: usize) -> Result<usize> {
    if dim == 0 || order == 0 {
        return input_err(format!("dimension and order must be positive (got {dim}, {order})"));
    }
    let mut len: u128 = 1;
    for _ in 0..dim {
        len = len.saturating_mul(order as u128);
        if len > MAX_ENTRIES {
            return Err(Error::Capacity {
                what: "matrix entries",
                requested: (order as u128).saturating_pow(dim as u32),
                limit: MAX_ENTRIES,
            });
        }
    }
    Ok(len as usize)
}

impl MultiDimMatrix {
    pub fn new(dim: usize, order: usize, entries: Entries) -> Result<Self> {
        let len = checked_len(dim, order)?;
        if entries.len() != len {
            return input_err(format!(
                "expected {len} entries for dimension {dim} order {order}, got {}",
                entries.len()
            ));
        }
        if let Entries::Float(v) = &entries {
            if let Some(x) = v.iter().find(|x| !x.is_finite()) {
                return Err(Error::InvalidMatrix(format!("non-finite entry {x}")));
            }
        }
        Ok(MultiDimMatrix {
            dim,
            order,
            entries,
        })
    }

    pub fn from_exact(dim: usize, order: usize, entries: Vec<BigRational>) -> Result<Self> {
        Self::new(dim, order, Entries::Exact(entries))
    }

    pub fn from_float(dim: usize, order: usize, entries: Vec<f64>) -> Result<Self> {
        Self::new(dim, order, Entries::Float(entries))
    }

    pub fn from_fn_exact(
        dim: usize,
        order: usize,
        mut f: impl FnMut(&[usize]) -> BigRational,
    ) -> Result<Self> {
        let len = checked_len(dim, order)?;
        let mut idx = vec![0usize; dim];
        let mut v = Vec::with_capacity(len);
        for _ in 0..len {
            v.push(f(&idx));
            advance_index(&mut idx, order);
        }
        Self::from_exact(dim, order, v)
    }

    /// A (0,1)-matrix in exact mode with ones where `f` holds.
    pub fn indicator(dim: usize, order: usize, mut f: impl FnMut(&[usize]) -> bool) -> Result<Self> {
        Self::from_fn_exact(dim, order, |idx| {
            if f(idx) {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        })
    }

    pub fn zeros(dim: usize, order: usize, mode: NumericMode) -> Result<Self> {
        let len = checked_len(dim, order)?;
        let entries = match mode {
            NumericMode::Exact => Entries::Exact(vec![BigRational::zero(); len]),
            NumericMode::Float => Entries::Float(vec![0.0; len]),
        };
        Self::new(dim, order, entries)
    }

    pub fn constant(dim: usize, order: usize, value: BigRational) -> Result<Self> {
        let len = checked_len(dim, order)?;
        Self::from_exact(dim, order, vec![value; len])
    }

    /// The 2-dimensional identity matrix of order `n` (exact).
    pub fn identity(n: usize) -> Self {
        Self::indicator(2, n, |idx| idx[0] == idx[1]).expect("identity of positive order")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mode(&self) -> NumericMode {
        self.entries.mode()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &Entries {
        &self.entries
    }

    /// Offset step for each axis.
    pub fn strides(&self) -> Vec<usize> {
        strides(self.dim, self.order)
    }

    pub fn offset(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.dim {
            return input_err(format!(
                "index {idx:?} has {} components, matrix has dimension {}",
                idx.len(),
                self.dim
            ));
        }
        let mut off = 0;
        for &c in idx {
            if c >= self.order {
                return input_err(format!("index {idx:?} out of range for order {}", self.order));
            }
            off = off * self.order + c;
        }
        Ok(off)
    }

    pub fn index_of(&self, mut offset: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        for slot in idx.iter_mut().rev() {
            *slot = offset % self.order;
            offset /= self.order;
        }
        idx
    }

    pub fn get(&self, idx: &[usize]) -> Result<Scalar> {
        let off = self.offset(idx)?;
        Ok(self.get_at(off))
    }

    pub fn get_at(&self, offset: usize) -> Scalar {
        match &self.entries {
            Entries::Exact(v) => Scalar::Exact(v[offset].clone()),
            Entries::Float(v) => Scalar::Float(v[offset]),
        }
    }

    pub fn is_positive_at(&self, offset: usize, eps: f64) -> bool {
        match &self.entries {
            Entries::Exact(v) => v[offset].is_positive(),
            Entries::Float(v) => v[offset] > eps,
        }
    }

    /// Positivity mask over all offsets. Entries below zero (below `-eps` in
    /// float mode) make the matrix invalid.
    pub fn support(&self, eps: f64) -> Result<Vec<bool>> {
        match &self.entries {
            Entries::Exact(v) => v
                .iter()
                .enumerate()
                .map(|(o, x)| {
                    if x.is_negative() {
                        Err(self.negative_entry(o))
                    } else {
                        Ok(x.is_positive())
                    }
                })
                .collect(),
            Entries::Float(v) => v
                .iter()
                .enumerate()
                .map(|(o, &x)| {
                    if x < -eps {
                        Err(self.negative_entry(o))
                    } else {
                        Ok(x > eps)
                    }
                })
                .collect(),
        }
    }

    fn negative_entry(&self, offset: usize) -> Error {
        Error::InvalidMatrix(format!(
            "negative entry {} at {:?}",
            self.get_at(offset),
            self.index_of(offset)
        ))
    }

    /// Offsets of the first entry of every line along `axis`.
    pub fn line_starts(&self, axis: usize) -> Vec<usize> {
        let stride = self.strides()[axis];
        (0..self.len())
            .filter(|o| (o / stride) % self.order == 0)
            .collect()
    }

    /// Every line of the matrix, axis by axis; there are `d * n^(d-1)` of them.
    pub fn lines(&self) -> impl Iterator<Item = PlaneRef> + '_ {
        (0..self.dim).flat_map(move |axis| {
            self.line_starts(axis)
                .into_iter()
                .map(move |start| PlaneRef::line(axis, &self.index_of(start)))
        })
    }

    fn plane_offsets(&self, plane: &PlaneRef) -> Result<Vec<usize>> {
        if plane.positions().len() != self.dim {
            return input_err(format!(
                "plane has {} positions, matrix has dimension {}",
                plane.positions().len(),
                self.dim
            ));
        }
        let strides = self.strides();
        let mut base = 0;
        let mut free = Vec::new();
        for (axis, f) in plane.positions().iter().enumerate() {
            match *f {
                Some(c) if c >= self.order => {
                    return input_err(format!("fixed coordinate {c} out of range on axis {axis}"))
                }
                Some(c) => base += c * strides[axis],
                None => free.push(strides[axis]),
            }
        }
        let k = free.len();
        let count = self.order.pow(k as u32);
        let mut out = Vec::with_capacity(count);
        let mut sub = vec![0usize; k];
        for _ in 0..count {
            out.push(base + sub.iter().zip(&free).map(|(c, s)| c * s).sum::<usize>());
            advance_index(&mut sub, self.order);
        }
        Ok(out)
    }

    pub fn line_sum(&self, line: &PlaneRef) -> Result<Scalar> {
        if !line.is_line() {
            return input_err(format!("plane of dimension {} is not a line", line.plane_dim()));
        }
        let offs = self.plane_offsets(line)?;
        Ok(self.sum_offsets(offs.into_iter()))
    }

    fn sum_offsets(&self, offs: impl Iterator<Item = usize>) -> Scalar {
        match &self.entries {
            Entries::Exact(v) => Scalar::Exact(offs.fold(BigRational::zero(), |acc, o| acc + &v[o])),
            Entries::Float(v) => Scalar::Float(offs.map(|o| v[o]).sum()),
        }
    }

    /// Nonnegative with every line summing to one. Exact mode compares exactly;
    /// float mode allows `eps` slack on both conditions.
    pub fn is_polystochastic(&self, eps: f64) -> bool {
        let nonneg = match &self.entries {
            Entries::Exact(v) => v.iter().all(|x| !x.is_negative()),
            Entries::Float(v) => v.iter().all(|&x| x >= -eps),
        };
        if !nonneg {
            return false;
        }
        let strides = self.strides();
        let n = self.order;
        (0..self.dim).all(|axis| {
            let s = strides[axis];
            self.line_starts(axis).into_iter().all(|start| {
                let offs = (0..n).map(move |t| start + t * s);
                match self.sum_offsets(offs) {
                    Scalar::Exact(r) => r.is_one(),
                    Scalar::Float(x) => (x - 1.0).abs() <= eps,
                }
            })
        })
    }

    pub fn is_zero_one(&self) -> bool {
        match &self.entries {
            Entries::Exact(v) => v.iter().all(|x| x.is_zero() || x.is_one()),
            Entries::Float(v) => v.iter().all(|&x| x == 0.0 || x == 1.0),
        }
    }

    /// The k-dimensional submatrix spanned by the free positions of `plane`,
    /// which keep their relative order.
    pub fn extract_plane(&self, plane: &PlaneRef) -> Result<Self> {
        let k = plane.plane_dim();
        if k == 0 {
            return input_err("plane has no free positions");
        }
        let offs = self.plane_offsets(plane)?;
        Self::new(k, self.order, self.entries.gather(offs.into_iter()))
    }

    /// `A'` with `A'[.., x_axis, ..] = A[.., perm(x_axis), ..]`.
    pub fn relabel(&self, axis: usize, perm: &[usize]) -> Result<Self> {
        if axis >= self.dim {
            return input_err(format!("axis {axis} out of range for dimension {}", self.dim));
        }
        if perm.len() != self.order || !is_bijection(perm) {
            return input_err(format!("{perm:?} is not a permutation of order {}", self.order));
        }
        let stride = self.strides()[axis];
        let n = self.order;
        let offs = (0..self.len()).map(|o| {
            let c = (o / stride) % n;
            o - c * stride + perm[c] * stride
        });
        Self::new(self.dim, n, self.entries.gather(offs))
    }

    /// `A'[x] = A[y]` with `y[axes[i]] = x[i]`: position `i` of the result
    /// is position `axes[i]` of the source.
    pub fn permute_axes(&self, axes: &[usize]) -> Result<Self> {
        if axes.len() != self.dim || !is_bijection(axes) {
            return input_err(format!("{axes:?} is not a permutation of {} axes", self.dim));
        }
        let src_strides = self.strides();
        let mut idx = vec![0usize; self.dim];
        let mut offs = Vec::with_capacity(self.len());
        for _ in 0..self.len() {
            offs.push(
                idx.iter()
                    .zip(axes)
                    .map(|(&c, &a)| c * src_strides[a])
                    .sum(),
            );
            advance_index(&mut idx, self.order);
        }
        Self::new(self.dim, self.order, self.entries.gather(offs.into_iter()))
    }

    pub fn to_float(&self) -> Self {
        let entries = match &self.entries {
            Entries::Exact(v) => Entries::Float(v.iter().map(rational_to_f64).collect()),
            Entries::Float(v) => Entries::Float(v.clone()),
        };
        MultiDimMatrix {
            dim: self.dim,
            order: self.order,
            entries,
        }
    }

    /// Exact rational images of the stored entries (floats convert without rounding).
    pub fn to_exact(&self) -> Self {
        let entries = match &self.entries {
            Entries::Exact(v) => Entries::Exact(v.clone()),
            Entries::Float(v) => Entries::Exact(
                v.iter()
                    .map(|&x| BigRational::from_float(x).expect("finite entries"))
                    .collect(),
            ),
        };
        MultiDimMatrix {
            dim: self.dim,
            order: self.order,
            entries,
        }
    }
}

pub(crate) fn strides(dim: usize, order: usize) -> Vec<usize> {
    let mut s = vec![1usize; dim];
    for i in (0..dim.saturating_sub(1)).rev() {
        s[i] = s[i + 1] * order;
    }
    s
}

/// Odometer step over `{0..order-1}^len`, last position fastest. Wraps to all zeros.
pub(crate) fn advance_index(idx: &mut [usize], order: usize) {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < order {
            return;
        }
        *slot = 0;
    }
}

#[cfg(test)]
pub(crate) fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(num_bigint::BigInt::from(p), num_bigint::BigInt::from(q))
}
