//! Seeded generators of test matrices.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{input_err, Error, Result};
use crate::latin::{LatinHypercube, LatinSearch};
use crate::tensor::{checked_len, Entries, MultiDimMatrix};

pub const DEFAULT_SINKHORN_TOL: f64 = 1e-10;
pub const DEFAULT_SINKHORN_MAX_ITER: usize = 10_000;

/// Largest order `random_latin` accepts for a given hypercube dimension.
pub fn random_latin_limit(dim: usize) -> usize {
    match dim {
        1 => 64,
        2 => 16,
        3 => 8,
        4 => 4,
        _ => 3,
    }
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Latin hypercube from randomized backtracking; the same seed always gives
/// the same hypercube.
pub fn random_latin(dim: usize, order: usize, seed: u64) -> Result<LatinHypercube> {
    random_latin_with(dim, order, &mut rng_from_seed(seed))
}

pub fn random_latin_with<R: Rng>(dim: usize, order: usize, rng: &mut R) -> Result<LatinHypercube> {
    checked_len(dim, order)?;
    let limit = random_latin_limit(dim);
    if order > limit {
        return Err(Error::Capacity {
            what: "random latin hypercube order",
            requested: order as u128,
            limit: limit as u128,
        });
    }
    LatinSearch::new(dim, order)?
        .random(rng)
        .ok_or_else(|| Error::Validation("latin search exhausted without a solution".into()))
}

/// `sum_j w_j * to_matrix(Q_j)` over `terms` random hypercubes of dimension
/// `dim - 1`, with positive integer weights normalized to sum to one.
pub fn random_polystochastic(dim: usize, order: usize, terms: usize, seed: u64) -> Result<MultiDimMatrix> {
    random_polystochastic_with(dim, order, terms, &mut rng_from_seed(seed))
}

pub fn random_polystochastic_with<R: Rng>(
    dim: usize,
    order: usize,
    terms: usize,
    rng: &mut R,
) -> Result<MultiDimMatrix> {
    if terms == 0 {
        return input_err("need at least one term");
    }
    if dim < 2 {
        return input_err(format!("polystochastic generation needs dimension at least 2, got {dim}"));
    }
    let len = checked_len(dim, order)?;
    let weights: Vec<u64> = (0..terms).map(|_| rng.gen_range(1..=100)).collect();
    let total: u64 = weights.iter().sum();
    let mut acc = vec![BigRational::zero(); len];
    for &w in &weights {
        let q = random_latin_with(dim - 1, order, rng)?;
        let lambda = BigRational::new(BigInt::from(w), BigInt::from(total));
        for (o, &s) in q.cells().iter().enumerate() {
            acc[o * order + s] += &lambda;
        }
    }
    MultiDimMatrix::from_exact(dim, order, acc)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SinkhornResult {
    pub matrix: MultiDimMatrix,
    pub converged: bool,
    pub sweeps: usize,
    /// Largest `|line sum - 1|` at exit.
    pub residual: f64,
}

/// Alternately rescales the lines along each axis to sum to one. Works in
/// floats; an input that already has every line within `tol` is returned as is.
pub fn sinkhorn_project(a: &MultiDimMatrix, tol: f64, max_iter: usize) -> Result<SinkhornResult> {
    let f = a.to_float();
    let Entries::Float(v) = f.entries() else {
        unreachable!("to_float yields float entries")
    };
    if v.iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidMatrix("sinkhorn scaling needs nonnegative entries".into()));
    }
    let (dim, n) = (a.dim(), a.order());
    let strides = f.strides();
    let starts: Vec<Vec<usize>> = (0..dim).map(|axis| f.line_starts(axis)).collect();
    for (axis, st) in starts.iter().enumerate() {
        for &s in st {
            if (0..n).all(|i| v[s + i * strides[axis]] <= 0.0) {
                return Err(Error::Validation(format!(
                    "line along axis {axis} through {:?} has no positive entry",
                    f.index_of(s)
                )));
            }
        }
    }
    let stride_ref = &strides;
    let residual = |v: &[f64]| {
        starts
            .iter()
            .enumerate()
            .flat_map(|(axis, st)| {
                st.iter()
                    .map(move |&s| (0..n).map(|i| v[s + i * stride_ref[axis]]).sum::<f64>())
            })
            .fold(0.0f64, |m, sum| m.max((sum - 1.0).abs()))
    };
    let r0 = residual(v);
    if r0 <= tol {
        return Ok(SinkhornResult {
            matrix: a.clone(),
            converged: true,
            sweeps: 0,
            residual: r0,
        });
    }
    let mut v = v.clone();
    let mut sweeps = 0;
    let mut r = r0;
    while sweeps < max_iter {
        for (axis, st) in starts.iter().enumerate() {
            for &s in st {
                let sum: f64 = (0..n).map(|i| v[s + i * strides[axis]]).sum();
                for i in 0..n {
                    v[s + i * strides[axis]] /= sum;
                }
            }
        }
        sweeps += 1;
        r = residual(&v);
        if r <= tol {
            break;
        }
    }
    Ok(SinkhornResult {
        matrix: MultiDimMatrix::from_float(dim, n, v)?,
        converged: r <= tol,
        sweeps,
        residual: r,
    })
}

/// Convenience for tests: an exact matrix whose entries are `1` where `pred` holds.
pub fn ones_where(dim: usize, order: usize, pred: impl Fn(&[usize]) -> bool) -> Result<MultiDimMatrix> {
    MultiDimMatrix::from_fn_exact(dim, order, |i| {
        if pred(i) {
            BigRational::one()
        } else {
            BigRational::zero()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latin::{enumerate_latin, EnumOptions};
    use crate::scalar::DEFAULT_EPS;

    #[test]
    fn random_latin_examples() {
        assert_eq!(random_latin(2, 1, 5).unwrap().cells(), &[0]);
        let all: Vec<LatinHypercube> = enumerate_latin(
            2,
            3,
            EnumOptions {
                unrestricted: true,
                ..Default::default()
            },
        )
        .unwrap()
        .collect();
        for seed in 0..50 {
            let q = random_latin(2, 3, seed).unwrap();
            assert!(all.contains(&q));
            assert_eq!(q, random_latin(2, 3, seed).unwrap());
        }
        assert!(matches!(random_latin(3, 9, 0), Err(Error::Capacity { .. })));
    }

    #[test]
    fn random_latin_covers_many_squares() {
        let distinct: std::collections::BTreeSet<Vec<usize>> = (0..200)
            .map(|s| random_latin(2, 4, s).unwrap().cells().to_vec())
            .collect();
        assert!(distinct.len() > 50, "only {} distinct squares", distinct.len());
    }

    #[test]
    fn random_polystochastic_is_polystochastic() {
        for seed in 0..20 {
            let a = random_polystochastic(3, 4, 1 + seed as usize % 5, seed).unwrap();
            assert!(a.is_polystochastic(0.0));
        }
        let one = random_polystochastic(4, 3, 1, 3).unwrap();
        assert!(one.is_zero_one());
        assert!(random_polystochastic(3, 3, 0, 1).is_err());
    }

    #[test]
    fn sinkhorn_examples() {
        let id = MultiDimMatrix::identity(3);
        let r = sinkhorn_project(&id, DEFAULT_SINKHORN_TOL, 10).unwrap();
        assert!(r.converged);
        assert_eq!(r.sweeps, 0);
        assert_eq!(r.matrix, id);

        let ones = ones_where(2, 3, |_| true).unwrap();
        let r = sinkhorn_project(&ones, DEFAULT_SINKHORN_TOL, 100).unwrap();
        assert!(r.converged);
        let Entries::Float(v) = r.matrix.entries() else { panic!() };
        assert!(v.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-12));

        let bad = ones_where(2, 2, |i| i[0] == 0).unwrap();
        assert!(matches!(
            sinkhorn_project(&bad, DEFAULT_SINKHORN_TOL, 10),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn sinkhorn_restores_z_support() {
        let mut rng = rng_from_seed(11);
        let z = ones_where(3, 4, |i| i.iter().sum::<usize>() % 4 == 0).unwrap();
        let Entries::Exact(v) = z.entries() else { panic!() };
        let noisy: Vec<f64> = v
            .iter()
            .map(|x| if x.is_zero() { 0.0 } else { rng.gen_range(0.5..2.0) })
            .collect();
        let a = MultiDimMatrix::from_float(3, 4, noisy).unwrap();
        let r = sinkhorn_project(&a, DEFAULT_SINKHORN_TOL, DEFAULT_SINKHORN_MAX_ITER).unwrap();
        assert!(r.converged);
        assert!(r.matrix.is_polystochastic(1e-9));
        assert_eq!(r.matrix.support(DEFAULT_EPS).unwrap(), a.support(DEFAULT_EPS).unwrap());
    }
}
