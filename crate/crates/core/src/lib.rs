//! Combinatorics of multidimensional matrices: permanents of polystochastic
//! matrices, latin hypercubes and their transversals, row-latin rectangles,
//! Birkhoff decompositions, and a constructive positive-diagonal finder for
//! 4-dimensional polystochastic matrices of order 4.

pub mod birkhoff;
pub mod diagonals;
pub mod error;
pub mod format;
pub mod gen;
pub mod latin;
pub mod matching;
pub mod perm;
pub mod prover44;
pub mod rowlatin;
pub mod scalar;
pub mod tensor;
pub mod verify;

pub use diagonals::{Diagonal, PartialDiagonal};
pub use error::{Error, Result};
pub use latin::LatinHypercube;
pub use perm::Permutation;
pub use rowlatin::RowLatinRectangle;
pub use scalar::{NumericMode, Scalar, DEFAULT_EPS};
pub use tensor::{MultiDimMatrix, PlaneRef};
