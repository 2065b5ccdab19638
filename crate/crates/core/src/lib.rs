//! Finite-dimensional toolkit for subfactor computations.
//!
//! The crate works at "desk scale": every object is a finite matrix algebra
//! and every claim is checked numerically against an explicit tolerance, or
//! exactly in rational arithmetic where the quantity is rational.
//!
//! - [`matrix`] and [`algebra`]: dense complex matrices, unital *-subalgebras,
//!   trace-preserving conditional expectations, the basic construction and
//!   Markov traces of inclusion matrices.
//! - [`hadamard`]: complex Hadamard and bi-unitary matrices, the spin and
//!   vertex model commuting squares, and the spin-model tower unitaries.
//! - [`commuting_square`]: commuting-square and non-degeneracy checks and the
//!   transfer of orthonormal bases across a commuting square.
//! - [`pimsner_popa`]: Pimsner-Popa basis verification and the unitary-basis
//!   constructions.
//! - [`lambda`]: exact rational arithmetic for relative-dimension sets.
//! - [`projection_sums`]: writing a scalar matrix as a sum of projections.
//!
//! Numerical code is generic over the real scalar (`f32` or `f64`); the
//! aliases below fix the usual choices.

pub mod algebra;
pub mod commuting_square;
pub mod error;
pub mod hadamard;
pub mod io;
pub mod lambda;
pub mod matrix;
pub mod pimsner_popa;
pub mod projection_sums;
pub mod report;
pub mod scalar;
pub mod settings;

pub use error::{Error, Result};
pub use scalar::{Complex, Real};
pub use settings::Settings;

/// Exact rational used by all relative-dimension arithmetic.
pub type Rational = num_rational::BigRational;

/// Double-precision complex matrix, the default numeric carrier.
pub type CMatrix = matrix::ComplexMatrix<f64>;
/// Single-precision complex matrix.
pub type CMatrix32 = matrix::ComplexMatrix<f32>;

pub type Subalgebra = algebra::StarSubalgebra<f64>;
pub type Quadruple = commuting_square::QuadrupleOfAlgebras<f64>;
pub type Hadamard = hadamard::HadamardMatrix<f64>;
pub type BiUnitary = hadamard::BiUnitaryMatrix<f64>;
pub type Tower = hadamard::SpinTower<f64>;
pub type Basis = pimsner_popa::BasisCandidate<f64>;
pub type Tuple = projection_sums::ProjectionTuple<f64>;
