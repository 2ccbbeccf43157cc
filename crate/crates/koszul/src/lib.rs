//! Exact Koszul cohomology computations for canonical and Prym-canonical
//! binary curves.
//!
//! A binary curve of genus `g` is a stable curve made of two rational
//! components meeting transversally at `g + 1` nodes. This crate builds
//! explicit canonical and Prym-canonical models of such curves over a prime
//! field (or, at tiny scale, over the rationals), assembles the sparse
//! matrices of the Koszul differentials whose injectivity encodes property
//! `N_p`, and computes their exact rank. The `verify` module ties these
//! together into drivers for the Green and Prym-Green conjectures at small
//! genus.
//!
//! Core arithmetic is generic over the scalar type through the
//! [`algebra::Field`] trait; the two instantiations are [`Fp64`] (GF(p) for a
//! word-size odd prime, the production path) and [`Rat`] (arbitrary-precision
//! rationals, the tiny-genus oracle path).

pub mod algebra;
pub mod curve;
pub mod koszul;
pub mod report;
pub mod sparse;
pub mod verify;

pub use algebra::{AlgebraError, DensePoly, Field, Fp64, PrimeModulus, Rat};
pub use curve::{CurveParams, Model, NodeTable, SectionBasis, SectionPair};
pub use koszul::{DomainBasis, KoszulMatrix, MultiIndex, Subspace};
pub use sparse::{RankMethod, RankReport, SparseMatrix};

/// Scalar of the word-size prime field.
pub type FpScalar = Fp64;
/// Exact rational scalar (oracle mode).
pub type RatScalar = Rat;
/// Polynomial over the prime field.
pub type FpPoly = DensePoly<Fp64>;
/// Polynomial over the rationals.
pub type RatPoly = DensePoly<Rat>;
/// Curve model over the prime field.
pub type FpCurve = CurveParams<Fp64>;
/// Curve model over the rationals.
pub type RatCurve = CurveParams<Rat>;
/// Sparse matrix over the prime field.
pub type FpSparseMatrix = SparseMatrix<Fp64>;

/// Default modulus: small enough that elimination entries stay in one word,
/// large enough that random curves are almost always nodally distinct.
pub const DEFAULT_PRIME: u64 = 131;
