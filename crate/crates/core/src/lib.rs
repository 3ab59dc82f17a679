//! Exact computational kernel for matrix-valued Cauchy bi-orthogonal polynomials
//! and the noncommutative C-Toda lattice.
//!
//! Everything is organized around discrete point-mass measures on the positive
//! half-line: with finitely many nodes every pairing integral collapses to a
//! finite double sum, so the structural identities of the theory (orthogonality,
//! the four-term recurrence, the lattice equations, Lax compatibility, the
//! commutative tau-function reduction) become exact ring identities that can be
//! checked with no tolerance at all.
//!
//! The scalar tower lives in [`ring`]: arbitrary-precision rationals, truncated
//! order-2 jets (for exact time derivatives at t = 0), and a checked f64 backend
//! for cross-validation. [`blockmat`] provides dense matrices over any of those
//! scalars together with quasideterminants and noncommutative block solves.
//! [`qdid`] hosts randomized checks of general quasideterminant identities.
//! [`measure`], [`cbop`], [`lattice`] and [`reduction`] build the pipeline from
//! moments through polynomial families to the lattice and its scalar reduction.

pub mod blockmat;
pub mod cbop;
pub mod lattice;
pub mod measure;
pub mod qdid;
pub mod reduction;
pub mod report;
pub mod ring;
pub mod sample;
