//! Monte Carlo laboratory for nesting fields of critical planar loop models.
//!
//! The crate samples discrete loop ensembles whose scaling limits are conformal
//! loop ensembles (critical site percolation on the triangular lattice and the
//! FK-Ising random cluster model on the square lattice), extracts the full
//! interface loop gas together with its containment forest, and measures the
//! nesting observables of those ensembles: nesting depth, ball and two-point
//! co-nesting counts, weighted and step nesting fields.
//!
//! A companion renewal engine reproduces the one-dimensional structure behind
//! loop nesting (log conformal radius increments form a renewal process):
//! first passage times, overshoot tails, moment expansions and coalescing
//! couplings of renewal walks.
//!
//! The analysis layer compares measurements against continuum predictions:
//! co-nesting moments against the Green's function of the unit disk, variance
//! decay of field differences, Cauchy behaviour of the field ladder in negative
//! Sobolev norms, and the identity between weighted and step nesting fields.

pub mod analysis;
pub mod error;
pub mod field;
pub mod lattice;
pub mod loops;
pub mod renewal;
pub mod seeding;
pub mod stats;
pub mod topology;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
