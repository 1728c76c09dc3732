//! Continuum reference quantities and statistical verification.
//!
//! `greens` evaluates the Dirichlet Green's function of the unit disk and the
//! Koebe-type conformal radius bounds that calibrate nesting statistics.
//! `sobolev` provides periodic negative-index Sobolev norms for convergence
//! diagnostics. `verify` runs the full battery of quantitative checks tying
//! the simulated ensembles to the predicted asymptotics.

pub mod greens;
pub mod sobolev;
pub mod verify;
