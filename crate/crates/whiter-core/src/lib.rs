//! Numerical machinery for pairs of scalar functional equations coupled
//! through exponential factors, posed on lines parallel to the real axis.
//!
//! The crate is organized bottom-up:
//!
//! * [`analytic_core`]: line grids, sampling, norms, one-sided function
//!   series (analytic above or below a line) and their evaluation on and
//!   off the birth line, Cauchy evaluation, residue extraction.
//! * [`splitting`]: additive and multiplicative splittings of line samples
//!   into one-sided parts, winding index, and the exponential window
//!   projections that transport content across a carrier factor.
//! * [`whsolver`]: reduction of a two-row triangular system on a strip to
//!   its iteration form, the iteration itself, convergence estimation,
//!   solution recovery on the output line, and residual checks.
//! * [`families`]: ready-made problem families behind a common trait,
//!   registered by name and selected at runtime.
//! * [`oracles`]: independent closed-form references (recurrences, exact
//!   solutions, parameter scans) used to validate the solver.
//!
//! Conventions used throughout: transforms are `F(alpha) = integral of
//! f(t) exp(i alpha t) dt`, so a function supported on `t > 0` is analytic
//! *above* its line ("plus"), one supported on `t < 0` is analytic *below*
//! ("minus"), and `exp(i alpha len)` decays upward.

pub mod analytic_core;
pub mod families;
pub mod oracles;
pub mod splitting;
pub mod whsolver;

pub use num_complex::Complex64;
