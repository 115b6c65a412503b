//! Exhaustive counting experiments for elliptic curves with level structure.
//!
//! The modules build on each other roughly in this order:
//!
//! - [`ff_curves`]: censuses of elliptic curves over `F_p` with traces,
//!   group structures and automorphism counts.
//! - [`cusp_census`]: congruence subgroups of `SL2(Z/N)`, their index, cusp
//!   orbits and `F_q`-rational cusp counts.
//! - [`level_fibers`]: embedding counts, fiber sizes of level structures,
//!   weighted Hurwitz class numbers and their moments.
//! - [`wps_rational`]: weighted projective points over `Q`, content ideals,
//!   heights and reduction modulo primes.
//! - [`torsion_families`]: curves over `Q` with a rational `N`-torsion point,
//!   bounded-height family censuses and local reduction statistics.
//! - [`trace_formula`]: the geometric side of the Eichler-Selberg trace
//!   formula and Hecke traces recovered from finite-field expectations.
//! - [`analytic_harness`]: the explicit-formula test function, prime sums and
//!   the average-rank bound.
//! - [`cli`]: configuration, report formatting and the subcommands used by
//!   the `modcount` binary.

pub mod analytic_harness;
pub mod arith;
pub mod cli;
pub mod cusp_census;
pub mod error;
pub mod ff_curves;
pub mod level_fibers;
pub mod torsion_families;
pub mod trace_formula;
pub mod wps_rational;

pub use arith::Q;
pub use error::{Error, Result};
