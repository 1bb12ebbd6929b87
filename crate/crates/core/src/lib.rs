//! Exact partial-optimality toolkit for pairwise discrete energy minimization.
//!
//! The crate minimizes energies of the form
//! `f_0 + sum_s f_s(x_s) + sum_st f_st(x_s, x_t)` over labelings `x` and
//! derives provably optimal partial assignments from them. Everything is
//! computed in exact rational arithmetic: autarky and persistency verdicts
//! are sign decisions, and a single rounding error would corrupt them.
//!
//! Module map:
//!
//! * [`energy`] — the energy model: label spaces, labelings and their
//!   lattice, autarkies, domain constraints, submodular/metric predicates.
//! * [`io`] — the PEM1 text format, JSON reports and seeded instance
//!   generators.
//! * [`flow`] — exact max-flow/min-cut and the layered reduction that
//!   minimizes multi-label submodular energies.
//! * [`kovtun`] — auxiliary submodular problems: the one-vs-all and
//!   sequential constructions and the sufficient-condition checker.
//! * [`lp`] — the LP relaxation over the local polytope, LP-autarky
//!   verification, optimal-support probing and the two-label roof dual.
//! * [`expansion`] — expansion moves with parameterized truncation and
//!   fixed-point dominance checks.
//! * [`oracle`] — brute-force enumeration used as ground truth at desk
//!   scale.

pub mod energy;
pub mod expansion;
pub mod flow;
pub mod io;
pub mod kovtun;
pub mod lp;
pub mod oracle;

/// Exact rational scalar used for every energy value and LP coefficient.
pub type Rational = num_rational::BigRational;

/// Shorthand for building a rational from an integer.
pub fn rat(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

/// Shorthand for building a rational from a numerator/denominator pair.
///
/// Panics on a zero denominator, mirroring `BigRational::new`.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}
