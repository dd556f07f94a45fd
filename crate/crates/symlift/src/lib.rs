//! Symmetric Boolean threshold circuits, their linear-program lifts, and
//! exact rational analysis of symmetric LPs.
//!
//! The crate is organised around a small pipeline:
//!
//! * [`circuit`] — gate-family circuit IR, materialization over `[n]`,
//!   evaluation, and the threshold-to-exact-counting rewrite;
//! * [`gadgets`] — LP building blocks: Hamming-slice polytopes, parity
//!   polytope lifts, truncated parity lifts, the bit-extraction cascade,
//!   and the per-gate LPs;
//! * [`compiler`] — lowering a circuit to a symmetric LP lift, symmetry
//!   witnesses, and the subgraph-restriction combinator;
//! * [`solver`] — an exact rational LP engine (two-phase simplex with
//!   anti-cycling pivoting) plus a brute-force vertex enumerator;
//! * [`symmetry`] — group actions on LPs, automorphism-extension search,
//!   rigidification, minimal supports, and manageable reindexing.
//!
//! All arithmetic is exact: the only number type in LPs is an
//! arbitrary-precision rational.

pub mod circuit;
pub mod compiler;
pub mod gadgets;
pub mod json;
pub mod lp;
pub mod rational;
pub mod solver;
pub mod symmetry;

pub use lp::{Assignment, LinearConstraint, LinearProgram, PathSeg, Rel, RelSym, VarId};
pub use rational::{rational_bits, rational_parse, Rational};

/// Environment variable that lifts the desk-scale guards on the search and
/// enumeration operations. Setting it is at-your-own-risk: the guarded
/// algorithms are exponential.
pub const GUARD_OVERRIDE_ENV: &str = "SYMLIFT_GUARD_OVERRIDE";

/// True when the desk-scale guards are lifted via [`GUARD_OVERRIDE_ENV`].
pub fn guards_overridden() -> bool {
    std::env::var_os(GUARD_OVERRIDE_ENV).is_some()
}
