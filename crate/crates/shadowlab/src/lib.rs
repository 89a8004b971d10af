//! Exact computations for shadowing of linear cellular automata on group
//! shift spaces.
//!
//! The universe is the monoid `N^r`, configurations take values in `A = F_p^k`,
//! and all decisions are made with exact arithmetic over `F_p` and exact
//! rationals — there is no floating point in any decision path.
//!
//! Module map:
//!
//! * [`fplinalg`] — matrices, canonical subspaces and solvers over `F_p`;
//! * [`lattice`] — sites, site sets, admissible exhaustions and the truncated
//!   Hamming metric;
//! * [`shiftspace`] — patterns, subshifts of finite type and exact/heuristic
//!   restriction computations;
//! * [`cellauto`] — linear cellular automata: application, composition,
//!   monomials, Lipschitz data;
//! * [`columnfact`] — column factorizations, their restrictions and
//!   finite-type window estimation;
//! * [`shadowing`] — pseudo-orbits, the shadowing solver, certificates and
//!   the non-shadowing counterexample family;
//! * [`io`] — text and JSON codecs for every external format.

pub mod cellauto;
pub mod columnfact;
pub mod fplinalg;
pub mod io;
pub mod lattice;
pub mod shadowing;
pub mod shiftspace;

use lattice::Site;

/// Crate-wide error type. Variants mirror the contract violations the public
/// operations are specified to reject.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime modulus {0} exceeds the supported bound {1}")]
    ModulusTooLarge(u64, u64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),
    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),
    #[error("insufficient truncation: missing sites {}", format_sites(.0))]
    InsufficientTruncation(Vec<Site>),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("generators do not commute: {0}")]
    NonCommuting(String),
    #[error("exhaustion materialized too shallow: {0}")]
    TooShallow(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn format_sites(sites: &[Site]) -> String {
    const SHOW: usize = 8;
    let head: Vec<String> = sites.iter().take(SHOW).map(|s| s.to_string()).collect();
    if sites.len() > SHOW {
        format!("[{}, … {} more]", head.join(", "), sites.len() - SHOW)
    } else {
        format!("[{}]", head.join(", "))
    }
}
