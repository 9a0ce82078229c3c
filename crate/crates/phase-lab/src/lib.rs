//! A laboratory for measuring combinatorial search cost on random binary
//! CSPs and random-graph 3-coloring.
//!
//! The crate generates problem instances under controlled solvability and
//! solution-count constraints, solves them with instrumented backtracking
//! algorithms, enumerates minimal unsolvable variable subsets, and packages
//! the whole thing behind the `phase-lab` command-line tool.
//!
//! Module map:
//!
//! - [`csp`]: the binary-CSP data model, consistency semantics, exact
//!   solution counting, and the analytic expected-solution-count formula.
//! - [`generate`]: uniform generate-select, hill-climbing, pre-specified
//!   solution, and homogeneous problem generators.
//! - [`solve`]: instrumented chronological and dynamic backtracking plus
//!   the solved-k-times run protocol.
//! - [`color`]: random graphs by connectivity and Brelaz-heuristic
//!   3-coloring search.
//! - [`mus`]: exact enumeration of minimal unsolvable subproblems via the
//!   monotone solvability lattice.
//! - [`stats`]: median / fraction / mean estimators with the confidence
//!   interval conventions used by every experiment output.
//! - [`harness`]: figure presets, sweep execution, persistence, and
//!   CSV/JSON emission.
//! - [`cli`]: the `phase-lab` subcommand surface.

pub mod cli;
pub mod color;
pub mod csp;
pub mod error;
pub mod generate;
pub mod harness;
pub mod mus;
pub mod oracle;
pub mod seed;
pub mod solve;
pub mod stats;

pub use error::{Error, Result};
