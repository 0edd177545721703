//! Exact-arithmetic engine for claims problems and the coalition formation
//! games they induce when every coalition must clear a minimal size to
//! receive a proportional share of the endowment.
//!
//! The crate is organized bottom-up:
//!
//! * [`rational`]: exact rational parsing and formatting on top of
//!   arbitrary-precision `num` rationals. No floats anywhere in rule
//!   evaluation.
//! * [`rules`]: division rules for claims problems (proportional,
//!   constrained equal awards, constrained equal losses, and a generic
//!   parametric solver) plus finite-sample axiom checkers for resource
//!   monotonicity and consistency.
//! * [`problems`]: coalitions as bitmasks, minimal-size problems, and the
//!   preferences over coalitions induced by applying a division rule to each
//!   coalition's endowment.
//! * [`stability`]: blocking coalitions, exhaustive stable-partition
//!   enumeration, structure checks on stable partitions, and diagnostic
//!   relations (pairwise alignment, preference cycles).
//! * [`algorithms`]: constructive stable-partition algorithms with full
//!   decision traces, threshold formulas, and assortativity classification.
//! * [`singlepeaked`]: the single-peaked variant with uniform and
//!   equal-surplus rules, distance preferences, supply-side algorithms.
//!
//! All exhaustive scans are guarded by [`SearchLimits`]; callers opt in to
//! larger instances explicitly.

pub mod algorithms;
pub mod limits;
pub mod problems;
pub mod rational;
pub mod rules;
pub mod singlepeaked;
pub mod stability;

mod error;

pub use error::{Error, Result};
pub use limits::SearchLimits;
pub use rational::Rational;

/// Agents are identified by 1-based ids, stable across subproblems.
pub type AgentId = usize;
