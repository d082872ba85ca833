//! Directed graphical models of additively decomposed utility functions
//! with ceteris-paribus semantics.
//!
//! A [`UcpNet`] is a DAG over finite-domain variables where every variable
//! carries one utility factor over itself and its parents. The crate covers
//! the whole workflow around such nets:
//!
//! * [`model`]: variables, assignments, factors, utility evaluation and
//!   row normalization into local value functions plus tradeoff weights.
//! * [`validation`]: the exact domination test, the cheap span-based
//!   sufficient test, GAI-to-topology construction and brute-force
//!   preferential-independence oracles.
//! * [`optimize`]: forward-sweep optimization and an exhaustive oracle.
//! * [`bayes`]: Bayes nets, variable elimination and staged expected-utility
//!   action selection.
//! * [`lp`]: a small dense simplex solver with Bland's rule.
//! * [`elicit`]: weight spaces, minimax regret, query scoring and the greedy
//!   elicitation loop.
//! * [`io`]: JSON documents for nets, scenarios and sessions.
//! * [`service`]: the session store behind the HTTP service.

pub mod bayes;
pub mod elicit;
pub mod error;
pub mod io;
pub mod lp;
pub mod model;
pub mod optimize;
pub mod random;
pub mod service;
pub mod validation;

pub use error::{Error, Result};
pub use model::{
    Assignment, Factor, NormalizedUcpNet, UcpNet, VarId, VariableTable, WeightId, WeightKind,
    WeightVector, EPS_UTIL,
};
