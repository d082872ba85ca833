//! Minimax-regret elicitation of tradeoff weights.
//!
//! The unknowns are the `pi`/`sigma` weights of a [`NormalizedUcpNet`](crate::NormalizedUcpNet).
//! A [`WeightSpace`] holds the linear constraints known so far, expected
//! values are linear forms in the weights, and regret is computed with one
//! LP per ordered action pair.

mod query;
mod regret;
mod session;
mod weight_space;

pub use query::{
    apply_response, bound_split_query, build_query_pool, comparison_query, query_improvement,
    score_pool, select_query, sigma_ratio_query, Query, QueryCosts, QueryKind, Response,
    ScoredQuery, SIGMA_RATIOS,
};
pub use regret::{
    action_forms, ev_linear_form, minimax_regret, pairwise_max_advantage, regret_at, RegretReport,
};
pub use session::{
    elicit_step, ElicitationSession, SessionConfig, Step, StopReason, TranscriptEntry,
};
pub use weight_space::{
    bound_constraints, render_constraint, structural_constraints, SpaceConfig, WeightBound,
    WeightSpace,
};

/// Default upper bound on every weight.
pub const DEFAULT_U_MAX: f64 = 100.0;
/// Default cap on answered queries per session.
pub const DEFAULT_MAX_QUERIES: usize = 200;
