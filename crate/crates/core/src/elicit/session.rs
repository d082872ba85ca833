use std::sync::Arc;

use log::debug;

use super::query::{apply_response, build_query_pool, select_query, Query, QueryCosts};
use super::regret::{regret_from_forms, action_forms, RegretReport};
use super::{SpaceConfig, WeightSpace, DEFAULT_MAX_QUERIES};
use crate::bayes::DecisionScenario;
use crate::error::{Error, Result};
use crate::lp::{LinearConstraint, LinearExpr};
use crate::model::NormalizedUcpNet;

#[derive(Clone, Debug, PartialEq)]
pub struct SessionConfig {
    /// Regret threshold below which the current best action is recommended.
    pub tau: f64,
    pub costs: QueryCosts,
    pub space: SpaceConfig,
    /// Hard cap on answered queries.
    pub max_queries: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            tau: 0.0,
            costs: QueryCosts::default(),
            space: SpaceConfig::default(),
            max_queries: DEFAULT_MAX_QUERIES,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// No query improves minimax regret by more than its cost.
    NoUsefulQuery,
    QueryLimit,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::NoUsefulQuery => "no-useful-query",
            StopReason::QueryLimit => "query-limit",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    Ask { query: Query, improvement: f64 },
    Recommend { action: usize, mmr: f64 },
    Stop {
        reason: StopReason,
        action: usize,
        mmr: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TranscriptEntry {
    pub query: Query,
    pub response: usize,
    pub mmr_before: f64,
    pub mmr_after: f64,
}

/// State of one greedy elicitation run.
#[derive(Clone, Debug)]
pub struct ElicitationSession {
    scenario: DecisionScenario,
    forms: Vec<LinearExpr>,
    space: WeightSpace,
    config: SessionConfig,
    report: RegretReport,
    transcript: Vec<TranscriptEntry>,
    pending: Option<Step>,
}

impl ElicitationSession {
    /// Compiles network actions, builds the initial weight space and
    /// computes the initial regret report.
    pub fn new(
        nnet: Arc<NormalizedUcpNet>,
        scenario: &DecisionScenario,
        config: SessionConfig,
    ) -> Result<Self> {
        if config.tau.is_nan() || config.tau < 0.0 {
            return Err(Error::Argument(format!("tau must be >= 0, got {}", config.tau)));
        }
        config.costs.validate()?;
        let scenario = scenario.compiled(nnet.variables())?;
        let forms = action_forms(&scenario, &nnet)?;
        let space = WeightSpace::new(nnet, &config.space)?;
        let report = regret_from_forms(&forms, &space)?;
        Ok(ElicitationSession {
            scenario,
            forms,
            space,
            config,
            report,
            transcript: Vec::new(),
            pending: None,
        })
    }

    pub fn scenario(&self) -> &DecisionScenario {
        &self.scenario
    }

    pub fn nnet(&self) -> &Arc<NormalizedUcpNet> {
        self.space.nnet()
    }

    pub fn space(&self) -> &WeightSpace {
        &self.space
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn report(&self) -> &RegretReport {
        &self.report
    }

    pub fn forms(&self) -> &[LinearExpr] {
        &self.forms
    }

    pub fn transcript(&self) -> &[TranscriptEntry] {
        &self.transcript
    }

    /// The next move. Pure in the session state: repeated calls without
    /// a response in between return the same step.
    pub fn step(&mut self) -> Result<Step> {
        if let Some(s) = &self.pending {
            return Ok(s.clone());
        }
        let action = self.report.recommended;
        let mmr = self.report.mmr;
        let step = if mmr <= self.config.tau {
            Step::Recommend { action, mmr }
        } else if self.transcript.len() >= self.config.max_queries {
            Step::Stop {
                reason: StopReason::QueryLimit,
                action,
                mmr,
            }
        } else {
            let pool = build_query_pool(&self.scenario, &self.space, &self.config.costs)?;
            debug!("scoring {} candidate queries at MMR {mmr}", pool.len());
            match select_query(&pool, &self.scenario, &self.space)? {
                Some(s) => Step::Ask {
                    query: s.query,
                    improvement: s.improvement,
                },
                None => Step::Stop {
                    reason: StopReason::NoUsefulQuery,
                    action,
                    mmr,
                },
            }
        };
        self.pending = Some(step.clone());
        Ok(step)
    }

    /// Answers the pending query.
    pub fn respond(&mut self, response: usize) -> Result<&RegretReport> {
        let Some(Step::Ask { query, .. }) = self.pending.clone() else {
            return Err(Error::Argument("no query is awaiting a response".into()));
        };
        self.apply(query, response)
    }

    /// Adds background knowledge outside the transcript, e.g. constraints
    /// read from a file before the first query.
    pub fn constrain(&mut self, constraint: LinearConstraint) -> Result<&RegretReport> {
        let space = self.space.with_constraint(constraint)?;
        self.report = regret_from_forms(&self.forms, &space)?;
        self.space = space;
        self.pending = None;
        Ok(&self.report)
    }

    /// Adds a response to an arbitrary query, e.g. while replaying a
    /// transcript.
    pub fn apply(&mut self, query: Query, response: usize) -> Result<&RegretReport> {
        let space = apply_response(&self.space, &query, response)?;
        let report = regret_from_forms(&self.forms, &space)?;
        debug!(
            "{} -> {}: MMR {} -> {}",
            query.id, query.responses[response].label, self.report.mmr, report.mmr
        );
        self.transcript.push(TranscriptEntry {
            query,
            response,
            mmr_before: self.report.mmr,
            mmr_after: report.mmr,
        });
        self.space = space;
        self.report = report;
        self.pending = None;
        Ok(&self.report)
    }
}

pub fn elicit_step(session: &mut ElicitationSession) -> Result<Step> {
    session.step()
}
