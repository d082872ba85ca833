//! Bayes nets over finite variables, exact variable elimination, and
//! expected-utility action selection against a UCP-net.

mod decision;
mod potential;
mod ve;

pub use decision::{
    build_influence, expected_value, factor_expectation, factor_spans, partial_expected_value,
    staged_decision, Action, ActionModel, DecisionScenario, StagedDecision, UtilityNode,
};
pub use potential::Potential;
pub use ve::{joint_distribution, ve_marginal, Marginal, VeStats};

use crate::error::{Error, Result};
use crate::model::{topological_order, Factor, VarId, VariableTable};

/// Tolerance on CPT row sums.
pub const EPS_PROB: f64 = 1e-9;

/// A Bayes net. Each CPT is a [`Factor`] whose rows are parent contexts and
/// whose columns are probabilities of the child's values.
#[derive(Clone, Debug, PartialEq)]
pub struct BayesNet {
    vars: VariableTable,
    cpts: Vec<Factor>,
}

impl BayesNet {
    pub fn new(vars: VariableTable, mut cpts: Vec<Factor>) -> Result<Self> {
        if cpts.len() != vars.len() {
            return Err(Error::Model(format!(
                "{} CPTs for {} variables",
                cpts.len(),
                vars.len()
            )));
        }
        cpts.sort_by_key(Factor::child);
        for (i, f) in cpts.iter().enumerate() {
            if f.child() != i {
                return Err(Error::Model(format!(
                    "variable {} has no CPT or more than one",
                    vars.name(i)
                )));
            }
            for row in 0..f.num_rows() {
                let r = f.row(row);
                if r.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                    return Err(Error::Model(format!(
                        "CPT of {} has a probability outside [0, 1]",
                        vars.name(i)
                    )));
                }
                let total: f64 = r.iter().sum();
                if (total - 1.0).abs() > EPS_PROB {
                    return Err(Error::Model(format!(
                        "CPT row [{}] of {} sums to {total}",
                        vars.format_bindings(f.row_bindings(row)),
                        vars.name(i)
                    )));
                }
            }
        }
        let parents: Vec<Vec<VarId>> = cpts.iter().map(|f| f.parents().to_vec()).collect();
        if topological_order(&parents).is_none() {
            return Err(Error::Model("Bayes net has a directed cycle".into()));
        }
        Ok(BayesNet { vars, cpts })
    }

    pub fn variables(&self) -> &VariableTable {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn cpt(&self, v: VarId) -> &Factor {
        &self.cpts[v]
    }

    pub fn cpts(&self) -> &[Factor] {
        &self.cpts
    }

    pub fn parents(&self, v: VarId) -> &[VarId] {
        self.cpts[v].parents()
    }

    /// Probability of a full assignment (chain rule).
    pub fn joint_probability(&self, outcome: &[usize]) -> f64 {
        self.cpts.iter().map(|f| f.at(outcome)).product()
    }
}
