use std::collections::HashSet;
use std::sync::Arc;

use rayon::prelude::*;

use super::{ve_marginal, BayesNet, EPS_PROB};
use crate::error::{Error, Result};
use crate::model::{Assignment, UcpNet, VarId, VariableTable, EPS_UTIL};

/// How an action's outcome distribution is given.
#[derive(Clone, Debug, PartialEq)]
pub enum ActionModel {
    /// Support outcomes over the UCP-net's variables with probabilities.
    Explicit(Vec<(Vec<usize>, f64)>),
    /// A (possibly shared) Bayes net conditioned on the action's evidence,
    /// e.g. a choice node fixed to this action.
    Network {
        net: Arc<BayesNet>,
        evidence: Assignment,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Action {
    pub name: String,
    pub model: ActionModel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionScenario {
    actions: Vec<Action>,
}

impl DecisionScenario {
    pub fn new(actions: Vec<Action>) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::Model("a scenario needs at least one action".into()));
        }
        let mut names = HashSet::new();
        for a in &actions {
            if !names.insert(a.name.as_str()) {
                return Err(Error::Model(format!("duplicate action {:?}", a.name)));
            }
            match &a.model {
                ActionModel::Explicit(support) => {
                    if support.is_empty() {
                        return Err(Error::Model(format!("action {:?} has no support", a.name)));
                    }
                    if support.iter().any(|(_, p)| !(0.0..=1.0).contains(p)) {
                        return Err(Error::Model(format!(
                            "action {:?} has a probability outside [0, 1]",
                            a.name
                        )));
                    }
                    let total: f64 = support.iter().map(|(_, p)| p).sum();
                    if (total - 1.0).abs() > EPS_PROB {
                        return Err(Error::Model(format!(
                            "support of action {:?} sums to {total}",
                            a.name
                        )));
                    }
                }
                ActionModel::Network { net, evidence } => evidence.check(net.variables())?,
            }
        }
        Ok(DecisionScenario { actions })
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn action_index(&self, name: &str) -> Result<usize> {
        self.actions
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::UnknownAction(name.to_string()))
    }

    /// Checks explicit supports against the UCP-net's variables and
    /// network actions against their nets.
    pub fn check_against(&self, vars: &VariableTable) -> Result<()> {
        for a in &self.actions {
            match &a.model {
                ActionModel::Explicit(support) => {
                    for (o, _) in support {
                        if o.len() != vars.len()
                            || o.iter().enumerate().any(|(v, &x)| x >= vars.domain_size(v))
                        {
                            return Err(Error::InvalidOutcome(format!(
                                "support outcome of action {:?} does not fit the net",
                                a.name
                            )));
                        }
                    }
                }
                ActionModel::Network { net, .. } => {
                    variable_map(vars, net)?;
                }
            }
        }
        Ok(())
    }

    /// Replaces network actions by explicit supports over `vars`, keeping
    /// only outcomes of positive probability.
    pub fn compiled(&self, vars: &VariableTable) -> Result<DecisionScenario> {
        let mut actions = Vec::with_capacity(self.actions.len());
        for a in &self.actions {
            let model = match &a.model {
                ActionModel::Explicit(_) => a.model.clone(),
                ActionModel::Network { net, evidence } => {
                    let map = variable_map(vars, net)?;
                    let marginal = ve_marginal(net, &map, evidence)?;
                    let sizes = vars.sizes();
                    let mut digits = vec![0; sizes.len()];
                    let mut support = Vec::new();
                    loop {
                        let p = marginal.probability(&digits);
                        if p > 0.0 {
                            support.push((digits.clone(), p));
                        }
                        if !crate::model::advance(&mut digits, &sizes) {
                            break;
                        }
                    }
                    ActionModel::Explicit(support)
                }
            };
            actions.push(Action {
                name: a.name.clone(),
                model,
            });
        }
        DecisionScenario::new(actions)
    }
}

/// Bayes-net index of every UCP variable; names and domains must match.
pub(crate) fn variable_map(vars: &VariableTable, bn: &BayesNet) -> Result<Vec<VarId>> {
    (0..vars.len())
        .map(|v| {
            let name = vars.name(v);
            let b = bn.variables().index_of(name).ok_or_else(|| {
                Error::Model(format!("variable {name} is missing from the Bayes net"))
            })?;
            if bn.variables().variable(b).values != vars.variable(v).values {
                return Err(Error::Model(format!(
                    "variable {name} has different domains in the UCP-net and the Bayes net"
                )));
            }
            Ok(b)
        })
        .collect()
}

/// A utility variable of the influence diagram: it carries the factor of
/// UCP variable `factor` over that variable and its parents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UtilityNode {
    pub factor: VarId,
    /// Parents then child, UCP ids.
    pub scope: Vec<VarId>,
    /// The same scope as Bayes-net ids.
    pub bn_scope: Vec<VarId>,
}

/// One utility node per nonconstant factor.
pub fn build_influence(net: &UcpNet, bn: &BayesNet) -> Result<Vec<UtilityNode>> {
    let map = variable_map(net.variables(), bn)?;
    Ok(net
        .factors()
        .iter()
        .filter(|f| !f.is_constant())
        .map(|f| {
            let scope = f.scope();
            UtilityNode {
                factor: f.child(),
                bn_scope: scope.iter().map(|&v| map[v]).collect(),
                scope,
            }
        })
        .collect())
}

/// `max F - min F` for every factor, indexed by variable.
pub fn factor_spans(net: &UcpNet) -> Vec<f64> {
    net.factors().iter().map(|f| f.span()).collect()
}

/// Expected value of the factor of `v` under an action.
pub fn factor_expectation(net: &UcpNet, v: VarId, model: &ActionModel) -> Result<f64> {
    let f = net.factor(v);
    if f.is_constant() {
        return Ok(f.values()[0]);
    }
    match model {
        ActionModel::Explicit(support) => Ok(support.iter().map(|(o, p)| p * f.at(o)).sum()),
        ActionModel::Network { net: bn, evidence } => {
            let map = variable_map(net.variables(), bn)?;
            let scope: Vec<VarId> = f.scope().iter().map(|&u| map[u]).collect();
            let marginal = ve_marginal(bn, &scope, evidence)?;
            // the marginal's layout over (parents, child) matches the factor's
            Ok(marginal
                .table
                .values()
                .iter()
                .zip(f.values())
                .map(|(p, u)| p * u)
                .sum())
        }
    }
}

pub fn expected_value(scenario: &DecisionScenario, action: &str, net: &UcpNet) -> Result<f64> {
    let a = &scenario.actions()[scenario.action_index(action)?];
    if let ActionModel::Explicit(support) = &a.model {
        return Ok(support.iter().map(|(o, p)| p * net.utility(o)).sum());
    }
    (0..net.len())
        .map(|v| factor_expectation(net, v, &a.model))
        .sum()
}

/// Expected value with the factors flagged in `ignored` replaced by their
/// minimum. The replaced terms lie in `[0, span]` above that baseline, so
/// `0 <= EV - partial <= sum of ignored spans`.
pub fn partial_expected_value(
    scenario: &DecisionScenario,
    action: usize,
    net: &UcpNet,
    ignored: &[bool],
) -> Result<f64> {
    let model = &scenario.actions()[action].model;
    (0..net.len())
        .map(|v| {
            if ignored[v] {
                Ok(net.factor(v).min())
            } else {
                factor_expectation(net, v, model)
            }
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct StagedDecision {
    pub action: usize,
    pub name: String,
    /// Worst-case shortfall of `action` against the best action; zero when
    /// proven optimal.
    pub bound: f64,
    pub stages_used: usize,
    /// Surviving actions after each evaluated stage (stage 0 first).
    pub survivors: Vec<Vec<usize>>,
}

/// Incremental action selection over a topological order of the UCP-net.
/// Stage `k` adds the expected value of the `k`-th factor for every
/// surviving action. Actions trailing the leader by more than the total
/// span of the factors not yet added are pruned; the leader is returned
/// once its worst-case shortfall is at most `slack`.
pub fn staged_decision(
    scenario: &DecisionScenario,
    net: &UcpNet,
    slack: f64,
) -> Result<StagedDecision> {
    if slack.is_nan() || slack < 0.0 {
        return Err(Error::Argument(format!("slack must be >= 0, got {slack}")));
    }
    scenario.check_against(net.variables())?;
    let order = net
        .topological_order()
        .ok_or_else(|| Error::ValidityRequired("net has a directed cycle".into()))?;
    let spans = factor_spans(net);
    let baseline: f64 = net.factors().iter().map(|f| f.min()).sum();
    let mut partial = vec![baseline; scenario.len()];
    let mut survivors: Vec<usize> = (0..scenario.len()).collect();
    let mut history = Vec::new();
    let mut stage = 0;
    loop {
        let remaining: f64 = order[stage..].iter().map(|&v| spans[v]).sum();
        let best_value = survivors
            .iter()
            .map(|&a| partial[a])
            .fold(f64::NEG_INFINITY, f64::max);
        survivors.retain(|&a| best_value - partial[a] <= remaining + EPS_UTIL);
        history.push(survivors.clone());
        let leader = *survivors
            .iter()
            .find(|&&a| partial[a] == best_value)
            .expect("leader survives pruning");
        let bound = survivors
            .iter()
            .filter(|&&a| a != leader)
            .map(|&a| partial[a] - partial[leader] + remaining)
            .fold(0.0, f64::max);
        if bound <= slack + EPS_UTIL || stage == order.len() {
            return Ok(StagedDecision {
                action: leader,
                name: scenario.actions()[leader].name.clone(),
                bound,
                stages_used: stage,
                survivors: history,
            });
        }
        let v = order[stage];
        let min = net.factor(v).min();
        let terms: Vec<f64> = survivors
            .par_iter()
            .map(|&a| factor_expectation(net, v, &scenario.actions()[a].model))
            .collect::<Result<_>>()?;
        for (&a, t) in survivors.iter().zip(terms) {
            partial[a] += t - min;
        }
        stage += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Factor;

    fn chain_net() -> UcpNet {
        let vars = VariableTable::binary(2);
        let f0 = Factor::new(&vars, 0, vec![], vec![5.0, 0.0]).unwrap();
        let f1 = Factor::new(&vars, 1, vec![0], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        UcpNet::new(vars, vec![f0, f1]).unwrap()
    }

    fn point(name: &str, o: Vec<usize>) -> Action {
        Action {
            name: name.into(),
            model: ActionModel::Explicit(vec![(o, 1.0)]),
        }
    }

    #[test]
    fn scenario_validation() {
        assert!(DecisionScenario::new(vec![]).is_err());
        assert!(DecisionScenario::new(vec![point("a", vec![0, 0]), point("a", vec![1, 1])]).is_err());
        let half = Action {
            name: "h".into(),
            model: ActionModel::Explicit(vec![(vec![0, 0], 0.5)]),
        };
        assert!(DecisionScenario::new(vec![half]).is_err());
        let s = DecisionScenario::new(vec![point("a", vec![0, 3])]).unwrap();
        assert!(s.check_against(chain_net().variables()).is_err());
    }

    #[test]
    fn deterministic_action_ev_is_outcome_utility() {
        let net = chain_net();
        let s = DecisionScenario::new(vec![point("a", vec![1, 1])]).unwrap();
        assert_eq!(expected_value(&s, "a", &net).unwrap(), 1.0);
        assert!(matches!(
            expected_value(&s, "zz", &net),
            Err(Error::UnknownAction(_))
        ));
    }

    #[test]
    fn single_action_needs_no_stage() {
        let net = chain_net();
        let s = DecisionScenario::new(vec![point("only", vec![1, 0])]).unwrap();
        let d = staged_decision(&s, &net, 0.0).unwrap();
        assert_eq!((d.action, d.bound, d.stages_used), (0, 0.0, 0));
        assert!(staged_decision(&s, &net, -1.0).is_err());
    }

    #[test]
    fn decided_after_first_factor() {
        let net = chain_net();
        let s = DecisionScenario::new(vec![point("low", vec![1, 1]), point("high", vec![0, 0])])
            .unwrap();
        let d = staged_decision(&s, &net, 0.0).unwrap();
        assert_eq!(d.name, "high");
        assert_eq!(d.stages_used, 1);
        assert_eq!(d.bound, 0.0);
    }

    #[test]
    fn spans_and_influence_nodes() {
        let net = chain_net();
        assert_eq!(factor_spans(&net), vec![5.0, 1.0]);
        let vars = VariableTable::binary(2);
        let c0 = Factor::new(&vars, 0, vec![], vec![0.5, 0.5]).unwrap();
        let c1 = Factor::new(&vars, 1, vec![0], vec![0.5, 0.5, 0.5, 0.5]).unwrap();
        let bn = BayesNet::new(vars.clone(), vec![c0, c1]).unwrap();
        let nodes = build_influence(&net, &bn).unwrap();
        assert_eq!(nodes.len(), 2);
        assert_eq!(nodes[1].scope, vec![0, 1]);

        let flat = UcpNet::new(
            vars.clone(),
            vec![Factor::constant(&vars, 0, 0.0), net.factor(1).clone()],
        )
        .unwrap();
        assert_eq!(build_influence(&flat, &bn).unwrap().len(), 1);

        let other = VariableTable::from_pairs([("Q", vec!["q", "qbar"])]).unwrap();
        let q = BayesNet::new(other.clone(), vec![Factor::new(&other, 0, vec![], vec![1.0, 0.0]).unwrap()])
            .unwrap();
        assert!(build_influence(&net, &q).is_err());
    }
}
