use rayon::prelude::*;

use super::WeightSpace;
use crate::bayes::{ActionModel, DecisionScenario};
use crate::error::{Error, Result};
use crate::lp::{Direction, LinearExpr};
use crate::model::{Assignment, NormalizedUcpNet};

/// Expected utility of an action as a linear form in the weights. Network
/// actions must be compiled to explicit supports first.
pub fn ev_linear_form(
    scenario: &DecisionScenario,
    action: &str,
    nnet: &NormalizedUcpNet,
) -> Result<LinearExpr> {
    let idx = scenario.action_index(action)?;
    conditioned_form(scenario, idx, nnet, None)
}

/// EV form of action `idx` conditioned on `context`: the support is
/// restricted to consistent outcomes and renormalized.
pub(crate) fn conditioned_form(
    scenario: &DecisionScenario,
    idx: usize,
    nnet: &NormalizedUcpNet,
    context: Option<&Assignment>,
) -> Result<LinearExpr> {
    let action = &scenario.actions()[idx];
    let ActionModel::Explicit(support) = &action.model else {
        return Err(Error::CompileFirst(action.name.clone()));
    };
    scenario.check_against(nnet.variables())?;
    let consistent = |o: &[usize]| {
        context.is_none_or(|c| c.bound().all(|(v, x)| o[v] == x))
    };
    let mass: f64 = support
        .iter()
        .filter(|(o, _)| consistent(o))
        .map(|(_, p)| p)
        .sum();
    if mass <= 0.0 {
        return Err(Error::ZeroProbability);
    }
    let mut expr = LinearExpr::new();
    for (o, p) in support.iter().filter(|(o, _)| consistent(o)) {
        for (i, c) in nnet.utility_terms(o) {
            expr.add_term(i, p / mass * c);
        }
    }
    Ok(expr)
}

/// EV forms of every action in canonical order.
pub fn action_forms(scenario: &DecisionScenario, nnet: &NormalizedUcpNet) -> Result<Vec<LinearExpr>> {
    (0..scenario.len())
        .map(|i| conditioned_form(scenario, i, nnet, None))
        .collect()
}

/// `max_{w in C} EV(a_j, w) - EV(a_i, w)`.
pub fn pairwise_max_advantage(
    scenario: &DecisionScenario,
    i: &str,
    j: &str,
    space: &WeightSpace,
) -> Result<f64> {
    let (i, j) = (scenario.action_index(i)?, scenario.action_index(j)?);
    let forms = action_forms(scenario, space.nnet())?;
    if i == j {
        if !space.is_feasible() {
            return Err(Error::EmptyWeightSpace);
        }
        return Ok(0.0);
    }
    Ok(space
        .optimize(&forms[j].minus(&forms[i]), Direction::Maximize)?
        .objective)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegretReport {
    /// `MR(a_i, C)` per action, canonical order.
    pub max_regret: Vec<f64>,
    /// Index of `a*_C`, the first action of minimal max regret.
    pub recommended: usize,
    pub mmr: f64,
    /// `advantage[i][j] = max_{w in C} EV(a_j, w) - EV(a_i, w)`; zero on the
    /// diagonal.
    pub advantage: Vec<Vec<f64>>,
    /// Adversary of the recommendation and a weight vector at which it
    /// attains the max regret, if any alternative exists.
    pub adversary: Option<(usize, Vec<f64>)>,
    /// LP duals for the recommendation's worst pair, one per constraint of
    /// `C`. Advisory.
    pub duals: Vec<f64>,
}

/// Minimax regret by `n(n-1)` pairwise LPs. `MR(a_i, C)` is the largest
/// advantage of any alternative over `a_i`, and at least zero.
pub fn minimax_regret(scenario: &DecisionScenario, space: &WeightSpace) -> Result<RegretReport> {
    let forms = action_forms(scenario, space.nnet())?;
    regret_from_forms(&forms, space)
}

pub(crate) fn regret_from_forms(forms: &[LinearExpr], space: &WeightSpace) -> Result<RegretReport> {
    let n = forms.len();
    if !space.is_feasible() {
        return Err(Error::EmptyWeightSpace);
    }
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let solved = pairs
        .par_iter()
        .map(|&(i, j)| space.optimize(&forms[j].minus(&forms[i]), Direction::Maximize))
        .collect::<Result<Vec<_>>>()?;
    let mut advantage = vec![vec![0.0; n]; n];
    for (&(i, j), s) in pairs.iter().zip(&solved) {
        advantage[i][j] = s.objective;
    }
    let max_regret: Vec<f64> = advantage
        .iter()
        .map(|row| row.iter().copied().fold(0.0, f64::max))
        .collect();
    let mut recommended = 0;
    for (i, &mr) in max_regret.iter().enumerate() {
        if mr < max_regret[recommended] {
            recommended = i;
        }
    }
    let worst = pairs
        .iter()
        .zip(&solved)
        .filter(|((i, _), _)| *i == recommended)
        .fold(None, |best: Option<(usize, &crate::lp::LpSolution)>, (&(_, j), s)| {
            match best {
                Some((_, b)) if b.objective >= s.objective => best,
                _ => Some((j, s)),
            }
        });
    Ok(RegretReport {
        mmr: max_regret[recommended],
        max_regret,
        recommended,
        advantage,
        adversary: worst.map(|(j, s)| (j, s.point.clone())),
        duals: worst.map(|(_, s)| s.duals.clone()).unwrap_or_default(),
    })
}

/// `R(a_i, w) = max_j EV(a_j, w) - EV(a_i, w)` for a fixed weight vector.
pub fn regret_at(forms: &[LinearExpr], i: usize, w: &[f64]) -> f64 {
    let evs: Vec<f64> = forms.iter().map(|f| f.eval(w)).collect();
    evs.iter().copied().fold(f64::NEG_INFINITY, f64::max) - evs[i]
}
