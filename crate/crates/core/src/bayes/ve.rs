use std::collections::BTreeSet;

use super::{BayesNet, Potential};
use crate::error::{Error, Result};
use crate::model::{advance, Assignment, VarId};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct VeStats {
    pub eliminated: usize,
    /// Largest intermediate table built while eliminating.
    pub max_table: usize,
}

/// `Pr(scope | evidence)` as a potential over `scope` in the requested
/// order.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginal {
    pub table: Potential,
    pub stats: VeStats,
}

impl Marginal {
    pub fn scope(&self) -> &[VarId] {
        self.table.scope()
    }

    pub fn probability(&self, digits: &[usize]) -> f64 {
        self.table.get(digits)
    }
}

fn ancestors(bn: &BayesNet, roots: impl IntoIterator<Item = VarId>) -> BTreeSet<VarId> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<VarId> = roots.into_iter().collect();
    while let Some(v) = stack.pop() {
        if seen.insert(v) {
            stack.extend(bn.parents(v).iter().copied());
        }
    }
    seen
}

/// Exact marginal by variable elimination. Only ancestors of the scope and
/// the evidence take part; the rest sum to one. Elimination order is
/// greedy min-degree over the interaction graph of the current potentials,
/// smallest id on ties.
pub fn ve_marginal(bn: &BayesNet, scope: &[VarId], evidence: &Assignment) -> Result<Marginal> {
    evidence.check(bn.variables())?;
    for (k, &v) in scope.iter().enumerate() {
        if v >= bn.len() || scope[..k].contains(&v) {
            return Err(Error::Argument("marginal scope must list distinct variables".into()));
        }
    }
    let vars = bn.variables();
    let relevant = ancestors(bn, scope.iter().copied().chain(evidence.bound().map(|(v, _)| v)));
    let mut pool: Vec<Potential> = relevant
        .iter()
        .map(|&v| {
            let cpt = bn.cpt(v);
            let parent_cards: Vec<usize> =
                cpt.parents().iter().map(|&p| vars.domain_size(p)).collect();
            Potential::from_cpt(cpt, vars.domain_size(v), &parent_cards).reduce(evidence)
        })
        .collect();
    let mut pending: BTreeSet<VarId> = relevant
        .iter()
        .copied()
        .filter(|v| !scope.contains(v) && evidence.get(*v).is_none())
        .collect();
    let mut stats = VeStats::default();
    while !pending.is_empty() {
        let degree = |v: VarId| -> usize {
            let mut nb = BTreeSet::new();
            for p in pool.iter().filter(|p| p.contains(v)) {
                nb.extend(p.scope().iter().copied());
            }
            nb.len()
        };
        let next = *pending.iter().min_by_key(|&&v| (degree(v), v)).unwrap();
        pending.remove(&next);
        let (touching, rest): (Vec<Potential>, Vec<Potential>) =
            pool.into_iter().partition(|p| p.contains(next));
        let product = touching
            .iter()
            .fold(Potential::unit(), |acc, p| acc.product(p));
        stats.max_table = stats.max_table.max(product.len());
        stats.eliminated += 1;
        pool = rest;
        pool.push(product.sum_out(next));
    }
    let joint = pool.iter().fold(Potential::unit(), |acc, p| acc.product(p));
    stats.max_table = stats.max_table.max(joint.len());
    let total = joint.total();
    if total <= 0.0 {
        return Err(Error::ZeroProbability);
    }
    let free: Vec<VarId> = scope
        .iter()
        .copied()
        .filter(|&v| evidence.get(v).is_none())
        .collect();
    let mut free_table = joint.reorder(&free);
    free_table.scale(1.0 / total);
    let cards: Vec<usize> = scope.iter().map(|&v| vars.domain_size(v)).collect();
    let mut values = Vec::with_capacity(cards.iter().product());
    let mut digits = vec![0; scope.len()];
    let mut free_digits = Vec::with_capacity(free.len());
    loop {
        free_digits.clear();
        let mut consistent = true;
        for (&v, &d) in scope.iter().zip(&digits) {
            match evidence.get(v) {
                Some(x) => consistent &= x == d,
                None => free_digits.push(d),
            }
        }
        values.push(if consistent {
            free_table.get(&free_digits)
        } else {
            0.0
        });
        if !advance(&mut digits, &cards) {
            break;
        }
    }
    Ok(Marginal {
        table: Potential::new(scope.to_vec(), cards, values),
        stats,
    })
}

/// Full joint `Pr(V | evidence)` over every variable, canonical order.
pub fn joint_distribution(bn: &BayesNet, evidence: &Assignment) -> Result<Marginal> {
    let all: Vec<VarId> = (0..bn.len()).collect();
    ve_marginal(bn, &all, evidence)
}
