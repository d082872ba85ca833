//! Seeded generators of random nets, scenarios and LPs, for tests,
//! benchmarks and simulated users.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bayes::{Action, ActionModel, BayesNet, DecisionScenario};
use crate::elicit::WeightSpace;
use crate::error::Result;
use crate::lp::{ConstraintLabel, Direction, LinearConstraint, LinearExpr};
use crate::model::{advance, Assignment, Factor, NormalizedUcpNet, UcpNet, VarId, VariableTable};
use crate::validation::{extended_family, span_report};

/// Variables `X0..` with domain sizes drawn from `sizes`.
pub fn random_variables(rng: &mut impl Rng, n: usize, sizes: &[usize]) -> VariableTable {
    VariableTable::from_pairs((0..n).map(|i| {
        let d = *sizes.choose(rng).expect("nonempty sizes");
        (format!("X{i}"), (0..d).map(|k| format!("v{k}")).collect::<Vec<_>>())
    }))
    .expect("generated names are valid")
}

/// Parent lists of a random DAG in which every edge goes from a lower to
/// a higher id. Each earlier variable becomes a parent with probability
/// `p`, up to `max_parents`.
pub fn random_dag(rng: &mut impl Rng, n: usize, max_parents: usize, p: f64) -> Vec<Vec<VarId>> {
    (0..n)
        .map(|i| {
            let mut cands: Vec<VarId> = (0..i).filter(|_| rng.gen_bool(p)).collect();
            cands.shuffle(rng);
            cands.truncate(max_parents);
            cands.sort_unstable();
            cands
        })
        .collect()
}

/// Factor entries uniform in `[lo, hi)`.
pub fn random_net(
    rng: &mut impl Rng,
    vars: &VariableTable,
    parents: &[Vec<VarId>],
    lo: f64,
    hi: f64,
) -> UcpNet {
    let factors = (0..vars.len())
        .map(|v| {
            Factor::from_fn(vars, v, parents[v].clone(), |_, _| rng.gen_range(lo..hi))
                .expect("well-formed")
        })
        .collect();
    UcpNet::new(vars.clone(), factors).expect("one factor per variable")
}

/// Row values `rank + U(0, 1/2)` over a random ranking, so distinct values
/// differ by at least 1/2.
fn gapped_factor(rng: &mut impl Rng, vars: &VariableTable, v: VarId, parents: Vec<VarId>) -> Factor {
    let d = vars.domain_size(v);
    let sizes: Vec<usize> = parents.iter().map(|&p| vars.domain_size(p)).collect();
    let mut values = Vec::new();
    let mut digits = vec![0; sizes.len()];
    loop {
        let mut ranks: Vec<usize> = (0..d).collect();
        ranks.shuffle(rng);
        values.extend(ranks.iter().map(|&r| r as f64 + rng.gen_range(0.0..0.5)));
        if !advance(&mut digits, &sizes) {
            break;
        }
    }
    Factor::new(vars, v, parents, values).expect("well-formed")
}

/// Smallest factor by which `x`'s factor must be scaled to dominate its
/// children, given the children's current factors.
fn required_scale(net: &UcpNet, x: VarId) -> f64 {
    let children = net.children(x);
    if children.is_empty() {
        return 0.0;
    }
    let vars = net.variables();
    let rest = extended_family(net, x);
    let sizes: Vec<usize> = rest.iter().map(|&v| vars.domain_size(v)).collect();
    let fx = net.factor(x);
    let dx = vars.domain_size(x);
    let mut digits = vec![0; rest.len()];
    let mut scratch = vec![0; net.len()];
    let mut need: f64 = 0.0;
    loop {
        for (k, &v) in rest.iter().enumerate() {
            scratch[v] = digits[k];
        }
        let row = fx.row_of(&scratch);
        let sums: Vec<f64> = (0..dx)
            .map(|xv| {
                scratch[x] = xv;
                children.iter().map(|&c| net.factor(c).at(&scratch)).sum()
            })
            .collect();
        for x1 in 0..dx {
            for x2 in 0..dx {
                let gap = fx.value(row, x1) - fx.value(row, x2);
                if gap > 0.0 {
                    need = need.max((sums[x2] - sums[x1]) / gap);
                }
            }
        }
        if !advance(&mut digits, &sizes) {
            break;
        }
    }
    need
}

fn scale_factor(f: &Factor, s: f64) -> Factor {
    f.map_values(|_, _, x| x * s)
}

fn rebuilt(net: &UcpNet, v: VarId, f: Factor) -> UcpNet {
    let mut factors = net.factors().to_vec();
    factors[v] = f;
    UcpNet::new(net.variables().clone(), factors).expect("same shape")
}

/// A valid UCP-net: gapped random factors, then every variable (children
/// first) is scaled just enough to dominate its children, times
/// `1 + U(0, margin)`. The span-based sufficient test may or may not hold.
pub fn random_valid_net(
    rng: &mut impl Rng,
    vars: &VariableTable,
    parents: &[Vec<VarId>],
    margin: f64,
) -> UcpNet {
    let factors = (0..vars.len())
        .map(|v| gapped_factor(rng, vars, v, parents[v].clone()))
        .collect();
    let mut net = UcpNet::new(vars.clone(), factors).expect("one factor per variable");
    let order = net.topological_order().expect("acyclic parents");
    for &x in order.iter().rev() {
        let s = required_scale(&net, x) * (1.0 + rng.gen_range(0.0..=margin));
        if s > 1.0 {
            let f = scale_factor(net.factor(x), s);
            net = rebuilt(&net, x, f);
        }
    }
    net
}

/// A net passing the span-based sufficient test: every variable's Minspan
/// is scaled past the total swing its children show when it changes.
pub fn random_sufficient_net(
    rng: &mut impl Rng,
    vars: &VariableTable,
    parents: &[Vec<VarId>],
    margin: f64,
) -> UcpNet {
    let factors = (0..vars.len())
        .map(|v| gapped_factor(rng, vars, v, parents[v].clone()))
        .collect();
    let mut net = UcpNet::new(vars.clone(), factors).expect("one factor per variable");
    let order = net.topological_order().expect("acyclic parents");
    for &x in order.iter().rev() {
        let spans = span_report(&net)[x];
        let s = spans.children_swing / spans.minspan * (1.0 + rng.gen_range(0.0..=margin));
        if s > 1.0 {
            let f = scale_factor(net.factor(x), s);
            net = rebuilt(&net, x, f);
        }
    }
    net
}

/// Random evidence: each variable observed with probability `p`.
pub fn random_evidence(rng: &mut impl Rng, vars: &VariableTable, p: f64) -> Assignment {
    let mut a = Assignment::empty(vars.len());
    for v in 0..vars.len() {
        if rng.gen_bool(p) {
            a.set(v, rng.gen_range(0..vars.domain_size(v)));
        }
    }
    a
}

fn random_distribution(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut p: Vec<f64> = raw.iter().map(|x| x / total).collect();
    // make the row sum exact up to rounding of the last entry
    let head: f64 = p[..d - 1].iter().sum();
    p[d - 1] = 1.0 - head;
    p
}

/// Bayes net with strictly positive CPT rows.
pub fn random_bayes_net(rng: &mut impl Rng, vars: &VariableTable, parents: &[Vec<VarId>]) -> BayesNet {
    let cpts = (0..vars.len())
        .map(|v| {
            let d = vars.domain_size(v);
            let sizes: Vec<usize> = parents[v].iter().map(|&p| vars.domain_size(p)).collect();
            let rows: usize = sizes.iter().product();
            let values: Vec<f64> = (0..rows).flat_map(|_| random_distribution(rng, d)).collect();
            Factor::new(vars, v, parents[v].clone(), values).expect("well-formed")
        })
        .collect();
    BayesNet::new(vars.clone(), cpts).expect("valid CPTs")
}

/// `n_actions` actions with explicit supports of up to `max_support`
/// distinct outcomes.
pub fn random_explicit_scenario(
    rng: &mut impl Rng,
    vars: &VariableTable,
    n_actions: usize,
    max_support: usize,
) -> DecisionScenario {
    let actions = (0..n_actions)
        .map(|i| {
            let k = rng.gen_range(1..=max_support);
            let mut outcomes: Vec<Vec<usize>> = Vec::new();
            for _ in 0..k {
                let o: Vec<usize> = (0..vars.len())
                    .map(|v| rng.gen_range(0..vars.domain_size(v)))
                    .collect();
                if !outcomes.contains(&o) {
                    outcomes.push(o);
                }
            }
            let p = random_distribution(rng, outcomes.len().max(2));
            let support = if outcomes.len() == 1 {
                vec![(outcomes.pop().expect("one outcome"), 1.0)]
            } else {
                outcomes.into_iter().zip(p).collect()
            };
            Action {
                name: format!("a{i}"),
                model: ActionModel::Explicit(support),
            }
        })
        .collect();
    DecisionScenario::new(actions).expect("valid supports")
}

/// Actions as settings of a root choice variable `Act` of a random Bayes
/// net over `vars` plus `Act`. Returns the scenario and the net.
pub fn random_network_scenario(
    rng: &mut impl Rng,
    vars: &VariableTable,
    parents: &[Vec<VarId>],
    n_actions: usize,
) -> (DecisionScenario, Arc<BayesNet>) {
    let mut pairs: Vec<(String, Vec<String>)> = vars
        .iter()
        .map(|v| (v.name.clone(), v.values.clone()))
        .collect();
    pairs.push((
        "Act".to_string(),
        (0..n_actions.max(2)).map(|i| format!("a{i}")).collect(),
    ));
    let bvars = VariableTable::from_pairs(pairs).expect("valid names");
    let act = vars.len();
    let mut bparents: Vec<Vec<VarId>> = parents.to_vec();
    for ps in bparents.iter_mut() {
        if ps.len() < 3 && rng.gen_bool(0.5) {
            ps.push(act);
        }
    }
    bparents.push(Vec::new());
    let bn = Arc::new(random_bayes_net(rng, &bvars, &bparents));
    let actions = (0..n_actions)
        .map(|i| Action {
            name: format!("a{i}"),
            model: ActionModel::Network {
                net: Arc::clone(&bn),
                evidence: Assignment::from_pairs(bvars.len(), [(act, i)]),
            },
        })
        .collect();
    (DecisionScenario::new(actions).expect("valid evidence"), bn)
}

/// Normalized net whose rows each take values 0 and 1 plus interior
/// values in between.
pub fn random_normalized_net(
    rng: &mut impl Rng,
    vars: &VariableTable,
    parents: &[Vec<VarId>],
) -> NormalizedUcpNet {
    let factors = (0..vars.len())
        .map(|v| {
            let d = vars.domain_size(v);
            let sizes: Vec<usize> = parents[v].iter().map(|&p| vars.domain_size(p)).collect();
            let rows: usize = sizes.iter().product();
            let mut values = Vec::with_capacity(rows * d);
            for _ in 0..rows {
                let mut row: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
                let mut idx: Vec<usize> = (0..d).collect();
                idx.shuffle(rng);
                row[idx[0]] = 0.0;
                row[idx[1]] = 1.0;
                values.extend(row);
            }
            Factor::new(vars, v, parents[v].clone(), values).expect("well-formed")
        })
        .collect();
    NormalizedUcpNet::new(vars.clone(), factors).expect("rows span [0, 1]")
}

/// A point of the weight space: the average of `k` optima of random
/// objectives, so usually not a vertex.
pub fn random_feasible_point(rng: &mut impl Rng, space: &WeightSpace, k: usize) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; space.dim()];
    for _ in 0..k.max(1) {
        let obj = LinearExpr::from_terms((0..space.dim()).map(|i| (i, rng.gen_range(-1.0..1.0))), 0.0);
        let s = space.optimize(&obj, Direction::Maximize)?;
        for (a, x) in acc.iter_mut().zip(&s.point) {
            *a += x;
        }
    }
    let k = k.max(1) as f64;
    Ok(acc.into_iter().map(|a| a / k).collect())
}

/// A random LP over a box `[-bound, bound]^dim` with `extra` random
/// inequalities. Returns the objective and the constraints.
pub fn random_bounded_lp(
    rng: &mut impl Rng,
    dim: usize,
    extra: usize,
    bound: f64,
) -> (LinearExpr, Vec<LinearConstraint>) {
    let mut cs = Vec::new();
    for i in 0..dim {
        let lo = -rng.gen_range(0.0..bound);
        let hi = rng.gen_range(0.0..bound);
        cs.push(LinearConstraint::ge(LinearExpr::var(i), lo, ConstraintLabel::Bound));
        cs.push(LinearConstraint::le(LinearExpr::var(i), hi, ConstraintLabel::Bound));
    }
    for _ in 0..extra {
        let expr = LinearExpr::from_terms((0..dim).map(|i| (i, rng.gen_range(-2.0..2.0))), 0.0);
        let rhs = rng.gen_range(-0.5..2.0);
        cs.push(if rng.gen_bool(0.8) {
            LinearConstraint::le(expr, rhs, ConstraintLabel::Other)
        } else {
            LinearConstraint::ge(expr, -rhs, ConstraintLabel::Other)
        });
    }
    let obj = LinearExpr::from_terms((0..dim).map(|i| (i, rng.gen_range(-1.0..1.0))), 0.0);
    (obj, cs)
}

#[cfg(test)]
mod tests {
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    use super::*;
    use crate::validation::{is_valid_ucp, sufficient_check};

    #[test]
    fn dags_point_forward_and_respect_the_parent_cap() {
        let mut r = StdRng::seed_from_u64(1);
        for _ in 0..50 {
            let dag = random_dag(&mut r, 8, 2, 0.7);
            for (i, ps) in dag.iter().enumerate() {
                assert!(ps.len() <= 2 && ps.iter().all(|&p| p < i));
                assert!(ps.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn same_seed_same_net() {
        let gen = |seed| {
            let mut r = StdRng::seed_from_u64(seed);
            let vars = random_variables(&mut r, 5, &[2, 3]);
            let dag = random_dag(&mut r, 5, 2, 0.5);
            random_valid_net(&mut r, &vars, &dag, 0.5)
        };
        assert_eq!(gen(9), gen(9));
    }

    #[test]
    fn generated_nets_meet_their_contracts() {
        let mut r = StdRng::seed_from_u64(2);
        for _ in 0..30 {
            let vars = random_variables(&mut r, 5, &[2, 3]);
            let dag = random_dag(&mut r, 5, 2, 0.6);
            assert!(is_valid_ucp(&random_valid_net(&mut r, &vars, &dag, 0.5)).unwrap().valid());
            assert!(sufficient_check(&random_sufficient_net(&mut r, &vars, &dag, 0.5)));
            let nnet = random_normalized_net(&mut r, &vars, &dag);
            assert_eq!(nnet.weight_count() % 2, 0);
        }
    }

    #[test]
    fn feasible_points_are_feasible() {
        let mut r = StdRng::seed_from_u64(3);
        let (obj, cs) = random_bounded_lp(&mut r, 3, 4, 5.0);
        assert_eq!(obj.terms().count(), 3);
        assert_eq!(cs.len(), 10);
        let vars = random_variables(&mut r, 3, &[2]);
        let dag = random_dag(&mut r, 3, 2, 0.8);
        let nnet = Arc::new(random_normalized_net(&mut r, &vars, &dag));
        let space = WeightSpace::new(nnet, &crate::elicit::SpaceConfig::default()).unwrap();
        let w = random_feasible_point(&mut r, &space, 4).unwrap();
        assert!(space.constraints().iter().all(|c| c.is_satisfied(&w, 1e-7)));
    }
}
