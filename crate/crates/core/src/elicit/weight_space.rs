use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lp::{
    solve_lp_in, ConstraintLabel, Direction, LinearConstraint, LinearExpr, LpSolution, LpStatus,

};
use crate::model::{advance, NormalizedUcpNet, VarId};
use crate::validation::EXTENDED_FAMILY_LIMIT;

use super::DEFAULT_U_MAX;

/// Closed interval for one weight identifier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightBound {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpaceConfig {
    /// Default upper bound for every pi and sigma.
    pub u_max: f64,
    /// Include the domination constraints implied by the net's structure.
    pub structural: bool,
    /// Per-identifier bounds replacing the default `[0, u_max]`.
    pub bounds: BTreeMap<usize, WeightBound>,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig {
            u_max: DEFAULT_U_MAX,
            structural: true,
            bounds: BTreeMap::new(),
        }
    }
}

/// The feasible set `C` of tradeoff weights: bounds, structural
/// constraints and user responses.
#[derive(Clone, Debug)]
pub struct WeightSpace {
    nnet: Arc<NormalizedUcpNet>,
    constraints: Vec<LinearConstraint>,
}

fn extended_family(nnet: &NormalizedUcpNet, x: VarId) -> Vec<VarId> {
    let mut set: BTreeSet<VarId> = nnet.parents(x).iter().copied().collect();
    for &c in nnet.children(x) {
        set.insert(c);
        set.extend(nnet.parents(c).iter().copied());
    }
    set.remove(&x);
    set.into_iter().collect()
}

/// Domination of every child by its parent, as linear constraints on the
/// weights: for each parent context, each ordered pair `x1, x2` with
/// `v(x1) >= v(x2)` and each joint value of the rest of the extended
/// family,
/// `pi_x (v(x1) - v(x2)) - sum_y [(pi v + sigma)(y | x2) - (pi v + sigma)(y | x1)] >= 0`.
/// Constraints with no terms and exact duplicates are dropped.
pub fn structural_constraints(nnet: &NormalizedUcpNet) -> Result<Vec<LinearConstraint>> {
    let vars = nnet.variables();
    let mut out = Vec::new();
    let mut seen: HashSet<Vec<(usize, u64)>> = HashSet::new();
    let mut scratch = vec![0; nnet.len()];
    for x in 0..nnet.len() {
        let children = nnet.children(x);
        if children.is_empty() {
            continue;
        }
        let rest = extended_family(nnet, x);
        let size = vars
            .joint_size(&rest)
            .saturating_mul(vars.domain_size(x) as u128);
        if size > EXTENDED_FAMILY_LIMIT {
            return Err(Error::SizeLimit {
                what: format!("extended family of {}", vars.name(x)),
                size,
                limit: EXTENDED_FAMILY_LIMIT,
            });
        }
        let vx = nnet.value_function(x);
        let dx = vars.domain_size(x);
        let sizes: Vec<usize> = rest.iter().map(|&v| vars.domain_size(v)).collect();
        let mut digits = vec![0; rest.len()];
        loop {
            for (k, &v) in rest.iter().enumerate() {
                scratch[v] = digits[k];
            }
            let row = vx.row_of(&scratch);
            for x1 in 0..dx {
                for x2 in 0..dx {
                    let (v1, v2) = (vx.value(row, x1), vx.value(row, x2));
                    if x1 == x2 || v1 < v2 {
                        continue;
                    }
                    let mut expr = LinearExpr::new();
                    expr.add_term(nnet.pi_index(x, row), v1 - v2);
                    for &c in children {
                        let vc = nnet.value_function(c);
                        let y = scratch[c];
                        scratch[x] = x2;
                        let r2 = vc.row_of(&scratch);
                        scratch[x] = x1;
                        let r1 = vc.row_of(&scratch);
                        expr.add_term(nnet.pi_index(c, r2), -vc.value(r2, y));
                        expr.add_term(nnet.sigma_index(c, r2), -1.0);
                        expr.add_term(nnet.pi_index(c, r1), vc.value(r1, y));
                        expr.add_term(nnet.sigma_index(c, r1), 1.0);
                    }
                    if expr.is_constant() {
                        continue;
                    }
                    let key: Vec<(usize, u64)> =
                        expr.terms().map(|(i, k)| (i, k.to_bits())).collect();
                    if seen.insert(key) {
                        out.push(LinearConstraint::ge(expr, 0.0, ConstraintLabel::Structural));
                    }
                }
            }
            if !advance(&mut digits, &sizes) {
                break;
            }
        }
    }
    Ok(out)
}

/// Default and user bounds for every identifier.
pub fn bound_constraints(nnet: &NormalizedUcpNet, config: &SpaceConfig) -> Result<Vec<LinearConstraint>> {
    if !(config.u_max.is_finite() && config.u_max >= 0.0) {
        return Err(Error::Argument(format!(
            "U_max must be finite and nonnegative, got {}",
            config.u_max
        )));
    }
    let n = nnet.weight_count();
    if let Some(&bad) = config.bounds.keys().find(|&&i| i >= n) {
        return Err(Error::Argument(format!("no weight identifier #{bad}")));
    }
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let b = config.bounds.get(&i).copied().unwrap_or(WeightBound {
            lower: 0.0,
            upper: config.u_max,
        });
        if !(b.lower.is_finite() && b.upper.is_finite()) {
            return Err(Error::Argument(format!(
                "bounds of {} must be finite",
                nnet.weight_name(i)
            )));
        }
        out.push(LinearConstraint::ge(LinearExpr::var(i), b.lower, ConstraintLabel::Bound));
        out.push(LinearConstraint::le(LinearExpr::var(i), b.upper, ConstraintLabel::Bound));
    }
    Ok(out)
}

impl WeightSpace {
    pub fn new(nnet: Arc<NormalizedUcpNet>, config: &SpaceConfig) -> Result<Self> {
        let mut constraints = bound_constraints(&nnet, config)?;
        if config.structural {
            constraints.extend(structural_constraints(&nnet)?);
        }
        let space = WeightSpace { nnet, constraints };
        if !space.is_feasible() {
            return Err(Error::EmptyWeightSpace);
        }
        Ok(space)
    }

    /// A space from an explicit constraint list, e.g. a replayed one.
    /// Every identifier must be bounded by the list itself.
    pub fn from_constraints(
        nnet: Arc<NormalizedUcpNet>,
        constraints: Vec<LinearConstraint>,
    ) -> Result<Self> {
        let space = WeightSpace { nnet, constraints };
        if space.dimension_of_constraints() > space.dim() {
            return Err(Error::Argument(
                "constraint mentions an identifier the net does not have".into(),
            ));
        }
        if !space.is_feasible() {
            return Err(Error::EmptyWeightSpace);
        }
        Ok(space)
    }

    fn dimension_of_constraints(&self) -> usize {
        self.constraints
            .iter()
            .filter_map(LinearConstraint::max_index)
            .max()
            .map_or(0, |m| m + 1)
    }

    pub fn nnet(&self) -> &Arc<NormalizedUcpNet> {
        &self.nnet
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    /// Number of weight identifiers.
    pub fn dim(&self) -> usize {
        self.nnet.weight_count()
    }

    pub fn solve(&self, objective: &LinearExpr, direction: Direction) -> LpSolution {
        solve_lp_in(self.dim(), objective, direction, &self.constraints)
    }

    /// Optimum of `objective` over the space; errors when the space is
    /// empty.
    pub fn optimize(&self, objective: &LinearExpr, direction: Direction) -> Result<LpSolution> {
        let s = self.solve(objective, direction);
        match s.status {
            LpStatus::Optimal => Ok(s),
            LpStatus::Infeasible => Err(Error::EmptyWeightSpace),
            LpStatus::Unbounded => Err(Error::Argument("weight space is unbounded".into())),
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.solve(&LinearExpr::new(), Direction::Maximize).status != LpStatus::Infeasible
    }

    /// Feasible range of one identifier.
    pub fn interval(&self, idx: usize) -> Result<(f64, f64)> {
        let e = LinearExpr::var(idx);
        let lo = self.optimize(&e, Direction::Minimize)?.objective;
        let hi = self.optimize(&e, Direction::Maximize)?.objective;
        Ok((lo, hi))
    }

    /// The space with one more constraint, without a feasibility probe.
    pub fn with_unchecked(&self, c: LinearConstraint) -> WeightSpace {
        let mut constraints = self.constraints.clone();
        constraints.push(c);
        WeightSpace {
            nnet: Arc::clone(&self.nnet),
            constraints,
        }
    }

    /// Adds a constraint. On infeasibility the error lists an irreducible
    /// conflicting subset, found by a deletion filter.
    pub fn with_constraint(&self, c: LinearConstraint) -> Result<WeightSpace> {
        let next = self.with_unchecked(c);
        if next.is_feasible() {
            return Ok(next);
        }
        let conflict = next.conflict_set();
        Err(Error::Contradiction {
            constraints: conflict
                .iter()
                .map(|&k| render_constraint(&self.nnet, &next.constraints[k]))
                .collect(),
        })
    }

    /// Indices of an irreducible infeasible subset of the constraints.
    fn conflict_set(&self) -> Vec<usize> {
        let mut keep: Vec<bool> = vec![true; self.constraints.len()];
        for k in (0..self.constraints.len()).rev() {
            keep[k] = false;
            let subset: Vec<LinearConstraint> = self
                .constraints
                .iter()
                .zip(&keep)
                .filter(|(_, &on)| on)
                .map(|(c, _)| c.clone())
                .collect();
            let s = solve_lp_in(self.dim(), &LinearExpr::new(), Direction::Maximize, &subset);
            if s.status != LpStatus::Infeasible {
                keep[k] = true;
            }
        }
        (0..keep.len()).filter(|&k| keep[k]).collect()
    }
}

/// `pi[A] - 0.5 sigma[B|A=a] <= 3 (user-response)`.
pub fn render_constraint(nnet: &NormalizedUcpNet, c: &LinearConstraint) -> String {
    let mut s = String::new();
    for (k, (i, coef)) in c.expr.terms().enumerate() {
        let name = nnet.weight_name(i);
        let (sign, mag) = if coef < 0.0 { ("-", -coef) } else { ("+", coef) };
        if k == 0 {
            if sign == "-" {
                s.push('-');
            }
        } else {
            let _ = write!(s, " {sign} ");
        }
        if mag == 1.0 {
            s.push_str(&name);
        } else {
            let _ = write!(s, "{mag} {name}");
        }
    }
    if s.is_empty() {
        s.push('0');
    }
    let rhs = c.rhs - c.expr.constant_term();
    let label = match c.label {
        ConstraintLabel::Structural => "structural",
        ConstraintLabel::Bound => "bound",
        ConstraintLabel::UserResponse => "user-response",
        ConstraintLabel::Other => "other",
    };
    format!("{s} {} {rhs} ({label})", c.sense)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Factor, VariableTable, WeightVector};
    use crate::lp::Sense;
    use crate::validation::is_valid_ucp;

    /// A -> B, binary, `v_A = (1, 0)`, `v_B(.|a) = (1, 0)`,
    /// `v_B(.|abar) = (0, 1)`.
    fn chain() -> Arc<NormalizedUcpNet> {
        let vars =
            VariableTable::from_pairs([("A", vec!["a", "abar"]), ("B", vec!["b", "bbar"])])
                .unwrap();
        let va = Factor::new(&vars, 0, vec![], vec![1.0, 0.0]).unwrap();
        let vb = Factor::new(&vars, 1, vec![0], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        Arc::new(NormalizedUcpNet::new(vars, vec![va, vb]).unwrap())
    }

    #[test]
    fn chain_structural_constraints_expand_the_domination_inequality() {
        let nnet = chain();
        let cs = structural_constraints(&nnet).unwrap();
        let pi_a = nnet.pi_index(0, 0);
        let (pi_b1, sg_b1) = (nnet.pi_index(1, 0), nnet.sigma_index(1, 0));
        let (pi_b2, sg_b2) = (nnet.pi_index(1, 1), nnet.sigma_index(1, 1));
        // pi_A (1 - 0) - [(pi v + sigma)(b | abar) - (pi v + sigma)(b | a)] >= 0
        let at_b = LinearExpr::from_terms([(pi_a, 1.0), (sg_b2, -1.0), (pi_b1, 1.0), (sg_b1, 1.0)], 0.0);
        let at_bbar = LinearExpr::from_terms([(pi_a, 1.0), (pi_b2, -1.0), (sg_b2, -1.0), (sg_b1, 1.0)], 0.0);
        assert_eq!(cs.len(), 2);
        for want in [at_b, at_bbar] {
            assert!(cs.iter().any(|c| c.expr.approx_eq(&want, 0.0) && c.sense == Sense::Ge && c.rhs == 0.0));
        }
        assert!(cs.iter().all(|c| c.label == ConstraintLabel::Structural));
    }

    #[test]
    fn leaves_contribute_no_constraints() {
        let vars = VariableTable::binary(2);
        let v = |c| Factor::new(&vars, c, vec![], vec![0.0, 1.0]).unwrap();
        let nnet = NormalizedUcpNet::new(vars.clone(), vec![v(0), v(1)]).unwrap();
        assert!(structural_constraints(&nnet).unwrap().is_empty());
    }

    #[test]
    fn default_bounds_and_intervals() {
        let nnet = chain();
        let space = WeightSpace::new(Arc::clone(&nnet), &SpaceConfig {
            structural: false,
            ..SpaceConfig::default()
        })
        .unwrap();
        assert_eq!(space.constraints().len(), 2 * nnet.weight_count());
        let (lo, hi) = space.interval(0).unwrap();
        assert!(lo.abs() < 1e-9 && (hi - DEFAULT_U_MAX).abs() < 1e-9);
        let bad = SpaceConfig {
            u_max: f64::NAN,
            ..SpaceConfig::default()
        };
        assert!(matches!(WeightSpace::new(Arc::clone(&nnet), &bad), Err(Error::Argument(_))));
        let unknown = SpaceConfig {
            bounds: [(99, WeightBound { lower: 0.0, upper: 1.0 })].into_iter().collect(),
            ..SpaceConfig::default()
        };
        assert!(matches!(WeightSpace::new(nnet, &unknown), Err(Error::Argument(_))));
    }

    #[test]
    fn contradiction_names_the_conflicting_constraints() {
        let nnet = chain();
        let space = WeightSpace::new(Arc::clone(&nnet), &SpaceConfig::default()).unwrap();
        let pi_a = nnet.pi_index(0, 0);
        let space = space
            .with_constraint(LinearConstraint::le(LinearExpr::var(pi_a), 1.0, ConstraintLabel::UserResponse))
            .unwrap();
        let err = space
            .with_constraint(LinearConstraint::ge(LinearExpr::var(pi_a), 2.0, ConstraintLabel::UserResponse))
            .unwrap_err();
        let Error::Contradiction { constraints } = err else {
            panic!("expected a contradiction");
        };
        assert_eq!(constraints, vec!["pi[A] <= 1 (user-response)", "pi[A] >= 2 (user-response)"]);
    }

    #[test]
    fn contradictory_bounds_leave_an_empty_space() {
        let nnet = chain();
        let config = SpaceConfig {
            bounds: [(0, WeightBound { lower: 2.0, upper: 1.0 })].into_iter().collect(),
            ..SpaceConfig::default()
        };
        assert!(matches!(WeightSpace::new(nnet, &config), Err(Error::EmptyWeightSpace)));
    }

    // With pi_A = 0 the factor of A is constant, so the tie between a and
    // abar must survive B's swing in both directions. The linear
    // constraints only see the direction v_A orders, so this boundary
    // point satisfies them yet instantiates an invalid net.
    #[test]
    fn zero_pi_boundary_is_not_covered_by_linear_constraints() {
        let nnet = chain();
        let space = WeightSpace::new(Arc::clone(&nnet), &SpaceConfig::default()).unwrap();
        let mut w = vec![0.0; nnet.weight_count()];
        w[nnet.pi_index(1, 0)] = 1.0;
        w[nnet.sigma_index(1, 0)] = 5.0;
        w[nnet.pi_index(1, 1)] = 1.0;
        assert!(space.constraints().iter().all(|c| c.is_satisfied(&w, 0.0)));
        let net = nnet.instantiate(&WeightVector(w.clone())).unwrap();
        assert!(!is_valid_ucp(&net).unwrap().valid());
        w[nnet.pi_index(0, 0)] = 1.0;
        let net = nnet.instantiate(&WeightVector(w)).unwrap();
        assert!(is_valid_ucp(&net).unwrap().valid());
    }

    #[test]
    fn rendering() {
        let nnet = chain();
        let c = LinearConstraint::le(
            LinearExpr::from_terms([(nnet.pi_index(0, 0), -1.0), (nnet.sigma_index(1, 1), 0.5)], 1.0),
            4.0,
            ConstraintLabel::Other,
        );
        assert_eq!(render_constraint(&nnet, &c), "-pi[A] + 0.5 sigma[B|A=abar] <= 3 (other)");
    }
}
