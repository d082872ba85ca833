//! Exact and sufficient validity tests, GAI-to-topology construction and
//! brute-force preferential-independence oracles.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{advance, mixed_index, Factor, UcpNet, VarId, VariableTable, EPS_UTIL};

/// Largest joint domain (extended family times the variable itself) the
/// exact test will enumerate.
pub const EXTENDED_FAMILY_LIMIT: u128 = 1 << 22;

/// Witnesses kept per variable; the violation count is always exact.
pub const WITNESS_CAP: usize = 100;

/// One violated domination inequality: with the parents at
/// `parent_context` and the children plus their other parents at
/// `neighborhood`, switching from `better` to `worse` gains `rhs` in the
/// children's factors, more than the `lhs` it loses in the variable's own.
#[derive(Clone, Debug, PartialEq)]
pub struct DominationWitness {
    pub variable: VarId,
    pub parent_context: Vec<(VarId, usize)>,
    pub better: usize,
    pub worse: usize,
    pub neighborhood: Vec<(VarId, usize)>,
    pub lhs: f64,
    pub rhs: f64,
}

impl DominationWitness {
    pub fn describe(&self, vars: &VariableTable) -> String {
        format!(
            "{}: {} vs {} given [{}] with [{}]: own gain {} < children swing {}",
            vars.name(self.variable),
            vars.label(self.variable, self.better),
            vars.label(self.variable, self.worse),
            vars.format_bindings(self.parent_context.iter().copied()),
            vars.format_bindings(self.neighborhood.iter().copied()),
            self.lhs,
            self.rhs
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DominationCheck {
    pub variable: VarId,
    pub dominates: bool,
    pub violations: usize,
    pub witnesses: Vec<DominationWitness>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ValidationFailure {
    /// Variables along a directed cycle.
    Cycle(Vec<VarId>),
    Domination(DominationWitness),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub failures: Vec<ValidationFailure>,
    /// Exact number of violated inequalities per variable.
    pub violation_counts: Vec<usize>,
}

impl ValidationReport {
    pub fn valid(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn witnesses(&self) -> impl Iterator<Item = &DominationWitness> {
        self.failures.iter().filter_map(|f| match f {
            ValidationFailure::Domination(w) => Some(w),
            ValidationFailure::Cycle(_) => None,
        })
    }

    pub fn render(&self, vars: &VariableTable) -> String {
        let mut out = String::new();
        if self.valid() {
            out.push_str("valid\n");
            return out;
        }
        out.push_str("invalid\n");
        for f in &self.failures {
            match f {
                ValidationFailure::Cycle(c) => {
                    let names: Vec<&str> = c.iter().map(|&v| vars.name(v)).collect();
                    let _ = writeln!(out, "  cycle: {}", names.join(" -> "));
                }
                ValidationFailure::Domination(w) => {
                    let _ = writeln!(out, "  domination: {}", w.describe(vars));
                }
            }
        }
        for (v, &n) in self.violation_counts.iter().enumerate() {
            if n > 0 {
                let _ = writeln!(out, "  {} violations: {}", vars.name(v), n);
            }
        }
        out
    }
}

/// Variables other than `x` that share a factor with `x` or with one of its
/// children: parents, children, and the children's other parents.
pub(crate) fn extended_family(net: &UcpNet, x: VarId) -> Vec<VarId> {
    let mut set: BTreeSet<VarId> = net.parents(x).iter().copied().collect();
    for &c in net.children(x) {
        set.insert(c);
        set.extend(net.parents(c).iter().copied());
    }
    set.remove(&x);
    set.into_iter().collect()
}

pub fn check_acyclic(net: &UcpNet) -> bool {
    net.is_acyclic()
}

/// Returns the vertices of some directed cycle, if any.
fn find_cycle(net: &UcpNet) -> Option<Vec<VarId>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    fn visit(net: &UcpNet, v: VarId, marks: &mut [Mark], stack: &mut Vec<VarId>) -> Option<Vec<VarId>> {
        marks[v] = Mark::Active;
        stack.push(v);
        for &c in net.children(v) {
            match marks[c] {
                Mark::Active => {
                    let start = stack.iter().position(|&s| s == c).unwrap();
                    let mut cycle = stack[start..].to_vec();
                    cycle.push(c);
                    return Some(cycle);
                }
                Mark::New => {
                    if let Some(cycle) = visit(net, c, marks, stack) {
                        return Some(cycle);
                    }
                }
                Mark::Done => {}
            }
        }
        stack.pop();
        marks[v] = Mark::Done;
        None
    }
    let mut marks = vec![Mark::New; net.len()];
    let mut stack = Vec::new();
    (0..net.len()).find_map(|v| {
        if marks[v] == Mark::New {
            visit(net, v, &mut marks, &mut stack)
        } else {
            None
        }
    })
}

/// Exact domination test for `x`: for every parent context `u`, every
/// ordered pair with `f_x(x1,u) >= f_x(x2,u)` (ties in both orders) and
/// every joint value of the children and their other parents,
/// `f_x(x1,u) - f_x(x2,u) >= sum_children f_y(.., x2, ..) - f_y(.., x1, ..)`.
pub fn dominates_children(net: &UcpNet, x: VarId) -> Result<DominationCheck> {
    let mut check = DominationCheck {
        variable: x,
        dominates: true,
        violations: 0,
        witnesses: Vec::new(),
    };
    let children = net.children(x);
    if children.is_empty() {
        return Ok(check);
    }
    let vars = net.variables();
    let rest = extended_family(net, x);
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
    let fx = net.factor(x);
    let parents = net.parents(x);
    let dx = vars.domain_size(x);
    let sizes: Vec<usize> = rest.iter().map(|&v| vars.domain_size(v)).collect();
    let mut digits = vec![0; rest.len()];
    let mut scratch = vec![0; net.len()];
    let mut child_sum = vec![0.0; dx];
    loop {
        for (k, &v) in rest.iter().enumerate() {
            scratch[v] = digits[k];
        }
        let row = fx.row_of(&scratch);
        for (xv, sum) in child_sum.iter_mut().enumerate() {
            scratch[x] = xv;
            *sum = children.iter().map(|&c| net.factor(c).at(&scratch)).sum();
        }
        for x1 in 0..dx {
            for x2 in 0..dx {
                let (f1, f2) = (fx.value(row, x1), fx.value(row, x2));
                if x1 == x2 || f1 + EPS_UTIL < f2 {
                    continue;
                }
                let lhs = f1 - f2;
                let rhs = child_sum[x2] - child_sum[x1];
                if lhs + EPS_UTIL < rhs {
                    check.dominates = false;
                    check.violations += 1;
                    if check.witnesses.len() < WITNESS_CAP {
                        check.witnesses.push(DominationWitness {
                            variable: x,
                            parent_context: parents.iter().map(|&p| (p, scratch[p])).collect(),
                            better: x1,
                            worse: x2,
                            neighborhood: rest
                                .iter()
                                .filter(|v| !parents.contains(v))
                                .map(|&v| (v, scratch[v]))
                                .collect(),
                            lhs,
                            rhs,
                        });
                    }
                }
            }
        }
        if !advance(&mut digits, &sizes) {
            break;
        }
    }
    Ok(check)
}

/// Acyclicity plus domination at every variable.
pub fn is_valid_ucp(net: &UcpNet) -> Result<ValidationReport> {
    let mut failures = Vec::new();
    if let Some(cycle) = find_cycle(net) {
        failures.push(ValidationFailure::Cycle(cycle));
    }
    let checks: Vec<DominationCheck> = (0..net.len())
        .into_par_iter()
        .map(|v| dominates_children(net, v))
        .collect::<Result<_>>()?;
    let violation_counts = checks.iter().map(|c| c.violations).collect();
    failures.extend(
        checks
            .into_iter()
            .flat_map(|c| c.witnesses)
            .map(ValidationFailure::Domination),
    );
    Ok(ValidationReport {
        failures,
        violation_counts,
    })
}

/// Smallest and largest gap between two distinct values of a variable's
/// factor, each taken over parent contexts, plus two sums over the
/// children: their own Maxspans, and their swings, i.e. how far a child's
/// factor entry can move when only this variable changes.
///
/// A child's within-row Maxspan does not bound its swing (a child can
/// prefer the same value in every row while the entry itself jumps with
/// the parent), so [`VariableSpans::holds`] compares Minspan against the
/// swings. The Maxspan sum is kept for reporting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VariableSpans {
    pub minspan: f64,
    pub maxspan: f64,
    pub children_maxspan: f64,
    pub children_swing: f64,
}

impl VariableSpans {
    pub fn holds(&self) -> bool {
        self.minspan + EPS_UTIL >= self.children_swing
    }
}

fn spans_of(f: &Factor) -> (f64, f64) {
    let d = f.child_size();
    let mut minspan = f64::INFINITY;
    let mut maxspan: f64 = 0.0;
    for x1 in 0..d {
        for x2 in (x1 + 1)..d {
            let mut lo = f64::INFINITY;
            let mut hi: f64 = 0.0;
            for row in 0..f.num_rows() {
                let gap = (f.value(row, x1) - f.value(row, x2)).abs();
                lo = lo.min(gap);
                hi = hi.max(gap);
            }
            minspan = minspan.min(lo);
            maxspan = maxspan.max(hi);
        }
    }
    (minspan, maxspan)
}

/// Largest change of any entry of `child`'s factor when only `parent`
/// changes value.
fn swing(net: &UcpNet, child: VarId, parent: VarId) -> f64 {
    let f = net.factor(child);
    let k = f
        .parents()
        .iter()
        .position(|&p| p == parent)
        .expect("parent of child");
    let mut out: f64 = 0.0;
    for row in 0..f.num_rows() {
        let mut ctx = f.row_context(row);
        let own = ctx[k];
        for alt in (own + 1)..net.variables().domain_size(parent) {
            ctx[k] = alt;
            let other = f.row_index(&ctx);
            for y in 0..f.child_size() {
                out = out.max((f.value(row, y) - f.value(other, y)).abs());
            }
        }
    }
    out
}

pub fn span_report(net: &UcpNet) -> Vec<VariableSpans> {
    let raw: Vec<(f64, f64)> = net.factors().iter().map(spans_of).collect();
    (0..net.len())
        .map(|v| VariableSpans {
            minspan: raw[v].0,
            maxspan: raw[v].1,
            children_maxspan: net.children(v).iter().map(|&c| raw[c].1).sum(),
            children_swing: net.children(v).iter().map(|&c| swing(net, c, v)).sum(),
        })
        .collect()
}

/// Polynomial sufficient condition: every variable's Minspan covers the
/// total swing it can cause in its children's factors. Implies validity
/// for acyclic nets.
pub fn sufficient_check(net: &UcpNet) -> bool {
    net.is_acyclic() && span_report(net).iter().all(VariableSpans::holds)
}

/// A factor of a GAI decomposition; `values` is indexed mixed-radix over
/// `scope` with the first scope variable most significant.
#[derive(Clone, Debug, PartialEq)]
pub struct GaiFactor {
    pub scope: Vec<VarId>,
    pub values: Vec<f64>,
}

impl GaiFactor {
    pub fn at(&self, vars: &VariableTable, outcome: &[usize]) -> f64 {
        let sizes: Vec<usize> = self.scope.iter().map(|&v| vars.domain_size(v)).collect();
        self.values[mixed_index(self.scope.iter().map(|&v| outcome[v]), &sizes)]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaiDecomposition {
    vars: VariableTable,
    factors: Vec<GaiFactor>,
}

impl GaiDecomposition {
    pub fn new(vars: VariableTable, factors: Vec<GaiFactor>) -> Result<Self> {
        let mut covered = vec![false; vars.len()];
        for (i, f) in factors.iter().enumerate() {
            if f.scope.is_empty() {
                return Err(Error::Model(format!("GAI factor #{i} has an empty scope")));
            }
            for (k, &v) in f.scope.iter().enumerate() {
                if v >= vars.len() || f.scope[..k].contains(&v) {
                    return Err(Error::Model(format!("GAI factor #{i} has a bad scope")));
                }
                covered[v] = true;
            }
            if vars.joint_size(&f.scope) != f.values.len() as u128 {
                return Err(Error::Model(format!(
                    "GAI factor #{i} needs {} entries, got {}",
                    vars.joint_size(&f.scope),
                    f.values.len()
                )));
            }
        }
        if let Some(v) = covered.iter().position(|c| !c) {
            return Err(Error::Model(format!(
                "variable {} appears in no GAI factor",
                vars.name(v)
            )));
        }
        Ok(GaiDecomposition { vars, factors })
    }

    pub fn variables(&self) -> &VariableTable {
        &self.vars
    }

    pub fn factors(&self) -> &[GaiFactor] {
        &self.factors
    }

    pub fn utility(&self, outcome: &[usize]) -> f64 {
        self.factors.iter().map(|f| f.at(&self.vars, outcome)).sum()
    }
}

/// Builds a UCP topology from a GAI decomposition: under `ordering`, the
/// last variable of each factor becomes a child of the factor's other
/// variables. Variables that end no factor get a constant zero factor.
/// The result reproduces the GAI utility but may still fail validation.
pub fn topology_from_gai(g: &GaiDecomposition, ordering: &[VarId]) -> Result<UcpNet> {
    let vars = g.variables();
    let n = vars.len();
    let mut position = vec![usize::MAX; n];
    for (k, &v) in ordering.iter().enumerate() {
        if v >= n || position[v] != usize::MAX {
            return Err(Error::Argument("ordering is not a permutation".into()));
        }
        position[v] = k;
    }
    if ordering.len() != n {
        return Err(Error::Argument("ordering is not a permutation".into()));
    }
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (i, f) in g.factors().iter().enumerate() {
        let last = *f.scope.iter().max_by_key(|&&v| position[v]).unwrap();
        if let Some(first) = owner[last] {
            return Err(Error::DuplicateLast {
                variable: vars.name(last).to_string(),
                first,
                second: i,
            });
        }
        owner[last] = Some(i);
    }
    let mut factors = Vec::with_capacity(n);
    let mut scratch = vec![0; n];
    for v in 0..n {
        let Some(i) = owner[v] else {
            factors.push(Factor::constant(vars, v, 0.0));
            continue;
        };
        let gf = &g.factors()[i];
        let mut parents: Vec<VarId> = gf.scope.iter().copied().filter(|&p| p != v).collect();
        parents.sort_unstable();
        let f = Factor::from_fn(vars, v, parents.clone(), |pv, x| {
            for (&p, &val) in parents.iter().zip(pv) {
                scratch[p] = val;
            }
            scratch[v] = x;
            gf.at(vars, &scratch)
        })?;
        factors.push(f);
    }
    UcpNet::new(vars.clone(), factors)
}

/// Utility of every outcome of a variable table, canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct UtilityTable {
    sizes: Vec<usize>,
    values: Vec<f64>,
}

impl UtilityTable {
    pub fn new(sizes: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let expected: usize = sizes.iter().product();
        if expected != values.len() {
            return Err(Error::Argument(format!(
                "utility table needs {expected} entries, got {}",
                values.len()
            )));
        }
        Ok(UtilityTable { sizes, values })
    }

    pub fn from_fn(vars: &VariableTable, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let sizes = vars.sizes();
        let mut digits = vec![0; sizes.len()];
        let mut values = Vec::new();
        loop {
            values.push(f(&digits));
            if !advance(&mut digits, &sizes) {
                break;
            }
        }
        UtilityTable { sizes, values }
    }

    pub fn get(&self, outcome: &[usize]) -> f64 {
        self.values[mixed_index(outcome.iter().copied(), &self.sizes)]
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }
}

fn weakly_prefers(table: &UtilityTable, a: &[usize], b: &[usize]) -> bool {
    table.get(a) + EPS_UTIL >= table.get(b)
}

/// Brute-force CPI(X, Y, Z): for every `z`, the weak preference between
/// any two `x` assignments is the same under every `y`.
pub fn cpi_oracle(table: &UtilityTable, x: &[VarId], y: &[VarId], z: &[VarId]) -> Result<bool> {
    let n = table.len();
    let mut seen = vec![false; n];
    for &v in x.iter().chain(y).chain(z) {
        if v >= n || seen[v] {
            return Err(Error::Argument("X, Y, Z must partition the variables".into()));
        }
        seen[v] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Argument("X, Y, Z must partition the variables".into()));
    }
    let dims = |vs: &[VarId]| -> Vec<usize> { vs.iter().map(|&v| table.sizes[v]).collect() };
    let (xs, ys, zs) = (dims(x), dims(y), dims(z));
    let x_count: usize = xs.iter().product();
    let set = |out: &mut Vec<usize>, vs: &[VarId], digits: &[usize]| {
        for (&v, &d) in vs.iter().zip(digits) {
            out[v] = d;
        }
    };
    let decode = |mut idx: usize| -> Vec<usize> {
        let mut d = vec![0; xs.len()];
        for i in (0..xs.len()).rev() {
            d[i] = idx % xs[i];
            idx /= xs[i];
        }
        d
    };
    let mut a = vec![0; n];
    let mut b = vec![0; n];
    let mut zd = vec![0; z.len()];
    loop {
        set(&mut a, z, &zd);
        set(&mut b, z, &zd);
        for i in 0..x_count {
            for j in 0..x_count {
                if i == j {
                    continue;
                }
                set(&mut a, x, &decode(i));
                set(&mut b, x, &decode(j));
                let mut yd = vec![0; y.len()];
                let mut first = None;
                loop {
                    set(&mut a, y, &yd);
                    set(&mut b, y, &yd);
                    let p = weakly_prefers(table, &a, &b);
                    match first {
                        None => first = Some(p),
                        Some(f) if f != p => return Ok(false),
                        _ => {}
                    }
                    if !advance(&mut yd, &ys) {
                        break;
                    }
                }
            }
        }
        if !advance(&mut zd, &zs) {
            break;
        }
    }
    Ok(true)
}

/// Brute-force CP condition for `x` in `net` against an arbitrary utility
/// table: whenever the factor of `x` ranks `x1` at least as high as `x2`
/// in a parent context, every outcome in that context weakly prefers `x1`.
pub fn cp_condition_oracle(table: &UtilityTable, net: &UcpNet, x: VarId) -> bool {
    let sizes = net.variables().sizes();
    let fx = net.factor(x);
    let mut o = vec![0; sizes.len()];
    let mut a = o.clone();
    let mut b = o.clone();
    loop {
        if o[x] == 0 {
            let row = fx.row_of(&o);
            for x1 in 0..sizes[x] {
                for x2 in 0..sizes[x] {
                    if x1 == x2 || fx.value(row, x1) + EPS_UTIL < fx.value(row, x2) {
                        continue;
                    }
                    a.copy_from_slice(&o);
                    b.copy_from_slice(&o);
                    a[x] = x1;
                    b[x] = x2;
                    if !weakly_prefers(table, &a, &b) {
                        return false;
                    }
                }
            }
        }
        if !advance(&mut o, &sizes) {
            break;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab_net(u: [f64; 4], a_parent_of_b: bool) -> UcpNet {
        // u(ab), u(a bbar), u(abar b), u(abar bbar)
        let vars =
            VariableTable::from_pairs([("A", vec!["a", "abar"]), ("B", vec!["b", "bbar"])])
                .unwrap();
        let (fa, fb) = if a_parent_of_b {
            (
                Factor::constant(&vars, 0, 0.0),
                Factor::new(&vars, 1, vec![0], u.to_vec()).unwrap(),
            )
        } else {
            (
                Factor::new(&vars, 0, vec![1], vec![u[0], u[2], u[1], u[3]]).unwrap(),
                Factor::constant(&vars, 1, 0.0),
            )
        };
        UcpNet::new(vars, vec![fa, fb]).unwrap()
    }

    #[test]
    fn leaf_dominates_vacuously() {
        let net = ab_net([9.0, 1.0, 2.0, 8.0], true);
        let c = dominates_children(&net, 1).unwrap();
        assert!(c.dominates);
        assert_eq!(c.violations, 0);
    }

    #[test]
    fn counterexample_fails_both_orientations() {
        for orient in [true, false] {
            let net = ab_net([9.0, 1.0, 2.0, 8.0], orient);
            let report = is_valid_ucp(&net).unwrap();
            assert!(!report.valid());
            let w = report.witnesses().next().expect("witness");
            assert!(w.lhs + EPS_UTIL < w.rhs);
        }
    }

    #[test]
    fn cycle_is_reported() {
        let vars = VariableTable::binary(2);
        let f0 = Factor::new(&vars, 0, vec![1], vec![0.0; 4]).unwrap();
        let f1 = Factor::new(&vars, 1, vec![0], vec![0.0; 4]).unwrap();
        let net = UcpNet::new(vars, vec![f0, f1]).unwrap();
        assert!(!check_acyclic(&net));
        let report = is_valid_ucp(&net).unwrap();
        assert!(matches!(report.failures[0], ValidationFailure::Cycle(ref c) if c.len() == 3));
        assert!(!sufficient_check(&net));
    }

    #[test]
    fn single_variable_is_valid() {
        let vars = VariableTable::binary(1);
        let net = UcpNet::new(vars.clone(), vec![Factor::new(&vars, 0, vec![], vec![1.0, 3.0]).unwrap()])
            .unwrap();
        assert!(is_valid_ucp(&net).unwrap().valid());
        assert!(sufficient_check(&net));
    }

    #[test]
    fn ties_are_checked_both_ways() {
        // f_A constant, child prefers different B depending on A: invalid.
        let net = ab_net([1.0, 0.0, 0.0, 1.0], true);
        let c = dominates_children(&net, 0).unwrap();
        assert!(!c.dominates);
        // child indifferent to A: valid despite the tie.
        let net = ab_net([1.0, 0.0, 1.0, 0.0], true);
        assert!(dominates_children(&net, 0).unwrap().dominates);
    }

    #[test]
    fn witness_cap_keeps_exact_count() {
        // root with 12 values and a child that always prefers the root's
        // worse values.
        let vars = VariableTable::from_pairs([
            ("R", (0..12).map(|i| format!("r{i}")).collect()),
            ("C", (0..12).map(|i| format!("c{i}")).collect()),
        ])
        .unwrap();
        let fr = Factor::from_fn(&vars, 0, vec![], |_, x| x as f64).unwrap();
        let fc = Factor::from_fn(&vars, 1, vec![0], |p, _| -10.0 * p[0] as f64).unwrap();
        let net = UcpNet::new(vars, vec![fr, fc]).unwrap();
        let c = dominates_children(&net, 0).unwrap();
        assert_eq!(c.violations, 66 * 12);
        assert_eq!(c.witnesses.len(), WITNESS_CAP);
    }

    #[test]
    fn size_limit_is_enforced() {
        let vars = VariableTable::binary(24);
        let mut factors: Vec<Factor> = (0..24).map(|v| Factor::constant(&vars, v, 0.0)).collect();
        factors[0] = Factor::new(&vars, 0, (1..22).collect(), vec![0.0; 1 << 22]).unwrap();
        factors[23] = Factor::new(&vars, 23, vec![0], vec![0.0; 4]).unwrap();
        let net = UcpNet::new(vars, factors).unwrap();
        assert!(matches!(
            dominates_children(&net, 0),
            Err(Error::SizeLimit { .. })
        ));
    }

    #[test]
    fn gai_collision_and_single_scope() {
        let vars = VariableTable::binary(2);
        let g = GaiDecomposition::new(
            vars.clone(),
            vec![
                GaiFactor { scope: vec![0, 1], values: vec![0.0; 4] },
                GaiFactor { scope: vec![1], values: vec![0.0; 2] },
            ],
        )
        .unwrap();
        assert!(matches!(
            topology_from_gai(&g, &[0, 1]),
            Err(Error::DuplicateLast { first: 0, second: 1, .. })
        ));
        assert!(matches!(topology_from_gai(&g, &[0]), Err(Error::Argument(_))));

        let one = VariableTable::binary(1);
        let g = GaiDecomposition::new(
            one,
            vec![GaiFactor { scope: vec![0], values: vec![1.0, 2.0] }],
        )
        .unwrap();
        let net = topology_from_gai(&g, &[0]).unwrap();
        assert!(net.parents(0).is_empty());
        assert_eq!(net.utility(&[1]), 2.0);
    }

    #[test]
    fn gai_must_cover_all_variables() {
        let vars = VariableTable::binary(2);
        assert!(GaiDecomposition::new(
            vars,
            vec![GaiFactor { scope: vec![0], values: vec![0.0; 2] }]
        )
        .is_err());
    }

    #[test]
    fn cpi_oracle_basics() {
        let vars = VariableTable::binary(2);
        let table = UtilityTable::from_fn(&vars, |o| [[9.0, 1.0], [2.0, 8.0]][o[0]][o[1]]);
        assert!(cpi_oracle(&table, &[0], &[], &[1]).unwrap());
        assert!(!cpi_oracle(&table, &[0], &[1], &[]).unwrap());
        assert!(!cpi_oracle(&table, &[1], &[0], &[]).unwrap());
        assert!(cpi_oracle(&table, &[0], &[1], &[0]).is_err());
        assert!(cpi_oracle(&table, &[0], &[], &[]).is_err());
    }

    #[test]
    fn span_report_on_chain() {
        let net = ab_net([3.0, 1.0, 2.0, 1.5], true);
        let spans = span_report(&net);
        assert_eq!(spans[1].minspan, 0.5);
        assert_eq!(spans[1].maxspan, 2.0);
        assert_eq!(spans[0].children_maxspan, 2.0);
        assert!(!sufficient_check(&net));
    }

    #[test]
    fn child_swing_not_within_row_span_bounds_the_parent() {
        let vars =
            VariableTable::from_pairs([("A", vec!["a", "abar"]), ("B", vec!["b", "bbar"])])
                .unwrap();
        let fa = Factor::new(&vars, 0, vec![], vec![1.0, 0.0]).unwrap();
        let fb = Factor::new(&vars, 1, vec![0], vec![0.0, 0.1, 2.0, 2.1]).unwrap();
        let net = UcpNet::new(vars, vec![fa, fb]).unwrap();
        let spans = span_report(&net);
        // Minspan(A) covers Maxspan(B), yet B jumps by 2 when A changes
        assert!(spans[0].minspan >= spans[0].children_maxspan);
        assert!((spans[0].children_swing - 2.0).abs() < 1e-12);
        assert!(!is_valid_ucp(&net).unwrap().valid());
        assert!(!sufficient_check(&net));
    }
}
