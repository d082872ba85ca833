//! Variables, assignments, factors and the two net representations.
//!
//! Values are addressed by index into a variable's declared domain; a
//! complete outcome is a `&[usize]` indexed by [`VarId`]. Names and labels
//! only appear at the edges (parsing, formatting, documents).

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Absolute tolerance for utility equality.
pub const EPS_UTIL: f64 = 1e-9;

pub type VarId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub values: Vec<String>,
}

fn valid_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| !c.is_whitespace() && !matches!(c, '=' | ';' | '|' | '[' | ']' | ',' | '"'))
}

/// Ordered variables with ordered finite domains. Declaration order is the
/// canonical iteration order for outcomes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableTable {
    vars: Vec<Variable>,
    by_name: HashMap<String, VarId>,
}

impl VariableTable {
    pub fn new(vars: Vec<Variable>) -> Result<Self> {
        let mut by_name = HashMap::with_capacity(vars.len());
        for (i, v) in vars.iter().enumerate() {
            if !valid_identifier(&v.name) {
                return Err(Error::Model(format!("invalid variable name {:?}", v.name)));
            }
            if by_name.insert(v.name.clone(), i).is_some() {
                return Err(Error::Model(format!("duplicate variable {:?}", v.name)));
            }
            if v.values.len() < 2 {
                return Err(Error::Model(format!(
                    "variable {} needs at least two values",
                    v.name
                )));
            }
            for (k, label) in v.values.iter().enumerate() {
                if !valid_identifier(label) {
                    return Err(Error::Model(format!(
                        "invalid value label {:?} for {}",
                        label, v.name
                    )));
                }
                if v.values[..k].contains(label) {
                    return Err(Error::Model(format!(
                        "duplicate value {:?} for {}",
                        label, v.name
                    )));
                }
            }
        }
        Ok(VariableTable { vars, by_name })
    }

    /// Convenience constructor from `(name, [labels])` pairs.
    pub fn from_pairs<N, L>(pairs: impl IntoIterator<Item = (N, Vec<L>)>) -> Result<Self>
    where
        N: Into<String>,
        L: Into<String>,
    {
        Self::new(
            pairs
                .into_iter()
                .map(|(n, ls)| Variable {
                    name: n.into(),
                    values: ls.into_iter().map(Into::into).collect(),
                })
                .collect(),
        )
    }

    /// `n` binary variables named `X0..` with values `t`/`f`.
    pub fn binary(n: usize) -> Self {
        Self::from_pairs((0..n).map(|i| (format!("X{i}"), vec!["t", "f"]))).expect("valid names")
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Variable> {
        self.vars.iter()
    }

    pub fn variable(&self, v: VarId) -> &Variable {
        &self.vars[v]
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.vars[v].name
    }

    pub fn label(&self, v: VarId, x: usize) -> &str {
        &self.vars[v].values[x]
    }

    pub fn domain_size(&self, v: VarId) -> usize {
        self.vars[v].values.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.vars.iter().map(|v| v.values.len()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn value_index(&self, v: VarId, label: &str) -> Option<usize> {
        self.vars[v].values.iter().position(|l| l == label)
    }

    pub fn lookup(&self, name: &str) -> Result<VarId> {
        self.index_of(name)
            .ok_or_else(|| Error::InvalidAssignment(format!("unknown variable {name:?}")))
    }

    pub fn lookup_value(&self, v: VarId, label: &str) -> Result<usize> {
        self.value_index(v, label).ok_or_else(|| {
            Error::InvalidAssignment(format!("{label:?} is not a value of {}", self.name(v)))
        })
    }

    /// Product of the domain sizes of `vars`, saturating instead of overflowing.
    pub fn joint_size(&self, vars: &[VarId]) -> u128 {
        vars.iter()
            .fold(1u128, |acc, &v| acc.saturating_mul(self.domain_size(v) as u128))
    }

    /// Parses `"A=a;B=b"`. Whitespace around pairs is ignored; the empty
    /// string is the empty assignment.
    pub fn parse_assignment(&self, text: &str) -> Result<Assignment> {
        let mut a = Assignment::empty(self.len());
        for part in text.split([';', ',']) {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (name, label) = part.split_once('=').ok_or_else(|| {
                Error::InvalidAssignment(format!("expected Var=value, got {part:?}"))
            })?;
            let v = self.lookup(name.trim())?;
            let x = self.lookup_value(v, label.trim())?;
            if a.get(v).is_some() {
                return Err(Error::InvalidAssignment(format!(
                    "variable {} bound twice",
                    self.name(v)
                )));
            }
            a.set(v, x);
        }
        Ok(a)
    }

    /// Canonical key: `Var=value` pairs sorted by variable name, joined by `;`.
    pub fn format_bindings(&self, bindings: impl IntoIterator<Item = (VarId, usize)>) -> String {
        let mut pairs: Vec<(&str, &str)> = bindings
            .into_iter()
            .map(|(v, x)| (self.name(v), self.label(v, x)))
            .collect();
        pairs.sort();
        pairs
            .iter()
            .map(|(n, l)| format!("{n}={l}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn format_assignment(&self, a: &Assignment) -> String {
        self.format_bindings(a.bound())
    }

    pub fn format_outcome(&self, outcome: &[usize]) -> String {
        self.format_bindings(outcome.iter().copied().enumerate())
    }
}

/// Advances a little-endian-last odometer over `sizes`; the last digit
/// moves fastest. Returns `false` after the final combination.
pub fn advance(digits: &mut [usize], sizes: &[usize]) -> bool {
    for i in (0..digits.len()).rev() {
        digits[i] += 1;
        if digits[i] < sizes[i] {
            return true;
        }
        digits[i] = 0;
    }
    false
}

/// Mixed-radix index with the first digit most significant.
pub(crate) fn mixed_index(digits: impl IntoIterator<Item = usize>, sizes: &[usize]) -> usize {
    digits
        .into_iter()
        .zip(sizes)
        .fold(0, |acc, (d, &s)| acc * s + d)
}

/// A partial binding of variables to value indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment {
    slots: Vec<Option<usize>>,
}

impl Assignment {
    pub fn empty(n: usize) -> Self {
        Assignment {
            slots: vec![None; n],
        }
    }

    pub fn complete(values: Vec<usize>) -> Self {
        Assignment {
            slots: values.into_iter().map(Some).collect(),
        }
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (VarId, usize)>) -> Self {
        let mut a = Self::empty(n);
        for (v, x) in pairs {
            a.set(v, x);
        }
        a
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.iter().all(Option::is_none)
    }

    pub fn get(&self, v: VarId) -> Option<usize> {
        self.slots.get(v).copied().flatten()
    }

    pub fn set(&mut self, v: VarId, x: usize) {
        self.slots[v] = Some(x);
    }

    pub fn unset(&mut self, v: VarId) {
        self.slots[v] = None;
    }

    pub fn is_complete(&self) -> bool {
        self.slots.iter().all(Option::is_some)
    }

    pub fn bound(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(v, x)| x.map(|x| (v, x)))
    }

    pub fn bound_count(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    /// The value vector when every variable is bound.
    pub fn values(&self) -> Option<Vec<usize>> {
        self.slots.iter().copied().collect()
    }

    /// True when `self` agrees with every binding of `other`.
    pub fn extends(&self, other: &Assignment) -> bool {
        other.bound().all(|(v, x)| self.get(v) == Some(x))
    }

    /// Checks the assignment against a table: right width, legal values.
    pub fn check(&self, vars: &VariableTable) -> Result<()> {
        if self.slots.len() != vars.len() {
            return Err(Error::InvalidAssignment(format!(
                "assignment has {} slots, table has {} variables",
                self.slots.len(),
                vars.len()
            )));
        }
        for (v, x) in self.bound() {
            if x >= vars.domain_size(v) {
                return Err(Error::InvalidAssignment(format!(
                    "value index {x} out of range for {}",
                    vars.name(v)
                )));
            }
        }
        Ok(())
    }
}

/// A utility (or probability) table over one child variable and its
/// ordered parents. Rows are parent assignments in mixed-radix order with
/// the first parent most significant; columns are child values.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    child: VarId,
    parents: Vec<VarId>,
    parent_sizes: Vec<usize>,
    child_size: usize,
    values: Vec<f64>,
}

impl Factor {
    pub fn new(
        vars: &VariableTable,
        child: VarId,
        parents: Vec<VarId>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if child >= vars.len() {
            return Err(Error::Model(format!("factor child {child} out of range")));
        }
        for (i, &p) in parents.iter().enumerate() {
            if p >= vars.len() {
                return Err(Error::Model(format!("parent {p} out of range")));
            }
            if p == child {
                return Err(Error::Model(format!(
                    "{} cannot be its own parent",
                    vars.name(child)
                )));
            }
            if parents[..i].contains(&p) {
                return Err(Error::Model(format!(
                    "duplicate parent {} of {}",
                    vars.name(p),
                    vars.name(child)
                )));
            }
        }
        let parent_sizes: Vec<usize> = parents.iter().map(|&p| vars.domain_size(p)).collect();
        let child_size = vars.domain_size(child);
        let rows = vars.joint_size(&parents);
        let expected = rows.saturating_mul(child_size as u128);
        if expected != values.len() as u128 {
            return Err(Error::Model(format!(
                "factor for {} needs {} entries, got {}",
                vars.name(child),
                expected,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|x| !x.is_finite()) {
            return Err(Error::Model(format!(
                "non-finite entry {bad} in factor for {}",
                vars.name(child)
            )));
        }
        Ok(Factor {
            child,
            parents,
            parent_sizes,
            child_size,
            values,
        })
    }

    /// Builds a factor by calling `f(parent_values, child_value)` for
    /// every entry.
    pub fn from_fn(
        vars: &VariableTable,
        child: VarId,
        parents: Vec<VarId>,
        mut f: impl FnMut(&[usize], usize) -> f64,
    ) -> Result<Self> {
        let sizes: Vec<usize> = parents.iter().map(|&p| vars.domain_size(p)).collect();
        let child_size = vars.domain_size(child);
        let mut values = Vec::new();
        let mut digits = vec![0; sizes.len()];
        loop {
            for x in 0..child_size {
                values.push(f(&digits, x));
            }
            if !advance(&mut digits, &sizes) {
                break;
            }
        }
        Self::new(vars, child, parents, values)
    }

    pub fn constant(vars: &VariableTable, child: VarId, c: f64) -> Self {
        Factor {
            child,
            parents: Vec::new(),
            parent_sizes: Vec::new(),
            child_size: vars.domain_size(child),
            values: vec![c; vars.domain_size(child)],
        }
    }

    pub fn child(&self) -> VarId {
        self.child
    }

    pub fn parents(&self) -> &[VarId] {
        &self.parents
    }

    /// Parents followed by the child.
    pub fn scope(&self) -> Vec<VarId> {
        let mut s = self.parents.clone();
        s.push(self.child);
        s
    }

    pub fn child_size(&self) -> usize {
        self.child_size
    }

    pub fn num_rows(&self) -> usize {
        self.values.len() / self.child_size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.child_size..(row + 1) * self.child_size]
    }

    pub fn value(&self, row: usize, x: usize) -> f64 {
        self.values[row * self.child_size + x]
    }

    pub fn row_index(&self, parent_values: &[usize]) -> usize {
        mixed_index(parent_values.iter().copied(), &self.parent_sizes)
    }

    /// Row selected by a full outcome vector.
    pub fn row_of(&self, outcome: &[usize]) -> usize {
        mixed_index(self.parents.iter().map(|&p| outcome[p]), &self.parent_sizes)
    }

    /// Factor value at a full outcome vector.
    pub fn at(&self, outcome: &[usize]) -> f64 {
        self.value(self.row_of(outcome), outcome[self.child])
    }

    /// Parent values of a row, in parent order.
    pub fn row_context(&self, mut row: usize) -> Vec<usize> {
        let mut ctx = vec![0; self.parents.len()];
        for i in (0..ctx.len()).rev() {
            ctx[i] = row % self.parent_sizes[i];
            row /= self.parent_sizes[i];
        }
        ctx
    }

    pub fn row_bindings(&self, row: usize) -> Vec<(VarId, usize)> {
        self.parents
            .iter()
            .copied()
            .zip(self.row_context(row))
            .collect()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max - min` over the whole table.
    pub fn span(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn is_constant(&self) -> bool {
        let first = self.values[0];
        self.values.iter().all(|&x| x == first)
    }

    pub(crate) fn map_values(&self, f: impl Fn(usize, usize, f64) -> f64) -> Factor {
        let mut out = self.clone();
        for row in 0..self.num_rows() {
            for x in 0..self.child_size {
                out.values[row * self.child_size + x] = f(row, x, self.value(row, x));
            }
        }
        out
    }
}

fn children_of(n: usize, parents: impl Fn(VarId) -> Vec<VarId>) -> Vec<Vec<VarId>> {
    let mut children = vec![Vec::new(); n];
    for v in 0..n {
        for p in parents(v) {
            children[p].push(v);
        }
    }
    children
}

/// Kahn's algorithm, smallest ready id first. `None` when cyclic.
pub(crate) fn topological_order(parents: &[Vec<VarId>]) -> Option<Vec<VarId>> {
    let n = parents.len();
    let mut indeg: Vec<usize> = parents.iter().map(Vec::len).collect();
    let children = children_of(n, |v| parents[v].clone());
    let mut ready: std::collections::BTreeSet<VarId> =
        (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop_first() {
        order.push(v);
        for &c in &children[v] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.insert(c);
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// A quantified DAG: one factor per variable over the variable and its
/// parents. Acyclicity and the CP condition are checked by
/// [`crate::validation`], not enforced here.
#[derive(Clone, Debug, PartialEq)]
pub struct UcpNet {
    vars: VariableTable,
    factors: Vec<Factor>,
    children: Vec<Vec<VarId>>,
}

impl UcpNet {
    pub fn new(vars: VariableTable, mut factors: Vec<Factor>) -> Result<Self> {
        if factors.len() != vars.len() {
            return Err(Error::Model(format!(
                "{} factors for {} variables",
                factors.len(),
                vars.len()
            )));
        }
        factors.sort_by_key(Factor::child);
        for (i, f) in factors.iter().enumerate() {
            if f.child != i {
                return Err(Error::Model(format!(
                    "variable {} has no factor or more than one",
                    vars.name(i.min(vars.len() - 1))
                )));
            }
            if f.parent_sizes.iter().zip(&f.parents).any(|(&s, &p)| s != vars.domain_size(p))
                || f.child_size != vars.domain_size(i)
            {
                return Err(Error::Model(format!(
                    "factor for {} built against another table",
                    vars.name(i)
                )));
            }
        }
        let children = children_of(vars.len(), |v| factors[v].parents.clone());
        Ok(UcpNet {
            vars,
            factors,
            children,
        })
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

    pub fn factor(&self, v: VarId) -> &Factor {
        &self.factors[v]
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn parents(&self, v: VarId) -> &[VarId] {
        &self.factors[v].parents
    }

    pub fn children(&self, v: VarId) -> &[VarId] {
        &self.children[v]
    }

    pub fn parent_lists(&self) -> Vec<Vec<VarId>> {
        self.factors.iter().map(|f| f.parents.clone()).collect()
    }

    pub fn topological_order(&self) -> Option<Vec<VarId>> {
        topological_order(&self.parent_lists())
    }

    pub fn is_acyclic(&self) -> bool {
        self.topological_order().is_some()
    }

    /// Sum of factor values at a full outcome vector. No checks.
    pub fn utility(&self, outcome: &[usize]) -> f64 {
        self.factors.iter().map(|f| f.at(outcome)).sum()
    }

    /// Validates `o` as a complete outcome and returns its value vector.
    pub fn outcome_values(&self, o: &Assignment) -> Result<Vec<usize>> {
        o.check(&self.vars)
            .map_err(|e| Error::InvalidOutcome(e.to_string()))?;
        o.values().ok_or_else(|| {
            let missing = (0..self.len()).find(|&v| o.get(v).is_none()).unwrap_or(0);
            Error::InvalidOutcome(format!("{} is unbound", self.vars.name(missing)))
        })
    }

    pub fn evaluate_utility(&self, o: &Assignment) -> Result<f64> {
        Ok(self.utility(&self.outcome_values(o)?))
    }

    /// Dominance query; utilities within [`EPS_UTIL`] compare equal.
    pub fn compare_outcomes(&self, o1: &Assignment, o2: &Assignment) -> Result<Ordering> {
        let u1 = self.evaluate_utility(o1)?;
        let u2 = self.evaluate_utility(o2)?;
        Ok(compare_utilities(u1, u2))
    }

    /// Utility of every outcome, in canonical order (first variable most
    /// significant).
    pub fn utility_table(&self) -> Vec<f64> {
        let sizes = self.vars.sizes();
        let mut digits = vec![0; sizes.len()];
        let mut out = Vec::new();
        loop {
            out.push(self.utility(&digits));
            if !advance(&mut digits, &sizes) {
                break;
            }
        }
        out
    }

    /// Splits every factor row into a [0,1] local value function, a
    /// multiplicative weight (row span) and an additive weight (row min).
    /// Constant rows become `v = 0`, `pi = 0`, `sigma = value`.
    pub fn normalize(&self) -> (NormalizedUcpNet, WeightVector) {
        let mut value_functions = Vec::with_capacity(self.len());
        let mut weights = Vec::new();
        for f in &self.factors {
            let mut spans = Vec::with_capacity(f.num_rows());
            for row in 0..f.num_rows() {
                let r = f.row(row);
                let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                spans.push((lo, hi));
                weights.push(hi - lo);
                weights.push(lo);
            }
            value_functions.push(f.map_values(|row, _, x| {
                let (lo, hi) = spans[row];
                if hi > lo {
                    (x - lo) / (hi - lo)
                } else {
                    0.0
                }
            }));
        }
        let nnet = NormalizedUcpNet::new(self.vars.clone(), value_functions)
            .expect("normalized rows are well-formed by construction");
        (nnet, WeightVector(weights))
    }
}

pub fn compare_utilities(u1: f64, u2: f64) -> Ordering {
    if (u1 - u2).abs() <= EPS_UTIL {
        Ordering::Equal
    } else if u1 > u2 {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WeightKind {
    /// Multiplicative tradeoff weight.
    Pi,
    /// Additive tradeoff weight.
    Sigma,
}

/// A tradeoff weight for one `(variable, parent context)` row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeightId {
    pub kind: WeightKind,
    pub var: VarId,
    pub row: usize,
}

/// Dense tradeoff-weight instantiation indexed by
/// [`NormalizedUcpNet::weight_index`].
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn get(&self, idx: usize) -> f64 {
        self.0[idx]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Builds a vector from named weights; every weight of `nnet` must be
    /// present.
    pub fn from_named(nnet: &NormalizedUcpNet, named: &HashMap<String, f64>) -> Result<Self> {
        let mut out = vec![f64::NAN; nnet.weight_count()];
        for (name, &value) in named {
            out[nnet.parse_weight(name)?] = value;
        }
        if let Some(i) = out.iter().position(|x| x.is_nan()) {
            return Err(Error::IncompleteWeights(nnet.weight_name(i)));
        }
        Ok(WeightVector(out))
    }
}

/// Per-row local value functions in [0,1] with symbolic tradeoff weights.
/// Utility of an outcome is `sum_X pi[X|u] * v[X|u](x) + sigma[X|u]`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedUcpNet {
    vars: VariableTable,
    value_functions: Vec<Factor>,
    children: Vec<Vec<VarId>>,
    row_offsets: Vec<usize>,
}

impl NormalizedUcpNet {
    pub fn new(vars: VariableTable, mut value_functions: Vec<Factor>) -> Result<Self> {
        if value_functions.len() != vars.len() {
            return Err(Error::Model(format!(
                "{} value functions for {} variables",
                value_functions.len(),
                vars.len()
            )));
        }
        value_functions.sort_by_key(Factor::child);
        let mut row_offsets = Vec::with_capacity(vars.len());
        let mut offset = 0;
        for (i, f) in value_functions.iter().enumerate() {
            if f.child != i {
                return Err(Error::Model(format!(
                    "variable {} has no value function or more than one",
                    vars.name(i)
                )));
            }
            for row in 0..f.num_rows() {
                let r = f.row(row);
                let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let constant_zero = lo == 0.0 && hi == 0.0;
                if !(constant_zero || (lo == 0.0 && hi == 1.0)) {
                    return Err(Error::Model(format!(
                        "value function row {} of {} must span exactly [0, 1]",
                        vars.format_bindings(f.row_bindings(row)),
                        vars.name(i)
                    )));
                }
            }
            row_offsets.push(offset);
            offset += f.num_rows();
        }
        let children = children_of(vars.len(), |v| value_functions[v].parents.clone());
        Ok(NormalizedUcpNet {
            vars,
            value_functions,
            children,
            row_offsets,
        })
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

    pub fn value_function(&self, v: VarId) -> &Factor {
        &self.value_functions[v]
    }

    pub fn value_functions(&self) -> &[Factor] {
        &self.value_functions
    }

    pub fn parents(&self, v: VarId) -> &[VarId] {
        &self.value_functions[v].parents
    }

    pub fn children(&self, v: VarId) -> &[VarId] {
        &self.children[v]
    }

    pub fn topological_order(&self) -> Option<Vec<VarId>> {
        topological_order(
            &self
                .value_functions
                .iter()
                .map(|f| f.parents.clone())
                .collect::<Vec<_>>(),
        )
    }

    pub fn weight_count(&self) -> usize {
        2 * self
            .value_functions
            .iter()
            .map(Factor::num_rows)
            .sum::<usize>()
    }

    pub fn weight_index(&self, id: WeightId) -> usize {
        let base = 2 * (self.row_offsets[id.var] + id.row);
        match id.kind {
            WeightKind::Pi => base,
            WeightKind::Sigma => base + 1,
        }
    }

    pub fn pi_index(&self, var: VarId, row: usize) -> usize {
        2 * (self.row_offsets[var] + row)
    }

    pub fn sigma_index(&self, var: VarId, row: usize) -> usize {
        2 * (self.row_offsets[var] + row) + 1
    }

    pub fn weight_id(&self, idx: usize) -> WeightId {
        let row_global = idx / 2;
        let var = self.row_offsets.partition_point(|&o| o <= row_global) - 1;
        WeightId {
            kind: if idx.is_multiple_of(2) {
                WeightKind::Pi
            } else {
                WeightKind::Sigma
            },
            var,
            row: row_global - self.row_offsets[var],
        }
    }

    /// Row context of a weight as a canonical key (empty for roots).
    pub fn weight_context(&self, id: WeightId) -> String {
        self.vars
            .format_bindings(self.value_functions[id.var].row_bindings(id.row))
    }

    /// `pi[C|A=a;B=b]`, `sigma[A]`.
    pub fn weight_name(&self, idx: usize) -> String {
        let id = self.weight_id(idx);
        let kind = match id.kind {
            WeightKind::Pi => "pi",
            WeightKind::Sigma => "sigma",
        };
        let ctx = self.weight_context(id);
        if ctx.is_empty() {
            format!("{kind}[{}]", self.vars.name(id.var))
        } else {
            format!("{kind}[{}|{ctx}]", self.vars.name(id.var))
        }
    }

    pub fn parse_weight(&self, name: &str) -> Result<usize> {
        let bad = || Error::semantic(name, "not a weight identifier of this net");
        let (kind, rest) = if let Some(r) = name.strip_prefix("pi[") {
            (WeightKind::Pi, r)
        } else if let Some(r) = name.strip_prefix("sigma[") {
            (WeightKind::Sigma, r)
        } else {
            return Err(bad());
        };
        let body = rest.strip_suffix(']').ok_or_else(bad)?;
        let (var_name, ctx) = body.split_once('|').unwrap_or((body, ""));
        let var = self.vars.index_of(var_name).ok_or_else(bad)?;
        let f = &self.value_functions[var];
        let a = self.vars.parse_assignment(ctx).map_err(|_| bad())?;
        if a.bound_count() != f.parents.len() {
            return Err(bad());
        }
        let mut ctx_values = Vec::with_capacity(f.parents.len());
        for &p in &f.parents {
            ctx_values.push(a.get(p).ok_or_else(bad)?);
        }
        let row = f.row_index(&ctx_values);
        Ok(self.weight_index(WeightId { kind, var, row }))
    }

    /// Coefficients of the utility of `outcome` as a linear form in the
    /// weights: `(pi index, v(x))` and `(sigma index, 1)` per variable.
    pub fn utility_terms(&self, outcome: &[usize]) -> Vec<(usize, f64)> {
        let mut terms = Vec::with_capacity(2 * self.len());
        for (v, f) in self.value_functions.iter().enumerate() {
            let row = f.row_of(outcome);
            terms.push((self.pi_index(v, row), f.value(row, outcome[v])));
            terms.push((self.sigma_index(v, row), 1.0));
        }
        terms
    }

    pub fn utility(&self, outcome: &[usize], w: &WeightVector) -> f64 {
        self.utility_terms(outcome)
            .into_iter()
            .map(|(i, c)| c * w.get(i))
            .sum()
    }

    /// Factor entries `pi * v + sigma` for every row.
    pub fn instantiate(&self, w: &WeightVector) -> Result<UcpNet> {
        if w.len() != self.weight_count() {
            let missing = w.len().min(self.weight_count().saturating_sub(1));
            return Err(Error::IncompleteWeights(self.weight_name(missing)));
        }
        if let Some(i) = w.0.iter().position(|x| !x.is_finite()) {
            return Err(Error::IncompleteWeights(self.weight_name(i)));
        }
        let factors = self
            .value_functions
            .iter()
            .enumerate()
            .map(|(v, f)| {
                f.map_values(|row, _, x| {
                    w.get(self.pi_index(v, row)) * x + w.get(self.sigma_index(v, row))
                })
            })
            .collect();
        UcpNet::new(self.vars.clone(), factors)
    }
}

impl fmt::Display for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightKind::Pi => "pi",
            WeightKind::Sigma => "sigma",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_chain() -> UcpNet {
        let vars = VariableTable::from_pairs([("A", vec!["a", "abar"]), ("B", vec!["b", "bbar"])])
            .unwrap();
        let fa = Factor::new(&vars, 0, vec![], vec![3.0, 7.0]).unwrap();
        let fb = Factor::new(&vars, 1, vec![0], vec![1.0, 0.0, 5.0, 5.0]).unwrap();
        UcpNet::new(vars, vec![fb, fa]).unwrap()
    }

    #[test]
    fn table_rejects_bad_input() {
        assert!(VariableTable::from_pairs([("A", vec!["a"])]).is_err());
        assert!(VariableTable::from_pairs([("A", vec!["a", "a"])]).is_err());
        assert!(
            VariableTable::from_pairs([("A", vec!["a", "b"]), ("A", vec!["a", "b"])]).is_err()
        );
        assert!(VariableTable::from_pairs([("A=1", vec!["a", "b"])]).is_err());
    }

    #[test]
    fn parse_and_format_assignments() {
        let vars =
            VariableTable::from_pairs([("B", vec!["b", "bbar"]), ("A", vec!["a", "abar"])])
                .unwrap();
        let a = vars.parse_assignment(" B=bbar ; A=a").unwrap();
        assert_eq!(a.get(0), Some(1));
        assert_eq!(a.get(1), Some(0));
        assert_eq!(vars.format_assignment(&a), "A=a;B=bbar");
        assert!(vars.parse_assignment("A=a;A=abar").is_err());
        assert!(vars.parse_assignment("C=c").is_err());
        assert!(vars.parse_assignment("A=zz").is_err());
        assert!(vars.parse_assignment("A").is_err());
        assert_eq!(vars.parse_assignment("").unwrap().bound_count(), 0);
    }

    #[test]
    fn factor_shape_is_checked() {
        let vars = VariableTable::binary(2);
        assert!(Factor::new(&vars, 0, vec![1], vec![0.0; 3]).is_err());
        assert!(Factor::new(&vars, 0, vec![0], vec![0.0; 4]).is_err());
        assert!(Factor::new(&vars, 0, vec![1, 1], vec![0.0; 8]).is_err());
        assert!(Factor::new(&vars, 0, vec![], vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn factor_rows_follow_mixed_radix() {
        let vars = VariableTable::from_pairs([
            ("A", vec!["0", "1"]),
            ("B", vec!["0", "1", "2"]),
            ("C", vec!["0", "1"]),
        ])
        .unwrap();
        let f = Factor::from_fn(&vars, 2, vec![0, 1], |ctx, x| {
            (ctx[0] * 100 + ctx[1] * 10 + x) as f64
        })
        .unwrap();
        assert_eq!(f.num_rows(), 6);
        assert_eq!(f.row_context(4), vec![1, 1]);
        assert_eq!(f.at(&[1, 2, 1]), 121.0);
        assert_eq!(f.row_index(&[1, 2]), 5);
    }

    #[test]
    fn one_factor_per_variable() {
        let vars = VariableTable::binary(2);
        let f0 = Factor::constant(&vars, 0, 0.0);
        assert!(UcpNet::new(vars.clone(), vec![f0.clone()]).is_err());
        assert!(UcpNet::new(vars, vec![f0.clone(), f0]).is_err());
    }

    #[test]
    fn evaluate_and_compare() {
        let net = two_chain();
        let o = net.variables().parse_assignment("A=abar;B=b").unwrap();
        assert_eq!(net.evaluate_utility(&o).unwrap(), 12.0);
        let partial = net.variables().parse_assignment("A=a").unwrap();
        assert!(matches!(
            net.evaluate_utility(&partial),
            Err(Error::InvalidOutcome(_))
        ));
        let o2 = net.variables().parse_assignment("A=a;B=b").unwrap();
        assert_eq!(net.compare_outcomes(&o, &o2).unwrap(), Ordering::Greater);
        assert_eq!(net.compare_outcomes(&o2, &o).unwrap(), Ordering::Less);
        assert_eq!(net.compare_outcomes(&o, &o).unwrap(), Ordering::Equal);
    }

    #[test]
    fn normalize_two_point_and_constant_rows() {
        let net = two_chain();
        let (nnet, w) = net.normalize();
        // A row {3, 7}
        assert_eq!(nnet.value_function(0).row(0), &[0.0, 1.0]);
        assert_eq!(w.get(nnet.pi_index(0, 0)), 4.0);
        assert_eq!(w.get(nnet.sigma_index(0, 0)), 3.0);
        // B | abar row {5, 5}
        assert_eq!(nnet.value_function(1).row(1), &[0.0, 0.0]);
        assert_eq!(w.get(nnet.pi_index(1, 1)), 0.0);
        assert_eq!(w.get(nnet.sigma_index(1, 1)), 5.0);
        let back = nnet.instantiate(&w).unwrap();
        assert_eq!(back.utility_table(), net.utility_table());
    }

    #[test]
    fn weight_names_round_trip() {
        let (nnet, _) = two_chain().normalize();
        assert_eq!(nnet.weight_count(), 6);
        assert_eq!(nnet.weight_name(0), "pi[A]");
        assert_eq!(nnet.weight_name(5), "sigma[B|A=abar]");
        for i in 0..nnet.weight_count() {
            assert_eq!(nnet.parse_weight(&nnet.weight_name(i)).unwrap(), i);
        }
        assert!(nnet.parse_weight("pi[B]").is_err());
        assert!(nnet.parse_weight("tau[A]").is_err());
    }

    #[test]
    fn identity_and_zero_weights() {
        let (nnet, _) = two_chain().normalize();
        let n = nnet.weight_count();
        let ident = WeightVector((0..n).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect());
        let net = nnet.instantiate(&ident).unwrap();
        for v in 0..2 {
            assert_eq!(net.factor(v).values(), nnet.value_function(v).values());
        }
        let sig = WeightVector((0..n).map(|i| if i % 2 == 0 { 0.0 } else { i as f64 }).collect());
        let net = nnet.instantiate(&sig).unwrap();
        // utility = sigma[A] + sigma[B|A=x]
        assert_eq!(net.utility(&[0, 1]), 1.0 + 3.0);
        assert_eq!(net.utility(&[1, 0]), 1.0 + 5.0);
    }

    #[test]
    fn incomplete_weights_are_named() {
        let (nnet, _) = two_chain().normalize();
        let err = nnet.instantiate(&WeightVector(vec![1.0; 4])).unwrap_err();
        assert!(matches!(err, Error::IncompleteWeights(ref n) if n == "pi[B|A=abar]"));
        let mut named = HashMap::new();
        named.insert("pi[A]".to_string(), 1.0);
        assert!(matches!(
            WeightVector::from_named(&nnet, &named),
            Err(Error::IncompleteWeights(_))
        ));
    }

    #[test]
    fn normalized_rows_must_span_unit_interval() {
        let vars = VariableTable::binary(1);
        let bad = Factor::new(&vars, 0, vec![], vec![0.0, 0.5]).unwrap();
        assert!(NormalizedUcpNet::new(vars.clone(), vec![bad]).is_err());
        let zero = Factor::new(&vars, 0, vec![], vec![0.0, 0.0]).unwrap();
        assert!(NormalizedUcpNet::new(vars, vec![zero]).is_ok());
    }

    #[test]
    fn topological_order_detects_cycles() {
        assert_eq!(topological_order(&[vec![], vec![0]]), Some(vec![0, 1]));
        assert_eq!(topological_order(&[vec![1], vec![0]]), None);
        assert_eq!(topological_order(&[vec![], vec![]]), Some(vec![0, 1]));
    }
}
