//! JSON documents: nets, scenarios, Bayes nets, GAI decompositions, weight
//! constraints, query costs and queries.
//!
//! Every document carries `"format_version": 1` and unknown fields are
//! rejected. Factor rows are keyed by canonical context keys
//! (`"A=a;B=b"`, variables sorted by name, `""` for roots). Saving is
//! deterministic: maps are sorted and numbers use the shortest decimal
//! form that reads back to the same double.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bayes::{Action, ActionModel, BayesNet, DecisionScenario};
use crate::elicit::{
    Query, QueryCosts, QueryKind, Response, SpaceConfig, WeightBound, DEFAULT_U_MAX,
};
use crate::error::{Error, Result};
use crate::lp::{ConstraintLabel, LinearConstraint, LinearExpr, Sense};
use crate::model::{
    advance, Assignment, Factor, NormalizedUcpNet, UcpNet, VarId, Variable, VariableTable,
};
use crate::validation::{GaiDecomposition, GaiFactor};

pub const FORMAT_VERSION: u32 = 1;

/// Rows of one table: context key to (value label to number).
pub type RowsDoc = BTreeMap<String, BTreeMap<String, f64>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableDoc {
    pub name: String,
    pub values: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetKind {
    Ucp,
    Normalized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetDocument {
    pub format_version: u32,
    pub kind: NetKind,
    pub variables: Vec<VariableDoc>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<BTreeMap<String, RowsDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_functions: Option<BTreeMap<String, RowsDoc>>,
    /// Normalized nets only: `[lower, upper]` per weight name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub weight_bounds: BTreeMap<String, [f64; 2]>,
}

/// A loaded net document.
#[derive(Clone, Debug, PartialEq)]
pub enum NetModel {
    Ucp(UcpNet),
    Normalized {
        nnet: NormalizedUcpNet,
        bounds: BTreeMap<usize, WeightBound>,
    },
}

impl NetModel {
    pub fn variables(&self) -> &VariableTable {
        match self {
            NetModel::Ucp(n) => n.variables(),
            NetModel::Normalized { nnet, .. } => nnet.variables(),
        }
    }

    pub fn into_ucp(self) -> Result<UcpNet> {
        match self {
            NetModel::Ucp(n) => Ok(n),
            NetModel::Normalized { .. } => Err(Error::Argument(
                "expected a net with numeric factors, got a normalized net".into(),
            )),
        }
    }

    /// The normalized form; quantified nets are normalized on the fly.
    pub fn into_normalized(self) -> (NormalizedUcpNet, BTreeMap<usize, WeightBound>) {
        match self {
            NetModel::Ucp(n) => (n.normalize().0, BTreeMap::new()),
            NetModel::Normalized { nnet, bounds } => (nnet, bounds),
        }
    }
}

pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(doc: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(doc)
        .map_err(|e| Error::Argument(format!("cannot serialize: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn check_version(v: u32) -> Result<()> {
    if v != FORMAT_VERSION {
        return Err(Error::semantic(
            "format_version",
            format!("unsupported format version {v}, expected {FORMAT_VERSION}"),
        ));
    }
    Ok(())
}

pub fn variables_from_docs(docs: &[VariableDoc]) -> Result<VariableTable> {
    VariableTable::new(
        docs.iter()
            .map(|d| Variable {
                name: d.name.clone(),
                values: d.values.clone(),
            })
            .collect(),
    )
    .map_err(|e| Error::semantic("variables", e.to_string()))
}

pub fn variables_to_docs(vars: &VariableTable) -> Vec<VariableDoc> {
    vars.iter()
        .map(|v| VariableDoc {
            name: v.name.clone(),
            values: v.values.clone(),
        })
        .collect()
}

/// Parent lists (sorted by declaration order) from an edge list.
fn parents_from_edges(vars: &VariableTable, edges: &[(String, String)]) -> Result<Vec<Vec<VarId>>> {
    let mut parents = vec![Vec::new(); vars.len()];
    for (k, (from, to)) in edges.iter().enumerate() {
        let key = format!("edges[{k}]");
        let p = vars
            .index_of(from)
            .ok_or_else(|| Error::semantic(&key, format!("unknown variable {from:?}")))?;
        let c = vars
            .index_of(to)
            .ok_or_else(|| Error::semantic(&key, format!("unknown variable {to:?}")))?;
        if p == c {
            return Err(Error::semantic(key, "self loop"));
        }
        if parents[c].contains(&p) {
            return Err(Error::semantic(key, "duplicate edge"));
        }
        parents[c].push(p);
    }
    for ps in &mut parents {
        ps.sort_unstable();
    }
    Ok(parents)
}

fn edges_of(vars: &VariableTable, factors: &[Factor]) -> Vec<(String, String)> {
    let mut edges = Vec::new();
    for f in factors {
        for &p in f.parents() {
            edges.push((vars.name(p).to_string(), vars.name(f.child()).to_string()));
        }
    }
    edges
}

/// Builds a factor from keyed rows. Every parent context must be present
/// under its canonical key and bind every child value; nothing else may
/// appear.
fn factor_from_rows(
    vars: &VariableTable,
    child: VarId,
    parents: Vec<VarId>,
    rows: &RowsDoc,
    section: &str,
) -> Result<Factor> {
    let name = vars.name(child);
    let sizes: Vec<usize> = parents.iter().map(|&p| vars.domain_size(p)).collect();
    let mut digits = vec![0; parents.len()];
    let mut values = Vec::new();
    let mut used = 0;
    loop {
        let key = vars.format_bindings(parents.iter().copied().zip(digits.iter().copied()));
        let at = format!("{section}.{name}[{key}]");
        let row = rows
            .get(&key)
            .ok_or_else(|| Error::semantic(&at, "missing row"))?;
        used += 1;
        for label in row.keys() {
            if vars.value_index(child, label).is_none() {
                return Err(Error::semantic(&at, format!("unknown value {label:?}")));
            }
        }
        for x in 0..vars.domain_size(child) {
            let label = vars.label(child, x);
            let v = row
                .get(label)
                .ok_or_else(|| Error::semantic(&at, format!("missing value {label:?}")))?;
            values.push(*v);
        }
        if !advance(&mut digits, &sizes) {
            break;
        }
    }
    if used != rows.len() {
        let stray = rows
            .keys()
            .find(|k| {
                vars.parse_assignment(k).map_or(true, |a| {
                    a.bound_count() != parents.len()
                        || a.bound().any(|(v, _)| !parents.contains(&v))
                        || vars.format_assignment(&a) != **k
                })
            })
            .cloned()
            .unwrap_or_default();
        return Err(Error::semantic(
            format!("{section}.{name}[{stray}]"),
            "row key is not a canonical parent context",
        ));
    }
    Factor::new(vars, child, parents, values)
        .map_err(|e| Error::semantic(format!("{section}.{name}"), e.to_string()))
}

pub fn rows_of(vars: &VariableTable, f: &Factor) -> RowsDoc {
    (0..f.num_rows())
        .map(|r| {
            let key = vars.format_bindings(f.row_bindings(r));
            let row = (0..f.child_size())
                .map(|x| (vars.label(f.child(), x).to_string(), f.value(r, x)))
                .collect();
            (key, row)
        })
        .collect()
}

fn factors_from_map(
    vars: &VariableTable,
    parents: Vec<Vec<VarId>>,
    tables: &BTreeMap<String, RowsDoc>,
    section: &str,
) -> Result<Vec<Factor>> {
    for k in tables.keys() {
        if vars.index_of(k).is_none() {
            return Err(Error::semantic(format!("{section}.{k}"), "unknown variable"));
        }
    }
    parents
        .into_iter()
        .enumerate()
        .map(|(v, ps)| {
            let rows = tables.get(vars.name(v)).ok_or_else(|| {
                Error::semantic(format!("{section}.{}", vars.name(v)), "missing table")
            })?;
            factor_from_rows(vars, v, ps, rows, section)
        })
        .collect()
}

impl NetDocument {
    pub fn to_model(&self) -> Result<NetModel> {
        check_version(self.format_version)?;
        let vars = variables_from_docs(&self.variables)?;
        let parents = parents_from_edges(&vars, &self.edges)?;
        match self.kind {
            NetKind::Ucp => {
                if self.value_functions.is_some() {
                    return Err(Error::semantic("value_functions", "not allowed for kind \"ucp\""));
                }
                if !self.weight_bounds.is_empty() {
                    return Err(Error::semantic("weight_bounds", "not allowed for kind \"ucp\""));
                }
                let tables = self
                    .factors
                    .as_ref()
                    .ok_or_else(|| Error::semantic("factors", "missing"))?;
                let factors = factors_from_map(&vars, parents, tables, "factors")?;
                Ok(NetModel::Ucp(
                    UcpNet::new(vars, factors).map_err(|e| Error::semantic("factors", e.to_string()))?,
                ))
            }
            NetKind::Normalized => {
                if self.factors.is_some() {
                    return Err(Error::semantic("factors", "not allowed for kind \"normalized\""));
                }
                let tables = self
                    .value_functions
                    .as_ref()
                    .ok_or_else(|| Error::semantic("value_functions", "missing"))?;
                let factors = factors_from_map(&vars, parents, tables, "value_functions")?;
                let nnet = NormalizedUcpNet::new(vars, factors)
                    .map_err(|e| Error::semantic("value_functions", e.to_string()))?;
                let mut bounds = BTreeMap::new();
                for (name, [lower, upper]) in &self.weight_bounds {
                    let idx = nnet.parse_weight(name).map_err(|_| {
                        Error::semantic(format!("weight_bounds.{name}"), "unknown weight")
                    })?;
                    bounds.insert(
                        idx,
                        WeightBound {
                            lower: *lower,
                            upper: *upper,
                        },
                    );
                }
                Ok(NetModel::Normalized { nnet, bounds })
            }
        }
    }

    pub fn from_ucp(net: &UcpNet) -> Self {
        let vars = net.variables();
        NetDocument {
            format_version: FORMAT_VERSION,
            kind: NetKind::Ucp,
            variables: variables_to_docs(vars),
            edges: edges_of(vars, net.factors()),
            factors: Some(
                net.factors()
                    .iter()
                    .map(|f| (vars.name(f.child()).to_string(), rows_of(vars, f)))
                    .collect(),
            ),
            value_functions: None,
            weight_bounds: BTreeMap::new(),
        }
    }

    pub fn from_normalized(nnet: &NormalizedUcpNet, bounds: &BTreeMap<usize, WeightBound>) -> Self {
        let vars = nnet.variables();
        NetDocument {
            format_version: FORMAT_VERSION,
            kind: NetKind::Normalized,
            variables: variables_to_docs(vars),
            edges: edges_of(vars, nnet.value_functions()),
            factors: None,
            value_functions: Some(
                nnet.value_functions()
                    .iter()
                    .map(|f| (vars.name(f.child()).to_string(), rows_of(vars, f)))
                    .collect(),
            ),
            weight_bounds: bounds
                .iter()
                .map(|(&i, b)| (nnet.weight_name(i), [b.lower, b.upper]))
                .collect(),
        }
    }

    pub fn from_model(model: &NetModel) -> Self {
        match model {
            NetModel::Ucp(n) => Self::from_ucp(n),
            NetModel::Normalized { nnet, bounds } => Self::from_normalized(nnet, bounds),
        }
    }
}

pub fn parse_net(text: &str) -> Result<NetModel> {
    parse_json::<NetDocument>(text)?.to_model()
}

pub fn load_net(path: impl AsRef<Path>) -> Result<NetModel> {
    parse_net(&read(path.as_ref())?)
}

pub fn net_to_string(model: &NetModel) -> Result<String> {
    to_json(&NetDocument::from_model(model))
}

pub fn save_net(model: &NetModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, net_to_string(model)?)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayesNetBody {
    pub variables: Vec<VariableDoc>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    pub cpts: BTreeMap<String, RowsDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayesNetDocument {
    pub format_version: u32,
    pub variables: Vec<VariableDoc>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    pub cpts: BTreeMap<String, RowsDoc>,
}

impl BayesNetBody {
    pub fn to_bayes_net(&self) -> Result<BayesNet> {
        let vars = variables_from_docs(&self.variables)?;
        let parents = parents_from_edges(&vars, &self.edges)?;
        let cpts = factors_from_map(&vars, parents, &self.cpts, "cpts")?;
        BayesNet::new(vars, cpts).map_err(|e| Error::semantic("cpts", e.to_string()))
    }

    pub fn from_bayes_net(bn: &BayesNet) -> Self {
        let vars = bn.variables();
        BayesNetBody {
            variables: variables_to_docs(vars),
            edges: edges_of(vars, bn.cpts()),
            cpts: bn
                .cpts()
                .iter()
                .map(|f| (vars.name(f.child()).to_string(), rows_of(vars, f)))
                .collect(),
        }
    }
}

pub fn load_bayes_net(path: impl AsRef<Path>) -> Result<BayesNet> {
    let doc: BayesNetDocument = parse_json(&read(path.as_ref())?)?;
    check_version(doc.format_version)?;
    BayesNetBody {
        variables: doc.variables,
        edges: doc.edges,
        cpts: doc.cpts,
    }
    .to_bayes_net()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportEntry {
    pub outcome: String,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionDoc {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<SupportEntry>>,
    /// Evidence on the scenario's Bayes net selecting this action.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub format_version: u32,
    pub actions: Vec<ActionDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bayes_net: Option<BayesNetBody>,
}

impl ScenarioDocument {
    /// Resolves supports against `vars`. Evidence actions use the embedded
    /// Bayes net, or `external` when the document has none.
    pub fn to_scenario(
        &self,
        vars: &VariableTable,
        external: Option<Arc<BayesNet>>,
    ) -> Result<DecisionScenario> {
        check_version(self.format_version)?;
        let embedded = match &self.bayes_net {
            Some(b) => Some(Arc::new(b.to_bayes_net()?)),
            None => None,
        };
        let bn = embedded.or(external);
        let mut actions = Vec::with_capacity(self.actions.len());
        for (k, a) in self.actions.iter().enumerate() {
            let key = format!("actions[{k}]");
            let model = match (&a.support, &a.evidence) {
                (Some(support), None) => {
                    let mut entries = Vec::with_capacity(support.len());
                    for (s, e) in support.iter().enumerate() {
                        let at = format!("{key}.support[{s}]");
                        let asg = vars
                            .parse_assignment(&e.outcome)
                            .map_err(|err| Error::semantic(&at, err.to_string()))?;
                        let outcome = asg
                            .values()
                            .ok_or_else(|| Error::semantic(&at, "outcome must bind every variable"))?;
                        entries.push((outcome, e.probability));
                    }
                    ActionModel::Explicit(entries)
                }
                (None, Some(ev)) => {
                    let net = bn.clone().ok_or_else(|| {
                        Error::semantic(&key, "evidence action needs a Bayes net")
                    })?;
                    let evidence = net
                        .variables()
                        .parse_assignment(ev)
                        .map_err(|err| Error::semantic(&key, err.to_string()))?;
                    ActionModel::Network { net, evidence }
                }
                _ => {
                    return Err(Error::semantic(
                        key,
                        "an action needs exactly one of \"support\" and \"evidence\"",
                    ))
                }
            };
            actions.push(Action {
                name: a.name.clone(),
                model,
            });
        }
        let scenario =
            DecisionScenario::new(actions).map_err(|e| Error::semantic("actions", e.to_string()))?;
        scenario.check_against(vars)?;
        Ok(scenario)
    }

    /// Document of a scenario whose actions are all explicit, or share one
    /// Bayes net.
    pub fn from_scenario(scenario: &DecisionScenario, vars: &VariableTable) -> Result<Self> {
        let mut bn: Option<Arc<BayesNet>> = None;
        let mut actions = Vec::new();
        for a in scenario.actions() {
            actions.push(match &a.model {
                ActionModel::Explicit(support) => ActionDoc {
                    name: a.name.clone(),
                    support: Some(
                        support
                            .iter()
                            .map(|(o, p)| SupportEntry {
                                outcome: vars.format_outcome(o),
                                probability: *p,
                            })
                            .collect(),
                    ),
                    evidence: None,
                },
                ActionModel::Network { net, evidence } => {
                    if bn.as_ref().is_some_and(|b| !Arc::ptr_eq(b, net) && **b != **net) {
                        return Err(Error::Argument(
                            "actions use different Bayes nets; a document holds one".into(),
                        ));
                    }
                    bn = Some(Arc::clone(net));
                    ActionDoc {
                        name: a.name.clone(),
                        support: None,
                        evidence: Some(net.variables().format_assignment(evidence)),
                    }
                }
            });
        }
        Ok(ScenarioDocument {
            format_version: FORMAT_VERSION,
            actions,
            bayes_net: bn.map(|b| BayesNetBody::from_bayes_net(&b)),
        })
    }
}

pub fn parse_scenario(
    text: &str,
    vars: &VariableTable,
    external: Option<Arc<BayesNet>>,
) -> Result<DecisionScenario> {
    parse_json::<ScenarioDocument>(text)?.to_scenario(vars, external)
}

pub fn load_scenario(
    path: impl AsRef<Path>,
    vars: &VariableTable,
    external: Option<Arc<BayesNet>>,
) -> Result<DecisionScenario> {
    parse_scenario(&read(path.as_ref())?, vars, external)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaiFactorDoc {
    pub scope: Vec<String>,
    /// Canonical key over the scope to value.
    pub values: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaiDocument {
    pub format_version: u32,
    pub variables: Vec<VariableDoc>,
    pub factors: Vec<GaiFactorDoc>,
}

impl GaiDocument {
    pub fn to_decomposition(&self) -> Result<GaiDecomposition> {
        check_version(self.format_version)?;
        let vars = variables_from_docs(&self.variables)?;
        let mut factors = Vec::with_capacity(self.factors.len());
        for (k, f) in self.factors.iter().enumerate() {
            let key = format!("factors[{k}]");
            let mut scope = Vec::with_capacity(f.scope.len());
            for n in &f.scope {
                let v = vars
                    .index_of(n)
                    .ok_or_else(|| Error::semantic(&key, format!("unknown variable {n:?}")))?;
                if scope.contains(&v) {
                    return Err(Error::semantic(&key, format!("{n} listed twice")));
                }
                scope.push(v);
            }
            let sizes: Vec<usize> = scope.iter().map(|&v| vars.domain_size(v)).collect();
            let mut digits = vec![0; scope.len()];
            let mut values = Vec::new();
            loop {
                let ck = vars.format_bindings(scope.iter().copied().zip(digits.iter().copied()));
                let v = f
                    .values
                    .get(&ck)
                    .ok_or_else(|| Error::semantic(format!("{key}[{ck}]"), "missing entry"))?;
                values.push(*v);
                if !advance(&mut digits, &sizes) {
                    break;
                }
            }
            if values.len() != f.values.len() {
                return Err(Error::semantic(&key, "entries beyond the scope's assignments"));
            }
            factors.push(GaiFactor { scope, values });
        }
        GaiDecomposition::new(vars, factors).map_err(|e| Error::semantic("factors", e.to_string()))
    }
}

pub fn load_gai(path: impl AsRef<Path>) -> Result<GaiDecomposition> {
    parse_json::<GaiDocument>(&read(path.as_ref())?)?.to_decomposition()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SenseDoc {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelDoc {
    Structural,
    Bound,
    UserResponse,
    #[default]
    Other,
}

/// A linear constraint over named weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintDoc {
    pub terms: BTreeMap<String, f64>,
    pub sense: SenseDoc,
    pub rhs: f64,
    #[serde(default)]
    pub label: LabelDoc,
}

impl ConstraintDoc {
    pub fn to_constraint(&self, nnet: &NormalizedUcpNet) -> Result<LinearConstraint> {
        let mut expr = LinearExpr::new();
        for (name, &c) in &self.terms {
            let idx = nnet
                .parse_weight(name)
                .map_err(|_| Error::semantic(name, "unknown weight"))?;
            expr.add_term(idx, c);
        }
        let sense = match self.sense {
            SenseDoc::Le => Sense::Le,
            SenseDoc::Ge => Sense::Ge,
            SenseDoc::Eq => Sense::Eq,
        };
        let label = match self.label {
            LabelDoc::Structural => ConstraintLabel::Structural,
            LabelDoc::Bound => ConstraintLabel::Bound,
            LabelDoc::UserResponse => ConstraintLabel::UserResponse,
            LabelDoc::Other => ConstraintLabel::Other,
        };
        Ok(LinearConstraint::new(expr, sense, self.rhs, label))
    }

    pub fn from_constraint(c: &LinearConstraint, nnet: &NormalizedUcpNet) -> Self {
        ConstraintDoc {
            terms: c.expr.terms().map(|(i, k)| (nnet.weight_name(i), k)).collect(),
            sense: match c.sense {
                Sense::Le => SenseDoc::Le,
                Sense::Ge => SenseDoc::Ge,
                Sense::Eq => SenseDoc::Eq,
            },
            rhs: c.rhs - c.expr.constant_term(),
            label: match c.label {
                ConstraintLabel::Structural => LabelDoc::Structural,
                ConstraintLabel::Bound => LabelDoc::Bound,
                ConstraintLabel::UserResponse => LabelDoc::UserResponse,
                ConstraintLabel::Other => LabelDoc::Other,
            },
        }
    }
}

/// Weight-space settings plus extra constraints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintsDocument {
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structural: Option<bool>,
    #[serde(default)]
    pub bounds: BTreeMap<String, [f64; 2]>,
    #[serde(default)]
    pub constraints: Vec<ConstraintDoc>,
}

impl ConstraintsDocument {
    /// Merges into `config` (bounds override per weight) and returns the
    /// extra constraints.
    pub fn apply(
        &self,
        nnet: &NormalizedUcpNet,
        config: &mut SpaceConfig,
    ) -> Result<Vec<LinearConstraint>> {
        check_version(self.format_version)?;
        if let Some(u) = self.u_max {
            config.u_max = u;
        }
        if let Some(s) = self.structural {
            config.structural = s;
        }
        for (name, [lower, upper]) in &self.bounds {
            let idx = nnet
                .parse_weight(name)
                .map_err(|_| Error::semantic(format!("bounds.{name}"), "unknown weight"))?;
            config.bounds.insert(
                idx,
                WeightBound {
                    lower: *lower,
                    upper: *upper,
                },
            );
        }
        self.constraints
            .iter()
            .map(|c| c.to_constraint(nnet))
            .collect()
    }
}

pub fn load_constraints(path: impl AsRef<Path>) -> Result<ConstraintsDocument> {
    parse_json(&read(path.as_ref())?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostsDocument {
    pub format_version: u32,
    #[serde(default)]
    pub default: f64,
    #[serde(default)]
    pub by_kind: BTreeMap<String, f64>,
}

impl CostsDocument {
    pub fn to_costs(&self) -> Result<QueryCosts> {
        check_version(self.format_version)?;
        let costs = QueryCosts {
            default: self.default,
            by_kind: self.by_kind.clone(),
        };
        costs.validate()?;
        Ok(costs)
    }
}

pub fn load_costs(path: impl AsRef<Path>) -> Result<QueryCosts> {
    parse_json::<CostsDocument>(&read(path.as_ref())?)?.to_costs()
}

/// Default space settings with the net's own bounds applied.
pub fn space_config(bounds: &BTreeMap<usize, WeightBound>) -> SpaceConfig {
    SpaceConfig {
        u_max: DEFAULT_U_MAX,
        structural: true,
        bounds: bounds.clone(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseDoc {
    pub label: String,
    pub constraint: ConstraintDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum QueryKindDoc {
    BoundSplit {
        weight: String,
        midpoint: f64,
    },
    SigmaRatio {
        variable: String,
        context1: String,
        context2: String,
        k: f64,
    },
    ActionComparison {
        first: String,
        second: String,
        context: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryDoc {
    pub id: String,
    pub kind: QueryKindDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
    pub responses: Vec<ResponseDoc>,
    pub cost: f64,
}

fn row_for_context(nnet: &NormalizedUcpNet, v: VarId, ctx: &str, key: &str) -> Result<usize> {
    let f = nnet.value_function(v);
    let a = nnet
        .variables()
        .parse_assignment(ctx)
        .map_err(|e| Error::semantic(key, e.to_string()))?;
    let pv: Option<Vec<usize>> = f.parents().iter().map(|&p| a.get(p)).collect();
    match pv {
        Some(pv) if a.bound_count() == f.parents().len() => Ok(f.row_index(&pv)),
        _ => Err(Error::semantic(key, "context must bind exactly the parents")),
    }
}

impl QueryDoc {
    pub fn from_query(q: &Query, nnet: &NormalizedUcpNet, scenario: &DecisionScenario) -> Self {
        let vars = nnet.variables();
        let kind = match &q.kind {
            QueryKind::BoundSplit { weight, midpoint } => QueryKindDoc::BoundSplit {
                weight: nnet.weight_name(*weight),
                midpoint: *midpoint,
            },
            QueryKind::SigmaRatio {
                variable,
                row1,
                row2,
                k,
            } => {
                let f = nnet.value_function(*variable);
                QueryKindDoc::SigmaRatio {
                    variable: vars.name(*variable).to_string(),
                    context1: vars.format_bindings(f.row_bindings(*row1)),
                    context2: vars.format_bindings(f.row_bindings(*row2)),
                    k: *k,
                }
            }
            QueryKind::ActionComparison {
                first,
                second,
                context,
            } => QueryKindDoc::ActionComparison {
                first: scenario.actions()[*first].name.clone(),
                second: scenario.actions()[*second].name.clone(),
                context: vars.format_assignment(context),
            },
        };
        QueryDoc {
            id: q.id.clone(),
            kind,
            prompt: Some(q.prompt(nnet, scenario)),
            responses: q
                .responses
                .iter()
                .map(|r| ResponseDoc {
                    label: r.label.clone(),
                    constraint: ConstraintDoc::from_constraint(&r.constraint, nnet),
                })
                .collect(),
            cost: q.cost,
        }
    }

    pub fn to_query(&self, nnet: &NormalizedUcpNet, scenario: &DecisionScenario) -> Result<Query> {
        let vars = nnet.variables();
        let kind = match &self.kind {
            QueryKindDoc::BoundSplit { weight, midpoint } => QueryKind::BoundSplit {
                weight: nnet
                    .parse_weight(weight)
                    .map_err(|_| Error::semantic(weight, "unknown weight"))?,
                midpoint: *midpoint,
            },
            QueryKindDoc::SigmaRatio {
                variable,
                context1,
                context2,
                k,
            } => {
                let v = vars
                    .index_of(variable)
                    .ok_or_else(|| Error::semantic(variable, "unknown variable"))?;
                QueryKind::SigmaRatio {
                    variable: v,
                    row1: row_for_context(nnet, v, context1, context1)?,
                    row2: row_for_context(nnet, v, context2, context2)?,
                    k: *k,
                }
            }
            QueryKindDoc::ActionComparison {
                first,
                second,
                context,
            } => QueryKind::ActionComparison {
                first: scenario.action_index(first)?,
                second: scenario.action_index(second)?,
                context: vars
                    .parse_assignment(context)
                    .map_err(|e| Error::semantic(context, e.to_string()))?,
            },
        };
        if self.responses.len() < 2 {
            return Err(Error::semantic(&self.id, "a query needs at least two responses"));
        }
        let responses = self
            .responses
            .iter()
            .map(|r| {
                Ok(Response {
                    label: r.label.clone(),
                    constraint: r.constraint.to_constraint(nnet)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Query {
            id: self.id.clone(),
            kind,
            responses,
            cost: self.cost,
        })
    }
}

/// Parses an assignment given as `k=v,...` or `k=v;...`.
pub fn parse_evidence(vars: &VariableTable, text: &str) -> Result<Assignment> {
    vars.parse_assignment(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
  "format_version": 1,
  "kind": "ucp",
  "variables": [{"name": "A", "values": ["a", "abar"]}, {"name": "B", "values": ["b", "bbar"]}],
  "edges": [["A", "B"]],
  "factors": {
    "A": {"": {"a": 3, "abar": 1}},
    "B": {"A=a": {"b": 0.5, "bbar": 0}, "A=abar": {"b": 0, "bbar": 0.25}}
  }
}"#;

    #[test]
    fn parse_and_round_trip() {
        let m = parse_net(SMALL).unwrap();
        let net = m.clone().into_ucp().unwrap();
        assert_eq!(net.parents(1), &[0]);
        assert_eq!(net.utility(&[0, 0]), 3.5);
        let text = net_to_string(&m).unwrap();
        let again = parse_net(&text).unwrap();
        assert_eq!(again, m);
        assert_eq!(net_to_string(&again).unwrap(), text);
    }

    #[test]
    fn empty_file_is_a_parse_error() {
        assert!(matches!(parse_net(""), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn positioned_parse_error() {
        let bad = SMALL.replace("\"edges\"", "\"edges\" 1");
        match parse_net(&bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = SMALL.replace("\"kind\"", "\"colour\": 1, \"kind\"");
        assert!(matches!(parse_net(&bad), Err(Error::Parse { .. })));
    }

    #[test]
    fn semantic_errors_name_the_key() {
        let missing = SMALL.replace(r#", "A=abar": {"b": 0, "bbar": 0.25}"#, "");
        match parse_net(&missing) {
            Err(Error::Semantic { key, .. }) => assert_eq!(key, "factors.B[A=abar]"),
            other => panic!("{other:?}"),
        }
        let unknown = SMALL.replace(r#"["A", "B"]"#, r#"["A", "Q"]"#);
        match parse_net(&unknown) {
            Err(Error::Semantic { key, .. }) => assert_eq!(key, "edges[0]"),
            other => panic!("{other:?}"),
        }
        let stray = SMALL.replace(r#""A=abar""#, r#""A=abar", "A=zz": {}, "x""#);
        assert!(parse_net(&stray).is_err());
    }

    #[test]
    fn version_is_checked() {
        let bad = SMALL.replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(matches!(parse_net(&bad), Err(Error::Semantic { .. })));
    }
}
