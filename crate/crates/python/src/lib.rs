//! Python bindings. Documents cross the boundary as JSON text in the same
//! encoding the CLI reads; library errors become `ValueError`s prefixed
//! with their code.

use std::sync::Arc;

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;

use ucpnet::bayes::{expected_value, staged_decision};
use ucpnet::elicit::{minimax_regret, WeightSpace};
use ucpnet::io::{self, NetModel};
use ucpnet::optimize::forward_sweep;
use ucpnet::service::{ResponseRequest, ServiceError, SessionStore};
use ucpnet::validation::{is_valid_ucp, sufficient_check};
use ucpnet::Error;

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(format!("{}: {e}", e.code()))
}

fn service_err(e: ServiceError) -> PyErr {
    match e {
        ServiceError::NotFound(_) => PyKeyError::new_err(e.to_string()),
        _ => PyValueError::new_err(format!("{}: {e}", e.code())),
    }
}

/// A UCP-net with numeric factors.
#[pyclass(name = "UcpNet", frozen)]
struct PyUcpNet {
    net: ucpnet::UcpNet,
}

#[pymethods]
impl PyUcpNet {
    /// Parses a net document.
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        let net = io::parse_net(text).and_then(NetModel::into_ucp).map_err(py_err)?;
        Ok(PyUcpNet { net })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let net = io::load_net(path).and_then(NetModel::into_ucp).map_err(py_err)?;
        Ok(PyUcpNet { net })
    }

    /// `(name, values)` per variable.
    fn variables(&self) -> Vec<(String, Vec<String>)> {
        self.net
            .variables()
            .iter()
            .map(|v| (v.name.clone(), v.values.clone()))
            .collect()
    }

    /// Utility of a complete outcome such as `"A=a;B=b"`.
    fn utility(&self, outcome: &str) -> PyResult<f64> {
        let o = self.net.variables().parse_assignment(outcome).map_err(py_err)?;
        self.net.evaluate_utility(&o).map_err(py_err)
    }

    /// 1, 0 or -1 as the first outcome is preferred, tied or dispreferred.
    fn compare(&self, first: &str, second: &str) -> PyResult<i8> {
        let vars = self.net.variables();
        let a = vars.parse_assignment(first).map_err(py_err)?;
        let b = vars.parse_assignment(second).map_err(py_err)?;
        Ok(self.net.compare_outcomes(&a, &b).map_err(py_err)? as i8)
    }

    fn is_valid(&self) -> PyResult<bool> {
        Ok(is_valid_ucp(&self.net).map_err(py_err)?.valid())
    }

    /// One line per domination witness.
    fn violations(&self) -> PyResult<Vec<String>> {
        let report = is_valid_ucp(&self.net).map_err(py_err)?;
        let vars = self.net.variables();
        Ok(report.witnesses().map(|w| w.describe(vars)).collect())
    }

    fn sufficient(&self) -> bool {
        sufficient_check(&self.net)
    }

    /// Best completion of `evidence` (e.g. `"C=cbar"`).
    #[pyo3(signature = (evidence = ""))]
    fn optimize(&self, evidence: &str) -> PyResult<String> {
        let vars = self.net.variables();
        let ev = io::parse_evidence(vars, evidence).map_err(py_err)?;
        let best = forward_sweep(&self.net, &ev).map_err(py_err)?;
        Ok(vars.format_assignment(&best))
    }

    /// Expected utility of every action of a scenario document, in order.
    fn expected_values(&self, scenario: &str) -> PyResult<Vec<(String, f64)>> {
        let sc = io::parse_scenario(scenario, self.net.variables(), None).map_err(py_err)?;
        sc.actions()
            .iter()
            .map(|a| Ok((a.name.clone(), expected_value(&sc, &a.name, &self.net).map_err(py_err)?)))
            .collect()
    }

    /// Action chosen by staged factor evaluation.
    #[pyo3(signature = (scenario, slack = 0.0))]
    fn decide(&self, scenario: &str, slack: f64) -> PyResult<String> {
        let sc = io::parse_scenario(scenario, self.net.variables(), None).map_err(py_err)?;
        Ok(staged_decision(&sc, &self.net, slack).map_err(py_err)?.name)
    }

    fn normalized(&self) -> PyResult<String> {
        let model = NetModel::Normalized {
            nnet: self.net.normalize().0,
            bounds: Default::default(),
        };
        io::net_to_string(&model).map_err(py_err)
    }

    fn to_json(&self) -> PyResult<String> {
        io::net_to_string(&NetModel::Ucp(self.net.clone())).map_err(py_err)
    }
}

type RegretSummary = (Vec<(String, f64)>, String, f64);

/// Minimax regret of a scenario over the weights of a net document:
/// `(max_regret per action, recommended action, MMR)`.
#[pyfunction]
fn regret(net: &str, scenario: &str) -> PyResult<RegretSummary> {
    let (nnet, bounds) = io::parse_net(net).map_err(py_err)?.into_normalized();
    let sc = io::parse_scenario(scenario, nnet.variables(), None)
        .and_then(|s| s.compiled(nnet.variables()))
        .map_err(py_err)?;
    let space = WeightSpace::new(Arc::new(nnet), &io::space_config(&bounds)).map_err(py_err)?;
    let r = minimax_regret(&sc, &space).map_err(py_err)?;
    let names: Vec<String> = sc.actions().iter().map(|a| a.name.clone()).collect();
    let mr = names.iter().cloned().zip(r.max_regret).collect();
    Ok((mr, names[r.recommended].clone(), r.mmr))
}

/// In-process elicitation service; views are JSON text as served over HTTP.
#[pyclass(name = "Service", frozen)]
struct PyService {
    store: SessionStore,
}

#[pymethods]
impl PyService {
    #[new]
    #[pyo3(signature = (snapshots = None))]
    fn new(snapshots: Option<&str>) -> PyResult<Self> {
        let store = match snapshots {
            Some(dir) => SessionStore::recover(dir).map_err(|e| py_err(e.into()))?,
            None => SessionStore::in_memory(),
        };
        Ok(PyService { store })
    }

    fn create(&self, request: &str) -> PyResult<String> {
        self.store.create_from_json(request).map(|v| v.to_string()).map_err(service_err)
    }

    fn status(&self, id: &str) -> PyResult<String> {
        self.store.status(id).map(|v| v.to_string()).map_err(service_err)
    }

    fn query(&self, id: &str) -> PyResult<String> {
        self.store.next_query(id).map(|v| v.to_string()).map_err(service_err)
    }

    fn respond(&self, id: &str, query_id: &str, response_index: usize) -> PyResult<String> {
        let req = ResponseRequest {
            query_id: query_id.to_string(),
            response_index,
        };
        self.store.submit(id, &req).map(|v| v.to_string()).map_err(service_err)
    }

    fn transcript(&self, id: &str) -> PyResult<String> {
        self.store.transcript(id).map(|v| v.to_string()).map_err(service_err)
    }
}

#[pymodule]
#[pyo3(name = "ucpnet")]
/// Module initializer, also used to embed the module in a host interpreter.
pub fn ucpnet_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyUcpNet>()?;
    m.add_class::<PyService>()?;
    m.add_function(wrap_pyfunction!(regret, m)?)?;
    Ok(())
}
