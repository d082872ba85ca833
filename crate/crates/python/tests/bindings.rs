use std::ffi::CString;

use pyo3::prelude::*;
use pyo3::types::PyModule;

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures");

fn with_module(script: &str) {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "ucpnet").unwrap();
        ucpnet_py::ucpnet_module(&m).unwrap();
        py.import("sys")
            .unwrap()
            .getattr("modules")
            .unwrap()
            .set_item("ucpnet", m)
            .unwrap();
        let code = format!("FIXTURES = {FIXTURES:?}\n{script}");
        py.run(&CString::new(code).unwrap(), None, None)
            .inspect_err(|e| e.print(py))
            .unwrap();
    });
}

#[test]
fn net_methods() {
    with_module(
        r#"
import ucpnet
net = ucpnet.UcpNet.load(FIXTURES + "/example.json")
assert net.utility("A=a;B=b;C=cbar;D=dbar") == 10.4
assert net.compare("A=abar;B=b;C=cbar;D=dbar", "A=a;B=b;C=cbar;D=dbar") == -1
assert net.is_valid() and net.violations() == []
assert net.optimize() == "A=a;B=b;C=c;D=d"
assert net.optimize("C=cbar") == "A=a;B=b;C=cbar;D=d"
again = ucpnet.UcpNet(net.to_json())
assert again.variables() == net.variables()
"#,
    );
}

#[test]
fn errors_become_python_exceptions() {
    with_module(
        r#"
import ucpnet
try:
    ucpnet.UcpNet("{")
except ValueError as e:
    assert str(e).startswith("E_PARSE"), e
else:
    raise AssertionError("bad document accepted")
net = ucpnet.UcpNet.load(FIXTURES + "/example.json")
try:
    net.utility("A=zzz")
except ValueError as e:
    assert str(e).startswith("E_ASSIGNMENT"), e
else:
    raise AssertionError("bad outcome accepted")
s = ucpnet.Service()
try:
    s.query("nope")
except KeyError:
    pass
else:
    raise AssertionError("unknown session accepted")
"#,
    );
}

#[test]
fn regret_and_service() {
    with_module(
        r#"
import json, ucpnet
net = open(FIXTURES + "/example_normalized.json").read()
sc = open(FIXTURES + "/example_two_actions.json").read()
mr, best, mmr = ucpnet.regret(net, sc)
assert dict(mr) == {"safe": 200.0, "gamble": 150.0} and best == "gamble" and mmr == 150.0
s = ucpnet.Service()
sid = json.loads(s.create(json.dumps({"net": json.loads(net), "scenario": json.loads(sc)})))["id"]
q = json.loads(s.query(sid))
view = json.loads(s.respond(sid, q["query_id"], 1))
assert view["version"] == 1
try:
    s.respond(sid, q["query_id"], 1)
except ValueError as e:
    assert str(e).startswith("E_CONFLICT"), e
else:
    raise AssertionError("stale answer accepted")
assert len(json.loads(s.transcript(sid))["entries"]) == 1
"#,
    );
}
