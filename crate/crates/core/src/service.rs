//! In-memory elicitation sessions with append-only transcript snapshots.
//!
//! A session's state is a pure fold of its creation request and its
//! transcript, so a snapshot file is enough to rebuild it after a restart.
//! Responses carry a `query_id` of the form `"{version}#{key}"`, where the
//! version is the transcript length; a response to an older version is
//! rejected as stale.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use log::{info, warn};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::elicit::{ElicitationSession, QueryCosts, SessionConfig, Step, WeightBound};
use crate::error::Error;
use crate::io::{parse_json, to_json, CostsDocument, NetDocument, QueryDoc, ScenarioDocument};

/// Regret threshold: a number, or `"inf"` to recommend at once.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TauDoc {
    Value(f64),
    Named(String),
}

impl TauDoc {
    fn value(&self) -> Result<f64, Error> {
        match self {
            TauDoc::Value(t) => Ok(*t),
            TauDoc::Named(s) if s == "inf" => Ok(f64::INFINITY),
            TauDoc::Named(s) => Err(Error::semantic("config.tau", format!("expected a number or \"inf\", got {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfigDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<TauDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub costs: Option<CostsDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structural: Option<bool>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bounds: BTreeMap<String, [f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_queries: Option<usize>,
}

/// Body of a session-creation request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub net: NetDocument,
    pub scenario: ScenarioDocument,
    #[serde(default)]
    pub config: SessionConfigDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseRequest {
    pub query_id: String,
    pub response_index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotEntry {
    query: QueryDoc,
    response: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Snapshot {
    format_version: u32,
    id: String,
    request: CreateRequest,
    transcript: Vec<SnapshotEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown session {0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error(transparent)]
    Model(#[from] Error),
}

impl ServiceError {
    /// HTTP status for the error.
    pub fn status(&self) -> u16 {
        match self {
            ServiceError::NotFound(_) => 404,
            ServiceError::Conflict(_) => 409,
            ServiceError::Model(e) if e.is_usage() => 400,
            ServiceError::Model(_) => 422,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::NotFound(_) => "E_NOT_FOUND",
            ServiceError::Conflict(_) => "E_CONFLICT",
            ServiceError::Model(e) => e.code(),
        }
    }

    pub fn body(&self) -> Value {
        json!({ "error": { "code": self.code(), "message": self.to_string() } })
    }
}

pub type ServiceResult<T> = std::result::Result<T, ServiceError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SessionStatus {
    AwaitingResponse,
    Recommended,
    Stopped,
    Error,
}

impl SessionStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SessionStatus::AwaitingResponse => "awaiting-response",
            SessionStatus::Recommended => "recommended",
            SessionStatus::Stopped => "stopped",
            SessionStatus::Error => "error",
        }
    }
}

/// One live session.
pub struct SessionRecord {
    pub id: String,
    request: CreateRequest,
    session: ElicitationSession,
    step: Option<Step>,
    error: Option<String>,
}

fn build_config(doc: &SessionConfigDoc, nnet: &crate::NormalizedUcpNet, base: BTreeMap<usize, WeightBound>) -> Result<SessionConfig, Error> {
    let mut config = SessionConfig::default();
    config.space.bounds = base;
    if let Some(t) = &doc.tau {
        config.tau = t.value()?;
    }
    if let Some(c) = &doc.costs {
        config.costs = c.to_costs()?;
    } else {
        config.costs = QueryCosts::default();
    }
    if let Some(u) = doc.u_max {
        config.space.u_max = u;
    }
    if let Some(s) = doc.structural {
        config.space.structural = s;
    }
    for (name, [lower, upper]) in &doc.bounds {
        let idx = nnet
            .parse_weight(name)
            .map_err(|_| Error::semantic(format!("config.bounds.{name}"), "unknown weight"))?;
        config.space.bounds.insert(
            idx,
            WeightBound {
                lower: *lower,
                upper: *upper,
            },
        );
    }
    if let Some(m) = doc.max_queries {
        config.max_queries = m;
    }
    Ok(config)
}

impl SessionRecord {
    fn create(id: String, request: CreateRequest) -> ServiceResult<Self> {
        let (nnet, bounds) = request.net.to_model()?.into_normalized();
        let scenario = request.scenario.to_scenario(nnet.variables(), None)?;
        let config = build_config(&request.config, &nnet, bounds)?;
        let session = ElicitationSession::new(Arc::new(nnet), &scenario, config)?;
        let mut record = SessionRecord {
            id,
            request,
            session,
            step: None,
            error: None,
        };
        record.advance();
        Ok(record)
    }

    fn advance(&mut self) {
        match self.session.step() {
            Ok(s) => {
                self.step = Some(s);
                self.error = None;
            }
            Err(e) => {
                warn!("session {}: {e}", self.id);
                self.step = None;
                self.error = Some(e.to_string());
            }
        }
    }

    pub fn session(&self) -> &ElicitationSession {
        &self.session
    }

    pub fn version(&self) -> usize {
        self.session.transcript().len()
    }

    pub fn status(&self) -> SessionStatus {
        match &self.step {
            Some(Step::Ask { .. }) => SessionStatus::AwaitingResponse,
            Some(Step::Recommend { .. }) => SessionStatus::Recommended,
            Some(Step::Stop { .. }) => SessionStatus::Stopped,
            None => SessionStatus::Error,
        }
    }

    fn query_doc(&self, q: &crate::elicit::Query) -> QueryDoc {
        QueryDoc::from_query(q, self.session.nnet(), self.session.scenario())
    }

    pub fn report_view(&self) -> Value {
        let r = self.session.report();
        let names: Vec<&str> = self
            .session
            .scenario()
            .actions()
            .iter()
            .map(|a| a.name.as_str())
            .collect();
        let max_regret: serde_json::Map<String, Value> = names
            .iter()
            .zip(&r.max_regret)
            .map(|(n, v)| (n.to_string(), json!(v)))
            .collect();
        json!({
            "actions": names,
            "mmr": r.mmr,
            "recommended": names[r.recommended],
            "max_regret": max_regret,
            "advantage": r.advantage,
        })
    }

    pub fn status_view(&self) -> Value {
        let mut v = json!({
            "id": self.id,
            "status": self.status().as_str(),
            "version": self.version(),
            "tau": tau_json(self.session.config().tau),
            "report": self.report_view(),
            "mmr_history": self.mmr_history(),
        });
        if let Some(Step::Stop { reason, .. }) = &self.step {
            v["stop_reason"] = json!(reason.as_str());
        }
        if let Some(e) = &self.error {
            v["error"] = json!(e);
        }
        v
    }

    /// MMR at creation followed by the MMR after each response.
    pub fn mmr_history(&self) -> Vec<f64> {
        let t = self.session.transcript();
        let mut h = Vec::with_capacity(t.len() + 1);
        h.push(t.first().map_or(self.session.report().mmr, |e| e.mmr_before));
        h.extend(t.iter().map(|e| e.mmr_after));
        h
    }

    pub fn query_view(&self) -> Value {
        match &self.step {
            Some(Step::Ask { query, improvement }) => json!({
                "status": self.status().as_str(),
                "query_id": format!("{}#{}", self.version(), query.id),
                "improvement": improvement,
                "query": self.query_doc(query),
            }),
            _ => json!({ "status": self.status().as_str(), "query": null }),
        }
    }

    pub fn transcript_view(&self) -> Value {
        let entries: Vec<Value> = self
            .session
            .transcript()
            .iter()
            .enumerate()
            .map(|(k, e)| {
                json!({
                    "version": k,
                    "query": self.query_doc(&e.query),
                    "response": e.response,
                    "label": e.query.responses[e.response].label,
                    "mmr_before": e.mmr_before,
                    "mmr_after": e.mmr_after,
                })
            })
            .collect();
        json!({ "id": self.id, "entries": entries })
    }

    fn submit(&mut self, query_id: &str, response: usize) -> ServiceResult<Value> {
        let Some(Step::Ask { query, .. }) = &self.step else {
            return Err(ServiceError::Conflict(format!(
                "session is {}, not awaiting a response",
                self.status().as_str()
            )));
        };
        let expected = format!("{}#{}", self.version(), query.id);
        if query_id != expected {
            return Err(ServiceError::Conflict(format!(
                "stale query id {query_id:?}; the pending query is {expected:?}"
            )));
        }
        self.session.respond(response)?;
        self.advance();
        Ok(self.status_view())
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot {
            format_version: crate::io::FORMAT_VERSION,
            id: self.id.clone(),
            request: self.request.clone(),
            transcript: self
                .session
                .transcript()
                .iter()
                .map(|e| SnapshotEntry {
                    query: self.query_doc(&e.query),
                    response: e.response,
                })
                .collect(),
        }
    }

    fn replay(snapshot: Snapshot) -> ServiceResult<Self> {
        let mut record = SessionRecord::create(snapshot.id, snapshot.request)?;
        for e in snapshot.transcript {
            let q = e
                .query
                .to_query(record.session.nnet(), record.session.scenario())?;
            record.session.apply(q, e.response)?;
        }
        record.advance();
        Ok(record)
    }
}

fn tau_json(t: f64) -> Value {
    if t.is_finite() {
        json!(t)
    } else {
        json!("inf")
    }
}

fn new_token() -> String {
    let mut bytes = [0u8; 16];
    rand::thread_rng().fill_bytes(&mut bytes);
    let mut s = String::with_capacity(32);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// All sessions of one service instance.
#[derive(Default)]
pub struct SessionStore {
    sessions: Mutex<HashMap<String, Arc<Mutex<SessionRecord>>>>,
    dir: Option<PathBuf>,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// A store that snapshots every session into `dir` after each change.
    pub fn with_snapshots(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(SessionStore {
            sessions: Mutex::new(HashMap::new()),
            dir: Some(dir),
        })
    }

    /// Rebuilds every session snapshotted in `dir` by replay. Unreadable
    /// snapshots are skipped with a warning.
    pub fn recover(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let store = Self::with_snapshots(dir)?;
        let dir = store.dir.clone().expect("snapshot dir");
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for p in paths {
            let restored = std::fs::read_to_string(&p)
                .map_err(Error::from)
                .and_then(|text| parse_json::<Snapshot>(&text))
                .map_err(ServiceError::from)
                .and_then(SessionRecord::replay);
            match restored {
                Ok(record) => {
                    info!("recovered session {} at version {}", record.id, record.version());
                    store.insert(record);
                }
                Err(e) => warn!("skipping snapshot {}: {e}", p.display()),
            }
        }
        Ok(store)
    }

    fn insert(&self, record: SessionRecord) {
        let id = record.id.clone();
        self.sessions
            .lock()
            .expect("store lock")
            .insert(id, Arc::new(Mutex::new(record)));
    }

    fn record(&self, id: &str) -> ServiceResult<Arc<Mutex<SessionRecord>>> {
        self.sessions
            .lock()
            .expect("store lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }

    fn persist(&self, record: &SessionRecord) -> ServiceResult<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        write_atomic(
            &dir.join(format!("{}.json", record.id)),
            &to_json(&record.snapshot())?,
        )
        .map_err(|e| ServiceError::Model(e.into()))
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Creates a session and returns its status view.
    pub fn create(&self, request: CreateRequest) -> ServiceResult<Value> {
        let record = SessionRecord::create(new_token(), request)?;
        self.persist(&record)?;
        let view = record.status_view();
        self.insert(record);
        Ok(view)
    }

    pub fn create_from_json(&self, body: &str) -> ServiceResult<Value> {
        self.create(parse_json(body)?)
    }

    pub fn status(&self, id: &str) -> ServiceResult<Value> {
        Ok(self.record(id)?.lock().expect("session lock").status_view())
    }

    pub fn next_query(&self, id: &str) -> ServiceResult<Value> {
        Ok(self.record(id)?.lock().expect("session lock").query_view())
    }

    pub fn transcript(&self, id: &str) -> ServiceResult<Value> {
        Ok(self.record(id)?.lock().expect("session lock").transcript_view())
    }

    /// Applies a response; exactly one of several concurrent submissions
    /// for the same version wins.
    pub fn submit(&self, id: &str, request: &ResponseRequest) -> ServiceResult<Value> {
        let rec = self.record(id)?;
        let mut record = rec.lock().expect("session lock");
        let view = record.submit(&request.query_id, request.response_index)?;
        self.persist(&record)?;
        Ok(view)
    }

    /// Runs `f` on a session under its lock.
    pub fn with_session<T>(&self, id: &str, f: impl FnOnce(&SessionRecord) -> T) -> ServiceResult<T> {
        Ok(f(&self.record(id)?.lock().expect("session lock")))
    }
}

fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, text)?;
    std::fs::rename(tmp, path)
}
