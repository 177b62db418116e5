//! HTTP facade over the multirent solvers with in-memory editing sessions.
//!
//! Every session holds one instance document and a history of solves.
//! Edits to a session are serialized; solves run on a snapshot of the
//! instance so reads never block on a long computation.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::{Mutex, RwLock};

use multirent::document::{
    check, parse_json, solve, ApartmentEntry, CheckReport, InstanceDocument, Notion, ObjectiveKind, SolutionDocument,
    SolveRequest, SolveStatus,
};
use multirent::model::{envy_matrix, EnvyMatrix, Solution};
use multirent::negotiation::NegotiationLedger;
use multirent::solvers::PriceSign;
use multirent::{Error, Money};

/// One change to an instance document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Edit {
    /// Appends an apartment; `values[i][k]` is player `i`'s value for room `k`.
    AddApartment {
        name: String,
        rent: Money,
        #[serde(default)]
        rooms: Option<Vec<String>>,
        values: Vec<Vec<Money>>,
    },
    RemoveApartment {
        apartment: usize,
    },
    SetValue {
        player: usize,
        apartment: usize,
        room: usize,
        value: Money,
    },
    SetRent {
        apartment: usize,
        rent: Money,
    },
}

impl Edit {
    fn apply(&self, doc: &mut InstanceDocument) -> Result<(), ApiError> {
        let n = doc.players.len();
        let m = doc.apartments.len();
        let out_of_range = |what: &str, index: usize, len: usize| {
            ApiError::invalid(format!("{what} {index} out of range (have {len})"))
        };
        match self {
            Edit::AddApartment {
                name,
                rent,
                rooms,
                values,
            } => {
                if values.len() != n || values.iter().any(|row| row.len() != n) {
                    return Err(ApiError::invalid(format!("new apartment needs {n} rows of {n} values")));
                }
                let rooms = rooms
                    .clone()
                    .unwrap_or_else(|| (0..n).map(|k| format!("{name} room {}", k + 1)).collect());
                doc.apartments.push(ApartmentEntry {
                    name: name.clone(),
                    rent: rent.clone(),
                    rooms,
                });
                for (row, new) in doc.values.iter_mut().zip(values) {
                    row.push(new.clone());
                }
            }
            Edit::RemoveApartment { apartment } => {
                if *apartment >= m {
                    return Err(out_of_range("apartment", *apartment, m));
                }
                if m == 1 {
                    return Err(ApiError::invalid("cannot remove the only apartment".into()));
                }
                doc.apartments.remove(*apartment);
                for row in &mut doc.values {
                    row.remove(*apartment);
                }
            }
            Edit::SetValue {
                player,
                apartment,
                room,
                value,
            } => {
                if *player >= n {
                    return Err(out_of_range("player", *player, n));
                }
                if *apartment >= m {
                    return Err(out_of_range("apartment", *apartment, m));
                }
                if *room >= n {
                    return Err(out_of_range("room", *room, n));
                }
                doc.values[*player][*apartment][*room] = value.clone();
            }
            Edit::SetRent { apartment, rent } => {
                if *apartment >= m {
                    return Err(out_of_range("apartment", *apartment, m));
                }
                doc.apartments[*apartment].rent = rent.clone();
            }
        }
        Ok(())
    }
}

/// Applies `edits` in order and validates the result, leaving `doc`
/// untouched on failure.
pub fn apply_edits(doc: &InstanceDocument, edits: &[Edit]) -> Result<InstanceDocument, ApiError> {
    let mut next = doc.clone();
    for edit in edits {
        edit.apply(&mut next)?;
    }
    next.to_instance().map_err(ApiError::from)?;
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    /// Instance version the solve ran against.
    pub version: u64,
    pub request: SolveRequest,
    pub result: SolutionDocument,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub version: u64,
    pub instance: Option<InstanceDocument>,
    pub history: Vec<HistoryEntry>,
}

impl Session {
    fn instance(&self) -> Result<&InstanceDocument, ApiError> {
        self.instance
            .as_ref()
            .ok_or_else(|| ApiError::invalid("session has no instance yet".into()))
    }

    fn last_solution(&self, negotiated_only: bool) -> Option<&SolutionDocument> {
        self.history
            .iter()
            .rev()
            .filter(|h| h.result.status == SolveStatus::Solved)
            .filter(|h| !negotiated_only || matches!(h.request.notion, Notion::Nef | Notion::StrongNef))
            .map(|h| &h.result)
            .next()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionSummary {
    pub id: String,
    pub version: u64,
    pub instance: Option<InstanceDocument>,
    pub solves: usize,
}

impl From<&Session> for SessionSummary {
    fn from(s: &Session) -> Self {
        SessionSummary {
            id: s.id.clone(),
            version: s.version,
            instance: s.instance.clone(),
            solves: s.history.len(),
        }
    }
}

/// Error body: `{"error": code, "message": text}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn not_found(message: String) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            code: "not_found",
            message,
        }
    }

    fn invalid(message: String) -> Self {
        ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            code: "invalid",
            message,
        }
    }

    fn conflict(message: String) -> Self {
        ApiError {
            status: StatusCode::CONFLICT,
            code: "conflict",
            message,
        }
    }

    fn internal(message: String) -> Self {
        ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            code: "internal",
            message,
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match e {
            Error::Inconsistent(_) | Error::Lp(_) => ApiError::internal(e.to_string()),
            other => ApiError::invalid(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.code, "message": self.message });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Default)]
pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl AppState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_sessions(sessions: Vec<Session>) -> Self {
        let map = sessions
            .into_iter()
            .map(|s| (s.id.clone(), Arc::new(Mutex::new(s))))
            .collect();
        AppState {
            sessions: RwLock::new(map),
        }
    }

    async fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no session {id}")))
    }

    /// Copies of every session, ordered by id.
    pub async fn snapshot(&self) -> Vec<Session> {
        let handles: Vec<_> = self.sessions.read().await.values().cloned().collect();
        let mut out = Vec::with_capacity(handles.len());
        for h in handles {
            out.push(h.lock().await.clone());
        }
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }
}

/// Session file format: the sessions with their instances and histories.
pub async fn write_snapshot(state: &AppState, path: &Path) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(&state.snapshot().await).expect("sessions serialize");
    tokio::fs::write(path, text).await
}

pub fn read_snapshot(path: &Path) -> Result<Vec<Session>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_json(&text).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/instance", put(put_instance))
        .route("/sessions/{id}/solve", post(solve_session))
        .route("/sessions/{id}/whatif", post(whatif))
        .route("/sessions/{id}/check", post(check_session))
        .route("/sessions/{id}/ledger", get(ledger))
        .route("/sessions/{id}/envy", get(envy))
        .with_state(state)
}

fn body<T: serde::de::DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    let text = std::str::from_utf8(bytes).map_err(|_| ApiError::invalid("body is not UTF-8".into()))?;
    parse_json(text).map_err(ApiError::from)
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    #[serde(default)]
    instance: Option<InstanceDocument>,
}

async fn create_session(State(state): State<Arc<AppState>>, bytes: Bytes) -> Result<Response, ApiError> {
    let req: CreateBody = if bytes.iter().all(u8::is_ascii_whitespace) {
        CreateBody::default()
    } else {
        body(&bytes)?
    };
    if let Some(doc) = &req.instance {
        doc.to_instance()?;
    }
    let session = Session {
        id: uuid::Uuid::new_v4().simple().to_string(),
        version: 0,
        instance: req.instance,
        history: Vec::new(),
    };
    let summary = SessionSummary::from(&session);
    state
        .sessions
        .write()
        .await
        .insert(session.id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(summary)).into_response())
}

async fn get_session(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<SessionSummary> {
    let handle = state.session(&id).await?;
    let session = handle.lock().await;
    Ok(Json(SessionSummary::from(&*session)))
}

/// Either a full replacement or a list of edits, optionally guarded by the
/// version the client last saw.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceBody {
    #[serde(default)]
    base_version: Option<u64>,
    #[serde(default)]
    instance: Option<InstanceDocument>,
    #[serde(default)]
    edits: Vec<Edit>,
}

async fn put_instance(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    bytes: Bytes,
) -> ApiResult<SessionSummary> {
    let handle = state.session(&id).await?;
    let req: InstanceBody = body(&bytes)?;
    let mut session = handle.lock().await;
    if let Some(base) = req.base_version {
        if base != session.version {
            return Err(ApiError::conflict(format!(
                "edit based on version {base}, session is at version {}",
                session.version
            )));
        }
    }
    let next = match (req.instance, req.edits.is_empty()) {
        (Some(doc), true) => {
            doc.to_instance()?;
            doc
        }
        (Some(doc), false) => apply_edits(&doc, &req.edits)?,
        (None, false) => apply_edits(session.instance()?, &req.edits)?,
        (None, true) => return Err(ApiError::invalid("give an instance or a list of edits".into())),
    };
    session.instance = Some(next);
    session.version += 1;
    Ok(Json(SessionSummary::from(&*session)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveBody {
    notion: Notion,
    #[serde(default)]
    objective: ObjectiveKind,
    #[serde(default)]
    price_sign: PriceSign,
}

impl SolveBody {
    fn request(&self) -> SolveRequest {
        SolveRequest {
            notion: self.notion,
            objective: self.objective,
            price_sign: self.price_sign,
        }
    }
}

async fn run_solve(doc: InstanceDocument, request: SolveRequest) -> Result<SolutionDocument, ApiError> {
    tokio::task::spawn_blocking(move || solve(&doc, &request))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(ApiError::from)
}

async fn solve_session(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    bytes: Bytes,
) -> ApiResult<SolutionDocument> {
    let handle = state.session(&id).await?;
    let req: SolveBody = body(&bytes)?;
    let (doc, version) = {
        let session = handle.lock().await;
        (session.instance()?.clone(), session.version)
    };
    let request = req.request();
    let result = run_solve(doc, request).await?;
    handle.lock().await.history.push(HistoryEntry {
        version,
        request,
        result: result.clone(),
    });
    Ok(Json(result))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WhatIfBody {
    #[serde(default)]
    edit: Option<Edit>,
    #[serde(default)]
    edits: Vec<Edit>,
    notion: Notion,
    #[serde(default)]
    objective: ObjectiveKind,
    #[serde(default)]
    price_sign: PriceSign,
}

/// Solves the session's instance with the edits applied, without keeping
/// them or recording the solve.
async fn whatif(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    bytes: Bytes,
) -> ApiResult<SolutionDocument> {
    let handle = state.session(&id).await?;
    let req: WhatIfBody = body(&bytes)?;
    let doc = handle.lock().await.instance()?.clone();
    let edits: Vec<Edit> = req.edit.into_iter().chain(req.edits).collect();
    let edited = apply_edits(&doc, &edits)?;
    let request = SolveRequest {
        notion: req.notion,
        objective: req.objective,
        price_sign: req.price_sign,
    };
    Ok(Json(run_solve(edited, request).await?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckBody {
    notion: Notion,
    solution: SolutionDocument,
}

async fn check_session(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    bytes: Bytes,
) -> ApiResult<CheckReport> {
    let handle = state.session(&id).await?;
    let req: CheckBody = body(&bytes)?;
    let doc = handle.lock().await.instance()?.clone();
    let report = tokio::task::spawn_blocking(move || check(&doc, &req.solution, req.notion))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(report))
}

async fn ledger(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<NegotiationLedger> {
    let handle = state.session(&id).await?;
    let session = handle.lock().await;
    session
        .last_solution(true)
        .and_then(|s| s.ledger.clone())
        .map(Json)
        .ok_or_else(|| ApiError::not_found("no negotiated solve in this session yet".into()))
}

async fn envy(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<EnvyMatrix> {
    let handle = state.session(&id).await?;
    let session = handle.lock().await;
    let missing = || ApiError::not_found("no solve with a chosen apartment in this session yet".into());
    let last = session
        .history
        .iter()
        .rev()
        .map(|h| &h.result)
        .find(|r| r.chosen.is_some())
        .ok_or_else(missing)?;
    let inst = last.instance.to_instance()?;
    let solution = Solution::new(
        last.assignment.clone().ok_or_else(missing)?,
        last.prices.clone().ok_or_else(missing)?,
        last.chosen.ok_or_else(missing)?,
    );
    Ok(Json(envy_matrix(&inst, &solution)?))
}

/// Port from the command line, then `RENT_SERVICE_PORT`, then 8080.
#[derive(Debug, Clone, clap::Parser)]
#[command(name = "rent-service", about = "HTTP service for multi-apartment rent division")]
pub struct Config {
    #[arg(long, env = "RENT_SERVICE_PORT", default_value_t = 8080)]
    pub port: u16,
    /// Sessions are loaded from this file at startup if it exists and
    /// written back on shutdown.
    #[arg(long)]
    pub snapshot_path: Option<PathBuf>,
}
