//! Interactive play sessions for a browser player.
//!
//! ```text
//! GET /sessions                          [{id, project}]
//! GET /sessions/{id}                     session description
//! GET /sessions/{id}/socket              websocket, see below
//! GET /sessions/{id}/assets/{asset_id}   raw asset bytes
//! GET /sessions/{id}/trace               inputs recorded since the last reset
//! GET /sessions/{id}/frames              frame log as JSON lines
//! ```
//!
//! Socket messages are JSON objects carrying `"v": 1` and a `"type"`.
//! Client to server: `tap {x, y}`, `sensor_set {kind, value}`, `pause`,
//! `resume`, `reset`, `step {ticks}`. Server to client: `session`,
//! `frame`, `event`, `ended`, `error`. Frames are sent in tick order to
//! every connected client; inputs apply from the next tick.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use brickjam_core::formula::SensorKind;
use brickjam_core::project::Project;
use brickjam_core::runtime::{Event, Frame, ObjectState, RunConfig, RunError, Runtime, TraceFile};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::sync::broadcast;

use crate::server::ApiError;

pub const PROTOCOL_VERSION: u32 = 1;
const CHANNEL_CAPACITY: usize = 8192;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LookInfo {
    pub name: String,
    pub asset_id: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ObjectInfo {
    pub name: String,
    pub looks: Vec<LookInfo>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SessionInfo {
    pub session: String,
    pub project: String,
    pub tick_rate: u32,
    pub stage_width: u32,
    pub stage_height: u32,
    pub paused: bool,
    pub next_tick: u64,
    pub objects: Vec<ObjectInfo>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FrameObject {
    #[serde(flatten)]
    pub state: ObjectState,
    /// Asset shown by the current look, when the object has one.
    pub look_asset: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Session(SessionInfo),
    Frame {
        tick: u64,
        objects: Vec<FrameObject>,
        globals: BTreeMap<String, f64>,
    },
    Event {
        event: Event,
    },
    Ended {
        tick: u64,
        digest: String,
    },
    Error {
        code: String,
        message: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Tap { x: f64, y: f64 },
    SensorSet { kind: SensorKind, value: f64 },
    Pause,
    Resume,
    Reset,
    /// Advance while paused.
    Step {
        #[serde(default = "one")]
        ticks: u64,
    },
}

fn one() -> u64 {
    1
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    v: u32,
    #[serde(flatten)]
    body: &'a T,
}

/// Serializes a message with the protocol version.
pub fn encode<T: Serialize>(msg: &T) -> String {
    serde_json::to_string(&Envelope {
        v: PROTOCOL_VERSION,
        body: msg,
    })
    .expect("messages serialize")
}

/// Parses a client message, checking the version first.
pub fn decode_client(text: &str) -> Result<ClientMessage, ServerMessage> {
    let err = |code: &str, message: String| ServerMessage::Error {
        code: code.into(),
        message,
    };
    let mut value: Value =
        serde_json::from_str(text).map_err(|e| err("malformed_message", e.to_string()))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| err("malformed_message", "expected a JSON object".into()))?;
    match obj.remove("v").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(PROTOCOL_VERSION) => {}
        other => {
            return Err(err(
                "unsupported_version",
                format!("expected v {PROTOCOL_VERSION}, got {other:?}"),
            ))
        }
    }
    serde_json::from_value(value).map_err(|e| err("malformed_message", e.to_string()))
}

#[derive(Debug, Clone)]
pub struct PlayOptions {
    pub tick_rate: u32,
    pub seed: Option<u64>,
    /// Stop after this tick; `None` runs until the server exits.
    pub max_ticks: Option<u64>,
    pub start_paused: bool,
}

impl Default for PlayOptions {
    fn default() -> Self {
        PlayOptions {
            tick_rate: brickjam_core::runtime::DEFAULT_TICK_RATE,
            seed: None,
            max_ticks: None,
            start_paused: false,
        }
    }
}

struct Session {
    id: String,
    project: Project,
    options: PlayOptions,
    runtime: Runtime,
    paused: bool,
    ended: bool,
    events_sent: usize,
    tx: broadcast::Sender<String>,
}

impl Session {
    fn config(project: &Project, options: &PlayOptions) -> RunConfig {
        RunConfig {
            tick_rate: options.tick_rate,
            rng_seed: options.seed.or(Some(project.rng_seed)),
            ..RunConfig::ticks(options.max_ticks.unwrap_or(u64::MAX - 1))
        }
    }

    fn info(&self) -> SessionInfo {
        let objects = self
            .project
            .all_objects()
            .map(|o| ObjectInfo {
                name: o.name.clone(),
                looks: o
                    .looks
                    .iter()
                    .map(|l| LookInfo {
                        name: l.name.clone(),
                        asset_id: l.asset_id.clone(),
                        width: l.width,
                        height: l.height,
                    })
                    .collect(),
            })
            .collect();
        SessionInfo {
            session: self.id.clone(),
            project: self.project.name.clone(),
            tick_rate: self.options.tick_rate,
            stage_width: self.project.stage.width,
            stage_height: self.project.stage.height,
            paused: self.paused,
            next_tick: self.runtime.next_tick(),
            objects,
        }
    }

    fn frame_message(&self, frame: &Frame) -> ServerMessage {
        let objects = self
            .project
            .all_objects()
            .zip(&frame.objects)
            .map(|(o, state)| FrameObject {
                state: state.clone(),
                look_asset: o.looks.get(state.look_index).map(|l| l.asset_id.clone()),
            })
            .collect();
        ServerMessage::Frame {
            tick: frame.tick,
            objects,
            globals: frame.globals.clone(),
        }
    }

    fn publish(&self, msg: &ServerMessage) {
        // no subscribers is fine
        let _ = self.tx.send(encode(msg));
    }

    fn advance(&mut self) {
        if self.ended {
            return;
        }
        let frame = self.runtime.step().clone();
        self.publish(&self.frame_message(&frame));
        let events: Vec<Event> = self.runtime.events()[self.events_sent..].to_vec();
        self.events_sent += events.len();
        for event in events {
            self.publish(&ServerMessage::Event { event });
        }
        if let Some(max) = self.options.max_ticks {
            if frame.tick >= max {
                self.ended = true;
                self.publish(&ServerMessage::Ended {
                    tick: frame.tick,
                    digest: self.runtime.frames().digest(),
                });
            }
        }
    }

    fn apply(&mut self, msg: ClientMessage) -> Result<(), ServerMessage> {
        match msg {
            ClientMessage::Tap { x, y } => {
                if !x.is_finite() || !y.is_finite() {
                    return Err(ServerMessage::Error {
                        code: "bad_tap".into(),
                        message: "tap coordinates must be finite".into(),
                    });
                }
                self.runtime.tap(x, y);
            }
            ClientMessage::SensorSet { kind, value } => {
                if !value.is_finite() {
                    return Err(ServerMessage::Error {
                        code: "bad_sensor_value".into(),
                        message: "sensor values must be finite".into(),
                    });
                }
                self.runtime.set_sensor(kind, value);
            }
            ClientMessage::Pause => self.paused = true,
            ClientMessage::Resume => self.paused = false,
            ClientMessage::Reset => {
                self.runtime = Runtime::new(&self.project, Self::config(&self.project, &self.options))
                    .expect("configuration was accepted at start");
                self.events_sent = 0;
                self.ended = false;
                self.publish(&ServerMessage::Session(self.info()));
            }
            ClientMessage::Step { ticks } => {
                for _ in 0..ticks {
                    self.advance();
                }
            }
        }
        Ok(())
    }
}

type Shared = Arc<Mutex<Session>>;

#[derive(Clone)]
struct Sessions {
    by_id: Arc<BTreeMap<String, Shared>>,
}

impl Sessions {
    fn get(&self, id: &str) -> Result<Shared, ApiError> {
        self.by_id
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session '{id}'")))
    }
}

fn lock(s: &Shared) -> std::sync::MutexGuard<'_, Session> {
    s.lock().unwrap_or_else(|p| p.into_inner())
}

/// A running play server: the router plus the ticker driving its session.
pub struct PlayServer {
    pub router: Router,
    pub session_id: String,
    ticker: Option<tokio::task::JoinHandle<()>>,
}

impl Drop for PlayServer {
    fn drop(&mut self) {
        if let Some(t) = self.ticker.take() {
            t.abort();
        }
    }
}

/// Builds the session and starts its ticker on the current tokio runtime.
pub fn start(project: Project, options: PlayOptions) -> Result<PlayServer, RunError> {
    let runtime = Runtime::new(&project, Session::config(&project, &options))?;
    let (tx, _) = broadcast::channel(CHANNEL_CAPACITY);
    let id = "1".to_string();
    let session = Arc::new(Mutex::new(Session {
        id: id.clone(),
        paused: options.start_paused,
        project,
        options: options.clone(),
        runtime,
        ended: false,
        events_sent: 0,
        tx,
    }));

    let period = Duration::from_secs_f64(1.0 / f64::from(options.tick_rate));
    let ticking = session.clone();
    let ticker = tokio::spawn(async move {
        let mut interval = tokio::time::interval(period);
        interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        loop {
            interval.tick().await;
            let mut s = lock(&ticking);
            if !s.paused {
                s.advance();
            }
        }
    });

    let sessions = Sessions {
        by_id: Arc::new(BTreeMap::from([(id.clone(), session)])),
    };
    let router = Router::new()
        .route("/sessions", get(list_sessions))
        .route("/sessions/{id}", get(describe))
        .route("/sessions/{id}/socket", get(socket))
        .route("/sessions/{id}/assets/{asset_id}", get(asset))
        .route("/sessions/{id}/trace", get(trace))
        .route("/sessions/{id}/frames", get(frames))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .with_state(sessions);
    Ok(PlayServer {
        router,
        session_id: id,
        ticker: Some(ticker),
    })
}

#[derive(Serialize)]
struct SessionSummary {
    id: String,
    project: String,
}

async fn list_sessions(State(sessions): State<Sessions>) -> Json<Vec<SessionSummary>> {
    Json(
        sessions
            .by_id
            .iter()
            .map(|(id, s)| SessionSummary {
                id: id.clone(),
                project: lock(s).project.name.clone(),
            })
            .collect(),
    )
}

async fn describe(State(sessions): State<Sessions>, Path(id): Path<String>) -> Result<Json<SessionInfo>, ApiError> {
    let s = sessions.get(&id)?;
    let info = lock(&s).info();
    Ok(Json(info))
}

fn content_type(asset_id: &str) -> &'static str {
    let ext = asset_id.rsplit_once('.').map(|(_, e)| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("gif") => "image/gif",
        Some("svg") => "image/svg+xml",
        Some("wav") => "audio/wav",
        Some("mp3") => "audio/mpeg",
        Some("ogg") => "audio/ogg",
        _ => "application/octet-stream",
    }
}

async fn asset(
    State(sessions): State<Sessions>,
    Path((id, asset_id)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let s = sessions.get(&id)?;
    let bytes = lock(&s).project.assets.get(&asset_id).cloned().ok_or_else(|| {
        ApiError::new(StatusCode::NOT_FOUND, "unknown_asset", format!("no asset '{asset_id}'"))
    })?;
    Ok(([(header::CONTENT_TYPE, content_type(&asset_id))], bytes).into_response())
}

async fn trace(State(sessions): State<Sessions>, Path(id): Path<String>) -> Result<Json<TraceFile>, ApiError> {
    let s = sessions.get(&id)?;
    let (sensors, inputs) = lock(&s).runtime.recorded_traces();
    Ok(Json(TraceFile::from_traces(&sensors, &inputs)))
}

async fn frames(State(sessions): State<Sessions>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let s = sessions.get(&id)?;
    let body = lock(&s).runtime.frames().to_json_lines();
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

async fn socket(
    State(sessions): State<Sessions>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    let s = sessions.get(&id)?;
    Ok(ws.on_upgrade(move |socket| serve_socket(socket, s)))
}

async fn serve_socket(mut socket: WebSocket, session: Shared) {
    let (hello, mut rx) = {
        let s = lock(&session);
        (encode(&ServerMessage::Session(s.info())), s.tx.subscribe())
    };
    if socket.send(Message::Text(hello.into())).await.is_err() {
        return;
    }
    loop {
        tokio::select! {
            incoming = socket.recv() => {
                let text = match incoming {
                    Some(Ok(Message::Text(t))) => t.to_string(),
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                    Some(Ok(_)) => continue,
                };
                let result = decode_client(&text).and_then(|msg| lock(&session).apply(msg));
                if let Err(reply) = result {
                    if socket.send(Message::Text(encode(&reply).into())).await.is_err() {
                        return;
                    }
                }
            }
            outgoing = rx.recv() => {
                let text = match outgoing {
                    Ok(t) => t,
                    Err(broadcast::error::RecvError::Lagged(n)) => encode(&ServerMessage::Error {
                        code: "lagged".into(),
                        message: format!("{n} messages dropped; fetch /frames to resynchronize"),
                    }),
                    Err(broadcast::error::RecvError::Closed) => return,
                };
                if socket.send(Message::Text(text.into())).await.is_err() {
                    return;
                }
            }
        }
    }
}
