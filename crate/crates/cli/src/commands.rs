//! Argument definitions and the batch commands.

use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use brickjam_core::analytics::{
    persistence, read_records, render_dimension, render_persistence, render_text, report, Dimension,
    StatReport,
};
use brickjam_core::backpack::{self, BackpackItem};
use brickjam_core::fixtures;
use brickjam_core::formula::SensorKind;
use brickjam_core::project::{
    has_errors, load_project, read_project, save_project, validate, Project, Severity,
};
use brickjam_core::runtime::{run, Event, InputTrace, RunConfig, SensorTrace, TraceFile, DEFAULT_TICK_RATE};
use brickjam_core::share::{ShareStore, SubmissionMetadata, UploadReceipt};
use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::play::{self, PlayOptions};
use crate::server;

pub const SERVER_ENV: &str = "BRICKJAM_SERVER";
pub const DEFAULT_SERVER: &str = "http://127.0.0.1:8080";

/// Name accepted in place of a bundle path when no such file exists.
pub const BUILTIN_BUNDLE: &str = "bird_demo";
pub const BUILTIN_ALICE: &str = "alice_fixture.jsonl";
pub const BUILTIN_NOLB: &str = "nolb_fixture.jsonl";

#[derive(Debug, Parser)]
#[command(name = "brickjam", version, about = "Run, package, share and analyse brick-based games")]
pub struct Cli {
    /// Machine-readable output on stdout; errors as JSON on stderr.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute a project headlessly and print its run digest.
    Run(RunArgs),
    /// Check a bundle and list its diagnostics.
    Validate {
        /// Bundle directory or archive (or `bird_demo`).
        bundle: String,
    },
    /// Pack a bundle directory into an archive.
    Pack {
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Copy elements between projects.
    #[command(subcommand)]
    Backpack(BackpackCommand),
    /// Add every sprite of the second project to the first.
    Merge {
        a: String,
        b: String,
        /// Destination; `.zip` writes an archive, anything else a directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Upload a bundle to a share server.
    Upload(UploadArgs),
    /// Jam statistics or persistence metrics.
    Stats(StatsArgs),
    /// Host the share service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        /// Store directory, created if missing.
        #[arg(long, default_value = "brickjam-store")]
        store: PathBuf,
    },
    /// Host an interactive play session for a browser player.
    Play(PlayArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Bundle directory or archive (or `bird_demo`).
    pub bundle: String,
    /// Sensor and tap trace (JSON). `compass<degrees>.json` names a constant
    /// compass reading when no such file exists.
    #[arg(long)]
    pub trace: Option<String>,
    /// Ticks to run after the start tick.
    #[arg(long, default_value_t = 600)]
    pub ticks: u64,
    #[arg(long, default_value_t = DEFAULT_TICK_RATE)]
    pub rate: u32,
    /// Overrides the project's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the frame log as JSON lines.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the event log as JSON lines.
    #[arg(long)]
    pub events: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum BackpackCommand {
    /// Copy the element at a selector into a backpack item.
    Pack {
        bundle: String,
        /// Element path, e.g. `objects[0]` or `objects[0]/scripts[1]`.
        selector: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Insert a backpack item into a project.
    Unpack {
        item: PathBuf,
        #[arg(long)]
        target: String,
        /// Object receiving a script, look or sound.
        #[arg(long)]
        into: Option<String>,
        /// Destination; `.zip` writes an archive, anything else a directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct UploadArgs {
    pub bundle: PathBuf,
    /// Submission metadata as a JSON file; overrides the other fields.
    #[arg(long, conflicts_with_all = ["tool", "title", "author", "tag"])]
    pub metadata: Option<PathBuf>,
    #[arg(long, required_unless_present = "metadata")]
    pub tool: Option<String>,
    #[arg(long)]
    pub title: Option<String>,
    #[arg(long)]
    pub author: Option<String>,
    /// Repeatable.
    #[arg(long)]
    pub tag: Vec<String>,
    #[arg(long, env = SERVER_ENV, default_value = DEFAULT_SERVER)]
    pub server: String,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["records", "jam", "events"])))]
pub struct StatsArgs {
    /// Submission records as JSON lines (or `alice_fixture.jsonl`, `nolb_fixture.jsonl`).
    #[arg(long)]
    pub records: Option<String>,
    /// Jam id on the share server.
    #[arg(long)]
    pub jam: Option<String>,
    /// Event log from `run --events`; reports persistence per script.
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Show a single dimension.
    #[arg(long, value_parser = parse_dimension, conflicts_with = "events")]
    pub dimension: Option<Dimension>,
    #[arg(long, env = SERVER_ENV, default_value = DEFAULT_SERVER)]
    pub server: String,
}

fn parse_dimension(s: &str) -> std::result::Result<Dimension, String> {
    s.parse().map_err(|_| {
        let names: Vec<&str> = Dimension::ALL.iter().map(|d| d.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

#[derive(Debug, Args)]
pub struct PlayArgs {
    pub bundle: String,
    #[arg(long, default_value_t = 8090)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
    #[arg(long, default_value_t = DEFAULT_TICK_RATE)]
    pub rate: u32,
    /// Start paused; the client resumes or steps.
    #[arg(long)]
    pub paused: bool,
    /// End the session after this tick.
    #[arg(long)]
    pub max_ticks: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// What a batch command prints: text for people, JSON for `--json`.
pub struct Output {
    pub text: String,
    pub json: Value,
    /// Nonzero exit even though the command ran (e.g. validation errors).
    pub failed: bool,
}

impl Output {
    fn new(text: impl Into<String>, json: Value) -> Self {
        Output {
            text: text.into(),
            json,
            failed: false,
        }
    }

    fn of<T: Serialize>(text: impl Into<String>, value: &T) -> Self {
        Output::new(text, serde_json::to_value(value).expect("outputs serialize"))
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn execute(cli: Cli) -> Result<Output> {
    let json = cli.json;
    match cli.command {
        Command::Run(args) => run_cmd(args),
        Command::Validate { bundle } => validate_cmd(&bundle),
        Command::Pack { dir, out } => {
            let project = read_project(&dir)?;
            let digest = save_project(&project, &out, true)?;
            Ok(Output::new(digest.clone(), json!({ "digest": digest, "out": out })))
        }
        Command::Backpack(cmd) => backpack_cmd(cmd),
        Command::Merge { a, b, out } => {
            let merged = backpack::merge_projects(&load_bundle(&a)?, &load_bundle(&b)?);
            save_output(&merged, &out)
        }
        Command::Upload(args) => upload_cmd(args),
        Command::Stats(args) => stats_cmd(args),
        Command::Serve { port, bind, store } => serve_cmd(&bind, port, &store, json),
        Command::Play(args) => play_cmd(args, json),
    }
}

/// Loads and validates a bundle, accepting the built-in demo name.
pub fn load_bundle(name: &str) -> Result<Project> {
    let path = Path::new(name);
    if !path.exists() && name == BUILTIN_BUNDLE {
        return Ok(fixtures::bird_demo());
    }
    Ok(load_project(path)?)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn load_trace(name: &str) -> Result<(SensorTrace, InputTrace)> {
    let path = Path::new(name);
    if !path.exists() {
        let degrees = name
            .strip_prefix("compass")
            .and_then(|s| s.strip_suffix(".json"))
            .and_then(|s| s.parse::<f64>().ok())
            .filter(|d| d.is_finite());
        if let Some(d) = degrees {
            return Ok((SensorTrace::constant(SensorKind::CompassDirection, d), InputTrace::default()));
        }
    }
    Ok(TraceFile::parse(&read_text(path)?)?)
}

fn run_cmd(args: RunArgs) -> Result<Output> {
    let project = load_bundle(&args.bundle)?;
    let mut cfg = RunConfig {
        tick_rate: args.rate,
        rng_seed: args.seed,
        ..RunConfig::ticks(args.ticks)
    };
    if let Some(trace) = &args.trace {
        let (sensors, inputs) = load_trace(trace)?;
        cfg = cfg.with_sensors(sensors).with_inputs(inputs);
    }
    let output = run(&project, cfg)?;
    if let Some(path) = &args.out {
        write_file(path, &output.frames.to_json_lines())?;
    }
    if let Some(path) = &args.events {
        let mut lines = Vec::new();
        for event in &output.events {
            serde_json::to_writer(&mut lines, event).expect("events serialize");
            lines.push(b'\n');
        }
        write_file(path, &lines)?;
    }
    Ok(Output::new(
        output.digest.clone(),
        json!({
            "digest": output.digest,
            "ticks": args.ticks,
            "frames": output.frames.len(),
            "events": output.events.len(),
        }),
    ))
}

fn validate_cmd(bundle: &str) -> Result<Output> {
    let path = Path::new(bundle);
    let project = if !path.exists() && bundle == BUILTIN_BUNDLE {
        fixtures::bird_demo()
    } else {
        read_project(path)?
    };
    let diagnostics = validate(&project);
    let failed = has_errors(&diagnostics);
    let text = if diagnostics.is_empty() {
        "ok".to_string()
    } else {
        diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
    };
    let errors = diagnostics.iter().filter(|d| d.severity() == Severity::Error).count();
    Ok(Output {
        failed,
        ..Output::new(
            text,
            json!({
                "valid": !failed,
                "errors": errors,
                "warnings": diagnostics.len() - errors,
                "diagnostics": diagnostics,
            }),
        )
    })
}

/// Saves a project where `out` asks: `.zip` packs, otherwise a directory.
fn save_output(project: &Project, out: &Path) -> Result<Output> {
    let packed = out.extension().is_some_and(|e| e.eq_ignore_ascii_case("zip"));
    let digest = save_project(project, out, packed)?;
    Ok(Output::new(
        digest.clone(),
        json!({ "digest": digest, "out": out, "objects": project.objects.len() }),
    ))
}

fn backpack_cmd(cmd: BackpackCommand) -> Result<Output> {
    match cmd {
        BackpackCommand::Pack { bundle, selector, out } => {
            let item = backpack::pack(&load_bundle(&bundle)?, &selector)?;
            item.write(&out)?;
            Ok(Output::new(
                format!("{} packed from {}", item.kind(), item.provenance.project),
                json!({
                    "kind": item.kind(),
                    "project": item.provenance.project,
                    "digest": item.provenance.digest,
                    "variables": item.variables,
                    "assets": item.assets.keys().collect::<Vec<_>>(),
                    "out": out,
                }),
            ))
        }
        BackpackCommand::Unpack {
            item,
            target,
            into,
            out,
        } => {
            let item = BackpackItem::read(&item)?;
            let project = backpack::unpack(&item, &load_bundle(&target)?, into.as_deref())?;
            save_output(&project, &out)
        }
    }
}

fn metadata_from(args: &UploadArgs) -> Result<SubmissionMetadata> {
    if let Some(path) = &args.metadata {
        return serde_json::from_str(&read_text(path)?)
            .map_err(|e| CliError::new("malformed_json", format!("{}: {e}", path.display())));
    }
    let mut meta = SubmissionMetadata::new(args.tool.clone().unwrap_or_default());
    meta.title = args.title.clone().unwrap_or_default();
    meta.author = args.author.clone().unwrap_or_default();
    meta.tags = args.tag.clone();
    Ok(meta)
}

fn http_client() -> Result<reqwest::blocking::Client> {
    reqwest::blocking::Client::builder()
        .build()
        .map_err(|e| CliError::new("http_failure", e.to_string()))
}

/// Decodes a server reply, turning `{code, message}` bodies into errors.
fn server_reply<T: serde::de::DeserializeOwned>(resp: reqwest::blocking::Response) -> Result<T> {
    let status = resp.status();
    let body = resp
        .bytes()
        .map_err(|e| CliError::new("http_failure", e.to_string()))?;
    if status.is_success() {
        return serde_json::from_slice(&body)
            .map_err(|e| CliError::new("bad_response", format!("server sent unexpected JSON: {e}")));
    }
    let v: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
    let code = v["code"].as_str().unwrap_or("server_error");
    let message = v["message"]
        .as_str()
        .map_or_else(|| format!("server answered {status}"), str::to_string);
    let mut err = CliError::new(code, message);
    if let Some(diags) = v["diagnostics"].as_array() {
        // diagnostics from the server are shown in the message text only
        for d in diags {
            if let Some(m) = d["message"].as_str() {
                err.message.push_str(&format!("\n  {}: {m}", d["path"].as_str().unwrap_or("")));
            }
        }
    }
    Err(err)
}

fn upload_cmd(args: UploadArgs) -> Result<Output> {
    let meta = metadata_from(&args)?;
    let bytes = if args.bundle.is_dir() {
        brickjam_core::project::pack_project(&read_project(&args.bundle)?)?
    } else {
        fs::read(&args.bundle).map_err(|e| CliError::io(&args.bundle, e))?
    };
    let file_name = args
        .bundle
        .file_name()
        .map_or_else(|| "bundle.zip".to_string(), |n| n.to_string_lossy().into_owned());
    let form = reqwest::blocking::multipart::Form::new()
        .part(
            "bundle",
            reqwest::blocking::multipart::Part::bytes(bytes).file_name(file_name),
        )
        .text("metadata", serde_json::to_string(&meta).expect("metadata serializes"));
    let url = format!("{}/projects", args.server.trim_end_matches('/'));
    let resp = http_client()?
        .post(&url)
        .multipart(form)
        .send()
        .map_err(|e| CliError::new("http_failure", format!("{url}: {e}")))?;
    let receipt: UploadReceipt = server_reply(resp)?;
    let mut text = receipt.id.clone();
    if let Some(dup) = &receipt.duplicate_of {
        text.push_str(&format!(" (same bundle as {dup})"));
    }
    Ok(Output::of(text, &receipt))
}

fn load_records(name: &str) -> Result<String> {
    let path = Path::new(name);
    if !path.exists() {
        match name {
            BUILTIN_ALICE => return Ok(fixtures::alice_jsonl().to_string()),
            BUILTIN_NOLB => return Ok(fixtures::nolb_jsonl().to_string()),
            _ => {}
        }
    }
    read_text(path)
}

fn parse_events(text: &str) -> Result<Vec<Event>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| CliError::new("parse_error", format!("line {}: {e}", i + 1)))
        })
        .collect()
}

fn stats_cmd(args: StatsArgs) -> Result<Output> {
    if let Some(path) = &args.events {
        let report = persistence(&parse_events(&read_text(path)?)?);
        return Ok(Output::of(render_persistence(&report), &report));
    }
    let report: StatReport = if let Some(name) = &args.records {
        report(&read_records(&load_records(name)?)?)
    } else {
        let jam = args.jam.as_deref().expect("clap requires a source");
        let url = format!("{}/jams/{jam}/stats", args.server.trim_end_matches('/'));
        let resp = http_client()?
            .get(&url)
            .send()
            .map_err(|e| CliError::new("http_failure", format!("{url}: {e}")))?;
        server_reply(resp)?
    };
    match args.dimension {
        Some(d) => {
            let table = report.dimension(d);
            Ok(Output::of(render_dimension(table), table))
        }
        None => Ok(Output::of(render_text(&report), &report)),
    }
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::new("io_failure", e.to_string()))
}

async fn bind(host: &str, port: u16) -> Result<tokio::net::TcpListener> {
    tokio::net::TcpListener::bind((host, port))
        .await
        .map_err(|e| CliError::new("bind_failure", format!("{host}:{port}: {e}")))
}

/// Announces the address on stdout before serving; tests read this line.
fn announce(addr: SocketAddr, extra: Value, json: bool) {
    let url = format!("http://{addr}");
    let mut out = std::io::stdout().lock();
    if json {
        let mut v = json!({ "url": url });
        if let (Some(obj), Value::Object(more)) = (v.as_object_mut(), extra) {
            obj.extend(more);
        }
        let _ = writeln!(out, "{v}");
    } else {
        let _ = writeln!(out, "listening on {url}");
    }
    let _ = out.flush();
}

async fn shutdown_signal() {
    let _ = tokio::signal::ctrl_c().await;
}

fn serve_cmd(host: &str, port: u16, store: &Path, json: bool) -> Result<Output> {
    let store = ShareStore::open(store)?;
    let report = store.recovery().clone();
    let rt = runtime()?;
    rt.block_on(async {
        let listener = bind(host, port).await?;
        let addr = listener.local_addr().map_err(|e| CliError::new("io_failure", e.to_string()))?;
        announce(addr, json!({ "recovery": report }), json);
        axum::serve(listener, server::router(store))
            .with_graceful_shutdown(shutdown_signal())
            .await
            .map_err(|e| CliError::new("io_failure", e.to_string()))
    })?;
    Ok(Output::new("", Value::Null))
}

fn play_cmd(args: PlayArgs, json: bool) -> Result<Output> {
    let project = load_bundle(&args.bundle)?;
    let options = PlayOptions {
        tick_rate: args.rate,
        seed: args.seed,
        max_ticks: args.max_ticks,
        start_paused: args.paused,
    };
    let rt = runtime()?;
    rt.block_on(async {
        let server = play::start(project, options)?;
        let listener = bind(&args.bind, args.port).await?;
        let addr = listener.local_addr().map_err(|e| CliError::new("io_failure", e.to_string()))?;
        announce(addr, json!({ "session": server.session_id }), json);
        axum::serve(listener, server.router.clone())
            .with_graceful_shutdown(shutdown_signal())
            .await
            .map_err(|e| CliError::new("io_failure", e.to_string()))
    })?;
    Ok(Output::new("", Value::Null))
}
