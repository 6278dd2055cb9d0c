//! The `project.json` manifest.
//!
//! Brick lists are stored flat, with explicit `end_of_loop`, `else` and
//! `end_if` delimiter entries closing `forever`/`repeat` and `if` bodies.
//! Loading nests them; saving flattens them again. Formulas are stored as
//! their pretty-printed source text. The canonical manifest is pretty JSON
//! with sorted keys, two-space indent and a trailing LF.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::error::ProjectError;
use super::model::{Brick, GameObject, Look, Project, Script, SoundRef, Stage, Trigger};
use crate::formula::{parse_formula, pretty_print, Formula, ParseError};

/// One serialized brick entry, including the delimiter pseudo-bricks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlatBrick {
    Forever,
    Repeat { count: String },
    If { condition: String },
    Else,
    EndIf,
    EndOfLoop,
    Wait { seconds: String },
    Broadcast { message: String },
    PlaceAt { x: String, y: String },
    PointInDirection { degrees: String },
    MoveSteps { steps: String },
    ChangeXBy { dx: String },
    ChangeYBy { dy: String },
    NextLook,
    SwitchLook { look: String },
    Show,
    Hide,
    SetSize { percent: String },
    StartSound { sound: String },
    SetVariable { variable: String, value: String },
    ChangeVariable { variable: String, delta: String },
}

pub const BRICK_KINDS: [&str; 21] = [
    "forever",
    "repeat",
    "if",
    "else",
    "end_if",
    "end_of_loop",
    "wait",
    "broadcast",
    "place_at",
    "point_in_direction",
    "move_steps",
    "change_x_by",
    "change_y_by",
    "next_look",
    "switch_look",
    "show",
    "hide",
    "set_size",
    "start_sound",
    "set_variable",
    "change_variable",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NestError {
    #[error("unbalanced delimiter at index {index}")]
    Unbalanced { index: usize },
    #[error("brick {index}, field '{field}': {source}")]
    Formula {
        index: usize,
        field: &'static str,
        source: ParseError,
    },
}

enum OpenKind {
    Forever,
    Repeat(Formula),
    If(Formula),
}

struct OpenBlock {
    index: usize,
    kind: OpenKind,
    body: Vec<Brick>,
    else_body: Option<Vec<Brick>>,
}

impl OpenBlock {
    fn current(&mut self) -> &mut Vec<Brick> {
        match &mut self.else_body {
            Some(body) => body,
            None => &mut self.body,
        }
    }
}

fn formula(index: usize, field: &'static str, text: &str) -> Result<Formula, NestError> {
    parse_formula(text).map_err(|source| NestError::Formula {
        index,
        field,
        source,
    })
}

/// Converts a flat brick list into nested bodies.
///
/// A stray or mismatched closer is reported at its own index; an `else`
/// outside an `if` (or a second `else`) at the `else`; a block left open at
/// the end at the index of the innermost unclosed opener.
pub fn nest_bricks(flat: &[FlatBrick]) -> Result<Vec<Brick>, NestError> {
    let mut root: Vec<Brick> = Vec::new();
    let mut stack: Vec<OpenBlock> = Vec::new();

    for (index, item) in flat.iter().enumerate() {
        let f = |field, text: &str| formula(index, field, text);
        let brick = match item {
            FlatBrick::Forever | FlatBrick::Repeat { .. } | FlatBrick::If { .. } => {
                let kind = match item {
                    FlatBrick::Forever => OpenKind::Forever,
                    FlatBrick::Repeat { count } => OpenKind::Repeat(f("count", count)?),
                    FlatBrick::If { condition } => OpenKind::If(f("condition", condition)?),
                    _ => unreachable!(),
                };
                stack.push(OpenBlock {
                    index,
                    kind,
                    body: Vec::new(),
                    else_body: None,
                });
                continue;
            }
            FlatBrick::Else => {
                match stack.last_mut() {
                    Some(open @ OpenBlock { kind: OpenKind::If(_), else_body: None, .. }) => {
                        open.else_body = Some(Vec::new());
                    }
                    _ => return Err(NestError::Unbalanced { index }),
                }
                continue;
            }
            FlatBrick::EndOfLoop => match stack.pop() {
                Some(OpenBlock {
                    kind: OpenKind::Forever,
                    body,
                    ..
                }) => Brick::Forever(body),
                Some(OpenBlock {
                    kind: OpenKind::Repeat(count),
                    body,
                    ..
                }) => Brick::Repeat { count, body },
                _ => return Err(NestError::Unbalanced { index }),
            },
            FlatBrick::EndIf => match stack.pop() {
                Some(OpenBlock {
                    kind: OpenKind::If(condition),
                    body,
                    else_body,
                    ..
                }) => Brick::If {
                    condition,
                    then_body: body,
                    else_body: else_body.unwrap_or_default(),
                },
                _ => return Err(NestError::Unbalanced { index }),
            },
            FlatBrick::Wait { seconds } => Brick::Wait(f("seconds", seconds)?),
            FlatBrick::Broadcast { message } => Brick::Broadcast(message.clone()),
            FlatBrick::PlaceAt { x, y } => Brick::PlaceAt {
                x: f("x", x)?,
                y: f("y", y)?,
            },
            FlatBrick::PointInDirection { degrees } => {
                Brick::PointInDirection(f("degrees", degrees)?)
            }
            FlatBrick::MoveSteps { steps } => Brick::MoveSteps(f("steps", steps)?),
            FlatBrick::ChangeXBy { dx } => Brick::ChangeXBy(f("dx", dx)?),
            FlatBrick::ChangeYBy { dy } => Brick::ChangeYBy(f("dy", dy)?),
            FlatBrick::NextLook => Brick::NextLook,
            FlatBrick::SwitchLook { look } => Brick::SwitchLook(look.clone()),
            FlatBrick::Show => Brick::Show,
            FlatBrick::Hide => Brick::Hide,
            FlatBrick::SetSize { percent } => Brick::SetSizePercent(f("percent", percent)?),
            FlatBrick::StartSound { sound } => Brick::StartSound(sound.clone()),
            FlatBrick::SetVariable { variable, value } => Brick::SetVariable {
                name: variable.clone(),
                value: f("value", value)?,
            },
            FlatBrick::ChangeVariable { variable, delta } => Brick::ChangeVariable {
                name: variable.clone(),
                delta: f("delta", delta)?,
            },
        };
        match stack.last_mut() {
            Some(open) => open.current().push(brick),
            None => root.push(brick),
        }
    }

    if let Some(open) = stack.last() {
        return Err(NestError::Unbalanced { index: open.index });
    }
    Ok(root)
}

/// Inverse of [`nest_bricks`]. An `if` with an empty else body is written
/// without an `else` entry.
pub fn flatten_bricks(body: &[Brick]) -> Vec<FlatBrick> {
    let mut out = Vec::new();
    flatten_into(body, &mut out);
    out
}

fn flatten_into(body: &[Brick], out: &mut Vec<FlatBrick>) {
    let p = pretty_print;
    for brick in body {
        let flat = match brick {
            Brick::Forever(inner) => {
                out.push(FlatBrick::Forever);
                flatten_into(inner, out);
                FlatBrick::EndOfLoop
            }
            Brick::Repeat { count, body } => {
                out.push(FlatBrick::Repeat { count: p(count) });
                flatten_into(body, out);
                FlatBrick::EndOfLoop
            }
            Brick::If {
                condition,
                then_body,
                else_body,
            } => {
                out.push(FlatBrick::If {
                    condition: p(condition),
                });
                flatten_into(then_body, out);
                if !else_body.is_empty() {
                    out.push(FlatBrick::Else);
                    flatten_into(else_body, out);
                }
                FlatBrick::EndIf
            }
            Brick::Wait(f) => FlatBrick::Wait { seconds: p(f) },
            Brick::Broadcast(message) => FlatBrick::Broadcast {
                message: message.clone(),
            },
            Brick::PlaceAt { x, y } => FlatBrick::PlaceAt { x: p(x), y: p(y) },
            Brick::PointInDirection(f) => FlatBrick::PointInDirection { degrees: p(f) },
            Brick::MoveSteps(f) => FlatBrick::MoveSteps { steps: p(f) },
            Brick::ChangeXBy(f) => FlatBrick::ChangeXBy { dx: p(f) },
            Brick::ChangeYBy(f) => FlatBrick::ChangeYBy { dy: p(f) },
            Brick::NextLook => FlatBrick::NextLook,
            Brick::SwitchLook(look) => FlatBrick::SwitchLook { look: look.clone() },
            Brick::Show => FlatBrick::Show,
            Brick::Hide => FlatBrick::Hide,
            Brick::SetSizePercent(f) => FlatBrick::SetSize { percent: p(f) },
            Brick::StartSound(sound) => FlatBrick::StartSound {
                sound: sound.clone(),
            },
            Brick::SetVariable { name, value } => FlatBrick::SetVariable {
                variable: name.clone(),
                value: p(value),
            },
            Brick::ChangeVariable { name, delta } => FlatBrick::ChangeVariable {
                variable: name.clone(),
                delta: p(delta),
            },
        };
        out.push(flat);
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectFile {
    name: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    author: String,
    #[serde(default)]
    tags: Vec<String>,
    #[serde(default = "default_locale")]
    locale: String,
    #[serde(default)]
    stage: StageFile,
    #[serde(default)]
    rng_seed: u64,
    background: ObjectFile,
    #[serde(default)]
    objects: Vec<ObjectFile>,
    #[serde(default)]
    variables: BTreeMap<String, f64>,
}

fn default_locale() -> String {
    "en".to_string()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StageFile {
    width: u32,
    height: u32,
}

impl Default for StageFile {
    fn default() -> Self {
        let stage = Stage::default();
        StageFile {
            width: stage.width,
            height: stage.height,
        }
    }
}

fn default_size() -> f64 {
    100.0
}

fn default_visible() -> bool {
    true
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectFile {
    name: String,
    #[serde(default)]
    looks: Vec<LookFile>,
    #[serde(default)]
    sounds: Vec<SoundFile>,
    #[serde(default)]
    scripts: Vec<ScriptFile>,
    #[serde(default)]
    x: f64,
    #[serde(default)]
    y: f64,
    #[serde(default)]
    direction: f64,
    #[serde(default = "default_size")]
    size: f64,
    #[serde(default = "default_visible")]
    visible: bool,
    #[serde(default)]
    variables: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LookFile {
    name: String,
    asset_id: String,
    width: u32,
    height: u32,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SoundFile {
    name: String,
    asset_id: String,
    #[serde(default)]
    duration: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptFile {
    trigger: TriggerFile,
    #[serde(default)]
    bricks: Vec<Value>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum TriggerFile {
    ProgramStarted,
    Tapped,
    BroadcastReceived { message: String },
}

/// Parses manifest bytes into a project without assets and without
/// validation.
pub fn parse_manifest(bytes: &[u8]) -> Result<Project, ProjectError> {
    let file: ProjectFile =
        serde_json::from_slice(bytes).map_err(|e| ProjectError::MalformedJson {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
    let background = object_from_file(file.background, "background")?;
    let objects = file
        .objects
        .into_iter()
        .enumerate()
        .map(|(i, o)| object_from_file(o, &format!("objects[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Project {
        name: file.name,
        description: file.description,
        author: file.author,
        tags: file.tags,
        locale: file.locale,
        stage: Stage {
            width: file.stage.width,
            height: file.stage.height,
        },
        rng_seed: file.rng_seed,
        background,
        objects,
        variables: file.variables,
        assets: BTreeMap::new(),
    })
}

fn object_from_file(file: ObjectFile, location: &str) -> Result<GameObject, ProjectError> {
    let scripts = file
        .scripts
        .into_iter()
        .enumerate()
        .map(|(i, s)| script_from_file(s, &format!("{location}/scripts[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GameObject {
        name: file.name,
        looks: file
            .looks
            .into_iter()
            .map(|l| Look {
                name: l.name,
                asset_id: l.asset_id,
                width: l.width,
                height: l.height,
            })
            .collect(),
        sounds: file
            .sounds
            .into_iter()
            .map(|s| SoundRef {
                name: s.name,
                asset_id: s.asset_id,
                duration: s.duration,
            })
            .collect(),
        scripts,
        x: file.x,
        y: file.y,
        direction: file.direction,
        size: file.size,
        visible: file.visible,
        variables: file.variables,
    })
}

fn script_from_file(file: ScriptFile, location: &str) -> Result<Script, ProjectError> {
    let mut flat = Vec::with_capacity(file.bricks.len());
    for (index, value) in file.bricks.into_iter().enumerate() {
        let kind = value.get("kind").and_then(Value::as_str);
        match kind {
            Some(kind) if BRICK_KINDS.contains(&kind) => {}
            Some(kind) => return Err(ProjectError::UnknownBrickKind(kind.to_string())),
            None => {
                return Err(ProjectError::MalformedBrick {
                    script: location.to_string(),
                    index,
                    message: "missing string field 'kind'".to_string(),
                })
            }
        }
        let brick: FlatBrick =
            serde_json::from_value(value).map_err(|e| ProjectError::MalformedBrick {
                script: location.to_string(),
                index,
                message: e.to_string(),
            })?;
        flat.push(brick);
    }
    let body = nest_bricks(&flat).map_err(|e| match e {
        NestError::Unbalanced { index } => ProjectError::UnbalancedDelimiter {
            script: location.to_string(),
            index,
        },
        NestError::Formula {
            index,
            field,
            source,
        } => ProjectError::Formula {
            location: format!("{location}/bricks[{index}].{field}"),
            source,
        },
    })?;
    let trigger = match file.trigger {
        TriggerFile::ProgramStarted => Trigger::ProgramStarted,
        TriggerFile::Tapped => Trigger::Tapped,
        TriggerFile::BroadcastReceived { message } => Trigger::BroadcastReceived(message),
    };
    Ok(Script { trigger, body })
}

fn object_to_file(object: &GameObject) -> ObjectFile {
    ObjectFile {
        name: object.name.clone(),
        looks: object
            .looks
            .iter()
            .map(|l| LookFile {
                name: l.name.clone(),
                asset_id: l.asset_id.clone(),
                width: l.width,
                height: l.height,
            })
            .collect(),
        sounds: object
            .sounds
            .iter()
            .map(|s| SoundFile {
                name: s.name.clone(),
                asset_id: s.asset_id.clone(),
                duration: s.duration,
            })
            .collect(),
        scripts: object.scripts.iter().map(script_to_file).collect(),
        x: object.x,
        y: object.y,
        direction: object.direction,
        size: object.size,
        visible: object.visible,
        variables: object.variables.clone(),
    }
}

fn script_to_file(script: &Script) -> ScriptFile {
    ScriptFile {
        trigger: match &script.trigger {
            Trigger::ProgramStarted => TriggerFile::ProgramStarted,
            Trigger::Tapped => TriggerFile::Tapped,
            Trigger::BroadcastReceived(message) => TriggerFile::BroadcastReceived {
                message: message.clone(),
            },
        },
        bricks: flatten_bricks(&script.body)
            .iter()
            .map(|b| serde_json::to_value(b).expect("flat bricks serialize"))
            .collect(),
    }
}

/// The manifest as a JSON value. Object keys come out sorted because
/// `serde_json::Map` is ordered.
pub fn manifest_value(project: &Project) -> Value {
    let file = ProjectFile {
        name: project.name.clone(),
        description: project.description.clone(),
        author: project.author.clone(),
        tags: project.tags.clone(),
        locale: project.locale.clone(),
        stage: StageFile {
            width: project.stage.width,
            height: project.stage.height,
        },
        rng_seed: project.rng_seed,
        background: object_to_file(&project.background),
        objects: project.objects.iter().map(object_to_file).collect(),
        variables: project.variables.clone(),
    };
    serde_json::to_value(file).expect("manifest serializes")
}

/// Canonical manifest bytes.
pub fn canonical_manifest(project: &Project) -> Vec<u8> {
    let mut bytes =
        serde_json::to_vec_pretty(&manifest_value(project)).expect("manifest serializes");
    bytes.push(b'\n');
    bytes
}

/// Hex SHA-256 of the canonical manifest.
pub fn manifest_digest(project: &Project) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(canonical_manifest(project)))
}

/// Parses a single object in manifest form, as embedded in backpack files.
pub(crate) fn object_from_value(value: Value, location: &str) -> Result<GameObject, ProjectError> {
    let file: ObjectFile = serde_json::from_value(value).map_err(|e| ProjectError::MalformedJson {
        line: 0,
        column: 0,
        message: e.to_string(),
    })?;
    object_from_file(file, location)
}

pub(crate) fn object_to_value(object: &GameObject) -> Value {
    serde_json::to_value(object_to_file(object)).expect("object serializes")
}

pub(crate) fn script_from_value(value: Value, location: &str) -> Result<Script, ProjectError> {
    let file: ScriptFile = serde_json::from_value(value).map_err(|e| ProjectError::MalformedJson {
        line: 0,
        column: 0,
        message: e.to_string(),
    })?;
    script_from_file(file, location)
}

pub(crate) fn script_to_value(script: &Script) -> Value {
    serde_json::to_value(script_to_file(script)).expect("script serializes")
}
