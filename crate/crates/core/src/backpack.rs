//! Copying objects, scripts, looks and sounds between projects, and merging
//! whole projects.
//!
//! Nothing here mutates its inputs; every operation returns a new project.
//! Name clashes are resolved by keeping both and suffixing the newcomer with
//! ` (2)`, ` (3)`, ... (the lowest suffix not already taken). Asset ids that
//! clash with different bytes get the suffix before the extension.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::project::format::{
    object_from_value, object_to_value, script_from_value, script_to_value,
};
use crate::project::{
    manifest_digest, resolve, script_variables, validate, walk_bricks, Brick, Diagnostic,
    Element, GameObject, Look, ObjectRef, Project, ProjectError, Script, SoundRef,
};

pub const BPK_FORMAT: &str = "brickjam-backpack";
pub const BPK_VERSION: u32 = 1;
pub const BPK_EXTENSION: &str = "bpk";

#[derive(Debug, Error)]
pub enum BackpackError {
    #[error("selector '{0}' does not resolve")]
    SelectorUnresolved(String),
    #[error("'{0}' is not an object, script, look or sound")]
    NotPackable(String),
    #[error("cannot unpack a {kind}: {reason}")]
    IncompatibleKind { kind: ItemKind, reason: String },
    #[error("target has no object named '{0}'")]
    UnknownObject(String),
    #[error("item is not self-contained ({} error(s))", .0.len())]
    InvalidItem(Vec<Diagnostic>),
    #[error("malformed backpack file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Project(#[from] ProjectError),
    #[error("i/o failure at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl BackpackError {
    pub fn code(&self) -> &'static str {
        match self {
            BackpackError::SelectorUnresolved(_) => "selector_unresolved",
            BackpackError::NotPackable(_) => "not_packable",
            BackpackError::IncompatibleKind { .. } => "incompatible_kind",
            BackpackError::UnknownObject(_) => "unknown_object",
            BackpackError::InvalidItem(_) => "invalid_item",
            BackpackError::Malformed(_) => "malformed_item",
            BackpackError::Project(e) => e.code(),
            BackpackError::Io { .. } => "io_failure",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    Object,
    Script,
    Look,
    Sound,
}

impl std::fmt::Display for ItemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ItemKind::Object => "object",
            ItemKind::Script => "script",
            ItemKind::Look => "look",
            ItemKind::Sound => "sound",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Object(GameObject),
    /// A script travels with the looks and sounds its bricks name.
    Script {
        script: Script,
        looks: Vec<Look>,
        sounds: Vec<SoundRef>,
    },
    Look(Look),
    Sound(SoundRef),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableScope {
    Global,
    /// Local to the object the script is unpacked into.
    Local,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RequiredVariable {
    pub name: String,
    pub scope: VariableScope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub project: String,
    pub digest: String,
    pub packed_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackpackItem {
    pub payload: Payload,
    /// Variables the payload reads or writes that it does not define itself.
    pub variables: Vec<RequiredVariable>,
    pub assets: BTreeMap<String, Vec<u8>>,
    pub provenance: Provenance,
}

impl BackpackItem {
    pub fn kind(&self) -> ItemKind {
        match self.payload {
            Payload::Object(_) => ItemKind::Object,
            Payload::Script { .. } => ItemKind::Script,
            Payload::Look(_) => ItemKind::Look,
            Payload::Sound(_) => ItemKind::Sound,
        }
    }

    /// Checks that the item unpacks cleanly into an empty project.
    pub fn check(&self) -> Result<(), BackpackError> {
        let mut empty = Project::new("");
        let dest = match self.kind() {
            ItemKind::Object => None,
            _ => {
                empty.objects.push(GameObject::new("target"));
                Some("target")
            }
        };
        let result = unpack(self, &empty, dest)?;
        let errors: Vec<Diagnostic> = validate(&result)
            .into_iter()
            .filter(Diagnostic::is_error)
            .collect();
        if errors.is_empty() {
            Ok(())
        } else {
            Err(BackpackError::InvalidItem(errors))
        }
    }

    pub fn to_bpk(&self) -> Vec<u8> {
        let payload = match &self.payload {
            Payload::Object(o) => object_to_value(o),
            Payload::Script {
                script,
                looks,
                sounds,
            } => serde_json::json!({
                "script": script_to_value(script),
                "looks": looks.iter().map(LookWire::from).collect::<Vec<_>>(),
                "sounds": sounds.iter().map(SoundWire::from).collect::<Vec<_>>(),
            }),
            Payload::Look(l) => serde_json::to_value(LookWire::from(l)).expect("look serializes"),
            Payload::Sound(s) => {
                serde_json::to_value(SoundWire::from(s)).expect("sound serializes")
            }
        };
        let file = BpkFile {
            format: BPK_FORMAT.to_string(),
            version: BPK_VERSION,
            kind: self.kind(),
            payload,
            variables: self.variables.clone(),
            assets: self
                .assets
                .iter()
                .map(|(id, bytes)| (id.clone(), BASE64.encode(bytes)))
                .collect(),
            provenance: self.provenance.clone(),
        };
        let value = serde_json::to_value(file).expect("item serializes");
        let mut bytes = serde_json::to_vec_pretty(&value).expect("item serializes");
        bytes.push(b'\n');
        bytes
    }

    /// Parses a `.bpk` file and checks the item is self-contained.
    pub fn from_bpk(bytes: &[u8]) -> Result<Self, BackpackError> {
        let malformed = |e: &dyn std::fmt::Display| BackpackError::Malformed(e.to_string());
        let file: BpkFile = serde_json::from_slice(bytes).map_err(|e| malformed(&e))?;
        if file.format != BPK_FORMAT {
            return Err(malformed(&format!("format is '{}'", file.format)));
        }
        if file.version != BPK_VERSION {
            return Err(malformed(&format!("unsupported version {}", file.version)));
        }
        let payload = match file.kind {
            ItemKind::Object => Payload::Object(object_from_value(file.payload, "payload")?),
            ItemKind::Script => {
                let wire: ScriptPayloadWire =
                    serde_json::from_value(file.payload).map_err(|e| malformed(&e))?;
                Payload::Script {
                    script: script_from_value(wire.script, "payload/script")?,
                    looks: wire.looks.into_iter().map(Look::from).collect(),
                    sounds: wire.sounds.into_iter().map(SoundRef::from).collect(),
                }
            }
            ItemKind::Look => {
                let wire: LookWire =
                    serde_json::from_value(file.payload).map_err(|e| malformed(&e))?;
                Payload::Look(wire.into())
            }
            ItemKind::Sound => {
                let wire: SoundWire =
                    serde_json::from_value(file.payload).map_err(|e| malformed(&e))?;
                Payload::Sound(wire.into())
            }
        };
        let mut assets = BTreeMap::new();
        for (id, text) in file.assets {
            let bytes = BASE64.decode(text).map_err(|e| malformed(&e))?;
            assets.insert(id, bytes);
        }
        let item = BackpackItem {
            payload,
            variables: file.variables,
            assets,
            provenance: file.provenance,
        };
        item.check()?;
        Ok(item)
    }

    pub fn read(path: &Path) -> Result<Self, BackpackError> {
        let bytes = std::fs::read(path).map_err(|source| BackpackError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_bpk(&bytes)
    }

    pub fn write(&self, path: &Path) -> Result<(), BackpackError> {
        std::fs::write(path, self.to_bpk()).map_err(|source| BackpackError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BpkFile {
    format: String,
    version: u32,
    kind: ItemKind,
    payload: Value,
    #[serde(default)]
    variables: Vec<RequiredVariable>,
    #[serde(default)]
    assets: BTreeMap<String, String>,
    provenance: Provenance,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptPayloadWire {
    script: Value,
    #[serde(default)]
    looks: Vec<LookWire>,
    #[serde(default)]
    sounds: Vec<SoundWire>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LookWire {
    name: String,
    asset_id: String,
    width: u32,
    height: u32,
}

impl From<&Look> for LookWire {
    fn from(l: &Look) -> Self {
        LookWire {
            name: l.name.clone(),
            asset_id: l.asset_id.clone(),
            width: l.width,
            height: l.height,
        }
    }
}

impl From<LookWire> for Look {
    fn from(w: LookWire) -> Self {
        Look {
            name: w.name,
            asset_id: w.asset_id,
            width: w.width,
            height: w.height,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SoundWire {
    name: String,
    asset_id: String,
    #[serde(default)]
    duration: f64,
}

impl From<&SoundRef> for SoundWire {
    fn from(s: &SoundRef) -> Self {
        SoundWire {
            name: s.name.clone(),
            asset_id: s.asset_id.clone(),
            duration: s.duration,
        }
    }
}

impl From<SoundWire> for SoundRef {
    fn from(w: SoundWire) -> Self {
        SoundRef {
            name: w.name,
            asset_id: w.asset_id,
            duration: w.duration,
        }
    }
}

/// `base` if unused, otherwise `base (n)` for the smallest `n >= 2` not in
/// `taken`.
pub fn unique_name(base: &str, taken: &BTreeSet<&str>) -> String {
    if !taken.contains(base) {
        return base.to_string();
    }
    (2u64..)
        .map(|n| format!("{base} ({n})"))
        .find(|candidate| !taken.contains(candidate.as_str()))
        .expect("some suffix is free")
}

/// Like [`unique_name`] but keeps a file extension last: `bird.png` becomes
/// `bird (2).png`.
pub fn unique_asset_id(id: &str, taken: &BTreeSet<&str>) -> String {
    if !taken.contains(id) {
        return id.to_string();
    }
    let (stem, ext) = match id.rsplit_once('.') {
        Some((stem, ext)) if !stem.is_empty() => (stem, format!(".{ext}")),
        _ => (id, String::new()),
    };
    (2u64..)
        .map(|n| format!("{stem} ({n}){ext}"))
        .find(|candidate| !taken.contains(candidate.as_str()))
        .expect("some suffix is free")
}

fn asset_ids<'a>(looks: &'a [Look], sounds: &'a [SoundRef]) -> impl Iterator<Item = &'a str> {
    looks
        .iter()
        .map(|l| l.asset_id.as_str())
        .chain(sounds.iter().map(|s| s.asset_id.as_str()))
}

fn copy_assets<'a>(
    project: &Project,
    ids: impl Iterator<Item = &'a str>,
) -> BTreeMap<String, Vec<u8>> {
    ids.filter_map(|id| project.assets.get(id).map(|b| (id.to_string(), b.clone())))
        .collect()
}

/// Variables used by an object's scripts that it does not define locally.
fn object_requirements(object: &GameObject) -> Vec<RequiredVariable> {
    let mut names = BTreeSet::new();
    for script in &object.scripts {
        for name in script_variables(script) {
            if !object.variables.contains_key(&name) {
                names.insert(name);
            }
        }
    }
    names
        .into_iter()
        .map(|name| RequiredVariable {
            name,
            scope: VariableScope::Global,
        })
        .collect()
}

fn script_requirements(object: &GameObject, script: &Script) -> Vec<RequiredVariable> {
    let mut out: Vec<RequiredVariable> = script_variables(script)
        .into_iter()
        .map(|name| {
            let scope = if object.variables.contains_key(&name) {
                VariableScope::Local
            } else {
                VariableScope::Global
            };
            RequiredVariable { name, scope }
        })
        .collect();
    out.sort();
    out
}

fn script_media(object: &GameObject, script: &Script) -> (Vec<Look>, Vec<SoundRef>) {
    let mut look_names = BTreeSet::new();
    let mut sound_names = BTreeSet::new();
    walk_bricks(&script.body, &mut |brick| match brick {
        Brick::SwitchLook(name) => {
            look_names.insert(name.as_str());
        }
        Brick::StartSound(name) => {
            sound_names.insert(name.as_str());
        }
        _ => {}
    });
    let looks = object
        .looks
        .iter()
        .filter(|l| look_names.contains(l.name.as_str()))
        .cloned()
        .collect();
    let sounds = object
        .sounds
        .iter()
        .filter(|s| sound_names.contains(s.name.as_str()))
        .cloned()
        .collect();
    (looks, sounds)
}

fn object_item(project: &Project, object: &GameObject, provenance: Provenance) -> BackpackItem {
    BackpackItem {
        payload: Payload::Object(object.clone()),
        variables: object_requirements(object),
        assets: copy_assets(project, asset_ids(&object.looks, &object.sounds)),
        provenance,
    }
}

/// Copies the element at `selector` out of `project`, stamped `packed_at`.
pub fn pack_at(
    project: &Project,
    selector: &str,
    packed_at: DateTime<Utc>,
) -> Result<BackpackItem, BackpackError> {
    let element = resolve(project, selector)
        .ok_or_else(|| BackpackError::SelectorUnresolved(selector.to_string()))?;
    let provenance = Provenance {
        project: project.name.clone(),
        digest: manifest_digest(project),
        packed_at,
    };
    let item = match element {
        Element::Object(_, object) => object_item(project, object, provenance),
        Element::Script(owner, _, script) => {
            let object = owner.get(project).expect("resolved owner exists");
            let (looks, sounds) = script_media(object, script);
            BackpackItem {
                assets: copy_assets(project, asset_ids(&looks, &sounds)),
                variables: script_requirements(object, script),
                payload: Payload::Script {
                    script: script.clone(),
                    looks,
                    sounds,
                },
                provenance,
            }
        }
        Element::Look(_, look) => BackpackItem {
            assets: copy_assets(project, std::iter::once(look.asset_id.as_str())),
            payload: Payload::Look(look.clone()),
            variables: Vec::new(),
            provenance,
        },
        Element::Sound(_, sound) => BackpackItem {
            assets: copy_assets(project, std::iter::once(sound.asset_id.as_str())),
            payload: Payload::Sound(sound.clone()),
            variables: Vec::new(),
            provenance,
        },
        _ => return Err(BackpackError::NotPackable(selector.to_string())),
    };
    Ok(item)
}

/// [`pack_at`] stamped with the current time.
pub fn pack(project: &Project, selector: &str) -> Result<BackpackItem, BackpackError> {
    pack_at(project, selector, Utc::now())
}

/// Adds the item's assets to `target`, returning how ids were renamed.
fn merge_assets(
    target: &mut Project,
    assets: &BTreeMap<String, Vec<u8>>,
) -> BTreeMap<String, String> {
    let mut renamed = BTreeMap::new();
    for (id, bytes) in assets {
        let new_id = match target.assets.get(id) {
            None => id.clone(),
            Some(existing) if existing == bytes => id.clone(),
            Some(_) => {
                let reuse = target
                    .assets
                    .iter()
                    .find(|(other, b)| *b == bytes && other.as_str() != id)
                    .map(|(other, _)| other.clone());
                match reuse {
                    Some(other) => other,
                    None => {
                        let taken: BTreeSet<&str> = target.assets.keys().map(String::as_str).collect();
                        unique_asset_id(id, &taken)
                    }
                }
            }
        };
        target.assets.entry(new_id.clone()).or_insert_with(|| bytes.clone());
        if new_id != *id {
            renamed.insert(id.clone(), new_id);
        }
    }
    renamed
}

fn rename_look(look: &mut Look, renamed: &BTreeMap<String, String>) {
    if let Some(id) = renamed.get(&look.asset_id) {
        look.asset_id = id.clone();
    }
}

fn rename_sound(sound: &mut SoundRef, renamed: &BTreeMap<String, String>) {
    if let Some(id) = renamed.get(&sound.asset_id) {
        sound.asset_id = id.clone();
    }
}

fn find_object<'a>(project: &'a mut Project, name: &str) -> Option<&'a mut GameObject> {
    if project.background.name == name {
        return Some(&mut project.background);
    }
    project.objects.iter_mut().find(|o| o.name == name)
}

fn object_names(project: &Project) -> BTreeSet<&str> {
    project.all_objects().map(|o| o.name.as_str()).collect()
}

fn unpack_object(result: &mut Project, mut object: GameObject, renamed: &BTreeMap<String, String>) {
    object.looks.iter_mut().for_each(|l| rename_look(l, renamed));
    object.sounds.iter_mut().for_each(|s| rename_sound(s, renamed));
    object.name = unique_name(&object.name, &object_names(result));
    result.objects.push(object);
}

fn ensure_variable(result: &mut Project, dest: Option<&str>, var: &RequiredVariable) {
    let local_hit = dest
        .and_then(|d| result.all_objects().find(|o| o.name == d))
        .is_some_and(|o| o.variables.contains_key(&var.name));
    if local_hit || result.variables.contains_key(&var.name) {
        return;
    }
    match (var.scope, dest) {
        (VariableScope::Local, Some(d)) => {
            let object = find_object(result, d).expect("destination exists");
            object.variables.insert(var.name.clone(), 0.0);
        }
        _ => {
            result.variables.insert(var.name.clone(), 0.0);
        }
    }
}

/// Returns a copy of `target` with the item added. Objects become new
/// sprites; scripts, looks and sounds go into the object named `dest`.
pub fn unpack(
    item: &BackpackItem,
    target: &Project,
    dest: Option<&str>,
) -> Result<Project, BackpackError> {
    let kind = item.kind();
    if kind != ItemKind::Object {
        let Some(name) = dest else {
            return Err(BackpackError::IncompatibleKind {
                kind,
                reason: "a destination object is required".into(),
            });
        };
        if !object_names(target).contains(name) {
            return Err(BackpackError::UnknownObject(name.to_string()));
        }
    }

    let mut result = target.clone();
    let renamed = merge_assets(&mut result, &item.assets);
    match &item.payload {
        Payload::Object(object) => {
            unpack_object(&mut result, object.clone(), &renamed);
            for var in &item.variables {
                ensure_variable(&mut result, None, var);
            }
        }
        Payload::Script {
            script,
            looks,
            sounds,
        } => {
            let dest = dest.expect("checked above");
            let object = find_object(&mut result, dest).expect("checked above");
            for look in looks {
                if object.look(&look.name).is_none() {
                    let mut look = look.clone();
                    rename_look(&mut look, &renamed);
                    object.looks.push(look);
                }
            }
            for sound in sounds {
                if object.sound(&sound.name).is_none() {
                    let mut sound = sound.clone();
                    rename_sound(&mut sound, &renamed);
                    object.sounds.push(sound);
                }
            }
            object.scripts.push(script.clone());
            for var in &item.variables {
                ensure_variable(&mut result, Some(dest), var);
            }
        }
        Payload::Look(look) => {
            let object = find_object(&mut result, dest.expect("checked above")).expect("checked");
            let mut look = look.clone();
            rename_look(&mut look, &renamed);
            let taken: BTreeSet<&str> = object.looks.iter().map(|l| l.name.as_str()).collect();
            look.name = unique_name(&look.name, &taken);
            object.looks.push(look);
        }
        Payload::Sound(sound) => {
            let object = find_object(&mut result, dest.expect("checked above")).expect("checked");
            let mut sound = sound.clone();
            rename_sound(&mut sound, &renamed);
            let taken: BTreeSet<&str> = object.sounds.iter().map(|s| s.name.as_str()).collect();
            sound.name = unique_name(&sound.name, &taken);
            object.sounds.push(sound);
        }
    }
    Ok(result)
}

/// `a` plus every sprite of `b`, in order. `a` keeps its background, stage,
/// metadata and variable values; globals only `b` has are added with `b`'s
/// values. Not commutative.
pub fn merge_projects(a: &Project, b: &Project) -> Project {
    let mut result = a.clone();
    for (name, value) in &b.variables {
        result.variables.entry(name.clone()).or_insert(*value);
    }
    let provenance = Provenance {
        project: b.name.clone(),
        digest: String::new(),
        packed_at: DateTime::<Utc>::UNIX_EPOCH,
    };
    for (i, object) in b.objects.iter().enumerate() {
        let item = object_item(b, object, provenance.clone());
        result = unpack(&item, &result, None)
            .unwrap_or_else(|e| panic!("object {i} of a valid project unpacks: {e}"));
    }
    result
}

/// Convenience for selectors naming a sprite by index.
pub fn object_selector(index: usize) -> String {
    ObjectRef::Sprite(index).path()
}
