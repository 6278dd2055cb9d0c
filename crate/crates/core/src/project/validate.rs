use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::model::{Brick, GameObject, Project};
use super::path::ObjectRef;
use crate::formula::{is_variable_name, DEFAULT_DEPTH_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Issue {
    DuplicateName { scope: String, name: String },
    EmptyName,
    AssetMissing { id: String },
    InvalidAssetId { id: String },
    UnreferencedAsset { id: String },
    InvalidStage,
    InvalidTag { tag: String },
    InvalidVariableName { name: String },
    NonFinite { field: &'static str },
    NonPositiveSize,
    InvalidLookSize,
    InvalidDuration,
    DanglingLook { name: String },
    DanglingSound { name: String },
    UnknownVariable { name: String },
    FormulaTooDeep { field: &'static str },
    EmptyForever,
}

impl Issue {
    pub fn severity(&self) -> Severity {
        match self {
            Issue::UnreferencedAsset { .. } | Issue::EmptyForever => Severity::Warning,
            _ => Severity::Error,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Issue::DuplicateName { .. } => "duplicate_name",
            Issue::EmptyName => "empty_name",
            Issue::AssetMissing { .. } => "asset_missing",
            Issue::InvalidAssetId { .. } => "invalid_asset_id",
            Issue::UnreferencedAsset { .. } => "unreferenced_asset",
            Issue::InvalidStage => "invalid_stage",
            Issue::InvalidTag { .. } => "invalid_tag",
            Issue::InvalidVariableName { .. } => "invalid_variable_name",
            Issue::NonFinite { .. } => "non_finite",
            Issue::NonPositiveSize => "non_positive_size",
            Issue::InvalidLookSize => "invalid_look_size",
            Issue::InvalidDuration => "invalid_duration",
            Issue::DanglingLook { .. } => "dangling_look",
            Issue::DanglingSound { .. } => "dangling_sound",
            Issue::UnknownVariable { .. } => "unknown_variable",
            Issue::FormulaTooDeep { .. } => "formula_too_deep",
            Issue::EmptyForever => "empty_forever",
        }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::DuplicateName { scope, name } => write!(f, "name '{name}' is used twice in {scope}"),
            Issue::EmptyName => f.write_str("name is empty"),
            Issue::AssetMissing { id } => write!(f, "asset '{id}' is not in the bundle"),
            Issue::InvalidAssetId { id } => write!(f, "'{id}' is not a usable asset file name"),
            Issue::UnreferencedAsset { id } => write!(f, "asset '{id}' is never used"),
            Issue::InvalidStage => f.write_str("stage width and height must be positive"),
            Issue::InvalidTag { tag } => write!(f, "tag '{tag}' must be a '#' followed by text"),
            Issue::InvalidVariableName { name } => {
                write!(f, "'{name}' cannot be used as a variable name")
            }
            Issue::NonFinite { field } => write!(f, "{field} is not a finite number"),
            Issue::NonPositiveSize => f.write_str("size must be greater than 0"),
            Issue::InvalidLookSize => f.write_str("look width and height must be positive"),
            Issue::InvalidDuration => f.write_str("sound duration must be 0 or more"),
            Issue::DanglingLook { name } => write!(f, "object has no look named '{name}'"),
            Issue::DanglingSound { name } => write!(f, "object has no sound named '{name}'"),
            Issue::UnknownVariable { name } => write!(f, "variable '{name}' does not exist"),
            Issue::FormulaTooDeep { field } => {
                write!(f, "{field} nests deeper than {DEFAULT_DEPTH_LIMIT}")
            }
            Issue::EmptyForever => f.write_str("forever loop has an empty body"),
        }
    }
}

/// A validation finding, located by element path (see [`super::path`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub issue: Issue,
    pub path: String,
}

impl Diagnostic {
    pub fn severity(&self) -> Severity {
        self.issue.severity()
    }

    pub fn is_error(&self) -> bool {
        self.severity() == Severity::Error
    }

    pub fn message(&self) -> String {
        self.issue.to_string()
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity() {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{level}[{}] {}: {}", self.issue.code(), self.path, self.issue)
    }
}

impl Serialize for Diagnostic {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("Diagnostic", 4)?;
        s.serialize_field("severity", &self.severity())?;
        s.serialize_field("code", self.issue.code())?;
        s.serialize_field("path", &self.path)?;
        s.serialize_field("message", &self.message())?;
        s.end()
    }
}

pub fn is_valid_asset_id(id: &str) -> bool {
    !id.is_empty()
        && id != "."
        && id != ".."
        && !id.contains(['/', '\\', '\0'])
        && !id.chars().any(char::is_control)
}

fn is_valid_tag(tag: &str) -> bool {
    tag.len() > 1 && tag.starts_with('#') && !tag.chars().any(char::is_whitespace)
}

struct Checker<'a> {
    project: &'a Project,
    out: Vec<Diagnostic>,
}

impl<'a> Checker<'a> {
    fn push(&mut self, path: impl Into<String>, issue: Issue) {
        self.out.push(Diagnostic {
            issue,
            path: path.into(),
        });
    }

    fn finite(&mut self, path: &str, field: &'static str, value: f64) {
        if !value.is_finite() {
            self.push(path, Issue::NonFinite { field });
        }
    }

    fn variables(&mut self, prefix: &str, vars: &BTreeMap<String, f64>) {
        for (name, value) in vars {
            let path = format!("{prefix}variables[{name}]");
            if !is_variable_name(name) {
                self.push(&path, Issue::InvalidVariableName { name: name.clone() });
            }
            self.finite(&path, "value", *value);
        }
    }

    fn asset(&mut self, path: &str, id: &str) {
        if !is_valid_asset_id(id) {
            self.push(path, Issue::InvalidAssetId { id: id.to_string() });
        } else if !self.project.assets.contains_key(id) {
            self.push(path, Issue::AssetMissing { id: id.to_string() });
        }
    }

    fn object(&mut self, object_ref: ObjectRef, object: &'a GameObject) {
        let base = object_ref.path();
        self.finite(&base, "x", object.x);
        self.finite(&base, "y", object.y);
        self.finite(&base, "direction", object.direction);
        if !object.size.is_finite() {
            self.push(&base, Issue::NonFinite { field: "size" });
        } else if object.size <= 0.0 {
            self.push(&base, Issue::NonPositiveSize);
        }
        self.variables(&format!("{base}/"), &object.variables);

        let mut look_names = BTreeSet::new();
        for (i, look) in object.looks.iter().enumerate() {
            let path = format!("{base}/looks[{i}]");
            if look.name.is_empty() {
                self.push(&path, Issue::EmptyName);
            } else if !look_names.insert(look.name.as_str()) {
                self.push(
                    &path,
                    Issue::DuplicateName {
                        scope: format!("{base}/looks"),
                        name: look.name.clone(),
                    },
                );
            }
            if look.width == 0 || look.height == 0 {
                self.push(&path, Issue::InvalidLookSize);
            }
            self.asset(&path, &look.asset_id);
        }

        let mut sound_names = BTreeSet::new();
        for (i, sound) in object.sounds.iter().enumerate() {
            let path = format!("{base}/sounds[{i}]");
            if sound.name.is_empty() {
                self.push(&path, Issue::EmptyName);
            } else if !sound_names.insert(sound.name.as_str()) {
                self.push(
                    &path,
                    Issue::DuplicateName {
                        scope: format!("{base}/sounds"),
                        name: sound.name.clone(),
                    },
                );
            }
            if !(sound.duration.is_finite() && sound.duration >= 0.0) {
                self.push(&path, Issue::InvalidDuration);
            }
            self.asset(&path, &sound.asset_id);
        }

        for (i, script) in object.scripts.iter().enumerate() {
            self.bricks(object, &format!("{base}/scripts[{i}]/body"), &script.body);
        }
    }

    fn known_variable(&self, object: &GameObject, name: &str) -> bool {
        object.variables.contains_key(name) || self.project.variables.contains_key(name)
    }

    fn bricks(&mut self, object: &'a GameObject, prefix: &str, body: &'a [Brick]) {
        for (i, brick) in body.iter().enumerate() {
            let path = format!("{prefix}[{i}]");
            match brick {
                Brick::SwitchLook(name) if object.look(name).is_none() => {
                    self.push(&path, Issue::DanglingLook { name: name.clone() });
                }
                Brick::StartSound(name) if object.sound(name).is_none() => {
                    self.push(&path, Issue::DanglingSound { name: name.clone() });
                }
                Brick::Forever(inner) if inner.is_empty() => {
                    self.push(&path, Issue::EmptyForever);
                }
                _ => {}
            }
            if let Some(name) = brick.assigned_variable() {
                if !self.known_variable(object, name) {
                    self.push(&path, Issue::UnknownVariable { name: name.to_string() });
                }
            }
            for (field, formula) in brick.formulas() {
                if formula.depth() > DEFAULT_DEPTH_LIMIT {
                    self.push(&path, Issue::FormulaTooDeep { field });
                }
                for name in formula.variables() {
                    if !self.known_variable(object, name) && brick.assigned_variable() != Some(name) {
                        self.push(&path, Issue::UnknownVariable { name: name.to_string() });
                    }
                }
            }
            for (segment, child) in brick.children() {
                self.bricks(object, &format!("{path}/{segment}"), child);
            }
        }
    }
}

/// Checks every project invariant. An empty result means the project is
/// valid; warnings alone do not make it invalid.
pub fn validate(project: &Project) -> Vec<Diagnostic> {
    let mut c = Checker {
        project,
        out: Vec::new(),
    };
    if project.stage.width == 0 || project.stage.height == 0 {
        c.push("stage", Issue::InvalidStage);
    }
    for (i, tag) in project.tags.iter().enumerate() {
        if !is_valid_tag(tag) {
            c.push(format!("tags[{i}]"), Issue::InvalidTag { tag: tag.clone() });
        }
    }
    c.variables("", &project.variables);

    let mut names = BTreeSet::new();
    let objects = std::iter::once((ObjectRef::Background, &project.background)).chain(
        project
            .objects
            .iter()
            .enumerate()
            .map(|(i, o)| (ObjectRef::Sprite(i), o)),
    );
    for (object_ref, object) in objects {
        if object.name.is_empty() {
            c.push(object_ref.path(), Issue::EmptyName);
        } else if !names.insert(object.name.as_str()) {
            c.push(
                object_ref.path(),
                Issue::DuplicateName {
                    scope: "objects".to_string(),
                    name: object.name.clone(),
                },
            );
        }
        c.object(object_ref, object);
    }

    let referenced: BTreeSet<&str> = project
        .all_objects()
        .flat_map(|o| {
            o.looks
                .iter()
                .map(|l| l.asset_id.as_str())
                .chain(o.sounds.iter().map(|s| s.asset_id.as_str()))
        })
        .collect();
    for id in project.assets.keys() {
        let path = format!("assets[{id}]");
        if !is_valid_asset_id(id) {
            c.push(&path, Issue::InvalidAssetId { id: id.clone() });
        } else if !referenced.contains(id.as_str()) {
            c.push(&path, Issue::UnreferencedAsset { id: id.clone() });
        }
    }
    c.out
}

pub fn has_errors(diagnostics: &[Diagnostic]) -> bool {
    diagnostics.iter().any(Diagnostic::is_error)
}
