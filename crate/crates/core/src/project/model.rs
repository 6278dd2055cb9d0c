use std::collections::BTreeMap;
use std::fmt;

use crate::formula::Formula;

pub const DEFAULT_STAGE_WIDTH: u32 = 480;
pub const DEFAULT_STAGE_HEIGHT: u32 = 800;

/// A complete game: one background object plus sprites drawn in list order.
///
/// Stage coordinates are centered: x grows rightward, y upward. Directions are
/// degrees clockwise from up.
#[derive(Debug, Clone, PartialEq)]
pub struct Project {
    pub name: String,
    pub description: String,
    pub author: String,
    pub tags: Vec<String>,
    pub locale: String,
    pub stage: Stage,
    pub rng_seed: u64,
    pub background: GameObject,
    pub objects: Vec<GameObject>,
    pub variables: BTreeMap<String, f64>,
    /// Opaque asset bytes keyed by asset id (the file name under `assets/`).
    pub assets: BTreeMap<String, Vec<u8>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stage {
    pub width: u32,
    pub height: u32,
}

impl Default for Stage {
    fn default() -> Self {
        Stage {
            width: DEFAULT_STAGE_WIDTH,
            height: DEFAULT_STAGE_HEIGHT,
        }
    }
}

impl Project {
    /// An empty project with a bare background named "Background".
    pub fn new(name: impl Into<String>) -> Self {
        Project {
            name: name.into(),
            description: String::new(),
            author: String::new(),
            tags: Vec::new(),
            locale: "en".to_string(),
            stage: Stage::default(),
            rng_seed: 0,
            background: GameObject::new("Background"),
            objects: Vec::new(),
            variables: BTreeMap::new(),
            assets: BTreeMap::new(),
        }
    }

    pub fn object(&self, name: &str) -> Option<&GameObject> {
        self.objects.iter().find(|o| o.name == name)
    }

    /// Background first, then sprites; this is the scheduling and frame order.
    pub fn all_objects(&self) -> impl Iterator<Item = &GameObject> {
        std::iter::once(&self.background).chain(self.objects.iter())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameObject {
    pub name: String,
    pub looks: Vec<Look>,
    pub sounds: Vec<SoundRef>,
    pub scripts: Vec<Script>,
    pub x: f64,
    pub y: f64,
    pub direction: f64,
    pub size: f64,
    pub visible: bool,
    pub variables: BTreeMap<String, f64>,
}

impl GameObject {
    pub fn new(name: impl Into<String>) -> Self {
        GameObject {
            name: name.into(),
            looks: Vec::new(),
            sounds: Vec::new(),
            scripts: Vec::new(),
            x: 0.0,
            y: 0.0,
            direction: 0.0,
            size: 100.0,
            visible: true,
            variables: BTreeMap::new(),
        }
    }

    pub fn look(&self, name: &str) -> Option<&Look> {
        self.looks.iter().find(|l| l.name == name)
    }

    pub fn sound(&self, name: &str) -> Option<&SoundRef> {
        self.sounds.iter().find(|s| s.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Look {
    pub name: String,
    pub asset_id: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoundRef {
    pub name: String,
    pub asset_id: String,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Trigger {
    ProgramStarted,
    Tapped,
    BroadcastReceived(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Script {
    pub trigger: Trigger,
    pub body: Vec<Brick>,
}

impl Script {
    pub fn new(trigger: Trigger, body: Vec<Brick>) -> Self {
        Script { trigger, body }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BrickCategory {
    Control,
    Motion,
    Sound,
    Looks,
    Data,
}

impl fmt::Display for BrickCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BrickCategory::Control => "control",
            BrickCategory::Motion => "motion",
            BrickCategory::Sound => "sound",
            BrickCategory::Looks => "looks",
            BrickCategory::Data => "data",
        })
    }
}

/// One instruction, with loop and branch bodies already nested.
#[derive(Debug, Clone, PartialEq)]
pub enum Brick {
    Forever(Vec<Brick>),
    Repeat {
        count: Formula,
        body: Vec<Brick>,
    },
    If {
        condition: Formula,
        then_body: Vec<Brick>,
        else_body: Vec<Brick>,
    },
    Wait(Formula),
    Broadcast(String),
    PlaceAt {
        x: Formula,
        y: Formula,
    },
    PointInDirection(Formula),
    MoveSteps(Formula),
    ChangeXBy(Formula),
    ChangeYBy(Formula),
    NextLook,
    SwitchLook(String),
    Show,
    Hide,
    SetSizePercent(Formula),
    StartSound(String),
    SetVariable {
        name: String,
        value: Formula,
    },
    ChangeVariable {
        name: String,
        delta: Formula,
    },
}

impl Brick {
    pub fn category(&self) -> BrickCategory {
        match self {
            Brick::Forever(_)
            | Brick::Repeat { .. }
            | Brick::If { .. }
            | Brick::Wait(_)
            | Brick::Broadcast(_) => BrickCategory::Control,
            Brick::PlaceAt { .. }
            | Brick::PointInDirection(_)
            | Brick::MoveSteps(_)
            | Brick::ChangeXBy(_)
            | Brick::ChangeYBy(_) => BrickCategory::Motion,
            Brick::NextLook
            | Brick::SwitchLook(_)
            | Brick::Show
            | Brick::Hide
            | Brick::SetSizePercent(_) => BrickCategory::Looks,
            Brick::StartSound(_) => BrickCategory::Sound,
            Brick::SetVariable { .. } | Brick::ChangeVariable { .. } => BrickCategory::Data,
        }
    }

    /// The formulas this brick evaluates, labelled by field name.
    pub fn formulas(&self) -> Vec<(&'static str, &Formula)> {
        match self {
            Brick::Repeat { count, .. } => vec![("count", count)],
            Brick::If { condition, .. } => vec![("condition", condition)],
            Brick::Wait(f) => vec![("seconds", f)],
            Brick::PlaceAt { x, y } => vec![("x", x), ("y", y)],
            Brick::PointInDirection(f) => vec![("degrees", f)],
            Brick::MoveSteps(f) => vec![("steps", f)],
            Brick::ChangeXBy(f) => vec![("dx", f)],
            Brick::ChangeYBy(f) => vec![("dy", f)],
            Brick::SetSizePercent(f) => vec![("percent", f)],
            Brick::SetVariable { value, .. } => vec![("value", value)],
            Brick::ChangeVariable { delta, .. } => vec![("delta", delta)],
            _ => Vec::new(),
        }
    }

    /// Nested bodies with the path segment name each is addressed by.
    pub fn children(&self) -> Vec<(&'static str, &[Brick])> {
        match self {
            Brick::Forever(body) | Brick::Repeat { body, .. } => vec![("body", body.as_slice())],
            Brick::If {
                then_body,
                else_body,
                ..
            } => vec![("then", then_body.as_slice()), ("else", else_body.as_slice())],
            _ => Vec::new(),
        }
    }

    /// Variable written by this brick, if any.
    pub fn assigned_variable(&self) -> Option<&str> {
        match self {
            Brick::SetVariable { name, .. } | Brick::ChangeVariable { name, .. } => Some(name),
            _ => None,
        }
    }
}

/// Calls `visit` for every brick in `body`, depth first, in source order.
pub fn walk_bricks<'a>(body: &'a [Brick], visit: &mut dyn FnMut(&'a Brick)) {
    for brick in body {
        visit(brick);
        for (_, child) in brick.children() {
            walk_bricks(child, visit);
        }
    }
}

/// Every variable a script reads or writes, in first-use order.
pub fn script_variables(script: &Script) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    walk_bricks(&script.body, &mut |brick| {
        let mut add = |name: &str| {
            if !names.iter().any(|n| n == name) {
                names.push(name.to_string());
            }
        };
        if let Some(name) = brick.assigned_variable() {
            add(name);
        }
        for (_, formula) in brick.formulas() {
            for name in formula.variables() {
                add(name);
            }
        }
    });
    names
}
