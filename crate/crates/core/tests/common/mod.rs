//! Shared generators and oracles for the integration tests.

#![allow(dead_code)]

pub mod reference;

use std::collections::BTreeSet;

use brickjam_core::formula::{BinaryOp, Formula, Function, SensorKind, UnaryOp};
use brickjam_core::project::{Brick, GameObject, Look, Project, Script, SoundRef, Trigger};
use brickjam_core::rng::Rng;
use proptest::prelude::*;

pub struct Gen {
    rng: Rng,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen {
            rng: Rng::seed_from_u64(seed),
        }
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.rng.next_u64() % n as u64) as usize
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.rng.next_f64() < p
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len())]
    }

    pub fn number(&mut self) -> f64 {
        match self.below(5) {
            0 => self.below(10) as f64,
            1 => self.below(1000) as f64 / 10.0,
            2 => self.rng.next_f64() * 1e6,
            3 => self.rng.next_f64(),
            _ => [0.2, 0.5, 90.0, 360.0, 1e-7, 2.5e20][self.below(6)],
        }
    }

    pub fn formula(&mut self, depth: usize, vars: &[String]) -> Formula {
        if depth == 0 || self.chance(0.3) {
            return match self.below(3) {
                0 if !vars.is_empty() => Formula::variable(self.pick(vars).clone()),
                1 => Formula::Sensor(*self.pick(&SensorKind::ALL)),
                _ => Formula::number(self.number()),
            };
        }
        match self.below(6) {
            0 => Formula::unary(
                *self.pick(&[UnaryOp::Neg, UnaryOp::Not]),
                self.formula(depth - 1, vars),
            ),
            1 => {
                let function = *self.pick(&Function::ALL);
                let args = (0..function.arity())
                    .map(|_| self.formula(depth - 1, vars))
                    .collect();
                Formula::call(function, args)
            }
            _ => Formula::binary(
                *self.pick(&BinaryOp::ALL),
                self.formula(depth - 1, vars),
                self.formula(depth - 1, vars),
            ),
        }
    }
}

const PROJECT_NAMES: [&str; 4] = ["Bird Demo", "Jam Entry", "Maze", "Untitled"];
const TAGS: [&str; 3] = ["#AliceGameJam", "#demo", "#nolb"];
const GLOBALS: [&str; 4] = ["score", "lives", "speed", "level"];
const LOCALS: [&str; 3] = ["hp", "speed", "step_count"];
const OBJECT_NAMES: [&str; 5] = ["bird", "cat", "Bird", "bird (2)", "dog"];
const LOOK_NAMES: [&str; 4] = ["wings up", "wings down", "idle", "idle (2)"];
const SOUND_NAMES: [&str; 2] = ["chirp", "meow"];
const IMAGE_IDS: [&str; 4] = ["a.png", "b.png", "bird_up.png", "sky.png"];
const SOUND_IDS: [&str; 2] = ["chirp.wav", "meow.wav"];
const MESSAGES: [&str; 2] = ["go", "stop"];

fn asset_bytes(g: &mut Gen) -> Vec<u8> {
    (0..1 + g.below(2)).map(|_| g.below(2) as u8).collect()
}

fn ensure_asset(g: &mut Gen, project: &mut Project, id: &str) {
    if !project.assets.contains_key(id) {
        let bytes = asset_bytes(g);
        project.assets.insert(id.to_string(), bytes);
    }
}

fn random_bricks(
    g: &mut Gen,
    depth: usize,
    object: &GameObject,
    vars: &[String],
) -> Vec<Brick> {
    let len = 1 + g.below(3);
    (0..len).map(|_| random_brick(g, depth, object, vars)).collect()
}

fn random_brick(g: &mut Gen, depth: usize, object: &GameObject, vars: &[String]) -> Brick {
    let f = |g: &mut Gen| g.formula(2, vars);
    loop {
        let brick = match g.below(16) {
            0 if depth > 0 => Brick::Forever(random_bricks(g, depth - 1, object, vars)),
            1 if depth > 0 => Brick::Repeat {
                count: f(g),
                body: random_bricks(g, depth - 1, object, vars),
            },
            2 if depth > 0 => Brick::If {
                condition: f(g),
                then_body: random_bricks(g, depth - 1, object, vars),
                else_body: if g.chance(0.5) {
                    random_bricks(g, depth - 1, object, vars)
                } else {
                    Vec::new()
                },
            },
            3 => Brick::Wait(f(g)),
            4 => Brick::Broadcast(g.pick(&MESSAGES).to_string()),
            5 => Brick::PlaceAt { x: f(g), y: f(g) },
            6 => Brick::PointInDirection(f(g)),
            7 => Brick::MoveSteps(f(g)),
            8 => Brick::ChangeXBy(f(g)),
            9 => Brick::ChangeYBy(f(g)),
            10 => Brick::NextLook,
            11 if !object.looks.is_empty() => {
                Brick::SwitchLook(g.pick(&object.looks).name.clone())
            }
            12 if !object.sounds.is_empty() => {
                Brick::StartSound(g.pick(&object.sounds).name.clone())
            }
            13 => [Brick::Show, Brick::Hide][g.below(2)].clone(),
            14 if !vars.is_empty() => Brick::SetVariable {
                name: g.pick(vars).clone(),
                value: f(g),
            },
            15 if !vars.is_empty() => Brick::ChangeVariable {
                name: g.pick(vars).clone(),
                delta: f(g),
            },
            _ => continue,
        };
        return brick;
    }
}

fn random_object(g: &mut Gen, project: &mut Project, name: &str, max_depth: usize) -> GameObject {
    let mut object = GameObject::new(name);
    object.x = g.below(400) as f64 - 200.0;
    object.y = g.below(600) as f64 - 300.0;
    object.direction = g.below(360) as f64;
    object.size = 10.0 + g.below(200) as f64;
    object.visible = g.chance(0.8);
    for local in LOCALS {
        if g.chance(0.3) {
            object.variables.insert(local.to_string(), g.below(10) as f64);
        }
    }
    for look in LOOK_NAMES {
        if g.chance(0.4) {
            let id = *g.pick(&IMAGE_IDS);
            ensure_asset(g, project, id);
            object.looks.push(Look {
                name: look.to_string(),
                asset_id: id.to_string(),
                width: 1 + g.below(128) as u32,
                height: 1 + g.below(128) as u32,
            });
        }
    }
    for sound in SOUND_NAMES {
        if g.chance(0.3) {
            let id = *g.pick(&SOUND_IDS);
            ensure_asset(g, project, id);
            object.sounds.push(SoundRef {
                name: sound.to_string(),
                asset_id: id.to_string(),
                duration: g.below(50) as f64 / 10.0,
            });
        }
    }
    let vars: Vec<String> = object
        .variables
        .keys()
        .chain(project.variables.keys())
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    for _ in 0..g.below(3) {
        let trigger = match g.below(3) {
            0 => Trigger::ProgramStarted,
            1 => Trigger::Tapped,
            _ => Trigger::BroadcastReceived(g.pick(&MESSAGES).to_string()),
        };
        let body = random_bricks(g, max_depth, &object, &vars);
        object.scripts.push(Script::new(trigger, body));
    }
    object
}

/// A valid project with nesting depth at most `max_depth`. Names are drawn
/// from small pools so that independently generated projects collide.
pub fn random_project_with_depth(seed: u64, max_depth: usize) -> Project {
    let mut g = Gen::new(seed);
    let mut project = Project::new(*g.pick(&PROJECT_NAMES));
    project.rng_seed = g.below(1000) as u64;
    project.author = ["", "ada", "lin"][g.below(3)].to_string();
    for tag in TAGS {
        if g.chance(0.4) {
            project.tags.push(tag.to_string());
        }
    }
    for name in GLOBALS {
        if g.chance(0.5) {
            project.variables.insert(name.to_string(), g.below(100) as f64 - 50.0);
        }
    }
    let background_name = ["Background", "Stage"][g.below(2)];
    project.background = random_object(&mut g, &mut project, background_name, max_depth);
    project.background.x = 0.0;
    project.background.y = 0.0;
    let mut taken = BTreeSet::from([background_name.to_string()]);
    for _ in 0..g.below(5) {
        let name = *g.pick(&OBJECT_NAMES);
        if taken.insert(name.to_string()) {
            let object = random_object(&mut g, &mut project, name, max_depth);
            project.objects.push(object);
        }
    }
    project
}

pub fn random_project(seed: u64) -> Project {
    random_project_with_depth(seed, 4)
}

pub fn project_strategy() -> impl Strategy<Value = Project> {
    any::<u64>().prop_map(random_project)
}

pub fn leaf_strategy() -> impl Strategy<Value = Formula> {
    let number = prop_oneof![
        (0u32..1000).prop_map(|n| Formula::number(n as f64)),
        (0u32..100_000).prop_map(|n| Formula::number(n as f64 / 1000.0)),
        (0.0f64..1e12).prop_map(Formula::number),
        prop::num::f64::POSITIVE.prop_map(Formula::number),
    ];
    let sensor = prop::sample::select(SensorKind::ALL.to_vec()).prop_map(Formula::Sensor);
    let variable = "[a-z_][a-z0-9_]{0,6}"
        .prop_filter("reserved word", |s| brickjam_core::formula::is_variable_name(s))
        .prop_map(Formula::variable);
    prop_oneof![number, sensor, variable]
}

/// Random formula trees over every operator, function and sensor.
pub fn formula_strategy() -> impl Strategy<Value = Formula> {
    leaf_strategy().prop_recursive(8, 64, 3, |inner| {
        prop_oneof![
            (prop::sample::select(BinaryOp::ALL.to_vec()), inner.clone(), inner.clone())
                .prop_map(|(op, l, r)| Formula::binary(op, l, r)),
            (prop::sample::select(vec![UnaryOp::Neg, UnaryOp::Not]), inner.clone())
                .prop_map(|(op, x)| Formula::unary(op, x)),
            (prop::sample::select(Function::ALL.to_vec()), inner.clone(), inner)
                .prop_map(|(function, a, b)| {
                    let args = if function.arity() == 2 { vec![a, b] } else { vec![a] };
                    Formula::call(function, args)
                }),
        ]
    })
}

/// Structural S-expression of a formula, the shape both parsers are
/// compared on.
pub fn sexpr(formula: &Formula) -> String {
    match formula {
        Formula::Number(v) => format!("{v}"),
        Formula::Sensor(s) => s.name().to_string(),
        Formula::Variable(name) => format!("${name}"),
        Formula::Unary { op, operand } => {
            let name = match op {
                UnaryOp::Neg => "neg",
                UnaryOp::Not => "not",
            };
            format!("({name} {})", sexpr(operand))
        }
        Formula::Binary { op, left, right } => {
            format!("({} {} {})", op.symbol(), sexpr(left), sexpr(right))
        }
        Formula::Call { function, args } => {
            let args: Vec<String> = args.iter().map(sexpr).collect();
            format!("({} {})", function.name(), args.join(" "))
        }
    }
}
