//! Slash-separated element paths into a project.
//!
//! ```text
//! stage
//! tags[0]
//! variables[score]
//! assets[bird_up.png]
//! background
//! objects[1]                      (or objects[bird], by name)
//! objects[1]/looks[0]
//! objects[1]/sounds[0]
//! objects[1]/variables[speed]
//! objects[1]/scripts[0]
//! objects[1]/scripts[0]/body[2]/then[0]/body[1]
//! ```
//!
//! Loop bodies are addressed with `body`, branches with `then` and `else`.

use super::model::{Brick, GameObject, Look, Project, Script, SoundRef};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Element<'a> {
    Stage,
    Tag(&'a str),
    GlobalVariable(&'a str),
    Asset(&'a str),
    Object(ObjectRef, &'a GameObject),
    Look(ObjectRef, &'a Look),
    Sound(ObjectRef, &'a SoundRef),
    LocalVariable(ObjectRef, &'a str),
    Script(ObjectRef, usize, &'a Script),
    Brick(ObjectRef, &'a Brick),
}

/// Which object an element belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectRef {
    Background,
    Sprite(usize),
}

impl ObjectRef {
    pub fn path(self) -> String {
        match self {
            ObjectRef::Background => "background".to_string(),
            ObjectRef::Sprite(i) => format!("objects[{i}]"),
        }
    }

    pub fn get(self, project: &Project) -> Option<&GameObject> {
        match self {
            ObjectRef::Background => Some(&project.background),
            ObjectRef::Sprite(i) => project.objects.get(i),
        }
    }
}

fn split_segments(path: &str) -> Option<Vec<(&str, Option<&str>)>> {
    let mut out = Vec::new();
    let mut rest = path;
    while !rest.is_empty() {
        let (segment, tail) = match rest.find('[') {
            Some(open) if rest[..open].find('/').is_none() => {
                let name = &rest[..open];
                let after = &rest[open + 1..];
                let close = match after.find("]/") {
                    Some(c) => c,
                    None if after.ends_with(']') => after.len() - 1,
                    None => return None,
                };
                let key = &after[..close];
                let tail = &after[close + 1..];
                ((name, Some(key)), tail)
            }
            _ => match rest.find('/') {
                Some(slash) => ((&rest[..slash], None), &rest[slash..]),
                None => ((rest, None), ""),
            },
        };
        out.push(segment);
        rest = match tail.strip_prefix('/') {
            Some(t) if !t.is_empty() => t,
            Some(_) => return None,
            None if tail.is_empty() => "",
            None => return None,
        };
    }
    Some(out)
}

fn index(key: Option<&str>) -> Option<usize> {
    key?.parse().ok()
}

/// Resolves a path to the element it names.
pub fn resolve<'a>(project: &'a Project, path: &str) -> Option<Element<'a>> {
    let segments = split_segments(path)?;
    let (&(head, key), rest) = segments.split_first()?;
    let object = match (head, key) {
        ("stage", None) if rest.is_empty() => return Some(Element::Stage),
        ("tags", Some(_)) if rest.is_empty() => {
            return project.tags.get(index(key)?).map(|t| Element::Tag(t));
        }
        ("variables", Some(name)) if rest.is_empty() => {
            return project
                .variables
                .get_key_value(name)
                .map(|(k, _)| Element::GlobalVariable(k));
        }
        ("assets", Some(id)) if rest.is_empty() => {
            return project
                .assets
                .get_key_value(id)
                .map(|(k, _)| Element::Asset(k));
        }
        ("background", None) => ObjectRef::Background,
        ("objects", Some(k)) => match k.parse::<usize>() {
            Ok(i) if i < project.objects.len() => ObjectRef::Sprite(i),
            Ok(_) => return None,
            Err(_) => ObjectRef::Sprite(project.objects.iter().position(|o| o.name == k)?),
        },
        _ => return None,
    };
    let obj = object.get(project)?;
    let Some((&(segment, key), rest)) = rest.split_first() else {
        return Some(Element::Object(object, obj));
    };
    match segment {
        "looks" if rest.is_empty() => obj.looks.get(index(key)?).map(|l| Element::Look(object, l)),
        "sounds" if rest.is_empty() => obj
            .sounds
            .get(index(key)?)
            .map(|s| Element::Sound(object, s)),
        "variables" if rest.is_empty() => obj
            .variables
            .get_key_value(key?)
            .map(|(k, _)| Element::LocalVariable(object, k)),
        "scripts" => {
            let script_index = index(key)?;
            let script = obj.scripts.get(script_index)?;
            if rest.is_empty() {
                return Some(Element::Script(object, script_index, script));
            }
            let (&(first, key), mut rest) = rest.split_first()?;
            if first != "body" {
                return None;
            }
            let mut brick = script.body.get(index(key)?)?;
            while let Some((&(segment, key), tail)) = rest.split_first() {
                let children = brick.children();
                let (_, body) = children.iter().find(|(name, _)| *name == segment)?;
                brick = body.get(index(key)?)?;
                rest = tail;
            }
            Some(Element::Brick(object, brick))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Formula;
    use crate::project::model::Trigger;

    fn sample() -> Project {
        let mut p = Project::new("p");
        let mut bird = GameObject::new("bird");
        bird.looks.push(Look {
            name: "up".into(),
            asset_id: "up.png".into(),
            width: 4,
            height: 4,
        });
        bird.scripts.push(Script::new(
            Trigger::ProgramStarted,
            vec![Brick::If {
                condition: Formula::Number(1.0),
                then_body: vec![Brick::Forever(vec![Brick::Show, Brick::Hide])],
                else_body: vec![Brick::NextLook],
            }],
        ));
        p.objects.push(GameObject::new("cat"));
        p.objects.push(bird);
        p.assets.insert("up.png".into(), vec![1]);
        p.variables.insert("score".into(), 0.0);
        p
    }

    #[test]
    fn resolves_nested_bricks() {
        let p = sample();
        assert_eq!(
            resolve(&p, "objects[1]/scripts[0]/body[0]/then[0]/body[1]"),
            Some(Element::Brick(ObjectRef::Sprite(1), &Brick::Hide))
        );
        assert_eq!(
            resolve(&p, "objects[bird]/scripts[0]/body[0]/else[0]"),
            Some(Element::Brick(ObjectRef::Sprite(1), &Brick::NextLook))
        );
        assert!(resolve(&p, "objects[1]/scripts[0]/body[0]/body[0]").is_none());
        assert!(resolve(&p, "objects[1]/scripts[0]/body[0]/then[5]").is_none());
    }

    #[test]
    fn resolves_top_level_elements() {
        let p = sample();
        assert_eq!(resolve(&p, "stage"), Some(Element::Stage));
        assert_eq!(resolve(&p, "assets[up.png]"), Some(Element::Asset("up.png")));
        assert_eq!(resolve(&p, "variables[score]"), Some(Element::GlobalVariable("score")));
        assert!(matches!(resolve(&p, "background"), Some(Element::Object(ObjectRef::Background, _))));
        assert!(matches!(resolve(&p, "objects[bird]/looks[0]"), Some(Element::Look(_, l)) if l.name == "up"));
        assert!(resolve(&p, "objects[2]").is_none());
        assert!(resolve(&p, "objects[dog]").is_none());
        assert!(resolve(&p, "").is_none());
        assert!(resolve(&p, "objects[1]/").is_none());
        assert!(resolve(&p, "assets[missing]").is_none());
    }
}
