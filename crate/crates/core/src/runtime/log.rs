use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Observable state of one object at the end of a tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub direction: f64,
    pub size: f64,
    pub visible: bool,
    pub look_index: usize,
    pub variables: BTreeMap<String, f64>,
}

/// All object states after one tick, background first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub tick: u64,
    pub objects: Vec<ObjectState>,
    pub globals: BTreeMap<String, f64>,
}

impl Frame {
    /// The canonical single-line JSON form used for export and digesting.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("frames serialize")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FrameLog {
    pub frames: Vec<Frame>,
}

impl FrameLog {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Writes one frame per line, LF-terminated.
    pub fn write_json_lines<W: Write>(&self, mut out: W) -> io::Result<()> {
        for frame in &self.frames {
            out.write_all(frame.to_json_line().as_bytes())?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_json_lines(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_json_lines(&mut out).expect("writing to memory");
        out
    }

    /// Hex SHA-256 of the JSON-lines export.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for frame in &self.frames {
            hasher.update(frame.to_json_line().as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }

    pub fn parse_json_lines(text: &str) -> serde_json::Result<Self> {
        let frames = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(FrameLog { frames })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    ScriptStarted {
        tick: u64,
        object: String,
        script: usize,
    },
    SoundStarted {
        tick: u64,
        object: String,
        sound: String,
    },
    Broadcast {
        tick: u64,
        message: String,
    },
    EvalError {
        tick: u64,
        object: String,
        script: usize,
        /// Element path of the brick whose formula failed.
        location: String,
        /// Child-index path of the failing node inside that formula.
        formula_path: String,
        message: String,
    },
    /// One uninterrupted activation of a script: `dwell_ticks` consecutive
    /// ticks starting at `start_tick`.
    Instrumentation {
        tick: u64,
        area: String,
        start_tick: u64,
        dwell_ticks: u64,
    },
}

impl Event {
    pub fn tick(&self) -> u64 {
        match self {
            Event::ScriptStarted { tick, .. }
            | Event::SoundStarted { tick, .. }
            | Event::Broadcast { tick, .. }
            | Event::EvalError { tick, .. }
            | Event::Instrumentation { tick, .. } => *tick,
        }
    }
}

pub type EventLog = Vec<Event>;

/// Area name used for a script in instrumentation records.
pub fn script_area(object: &str, script: usize) -> String {
    format!("{object}/scripts[{script}]")
}
