use std::collections::BTreeMap;

use thiserror::Error;

use super::compile::{compile_script, Instr, Op};
use super::hit::hit_test;
use super::log::{script_area, Event, EventLog, Frame, FrameLog, ObjectState};
use super::trace::{
    tick_to_time, time_to_tick, InputTrace, SensorSchedule, SensorTrace, TapEvent, TraceError,
};
use crate::formula::{
    cos_deg, evaluate, format_path, normalize_degrees, sin_deg, Environment, EvalContext,
    Formula, SensorKind,
};
use crate::project::{Brick, ObjectRef, Project, Trigger};
use crate::rng::Rng;

pub const DEFAULT_TICK_RATE: u32 = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub tick_rate: u32,
    pub max_ticks: u64,
    pub sensor_trace: SensorTrace,
    pub input_trace: InputTrace,
    pub rng_seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tick_rate: DEFAULT_TICK_RATE,
            max_ticks: 0,
            sensor_trace: SensorTrace::default(),
            input_trace: InputTrace::default(),
            rng_seed: None,
        }
    }
}

impl RunConfig {
    pub fn ticks(max_ticks: u64) -> Self {
        RunConfig {
            max_ticks,
            ..RunConfig::default()
        }
    }

    pub fn with_sensors(mut self, trace: SensorTrace) -> Self {
        self.sensor_trace = trace;
        self
    }

    pub fn with_inputs(mut self, trace: InputTrace) -> Self {
        self.input_trace = trace;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error("invalid run configuration: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

impl RunError {
    pub fn code(&self) -> &'static str {
        match self {
            RunError::ConfigInvalid(_) => "config_invalid",
            RunError::Trace(_) => "bad_trace",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub frames: FrameLog,
    pub events: EventLog,
    pub digest: String,
}

/// Executes a project for `cfg.max_ticks` ticks after the start tick, so the
/// frame log holds `max_ticks + 1` frames.
pub fn run(project: &Project, cfg: RunConfig) -> Result<RunOutput, RunError> {
    let max_ticks = cfg.max_ticks;
    let mut runtime = Runtime::new(project, cfg)?;
    for _ in 0..=max_ticks {
        runtime.step();
    }
    Ok(runtime.finish())
}

struct Thread {
    /// 0 is the background, `i + 1` is sprite `i`.
    object: usize,
    script: usize,
    trigger: Trigger,
    code: Vec<Instr>,
    active: bool,
    pc: usize,
    counters: Vec<i64>,
    yields: u64,
    marks: Vec<u64>,
    wake_at: u64,
    started_at: u64,
}

impl Thread {
    /// Suspends until the next tick unless the loop iteration in `slot`
    /// already yielded.
    fn yield_at_tail(&mut self, slot: usize, tick: u64) -> bool {
        if self.yields != self.marks[slot] {
            return false;
        }
        self.yields += 1;
        self.wake_at = tick + 1;
        true
    }
}

struct Sensors<'a> {
    schedule: &'a SensorSchedule,
    tick: u64,
}

struct ObjectEnv<'a> {
    sensors: Sensors<'a>,
    locals: &'a BTreeMap<String, f64>,
    globals: &'a BTreeMap<String, f64>,
}

impl Environment for ObjectEnv<'_> {
    fn sensor(&self, kind: SensorKind) -> f64 {
        self.sensors.schedule.value_at(kind, self.sensors.tick)
    }

    fn variable(&self, name: &str) -> Option<f64> {
        self.locals
            .get(name)
            .or_else(|| self.globals.get(name))
            .copied()
    }
}

/// A running game. Tick 0 is the program start: `ProgramStarted` scripts run
/// up to their first yield and the result is the initial frame. Tick `n` has
/// logical time `n / tick_rate` seconds.
///
/// Within a tick: pending broadcasts and taps activate their scripts, then
/// every active script whose wait has elapsed runs until it yields (a `Wait`,
/// the end of a loop iteration, or the end of the script), in background,
/// then sprite order, then script order. Re-triggering a running script
/// restarts it.
pub struct Runtime {
    project: Project,
    tick_rate: u32,
    threads: Vec<Thread>,
    states: Vec<ObjectState>,
    globals: BTreeMap<String, f64>,
    rng: Rng,
    sensors: SensorSchedule,
    taps: Vec<(u64, TapEvent)>,
    next_tap: usize,
    pending_broadcasts: Vec<String>,
    next_tick: u64,
    frames: FrameLog,
    events: EventLog,
    recorded_sensors: SensorTrace,
    recorded_inputs: InputTrace,
}

impl Runtime {
    pub fn new(project: &Project, cfg: RunConfig) -> Result<Self, RunError> {
        if cfg.tick_rate == 0 {
            return Err(RunError::ConfigInvalid("tick_rate must be positive".into()));
        }
        cfg.sensor_trace.validate()?;
        cfg.input_trace.validate()?;

        let mut threads = Vec::new();
        for (object, obj) in project.all_objects().enumerate() {
            let object_path = if object == 0 {
                ObjectRef::Background.path()
            } else {
                ObjectRef::Sprite(object - 1).path()
            };
            for (script, s) in obj.scripts.iter().enumerate() {
                let (code, slots) =
                    compile_script(&s.body, &format!("{object_path}/scripts[{script}]"));
                threads.push(Thread {
                    object,
                    script,
                    trigger: s.trigger.clone(),
                    code,
                    active: false,
                    pc: 0,
                    counters: Vec::new(),
                    yields: 0,
                    marks: vec![0; slots],
                    wake_at: 0,
                    started_at: 0,
                });
            }
        }
        let states = project
            .all_objects()
            .map(|o| ObjectState {
                name: o.name.clone(),
                x: o.x,
                y: o.y,
                direction: normalize_degrees(o.direction),
                size: o.size,
                visible: o.visible,
                look_index: 0,
                variables: o.variables.clone(),
            })
            .collect();
        let taps = cfg
            .input_trace
            .taps
            .iter()
            .map(|t| (time_to_tick(t.time, cfg.tick_rate), *t))
            .collect();
        Ok(Runtime {
            project: project.clone(),
            tick_rate: cfg.tick_rate,
            threads,
            states,
            globals: project.variables.clone(),
            rng: Rng::seed_from_u64(cfg.rng_seed.unwrap_or(project.rng_seed)),
            sensors: SensorSchedule::new(&cfg.sensor_trace, cfg.tick_rate),
            taps,
            next_tap: 0,
            pending_broadcasts: Vec::new(),
            next_tick: 0,
            frames: FrameLog::default(),
            events: Vec::new(),
            recorded_sensors: cfg.sensor_trace,
            recorded_inputs: cfg.input_trace,
        })
    }

    pub fn project(&self) -> &Project {
        &self.project
    }

    pub fn tick_rate(&self) -> u32 {
        self.tick_rate
    }

    /// The tick the next call to [`Runtime::step`] will execute.
    pub fn next_tick(&self) -> u64 {
        self.next_tick
    }

    pub fn frames(&self) -> &FrameLog {
        &self.frames
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Sets a sensor reading that takes effect from the next tick.
    pub fn set_sensor(&mut self, sensor: SensorKind, value: f64) {
        let value = sensor.clamp(value);
        let tick = self.next_tick;
        self.sensors.set(sensor, tick, value);
        let time = tick_to_time(tick, self.tick_rate);
        let samples = self.recorded_sensors.samples.entry(sensor).or_default();
        while samples.last().is_some_and(|&(t, _)| time_to_tick(t, self.tick_rate) >= tick) {
            samples.pop();
        }
        samples.push((time, value));
    }

    /// Queues a tap delivered at the next tick.
    pub fn tap(&mut self, x: f64, y: f64) {
        let tick = self.next_tick;
        let tap = TapEvent {
            time: tick_to_time(tick, self.tick_rate),
            x,
            y,
        };
        let at = self.taps.partition_point(|(t, _)| *t <= tick);
        self.taps.insert(at, (tick, tap));
        let recorded = self
            .recorded_inputs
            .taps
            .partition_point(|t| time_to_tick(t.time, self.tick_rate) <= tick);
        self.recorded_inputs.taps.insert(recorded, tap);
    }

    /// Every sensor sample and tap this run has seen, configured or live, as
    /// traces that replay it headlessly.
    pub fn recorded_traces(&self) -> (SensorTrace, InputTrace) {
        (self.recorded_sensors.clone(), self.recorded_inputs.clone())
    }

    /// Executes one tick and returns its frame.
    pub fn step(&mut self) -> &Frame {
        let tick = self.next_tick;
        self.next_tick += 1;

        if tick == 0 {
            for t in 0..self.threads.len() {
                if self.threads[t].trigger == Trigger::ProgramStarted {
                    self.activate(t, tick);
                }
            }
        }
        for message in std::mem::take(&mut self.pending_broadcasts) {
            for t in 0..self.threads.len() {
                if matches!(&self.threads[t].trigger, Trigger::BroadcastReceived(m) if *m == message)
                {
                    self.activate(t, tick);
                }
            }
        }
        while let Some(&(at, tap)) = self.taps.get(self.next_tap) {
            if at > tick {
                break;
            }
            self.next_tap += 1;
            if let Some(sprite) = hit_test(&self.project, &self.states[1..], tap.x, tap.y) {
                for t in 0..self.threads.len() {
                    if self.threads[t].object == sprite + 1
                        && self.threads[t].trigger == Trigger::Tapped
                    {
                        self.activate(t, tick);
                    }
                }
            }
        }

        for t in 0..self.threads.len() {
            let thread = &self.threads[t];
            if thread.active && thread.wake_at <= tick {
                self.resume(t, tick);
            }
        }

        self.frames.frames.push(Frame {
            tick,
            objects: self.states.clone(),
            globals: self.globals.clone(),
        });
        self.frames.frames.last().expect("just pushed")
    }

    /// Closes the run: scripts still active get their instrumentation record.
    pub fn finish(mut self) -> RunOutput {
        if let Some(last) = self.next_tick.checked_sub(1) {
            for t in 0..self.threads.len() {
                if self.threads[t].active {
                    let started = self.threads[t].started_at;
                    self.record_session(t, last, last - started + 1);
                }
            }
        }
        let digest = self.frames.digest();
        RunOutput {
            frames: self.frames,
            events: self.events,
            digest,
        }
    }

    fn object_name(&self, object: usize) -> &str {
        &self.states[object].name
    }

    fn record_session(&mut self, t: usize, tick: u64, dwell: u64) {
        let thread = &self.threads[t];
        let area = script_area(self.object_name(thread.object), thread.script);
        self.events.push(Event::Instrumentation {
            tick,
            area,
            start_tick: thread.started_at,
            dwell_ticks: dwell,
        });
    }

    fn activate(&mut self, t: usize, tick: u64) {
        let thread = &self.threads[t];
        if thread.active {
            if thread.started_at == tick {
                return;
            }
            let dwell = tick - thread.started_at;
            self.record_session(t, tick, dwell);
        }
        let thread = &mut self.threads[t];
        thread.active = true;
        thread.pc = 0;
        thread.counters.clear();
        thread.yields = 0;
        thread.wake_at = tick;
        thread.started_at = tick;
        let (object, script) = (thread.object, thread.script);
        self.events.push(Event::ScriptStarted {
            tick,
            object: self.object_name(object).to_string(),
            script,
        });
    }

    fn eval(&mut self, t: usize, formula: &Formula, location: &str, tick: u64) -> f64 {
        let object = self.threads[t].object;
        let env = ObjectEnv {
            sensors: Sensors {
                schedule: &self.sensors,
                tick,
            },
            locals: &self.states[object].variables,
            globals: &self.globals,
        };
        let result = evaluate(formula, &mut EvalContext::new(&env, &mut self.rng));
        match result {
            Ok(v) => v,
            Err(err) => {
                self.events.push(Event::EvalError {
                    tick,
                    object: self.states[object].name.clone(),
                    script: self.threads[t].script,
                    location: location.to_string(),
                    formula_path: format_path(&err.path),
                    message: err.kind.to_string(),
                });
                0.0
            }
        }
    }

    fn resume(&mut self, t: usize, tick: u64) {
        loop {
            let pc = self.threads[t].pc;
            let Some(instr) = self.threads[t].code.get(pc) else {
                let dwell = tick - self.threads[t].started_at + 1;
                self.record_session(t, tick, dwell);
                self.threads[t].active = false;
                return;
            };
            let location = instr.location.clone();
            match instr.op.clone() {
                Op::Exec(brick) => {
                    self.exec(t, &brick, &location, tick);
                    self.threads[t].pc += 1;
                }
                Op::Wait(seconds) => {
                    let s = self.eval(t, &seconds, &location, tick);
                    let ticks = (s * f64::from(self.tick_rate)).round();
                    let ticks = if ticks >= 1.0 {
                        ticks.min((u64::MAX / 4) as f64) as u64
                    } else {
                        1
                    };
                    let thread = &mut self.threads[t];
                    thread.wake_at = tick.saturating_add(ticks);
                    thread.yields += 1;
                    thread.pc += 1;
                    return;
                }
                Op::JumpUnless { condition, target } => {
                    let v = self.eval(t, &condition, &location, tick);
                    let thread = &mut self.threads[t];
                    thread.pc = if v != 0.0 { pc + 1 } else { target };
                }
                Op::Jump(target) => self.threads[t].pc = target,
                Op::Mark(slot) => {
                    let thread = &mut self.threads[t];
                    thread.marks[slot] = thread.yields;
                    thread.pc += 1;
                }
                Op::LoopBack { target, slot } => {
                    let thread = &mut self.threads[t];
                    thread.pc = target;
                    if thread.yield_at_tail(slot, tick) {
                        return;
                    }
                }
                Op::RepeatStart { count, exit } => {
                    let n = self.eval(t, &count, &location, tick).round();
                    let thread = &mut self.threads[t];
                    if n >= 1.0 {
                        thread.counters.push(n.min(i64::MAX as f64) as i64);
                        thread.pc += 1;
                    } else {
                        thread.pc = exit;
                    }
                }
                Op::RepeatNext { body, slot } => {
                    let thread = &mut self.threads[t];
                    let remaining = thread.counters.last_mut().expect("repeat counter");
                    *remaining -= 1;
                    if *remaining > 0 {
                        thread.pc = body;
                    } else {
                        thread.counters.pop();
                        thread.pc += 1;
                    }
                    if thread.yield_at_tail(slot, tick) {
                        return;
                    }
                }
            }
        }
    }

    fn exec(&mut self, t: usize, brick: &Brick, location: &str, tick: u64) {
        let object = self.threads[t].object;
        match brick {
            Brick::Broadcast(message) => {
                self.events.push(Event::Broadcast {
                    tick,
                    message: message.clone(),
                });
                if !self.pending_broadcasts.contains(message) {
                    self.pending_broadcasts.push(message.clone());
                }
            }
            Brick::PlaceAt { x, y } => {
                let x = self.eval(t, x, location, tick);
                let y = self.eval(t, y, location, tick);
                let state = &mut self.states[object];
                state.x = x;
                state.y = y;
            }
            Brick::PointInDirection(degrees) => {
                let d = self.eval(t, degrees, location, tick);
                self.states[object].direction = normalize_degrees(d);
            }
            Brick::MoveSteps(steps) => {
                let steps = self.eval(t, steps, location, tick);
                let state = &mut self.states[object];
                state.x += steps * sin_deg(state.direction);
                state.y += steps * cos_deg(state.direction);
            }
            Brick::ChangeXBy(dx) => {
                let dx = self.eval(t, dx, location, tick);
                self.states[object].x += dx;
            }
            Brick::ChangeYBy(dy) => {
                let dy = self.eval(t, dy, location, tick);
                self.states[object].y += dy;
            }
            Brick::NextLook => {
                let count = self.looks_of(object);
                if count > 0 {
                    let state = &mut self.states[object];
                    state.look_index = (state.look_index + 1) % count;
                }
            }
            Brick::SwitchLook(name) => {
                let found = self.object_def(object).looks.iter().position(|l| &l.name == name);
                if let Some(index) = found {
                    self.states[object].look_index = index;
                }
            }
            Brick::Show => self.states[object].visible = true,
            Brick::Hide => self.states[object].visible = false,
            Brick::SetSizePercent(percent) => {
                let p = self.eval(t, percent, location, tick);
                self.states[object].size = p.max(0.0);
            }
            Brick::StartSound(name) => {
                if self.object_def(object).sound(name).is_some() {
                    self.events.push(Event::SoundStarted {
                        tick,
                        object: self.states[object].name.clone(),
                        sound: name.clone(),
                    });
                }
            }
            Brick::SetVariable { name, value } => {
                let v = self.eval(t, value, location, tick);
                self.assign(t, object, name, location, tick, |_| v);
            }
            Brick::ChangeVariable { name, delta } => {
                let d = self.eval(t, delta, location, tick);
                self.assign(t, object, name, location, tick, |old| old + d);
            }
            Brick::Forever(_) | Brick::Repeat { .. } | Brick::If { .. } | Brick::Wait(_) => {
                unreachable!("control bricks are compiled to jumps")
            }
        }
    }

    fn assign(
        &mut self,
        t: usize,
        object: usize,
        name: &str,
        location: &str,
        tick: u64,
        update: impl FnOnce(f64) -> f64,
    ) {
        let slot = match self.states[object].variables.get_mut(name) {
            Some(slot) => Some(slot),
            None => self.globals.get_mut(name),
        };
        match slot {
            Some(slot) => {
                let v = update(*slot);
                *slot = if v.is_finite() { v } else { 0.0 };
            }
            None => self.events.push(Event::EvalError {
                tick,
                object: self.states[object].name.clone(),
                script: self.threads[t].script,
                location: location.to_string(),
                formula_path: format_path(&[]),
                message: format!("unknown variable '{name}'"),
            }),
        }
    }

    fn object_def(&self, object: usize) -> &crate::project::GameObject {
        if object == 0 {
            &self.project.background
        } else {
            &self.project.objects[object - 1]
        }
    }

    fn looks_of(&self, object: usize) -> usize {
        self.object_def(object).looks.len()
    }
}
