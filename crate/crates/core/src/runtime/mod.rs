//! Deterministic tick-based interpreter.
//!
//! A run is a pure function of the project, the tick rate, the tick count,
//! the sensor trace, the input trace and the seed.

mod compile;
mod hit;
mod log;
mod machine;
mod trace;

pub use hit::{hit_test, sprite_bounds};
pub use log::{script_area, Event, EventLog, Frame, FrameLog, ObjectState};
pub use machine::{run, RunConfig, RunError, RunOutput, Runtime, DEFAULT_TICK_RATE};
pub use trace::{
    tick_to_time, time_to_tick, InputTrace, SensorTrace, TapEvent, TraceError, TraceFile,
};
