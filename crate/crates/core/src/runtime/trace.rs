//! Simulated sensor readings and taps.
//!
//! Trace files are JSON:
//!
//! ```json
//! { "sensors": { "compass_direction": [[0.0, 0.0], [0.5, 90.0]] },
//!   "taps": [[1.25, 10.0, -40.0]] }
//! ```
//!
//! Sensor samples are step-hold: a value is in effect from the first tick
//! whose logical time is at or after the sample time until the next sample.
//! Before the first sample a sensor reads 0.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::SensorKind;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error("{sensor} sample {index}: time must be finite and greater than the previous sample")]
    NonIncreasingTime { sensor: SensorKind, index: usize },
    #[error("{sensor} sample {index}: value {value} is out of range")]
    OutOfRange {
        sensor: SensorKind,
        index: usize,
        value: f64,
    },
    #[error("tap {index}: times must be finite and non-decreasing, coordinates finite")]
    BadTap { index: usize },
    #[error("malformed trace: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SensorTrace {
    #[serde(default)]
    pub samples: BTreeMap<SensorKind, Vec<(f64, f64)>>,
}

impl SensorTrace {
    /// A trace holding one sensor at a constant value.
    pub fn constant(sensor: SensorKind, value: f64) -> Self {
        let mut samples = BTreeMap::new();
        samples.insert(sensor, vec![(0.0, value)]);
        SensorTrace { samples }
    }

    pub fn with_sample(mut self, sensor: SensorKind, time: f64, value: f64) -> Self {
        self.samples.entry(sensor).or_default().push((time, value));
        self
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        for (&sensor, samples) in &self.samples {
            let mut previous = f64::NEG_INFINITY;
            for (index, &(time, value)) in samples.iter().enumerate() {
                if !time.is_finite() || time <= previous {
                    return Err(TraceError::NonIncreasingTime { sensor, index });
                }
                if !sensor.accepts(value) {
                    return Err(TraceError::OutOfRange {
                        sensor,
                        index,
                        value,
                    });
                }
                previous = time;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64, f64)", into = "(f64, f64, f64)")]
pub struct TapEvent {
    pub time: f64,
    pub x: f64,
    pub y: f64,
}

impl From<(f64, f64, f64)> for TapEvent {
    fn from((time, x, y): (f64, f64, f64)) -> Self {
        TapEvent { time, x, y }
    }
}

impl From<TapEvent> for (f64, f64, f64) {
    fn from(tap: TapEvent) -> Self {
        (tap.time, tap.x, tap.y)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InputTrace {
    pub taps: Vec<TapEvent>,
}

impl InputTrace {
    pub fn validate(&self) -> Result<(), TraceError> {
        let mut previous = f64::NEG_INFINITY;
        for (index, tap) in self.taps.iter().enumerate() {
            if !tap.time.is_finite() || tap.time < previous || !tap.x.is_finite() || !tap.y.is_finite()
            {
                return Err(TraceError::BadTap { index });
            }
            previous = tap.time;
        }
        Ok(())
    }
}

/// Both traces in their on-disk form.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceFile {
    #[serde(default)]
    pub sensors: BTreeMap<SensorKind, Vec<(f64, f64)>>,
    #[serde(default)]
    pub taps: Vec<TapEvent>,
}

impl TraceFile {
    pub fn parse(text: &str) -> Result<(SensorTrace, InputTrace), TraceError> {
        let file: TraceFile =
            serde_json::from_str(text).map_err(|e| TraceError::Malformed(e.to_string()))?;
        let (sensors, inputs) = file.into_traces();
        sensors.validate()?;
        inputs.validate()?;
        Ok((sensors, inputs))
    }

    pub fn into_traces(self) -> (SensorTrace, InputTrace) {
        (
            SensorTrace {
                samples: self.sensors,
            },
            InputTrace { taps: self.taps },
        )
    }

    pub fn from_traces(sensors: &SensorTrace, inputs: &InputTrace) -> Self {
        TraceFile {
            sensors: sensors.samples.clone(),
            taps: inputs.taps.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

/// First tick whose logical time `tick / tick_rate` is at or after `time`.
/// Times within 1e-9 ticks of a boundary snap to it.
pub fn time_to_tick(time: f64, tick_rate: u32) -> u64 {
    if time <= 0.0 {
        return 0;
    }
    let exact = time * f64::from(tick_rate);
    let nearest = exact.round();
    let tick = if (exact - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        exact.ceil()
    };
    tick as u64
}

pub fn tick_to_time(tick: u64, tick_rate: u32) -> f64 {
    tick as f64 / f64::from(tick_rate)
}

/// Sensor values indexed by the tick they take effect.
#[derive(Debug, Clone, Default)]
pub(crate) struct SensorSchedule {
    changes: BTreeMap<SensorKind, Vec<(u64, f64)>>,
}

impl SensorSchedule {
    pub(crate) fn new(trace: &SensorTrace, tick_rate: u32) -> Self {
        let mut schedule = SensorSchedule::default();
        for (&sensor, samples) in &trace.samples {
            for &(time, value) in samples {
                schedule.set(sensor, time_to_tick(time, tick_rate), value);
            }
        }
        schedule
    }

    /// Records `value` from `tick` on. A later call for the same tick wins.
    pub(crate) fn set(&mut self, sensor: SensorKind, tick: u64, value: f64) {
        let changes = self.changes.entry(sensor).or_default();
        match changes.last_mut() {
            Some(last) if last.0 == tick => last.1 = value,
            Some(last) if last.0 > tick => {
                let at = changes.partition_point(|c| c.0 < tick);
                if changes.get(at).is_some_and(|c| c.0 == tick) {
                    changes[at].1 = value;
                } else {
                    changes.insert(at, (tick, value));
                }
            }
            _ => changes.push((tick, value)),
        }
    }

    pub(crate) fn value_at(&self, sensor: SensorKind, tick: u64) -> f64 {
        let Some(changes) = self.changes.get(&sensor) else {
            return 0.0;
        };
        let n = changes.partition_point(|c| c.0 <= tick);
        if n == 0 {
            0.0
        } else {
            changes[n - 1].1
        }
    }
}
