//! Core of the brickjam stack: the brick-program model and its bundle format,
//! the formula engine, a deterministic tick-based interpreter, backpack
//! transfers, the share store with jam rules, and jam analytics.

pub mod analytics;
pub mod backpack;
pub mod fixtures;
pub mod formula;
pub mod project;
pub mod rng;
pub mod runtime;
pub mod share;
