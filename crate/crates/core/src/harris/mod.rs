//! Harris graphical construction of TASEP/ASEP.

mod clock;
mod concat;
mod engine;

pub use clock::{generate_event_log, generate_uniformized_log, ClockEvent, ClockGenerator, ClockSource, Direction, EventLog};
pub use concat::{concatenate_check, ConcatOutcome};
pub use engine::{evolve, evolve_coupled, evolve_from, CurrentCounters, EngineKind, Evolver, Process, Trajectory};
