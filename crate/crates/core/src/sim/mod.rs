//! Deterministic closed-loop simulation of the unscrewing cell.

pub mod contact;
pub mod disturbance;
pub mod log;
pub mod screw;
pub mod world;

pub use contact::{penalty_force, ContactState, WorkbenchParams};
pub use disturbance::{DisturbanceEntry, DisturbanceSchedule, GrabProfile, TraceProfile};
pub use log::{peak_impact_force, CsvLogWriter, LogRecord, LogTable};
pub use screw::{screw_step, ScrewParams, ScrewProcess, ScrewState};
pub use world::{ExternalForces, Sensed, SimWorld};
