//! Energy-aware Cartesian impedance control with a power-limited energy tank,
//! two baseline controllers, and a deterministic unscrewing simulator.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod error;
pub mod lie;
pub mod robot;
pub mod scenario;
pub mod sim;
pub mod spring;

pub use error::{Error, Result};
