//! Collision reflex metric for robot transparency.
//!
//! The total impulse of an unexpected collision splits into a plastic
//! impact, a sensing ramp and a reaction phase. This crate evaluates it in
//! closed form ([`reflex`]), sizes actuators by scaling laws ([`actuator`]),
//! sweeps design parameters ([`sweep`]), projects a planar two-link arm onto
//! the 1D model ([`manipulator`]), simulates the timeline as an independent
//! oracle ([`sim`]) and analyses force-time traces ([`trace`]).

pub mod actuator;
pub mod error;
pub mod manipulator;
pub mod reflex;
pub mod sim;
pub mod sweep;
pub mod trace;

pub use error::{Error, Result};
pub use reflex::{total_impulse, CollisionParams1D, PhaseBreakdown, SensingMode, StiffnessLumping};
