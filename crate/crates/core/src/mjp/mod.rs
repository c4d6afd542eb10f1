//! Markov jump process simulators and approximations.

mod bridge;
mod cle;
mod gillespie;
pub(crate) mod linalg;
mod network;
mod tau_leap;

pub use bridge::{bridge_simulate, conditioned_hazard, BridgeResult, ConditionedHazard, CONDITIONED_HAZARD_FLOOR};
pub(crate) use bridge::{bridge_advance, BridgeScratch};
pub use cle::{cle_log_density, cle_transition_density};
pub use gillespie::gillespie_simulate;
pub(crate) use gillespie::gillespie_advance;
pub use network::{HazardFn, ReactionNetwork};
pub use tau_leap::{steps_for, tau_leap_simulate, TauLeapPath};
pub(crate) use tau_leap::tau_leap_advance;
