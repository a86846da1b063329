//! Event-triggered formation control with connectivity preservation.
//!
//! Agents keep every edge of a communication graph within a sensing radius
//! while converging to a desired formation. Control updates happen only at
//! trigger events, when an agent's measurement error crosses an exponentially
//! decaying threshold. Both single and double integrator agents are covered.

pub mod bounds;
pub mod config;
pub mod double;
pub mod error;
pub mod export;
pub mod formation;
pub mod graph;
pub mod root;
pub mod scenario;
pub mod sim;
pub mod single;
pub mod tension;

pub type Vector = nalgebra::DVector<f64>;

pub use bounds::{certify_trace, compute_beta0, compute_bounds, Beta0, BoundSet, CheckResult, Report};
pub use config::{Beta0Choice, Mode, ModeKind, ModeSettings, ScenarioConfig, Tolerances};
pub use error::{Error, Result};
pub use formation::{FormationSpec, InitialState};
pub use graph::Graph;
pub use sim::{replay_check, run, simulate, RunOutput, Trace, TraceSample};
pub use single::TriggerRecord;
pub use scenario::{load_scenario, parse_scenario};
pub use nalgebra;
