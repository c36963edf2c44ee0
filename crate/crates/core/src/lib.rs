//! Simulation and planning toolkit for EIT light storage in a cold-atom
//! ensemble and conveyor-belt transport of the stored excitation.
//!
//! Modules, bottom-up:
//! - [`constants`], [`species`], [`config`], [`validate`]: physical data, configuration and checks.
//! - [`conveyor`]: moving-lattice kinematics.
//! - [`medium`]: optical depth profile and decoherence factors.
//! - [`eit`]: the Maxwell–Bloch solver.
//! - [`polariton`]: dark/bright polariton views of solver states.
//! - [`protocols`]: scripted storage/transport scenarios, efficiency, fitting and sweeps.

// `!(x > 0.0)` is used on purpose throughout so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod constants;
pub mod conveyor;
pub mod eit;
pub mod medium;
pub mod polariton;
pub mod protocols;
pub mod species;
pub mod validate;

pub use config::{load_config, ConfigError, ExperimentConfig};
pub use conveyor::{Trajectory, TrajectorySpec};
pub use eit::{ControlSchedule, FieldState, ProbePulse, TimeSeries};
pub use medium::MediumModel;
pub use protocols::{EfficiencyPoint, FitResult, ProtocolError, ProtocolResult};
pub use validate::{validate_config, ValidationReport};
