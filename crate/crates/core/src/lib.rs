//! Social-optimum traffic assignment on directed road networks.
//!
//! Two solvers share the same network model and all-or-nothing direction step:
//!
//! * [`fw_solver`]: classic Frank-Wolfe with exact line search, on either the
//!   deterministic social cost or its closed-form expectation under uniform
//!   multiplicative flow noise.
//! * [`sfwta`]: online stochastic Frank-Wolfe traffic assignment, which only
//!   ever sees sampled gradients and tracks their running average.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below fix the scalar type for the common cases.

// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cost_model;
pub mod error;
pub mod fw_solver;
pub mod network;
pub mod oracle;
pub mod scalar;
pub mod sfwta;
pub mod shortest_path;
pub mod stochastic_env;
pub mod trace;

pub use cost_model::{CostParams, CostVector, GradientVector};
pub use error::{Error, Result};
pub use fw_solver::{FwConfig, FwOutcome, Objective};
pub use network::{FlowVector, Network, PathAssignment};
pub use scalar::Scalar;
pub use sfwta::{SfwtaOutcome, SfwtaState, StepSchedule, StopRule};
pub use stochastic_env::{AdditiveDist, GeneratorState, NoiseKind, NoiseModel};
pub use trace::{SolverTrace, TraceRecord, TraceSink};

pub type Network64 = Network<f64>;
pub type FlowVector64 = FlowVector<f64>;
pub type CostParams64 = CostParams<f64>;
pub type GradientVector64 = GradientVector<f64>;
pub type NoiseModel64 = NoiseModel<f64>;
pub type StepSchedule64 = StepSchedule<f64>;
pub type SolverTrace64 = SolverTrace<f64>;

pub type Network32 = Network<f32>;
pub type FlowVector32 = FlowVector<f32>;
pub type CostParams32 = CostParams<f32>;
pub type GradientVector32 = GradientVector<f32>;
pub type NoiseModel32 = NoiseModel<f32>;
pub type StepSchedule32 = StepSchedule<f32>;
pub type SolverTrace32 = SolverTrace<f32>;
