//! Simulation of two-mode heterodyne phase detection.
//!
//! Twin beams from a phase-insensitive amplifier are displaced on the signal
//! mode and measured by a heterodyne detector whose complex photocurrent is
//! `Ẑ = a + b†`. The crate provides the closed-form outcome and phase
//! statistics, a truncated Fock-space oracle that checks them from first
//! principles, reproducible Monte Carlo sampling, and the fixed-budget
//! sensitivity optimizer.
//!
//! Data-parallel loops go through [`exec::Execution`]; building without the
//! default `parallel` feature makes every loop sequential.

pub mod cli;
pub mod error;
pub mod exec;
pub mod fock;
pub mod heterodyne;
mod mp;
pub mod phase;
pub mod quadrature;
pub mod special_fn;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Execution;
pub use fock::{ComplexAmplitude, TwinBeamParam, TwoModeFockState};
pub use heterodyne::{HeterodyneModel, SampleBatch};
pub use phase::{PhaseDistribution, SensitivityResult};
