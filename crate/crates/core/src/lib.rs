//! Multifunctional embodied agents: a fixed three-layer continuous-time
//! recurrent neural circuit that both categorizes falling objects and
//! balances a pole through the same sensors and motors.
//!
//! The crate provides:
//! - [`ctrnn`]: the neural circuit (stateful sensory neurons, fully
//!   recurrent interneurons, non-recurrent motor neurons) and the
//!   genotype encoding/decoding used by the optimizer.
//! - [`embodiment`]: body geometry, ray sensing, falling-object and
//!   pole physics, trial execution and both fitness functions.
//! - [`evolution`]: the elitist real-valued genetic algorithm, task
//!   presentation paradigms, and run bookkeeping.
//! - [`dynamics`]: autonomous attractor extraction under clamped
//!   inputs, attractor-set comparison across behaviors, basin censuses
//!   and time-shifted transient matching.
//! - [`config`] / [`artifacts`]: experiment configuration and the
//!   on-disk formats (genome JSON, run JSONL, trajectory CSV).

pub mod artifacts;
pub mod config;
pub mod ctrnn;
pub mod dynamics;
pub mod embodiment;
pub mod evolution;

/// Euler integration step size shared by the network and the physics.
pub const DT: f64 = 0.1;
