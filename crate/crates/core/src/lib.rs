//! Pulse-level simulation of virtual-Z compiled dynamical decoupling on a
//! single qubit.
//!
//! The pipeline is: build a [`gate_ir::GateSequence`], fold its virtual Z
//! gates into pulse phases with [`frame::fold`], lower the schedule to a
//! drive field with [`lowering::lower`], and integrate the master equation
//! with [`lindblad::evolve`]. [`lindblad::sweep`] runs whole experiments
//! described by a [`config::ExperimentConfig`].

pub mod analysis;
pub mod config;
pub mod frame;
pub mod gate_ir;
pub mod lindblad;
pub mod lowering;
pub mod su2;

pub use analysis::{compare_decay_constants, fit_decay, oscillation_metric, DecayFit, OscillationMetric};
pub use config::{load_config, write_results, ExperimentConfig, RunManifest};
pub use frame::{fold, physically_equivalent, PulseSchedule, ScheduleConfig};
pub use gate_ir::{build_sequence, CompilationStrategy, Gate, GateSequence, SequenceName};
pub use lindblad::{evolve, run_protocol, sweep, DensityMatrix, FidelityCurve, InitialState, NoiseModel};
pub use lowering::{lower, InterferenceModel, PulseShape};
pub use su2::{ComplexMatrix2, Rotation};
