//! Latency and energy cost models for transformer LLM inference.
//!
//! The crate combines two views of inference cost:
//!
//! - an analytic one, where every kernel is charged
//!   `max(FLOPs / F_eff, bytes / B_eff)` ([`roofline`]) over FLOP and byte
//!   counts of a transformer forward pass ([`xformer`]);
//! - an empirical one, where per-phase latency and energy follow small
//!   polynomials in prompt length `s` and generation length `g`
//!   ([`phase_model`]), fitted by least squares ([`numerics`]) from
//!   measured traces ([`trace`]).
//!
//! [`estimator`] turns either view into per-interaction, workload and fleet
//! energy estimates, and [`cli`] exposes everything as the `llm-energy`
//! command. The `examples/` directory has one runnable program per
//! capability.

pub mod cli;
pub mod data;
pub mod error;
pub mod estimator;
pub mod numerics;
pub mod phase_model;
pub mod roofline;
pub mod trace;
pub mod xformer;

pub use error::{ConfigError, FitError, InvalidInput, LineError, NumericsError, TraceError};
pub use phase_model::{Phase, PhaseCoefficients};
pub use roofline::{Boundedness, HardwareProfile, OpCost};
pub use xformer::ModelSpec;
