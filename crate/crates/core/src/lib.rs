//! Post-fault reconfiguration of multi-zone MVDC shipboard power systems.
//!
//! The engine couples a layered biogeography-based search over load and
//! redundancy switches (DC side) with Newton solves of the converter losses
//! and generator states (AC side).

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admittance;
pub mod analysis;
pub mod baselines;
pub mod bbo;
pub mod converter;
pub mod dcflow;
pub mod error;
pub mod evaluate;
pub mod fixtures;
pub mod limits;
pub mod mode;
pub mod model;
pub mod nrbbo;
pub mod scenario;

pub use admittance::{build_admittance, DcAdmittance};
pub use analysis::{enumerate_faults, restored_power_cdf, run_benchmark, sweep, BenchmarkReport, SweepReport};
pub use baselines::{oracle_exhaustive, solve_baseline, Algorithm, BaselineParams};
pub use bbo::BboParams;
pub use converter::{
    check_ac_limits, converter_current, converter_loss, generator_state, solve_converter_nr, ConverterSolution,
    GeneratorState, MachineState,
};
pub use dcflow::{check_dc_limits, solve_dc, DcNetwork, DcSolution};
pub use error::{Error, Result};
pub use evaluate::{CapacityModel, Evaluation, Evaluator};
pub use limits::{LimitCheck, LimitReport, Quantity};
pub use mode::{classify, Mode};
pub use model::{
    weighted_objective, BusSide, ConverterSpec, FaultSet, GeneratorSpec, Grade, LoadSpec, Objective, SwitchConfig,
    SystemSpec,
};
pub use nrbbo::{reconfigure, ReconfigResult};
pub use scenario::{load_system_spec, load_system_spec_file};
