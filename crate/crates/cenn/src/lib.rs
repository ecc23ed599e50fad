//! Cellular neural network (CeNN) tooling: discrete-time simulation,
//! particle-swarm template training, incremental quantization of template
//! coefficients to powers of two, and cost models for the shift-based
//! hardware such templates enable.
//!
//! A CeNN is a grid of locally coupled analog cells; the discrete-time
//! approximation here updates every cell from its 3x3 neighborhood with two
//! small coefficient matrices (feedback `A`, control `B`), a bias, and an
//! Euler step size. Templates whose coefficients are powers of two need
//! only shifts and adds in hardware — the point of the quantization and
//! hardware modules.
//!
//! Module map:
//! - [`grid`], [`pgm`]: cell grids and portable graymap I/O (bipolar value
//!   convention: +1 black, -1 white).
//! - [`template`], [`dynamics`]: template parameterization with symmetry
//!   patterns, and the simulation loop.
//! - [`pso`]: particle-swarm training of templates against image pairs.
//! - [`quant`]: the power-of-two coefficient sets, selection strategies,
//!   and the incremental quantize/freeze/retrain loop.
//! - [`fixed`]: 18-bit fixed-point evaluation with shift-only coefficient
//!   application, mirroring the hardware datapath.
//! - [`schedule`], [`project`]: cycle schedules for shifter-based
//!   convolution units and projection onto FPGA resource budgets.
//! - [`synth`], [`manifest`], [`sweep`]: synthetic task generation, task
//!   manifests on disk, and the quantization sweep harness.

pub mod dynamics;
pub mod error;
pub mod fixed;
pub mod grid;
pub mod manifest;
pub mod pgm;
pub mod project;
pub mod pso;
pub mod quant;
pub mod schedule;
pub mod seeds;
pub mod sweep;
pub mod synth;
pub mod template;

pub use dynamics::{op_count, run, run_schedule, InitState, RunOptions, RunResult};
pub use error::{CennError, Result};
pub use fixed::{fixed_run, FixedGrid, FixedRunResult, FixedWord, ShiftCoeff, ShiftTemplate};
pub use grid::{Boundary, CellGrid};
pub use manifest::{PairEntry, TaskManifest};
pub use pgm::{read_pgm, write_pgm};
pub use project::{
    equivalent_capacity, max_stages, speedup, Calibration, FillMode, FpgaBudget, StagePlan,
};
pub use pso::{
    accuracy_percent, train_template, PsoConfig, SearchSpace, TrainResult, TrainingPair,
};
pub use quant::{
    incremental_quantize, quantize_value, BatchMode, QuantSet, QuantizeConfig, QuantizeResult,
    SelectionStrategy, ZeroRule,
};
pub use schedule::{
    analyze_template, build_schedule, cycles_per_pixel, SchedulePlan, ScheduleOptions,
    ShifterPooling, TemplateStats,
};
pub use sweep::{run_sweep, train_float_baseline, SweepConfig, SweepReport, SweepRow};
pub use synth::{synth_pair, SynthConfig, TaskKind};
pub use template::{SymmetryPattern, TemplateSet};
