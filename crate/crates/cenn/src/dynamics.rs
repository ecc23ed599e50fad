//! Discrete-time network dynamics: the forward-Euler update rule, full-image
//! simulation, and the operation-count model for a software baseline.
//!
//! Updates are synchronous: every cell's next state is computed from a
//! snapshot of the current state. The per-cell accumulation order is fixed
//! (bias and decay first, then the feedback terms row by row, then the control
//! terms row by row) so that alternative evaluation strategies can be compared
//! for bit-exact agreement.

use serde::{Deserialize, Serialize};

use crate::error::{CennError, Result};
use crate::grid::{sample, Boundary, CellGrid};
use crate::template::TemplateSet;

/// Piecewise-linear cell output: identity on [-1, 1], clamped outside.
/// Callers must pass finite values.
#[inline]
pub fn activation(x: f64) -> f64 {
    debug_assert!(x.is_finite());
    0.5 * ((x + 1.0).abs() - (x - 1.0).abs())
}

/// Multiply-accumulate operations per cell update for 3x3 templates: both
/// template convolutions (2 * 9 multiplies + 2 * 9 adds) plus the decay,
/// bias, and Euler-step operations.
pub const OPS_PER_CELL_UPDATE: u64 = 4 * 9 + 3;

/// Total operation count for simulating `iterations` updates of a
/// `width` x `height` grid in software.
pub fn op_count(width: u64, height: u64, iterations: u64) -> Result<u64> {
    width
        .checked_mul(height)
        .and_then(|cells| cells.checked_mul(OPS_PER_CELL_UPDATE))
        .and_then(|per_iter| per_iter.checked_mul(iterations))
        .ok_or(CennError::Overflow {
            context: "operation count".into(),
        })
}

/// Precomputes the control contribution `sum(B * u)` for every cell. The
/// input image is constant during a run, so this grid is computed once and
/// reused by every update step.
pub fn control_feed(tpl: &TemplateSet, input: &CellGrid, boundary: Boundary) -> CellGrid {
    let w = input.width();
    let h = input.height();
    let mut feed = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut b_sum = 0.0;
            for r in 0..3 {
                for c in 0..3 {
                    let u = sample(input, x as isize + c as isize - 1, y as isize + r as isize - 1, boundary);
                    b_sum += tpl.b[r][c] * u;
                }
            }
            feed[y * w + x] = b_sum;
        }
    }
    CellGrid::from_vec(w, h, feed).expect("feed has input dimensions")
}

/// One synchronous update step. `feed` must be the precomputed control
/// contribution for the same input and boundary policy.
pub fn step(
    tpl: &TemplateSet,
    state: &CellGrid,
    feed: &CellGrid,
    boundary: Boundary,
) -> Result<CellGrid> {
    state.check_shape(feed)?;
    let w = state.width();
    let h = state.height();
    let mut next = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let xc = state.get(x, y);
            let mut a_sum = 0.0;
            for r in 0..3 {
                for c in 0..3 {
                    let n = sample(state, x as isize + c as isize - 1, y as isize + r as isize - 1, boundary);
                    a_sum += tpl.a[r][c] * activation(n);
                }
            }
            let acc = (tpl.bias - xc) + a_sum + feed.get(x, y);
            let value = xc + tpl.dt * acc;
            if !value.is_finite() {
                return Err(CennError::NonFinite {
                    context: "cell state update".into(),
                });
            }
            next[y * w + x] = value;
        }
    }
    CellGrid::from_vec(w, h, next)
}

/// Initial state policy for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitState {
    /// Start from the input image, `x(0) = u`.
    Input,
    /// Start from the all-zero state.
    Zero,
}

impl Default for InitState {
    fn default() -> Self {
        InitState::Input
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub iterations: usize,
    #[serde(default)]
    pub init: InitState,
    #[serde(default)]
    pub boundary: Boundary,
    /// Stop early once the largest per-cell state change falls to or below
    /// this threshold.
    #[serde(default)]
    pub early_stop_tol: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            iterations: 100,
            init: InitState::default(),
            boundary: Boundary::default(),
            early_stop_tol: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    /// Final cell states.
    pub state: CellGrid,
    /// Final cell outputs, `activation(state)`.
    pub output: CellGrid,
    /// Update steps actually executed (smaller than requested when an early
    /// stop threshold is hit).
    pub iterations_run: usize,
}

fn initial_state(input: &CellGrid, init: InitState) -> CellGrid {
    match init {
        InitState::Input => input.clone(),
        InitState::Zero => {
            CellGrid::filled(input.width(), input.height(), 0.0).expect("input is non-empty")
        }
    }
}

/// Simulates a single template for `options.iterations` steps.
pub fn run(tpl: &TemplateSet, input: &CellGrid, options: &RunOptions) -> Result<RunResult> {
    run_from(tpl, input, initial_state(input, options.init), options)
}

/// Simulates a single template from an explicit initial state.
pub fn run_from(
    tpl: &TemplateSet,
    input: &CellGrid,
    state0: CellGrid,
    options: &RunOptions,
) -> Result<RunResult> {
    if options.iterations == 0 {
        return Err(CennError::InvalidTask("iterations must be >= 1".into()));
    }
    input.check_shape(&state0)?;
    let feed = control_feed(tpl, input, options.boundary);
    let mut state = state0;
    let mut iterations_run = 0;
    for n in 0..options.iterations {
        let next = step(tpl, &state, &feed, options.boundary)
            .map_err(|_| CennError::Diverged { iteration: n })?;
        iterations_run = n + 1;
        let stop = match options.early_stop_tol {
            Some(tol) => state.max_abs_diff(&next)? <= tol,
            None => false,
        };
        state = next;
        if stop {
            break;
        }
    }
    let output_vec: Vec<f64> = state.as_slice().iter().copied().map(activation).collect();
    let output = CellGrid::from_vec(state.width(), state.height(), output_vec)?;
    Ok(RunResult {
        state,
        output,
        iterations_run,
    })
}

/// Simulates a cyclic schedule of templates: step `n` uses template
/// `schedule[n % schedule.len()]`. All templates see the same input image;
/// each keeps its own precomputed control contribution.
pub fn run_schedule(
    schedule: &[TemplateSet],
    input: &CellGrid,
    options: &RunOptions,
) -> Result<RunResult> {
    if schedule.is_empty() {
        return Err(CennError::InvalidTask("empty template schedule".into()));
    }
    if options.iterations == 0 {
        return Err(CennError::InvalidTask("iterations must be >= 1".into()));
    }
    let feeds: Vec<CellGrid> = schedule
        .iter()
        .map(|tpl| control_feed(tpl, input, options.boundary))
        .collect();
    let mut state = initial_state(input, options.init);
    let mut iterations_run = 0;
    for n in 0..options.iterations {
        let idx = n % schedule.len();
        let next = step(&schedule[idx], &state, &feeds[idx], options.boundary)
            .map_err(|_| CennError::Diverged { iteration: n })?;
        iterations_run = n + 1;
        let stop = match options.early_stop_tol {
            Some(tol) => state.max_abs_diff(&next)? <= tol,
            None => false,
        };
        state = next;
        if stop {
            break;
        }
    }
    let output_vec: Vec<f64> = state.as_slice().iter().copied().map(activation).collect();
    let output = CellGrid::from_vec(state.width(), state.height(), output_vec)?;
    Ok(RunResult {
        state,
        output,
        iterations_run,
    })
}
