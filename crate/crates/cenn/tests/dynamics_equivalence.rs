//! Checks the simulation engine against a deliberately naive re-statement
//! of the cell update rule: per cell, straight-line neighborhood sums in
//! row-major term order, no precomputation beyond what the accumulation
//! contract fixes. The engine documents its accumulation order
//! (`(bias - x) + feedback_sum + control_sum`, terms row-major), so the two
//! routes must agree bitwise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cenn::dynamics::{run, InitState, RunOptions};
use cenn::grid::{Boundary, CellGrid};
use cenn::template::TemplateSet;

fn clamp_activation(x: f64) -> f64 {
    0.5 * ((x + 1.0).abs() - (x - 1.0).abs())
}

fn sample_oracle(grid: &CellGrid, x: i64, y: i64, boundary: Boundary) -> f64 {
    let w = grid.width() as i64;
    let h = grid.height() as i64;
    match boundary {
        Boundary::FixedZero => {
            if x < 0 || y < 0 || x >= w || y >= h {
                0.0
            } else {
                grid.get(x as usize, y as usize)
            }
        }
        Boundary::Replicate => {
            grid.get(x.clamp(0, w - 1) as usize, y.clamp(0, h - 1) as usize)
        }
    }
}

fn oracle_step(
    tpl: &TemplateSet,
    state: &CellGrid,
    input: &CellGrid,
    boundary: Boundary,
) -> CellGrid {
    let mut next = state.clone();
    for y in 0..state.height() {
        for x in 0..state.width() {
            let mut a_sum = 0.0;
            for r in 0..3 {
                for c in 0..3 {
                    let nx = x as i64 + c as i64 - 1;
                    let ny = y as i64 + r as i64 - 1;
                    a_sum += tpl.a[r][c] * clamp_activation(sample_oracle(state, nx, ny, boundary));
                }
            }
            let mut b_sum = 0.0;
            for r in 0..3 {
                for c in 0..3 {
                    let nx = x as i64 + c as i64 - 1;
                    let ny = y as i64 + r as i64 - 1;
                    b_sum += tpl.b[r][c] * sample_oracle(input, nx, ny, boundary);
                }
            }
            let xc = state.get(x, y);
            let acc = (tpl.bias - xc) + a_sum + b_sum;
            next.set(x, y, xc + tpl.dt * acc);
        }
    }
    next
}

fn random_grid(rng: &mut ChaCha8Rng, width: usize, height: usize) -> CellGrid {
    let data = (0..width * height)
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    CellGrid::from_vec(width, height, data).unwrap()
}

fn awkward_template() -> TemplateSet {
    // Deliberately non-dyadic values so any reassociation shows up.
    let a = [
        [0.13, -0.21, 0.34],
        [-0.55, 1.89, -0.55],
        [0.34, -0.21, 0.13],
    ];
    let b = [
        [-0.07, 0.11, -0.07],
        [0.11, 0.93, 0.11],
        [-0.07, 0.11, -0.07],
    ];
    TemplateSet::new(a, b, -0.37, 0.1).unwrap()
}

fn compare(width: usize, height: usize, iterations: usize, boundary: Boundary, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input = random_grid(&mut rng, width, height);
    let tpl = awkward_template();

    let opts = RunOptions {
        iterations,
        init: InitState::Input,
        boundary,
        early_stop_tol: None,
    };
    let engine = run(&tpl, &input, &opts).unwrap();

    let mut state = input.clone();
    for _ in 0..iterations {
        state = oracle_step(&tpl, &state, &input, boundary);
    }

    assert_eq!(engine.iterations_run, iterations);
    engine.state.max_abs_diff(&state).unwrap()
}

#[test]
fn engine_matches_oracle_bitwise_on_small_grids() {
    for boundary in [Boundary::FixedZero, Boundary::Replicate] {
        let diff = compare(8, 8, 5, boundary, 11);
        assert_eq!(diff, 0.0, "boundary {boundary:?}");
        let diff = compare(7, 5, 5, boundary, 12);
        assert_eq!(diff, 0.0, "boundary {boundary:?}, non-square");
    }
}

#[test]
fn engine_stays_within_tolerance_on_longer_runs() {
    for boundary in [Boundary::FixedZero, Boundary::Replicate] {
        let diff = compare(16, 16, 50, boundary, 21);
        assert!(diff <= 1e-12, "boundary {boundary:?}: diff {diff}");
    }
}

#[test]
fn outputs_are_activated_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let input = random_grid(&mut rng, 10, 6);
    let tpl = awkward_template();
    let result = run(&tpl, &input, &RunOptions::default()).unwrap();
    for y in 0..6 {
        for x in 0..10 {
            assert_eq!(
                result.output.get(x, y),
                clamp_activation(result.state.get(x, y))
            );
        }
    }
}
