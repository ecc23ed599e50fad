//! Synthetic training tasks: procedurally generated input/target image
//! pairs for denoising, edge extraction, and object detection. Values are
//! bipolar (+1 black, -1 white), matching the image I/O convention.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CennError, Result};
use crate::grid::CellGrid;

/// Minimum edge length of generated images; anything smaller leaves no room
/// for shapes and their surroundings.
pub const MIN_SIZE: usize = 8;

/// What the target teaches relative to the input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TaskKind {
    /// Input is the clean shape image with a fraction `level` of cells
    /// flipped; target is the clean image.
    Noise { level: f64 },
    /// Input is a filled shape image; target marks black cells adjacent
    /// (4-neighborhood) to white.
    Edge,
    /// Input overlays solid shapes on a horizontal gray gradient; target
    /// marks the shape cells.
    Detect,
}

/// One pair request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub width: usize,
    pub height: usize,
    pub kind: TaskKind,
    pub seed: u64,
}

/// Exact number of cells the noise task flips: the level rounded against
/// the image area (half away from zero).
pub fn flip_count(level: f64, area: usize) -> usize {
    (level * area as f64).round() as usize
}

fn check_size(width: usize, height: usize) -> Result<()> {
    if width < MIN_SIZE || height < MIN_SIZE {
        Err(CennError::InvalidTask(format!(
            "image {width}x{height} below minimum {MIN_SIZE}x{MIN_SIZE}"
        )))
    } else {
        Ok(())
    }
}

/// Draws two to four filled shapes (discs and rectangles) on a white
/// canvas.
fn draw_shapes(rng: &mut ChaCha8Rng, width: usize, height: usize) -> CellGrid {
    let mut grid = CellGrid::filled(width, height, -1.0).expect("validated size");
    let min_dim = width.min(height);
    let shapes = rng.random_range(2..=4);
    for _ in 0..shapes {
        if rng.random::<bool>() {
            let r = rng.random_range(min_dim / 8..=min_dim / 3).max(1) as isize;
            let cx = rng.random_range(0..width) as isize;
            let cy = rng.random_range(0..height) as isize;
            for y in (cy - r).max(0)..(cy + r + 1).min(height as isize) {
                for x in (cx - r).max(0)..(cx + r + 1).min(width as isize) {
                    if (x - cx).pow(2) + (y - cy).pow(2) <= r * r {
                        grid.set(x as usize, y as usize, 1.0);
                    }
                }
            }
        } else {
            let w = rng.random_range(min_dim / 4..=min_dim / 2).max(1);
            let h = rng.random_range(min_dim / 4..=min_dim / 2).max(1);
            let x0 = rng.random_range(0..width.saturating_sub(w).max(1));
            let y0 = rng.random_range(0..height.saturating_sub(h).max(1));
            for y in y0..(y0 + h).min(height) {
                for x in x0..(x0 + w).min(width) {
                    grid.set(x, y, 1.0);
                }
            }
        }
    }
    grid
}

/// Generates one (input, target) pair.
pub fn synth_pair(cfg: &SynthConfig) -> Result<(CellGrid, CellGrid)> {
    check_size(cfg.width, cfg.height)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    match cfg.kind {
        TaskKind::Noise { level } => {
            if !(0.0..=1.0).contains(&level) {
                return Err(CennError::InvalidTask(format!(
                    "noise level {level} outside [0, 1]"
                )));
            }
            let clean = draw_shapes(&mut rng, cfg.width, cfg.height);
            let area = clean.area();
            let flips = flip_count(level, area).min(area);
            let mut noisy = clean.clone();
            let cells = noisy.as_mut_slice();
            for idx in sample(&mut rng, area, flips) {
                cells[idx] = -cells[idx];
            }
            Ok((noisy, clean))
        }
        TaskKind::Edge => {
            let filled = draw_shapes(&mut rng, cfg.width, cfg.height);
            let mut edges = CellGrid::filled(cfg.width, cfg.height, -1.0)?;
            for y in 0..cfg.height {
                for x in 0..cfg.width {
                    if filled.get(x, y) < 0.0 {
                        continue;
                    }
                    // Outside the image counts as white, so shapes touching
                    // the border keep their outline.
                    let white_neighbor = [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)]
                        .iter()
                        .any(|&(dx, dy)| {
                            let nx = x as i64 + dx;
                            let ny = y as i64 + dy;
                            nx < 0
                                || ny < 0
                                || nx >= cfg.width as i64
                                || ny >= cfg.height as i64
                                || filled.get(nx as usize, ny as usize) < 0.0
                        });
                    if white_neighbor {
                        edges.set(x, y, 1.0);
                    }
                }
            }
            Ok((filled, edges))
        }
        TaskKind::Detect => {
            let mask = draw_shapes(&mut rng, cfg.width, cfg.height);
            let mut input = CellGrid::filled(cfg.width, cfg.height, 0.0)?;
            let span = (cfg.width - 1).max(1) as f64;
            for y in 0..cfg.height {
                for x in 0..cfg.width {
                    if mask.get(x, y) > 0.0 {
                        input.set(x, y, 1.0);
                    } else {
                        input.set(x, y, 0.5 - x as f64 / span);
                    }
                }
            }
            Ok((input, mask))
        }
    }
}
