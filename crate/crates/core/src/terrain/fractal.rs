//! Deterministic synthetic terrain via the diamond-square construction.

use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

use super::{DtmGrid, DEFAULT_NODATA};
use crate::error::{Error, Result};

/// Generates a fractal heightmap and rescales it so that the height span
/// `max(h) - min(h)` equals `relief` exactly. Identical seeds produce
/// identical grids.
pub fn generate_fractal_terrain(
    seed: u64,
    ncols: usize,
    nrows: usize,
    cellsize: f64,
    relief: f64,
) -> Result<DtmGrid> {
    if !(relief.is_finite() && relief > 0.0) {
        return Err(Error::InvalidParameter {
            reason: format!("relief must be positive, got {relief}"),
        });
    }
    if ncols < 2 || nrows < 2 {
        return Err(Error::InvalidParameter {
            reason: format!("grid must be at least 2x2, got {ncols}x{nrows}"),
        });
    }

    // Diamond-square wants a (2^k + 1) square lattice; generate and crop.
    let lattice = (ncols.max(nrows) - 1).next_power_of_two() + 1;
    let mut grid = vec![0.0_f64; lattice * lattice];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let idx = |r: usize, c: usize| r * lattice + c;
    for &(r, c) in &[
        (0, 0),
        (0, lattice - 1),
        (lattice - 1, 0),
        (lattice - 1, lattice - 1),
    ] {
        grid[idx(r, c)] = rng.gen_range(-1.0..1.0);
    }

    let mut step = lattice - 1;
    let mut amp = 1.0_f64;
    while step >= 2 {
        let half = step / 2;

        // Diamond pass: cell centers from their four lattice corners.
        for r in (half..lattice).step_by(step) {
            for c in (half..lattice).step_by(step) {
                let avg = (grid[idx(r - half, c - half)]
                    + grid[idx(r - half, c + half)]
                    + grid[idx(r + half, c - half)]
                    + grid[idx(r + half, c + half)])
                    / 4.0;
                grid[idx(r, c)] = avg + rng.gen_range(-amp..amp);
            }
        }

        // Square pass: edge midpoints from their available axial neighbors.
        for r in (0..lattice).step_by(half) {
            let start = if (r / half) % 2 == 0 { half } else { 0 };
            for c in (start..lattice).step_by(step) {
                let mut sum = 0.0;
                let mut count = 0.0;
                if r >= half {
                    sum += grid[idx(r - half, c)];
                    count += 1.0;
                }
                if r + half < lattice {
                    sum += grid[idx(r + half, c)];
                    count += 1.0;
                }
                if c >= half {
                    sum += grid[idx(r, c - half)];
                    count += 1.0;
                }
                if c + half < lattice {
                    sum += grid[idx(r, c + half)];
                    count += 1.0;
                }
                grid[idx(r, c)] = sum / count + rng.gen_range(-amp..amp);
            }
        }

        step = half;
        amp *= 0.5;
    }

    let mut heights = Vec::with_capacity(ncols * nrows);
    for r in 0..nrows {
        for c in 0..ncols {
            heights.push(grid[idx(r, c)]);
        }
    }

    let min = heights.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = heights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    if span <= 0.0 {
        return Err(Error::InvalidParameter {
            reason: "generated lattice is degenerate (zero height span)".to_string(),
        });
    }
    for h in &mut heights {
        // (h - min) / span reaches exactly 1.0 at the maximum, so the final
        // span is exactly `relief`.
        *h = (*h - min) / span * relief;
    }

    DtmGrid::new(ncols, nrows, 0.0, 0.0, cellsize, DEFAULT_NODATA, heights)
}
