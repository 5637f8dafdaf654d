//! Digital terrain map storage, bilinear interpolation, surface normals and
//! ray intersection.
//!
//! Grids use the ESRI cell convention: a grid of `ncols x nrows` cells of side
//! `cellsize` covers `[origin, origin + n*cellsize]` on each axis, with height
//! samples at cell centers. The continuous surface is the bilinear
//! interpolation of the four surrounding samples; inside the outer half-cell
//! ring the interpolation coordinate is clamped, which extends the boundary
//! patches without ever extrapolating. Queries outside the extent are errors.
//!
//! Grids are immutable after construction, so all queries may run concurrently.

mod ascii;
mod fractal;
mod raycast;

pub use ascii::{load_dtm, read_dtm, save_dtm, write_dtm};
pub use fractal::generate_fractal_terrain;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Default marker for cells without data.
pub const DEFAULT_NODATA: f64 = -9999.0;

/// Regular heightmap with origin, cell size and height samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DtmGrid {
    ncols: usize,
    nrows: usize,
    origin_x: f64,
    origin_y: f64,
    cellsize: f64,
    nodata: f64,
    /// Row-major, row 0 at the southern edge (minimum y).
    heights: Vec<f64>,
    max_height: f64,
}

/// Local linearization of the terrain: a point on the surface and the unit,
/// upward-facing normal of the bilinear patch containing it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentPlane {
    pub point: Vec3,
    pub normal: Vec3,
}

/// Resolved interpolation coordinates for a query point.
#[derive(Debug, Clone, Copy)]
struct PatchCoord {
    iu: usize,
    iv: usize,
    fu: f64,
    fv: f64,
    clamped_u: bool,
    clamped_v: bool,
}

impl DtmGrid {
    pub fn new(
        ncols: usize,
        nrows: usize,
        origin_x: f64,
        origin_y: f64,
        cellsize: f64,
        nodata: f64,
        heights: Vec<f64>,
    ) -> Result<Self> {
        if ncols < 2 || nrows < 2 {
            return Err(Error::InvalidParameter {
                reason: format!("grid must be at least 2x2, got {ncols}x{nrows}"),
            });
        }
        if !(cellsize.is_finite() && cellsize > 0.0) {
            return Err(Error::InvalidParameter {
                reason: format!("cellsize must be positive, got {cellsize}"),
            });
        }
        if heights.len() != ncols * nrows {
            return Err(Error::InvalidParameter {
                reason: format!(
                    "expected {} height samples, got {}",
                    ncols * nrows,
                    heights.len()
                ),
            });
        }
        let mut max_height = f64::NEG_INFINITY;
        for &h in &heights {
            if h == nodata {
                continue;
            }
            if !h.is_finite() {
                return Err(Error::InvalidParameter {
                    reason: format!("non-finite height sample {h}"),
                });
            }
            max_height = max_height.max(h);
        }
        Ok(Self {
            ncols,
            nrows,
            origin_x,
            origin_y,
            cellsize,
            nodata,
            heights,
            max_height,
        })
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn origin(&self) -> (f64, f64) {
        (self.origin_x, self.origin_y)
    }

    pub fn cellsize(&self) -> f64 {
        self.cellsize
    }

    pub fn nodata(&self) -> f64 {
        self.nodata
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn max_height(&self) -> f64 {
        self.max_height
    }

    /// Covered width and depth: `(ncols * cellsize, nrows * cellsize)`.
    pub fn extent(&self) -> (f64, f64) {
        (
            self.ncols as f64 * self.cellsize,
            self.nrows as f64 * self.cellsize,
        )
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (ex, ey) = self.extent();
        x >= self.origin_x
            && x <= self.origin_x + ex
            && y >= self.origin_y
            && y <= self.origin_y + ey
    }

    /// Stored sample at grid indices (row from the southern edge).
    pub fn sample(&self, row: usize, col: usize) -> f64 {
        self.heights[row * self.ncols + col]
    }

    /// World position of a sample center.
    pub fn sample_position(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.origin_x + (col as f64 + 0.5) * self.cellsize,
            self.origin_y + (row as f64 + 0.5) * self.cellsize,
        )
    }

    fn patch_coord(&self, x: f64, y: f64) -> Result<PatchCoord> {
        if !self.contains(x, y) {
            return Err(Error::OutOfBounds { x, y });
        }
        // Continuous sample coordinates: sample (row, col) sits at (v, u) == (row, col).
        let u = (x - self.origin_x) / self.cellsize - 0.5;
        let v = (y - self.origin_y) / self.cellsize - 0.5;
        let iu = (u.floor() as isize).clamp(0, self.ncols as isize - 2) as usize;
        let iv = (v.floor() as isize).clamp(0, self.nrows as isize - 2) as usize;
        let fu_raw = u - iu as f64;
        let fv_raw = v - iv as f64;
        let fu = fu_raw.clamp(0.0, 1.0);
        let fv = fv_raw.clamp(0.0, 1.0);
        Ok(PatchCoord {
            iu,
            iv,
            fu,
            fv,
            clamped_u: fu_raw != fu,
            clamped_v: fv_raw != fv,
        })
    }

    /// Corner samples `[h00, h10, h01, h11]` of patch `(iu, iv)`; errors on NODATA.
    fn patch_heights(&self, iu: usize, iv: usize, x: f64, y: f64) -> Result<[f64; 4]> {
        let h00 = self.sample(iv, iu);
        let h10 = self.sample(iv, iu + 1);
        let h01 = self.sample(iv + 1, iu);
        let h11 = self.sample(iv + 1, iu + 1);
        if h00 == self.nodata || h10 == self.nodata || h01 == self.nodata || h11 == self.nodata {
            return Err(Error::NoDataCell { x, y });
        }
        Ok([h00, h10, h01, h11])
    }

    fn surface_height_at(&self, pc: &PatchCoord, x: f64, y: f64) -> Result<f64> {
        let [h00, h10, h01, h11] = self.patch_heights(pc.iu, pc.iv, x, y)?;
        let (fu, fv) = (pc.fu, pc.fv);
        Ok(h00 * (1.0 - fu) * (1.0 - fv)
            + h10 * fu * (1.0 - fv)
            + h01 * (1.0 - fu) * fv
            + h11 * fu * fv)
    }

    /// Gradient `(dh/dx, dh/dy)` of the patch; components along a clamped
    /// coordinate are zero because the surface is constant there.
    fn surface_gradient_at(&self, pc: &PatchCoord, x: f64, y: f64) -> Result<(f64, f64)> {
        let [h00, h10, h01, h11] = self.patch_heights(pc.iu, pc.iv, x, y)?;
        let hx = if pc.clamped_u {
            0.0
        } else {
            ((1.0 - pc.fv) * (h10 - h00) + pc.fv * (h11 - h01)) / self.cellsize
        };
        let hy = if pc.clamped_v {
            0.0
        } else {
            ((1.0 - pc.fu) * (h01 - h00) + pc.fu * (h11 - h10)) / self.cellsize
        };
        Ok((hx, hy))
    }

    /// Interpolated surface height at `(x, y)`; exact at sample centers.
    pub fn height_at(&self, x: f64, y: f64) -> Result<f64> {
        let pc = self.patch_coord(x, y)?;
        self.surface_height_at(&pc, x, y)
    }

    /// Unit upward normal of the bilinear patch at `(x, y)`.
    ///
    /// Requires a one-cell interior margin so the patch is unambiguous.
    pub fn normal_at(&self, x: f64, y: f64) -> Result<Vec3> {
        let m = self.cellsize;
        let (ex, ey) = self.extent();
        if x < self.origin_x + m
            || x > self.origin_x + ex - m
            || y < self.origin_y + m
            || y > self.origin_y + ey - m
        {
            return Err(Error::OutOfBounds { x, y });
        }
        let pc = self.patch_coord(x, y)?;
        let (hx, hy) = self.surface_gradient_at(&pc, x, y)?;
        Ok(Vec3::new(-hx, -hy, 1.0).normalize())
    }

    /// Normal without the interior-margin check; used by the raycaster which
    /// may legitimately hit the boundary ring where the surface is flat-extended.
    fn surface_normal(&self, x: f64, y: f64) -> Result<Vec3> {
        let pc = self.patch_coord(x, y)?;
        let (hx, hy) = self.surface_gradient_at(&pc, x, y)?;
        Ok(Vec3::new(-hx, -hy, 1.0).normalize())
    }

    /// First intersection of the ray `origin + t * dir` with the surface.
    pub fn raycast(&self, origin: &Vec3, dir: &Vec3) -> Result<TangentPlane> {
        raycast::raycast(self, origin, dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(super) fn constant_grid(ncols: usize, nrows: usize, h: f64) -> DtmGrid {
        DtmGrid::new(
            ncols,
            nrows,
            0.0,
            0.0,
            1.0,
            DEFAULT_NODATA,
            vec![h; ncols * nrows],
        )
        .unwrap()
    }

    /// Grid sampling an analytic function at the cell centers.
    pub(super) fn function_grid(
        ncols: usize,
        nrows: usize,
        cellsize: f64,
        f: impl Fn(f64, f64) -> f64,
    ) -> DtmGrid {
        let mut heights = Vec::with_capacity(ncols * nrows);
        for r in 0..nrows {
            for c in 0..ncols {
                let x = (c as f64 + 0.5) * cellsize;
                let y = (r as f64 + 0.5) * cellsize;
                heights.push(f(x, y));
            }
        }
        DtmGrid::new(ncols, nrows, 0.0, 0.0, cellsize, DEFAULT_NODATA, heights).unwrap()
    }

    #[test]
    fn constant_grid_interpolates_constant() {
        let dtm = constant_grid(8, 6, 5.0);
        for &(x, y) in &[(0.0, 0.0), (3.7, 2.2), (8.0, 6.0), (0.49, 5.51)] {
            assert_abs_diff_eq!(dtm.height_at(x, y).unwrap(), 5.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn bilinear_mean_at_cell_center() {
        // Corners 0, 0, 0, 4 -> value 1 at the patch center.
        let mut heights = vec![0.0; 4];
        heights[3] = 4.0;
        let dtm = DtmGrid::new(2, 2, 0.0, 0.0, 1.0, DEFAULT_NODATA, heights).unwrap();
        assert_abs_diff_eq!(dtm.height_at(1.0, 1.0).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn exact_at_sample_centers() {
        let dtm = function_grid(7, 5, 2.0, |x, y| (1.3 * x).sin() + 0.2 * y * y);
        for r in 0..dtm.nrows() {
            for c in 0..dtm.ncols() {
                let (x, y) = dtm.sample_position(r, c);
                assert_abs_diff_eq!(
                    dtm.height_at(x, y).unwrap(),
                    dtm.sample(r, c),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn out_of_bounds_and_nodata() {
        let dtm = constant_grid(4, 4, 1.0);
        assert!(matches!(
            dtm.height_at(-0.1, 2.0),
            Err(Error::OutOfBounds { .. })
        ));
        assert!(matches!(
            dtm.height_at(2.0, 4.01),
            Err(Error::OutOfBounds { .. })
        ));

        let mut heights = vec![1.0; 16];
        heights[5] = DEFAULT_NODATA;
        let dtm = DtmGrid::new(4, 4, 0.0, 0.0, 1.0, DEFAULT_NODATA, heights).unwrap();
        assert!(matches!(
            dtm.height_at(1.5, 1.5),
            Err(Error::NoDataCell { .. })
        ));
        // Far corner patches do not touch the hole.
        assert!(dtm.height_at(3.5, 3.5).is_ok());
    }

    #[test]
    fn flat_grid_normal_is_up() {
        let dtm = constant_grid(6, 6, 2.0);
        assert_abs_diff_eq!(dtm.normal_at(3.0, 3.0).unwrap(), Vec3::z(), epsilon = 1e-15);
    }

    #[test]
    fn planar_grid_normal_is_analytic() {
        // z = x, cellsize 1 -> normal (-1, 0, 1)/sqrt(2) everywhere interior.
        let dtm = function_grid(10, 10, 1.0, |x, _| x);
        let expected = Vec3::new(-1.0, 0.0, 1.0) / 2.0_f64.sqrt();
        for &(x, y) in &[(2.0, 2.0), (5.3, 7.1), (8.9, 1.2)] {
            assert_abs_diff_eq!(dtm.normal_at(x, y).unwrap(), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn normal_requires_interior_margin() {
        let dtm = constant_grid(6, 6, 0.0);
        assert!(matches!(
            dtm.normal_at(0.5, 3.0),
            Err(Error::OutOfBounds { .. })
        ));
        assert!(dtm.normal_at(1.0, 3.0).is_ok());
    }

    #[test]
    fn normal_matches_finite_differences_on_fractal() {
        let dtm = generate_fractal_terrain(11, 64, 64, 1.0, 20.0).unwrap();
        let step = 1e-4 * dtm.cellsize();
        for &(x, y) in &[(10.3, 20.9), (33.33, 41.7), (50.1, 12.6), (27.0, 27.0)] {
            let n = dtm.normal_at(x, y).unwrap();
            let hx = (dtm.height_at(x + step, y).unwrap() - dtm.height_at(x - step, y).unwrap())
                / (2.0 * step);
            let hy = (dtm.height_at(x, y + step).unwrap() - dtm.height_at(x, y - step).unwrap())
                / (2.0 * step);
            let fd = Vec3::new(-hx, -hy, 1.0).normalize();
            assert_abs_diff_eq!(n, fd, epsilon = 1e-5);
        }
    }

    #[test]
    fn height_is_continuous_across_cell_edges() {
        let relief = 30.0;
        let dtm = generate_fractal_terrain(3, 48, 48, 1.0, relief).unwrap();
        let step = 1e-8 * dtm.cellsize();
        // Sample pairs straddling interior patch edges (integer u at x = c + 0.5).
        for c in [5usize, 17, 30] {
            let x_edge = (c as f64 + 1.5) * dtm.cellsize();
            for y in [7.3, 21.9, 40.1] {
                let a = dtm.height_at(x_edge - step, y).unwrap();
                let b = dtm.height_at(x_edge + step, y).unwrap();
                assert!((a - b).abs() < 1e-6 * relief);
            }
        }
    }

    #[test]
    fn grid_validation() {
        assert!(DtmGrid::new(1, 4, 0.0, 0.0, 1.0, DEFAULT_NODATA, vec![0.0; 4]).is_err());
        assert!(DtmGrid::new(4, 4, 0.0, 0.0, 0.0, DEFAULT_NODATA, vec![0.0; 16]).is_err());
        assert!(DtmGrid::new(4, 4, 0.0, 0.0, 1.0, DEFAULT_NODATA, vec![0.0; 15]).is_err());
        assert!(DtmGrid::new(2, 2, 0.0, 0.0, 1.0, DEFAULT_NODATA, vec![f64::NAN; 4]).is_err());
    }
}
