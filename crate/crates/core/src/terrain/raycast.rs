//! Ray / heightfield intersection by 2D DDA traversal of the bilinear patches.
//!
//! Within one patch the gap `f(t) = ray_z(t) - h(x(t), y(t))` is an exact
//! quadratic in the ray parameter, so evaluating it at the segment entry,
//! midpoint, exit and (when interior) the quadratic vertex cannot miss a
//! crossing. The first sign change is refined by bisection.

use super::{DtmGrid, TangentPlane};
use crate::error::{Error, Result};
use crate::geometry::Vec3;

pub(super) fn raycast(dtm: &DtmGrid, origin: &Vec3, dir: &Vec3) -> Result<TangentPlane> {
    let norm = dir.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDirection { norm });
    }

    let inside = dtm.contains(origin.x, origin.y);
    if inside {
        let h0 = dtm.height_at(origin.x, origin.y)?;
        if origin.z <= h0 {
            return Err(Error::StartsBelowTerrain);
        }
    }

    // Pure vertical rays stay in one column of the surface.
    if dir.x == 0.0 && dir.y == 0.0 {
        if !inside || dir.z >= 0.0 {
            return Err(Error::NoIntersection);
        }
        let h = dtm.height_at(origin.x, origin.y)?;
        let t = (origin.z - h) / -dir.z;
        return finish(dtm, origin, dir, t);
    }

    let (t_enter, t_exit) = match clip_to_extent(dtm, origin, dir) {
        Some(range) => range,
        None => return Err(Error::NoIntersection),
    };

    // Clip parameters computed from the slab test can reproject a hair outside
    // the extent; clamp the footprint before sampling the surface.
    let (gox, goy) = dtm.origin();
    let (gex, gey) = dtm.extent();
    let gap = |t: f64| -> Result<f64> {
        let p = origin + dir * t;
        let x = p.x.clamp(gox, gox + gex);
        let y = p.y.clamp(goy, goy + gey);
        Ok(p.z - dtm.height_at(x, y)?)
    };

    let mut t_lo = t_enter;
    let mut f_lo = gap(t_lo)?;
    if f_lo <= 0.0 {
        // Inside origins were vetted above; a lateral entry below the surface
        // means the skin is only approachable from underneath.
        return if inside {
            Err(Error::StartsBelowTerrain)
        } else {
            Err(Error::NoIntersection)
        };
    }

    let cs = dtm.cellsize();
    let (ox, oy) = dtm.origin();
    let max_steps = 4 * (dtm.ncols() + dtm.nrows()) + 16;

    for _ in 0..max_steps {
        if t_lo >= t_exit - 1e-15 {
            break;
        }
        // Ray climbing above the highest sample cannot come back down.
        if dir.z >= 0.0 && origin.z + dir.z * t_lo > dtm.max_height() {
            return Err(Error::NoIntersection);
        }

        let u_now = (origin.x + dir.x * t_lo - ox) / cs - 0.5;
        let v_now = (origin.y + dir.y * t_lo - oy) / cs - 0.5;
        let t_u = next_lattice_crossing(u_now, dir.x, cs, t_lo);
        let t_v = next_lattice_crossing(v_now, dir.y, cs, t_lo);
        let mut t_hi = t_u.min(t_v).min(t_exit);
        if t_hi <= t_lo {
            t_hi = (t_lo + 1e-9 * cs).min(t_exit);
        }

        let t_mid = 0.5 * (t_lo + t_hi);
        let f_mid = gap(t_mid)?;
        let f_hi = gap(t_hi)?;

        let mut candidates = vec![(t_lo, f_lo), (t_mid, f_mid), (t_hi, f_hi)];
        if let Some(t_vx) = quadratic_vertex(t_lo, t_mid, t_hi, f_lo, f_mid, f_hi) {
            if t_vx > t_lo && t_vx < t_hi {
                candidates.push((t_vx, gap(t_vx)?));
                candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            }
        }

        for pair in candidates.windows(2) {
            let (ta, fa) = pair[0];
            let (tb, fb) = pair[1];
            if fa > 0.0 && fb <= 0.0 {
                let t_hit = bisect(&gap, ta, tb, 1e-9 * cs)?;
                return finish(dtm, origin, dir, t_hit);
            }
        }

        t_lo = t_hi;
        f_lo = f_hi;
    }

    Err(Error::NoIntersection)
}

/// Ray parameter of the next integer crossing of the lattice coordinate, or
/// infinity when the ray does not advance along this axis.
fn next_lattice_crossing(coord_now: f64, dir_axis: f64, cellsize: f64, t_now: f64) -> f64 {
    if dir_axis == 0.0 {
        return f64::INFINITY;
    }
    let rate = dir_axis / cellsize;
    let next = if rate > 0.0 {
        let n = coord_now.floor() + 1.0;
        if n - coord_now < 1e-12 {
            n + 1.0
        } else {
            n
        }
    } else {
        let n = coord_now.ceil() - 1.0;
        if coord_now - n < 1e-12 {
            n - 1.0
        } else {
            n
        }
    };
    t_now + (next - coord_now) / rate
}

/// Vertex of the quadratic through three equally spaced samples, if it exists.
fn quadratic_vertex(
    t_lo: f64,
    t_mid: f64,
    t_hi: f64,
    f_lo: f64,
    f_mid: f64,
    f_hi: f64,
) -> Option<f64> {
    let h = 0.5 * (t_hi - t_lo);
    if h <= 0.0 {
        return None;
    }
    let curvature = (f_lo - 2.0 * f_mid + f_hi) / (h * h);
    if curvature.abs() < 1e-300 {
        return None;
    }
    let slope_mid = (f_hi - f_lo) / (2.0 * h);
    Some(t_mid - slope_mid / curvature)
}

fn bisect(gap: &impl Fn(f64) -> Result<f64>, mut ta: f64, mut tb: f64, tol: f64) -> Result<f64> {
    let mut t_best = tb;
    for _ in 0..200 {
        let tm = 0.5 * (ta + tb);
        let fm = gap(tm)?;
        t_best = tm;
        if fm.abs() < tol {
            break;
        }
        if fm > 0.0 {
            ta = tm;
        } else {
            tb = tm;
        }
        if tb - ta < f64::EPSILON * tb.abs().max(1.0) {
            break;
        }
    }
    Ok(t_best)
}

fn finish(dtm: &DtmGrid, origin: &Vec3, dir: &Vec3, t: f64) -> Result<TangentPlane> {
    let p = origin + dir * t;
    let (ox, oy) = dtm.origin();
    let (ex, ey) = dtm.extent();
    let x = p.x.clamp(ox, ox + ex);
    let y = p.y.clamp(oy, oy + ey);
    // Snap z onto the surface so the on-surface invariant holds exactly.
    let h = dtm.height_at(x, y)?;
    let normal = dtm.surface_normal(x, y)?;
    Ok(TangentPlane {
        point: Vec3::new(x, y, h),
        normal,
    })
}

/// Clip the ray to the 2D footprint of the grid; returns the parameter range.
fn clip_to_extent(dtm: &DtmGrid, origin: &Vec3, dir: &Vec3) -> Option<(f64, f64)> {
    let (ox, oy) = dtm.origin();
    let (ex, ey) = dtm.extent();
    let mut t0 = 0.0_f64;
    let mut t1 = f64::INFINITY;
    for (p, d, lo, hi) in [
        (origin.x, dir.x, ox, ox + ex),
        (origin.y, dir.y, oy, oy + ey),
    ] {
        if d == 0.0 {
            if p < lo || p > hi {
                return None;
            }
        } else {
            let (mut a, mut b) = ((lo - p) / d, (hi - p) / d);
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            t0 = t0.max(a);
            t1 = t1.min(b);
        }
    }
    if t1 <= t0 {
        None
    } else {
        Some((t0, t1))
    }
}
