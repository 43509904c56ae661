//! Level-set grids and the explicit evolution `u_t + v |grad u| = 0`.
//!
//! Sign convention: the region is `u <= 0`, and a positive outward speed
//! `v` grows it. Advection is upwinded with the `Delta+` / `Delta-` switch;
//! the curvature term is discretized with central differences.
//! Out-of-grid samples are obtained by linear extrapolation, which turns
//! every missing neighbor into the available one-sided difference.

mod contour;
mod distance;

pub use contour::{mask_perimeter, perimeter, MASK_SMOOTHING};
pub use distance::{init_signed_distance, reinitialize, squared_distance_transform};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{check_dims, RegionMask};

/// Safety factor applied to the explicit time-step bound.
pub const CFL_FACTOR: f64 = 0.9;
/// Largest time step ever returned by [`stable_dt`].
pub const MAX_DT: f64 = 1.0;
/// Gradient norms below this are treated as degenerate by [`curvature`].
const GRAD_EPS_SQ: f64 = 1e-12;

/// Scalar field on the pixel lattice whose zero level set is the tracked curve.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetGrid {
    width: usize,
    height: usize,
    u: Vec<f64>,
}

impl LevelSetGrid {
    pub fn new(width: usize, height: usize, u: Vec<f64>) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::DimensionTooSmall {
                width,
                height,
                min: 2,
            });
        }
        if u.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "grid data length {} != {width}x{height}",
                u.len()
            )));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite level-set value".into()));
        }
        Ok(Self { width, height, u })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut u = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                u.push(f(x, y));
            }
        }
        Self::new(width, height, u)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn into_values(self) -> Vec<f64> {
        self.u
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.u[y * self.width + x]
    }

    /// Sample with at most one cell of linear extrapolation past each edge.
    #[inline]
    fn at(&self, x: isize, y: isize) -> f64 {
        let (w, h) = (self.width as isize, self.height as isize);
        if x < 0 {
            2.0 * self.at(0, y) - self.at(1, y)
        } else if x >= w {
            2.0 * self.at(w - 1, y) - self.at(w - 2, y)
        } else if y < 0 {
            2.0 * self.at(x, 0) - self.at(x, 1)
        } else if y >= h {
            2.0 * self.at(x, h - 1) - self.at(x, h - 2)
        } else {
            self.u[(y * w + x) as usize]
        }
    }

    /// One-sided differences `(D-x, D+x, D-y, D+y)` at `(x, y)`.
    #[inline]
    fn one_sided(&self, x: usize, y: usize) -> [f64; 4] {
        let (xi, yi) = (x as isize, y as isize);
        let c = self.get(x, y);
        [
            c - self.at(xi - 1, yi),
            self.at(xi + 1, yi) - c,
            c - self.at(xi, yi - 1),
            self.at(xi, yi + 1) - c,
        ]
    }

    /// Central-difference gradient `(u_x, u_y)`.
    #[inline]
    pub fn central_gradient(&self, x: usize, y: usize) -> (f64, f64) {
        let (xi, yi) = (x as isize, y as isize);
        (
            0.5 * (self.at(xi + 1, yi) - self.at(xi - 1, yi)),
            0.5 * (self.at(xi, yi + 1) - self.at(xi, yi - 1)),
        )
    }
}

/// Outward-normal speed per pixel; positive values grow the region.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedField {
    width: usize,
    height: usize,
    v: Vec<f64>,
}

impl SpeedField {
    pub fn new(width: usize, height: usize, v: Vec<f64>) -> Result<Self> {
        if v.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "speed data length {} != {width}x{height}",
                v.len()
            )));
        }
        if v.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParameter("non-finite speed".into()));
        }
        Ok(Self { width, height, v })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            v: vec![0.0; width * height],
        }
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            v: vec![value; width * height],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.v
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.v[y * self.width + x]
    }

    pub fn max_abs(&self) -> f64 {
        self.v.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    /// Pointwise `self += scale * other`.
    pub fn add_scaled(&mut self, other: &SpeedField, scale: f64) {
        debug_assert_eq!(self.dims(), other.dims());
        self.v
            .iter_mut()
            .zip(&other.v)
            .for_each(|(a, b)| *a += scale * b);
    }
}

/// Upwind gradient norm used where the speed is non-negative:
/// `[max(D-x,0)^2 + min(D+x,0)^2 + max(D-y,0)^2 + min(D+y,0)^2]^(1/2)`.
pub fn upwind_gradient_plus(u: &LevelSetGrid, x: usize, y: usize) -> f64 {
    let [dmx, dpx, dmy, dpy] = u.one_sided(x, y);
    (dmx.max(0.0).powi(2) + dpx.min(0.0).powi(2) + dmy.max(0.0).powi(2) + dpy.min(0.0).powi(2))
        .sqrt()
}

/// Upwind gradient norm used where the speed is negative:
/// `[max(D+x,0)^2 + min(D-x,0)^2 + max(D+y,0)^2 + min(D-y,0)^2]^(1/2)`.
pub fn upwind_gradient_minus(u: &LevelSetGrid, x: usize, y: usize) -> f64 {
    let [dmx, dpx, dmy, dpy] = u.one_sided(x, y);
    (dpx.max(0.0).powi(2) + dmx.min(0.0).powi(2) + dpy.max(0.0).powi(2) + dmy.min(0.0).powi(2))
        .sqrt()
}

/// Mean curvature `div(grad u / |grad u|)` from central differences,
/// clamped to `[-1, 1]` (one over the unit grid spacing).
pub fn curvature(u: &LevelSetGrid, x: usize, y: usize) -> f64 {
    let (xi, yi) = (x as isize, y as isize);
    let c = u.get(x, y);
    let (ux, uy) = u.central_gradient(x, y);
    let g2 = ux * ux + uy * uy;
    if g2 < GRAD_EPS_SQ {
        return 0.0;
    }
    let uxx = u.at(xi + 1, yi) - 2.0 * c + u.at(xi - 1, yi);
    let uyy = u.at(xi, yi + 1) - 2.0 * c + u.at(xi, yi - 1);
    let uxy = 0.25
        * (u.at(xi + 1, yi + 1) - u.at(xi + 1, yi - 1) - u.at(xi - 1, yi + 1)
            + u.at(xi - 1, yi - 1));
    let k = (uxx * uy * uy - 2.0 * ux * uy * uxy + uyy * ux * ux) / g2.powf(1.5);
    k.clamp(-1.0, 1.0)
}

/// Largest stable explicit step: `0.9 / (max|v| + 4 lambda)`, never above 1.
pub fn stable_dt(v: &SpeedField, curvature_weight: f64) -> f64 {
    let rate = v.max_abs() + 4.0 * curvature_weight.max(0.0);
    if rate > 0.0 {
        (CFL_FACTOR / rate).min(MAX_DT)
    } else {
        MAX_DT
    }
}

/// One explicit step of `u_t + v |grad u| = lambda kappa |grad u|`.
///
/// Advection uses `Delta+` where `v >= 0` and `Delta-` where `v < 0`; the
/// curvature term uses central differences.
pub fn evolve_step(
    u: &LevelSetGrid,
    v: &SpeedField,
    curvature_weight: f64,
    dt: f64,
) -> Result<LevelSetGrid> {
    check_dims(u.dims(), v.dims())?;
    if !(curvature_weight >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "curvature weight {curvature_weight} must be non-negative"
        )));
    }
    let limit = stable_dt(v, curvature_weight);
    if !(dt > 0.0) || dt > limit * 1.01 {
        return Err(Error::CflViolation { dt, limit });
    }
    let w = u.width;
    let mut out = vec![0.0; u.u.len()];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let speed = v.get(x, y);
            let mut next = u.get(x, y);
            if speed > 0.0 {
                next -= dt * speed * upwind_gradient_plus(u, x, y);
            } else if speed < 0.0 {
                next -= dt * speed * upwind_gradient_minus(u, x, y);
            }
            if curvature_weight > 0.0 {
                let (ux, uy) = u.central_gradient(x, y);
                next += dt * curvature_weight * curvature(u, x, y) * ux.hypot(uy);
            }
            *o = next;
        }
    });
    LevelSetGrid::new(u.width, u.height, out)
}

/// The region `u <= 0`.
pub fn extract_mask(u: &LevelSetGrid) -> RegionMask {
    RegionMask::new(u.width, u.height, u.u.iter().map(|&v| v <= 0.0).collect())
        .expect("grid dimensions are consistent")
}

/// Inside pixels with at least one 4-neighbor outside the region; pixels
/// beyond the image edge count as outside.
pub fn extract_boundary(u: &LevelSetGrid) -> Vec<usize> {
    mask_boundary(&extract_mask(u))
}

/// [`extract_boundary`] for a mask.
pub fn mask_boundary(mask: &RegionMask) -> Vec<usize> {
    let (w, h) = mask.dims();
    let inside = mask.as_slice();
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if !inside[i] {
                continue;
            }
            let edge = x == 0
                || y == 0
                || x == w - 1
                || y == h - 1
                || !inside[i - 1]
                || !inside[i + 1]
                || !inside[i - w]
                || !inside[i + w];
            if edge {
                out.push(i);
            }
        }
    }
    out
}

/// Fraction of pixels with `|u| <= band` whose central gradient norm lies in
/// `[lo, hi]`.
pub fn central_gradient_share(u: &LevelSetGrid, band: f64, lo: f64, hi: f64) -> f64 {
    let mut total = 0usize;
    let mut ok = 0usize;
    for y in 0..u.height {
        for x in 0..u.width {
            if u.get(x, y).abs() > band {
                continue;
            }
            total += 1;
            let (gx, gy) = u.central_gradient(x, y);
            if (lo..=hi).contains(&gx.hypot(gy)) {
                ok += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        ok as f64 / total as f64
    }
}
