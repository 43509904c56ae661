//! Signed distance construction and reinitialization.

use super::LevelSetGrid;
use crate::error::{Error, Result};
use crate::image::RegionMask;

/// Rounds of four-direction sweeps used by [`reinitialize`]; sweeping stops
/// earlier once no value changes.
const MAX_SWEEP_ROUNDS: usize = 8;
/// Front pixels whose central gradient is at least this steep take the
/// first-order distance `|u| / |grad u|`; flatter ones fall back to the
/// edge crossings.
const MIN_FRONT_GRADIENT: f64 = 0.5;

/// Exact squared Euclidean distance from every pixel center to the nearest
/// pixel with `feature == true` (separable lower-envelope transform).
/// Pixels have infinite distance when no feature pixel exists.
pub fn squared_distance_transform(feature: &[bool], width: usize, height: usize) -> Vec<f64> {
    assert_eq!(feature.len(), width * height);
    let mut grid: Vec<f64> = feature
        .iter()
        .map(|&f| if f { 0.0 } else { f64::INFINITY })
        .collect();

    let mut buf = vec![0.0; width.max(height)];
    let mut out = vec![0.0; width.max(height)];
    for x in 0..width {
        for y in 0..height {
            buf[y] = grid[y * width + x];
        }
        transform_1d(&buf[..height], &mut out[..height]);
        for y in 0..height {
            grid[y * width + x] = out[y];
        }
    }
    for y in 0..height {
        let row = &mut grid[y * width..(y + 1) * width];
        buf[..width].copy_from_slice(row);
        transform_1d(&buf[..width], &mut out[..width]);
        row.copy_from_slice(&out[..width]);
    }
    grid
}

/// `out[q] = min_p (q - p)^2 + f[p]` via the lower envelope of parabolas.
fn transform_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    let first = match f.iter().position(|x| x.is_finite()) {
        Some(p) => p,
        None => {
            out.iter_mut().for_each(|o| *o = f64::INFINITY);
            return;
        }
    };
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in first + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
            if s <= z[k] && k > 0 {
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Signed distance field of a mask: negative inside, positive outside, with
/// the curve placed on the pixel edges separating inside from outside.
///
/// Each pixel gets the distance to the nearest pixel of the opposite label
/// minus one half, so `extract_mask` of the result reproduces `mask`.
pub fn init_signed_distance(mask: &RegionMask) -> Result<LevelSetGrid> {
    if mask.is_empty() {
        return Err(Error::DegenerateMask("empty mask"));
    }
    if mask.is_full() {
        return Err(Error::DegenerateMask("mask covers the whole frame"));
    }
    let (w, h) = mask.dims();
    let inside = mask.as_slice();
    let outside: Vec<bool> = inside.iter().map(|b| !b).collect();
    let to_inside = squared_distance_transform(inside, w, h);
    let to_outside = squared_distance_transform(&outside, w, h);
    let u = inside
        .iter()
        .enumerate()
        .map(|(i, &ins)| {
            if ins {
                0.5 - to_outside[i].sqrt()
            } else {
                to_inside[i].sqrt() - 0.5
            }
        })
        .collect();
    LevelSetGrid::new(w, h, u)
}

/// Restores the signed-distance property of `u` without moving its zero
/// level set.
///
/// Pixels adjacent to a sign change keep a sub-pixel distance estimate taken
/// from the linear interpolation of `u` along grid edges; every other pixel
/// is filled in by fast sweeping of the eikonal equation `|grad d| = 1`.
/// The sign of every pixel is preserved, so the extracted mask is unchanged.
pub fn reinitialize(u: &LevelSetGrid) -> Result<LevelSetGrid> {
    let (w, h) = u.dims();
    let vals = u.values();
    let inside: Vec<bool> = vals.iter().map(|&v| v <= 0.0).collect();
    if inside.iter().all(|&b| b) || inside.iter().all(|&b| !b) {
        return Err(Error::DegenerateMask("level set has uniform sign"));
    }

    let mut dist = vec![f64::INFINITY; w * h];
    let mut frozen = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let a = vals[i];
            let crossing = |j: usize| -> Option<f64> {
                (inside[j] != inside[i]).then(|| a / (a - vals[j]))
            };
            let dx = [
                (x > 0).then(|| i - 1),
                (x + 1 < w).then(|| i + 1),
            ]
            .into_iter()
            .flatten()
            .filter_map(crossing)
            .fold(f64::INFINITY, f64::min);
            let dy = [
                (y > 0).then(|| i - w),
                (y + 1 < h).then(|| i + w),
            ]
            .into_iter()
            .flatten()
            .filter_map(crossing)
            .fold(f64::INFINITY, f64::min);
            if !(dx.is_finite() || dy.is_finite()) {
                continue;
            }
            let (gx, gy) = u.central_gradient(x, y);
            let g = gx.hypot(gy);
            let d = match (dx.is_finite(), dy.is_finite()) {
                _ if g >= MIN_FRONT_GRADIENT => a.abs() / g,
                (false, false) => unreachable!(),
                (true, false) => dx,
                (false, true) => dy,
                (true, true) => {
                    if dx == 0.0 || dy == 0.0 {
                        0.0
                    } else {
                        dx * dy / dx.hypot(dy)
                    }
                }
            };
            dist[i] = d;
            frozen[i] = true;
        }
    }

    sweep(&mut dist, &frozen, w, h);

    let out = dist
        .iter()
        .zip(&inside)
        .map(|(&d, &ins)| if ins { -d } else { d })
        .collect();
    LevelSetGrid::new(w, h, out)
}

/// Gauss-Seidel fast sweeping for `|grad d| = 1` with unit spacing.
fn sweep(dist: &mut [f64], frozen: &[bool], w: usize, h: usize) {
    let orders: [(bool, bool); 4] = [(false, false), (true, false), (true, true), (false, true)];
    for _ in 0..MAX_SWEEP_ROUNDS {
        let mut changed = false;
        for &(rev_x, rev_y) in &orders {
            for yy in 0..h {
                let y = if rev_y { h - 1 - yy } else { yy };
                for xx in 0..w {
                    let x = if rev_x { w - 1 - xx } else { xx };
                    let i = y * w + x;
                    if frozen[i] {
                        continue;
                    }
                    let a = f64::min(
                        if x > 0 { dist[i - 1] } else { f64::INFINITY },
                        if x + 1 < w { dist[i + 1] } else { f64::INFINITY },
                    );
                    let b = f64::min(
                        if y > 0 { dist[i - w] } else { f64::INFINITY },
                        if y + 1 < h { dist[i + w] } else { f64::INFINITY },
                    );
                    let cand = if (a - b).abs() >= 1.0 || !a.is_finite() || !b.is_finite() {
                        a.min(b) + 1.0
                    } else {
                        0.5 * (a + b + (2.0 - (a - b) * (a - b)).sqrt())
                    };
                    if cand < dist[i] {
                        dist[i] = cand;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{central_gradient_share, extract_mask};
    use super::*;

    fn brute_sq(feature: &[bool], w: usize, h: usize) -> Vec<f64> {
        (0..w * h)
            .map(|i| {
                let (x, y) = ((i % w) as f64, (i / w) as f64);
                feature
                    .iter()
                    .enumerate()
                    .filter(|(_, &f)| f)
                    .map(|(j, _)| {
                        let (fx, fy) = ((j % w) as f64, (j / w) as f64);
                        (x - fx).powi(2) + (y - fy).powi(2)
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    #[test]
    fn edt_matches_brute_force() {
        let (w, h) = (13, 9);
        let feature: Vec<bool> = (0..w * h).map(|i| (i * 7919 % 23) == 0).collect();
        assert_eq!(squared_distance_transform(&feature, w, h), brute_sq(&feature, w, h));
        let none = vec![false; w * h];
        assert!(squared_distance_transform(&none, w, h)
            .iter()
            .all(|d| d.is_infinite()));
    }

    fn disk_mask(n: usize, c: f64, r: f64) -> RegionMask {
        RegionMask::from_fn(n, n, |x, y| (x as f64 - c).hypot(y as f64 - c) <= r)
    }

    #[test]
    fn disk_signed_distance() {
        let mask = disk_mask(64, 32.0, 10.0);
        let u = init_signed_distance(&mask).unwrap();
        assert!((u.get(32, 32) + 10.0).abs() <= 0.6, "center {}", u.get(32, 32));
        let corner = 32f64.hypot(32.0) - 10.0;
        assert!((u.get(0, 0) - corner).abs() <= 0.6);
        assert_eq!(extract_mask(&u), mask);
    }

    #[test]
    fn half_plane_signed_distance() {
        let mask = RegionMask::from_fn(64, 20, |x, _| x < 32);
        let u = init_signed_distance(&mask).unwrap();
        for y in 0..20 {
            for x in 0..64 {
                assert!((u.get(x, y) - (x as f64 - 31.5)).abs() <= 0.6);
            }
        }
    }

    #[test]
    fn single_pixel_is_minimum() {
        let mask = RegionMask::from_fn(9, 9, |x, y| x == 3 && y == 6);
        let u = init_signed_distance(&mask).unwrap();
        let min = u.values().iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(u.get(3, 6), min);
        assert!(u.values().iter().filter(|&&v| v == min).count() == 1);
    }

    #[test]
    fn degenerate_masks_rejected() {
        assert!(init_signed_distance(&RegionMask::empty(5, 5)).is_err());
        assert!(init_signed_distance(&RegionMask::full(5, 5)).is_err());
        let pos = LevelSetGrid::from_fn(5, 5, |_, _| 1.0).unwrap();
        assert!(reinitialize(&pos).is_err());
    }

    #[test]
    fn reinit_is_fixed_point_on_disk() {
        let u = LevelSetGrid::from_fn(48, 48, |x, y| {
            (x as f64 - 23.3).hypot(y as f64 - 24.6) - 11.2
        })
        .unwrap();
        let r = reinitialize(&u).unwrap();
        assert_eq!(extract_mask(&r), extract_mask(&u));
        for (a, b) in u.values().iter().zip(r.values()) {
            if a.abs() < 4.0 {
                assert!((a - b).abs() < 0.3, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn reinit_undoes_scaling() {
        let sdf = |x: usize, y: usize| (x as f64 - 20.0).hypot(y as f64 - 19.5) - 8.7;
        let scaled = LevelSetGrid::from_fn(40, 40, |x, y| 5.0 * sdf(x, y)).unwrap();
        let r = reinitialize(&scaled).unwrap();
        assert_eq!(extract_mask(&r), extract_mask(&scaled));
        for y in 0..40 {
            for x in 0..40 {
                let d = sdf(x, y);
                if d.abs() < 5.0 {
                    assert!((r.get(x, y) - d).abs() < 0.3);
                }
            }
        }
    }

    #[test]
    fn reinit_of_steep_front_matches_mask_distance() {
        let sdf = |x: usize, y: usize| (x as f64 - 31.4).hypot(y as f64 - 30.8) - 15.3;
        let steep = LevelSetGrid::from_fn(64, 64, |x, y| sdf(x, y).tanh()).unwrap();
        let r = reinitialize(&steep).unwrap();
        let oracle = init_signed_distance(&extract_mask(&steep)).unwrap();
        let (mut m1, mut m2) = (0.0f64, 0.0f64);
        for y in 0..64 {
            for x in 0..64 {
                if sdf(x, y).abs() < 3.0 {
                    m1 = m1.max((r.get(x, y) - oracle.get(x, y)).abs());
                    m2 = m2.max((r.get(x, y) - sdf(x, y)).abs());
                }
            }
        }
        // the mask transform snaps the front to pixel edges, itself up to
        // half a pixel away from the true front
        assert!(m2 <= 0.6, "max error against exact distance {m2}");
        assert!(m1 <= 0.6 + 0.5, "max error against mask distance {m1}");
    }

    #[test]
    fn signed_distance_gradient_near_front() {
        let mask = RegionMask::from_fn(64, 64, |x, y| {
            let (dx, dy) = (x as f64 - 30.0, y as f64 - 33.0);
            (dx / 14.0).powi(2) + (dy / 9.0).powi(2) <= 1.0
        });
        let u = init_signed_distance(&mask).unwrap();
        assert!(central_gradient_share(&u, 5.0, 0.5, 1.5) >= 0.9);
        let tanh = LevelSetGrid::new(64, 64, u.values().iter().map(|v| (v / 3.0).tanh()).collect())
            .unwrap();
        let r = reinitialize(&tanh).unwrap();
        assert!(central_gradient_share(&r, 5.0, 0.5, 1.5) >= 0.9);
    }
}
