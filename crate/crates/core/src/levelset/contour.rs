//! Marching-squares length of the zero level set.

use super::LevelSetGrid;
use crate::image::RegionMask;

/// Length of the zero level set of `u`, traced with marching squares on the
/// dual grid of pixel centers. Ambiguous saddle cells are resolved by the
/// sign of the cell average.
pub fn perimeter(u: &LevelSetGrid) -> f64 {
    let (w, h) = u.dims();
    let mut total = 0.0;
    for y in 0..h - 1 {
        for x in 0..w - 1 {
            total += cell_length(u, x, y);
        }
    }
    total
}

/// Width of the Gaussian that smooths a mask's indicator before its boundary
/// is measured, in pixels.
pub const MASK_SMOOTHING: f64 = 1.0;

/// Length of a mask's boundary: marching squares on the half level of its
/// indicator after Gaussian smoothing. The smoothing makes a single pixel
/// flip change the length by roughly the curvature times the flipped area,
/// rather than by a staircase notch.
pub fn mask_perimeter(mask: &RegionMask) -> f64 {
    let (w, h) = mask.dims();
    let indicator: Vec<f64> = mask.as_slice().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let smooth = gaussian_blur(&indicator, w, h, MASK_SMOOTHING);
    match LevelSetGrid::new(w, h, smooth.iter().map(|s| 0.5 - s).collect()) {
        Ok(u) => perimeter(&u),
        Err(_) => 0.0,
    }
}

/// Separable Gaussian blur, truncated at three widths, edges replicated.
fn gaussian_blur(values: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-r..=r).map(|t| (-((t * t) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let norm: f64 = kernel.iter().sum();
    let pass = |src: &[f64], horizontal: bool| -> Vec<f64> {
        let mut out = vec![0.0; w * h];
        for y in 0..h as isize {
            for x in 0..w as isize {
                let acc: f64 = (-r..=r)
                    .map(|t| {
                        let (sx, sy) = if horizontal {
                            ((x + t).clamp(0, w as isize - 1), y)
                        } else {
                            (x, (y + t).clamp(0, h as isize - 1))
                        };
                        kernel[(t + r) as usize] * src[sy as usize * w + sx as usize]
                    })
                    .sum();
                out[y as usize * w + x as usize] = acc / norm;
            }
        }
        out
    };
    pass(&pass(values, true), false)
}

fn cell_length(u: &LevelSetGrid, x: usize, y: usize) -> f64 {
    // corners in cyclic order; edge k joins corner k and corner k+1
    let pos = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
    let val = [
        u.get(x, y),
        u.get(x + 1, y),
        u.get(x + 1, y + 1),
        u.get(x, y + 1),
    ];
    let inside = val.map(|v| v <= 0.0);
    let case = inside
        .iter()
        .enumerate()
        .fold(0u8, |acc, (k, &b)| acc | ((b as u8) << k));
    if case == 0 || case == 0b1111 {
        return 0.0;
    }
    let point = |k: usize| -> (f64, f64) {
        let j = (k + 1) % 4;
        let t = val[k] / (val[k] - val[j]);
        (
            pos[k].0 + t * (pos[j].0 - pos[k].0),
            pos[k].1 + t * (pos[j].1 - pos[k].1),
        )
    };
    let seg = |a: usize, b: usize| -> f64 {
        let (p, q) = (point(a), point(b));
        (p.0 - q.0).hypot(p.1 - q.1)
    };
    let crossed: Vec<usize> = (0..4).filter(|&k| inside[k] != inside[(k + 1) % 4]).collect();
    match crossed.len() {
        2 => seg(crossed[0], crossed[1]),
        4 => {
            // isolate the two corners whose label differs from the cell center
            let center_inside = val.iter().sum::<f64>() / 4.0 <= 0.0;
            (0..4)
                .filter(|&k| inside[k] != center_inside)
                .map(|k| seg((k + 3) % 4, k))
                .sum()
        }
        _ => unreachable!("a closed cell boundary crosses an even number of times"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_line_length() {
        let u = LevelSetGrid::from_fn(10, 7, |x, _| x as f64 - 4.3).unwrap();
        assert!((perimeter(&u) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_line_length() {
        let u = LevelSetGrid::from_fn(12, 12, |x, y| x as f64 + y as f64 - 11.5).unwrap();
        // the line x + y = 11.5 runs from (0, 11) to (11, 0) inside [0, 11]^2
        let expected = (11.0f64 - 0.5).hypot(11.0 - 0.5);
        assert!((perimeter(&u) - expected).abs() < 1e-9);
    }

    #[test]
    fn circle_length() {
        let r = 10.0;
        let u = LevelSetGrid::from_fn(40, 40, |x, y| (x as f64 - 19.6).hypot(y as f64 - 20.2) - r)
            .unwrap();
        let c = 2.0 * std::f64::consts::PI * r;
        assert!((perimeter(&u) - c).abs() < 0.01 * c);
    }

    #[test]
    fn smoothed_mask_disk_length() {
        let mask = RegionMask::from_fn(40, 40, |x, y| (x as f64 - 19.6).hypot(y as f64 - 20.2) <= 10.0);
        let c = 2.0 * std::f64::consts::PI * 10.0;
        assert!((mask_perimeter(&mask) - c).abs() < 0.05 * c, "{}", mask_perimeter(&mask));
    }

    #[test]
    fn filling_a_notch_shortens_and_adding_a_bump_lengthens() {
        let square = RegionMask::from_fn(20, 20, |x, y| (5..15).contains(&x) && (5..15).contains(&y));
        let base = mask_perimeter(&square);
        let mut bump = square.clone();
        bump.set(10, 4, true);
        assert!(mask_perimeter(&bump) > base);
        let mut notch = square.clone();
        notch.set(10, 5, false);
        assert!(mask_perimeter(&notch) > base);
        let mut filled = notch.clone();
        filled.set(10, 5, true);
        assert!(mask_perimeter(&filled) < mask_perimeter(&notch));
    }

    #[test]
    fn empty_and_full_have_zero_length() {
        let pos = LevelSetGrid::from_fn(5, 5, |_, _| 1.0).unwrap();
        let neg = LevelSetGrid::from_fn(5, 5, |_, _| -1.0).unwrap();
        assert_eq!(perimeter(&pos), 0.0);
        assert_eq!(perimeter(&neg), 0.0);
    }
}
