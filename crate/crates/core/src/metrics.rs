//! Desired and undesired region coverage.

use crate::error::{Error, Result};
use crate::image::{check_dims, RegionMask};

/// Overlap of a tracked region with the desired (ground-truth) region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageScore {
    /// Fraction of the desired region covered by the tracked region.
    pub drc: f64,
    /// Fraction of the tracked region lying outside the desired region.
    pub urc: f64,
    pub intersection_area: usize,
    pub tracked_area: usize,
    pub desired_area: usize,
}

pub fn coverage(tracked: &RegionMask, desired: &RegionMask) -> Result<CoverageScore> {
    check_dims(tracked.dims(), desired.dims())?;
    let mut intersection = 0usize;
    let mut tracked_area = 0usize;
    let mut desired_area = 0usize;
    for (&t, &d) in tracked.as_slice().iter().zip(desired.as_slice()) {
        tracked_area += t as usize;
        desired_area += d as usize;
        intersection += (t && d) as usize;
    }
    if tracked_area == 0 || desired_area == 0 {
        return Err(Error::EmptyRegion);
    }
    Ok(CoverageScore {
        drc: intersection as f64 / desired_area as f64,
        urc: (tracked_area - intersection) as f64 / tracked_area as f64,
        intersection_area: intersection,
        tracked_area,
        desired_area,
    })
}

/// Arithmetic mean of `(drc, urc)` over a set of scores.
pub fn mean_coverage(scores: &[CoverageScore]) -> Option<(f64, f64)> {
    if scores.is_empty() {
        return None;
    }
    let n = scores.len() as f64;
    let drc = scores.iter().map(|s| s.drc).sum::<f64>() / n;
    let urc = scores.iter().map(|s| s.urc).sum::<f64>() / n;
    Some((drc, urc))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_masks() {
        let m = RegionMask::from_fn(10, 10, |x, y| x > 2 && y < 7);
        let s = coverage(&m, &m).unwrap();
        assert_eq!((s.drc, s.urc), (1.0, 0.0));
    }

    #[test]
    fn disjoint_masks() {
        let a = RegionMask::from_fn(10, 10, |x, _| x < 3);
        let b = RegionMask::from_fn(10, 10, |x, _| x > 6);
        let s = coverage(&a, &b).unwrap();
        assert_eq!((s.drc, s.urc), (0.0, 1.0));
    }

    #[test]
    fn tracked_inside_desired() {
        // 100 tracked pixels inside a 200-pixel desired block
        let desired = RegionMask::from_fn(20, 20, |x, y| x < 10 && y < 20);
        let tracked = RegionMask::from_fn(20, 20, |x, y| x < 10 && y < 10);
        let s = coverage(&tracked, &desired).unwrap();
        assert_eq!((s.drc, s.urc), (0.5, 0.0));
        assert_eq!(s.intersection_area, 100);
    }

    #[test]
    fn errors() {
        let m = RegionMask::full(4, 4);
        assert_eq!(coverage(&RegionMask::empty(4, 4), &m), Err(Error::EmptyRegion));
        assert_eq!(coverage(&m, &RegionMask::empty(4, 4)), Err(Error::EmptyRegion));
        assert!(coverage(&m, &RegionMask::full(5, 4)).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn mask() -> impl Strategy<Value = RegionMask> {
            proptest::collection::vec(any::<bool>(), 64)
                .prop_filter("nonempty", |b| b.iter().any(|&x| x))
                .prop_map(|b| RegionMask::new(8, 8, b).unwrap())
        }

        proptest! {
            #[test]
            fn intersection_is_symmetric(a in mask(), b in mask()) {
                let ab = coverage(&a, &b).unwrap();
                let ba = coverage(&b, &a).unwrap();
                prop_assert_eq!(ab.intersection_area, ba.intersection_area);
                prop_assert!((0.0..=1.0).contains(&ab.drc) && (0.0..=1.0).contains(&ab.urc));
            }

            #[test]
            fn drc_grows_with_desired_pixels(a in mask(), b in mask(), pick in any::<u64>()) {
                let before = coverage(&a, &b).unwrap().drc;
                let mut grown = a.clone();
                for (i, &d) in b.as_slice().iter().enumerate() {
                    if d && (pick >> (i % 64)) & 1 == 1 {
                        grown.set(i % 8, i / 8, true);
                    }
                }
                prop_assert!(coverage(&grown, &b).unwrap().drc >= before);
            }
        }
    }
}
