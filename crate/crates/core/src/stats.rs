//! Floored feature histograms and Kullback-Leibler divergence.

use crate::error::{Error, Result};
use crate::image::{check_dims, Image, RegionMask};

pub const DEFAULT_BINS: usize = 32;
pub const DEFAULT_FLOOR: f64 = 1e-6;

/// Normalized histogram of a `[0, 1]` feature with every bin floored away
/// from zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    bins: Vec<f64>,
    floor_epsilon: f64,
}

impl Histogram {
    /// Normalizes raw counts, adds `floor_epsilon` to every bin and
    /// renormalizes.
    pub fn from_counts(counts: &[f64], floor_epsilon: f64) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "histogram needs at least 2 bins, got {}",
                counts.len()
            )));
        }
        if !(floor_epsilon > 0.0) {
            return Err(Error::InvalidParameter("floor epsilon must be positive".into()));
        }
        if counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::InvalidParameter("counts must be finite and non-negative".into()));
        }
        let total: f64 = counts.iter().sum();
        if total <= 0.0 {
            return Err(Error::EmptyRegion);
        }
        let norm = 1.0 + counts.len() as f64 * floor_epsilon;
        let bins = counts
            .iter()
            .map(|c| (c / total + floor_epsilon) / norm)
            .collect();
        Ok(Self {
            bins,
            floor_epsilon,
        })
    }

    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn floor_epsilon(&self) -> f64 {
        self.floor_epsilon
    }

    #[inline]
    pub fn mass(&self, bin: usize) -> f64 {
        self.bins[bin]
    }

    /// The normalized masses before flooring.
    pub fn unfloored(&self) -> Vec<f64> {
        let norm = 1.0 + self.bins.len() as f64 * self.floor_epsilon;
        self.bins
            .iter()
            .map(|p| (p * norm - self.floor_epsilon).max(0.0))
            .collect()
    }
}

/// Bin of feature value `z` among `bin_count` equal bins over `[0, 1]`.
#[inline]
pub fn bin_of(z: f64, bin_count: usize) -> usize {
    let b = (z * bin_count as f64).floor();
    if b < 0.0 {
        0
    } else {
        (b as usize).min(bin_count - 1)
    }
}

/// Histogram of a gray feature image over a region, floored with
/// [`DEFAULT_FLOOR`].
pub fn build_histogram(feature: &Image, mask: &RegionMask, bin_count: usize) -> Result<Histogram> {
    build_histogram_with_floor(feature, mask, bin_count, DEFAULT_FLOOR)
}

pub fn build_histogram_with_floor(
    feature: &Image,
    mask: &RegionMask,
    bin_count: usize,
    floor_epsilon: f64,
) -> Result<Histogram> {
    let counts = region_counts(feature, mask, bin_count)?;
    Histogram::from_counts(&counts, floor_epsilon)
}

/// Raw per-bin pixel counts of a gray feature over a region.
pub fn region_counts(feature: &Image, mask: &RegionMask, bin_count: usize) -> Result<Vec<f64>> {
    check_dims(feature.dims(), mask.dims())?;
    if feature.channels() != 1 {
        return Err(Error::InvalidImage("histogram feature must be a gray image".into()));
    }
    if bin_count < 2 {
        return Err(Error::InvalidParameter(format!(
            "histogram needs at least 2 bins, got {bin_count}"
        )));
    }
    let mut counts = vec![0.0; bin_count];
    let mut n = 0usize;
    for i in mask.indices() {
        counts[bin_of(feature.value(i), bin_count)] += 1.0;
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyRegion);
    }
    Ok(counts)
}

/// Floored mass of a bin holding `count` of `total` samples, matching
/// [`Histogram::from_counts`].
#[inline]
pub fn floored_mass(count: f64, total: f64, bin_count: usize, floor_epsilon: f64) -> f64 {
    (count / total + floor_epsilon) / (1.0 + bin_count as f64 * floor_epsilon)
}

/// `sum_b p(b) ln(p(b) / q(b))`; bins with `p(b) = 0` contribute nothing.
pub fn kl_divergence(p: &Histogram, q: &Histogram) -> Result<f64> {
    if p.bin_count() != q.bin_count() {
        return Err(Error::BinCountMismatch(p.bin_count(), q.bin_count()));
    }
    let kl: f64 = p
        .bins
        .iter()
        .zip(&q.bins)
        .filter(|(pb, _)| **pb > 0.0)
        .map(|(pb, qb)| pb * (pb / qb).ln())
        .sum();
    // Gibbs' inequality; negative values are rounding noise
    Ok(kl.max(0.0))
}

/// Pixelwise negation of a mask.
pub fn complement_mask(mask: &RegionMask) -> RegionMask {
    mask.complement()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_image_lands_in_one_bin() {
        let img = Image::filled(6, 6, 1, 0.5).unwrap();
        let h = build_histogram(&img, &RegionMask::full(6, 6), 32).unwrap();
        let raw = h.unfloored();
        assert!((raw[16] - 1.0).abs() < 1e-9);
        assert!(raw.iter().enumerate().all(|(b, &m)| b == 16 || m < 1e-12));
        assert!((h.bins().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn extremes_land_in_end_bins() {
        let img = Image::from_fn(2, 1, |x, _| x as f64).unwrap();
        let h = build_histogram(&img, &RegionMask::full(2, 1), 8).unwrap();
        let raw = h.unfloored();
        assert!((raw[0] - 0.5).abs() < 1e-9);
        assert!((raw[7] - 0.5).abs() < 1e-9);
        assert_eq!(bin_of(1.0, 8), 7);
        assert_eq!(bin_of(0.0, 8), 0);
    }

    #[test]
    fn floor_bound_holds() {
        let img = Image::filled(3, 3, 1, 0.9).unwrap();
        let eps = 1e-6;
        let h = build_histogram_with_floor(&img, &RegionMask::full(3, 3), 32, eps).unwrap();
        let lower = eps / (1.0 + 32.0 * eps);
        assert!(h.bins().iter().all(|&b| b >= lower * (1.0 - 1e-12)));
    }

    #[test]
    fn histogram_errors() {
        let img = Image::filled(3, 3, 1, 0.9).unwrap();
        assert_eq!(
            build_histogram(&img, &RegionMask::empty(3, 3), 8),
            Err(Error::EmptyRegion)
        );
        assert!(build_histogram(&img, &RegionMask::full(3, 3), 1).is_err());
        assert!(build_histogram(&img, &RegionMask::full(4, 3), 8).is_err());
    }

    #[test]
    fn kl_self_is_zero() {
        let p = Histogram::from_counts(&[3.0, 1.0, 0.0, 6.0], 1e-6).unwrap();
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn kl_two_bin_hand_value() {
        let eps = 1e-3;
        let p = Histogram::from_counts(&[1.0, 0.0], eps).unwrap();
        let q = Histogram::from_counts(&[0.0, 1.0], eps).unwrap();
        // floored masses: (1 + eps) / (1 + 2 eps) and eps / (1 + 2 eps)
        let hi = (1.0 + eps) / (1.0 + 2.0 * eps);
        let lo = eps / (1.0 + 2.0 * eps);
        let expected = hi * (hi / lo).ln() + lo * (lo / hi).ln();
        let kl = kl_divergence(&p, &q).unwrap();
        assert!(kl > 0.0);
        assert!((kl - expected).abs() < 1e-12);
        assert!((kl - 6.894_964_850).abs() < 1e-6);
    }

    #[test]
    fn kl_four_bin_hand_value() {
        let eps = 1e-6;
        let p = Histogram::from_counts(&[1.0, 1.0, 1.0, 1.0], eps).unwrap();
        let q = Histogram::from_counts(&[0.7, 0.1, 0.1, 0.1], eps).unwrap();
        // 0.25 ln(0.25/0.7) + 3 * 0.25 ln(0.25/0.1), before flooring
        let unfloored = 0.25 * (0.25f64 / 0.7).ln() + 0.75 * (0.25f64 / 0.1).ln();
        assert!((unfloored - 0.429_813_195).abs() < 1e-8);
        let kl = kl_divergence(&p, &q).unwrap();
        assert!((kl - unfloored).abs() < 1e-5);
    }

    #[test]
    fn kl_mismatch_and_asymmetry() {
        let p = Histogram::from_counts(&[1.0, 1.0], 1e-6).unwrap();
        let q = Histogram::from_counts(&[1.0, 1.0, 1.0], 1e-6).unwrap();
        assert_eq!(kl_divergence(&p, &q), Err(Error::BinCountMismatch(2, 3)));

        let a = Histogram::from_counts(&[0.9, 0.1, 0.0], 1e-6).unwrap();
        let b = Histogram::from_counts(&[0.3, 0.3, 0.4], 1e-6).unwrap();
        let ab = kl_divergence(&a, &b).unwrap();
        let ba = kl_divergence(&b, &a).unwrap();
        assert!((ab - ba).abs() > 1.0);
    }

    #[test]
    fn complement_cases() {
        assert!(complement_mask(&RegionMask::empty(4, 4)).is_full());
        let half = RegionMask::from_fn(8, 4, |x, _| x < 4);
        assert_eq!(complement_mask(&half), RegionMask::from_fn(8, 4, |x, _| x >= 4));
        assert_eq!(complement_mask(&complement_mask(&half)), half);
    }

    #[test]
    fn uniform_image_complement_matches_region() {
        let img = Image::filled(8, 8, 1, 0.37).unwrap();
        let m = RegionMask::from_fn(8, 8, |x, y| x * y < 9);
        let a = build_histogram(&img, &m, 16).unwrap();
        let b = build_histogram(&img, &m.complement(), 16).unwrap();
        assert_eq!(a, b);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn histogram_ignores_pixel_order(values in proptest::collection::vec(0.0f64..=1.0, 30),
                                             bits in proptest::collection::vec(any::<bool>(), 30),
                                             rot in 0usize..30) {
                prop_assume!(bits.iter().any(|&b| b));
                let h1 = build_histogram(&Image::new(6, 5, 1, values.clone()).unwrap(),
                                         &RegionMask::new(6, 5, bits.clone()).unwrap(), 16).unwrap();
                let (mut v, mut b) = (values, bits);
                v.rotate_right(rot);
                b.rotate_right(rot);
                let h2 = build_histogram(&Image::new(6, 5, 1, v).unwrap(),
                                         &RegionMask::new(6, 5, b).unwrap(), 16).unwrap();
                prop_assert_eq!(h1, h2);
            }

            #[test]
            fn kl_non_negative(p in proptest::collection::vec(0.0f64..5.0, 12),
                               q in proptest::collection::vec(0.0f64..5.0, 12)) {
                prop_assume!(p.iter().sum::<f64>() > 0.0 && q.iter().sum::<f64>() > 0.0);
                let p = Histogram::from_counts(&p, 1e-6).unwrap();
                let q = Histogram::from_counts(&q, 1e-6).unwrap();
                prop_assert!(kl_divergence(&p, &q).unwrap() >= 0.0);
                prop_assert!((p.bins().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }
}
