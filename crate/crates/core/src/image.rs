//! Image containers, region masks and per-pixel features.

use crate::error::{Error, Result};

/// Luma weights applied by [`Image::to_grayscale`].
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// A dense row-major raster with 1 (gray) or 3 (RGB) channels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!(
                "{channels} channels, expected 1 or 3"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage("zero-sized image".into()));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidImage(format!(
                "data length {} != {width}x{height}x{channels}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(v.is_finite() && (0.0..=1.0).contains(*v))) {
            return Err(Error::InvalidImage(format!("value {v} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds a gray image from `f(x, y)`.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, 1, data)
    }

    /// Builds an RGB image from `f(x, y)`.
    pub fn from_fn_rgb(
        width: usize,
        height: usize,
        f: impl Fn(usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, 3, data)
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

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Channel `c` of pixel `(x, y)`.
    #[inline]
    pub fn at(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// First channel of pixel `(x, y)`; the value itself for gray images.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.at(x, y, 0)
    }

    /// Value of a gray image at linear pixel index `i`.
    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        self.data[i * self.channels]
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let start = (y * self.width + x) * self.channels;
        &self.data[start..start + self.channels]
    }

    /// Extracts channel `c` as a gray image.
    pub fn channel(&self, c: usize) -> Image {
        assert!(c < self.channels, "channel {c} out of range");
        let data = self.data.iter().skip(c).step_by(self.channels).copied().collect();
        Image {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }

    /// Luma conversion; gray images are returned unchanged.
    pub fn to_grayscale(&self) -> Image {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| {
                let g = LUMA_WEIGHTS[0] * p[0] + LUMA_WEIGHTS[1] * p[1] + LUMA_WEIGHTS[2] * p[2];
                g.clamp(0.0, 1.0)
            })
            .collect();
        Image {
            width: self.width,
            height: self.height,
            channels: 1,
            data,
        }
    }

    /// Gradient-magnitude image `J = |grad I|` of a gray image.
    ///
    /// Central differences inside, one-sided differences on the border,
    /// unit pixel spacing. The result is divided by its maximum when that
    /// maximum exceeds one so it shares the `[0, 1]` support of intensities.
    pub fn gradient_magnitude(&self) -> Result<Image> {
        if self.channels != 1 {
            return Err(Error::InvalidImage(
                "gradient magnitude needs a gray image".into(),
            ));
        }
        let (w, h) = (self.width, self.height);
        if w < 3 || h < 3 {
            return Err(Error::DimensionTooSmall {
                width: w,
                height: h,
                min: 3,
            });
        }
        let v = |x: usize, y: usize| self.data[y * w + x];
        let mut out = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let dx = if x == 0 {
                    v(1, y) - v(0, y)
                } else if x == w - 1 {
                    v(x, y) - v(x - 1, y)
                } else {
                    0.5 * (v(x + 1, y) - v(x - 1, y))
                };
                let dy = if y == 0 {
                    v(x, 1) - v(x, 0)
                } else if y == h - 1 {
                    v(x, y) - v(x, y - 1)
                } else {
                    0.5 * (v(x, y + 1) - v(x, y - 1))
                };
                out.push(dx.hypot(dy));
            }
        }
        let max = out.iter().copied().fold(0.0, f64::max);
        if max > 1.0 {
            out.iter_mut().for_each(|j| *j /= max);
        }
        Ok(Image {
            width: w,
            height: h,
            channels: 1,
            data: out,
        })
    }
}

/// Per-pixel membership of a region.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RegionMask {
    width: usize,
    height: usize,
    inside: Vec<bool>,
}

impl RegionMask {
    pub fn new(width: usize, height: usize, inside: Vec<bool>) -> Result<Self> {
        if inside.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "mask length {} != {width}x{height}",
                inside.len()
            )));
        }
        Ok(Self {
            width,
            height,
            inside,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            inside: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            inside: vec![true; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut inside = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                inside.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            inside,
        }
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

    pub fn as_slice(&self) -> &[bool] {
        &self.inside
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.inside[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, inside: bool) {
        self.inside[y * self.width + x] = inside;
    }

    /// Number of inside pixels.
    pub fn area(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.inside.iter().any(|&b| b)
    }

    pub fn is_full(&self) -> bool {
        self.inside.iter().all(|&b| b)
    }

    pub fn complement(&self) -> RegionMask {
        RegionMask {
            width: self.width,
            height: self.height,
            inside: self.inside.iter().map(|b| !b).collect(),
        }
    }

    /// Linear indices of inside pixels.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.inside
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    /// Pixels set in exactly one of the two masks.
    pub fn symmetric_difference(&self, other: &RegionMask) -> usize {
        self.inside
            .iter()
            .zip(&other.inside)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// The mask translated by whole pixels; pixels shifted in from outside are empty.
    pub fn shifted(&self, dx: isize, dy: isize) -> RegionMask {
        let (w, h) = (self.width as isize, self.height as isize);
        RegionMask::from_fn(self.width, self.height, |x, y| {
            let (sx, sy) = (x as isize - dx, y as isize - dy);
            sx >= 0 && sy >= 0 && sx < w && sy < h && self.inside[(sy * w + sx) as usize]
        })
    }
}

/// Mean of a gray image over a region.
pub fn region_mean(img: &Image, mask: &RegionMask) -> Result<f64> {
    check_dims(img.dims(), mask.dims())?;
    let (sum, n) = mask
        .indices()
        .fold((0.0, 0usize), |(s, n), i| (s + img.value(i), n + 1));
    if n == 0 {
        return Err(Error::EmptyRegion);
    }
    Ok(sum / n as f64)
}

/// Region area in pixels.
pub fn region_area(mask: &RegionMask) -> f64 {
    mask.area() as f64
}

pub(crate) fn check_dims(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch { left: a, right: b });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grayscale_of_black_white_and_red() {
        let black = Image::filled(4, 3, 3, 0.0).unwrap();
        assert!(black.to_grayscale().data().iter().all(|&v| v == 0.0));
        let white = Image::filled(4, 3, 3, 1.0).unwrap();
        assert!(white
            .to_grayscale()
            .data()
            .iter()
            .all(|&v| (v - 1.0).abs() < 1e-12));
        let red = Image::from_fn_rgb(4, 3, |_, _| [1.0, 0.0, 0.0]).unwrap();
        let g = red.to_grayscale();
        assert_eq!(g.channels(), 1);
        assert!(g.data().iter().all(|&v| (v - 0.299).abs() < 1e-12));
    }

    #[test]
    fn grayscale_is_identity_on_gray() {
        let img = Image::from_fn(5, 5, |x, y| (x + y) as f64 / 8.0).unwrap();
        assert_eq!(img.to_grayscale(), img);
    }

    #[test]
    fn rejects_bad_images() {
        assert!(Image::new(2, 2, 2, vec![0.0; 8]).is_err());
        assert!(Image::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(Image::new(2, 2, 1, vec![0.0, 0.5, 1.5, 0.0]).is_err());
        assert!(Image::new(2, 2, 1, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let img = Image::filled(7, 5, 1, 0.3).unwrap();
        let j = img.gradient_magnitude().unwrap();
        assert!(j.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_of_step_is_local() {
        let c = 4;
        let img = Image::from_fn(10, 6, |x, _| if x <= c { 0.0 } else { 1.0 }).unwrap();
        let j = img.gradient_magnitude().unwrap();
        for y in 0..6 {
            for x in 0..10 {
                if x == c || x == c + 1 {
                    assert!(j.get(x, y) > 0.0);
                } else {
                    assert_eq!(j.get(x, y), 0.0, "at ({x},{y})");
                }
            }
        }
    }

    #[test]
    fn gradient_of_ramp_is_constant() {
        let w = 9;
        let img = Image::from_fn(w, 5, |x, _| x as f64 / (w - 1) as f64).unwrap();
        let j = img.gradient_magnitude().unwrap();
        // central difference of x/(w-1) is exactly 1/(w-1)
        let expected = 1.0 / (w - 1) as f64;
        for y in 1..4 {
            for x in 1..w - 1 {
                assert!((j.get(x, y) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_rescales_large_values() {
        let img = Image::from_fn(3, 3, |x, y| if (x + y) % 2 == 0 { 1.0 } else { 0.0 }).unwrap();
        let j = img.gradient_magnitude().unwrap();
        let max = j.data().iter().copied().fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_rejects_tiny_images() {
        let img = Image::filled(2, 5, 1, 0.0).unwrap();
        assert!(matches!(
            img.gradient_magnitude(),
            Err(Error::DimensionTooSmall { .. })
        ));
    }

    #[test]
    fn region_mean_cases() {
        let img = Image::filled(4, 4, 1, 0.5).unwrap();
        let mask = RegionMask::from_fn(4, 4, |x, y| x + y < 3);
        assert_eq!(region_mean(&img, &mask).unwrap(), 0.5);

        let img = Image::from_fn(4, 4, |x, _| if x == 0 { 0.25 } else { 1.0 }).unwrap();
        let one = RegionMask::from_fn(4, 4, |x, y| x == 0 && y == 2);
        assert_eq!(region_mean(&img, &one).unwrap(), 0.25);

        let img = Image::from_fn(4, 4, |x, _| if x == 0 { 0.0 } else { 1.0 }).unwrap();
        let two = RegionMask::from_fn(4, 4, |x, y| y == 1 && x < 2);
        assert_eq!(region_mean(&img, &two).unwrap(), 0.5);

        assert_eq!(
            region_mean(&img, &RegionMask::empty(4, 4)),
            Err(Error::EmptyRegion)
        );
        assert!(region_mean(&img, &RegionMask::full(3, 4)).is_err());
    }

    #[test]
    fn region_area_cases() {
        assert_eq!(region_area(&RegionMask::empty(5, 5)), 0.0);
        assert_eq!(region_area(&RegionMask::full(10, 10)), 100.0);
        let checker = RegionMask::from_fn(4, 4, |x, y| (x + y) % 2 == 0);
        assert_eq!(region_area(&checker), 8.0);
        assert_eq!(
            region_area(&checker) + region_area(&checker.complement()),
            16.0
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn mean_ignores_pixel_order(values in proptest::collection::vec(0.0f64..=1.0, 36),
                                        bits in proptest::collection::vec(any::<bool>(), 36),
                                        rot in 0usize..36) {
                prop_assume!(bits.iter().any(|&b| b));
                let img = Image::new(6, 6, 1, values.clone()).unwrap();
                let mask = RegionMask::new(6, 6, bits.clone()).unwrap();
                let mut v2 = values; v2.rotate_left(rot);
                let mut b2 = bits; b2.rotate_left(rot);
                let img2 = Image::new(6, 6, 1, v2).unwrap();
                let mask2 = RegionMask::new(6, 6, b2).unwrap();
                let a = region_mean(&img, &mask).unwrap();
                let b = region_mean(&img2, &mask2).unwrap();
                prop_assert!((a - b).abs() < 1e-12);
            }

            #[test]
            fn area_plus_complement(bits in proptest::collection::vec(any::<bool>(), 48)) {
                let m = RegionMask::new(8, 6, bits).unwrap();
                prop_assert_eq!(region_area(&m) + region_area(&m.complement()), 48.0);
            }
        }
    }
}
