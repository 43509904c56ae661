//! Deterministic synthetic scenes with exact ground-truth masks.
//!
//! Shapes are point-sampled at pixel centers: a pixel belongs to a shape
//! when its center lies inside the analytic geometry. Shapes are painted
//! in order, later ones on top, and the first shape is always the tracked
//! object.
//!
//! # Text format
//!
//! ```text
//! # comment
//! width = 64
//! height = 64
//! frames = 6
//! seed = 7
//! noise = 0.02                  # uniform amplitude in [0, 0.2]
//! background = 0.2              # gray level, or r,g,b
//! shading = 1,0,0.3             # direction x,y and strength; or "none"
//! shape = disk cx=20 cy=32 r=10 color=0.8 vx=3 vy=0
//! shape = rect cx=40 cy=20 w=8 h=6 color=0.1,0.5,0.9
//! ```
//!
//! `vx`/`vy` are per-frame translations and default to zero.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::image::{Image, RegionMask, LUMA_WEIGHTS};

pub const MAX_NOISE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Color {
    Gray(f64),
    Rgb([f64; 3]),
}

impl Color {
    fn rgb(&self) -> [f64; 3] {
        match *self {
            Color::Gray(g) => [g; 3],
            Color::Rgb(c) => c,
        }
    }

    pub fn luma(&self) -> f64 {
        match *self {
            Color::Gray(g) => g,
            Color::Rgb(c) => (0..3).map(|k| LUMA_WEIGHTS[k] * c[k]).sum(),
        }
    }

    fn is_valid(&self) -> bool {
        self.rgb().iter().all(|v| (0.0..=1.0).contains(v))
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Color::Gray(g) => write!(f, "{g}"),
            Color::Rgb([r, g, b]) => write!(f, "{r},{g},{b}"),
        }
    }
}

impl FromStr for Color {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts = parse_floats(s)?;
        match parts.as_slice() {
            [g] => Ok(Color::Gray(*g)),
            [r, g, b] => Ok(Color::Rgb([*r, *g, *b])),
            _ => Err(Error::InvalidParameter(format!("bad color '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShapeKind {
    Disk { radius: f64 },
    Rect { width: f64, height: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shape {
    pub kind: ShapeKind,
    pub center: (f64, f64),
    pub fill: Color,
    /// Translation per frame in pixels.
    pub velocity: (f64, f64),
}

impl Shape {
    pub fn disk(center: (f64, f64), radius: f64, fill: Color) -> Self {
        Self {
            kind: ShapeKind::Disk { radius },
            center,
            fill,
            velocity: (0.0, 0.0),
        }
    }

    pub fn rect(center: (f64, f64), size: (f64, f64), fill: Color) -> Self {
        Self {
            kind: ShapeKind::Rect {
                width: size.0,
                height: size.1,
            },
            center,
            fill,
            velocity: (0.0, 0.0),
        }
    }

    pub fn moving(mut self, vx: f64, vy: f64) -> Self {
        self.velocity = (vx, vy);
        self
    }

    pub fn center_at(&self, frame: usize) -> (f64, f64) {
        let k = frame as f64;
        (self.center.0 + k * self.velocity.0, self.center.1 + k * self.velocity.1)
    }

    /// Whether point `(x, y)` lies inside the shape in frame `frame`.
    pub fn contains(&self, frame: usize, x: f64, y: f64) -> bool {
        let (cx, cy) = self.center_at(frame);
        match self.kind {
            ShapeKind::Disk { radius } => (x - cx).powi(2) + (y - cy).powi(2) <= radius * radius,
            ShapeKind::Rect { width, height } => {
                (x - cx).abs() <= 0.5 * width && (y - cy).abs() <= 0.5 * height
            }
        }
    }

    fn half_extent(&self) -> (f64, f64) {
        match self.kind {
            ShapeKind::Disk { radius } => (radius, radius),
            ShapeKind::Rect { width, height } => (0.5 * width, 0.5 * height),
        }
    }
}

/// Linear darkening: each pixel is multiplied by `1 - strength * t`, with `t`
/// running from 0 to 1 across the frame along `direction`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shading {
    pub direction: (f64, f64),
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub background: Color,
    pub shapes: Vec<Shape>,
    pub shading: Option<Shading>,
    pub noise: f64,
    pub frames: usize,
    pub seed: u64,
}

impl SceneSpec {
    pub fn new(width: usize, height: usize, background: Color) -> Self {
        Self {
            width,
            height,
            background,
            shapes: Vec::new(),
            shading: None,
            noise: 0.0,
            frames: 1,
            seed: 0,
        }
    }

    pub fn is_color(&self) -> bool {
        matches!(self.background, Color::Rgb(_))
            || self.shapes.iter().any(|s| matches!(s.fill, Color::Rgb(_)))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.width < 3 || self.height < 3 {
            return Err(Error::DimensionTooSmall {
                width: self.width,
                height: self.height,
                min: 3,
            });
        }
        if self.frames == 0 {
            return bad("scene needs at least one frame".into());
        }
        if self.shapes.is_empty() {
            return bad("scene needs at least one shape".into());
        }
        if !(0.0..=MAX_NOISE).contains(&self.noise) {
            return bad(format!("noise {} outside [0, {MAX_NOISE}]", self.noise));
        }
        if !self.background.is_valid() || self.shapes.iter().any(|s| !s.fill.is_valid()) {
            return bad("colors must lie in [0, 1]".into());
        }
        if let Some(s) = &self.shading {
            if !(0.0..=1.0).contains(&s.strength) {
                return bad(format!("shading strength {} outside [0, 1]", s.strength));
            }
            if s.direction.0 == 0.0 && s.direction.1 == 0.0 {
                return bad("shading direction is zero".into());
            }
        }
        let (xmax, ymax) = ((self.width - 1) as f64, (self.height - 1) as f64);
        for (index, shape) in self.shapes.iter().enumerate() {
            let (hx, hy) = shape.half_extent();
            if !(hx > 0.0 && hy > 0.0) {
                return bad(format!("shape {index} has non-positive size"));
            }
            for frame in 0..self.frames {
                let (cx, cy) = shape.center_at(frame);
                if cx - hx < 0.0 || cy - hy < 0.0 || cx + hx > xmax || cy + hy > ymax {
                    return Err(Error::ShapeOutOfBounds { index, frame });
                }
            }
        }
        Ok(())
    }

    fn shading_factor(&self, x: f64, y: f64) -> f64 {
        let Some(s) = &self.shading else { return 1.0 };
        let (dx, dy) = s.direction;
        let corners = [
            (0.0, 0.0),
            ((self.width - 1) as f64, 0.0),
            (0.0, (self.height - 1) as f64),
            ((self.width - 1) as f64, (self.height - 1) as f64),
        ];
        let proj: Vec<f64> = corners.iter().map(|(cx, cy)| cx * dx + cy * dy).collect();
        let lo = proj.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = proj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let t = (x * dx + y * dy - lo) / (hi - lo);
        1.0 - s.strength * t
    }
}

/// Rendered frames and the first shape's ground-truth mask per frame.
pub fn render(spec: &SceneSpec) -> Result<(Vec<Image>, Vec<RegionMask>)> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let color = spec.is_color();
    let channels = if color { 3 } else { 1 };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut images = Vec::with_capacity(spec.frames);
    let mut masks = Vec::with_capacity(spec.frames);
    for frame in 0..spec.frames {
        let mut data = Vec::with_capacity(w * h * channels);
        for y in 0..h {
            for x in 0..w {
                let (px, py) = (x as f64, y as f64);
                let fill = spec
                    .shapes
                    .iter()
                    .rev()
                    .find(|s| s.contains(frame, px, py))
                    .map_or(spec.background, |s| s.fill);
                let shade = spec.shading_factor(px, py);
                let values = if color {
                    fill.rgb().to_vec()
                } else {
                    vec![fill.luma()]
                };
                for v in values {
                    let mut v = v * shade;
                    if spec.noise > 0.0 {
                        v += rng.gen_range(-spec.noise..=spec.noise);
                    }
                    data.push(v.clamp(0.0, 1.0));
                }
            }
        }
        images.push(Image::new(w, h, channels, data)?);
        let tracked = &spec.shapes[0];
        masks.push(RegionMask::from_fn(w, h, |x, y| {
            tracked.contains(frame, x as f64, y as f64)
        }));
    }
    Ok((images, masks))
}

/// Parameters of a synthetic eye: a colored iris disk with a dark pupil on
/// a sclera background, optional linear shading and a constant drift.
#[derive(Debug, Clone, PartialEq)]
pub struct EyeParams {
    pub width: usize,
    pub height: usize,
    pub center: (f64, f64),
    pub iris_radius: f64,
    pub pupil_radius: f64,
    pub sclera: [f64; 3],
    pub iris: [f64; 3],
    pub pupil: [f64; 3],
    pub shading_strength: f64,
    pub shading_direction: (f64, f64),
    pub drift: (f64, f64),
    pub frames: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for EyeParams {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            center: (26.0, 32.0),
            iris_radius: 11.0,
            pupil_radius: 4.5,
            sclera: [0.5, 0.42, 0.38],
            iris: [0.22, 0.46, 0.70],
            pupil: [0.06, 0.05, 0.05],
            shading_strength: 0.0,
            shading_direction: (-1.0, -1.0),
            drift: (2.0, 0.0),
            frames: 6,
            noise: 0.02,
            seed: 11,
        }
    }
}

/// Scene whose ground truth is the iris disk (iris and pupil together).
pub fn eye_scene(params: &EyeParams) -> Result<SceneSpec> {
    if !(params.pupil_radius > 0.0 && params.iris_radius > params.pupil_radius) {
        return Err(Error::InvalidParameter(format!(
            "eye radii out of order: need iris ({}) > pupil ({}) > 0",
            params.iris_radius, params.pupil_radius
        )));
    }
    let (vx, vy) = params.drift;
    let mut spec = SceneSpec::new(params.width, params.height, Color::Rgb(params.sclera));
    spec.shapes = vec![
        Shape::disk(params.center, params.iris_radius, Color::Rgb(params.iris)).moving(vx, vy),
        Shape::disk(params.center, params.pupil_radius, Color::Rgb(params.pupil)).moving(vx, vy),
    ];
    if params.shading_strength > 0.0 {
        spec.shading = Some(Shading {
            direction: params.shading_direction,
            strength: params.shading_strength,
        });
    }
    spec.noise = params.noise;
    spec.frames = params.frames;
    spec.seed = params.seed;
    spec.validate()?;
    Ok(spec)
}

/// Gray disk on a darker background drifting along x.
pub fn moving_disk_scene(step: f64, frames: usize) -> SceneSpec {
    let mut spec = SceneSpec::new(64, 64, Color::Gray(0.2));
    spec.shapes = vec![Shape::disk((20.0, 32.0), 10.0, Color::Gray(0.8)).moving(step, 0.0)];
    spec.frames = frames;
    spec
}

/// Color of the same luma as `reference` with the given red and blue parts.
pub fn equal_luma_color(reference: [f64; 3], red: f64, blue: f64) -> [f64; 3] {
    let luma = Color::Rgb(reference).luma();
    let green = (luma - LUMA_WEIGHTS[0] * red - LUMA_WEIGHTS[2] * blue) / LUMA_WEIGHTS[1];
    [red, green, blue]
}

pub const DISK_A_COLOR: [f64; 3] = [0.8, 0.3, 0.3];

/// Two disks of equal luma but different color, both drifting along x with
/// the decoy trailing one pixel behind the tracked disk. The tracked disk
/// has a core of a third color, again of equal luma.
pub fn two_color_disks_scene(frames: usize) -> SceneSpec {
    let core = equal_luma_color(DISK_A_COLOR, 0.55, 0.08);
    let decoy = equal_luma_color(DISK_A_COLOR, 0.2, 0.6);
    let r = 9.0;
    let step = 4.0;
    let ax = 28.0;
    let mut spec = SceneSpec::new(64, 64, Color::Rgb([0.9, 0.9, 0.9]));
    spec.shapes = vec![
        Shape::disk((ax, 32.0), r, Color::Rgb(DISK_A_COLOR)).moving(step, 0.0),
        Shape::disk((ax, 32.0), 0.6 * r, Color::Rgb(core)).moving(step, 0.0),
        Shape::disk((ax - 2.0 * r - 1.0, 32.0), r, Color::Rgb(decoy)).moving(step, 0.0),
    ];
    spec.frames = frames;
    spec
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad number '{}'", p.trim())))
        })
        .collect()
}

fn parse_shape(s: &str) -> Result<Shape> {
    let mut tokens = s.split_whitespace();
    let kind = tokens
        .next()
        .ok_or_else(|| Error::InvalidParameter("empty shape".into()))?;
    let mut fields = std::collections::BTreeMap::new();
    for tok in tokens {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::InvalidParameter(format!("expected key=value, got '{tok}'")))?;
        fields.insert(k, v);
    }
    let num = |k: &str| -> Result<f64> {
        let v = fields
            .get(k)
            .ok_or_else(|| Error::InvalidParameter(format!("shape is missing '{k}'")))?;
        v.parse()
            .map_err(|_| Error::InvalidParameter(format!("bad number '{v}' for '{k}'")))
    };
    let opt = |k: &str| -> Result<f64> {
        if fields.contains_key(k) {
            num(k)
        } else {
            Ok(0.0)
        }
    };
    let center = (num("cx")?, num("cy")?);
    let fill: Color = fields
        .get("color")
        .ok_or_else(|| Error::InvalidParameter("shape is missing 'color'".into()))?
        .parse()?;
    let shape = match kind {
        "disk" => Shape::disk(center, num("r")?, fill),
        "rect" => Shape::rect(center, (num("w")?, num("h")?), fill),
        other => {
            return Err(Error::InvalidParameter(format!("unknown shape '{other}'")));
        }
    };
    Ok(shape.moving(opt("vx")?, opt("vy")?))
}

impl FromStr for SceneSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut spec = SceneSpec::new(0, 0, Color::Gray(0.0));
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |e: Error| Error::InvalidParameter(format!("line {}: {e}", n + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(Error::InvalidParameter("expected key = value".into())))?;
            let (key, value) = (key.trim(), value.trim());
            let int = |v: &str| -> Result<usize> {
                v.parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad integer '{v}'")))
            };
            match key {
                "width" => spec.width = int(value).map_err(at)?,
                "height" => spec.height = int(value).map_err(at)?,
                "frames" => spec.frames = int(value).map_err(at)?,
                "seed" => {
                    spec.seed = value
                        .parse()
                        .map_err(|_| at(Error::InvalidParameter(format!("bad seed '{value}'"))))?
                }
                "noise" => spec.noise = parse_floats(value).map_err(at)?[0],
                "background" => spec.background = value.parse().map_err(at)?,
                "shading" => {
                    spec.shading = if value == "none" {
                        None
                    } else {
                        match parse_floats(value).map_err(at)?.as_slice() {
                            [dx, dy, s] => Some(Shading {
                                direction: (*dx, *dy),
                                strength: *s,
                            }),
                            _ => {
                                return Err(at(Error::InvalidParameter(
                                    "shading needs dx,dy,strength".into(),
                                )))
                            }
                        }
                    }
                }
                "shape" => spec.shapes.push(parse_shape(value).map_err(at)?),
                other => {
                    return Err(at(Error::InvalidParameter(format!("unknown key '{other}'"))));
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for SceneSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "width = {}", self.width)?;
        writeln!(f, "height = {}", self.height)?;
        writeln!(f, "frames = {}", self.frames)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "noise = {}", self.noise)?;
        writeln!(f, "background = {}", self.background)?;
        match &self.shading {
            Some(s) => writeln!(
                f,
                "shading = {},{},{}",
                s.direction.0, s.direction.1, s.strength
            )?,
            None => writeln!(f, "shading = none")?,
        }
        for s in &self.shapes {
            match s.kind {
                ShapeKind::Disk { radius } => write!(f, "shape = disk r={radius}")?,
                ShapeKind::Rect { width, height } => write!(f, "shape = rect w={width} h={height}")?,
            }
            writeln!(
                f,
                " cx={} cy={} color={} vx={} vy={}",
                s.center.0, s.center.1, s.fill, s.velocity.0, s.velocity.1
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_disk_area() {
        let mut spec = SceneSpec::new(64, 64, Color::Gray(0.1));
        spec.shapes.push(Shape::disk((31.5, 30.2), 12.0, Color::Gray(0.9)));
        let (imgs, masks) = render(&spec).unwrap();
        assert_eq!((imgs.len(), masks.len()), (1, 1));
        let area = masks[0].area() as f64;
        let exact = std::f64::consts::PI * 144.0;
        assert!((area - exact).abs() < 0.02 * exact, "area {area}");
        assert_eq!(imgs[0].channels(), 1);
    }

    #[test]
    fn translation_shifts_mask() {
        let spec = moving_disk_scene(3.0, 2);
        let (_, masks) = render(&spec).unwrap();
        assert_eq!(masks[1], masks[0].shifted(3, 0));
    }

    #[test]
    fn equal_luma_decoy() {
        let spec = two_color_disks_scene(1);
        let (imgs, _) = render(&spec).unwrap();
        let img = &imgs[0];
        let (a, b) = (spec.shapes[0].center, spec.shapes[2].center);
        let pa = img.pixel(a.0 as usize, a.1 as usize).to_vec();
        let pb = img.pixel(b.0 as usize, b.1 as usize).to_vec();
        let gray = img.to_grayscale();
        let (ga, gb) = (
            gray.get(a.0 as usize, a.1 as usize),
            gray.get(b.0 as usize, b.1 as usize),
        );
        assert!((ga - gb).abs() < 1e-12);
        assert!((pa[0] - pb[0]).abs() > 0.3);
    }

    #[test]
    fn deterministic_noise() {
        let mut spec = moving_disk_scene(2.0, 3);
        spec.noise = 0.05;
        spec.seed = 42;
        let a = render(&spec).unwrap();
        let b = render(&spec).unwrap();
        assert_eq!(a, b);
        spec.seed = 43;
        assert_ne!(render(&spec).unwrap().0, a.0);
    }

    #[test]
    fn out_of_bounds_and_bad_params() {
        let spec = moving_disk_scene(10.0, 6);
        assert!(matches!(
            render(&spec),
            Err(Error::ShapeOutOfBounds { index: 0, frame: 4 })
        ));
        let mut noisy = moving_disk_scene(1.0, 2);
        noisy.noise = 0.3;
        assert!(render(&noisy).is_err());
        let params = EyeParams {
            pupil_radius: 12.0,
            ..EyeParams::default()
        };
        assert!(eye_scene(&params).is_err());
    }

    #[test]
    fn ground_truth_is_exact() {
        let mut p = EyeParams::default();
        p.shading_strength = 0.3;
        let spec = eye_scene(&p).unwrap();
        let (imgs, masks) = render(&spec).unwrap();
        assert_eq!(imgs[0].channels(), 3);
        for (k, m) in masks.iter().enumerate() {
            let (cx, cy) = spec.shapes[0].center_at(k);
            for y in 0..m.height() {
                for x in 0..m.width() {
                    let d = (x as f64 - cx).hypot(y as f64 - cy);
                    assert_eq!(m.get(x, y), d <= p.iris_radius);
                }
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let mut spec = two_color_disks_scene(3);
        spec.shading = Some(Shading {
            direction: (1.0, 0.5),
            strength: 0.25,
        });
        spec.noise = 0.01;
        spec.seed = 9;
        spec.shapes.push(Shape::rect((50.0, 10.0), (6.0, 4.0), Color::Gray(0.3)));
        let text = spec.to_string();
        let parsed: SceneSpec = text.parse().unwrap();
        assert_eq!(parsed, spec);
    }

    #[test]
    fn text_errors_name_the_line() {
        let err = "width = 10\nheight = x\n".parse::<SceneSpec>().unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!("width = 10\nbogus = 1\n".parse::<SceneSpec>().is_err());
    }
}
