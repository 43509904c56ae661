//! Energy terms, their outward boundary speeds, and the preset designs.
//!
//! Every term is a weighted region energy `E(R)` paired with the speed
//! `v = -dE/dR` obtained from its first variation: adding an area element
//! at `x` to the region changes `E` by `-v(x)` per unit area. Speeds are
//! only evaluated in a narrow band around the curve and left at zero
//! elsewhere.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{check_dims, region_mean, Image, RegionMask};
use crate::levelset::{
    curvature, extract_mask, init_signed_distance, mask_perimeter, LevelSetGrid, SpeedField,
};
use crate::stats::{bin_of, build_histogram, floored_mass, kl_divergence, region_counts, Histogram};

/// Half-width, in pixels, of the band where speeds are evaluated.
pub const SPEED_BAND: f64 = 3.0;

/// Frame-dependent features shared by all terms: the gray image, its
/// gradient magnitude and, for color frames, the three channel planes.
#[derive(Debug, Clone)]
pub struct FrameFeatures {
    pub gray: Image,
    pub grad: Image,
    pub channels: Option<[Image; 3]>,
}

impl FrameFeatures {
    pub fn new(img: &Image) -> Result<Self> {
        let gray = img.to_grayscale();
        let grad = gray.gradient_magnitude()?;
        let channels = (img.channels() == 3).then(|| [img.channel(0), img.channel(1), img.channel(2)]);
        Ok(Self {
            gray,
            grad,
            channels,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.gray.dims()
    }
}

/// Everything the energies need from the reference frame and region.
#[derive(Debug, Clone, PartialEq)]
pub struct RefStats {
    pub mean: f64,
    pub area: f64,
    pub intensity_hist: Histogram,
    pub complement_hist: Histogram,
    pub grad_hist: Histogram,
    pub color_hists: Option<[Histogram; 3]>,
    pub source_frame: usize,
}

impl RefStats {
    pub fn from_features(features: &FrameFeatures, region: &RegionMask, bins: usize) -> Result<Self> {
        check_dims(features.dims(), region.dims())?;
        if region.is_empty() {
            return Err(Error::DegenerateMask("empty reference region"));
        }
        if region.is_full() {
            return Err(Error::DegenerateMask("reference region covers the whole frame"));
        }
        let color_hists = match &features.channels {
            Some([r, g, b]) => Some([
                build_histogram(r, region, bins)?,
                build_histogram(g, region, bins)?,
                build_histogram(b, region, bins)?,
            ]),
            None => None,
        };
        Ok(Self {
            mean: region_mean(&features.gray, region)?,
            area: region.area() as f64,
            intensity_hist: build_histogram(&features.gray, region, bins)?,
            complement_hist: build_histogram(&features.gray, &region.complement(), bins)?,
            grad_hist: build_histogram(&features.grad, region, bins)?,
            color_hists,
            source_frame: 0,
        })
    }

    pub fn bins(&self) -> usize {
        self.intensity_hist.bin_count()
    }
}

/// The current curve on the current frame, with the region derived from it.
#[derive(Debug, Clone)]
pub struct TermState<'a> {
    features: &'a FrameFeatures,
    reference: &'a RefStats,
    grid: LevelSetGrid,
    mask: RegionMask,
}

impl<'a> TermState<'a> {
    pub fn new(features: &'a FrameFeatures, reference: &'a RefStats, grid: LevelSetGrid) -> Result<Self> {
        check_dims(features.dims(), grid.dims())?;
        let mask = extract_mask(&grid);
        Ok(Self {
            features,
            reference,
            grid,
            mask,
        })
    }

    /// State whose curve is the signed distance field of `mask`.
    pub fn from_mask(
        features: &'a FrameFeatures,
        reference: &'a RefStats,
        mask: &RegionMask,
    ) -> Result<Self> {
        Self::new(features, reference, init_signed_distance(mask)?)
    }

    pub fn features(&self) -> &'a FrameFeatures {
        self.features
    }

    pub fn reference(&self) -> &'a RefStats {
        self.reference
    }

    pub fn grid(&self) -> &LevelSetGrid {
        &self.grid
    }

    pub fn mask(&self) -> &RegionMask {
        &self.mask
    }

    pub fn into_grid(self) -> LevelSetGrid {
        self.grid
    }

    fn area(&self) -> Result<f64> {
        let a = self.mask.area();
        if a == 0 {
            return Err(Error::EmptyRegion);
        }
        Ok(a as f64)
    }

    fn complement_area(&self) -> Result<f64> {
        let a = self.mask.as_slice().len() - self.mask.area();
        if a == 0 {
            return Err(Error::EmptyRegion);
        }
        Ok(a as f64)
    }

    fn color_planes(&self) -> Result<(&[Image; 3], &[Histogram; 3])> {
        match (&self.features.channels, &self.reference.color_hists) {
            (Some(planes), Some(hists)) => Ok((planes, hists)),
            _ => Err(Error::ChannelMismatch {
                design: "KLColor",
                expected: 3,
                got: 1,
            }),
        }
    }

    /// Speed field that is `f(i)` at pixels within the band and zero elsewhere.
    fn band_field(&self, f: impl Fn(usize) -> f64 + Sync) -> Result<SpeedField> {
        let (w, h) = self.grid.dims();
        let u = self.grid.values();
        let v = u
            .par_iter()
            .enumerate()
            .map(|(i, &ui)| if ui.abs() <= SPEED_BAND { f(i) } else { 0.0 })
            .collect();
        SpeedField::new(w, h, v)
    }

    /// Speed of `lambda * KL(reference || set)` for one feature plane, where
    /// the set is the region or, with `complement`, everything outside it.
    ///
    /// Each pixel's speed is the exact energy change of moving it across
    /// the boundary: the loss from dropping an inside pixel, the negated
    /// gain from admitting an outside one. To first order this is
    /// `(lambda / A) (p0 / p1 - 1)`, but it stays right for the floored,
    /// sparsely filled histograms of small regions, where that form can
    /// point the wrong way.
    fn kl_speed_of(
        &self,
        feature: &Image,
        reference: &Histogram,
        lambda: f64,
        complement: bool,
    ) -> Result<SpeedField> {
        let set = if complement { self.mask.complement() } else { self.mask.clone() };
        let bins = reference.bin_count();
        let counts = region_counts(feature, &set, bins)?;
        let (join, leave) = kl_flip_deltas(reference, &counts);
        let member = set.as_slice();
        let sign = if complement { -1.0 } else { 1.0 };
        self.band_field(|i| {
            let b = bin_of(feature.value(i), bins);
            let grow_cost = if member[i] { -leave[b] } else { join[b] };
            -sign * lambda * grow_cost
        })
    }

    fn kl_speed(&self, feature: &Image, reference: &Histogram, lambda: f64) -> Result<SpeedField> {
        self.area()?;
        self.kl_speed_of(feature, reference, lambda, false)
    }
}

/// Change of `KL(reference || set)` when one pixel of bin `b` joins the set
/// (`join[b]`) or leaves it (`leave[b]`), the set having per-bin `counts`.
/// Leaving is zero where the bin is empty or the set would empty.
fn kl_flip_deltas(reference: &Histogram, counts: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let bins = counts.len();
    let eps = reference.floor_epsilon();
    let total: f64 = counts.iter().sum();
    let kl = |b: usize, dn: f64| -> f64 {
        let t = total + dn;
        (0..bins)
            .map(|c| {
                let n = if c == b { counts[c] + dn } else { counts[c] };
                let p = reference.mass(c);
                p * (p / floored_mass(n, t, bins, eps)).ln()
            })
            .sum()
    };
    let base = kl(usize::MAX, 0.0);
    let join = (0..bins).map(|b| kl(b, 1.0) - base).collect();
    let leave = (0..bins)
        .map(|b| {
            if counts[b] >= 1.0 && total > 1.0 {
                kl(b, -1.0) - base
            } else {
                0.0
            }
        })
        .collect();
    (join, leave)
}

/// One weighted component of a design's energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyTerm {
    /// `lambda * length(curve)`.
    Length(f64),
    /// `lambda * (mean_R1 I1 - mean_R0 I0)^2`.
    MeanIntensity(f64),
    /// `lambda * (area R1 - area R0)^2`.
    AreaMatch(f64),
    /// `lambda * KL(p_R0(I) || p_R1(I))`.
    KLIntensity(f64),
    /// `lambda * KL(p_R0c(I) || p_R1c(I))` over the complements.
    KLComplement(f64),
    /// `lambda * KL(p_R0(J) || p_R1(J))` with `J = |grad I|`.
    KLGradient(f64),
    /// Per-channel intensity divergences weighted `(red, green, blue)`.
    KLColor([f64; 3]),
}

impl EnergyTerm {
    pub fn name(&self) -> &'static str {
        match self {
            EnergyTerm::Length(_) => "Length",
            EnergyTerm::MeanIntensity(_) => "MeanIntensity",
            EnergyTerm::AreaMatch(_) => "AreaMatch",
            EnergyTerm::KLIntensity(_) => "KLIntensity",
            EnergyTerm::KLComplement(_) => "KLComplement",
            EnergyTerm::KLGradient(_) => "KLGradient",
            EnergyTerm::KLColor(_) => "KLColor",
        }
    }

    /// The same term with every weight multiplied by `c`.
    pub fn scaled(&self, c: f64) -> EnergyTerm {
        match *self {
            EnergyTerm::Length(l) => EnergyTerm::Length(c * l),
            EnergyTerm::MeanIntensity(l) => EnergyTerm::MeanIntensity(c * l),
            EnergyTerm::AreaMatch(l) => EnergyTerm::AreaMatch(c * l),
            EnergyTerm::KLIntensity(l) => EnergyTerm::KLIntensity(c * l),
            EnergyTerm::KLComplement(l) => EnergyTerm::KLComplement(c * l),
            EnergyTerm::KLGradient(l) => EnergyTerm::KLGradient(c * l),
            EnergyTerm::KLColor(l) => EnergyTerm::KLColor(l.map(|x| c * x)),
        }
    }

    fn weights_valid(&self) -> bool {
        let ok = |w: f64| w.is_finite() && w >= 0.0;
        match *self {
            EnergyTerm::KLColor(l) => l.iter().all(|&w| ok(w)),
            EnergyTerm::Length(l)
            | EnergyTerm::MeanIntensity(l)
            | EnergyTerm::AreaMatch(l)
            | EnergyTerm::KLIntensity(l)
            | EnergyTerm::KLComplement(l)
            | EnergyTerm::KLGradient(l) => ok(l),
        }
    }
}

/// Energy of one term for the current region. Length is measured on the
/// smoothed extracted mask, so the total stays flat while no pixel changes
/// side.
pub fn term_energy(term: &EnergyTerm, state: &TermState<'_>) -> Result<f64> {
    let area = state.area()?;
    let r = state.reference;
    let f = state.features;
    Ok(match *term {
        EnergyTerm::Length(l) => l * mask_perimeter(&state.mask),
        EnergyTerm::MeanIntensity(l) => {
            let mu = region_mean(&f.gray, &state.mask)?;
            l * (mu - r.mean).powi(2)
        }
        EnergyTerm::AreaMatch(l) => l * (area - r.area).powi(2),
        EnergyTerm::KLIntensity(l) => {
            let cur = build_histogram(&f.gray, &state.mask, r.bins())?;
            l * kl_divergence(&r.intensity_hist, &cur)?
        }
        EnergyTerm::KLComplement(l) => {
            state.complement_area()?;
            let cur = build_histogram(&f.gray, &state.mask.complement(), r.bins())?;
            l * kl_divergence(&r.complement_hist, &cur)?
        }
        EnergyTerm::KLGradient(l) => {
            let cur = build_histogram(&f.grad, &state.mask, r.bins())?;
            l * kl_divergence(&r.grad_hist, &cur)?
        }
        EnergyTerm::KLColor(ls) => {
            let (planes, hists) = state.color_planes()?;
            let mut e = 0.0;
            for c in 0..3 {
                let cur = build_histogram(&planes[c], &state.mask, hists[c].bin_count())?;
                e += ls[c] * kl_divergence(&hists[c], &cur)?;
            }
            e
        }
    })
}

pub fn term_speed(term: &EnergyTerm, state: &TermState<'_>) -> Result<SpeedField> {
    let area = state.area()?;
    let r = state.reference;
    let f = state.features;
    match *term {
        EnergyTerm::Length(l) => {
            let (w, _) = state.grid.dims();
            let grid = &state.grid;
            state.band_field(|i| -l * curvature(grid, i % w, i / w))
        }
        EnergyTerm::MeanIntensity(l) => {
            let mu = region_mean(&f.gray, &state.mask)?;
            let k = -2.0 * l * (mu - r.mean) / area;
            state.band_field(|i| k * (f.gray.value(i) - mu))
        }
        EnergyTerm::AreaMatch(l) => {
            let s = -2.0 * l * (area - r.area);
            state.band_field(|_| s)
        }
        EnergyTerm::KLIntensity(l) => state.kl_speed(&f.gray, &r.intensity_hist, l),
        EnergyTerm::KLComplement(l) => {
            state.complement_area()?;
            state.kl_speed_of(&f.gray, &r.complement_hist, l, true)
        }
        EnergyTerm::KLGradient(l) => state.kl_speed(&f.grad, &r.grad_hist, l),
        EnergyTerm::KLColor(ls) => {
            let (planes, hists) = state.color_planes()?;
            let mut total = state.kl_speed(&planes[0], &hists[0], ls[0])?;
            for c in 1..3 {
                total.add_scaled(&state.kl_speed(&planes[c], &hists[c], ls[c])?, 1.0);
            }
            Ok(total)
        }
    }
}

fn ensure_nonempty(terms: &[EnergyTerm]) -> Result<()> {
    if terms.is_empty() {
        return Err(Error::InvalidParameter("empty term list".into()));
    }
    Ok(())
}

pub fn total_energy(terms: &[EnergyTerm], state: &TermState<'_>) -> Result<f64> {
    ensure_nonempty(terms)?;
    terms.iter().map(|t| term_energy(t, state)).sum()
}

/// Sum of every term's speed, the length term included.
pub fn total_speed(terms: &[EnergyTerm], state: &TermState<'_>) -> Result<SpeedField> {
    ensure_nonempty(terms)?;
    let (w, h) = state.grid.dims();
    let mut total = SpeedField::zeros(w, h);
    for t in terms {
        total.add_scaled(&term_speed(t, state)?, 1.0);
    }
    Ok(total)
}

/// Speeds split for [`crate::levelset::evolve_step`]: the advective sum of
/// all region terms, and the total length weight, which the evolution
/// applies as a parabolic curvature term.
pub fn split_speed(terms: &[EnergyTerm], state: &TermState<'_>) -> Result<(SpeedField, f64)> {
    ensure_nonempty(terms)?;
    let (w, h) = state.grid.dims();
    let mut advective = SpeedField::zeros(w, h);
    let mut curvature_weight = 0.0;
    for t in terms {
        match *t {
            EnergyTerm::Length(l) => curvature_weight += l,
            _ => advective.add_scaled(&term_speed(t, state)?, 1.0),
        }
    }
    // region speeds still fail on empty regions even when only Length is present
    state.area()?;
    Ok((advective, curvature_weight))
}

/// The seven preset energies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Design {
    D1,
    D1B,
    D2,
    D2B,
    D3,
    D4,
    D4B,
}

impl Design {
    pub const ALL: [Design; 7] = [
        Design::D1,
        Design::D1B,
        Design::D2,
        Design::D2B,
        Design::D3,
        Design::D4,
        Design::D4B,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Design::D1 => "1",
            Design::D1B => "1b",
            Design::D2 => "2",
            Design::D2B => "2b",
            Design::D3 => "3",
            Design::D4 => "4",
            Design::D4B => "4b",
        }
    }

    /// Names of the weights in the order [`make_design`] expects them; `l`
    /// is the length weight.
    pub fn weight_names(&self) -> &'static [&'static str] {
        match self {
            Design::D1 | Design::D2 => &["l1", "l"],
            Design::D1B | Design::D2B | Design::D3 => &["l1", "l2", "l"],
            Design::D4 => &["l1", "l2", "l3", "l"],
            Design::D4B => &["l1", "l2", "l3", "l4", "l"],
        }
    }

    /// Whether the design reads RGB channels.
    pub fn needs_color(&self) -> bool {
        matches!(self, Design::D4 | Design::D4B)
    }

    /// Calibrated weights for the synthetic benchmark scenes, in
    /// [`Design::weight_names`] order.
    pub fn default_weights(&self) -> Vec<f64> {
        match self {
            Design::D1 => vec![1e5, 0.05],
            Design::D1B => vec![5000.0, 0.005, 0.05],
            Design::D2 => vec![3000.0, 0.05],
            Design::D2B => vec![3000.0, 3000.0, 0.05],
            Design::D3 => vec![3000.0, 1000.0, 0.05],
            Design::D4 => vec![3000.0, 3000.0, 3000.0, 0.05],
            Design::D4B => vec![3000.0, 3000.0, 3000.0, 0.2, 0.05],
        }
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let id = s.trim().trim_start_matches('#').to_ascii_lowercase();
        Design::ALL
            .into_iter()
            .find(|d| d.id() == id)
            .ok_or_else(|| Error::UnknownDesign(s.to_string()))
    }
}

/// Term list of a design, weights given in [`Design::weight_names`] order.
pub fn make_design(design: Design, weights: &[f64]) -> Result<Vec<EnergyTerm>> {
    let expected = design.weight_names().len();
    if weights.len() != expected {
        return Err(Error::WeightArity {
            design: design.id(),
            expected,
            got: weights.len(),
        });
    }
    let w = weights;
    let terms = match design {
        Design::D1 => vec![EnergyTerm::MeanIntensity(w[0]), EnergyTerm::Length(w[1])],
        Design::D1B => vec![
            EnergyTerm::MeanIntensity(w[0]),
            EnergyTerm::AreaMatch(w[1]),
            EnergyTerm::Length(w[2]),
        ],
        Design::D2 => vec![EnergyTerm::KLIntensity(w[0]), EnergyTerm::Length(w[1])],
        Design::D2B => vec![
            EnergyTerm::KLIntensity(w[0]),
            EnergyTerm::KLComplement(w[1]),
            EnergyTerm::Length(w[2]),
        ],
        Design::D3 => vec![
            EnergyTerm::KLIntensity(w[0]),
            EnergyTerm::KLGradient(w[1]),
            EnergyTerm::Length(w[2]),
        ],
        Design::D4 => vec![
            EnergyTerm::KLColor([w[0], w[1], w[2]]),
            EnergyTerm::Length(w[3]),
        ],
        Design::D4B => vec![
            EnergyTerm::KLColor([w[0], w[1], w[2]]),
            EnergyTerm::AreaMatch(w[3]),
            EnergyTerm::Length(w[4]),
        ],
    };
    if let Some(bad) = terms.iter().find(|t| !t.weights_valid()) {
        return Err(Error::InvalidParameter(format!(
            "{} weight must be finite and non-negative",
            bad.name()
        )));
    }
    Ok(terms)
}

/// [`make_design`] keyed by the textual id (`1`, `1b`, ..., `4b`).
pub fn make_design_by_id(id: &str, weights: &[f64]) -> Result<Vec<EnergyTerm>> {
    make_design(id.parse()?, weights)
}
