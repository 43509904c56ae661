//! Frame-to-frame tracking by gradient descent of a design's energy.

use crate::error::{Error, Result};
use crate::functionals::{make_design, split_speed, total_energy, Design, EnergyTerm, FrameFeatures, RefStats, TermState};
use crate::image::{check_dims, Image, RegionMask};
use crate::levelset::{evolve_step, init_signed_distance, reinitialize, stable_dt, LevelSetGrid};
use crate::metrics::{coverage, CoverageScore};
use crate::stats::DEFAULT_BINS;

#[derive(Debug, Clone, PartialEq)]
pub struct TrackConfig {
    pub design: Design,
    /// Weights in [`Design::weight_names`] order.
    pub weights: Vec<f64>,
    pub max_iterations: usize,
    /// Relative energy change over `convergence_window` iterations below
    /// which a frame counts as converged.
    pub convergence_tol: f64,
    pub convergence_window: usize,
    pub reinit_every: usize,
    pub histogram_bins: usize,
}

impl TrackConfig {
    pub fn new(design: Design) -> Self {
        Self {
            design,
            weights: design.default_weights(),
            max_iterations: 500,
            convergence_tol: 1e-5,
            convergence_window: 10,
            reinit_every: 20,
            histogram_bins: DEFAULT_BINS,
        }
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = weights;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.max_iterations < 1 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.convergence_tol > 0.0) {
            return bad("convergence_tol must be positive");
        }
        if self.convergence_window < 1 {
            return bad("convergence_window must be at least 1");
        }
        if self.reinit_every < 1 {
            return bad("reinit_every must be at least 1");
        }
        if self.histogram_bins < 2 {
            return bad("histogram_bins must be at least 2");
        }
        make_design(self.design, &self.weights).map(|_| ())
    }

    pub fn terms(&self) -> Result<Vec<EnergyTerm>> {
        make_design(self.design, &self.weights)
    }

    fn check_channels(&self, img: &Image) -> Result<()> {
        if self.design.needs_color() && img.channels() != 3 {
            return Err(Error::ChannelMismatch {
                design: self.design.id(),
                expected: 3,
                got: img.channels(),
            });
        }
        Ok(())
    }
}

/// Outcome of tracking one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameReport {
    pub frame_index: usize,
    pub final_mask: RegionMask,
    /// Level-set field the mask was extracted from.
    pub final_grid: LevelSetGrid,
    pub iterations: usize,
    /// Energy before the first step.
    pub initial_energy: f64,
    /// Energy after each step; its length equals `iterations`.
    pub energy_trace: Vec<f64>,
    pub converged: bool,
    pub lost_track: bool,
    pub coverage: Option<CoverageScore>,
}

impl FrameReport {
    /// Energy of the returned region, absent when the track was lost.
    pub fn final_energy(&self) -> Option<f64> {
        if self.lost_track {
            return None;
        }
        Some(self.energy_trace.last().copied().unwrap_or(self.initial_energy))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackReport {
    pub reference: RefStats,
    pub frames: Vec<FrameReport>,
}

impl TrackReport {
    /// Mean `(drc, urc)` over frames that carry a coverage score.
    pub fn mean_coverage(&self) -> Option<(f64, f64)> {
        let scores: Vec<CoverageScore> = self.frames.iter().filter_map(|f| f.coverage).collect();
        crate::metrics::mean_coverage(&scores)
    }

    pub fn total_iterations(&self) -> usize {
        self.frames.iter().map(|f| f.iterations).sum()
    }
}

/// Reference statistics of `r0` in `img0`.
pub fn build_reference(img0: &Image, r0: &RegionMask, cfg: &TrackConfig) -> Result<RefStats> {
    cfg.validate()?;
    cfg.check_channels(img0)?;
    let features = FrameFeatures::new(img0)?;
    RefStats::from_features(&features, r0, cfg.histogram_bins)
}

/// Result of one [`Evolver::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    /// Energy of the updated curve.
    Energy(f64),
    /// The region emptied or filled the frame.
    Lost,
}

/// Explicit gradient-descent evolution of one curve on one frame.
pub struct Evolver<'a> {
    terms: Vec<EnergyTerm>,
    state: TermState<'a>,
    energy: f64,
    steps: usize,
    reinit_every: usize,
}

impl<'a> Evolver<'a> {
    pub fn new(
        features: &'a FrameFeatures,
        reference: &'a RefStats,
        grid: LevelSetGrid,
        terms: Vec<EnergyTerm>,
        reinit_every: usize,
    ) -> Result<Self> {
        let state = TermState::new(features, reference, grid)?;
        let energy = total_energy(&terms, &state)?;
        Ok(Self {
            terms,
            state,
            energy,
            steps: 0,
            reinit_every: reinit_every.max(1),
        })
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn state(&self) -> &TermState<'a> {
        &self.state
    }

    pub fn step(&mut self) -> Result<StepOutcome> {
        let (speed, lambda) = split_speed(&self.terms, &self.state)?;
        let dt = stable_dt(&speed, lambda);
        let mut next = evolve_step(self.state.grid(), &speed, lambda, dt)?;
        self.steps += 1;
        if self.steps % self.reinit_every == 0 {
            match reinitialize(&next) {
                Ok(g) => next = g,
                Err(Error::DegenerateMask(_)) => return Ok(StepOutcome::Lost),
                Err(e) => return Err(e),
            }
        }
        let state = TermState::new(self.state.features(), self.state.reference(), next)?;
        if state.mask().is_empty() || state.mask().is_full() {
            self.state = state;
            return Ok(StepOutcome::Lost);
        }
        self.energy = total_energy(&self.terms, &state)?;
        self.state = state;
        Ok(StepOutcome::Energy(self.energy))
    }
}

/// Evolves the curve seeded by `prev_mask` on `img` until the energy settles
/// or the iteration budget runs out.
pub fn track_frame(
    reference: &RefStats,
    prev_mask: &RegionMask,
    img: &Image,
    cfg: &TrackConfig,
) -> Result<(RegionMask, FrameReport)> {
    cfg.validate()?;
    cfg.check_channels(img)?;
    check_dims(img.dims(), prev_mask.dims())?;
    let features = FrameFeatures::new(img)?;
    let grid = init_signed_distance(prev_mask)?;
    let mut evolver = Evolver::new(&features, reference, grid, cfg.terms()?, cfg.reinit_every)?;
    let initial_energy = evolver.energy();

    let mut trace = Vec::new();
    let mut converged = false;
    let mut lost_track = false;
    let window = cfg.convergence_window;
    while trace.len() < cfg.max_iterations {
        match evolver.step()? {
            StepOutcome::Lost => {
                lost_track = true;
                break;
            }
            StepOutcome::Energy(e) => trace.push(e),
        }
        let t = trace.len();
        if t >= window {
            let past = if t == window { initial_energy } else { trace[t - 1 - window] };
            let rel = (trace[t - 1] - past).abs() / past.abs().max(f64::MIN_POSITIVE);
            if rel < cfg.convergence_tol {
                converged = true;
                break;
            }
        }
    }

    let final_mask = evolver.state().mask().clone();
    let report = FrameReport {
        frame_index: 0,
        final_mask: final_mask.clone(),
        final_grid: evolver.state().grid().clone(),
        iterations: trace.len(),
        initial_energy,
        energy_trace: trace,
        converged,
        lost_track,
        coverage: None,
    };
    Ok((final_mask, report))
}

/// Tracks `r0` from `img0` through `frames`, warm-starting each frame from
/// the previous result. Reference statistics stay pinned to frame 0.
pub fn track_sequence(
    img0: &Image,
    r0: &RegionMask,
    frames: &[Image],
    cfg: &TrackConfig,
) -> Result<TrackReport> {
    track_sequence_scored(img0, r0, frames, None, cfg)
}

/// [`track_sequence`] that also scores each frame against a ground-truth mask.
pub fn track_sequence_scored(
    img0: &Image,
    r0: &RegionMask,
    frames: &[Image],
    truth: Option<&[RegionMask]>,
    cfg: &TrackConfig,
) -> Result<TrackReport> {
    if frames.is_empty() {
        return Err(Error::EmptySequence);
    }
    check_dims(img0.dims(), r0.dims())?;
    for f in frames {
        check_dims(img0.dims(), f.dims())?;
    }
    if let Some(t) = truth {
        if t.len() != frames.len() {
            return Err(Error::InvalidParameter(format!(
                "{} ground-truth masks for {} frames",
                t.len(),
                frames.len()
            )));
        }
        for m in t {
            check_dims(img0.dims(), m.dims())?;
        }
    }
    let reference = build_reference(img0, r0, cfg)?;
    let mut seed = r0.clone();
    let mut reports = Vec::with_capacity(frames.len());
    for (k, img) in frames.iter().enumerate() {
        let (mask, mut report) = track_frame(&reference, &seed, img, cfg)?;
        report.frame_index = k + 1;
        if !report.lost_track {
            if let Some(t) = truth {
                report.coverage = coverage(&mask, &t[k]).ok();
            }
            seed = mask;
        }
        reports.push(report);
    }
    Ok(TrackReport {
        reference,
        frames: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(n: usize, cx: f64, cy: f64, r: f64) -> RegionMask {
        RegionMask::from_fn(n, n, |x, y| (x as f64 - cx).hypot(y as f64 - cy) <= r)
    }

    #[test]
    fn reference_of_uniform_disk() {
        let img = Image::filled(48, 48, 1, 0.5).unwrap();
        let r0 = disk(48, 24.0, 24.0, 10.0);
        let reference = build_reference(&img, &r0, &TrackConfig::new(Design::D1)).unwrap();
        assert_eq!(reference.mean, 0.5);
        assert_eq!(reference.area, 317.0);
    }

    #[test]
    fn reference_reproduces_tone_proportions() {
        let img = Image::from_fn(32, 32, |x, _| if x < 16 { 0.1 } else { 0.9 }).unwrap();
        let r0 = RegionMask::from_fn(32, 32, |x, y| (12..20).contains(&y) && (10..22).contains(&x));
        let reference = build_reference(&img, &r0, &TrackConfig::new(Design::D2)).unwrap();
        let raw = reference.intensity_hist.unfloored();
        assert!((raw[3] - 0.5).abs() < 1e-9);
        assert!((raw[28] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn color_design_on_gray_is_rejected() {
        let img = Image::filled(16, 16, 1, 0.5).unwrap();
        let r0 = disk(16, 8.0, 8.0, 4.0);
        assert!(matches!(
            build_reference(&img, &r0, &TrackConfig::new(Design::D4)),
            Err(Error::ChannelMismatch { .. })
        ));
        assert!(matches!(
            build_reference(&img, &RegionMask::full(16, 16), &TrackConfig::new(Design::D1)),
            Err(Error::DegenerateMask(_))
        ));
    }

    #[test]
    fn empty_sequence_is_an_error() {
        let img = Image::filled(16, 16, 1, 0.5).unwrap();
        let r0 = disk(16, 8.0, 8.0, 4.0);
        assert_eq!(
            track_sequence(&img, &r0, &[], &TrackConfig::new(Design::D1)),
            Err(Error::EmptySequence)
        );
        let other = Image::filled(17, 16, 1, 0.5).unwrap();
        assert!(matches!(
            track_sequence(&img, &r0, &[other], &TrackConfig::new(Design::D1)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let mut cfg = TrackConfig::new(Design::D2);
        assert!(cfg.validate().is_ok());
        cfg.convergence_tol = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = TrackConfig::new(Design::D2).with_weights(vec![1.0]);
        assert!(matches!(cfg.validate(), Err(Error::WeightArity { .. })));
    }

    #[test]
    fn featureless_frame_does_not_crash() {
        let img = Image::filled(32, 32, 1, 0.5).unwrap();
        let r0 = disk(32, 16.0, 16.0, 6.0);
        let mut cfg = TrackConfig::new(Design::D2);
        cfg.max_iterations = 200;
        let report = track_sequence(&img, &r0, std::slice::from_ref(&img), &cfg).unwrap();
        let f = &report.frames[0];
        assert_eq!(f.energy_trace.len(), f.iterations);
        assert!(f.lost_track || f.final_mask.area() <= r0.area());
    }
}
