//! The three modes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use contour_core::bench;
use contour_core::functionals::{total_energy, FrameFeatures, TermState};
use contour_core::metrics::coverage;
use contour_core::synth::{render, SceneSpec};
use contour_core::tracker::{build_reference, track_sequence_scored};
use contour_core::{Image, RegionMask, TrackReport};

use crate::config::{Mode, RunConfig};
use crate::error::{CliError, Result};
use crate::io;

pub const REPORT_HEADER: &str = "frame,iterations,energy,converged,lost_track,drc,urc";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    BenchmarkFailed,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::BenchmarkFailed => 2,
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.mode {
        Mode::Track => track(cfg).map(|_| Outcome::Success),
        Mode::Synth => synth(cfg).map(|_| Outcome::Success),
        Mode::Validate => validate(),
    }
}

fn is_scene(input: &str) -> bool {
    input.ends_with(".scene")
}

/// Reads and parses a scene file. Parse errors carry their line number.
pub fn load_scene(path: &Path) -> Result<SceneSpec> {
    if !path.is_file() {
        return Err(CliError::MissingFile(path.to_path_buf()));
    }
    let parse_error = |line: usize, message: String| CliError::ConfigParse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let text = fs::read_to_string(path).map_err(|e| parse_error(0, e.to_string()))?;
    text.parse().map_err(|e: contour_core::Error| {
        let msg = match e {
            contour_core::Error::InvalidParameter(m) => m,
            other => other.to_string(),
        };
        let numbered = msg
            .strip_prefix("line ")
            .and_then(|rest| rest.split_once(": "))
            .and_then(|(n, m)| Some((n.parse().ok()?, m.to_string())));
        match numbered {
            Some((line, m)) => parse_error(line, m),
            None => parse_error(0, msg),
        }
    })
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })
}

fn numbered(dir: &Path, stem: &str, k: usize, ext: &str) -> PathBuf {
    dir.join(format!("{stem}_{k:03}.{ext}"))
}

fn synth(cfg: &RunConfig) -> Result<()> {
    let input = cfg
        .input
        .as_deref()
        .ok_or_else(|| CliError::Usage("synth mode needs --input <file.scene>".into()))?;
    let spec = load_scene(Path::new(input))?;
    let (images, masks) = render(&spec)?;
    create_out(&cfg.out)?;
    for (k, (img, mask)) in images.iter().zip(&masks).enumerate() {
        io::save_image(img, &numbered(&cfg.out, "frame", k, "png"))?;
        io::save_mask(mask, &numbered(&cfg.out, "mask", k, "png"))?;
    }
    println!("wrote {} frames to {}", images.len(), cfg.out.display());
    Ok(())
}

struct Sequence {
    frames: Vec<Image>,
    seed: RegionMask,
    truth: Option<Vec<RegionMask>>,
}

fn load_sequence(cfg: &RunConfig) -> Result<Sequence> {
    let input = cfg
        .input
        .as_deref()
        .ok_or_else(|| CliError::Usage("track mode needs --input".into()))?;
    let seed_file = cfg.seed_mask.as_deref().map(io::load_mask).transpose()?;
    let (frames, mut truth) = if is_scene(input) {
        let (frames, masks) = render(&load_scene(Path::new(input))?)?;
        (frames, Some(masks))
    } else {
        let frames = io::resolve_paths(input)?
            .iter()
            .map(|p| io::load_image(p))
            .collect::<Result<Vec<_>>>()?;
        (frames, None)
    };
    if frames.len() < 2 {
        return Err(CliError::Usage(format!(
            "need at least two frames, '{input}' gives {}",
            frames.len()
        )));
    }
    if let Some(gt) = &cfg.ground_truth {
        let masks = io::resolve_paths(gt)?
            .iter()
            .map(|p| io::load_mask(p))
            .collect::<Result<Vec<_>>>()?;
        if masks.len() != frames.len() {
            return Err(CliError::Usage(format!(
                "{} ground-truth masks for {} frames",
                masks.len(),
                frames.len()
            )));
        }
        truth = Some(masks);
    }
    let seed = match (seed_file, &truth) {
        (Some(mask), _) => mask,
        (None, Some(t)) if is_scene(input) => t[0].clone(),
        _ => return Err(CliError::Usage("track mode needs --seed-mask".into())),
    };
    Ok(Sequence { frames, seed, truth })
}

/// One CSV row per input frame. Frame 0 carries the seed region as given:
/// no iterations, its energy on the first frame and its own coverage.
pub fn report_csv(seed_energy: f64, seed_coverage: Option<(f64, f64)>, report: &TrackReport) -> String {
    let mut out = String::new();
    let cells = |c: Option<(f64, f64)>| match c {
        Some((d, u)) => format!("{d},{u}"),
        None => ",".to_string(),
    };
    writeln!(out, "{REPORT_HEADER}").unwrap();
    writeln!(out, "0,0,{seed_energy},true,false,{}", cells(seed_coverage)).unwrap();
    for f in &report.frames {
        let energy = f.final_energy().map(|e| e.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            f.frame_index,
            f.iterations,
            energy,
            f.converged,
            f.lost_track,
            cells(f.coverage.map(|c| (c.drc, c.urc)))
        )
        .unwrap();
    }
    out
}

/// `frame,iteration,energy` with iteration 0 the energy of the seed.
pub fn trace_csv(report: &TrackReport) -> String {
    let mut out = String::from("frame,iteration,energy\n");
    for f in &report.frames {
        let all = std::iter::once(f.initial_energy).chain(f.energy_trace.iter().copied());
        for (i, e) in all.enumerate() {
            writeln!(out, "{},{i},{e}", f.frame_index).unwrap();
        }
    }
    out
}

fn track(cfg: &RunConfig) -> Result<()> {
    let seq = load_sequence(cfg)?;
    let truth = seq.truth.as_deref();
    let report = track_sequence_scored(
        &seq.frames[0],
        &seq.seed,
        &seq.frames[1..],
        truth.map(|t| &t[1..]),
        &cfg.track,
    )?;

    let reference = build_reference(&seq.frames[0], &seq.seed, &cfg.track)?;
    let features = FrameFeatures::new(&seq.frames[0])?;
    let state = TermState::from_mask(&features, &reference, &seq.seed)?;
    let seed_energy = total_energy(&cfg.track.terms()?, &state)?;
    let seed_coverage = match truth {
        Some(t) => Some(coverage(&seq.seed, &t[0]).map(|c| (c.drc, c.urc))?),
        None => None,
    };

    create_out(&cfg.out)?;
    let csv = report_csv(seed_energy, seed_coverage, &report);
    io::write_file(&cfg.out.join("report.csv"), csv.as_bytes())?;
    if cfg.trace {
        io::write_file(&cfg.out.join("energy_trace.csv"), trace_csv(&report).as_bytes())?;
    }
    if cfg.overlay {
        io::save_overlay(&seq.frames[0], &seq.seed, &numbered(&cfg.out, "overlay", 0, "png"))?;
        for f in &report.frames {
            let path = numbered(&cfg.out, "overlay", f.frame_index, "png");
            io::save_overlay(&seq.frames[f.frame_index], &f.final_mask, &path)?;
        }
    }
    if cfg.dump_grids {
        for f in &report.frames {
            let path = numbered(&cfg.out, "grid", f.frame_index, "f32");
            io::write_file(&path, &io::encode_grid(&f.final_grid))?;
        }
    }

    let lost = report.frames.iter().filter(|f| f.lost_track).count();
    print!(
        "design {}: tracked {} frames, {} iterations",
        cfg.track.design,
        report.frames.len(),
        report.total_iterations()
    );
    if lost > 0 {
        print!(", lost track on {lost}");
    }
    match report.mean_coverage() {
        Some((d, u)) => println!(", mean DRC {d:.3} URC {u:.3}"),
        None => println!(),
    }
    Ok(())
}

fn validate() -> Result<Outcome> {
    let results = bench::run_all()?;
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} of {} benchmarks passed", results.len() - failed, results.len());
    Ok(if failed == 0 {
        Outcome::Success
    } else {
        Outcome::BenchmarkFailed
    })
}
