//! Command-line flags, the optional key = value config file, and the merged
//! run configuration.
//!
//! Every config key has a flag of the same name; flags win.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use contour_core::{Design, TrackConfig};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Track,
    Synth,
    Validate,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "track" => Ok(Mode::Track),
            "synth" => Ok(Mode::Synth),
            "validate" => Ok(Mode::Validate),
            other => Err(format!("unknown mode '{other}' (track, synth or validate)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Track => "track",
            Mode::Synth => "synth",
            Mode::Validate => "validate",
        })
    }
}

/// Track a seeded region through an image sequence with level-set curve
/// evolution, render synthetic scenes, or run the built-in benchmarks.
#[derive(Debug, Default, Parser)]
#[command(name = "contour-track", version, about)]
pub struct Args {
    /// Config file of `key = value` lines; keys are the long flag names.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// track, synth or validate.
    #[arg(long)]
    pub mode: Option<Mode>,

    /// Frame directory, glob such as 'frames/frame_*.png', or a .scene file.
    #[arg(long)]
    pub input: Option<String>,

    /// Mask PNG of the region in the first frame (luminance > 127 is inside).
    #[arg(long)]
    pub seed_mask: Option<PathBuf>,

    /// Ground-truth mask directory or glob, one per frame; adds DRC/URC.
    #[arg(long)]
    pub ground_truth: Option<String>,

    /// Energy design: 1, 1b, 2, 2b, 3, 4 or 4b.
    #[arg(long)]
    pub design: Option<String>,

    /// Weight override such as l1=3000 or l=0.05; repeatable.
    #[arg(long = "lambda", value_name = "NAME=VALUE")]
    pub lambdas: Vec<String>,

    #[arg(long)]
    pub max_iter: Option<usize>,

    /// Relative energy change that counts as converged.
    #[arg(long)]
    pub tol: Option<f64>,

    /// Iterations the relative change is measured over.
    #[arg(long)]
    pub window: Option<usize>,

    #[arg(long)]
    pub reinit_every: Option<usize>,

    /// Histogram bins for the divergence terms.
    #[arg(long)]
    pub bins: Option<usize>,

    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Write overlay_NNN.png frames with the tracked boundary in green.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub overlay: Option<bool>,

    /// Write energy_trace.csv (on by default).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub trace: Option<bool>,

    /// Write each frame's final level-set field as grid_NNN.f32.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub dump_grids: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub input: Option<String>,
    pub seed_mask: Option<PathBuf>,
    pub ground_truth: Option<String>,
    pub track: TrackConfig,
    pub out: PathBuf,
    pub overlay: bool,
    pub trace: bool,
    pub dump_grids: bool,
}

impl Args {
    /// Fills flags left unset from `text`, the contents of config file `path`.
    pub fn merge_file(&mut self, text: &str, path: &Path) -> Result<()> {
        let mut file_lambdas = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| CliError::ConfigParse {
                path: path.to_path_buf(),
                line: n + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected key = value".into()))?;
            let (key, value) = (key.trim(), value.trim().to_string());
            fn parsed<T: FromStr>(v: &str) -> std::result::Result<T, String> {
                v.parse().map_err(|_| format!("bad value '{v}'"))
            }
            fn fill<T>(slot: &mut Option<T>, v: std::result::Result<T, String>) -> std::result::Result<(), String> {
                let v = v?;
                slot.get_or_insert(v);
                Ok(())
            }
            let r = match key {
                "mode" => fill(&mut self.mode, value.parse()),
                "input" => fill(&mut self.input, Ok(value)),
                "seed-mask" => fill(&mut self.seed_mask, Ok(PathBuf::from(value))),
                "ground-truth" => fill(&mut self.ground_truth, Ok(value)),
                "design" => fill(&mut self.design, Ok(value)),
                "lambda" => {
                    file_lambdas.extend(value.split(',').map(|s| s.trim().to_string()));
                    Ok(())
                }
                "max-iter" => fill(&mut self.max_iter, parsed(&value)),
                "tol" => fill(&mut self.tol, parsed(&value)),
                "window" => fill(&mut self.window, parsed(&value)),
                "reinit-every" => fill(&mut self.reinit_every, parsed(&value)),
                "bins" => fill(&mut self.bins, parsed(&value)),
                "out" => fill(&mut self.out, Ok(PathBuf::from(value))),
                "overlay" => fill(&mut self.overlay, parsed(&value)),
                "trace" => fill(&mut self.trace, parsed(&value)),
                "dump-grids" => fill(&mut self.dump_grids, parsed(&value)),
                other => Err(format!("unknown key '{other}'")),
            };
            r.map_err(err)?;
        }
        // file weights first so flag weights of the same name override them
        file_lambdas.append(&mut self.lambdas);
        self.lambdas = file_lambdas;
        Ok(())
    }

    /// Reads `--config` if given and resolves everything into a [`RunConfig`].
    pub fn resolve(mut self) -> Result<RunConfig> {
        if let Some(path) = self.config.clone() {
            if !path.exists() {
                return Err(CliError::MissingFile(path));
            }
            let text = fs::read_to_string(&path).map_err(|e| CliError::ConfigParse {
                path: path.clone(),
                line: 0,
                message: e.to_string(),
            })?;
            self.merge_file(&text, &path)?;
        }
        let mode = self
            .mode
            .ok_or_else(|| CliError::Usage("no --mode given (track, synth or validate)".into()))?;
        let design: Design = match &self.design {
            Some(d) => d.parse()?,
            None => Design::D1B,
        };
        let mut track = TrackConfig::new(design);
        for spec in &self.lambdas {
            let (name, value) = spec
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--lambda expects NAME=VALUE, got '{spec}'")))?;
            let names = design.weight_names();
            let k = names.iter().position(|n| *n == name.trim()).ok_or_else(|| {
                CliError::Usage(format!(
                    "design {design} has no weight '{}' (expected one of {})",
                    name.trim(),
                    names.join(", ")
                ))
            })?;
            track.weights[k] = value
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad weight value in '{spec}'")))?;
        }
        if let Some(v) = self.max_iter {
            track.max_iterations = v;
        }
        if let Some(v) = self.tol {
            track.convergence_tol = v;
        }
        if let Some(v) = self.window {
            track.convergence_window = v;
        }
        if let Some(v) = self.reinit_every {
            track.reinit_every = v;
        }
        if let Some(v) = self.bins {
            track.histogram_bins = v;
        }
        track.validate()?;
        Ok(RunConfig {
            mode,
            input: self.input,
            seed_mask: self.seed_mask,
            ground_truth: self.ground_truth,
            track,
            out: self.out.unwrap_or_else(|| PathBuf::from("out")),
            overlay: self.overlay.unwrap_or(false),
            trace: self.trace.unwrap_or(true),
            dump_grids: self.dump_grids.unwrap_or(false),
        })
    }
}
