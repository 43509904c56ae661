//! Batch front end for `contour-core`: image sequences and synthetic scenes
//! in, CSV reports, overlays and raw grid dumps out.

pub mod config;
pub mod error;
pub mod io;
pub mod run;

pub use config::{Args, Mode, RunConfig};
pub use error::{CliError, Result};
pub use run::{run, Outcome};

/// Sizes the global worker pool from `CONTOUR_TRACK_THREADS` (0 or unset
/// means one worker per core).
pub fn init_threads() -> Result<()> {
    let n = match std::env::var("CONTOUR_TRACK_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("CONTOUR_TRACK_THREADS must be a count, got '{v}'")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}
