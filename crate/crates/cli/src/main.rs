use std::process::ExitCode;

use clap::Parser;
use contour_track::{init_threads, run, Args};

fn main() -> ExitCode {
    let args = Args::parse();
    let result = init_threads().and_then(|_| args.resolve()).and_then(|cfg| run(&cfg));
    match result {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
