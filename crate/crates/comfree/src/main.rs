use std::process::ExitCode;

use clap::Parser;
use comfree::batch::worker_count;
use comfree::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let _ = rayon::ThreadPoolBuilder::new().num_threads(worker_count()).build_global();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
