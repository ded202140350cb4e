use std::process::ExitCode;

use clap::Parser;
use irs_secrecy::cli::{self, Cli};
use irs_secrecy::Error;

fn main() -> ExitCode {
    let args = Cli::parse();
    let result = cli::threads_from_env().and_then(|threads| match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| cli::run(&args)),
        None => cli::run(&args),
    });
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Json(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
