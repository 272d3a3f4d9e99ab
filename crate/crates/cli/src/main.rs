mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;

use args::{Cli, Command};

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: &'a str,
    message: String,
}

/// Machine-readable category for a failure.
fn error_kind(err: &anyhow::Error) -> &'static str {
    if let Some(e) = err.downcast_ref::<tschain::Error>() {
        e.kind()
    } else if err.downcast_ref::<std::io::Error>().is_some() {
        "io"
    } else if err.downcast_ref::<serde_json::Error>().is_some() {
        "json"
    } else if let Some(e) = err.downcast_ref::<commands::Failure>() {
        e.kind
    } else {
        "error"
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n as usize);
    }
    let pool = pool.build()?;
    pool.install(|| match cli.command {
        Command::Profiles(a) => commands::profiles(a),
        Command::Discover(a) => commands::discover(a),
        Command::Rank(a) => commands::rank(a),
        Command::Synth(a) => commands::synth(a),
        Command::Eval(a) => commands::eval(a),
        Command::Bench(a) => commands::bench(a),
        Command::Verify(a) => commands::verify(a),
    })
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let line = ErrorLine { error: error_kind(&err), message: format!("{err:#}") };
            eprintln!("{}", serde_json::to_string(&line).expect("error line serializes"));
            ExitCode::from(1)
        }
    }
}
